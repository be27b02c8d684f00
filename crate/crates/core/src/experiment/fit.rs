use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateModel {
    /// `log gap = intercept + slope · log t`.
    LogLog,
    /// `log gap = intercept + slope · t`.
    SemiLog,
}

impl fmt::Display for RateModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateModel::LogLog => "loglog",
            RateModel::SemiLog => "semilog",
        })
    }
}

impl FromStr for RateModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loglog" | "loglog-slope" => Ok(RateModel::LogLog),
            "semilog" | "semilog-slope" => Ok(RateModel::SemiLog),
            _ => Err(Error::Config(format!("unknown rate model `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub model: RateModel,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Range of `t` actually fitted, after any shrinking.
    pub window: (f64, f64),
    pub points: usize,
    /// Set when the window was shrunk to exclude unresolvable gaps.
    pub warning: Option<String>,
}

/// Least-squares fit of `log gap` against `log t` or `t` over `t ∈ [lo, hi]`.
///
/// Gaps at or below `floor` cannot be resolved against the reference optimum. If
/// any fall inside the window, its upper end shrinks to just before the first
/// one and a warning is attached.
pub fn fit_rate(
    points: &[(f64, f64)],
    model: RateModel,
    window: (f64, f64),
    floor: f64,
) -> Result<RateFit> {
    let (lo, mut hi) = window;
    let mut warning = None;
    if let Some(&(t, g)) = points
        .iter()
        .find(|&&(t, g)| t >= lo && t <= hi && !(g > floor))
    {
        warning = Some(format!(
            "gap {g:e} at t = {t} is at or below the resolution floor {floor:e}; window shrunk"
        ));
        hi = points
            .iter()
            .filter(|&&(s, _)| s >= lo && s < t)
            .map(|&(s, _)| s)
            .fold(f64::NEG_INFINITY, f64::max);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|&&(t, _)| t >= lo && t <= hi)
        .map(|&(t, g)| {
            let x = match model {
                RateModel::LogLog => t.ln(),
                RateModel::SemiLog => t,
            };
            (x, g.ln())
        })
        .unzip();
    if xs.len() < 2 {
        return Err(Error::Domain(format!(
            "rate fit needs at least two resolvable points in [{lo}, {hi}], found {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("rate fit needs distinct t values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    let t_lo = points
        .iter()
        .map(|p| p.0)
        .filter(|&t| t >= lo)
        .fold(f64::INFINITY, f64::min);
    Ok(RateFit {
        model,
        slope,
        intercept,
        r2,
        window: (t_lo, hi.min(window.1)),
        points: xs.len(),
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_rates() {
        let inv: Vec<_> = (1..=1000).map(|t| (t as f64, 1.0 / t as f64)).collect();
        let f = fit_rate(&inv, RateModel::LogLog, (1.0, 1000.0), 0.0).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-6);
        assert!((f.r2 - 1.0).abs() < 1e-12);

        let geo: Vec<_> = (1..=200).map(|t| (t as f64, 0.9f64.powi(t))).collect();
        let f = fit_rate(&geo, RateModel::SemiLog, (1.0, 200.0), 0.0).unwrap();
        assert!((f.slope - 0.9f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn floor_shrinks_window() {
        let mut pts: Vec<_> = (1..=50).map(|t| (t as f64, 0.5f64.powi(t))).collect();
        pts[30].1 = 0.0;
        let f = fit_rate(&pts, RateModel::SemiLog, (1.0, 50.0), 0.0).unwrap();
        assert_eq!(f.window, (1.0, 30.0));
        assert_eq!(f.points, 30);
        assert!(f.warning.is_some());
        assert!(fit_rate(&pts[30..], RateModel::SemiLog, (31.0, 50.0), 0.0).is_err());
    }
}
