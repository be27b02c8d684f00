use std::fmt::Write as _;

use rayon::prelude::*;

use super::config::{algo_name, ExperimentConfig, ProblemKind, SGD_ST_STEP_NOTE};
use super::fit::{fit_rate, RateFit, RateModel};
use super::setup::Instance;
use super::{resolution_floor, with_jobs};
use crate::error::{Error, Result};
use crate::solver::TheoremId;

/// Passes through the data for the desk-scale comparison.
pub const FIGURE_PASSES: usize = 100;

/// Slope ranges the comparison is judged against.
pub const SGD_ST_SLOPE: (f64, f64) = (-1.3, -0.7);
pub const SGD_SM_SLOPE: (f64, f64) = (-0.75, -0.3);
pub const GD_MIN_R2: f64 = 0.98;

/// Horizons, in passes, at which the horizon-dependent method is rerun.
pub const SWEEP_POINTS: usize = 11;

#[derive(Debug, Clone)]
pub struct FigureCurve {
    pub condition: f64,
    pub theorem: TheoremId,
    /// `(passes, gap)`; a seed mean for stochastic methods.
    pub points: Vec<(f64, f64)>,
    pub fit: RateFit,
    /// Target slope range, or `None` for the linear-rate check.
    pub target: Option<(f64, f64)>,
    pub passed: bool,
    /// How the curve was produced.
    pub protocol: String,
}

#[derive(Debug, Clone)]
pub struct FigureReport {
    pub curves: Vec<FigureCurve>,
    /// Last-iterate fits of the horizon sweep, reported for comparison only.
    pub diagnostics: Vec<FigureCurve>,
    pub notes: Vec<String>,
}

impl FigureReport {
    pub fn passed(&self) -> bool {
        self.curves.iter().all(|c| c.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for n in &self.notes {
            let _ = writeln!(s, "# note: {n}");
        }
        s.push_str("Q,algo,theorem,output,model,slope,intercept,r2,window_lo,window_hi,target_lo,target_hi,passed\n");
        let rows = self
            .curves
            .iter()
            .map(|c| (c, "designated"))
            .chain(self.diagnostics.iter().map(|c| (c, "last-iterate")));
        for (c, output) in rows {
            let (lo, hi) = c
                .target
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{output},{},{},{},{},{},{},{lo},{hi},{}",
                c.condition,
                algo_name(c.theorem),
                c.theorem,
                c.fit.model,
                c.fit.slope,
                c.fit.intercept,
                c.fit.r2,
                c.fit.window.0,
                c.fit.window.1,
                c.passed
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.curves {
            let verdict = if c.passed { "pass" } else { "FAIL" };
            let target = match c.target {
                Some((lo, hi)) => format!("slope in [{lo}, {hi}]"),
                None => format!("slope < 0, R2 >= {GD_MIN_R2}"),
            };
            let _ = writeln!(
                s,
                "{verdict:<5} Q={:<6e} {:<7} {} slope={:.3} R2={:.4} ({target}; {})",
                c.condition,
                algo_name(c.theorem),
                c.fit.model,
                c.fit.slope,
                c.fit.r2,
                c.protocol
            );
        }
        for c in &self.diagnostics {
            let _ = writeln!(
                s,
                "info  Q={:<6e} {:<7} last iterate slope={:.3} R2={:.4} (not the designated output)",
                c.condition,
                algo_name(c.theorem),
                c.fit.slope,
                c.fit.r2
            );
        }
        s
    }

    /// Gnuplot-readable `passes gap` columns, one block per curve.
    pub fn to_gnuplot(&self) -> String {
        let mut s = String::new();
        for c in &self.curves {
            let _ = writeln!(s, "# Q={} {}", c.condition, algo_name(c.theorem));
            for (p, g) in &c.points {
                let _ = writeln!(s, "{p} {g}");
            }
            s.push_str("\n\n");
        }
        s
    }
}

fn mean_curves(curves: &[Vec<(f64, f64)>]) -> Vec<(f64, f64)> {
    (0..curves[0].len())
        .map(|i| {
            let g = curves.iter().map(|c| c[i].1).sum::<f64>() / curves.len() as f64;
            (curves[0][i].0, g)
        })
        .collect()
}

/// Compares GD, SGD-st and SGD-sm on Karcher data at each condition number.
///
/// GD is one run of `FIGURE_PASSES` iterations fitted on a semilog scale.
/// SGD-st is fitted on the seed-mean gap of runs of `FIGURE_PASSES` passes.
/// The SGD-sm step depends on the horizon, so its gap at `t` passes is the
/// averaged output of a run with horizon `t`; it is rerun at log-spaced
/// horizons over the last decade and the seed means are fitted.
pub fn reproduce_figure(
    base: &ExperimentConfig,
    conditions: &[f64],
    seeds: usize,
) -> Result<FigureReport> {
    if base.problem != ProblemKind::Karcher {
        return Err(Error::Config("the comparison runs on karcher data".into()));
    }
    if seeds == 0 {
        return Err(Error::Config("need at least one seed".into()));
    }
    let mut curves = Vec::new();
    let mut diagnostics = Vec::new();
    let mut notes = Vec::new();
    for &q in conditions {
        let cfg = ExperimentConfig {
            condition: q,
            ..base.clone()
        };
        let inst = Instance::build(&cfg)?;
        for n in &inst.notes {
            if !notes.contains(n) {
                notes.push(n.clone());
            }
        }
        let floor = resolution_floor(inst.f_star);
        let per_pass = inst.samples_per_pass(TheoremId::T4);
        let passes = FIGURE_PASSES as f64;

        let gd = inst.run(TheoremId::T7, FIGURE_PASSES, cfg.seed, None, false)?;
        let points: Vec<(f64, f64)> = gd
            .trace
            .gaps()
            .unwrap()
            .iter()
            .map(|&(s, g)| (s as f64, g))
            .collect();
        let fit = fit_rate(&points, RateModel::SemiLog, (1.0, passes), floor)?;
        curves.push(FigureCurve {
            condition: q,
            theorem: TheoremId::T7,
            passed: fit.slope < 0.0 && fit.r2 >= GD_MIN_R2,
            points,
            fit,
            target: None,
            protocol: "single run".into(),
        });

        let t = FIGURE_PASSES * per_pass;
        let eval = move |s: usize| s.is_multiple_of(per_pass);
        let runs = with_jobs(cfg.jobs, || {
            (0..seeds)
                .into_par_iter()
                .map(|r| {
                    let rep =
                        inst.run(TheoremId::T4, t, cfg.seed + r as u64, Some(&eval), false)?;
                    Ok(rep
                        .trace
                        .gaps()
                        .unwrap()
                        .into_iter()
                        .map(|(s, g)| (s as f64 / per_pass as f64, g))
                        .collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()
        })??;
        let points = mean_curves(&runs);
        let fit = fit_rate(&points, RateModel::LogLog, (passes / 10.0, passes), floor)?;
        curves.push(FigureCurve {
            condition: q,
            theorem: TheoremId::T4,
            passed: (SGD_ST_SLOPE.0..=SGD_ST_SLOPE.1).contains(&fit.slope),
            points,
            fit,
            target: Some(SGD_ST_SLOPE),
            protocol: format!("mean gap over {seeds} seeds"),
        });

        let horizons: Vec<usize> = (0..SWEEP_POINTS)
            .map(|k| {
                let p = passes / 10.0 * 10f64.powf(k as f64 / (SWEEP_POINTS - 1) as f64);
                (p * per_pass as f64).round() as usize
            })
            .collect();
        let jobs: Vec<(usize, usize)> = horizons
            .iter()
            .flat_map(|&h| (0..seeds).map(move |r| (h, r)))
            .collect();
        let finals = with_jobs(cfg.jobs, || {
            jobs.par_iter()
                .map(|&(h, r)| {
                    let eval = move |s: usize| s == h;
                    let rep =
                        inst.run(TheoremId::T6, h, cfg.seed + r as u64, Some(&eval), false)?;
                    let last = rep.trace.last();
                    Ok((
                        last.f_avg.expect("final iteration is evaluated") - inst.f_star,
                        last.f_x.expect("final iteration is evaluated") - inst.f_star,
                    ))
                })
                .collect::<Result<Vec<_>>>()
        })??;
        let mut avg_points = Vec::with_capacity(horizons.len());
        let mut last_points = Vec::with_capacity(horizons.len());
        for (i, &h) in horizons.iter().enumerate() {
            let chunk = &finals[i * seeds..(i + 1) * seeds];
            let x = h as f64 / per_pass as f64;
            avg_points.push((x, chunk.iter().map(|c| c.0).sum::<f64>() / seeds as f64));
            last_points.push((x, chunk.iter().map(|c| c.1).sum::<f64>() / seeds as f64));
        }
        let window = (passes / 10.0, passes);
        let fit = fit_rate(&avg_points, RateModel::LogLog, window, floor)?;
        curves.push(FigureCurve {
            condition: q,
            theorem: TheoremId::T6,
            passed: (SGD_SM_SLOPE.0..=SGD_SM_SLOPE.1).contains(&fit.slope),
            points: avg_points,
            fit,
            target: Some(SGD_SM_SLOPE),
            protocol: format!("one run per horizon, mean over {seeds} seeds"),
        });
        let fit = fit_rate(&last_points, RateModel::LogLog, window, floor)?;
        diagnostics.push(FigureCurve {
            condition: q,
            theorem: TheoremId::T6,
            passed: (SGD_SM_SLOPE.0..=SGD_SM_SLOPE.1).contains(&fit.slope),
            points: last_points,
            fit,
            target: Some(SGD_SM_SLOPE),
            protocol: "last iterate".into(),
        });
    }
    notes.push(SGD_ST_STEP_NOTE.into());
    Ok(FigureReport {
        curves,
        diagnostics,
        notes,
    })
}
