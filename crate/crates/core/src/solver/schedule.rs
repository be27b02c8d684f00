//! Step sizes, averaging weights and rate bounds of the seven analyzed methods.

use super::{Constants, TheoremId};
use crate::error::{domain, Error, Result};
use crate::trig::zeta;

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(domain(format!("{name} must be positive, got {v}")))
    }
}

fn horizon(t: usize) -> Result<f64> {
    if t == 0 {
        return Err(domain("horizon must be positive"));
    }
    Ok(t as f64)
}

/// Subgradient method, Lipschitz objective: `η = D / (L_f √(ζ t))`.
pub fn schedule_t1(diameter: f64, lipschitz_f: f64, zeta_d: f64, t: usize) -> Result<f64> {
    let d = positive("D", diameter)?;
    let l = positive("L_f", lipschitz_f)?;
    let z = positive("ζ(κ, D)", zeta_d)?;
    Ok(d / (l * (z * horizon(t)?).sqrt()))
}

/// Stochastic subgradient method: `η = D / (G √(ζ t))`.
pub fn schedule_t2(diameter: f64, grad_bound: f64, zeta_d: f64, t: usize) -> Result<f64> {
    let d = positive("D", diameter)?;
    let g = positive("G", grad_bound)?;
    let z = positive("ζ(κ, D)", zeta_d)?;
    Ok(d / (g * (z * horizon(t)?).sqrt()))
}

/// Strongly convex (stochastic) subgradient method: `η_s = 2 / (μ (s + 1))`.
pub fn schedule_t3t4(s: usize, mu: f64) -> Result<f64> {
    let mu = positive("μ", mu)?;
    if s == 0 {
        return Err(domain("iterations are indexed from 1"));
    }
    Ok(2.0 / (mu * (s as f64 + 1.0)))
}

/// Gradient descent on a smooth objective: `η = 1 / L_g`.
pub fn schedule_t5t7(lipschitz_grad: f64) -> Result<f64> {
    Ok(1.0 / positive("L_g", lipschitz_grad)?)
}

/// Stochastic gradient on a smooth objective: `η = 1 / (L_g + 1/α)` with
/// `α = (D/σ) √(1/(ζ t))`. A zero `σ` belongs to the deterministic method.
pub fn schedule_t6(
    lipschitz_grad: f64,
    diameter: f64,
    sigma: f64,
    zeta_d: f64,
    t: usize,
) -> Result<f64> {
    let l = positive("L_g", lipschitz_grad)?;
    let d = positive("D", diameter)?;
    let z = positive("ζ(κ, D)", zeta_d)?;
    if !(sigma > 0.0) {
        return Err(Error::Config(
            "σ must be positive for the stochastic smooth method; use gradient descent for σ = 0"
                .into(),
        ));
    }
    let alpha = (d / sigma) * (1.0 / (z * horizon(t)?)).sqrt();
    Ok(1.0 / (l + 1.0 / alpha))
}

/// Weight that moves the running average `x̄_s` towards `x_{s+1}` in the
/// stochastic smooth method.
///
/// `x̄_2 = x_2`, then `1/s` for `2 ≤ s ≤ t-2`, and `ζ / (ζ + t - 2)` for the
/// final step `s = t - 1`. For `t = 2` this yields `x̄_2 = x_2`; for `t = 3` only
/// the final-weight step follows `x̄_2 = x_2`.
pub fn averaging_t6_weight(s: usize, t: usize, zeta_d: f64) -> Result<f64> {
    if t < 2 {
        return Err(Error::Config(format!(
            "tail averaging needs a horizon of at least 2, got {t}"
        )));
    }
    if s == 0 || s >= t {
        return Err(domain(format!("averaging index {s} outside 1..{t}")));
    }
    let z = positive("ζ(κ, D)", zeta_d)?;
    if s == t - 1 {
        Ok(z / (z + t as f64 - 2.0))
    } else if s == 1 {
        Ok(1.0)
    } else {
        Ok(1.0 / s as f64)
    }
}

fn need(v: Option<f64>, name: &'static str) -> Result<f64> {
    match v {
        Some(x) => positive(name, x),
        None => Err(Error::MissingConstant(name)),
    }
}

/// Upper bound on the (expected) suboptimality of the method's designated
/// output after `t` iterations.
pub fn theoretical_bound(
    theorem: TheoremId,
    constants: &Constants,
    kappa: f64,
    t: usize,
) -> Result<f64> {
    let tf = horizon(t)?;
    let d = need(constants.diameter, "D")?;
    let z = zeta(kappa, d)?;
    let smooth_horizon = || -> Result<()> {
        if t <= 1 {
            Err(domain(format!(
                "{theorem} bound holds for t > 1, got t = {t}"
            )))
        } else {
            Ok(())
        }
    };
    match theorem {
        TheoremId::T1 => Ok(d * need(constants.lipschitz_f, "L_f")? * (z / tf).sqrt()),
        TheoremId::T2 => Ok(d * need(constants.grad_bound, "G")? * (z / tf).sqrt()),
        TheoremId::T3 => {
            let l = need(constants.lipschitz_f, "L_f")?;
            Ok(2.0 * z * l * l / (need(constants.mu, "mu")? * (tf + 1.0)))
        }
        TheoremId::T4 => {
            let g = need(constants.grad_bound, "G")?;
            Ok(2.0 * z * g * g / (need(constants.mu, "mu")? * (tf + 1.0)))
        }
        TheoremId::T5 => {
            smooth_horizon()?;
            let l = need(constants.lipschitz_grad, "L_g")?;
            Ok(z * l * d * d / (2.0 * (z + tf - 2.0)))
        }
        TheoremId::T6 => {
            smooth_horizon()?;
            let l = need(constants.lipschitz_grad, "L_g")?;
            let sigma = need(constants.sigma, "sigma")?;
            Ok((z * l * d * d + 2.0 * d * sigma * (z * tf).sqrt()) / (2.0 * (z + tf - 2.0)))
        }
        TheoremId::T7 => {
            smooth_horizon()?;
            let l = need(constants.lipschitz_grad, "L_g")?;
            let eps = (1.0 / z).min(need(constants.mu, "mu")? / l);
            Ok((1.0 - eps).powi((t - 2) as i32) * l * d * d / 2.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // ζ(-1, 2) = 2 / tanh 2, 40-digit reference.
    const ZETA_M1_2: f64 = 2.074_629_441_455_096_2;

    #[test]
    fn t1_cases() {
        assert_eq!(schedule_t1(1.0, 1.0, 1.0, 1).unwrap(), 1.0);
        let flat = schedule_t1(3.0, 2.0, zeta(0.0, 3.0).unwrap(), 16).unwrap();
        assert_eq!(flat, 3.0 / (2.0 * 4.0));
        let eta = schedule_t1(2.0, 1.0, zeta(-1.0, 2.0).unwrap(), 100).unwrap();
        let oracle = 2.0 / (10.0 * ZETA_M1_2.sqrt());
        assert!((eta - oracle).abs() < 1e-15);
        assert!(schedule_t1(0.0, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn t2_cases() {
        assert_eq!(schedule_t2(1.0, 1.0, 1.0, 1).unwrap(), 1.0);
        assert_eq!(schedule_t2(2.0, 4.0, 1.0, 4).unwrap(), 0.25);
        let eta = schedule_t2(2.0, 1.0, zeta(-1.0, 2.0).unwrap(), 100).unwrap();
        assert!((eta - 2.0 / (10.0 * ZETA_M1_2.sqrt())).abs() < 1e-15);
        assert!(schedule_t2(1.0, -1.0, 1.0, 1).is_err());
    }

    #[test]
    fn t3_cases() {
        assert_eq!(schedule_t3t4(1, 1.0).unwrap(), 1.0);
        assert_eq!(schedule_t3t4(3, 2.0).unwrap(), 0.25);
        let mut prev = f64::INFINITY;
        for s in 1..2000 {
            let e = schedule_t3t4(s, 1.5).unwrap();
            assert!(e < prev);
            prev = e;
        }
        assert!(prev < 1e-3);
        assert!(schedule_t3t4(0, 1.0).is_err());
    }

    #[test]
    fn t5_cases() {
        assert_eq!(schedule_t5t7(1.0).unwrap(), 1.0);
        assert_eq!(schedule_t5t7(500.0).unwrap(), 1.0 / 500.0);
    }

    #[test]
    fn t6_cases() {
        assert_eq!(schedule_t6(1.0, 1.0, 1.0, 1.0, 1).unwrap(), 0.5);
        let near = schedule_t6(2.0, 1.0, 1e-12, 1.0, 100).unwrap();
        assert!((near - 0.5).abs() < 1e-9);
        let (l, d, s, z, t) = (3.0, 2.0, 0.7, 1.8, 50usize);
        let alpha = d / s / (z * t as f64).sqrt();
        let oracle = 1.0 / (l + 1.0 / alpha);
        assert!((schedule_t6(l, d, s, z, t).unwrap() - oracle).abs() < 1e-15);
        assert!(schedule_t6(l, d, s, z, t).unwrap() < 1.0 / l);
        assert!(matches!(
            schedule_t6(1.0, 1.0, 0.0, 1.0, 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn t6_weights() {
        assert_eq!(averaging_t6_weight(2, 10, 1.0).unwrap(), 0.5);
        assert_eq!(averaging_t6_weight(9, 10, 2.0).unwrap(), 0.2);
        assert_eq!(averaging_t6_weight(1, 10, 2.0).unwrap(), 1.0);
        assert_eq!(averaging_t6_weight(1, 2, 3.0).unwrap(), 1.0);
        assert!(matches!(
            averaging_t6_weight(1, 1, 1.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn bound_cases() {
        let c = Constants {
            diameter: Some(1.0),
            lipschitz_f: Some(1.0),
            ..Constants::default()
        };
        assert_eq!(theoretical_bound(TheoremId::T1, &c, 0.0, 4).unwrap(), 0.5);

        let c = Constants {
            diameter: Some(2.0),
            lipschitz_grad: Some(3.0),
            ..Constants::default()
        };
        let got = theoretical_bound(TheoremId::T5, &c, -1.0, 10).unwrap();
        // 40-digit evaluation of ζ·3·4 / (2(ζ + 8)).
        assert!((got - 1.235_556_773_682_459_5).abs() < 1e-14);
        assert!(theoretical_bound(TheoremId::T5, &c, -1.0, 1).is_err());

        let c = Constants {
            diameter: Some(1.0),
            lipschitz_grad: Some(4.0),
            mu: Some(1.0),
            ..Constants::default()
        };
        // ε = min(1, μ/L_g) = 1/4 in flat space.
        let got = theoretical_bound(TheoremId::T7, &c, 0.0, 4).unwrap();
        assert_eq!(got, 0.75f64.powi(2) * 4.0 / 2.0);

        assert!(matches!(
            theoretical_bound(TheoremId::T3, &Constants::default(), -1.0, 5),
            Err(Error::MissingConstant("D"))
        ));
    }
}
