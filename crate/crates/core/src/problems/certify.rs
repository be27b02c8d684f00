//! Sampled checks of the constants and gradients the problems claim.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FrechetProblem, KarcherProblem};
use crate::error::Result;
use crate::manifold::{Manifold, Tangent};
use crate::solver::FirstOrderOracle;

/// Point at geodesic distance uniform in `[0, radius]` from `anchor`, in a
/// uniformly random direction.
pub fn sample_near<M: Manifold>(
    m: &M,
    anchor: &M::Point,
    radius: f64,
    rng: &mut dyn RngCore,
) -> Result<M::Point> {
    let v = m.random_tangent(anchor, rng);
    let len = m.norm(anchor, &v)?;
    if len == 0.0 {
        return Ok(anchor.clone());
    }
    let r = radius * rng.random::<f64>();
    m.exp_map(anchor, &m.scale(&v, r / len))
}

/// Outcome of comparing `f(y)` with `f(x) + ⟨g, log_x y⟩ + (c/2) d²(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticModelReport {
    pub samples: usize,
    /// Minimum over samples of `(f(y) − model) / (1 + |f(x)| + |f(y)|)` for the
    /// lower model and of `(model − f(y)) / …` for the upper one.
    pub min_normalized_slack: f64,
    /// Samples whose slack fell below `−1e−8` after normalization.
    pub violations: usize,
}

pub const MODEL_SLACK: f64 = 1e-8;

fn quadratic_model<M: Manifold, O: FirstOrderOracle<M> + ?Sized>(
    m: &M,
    oracle: &O,
    pairs: &[(M::Point, M::Point)],
    curvature: f64,
    lower: bool,
) -> Result<QuadraticModelReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut report = QuadraticModelReport {
        samples: pairs.len(),
        min_normalized_slack: f64::INFINITY,
        violations: 0,
    };
    for (x, y) in pairs {
        let fx = oracle.value(m, x)?;
        let fy = oracle.value(m, y)?;
        let g = oracle.gradient(m, x, &mut rng)?;
        let log = m.log_map(x, y)?;
        let d2 = m.inner(x, &log, &log)?;
        let model = fx + m.inner(x, &g, &log)? + 0.5 * curvature * d2;
        let slack = if lower { fy - model } else { model - fy };
        let normalized = slack / (1.0 + fx.abs() + fy.abs());
        report.min_normalized_slack = report.min_normalized_slack.min(normalized);
        if normalized < -MODEL_SLACK {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// `f(y) ≥ f(x) + ⟨grad f(x), log_x y⟩ + (μ/2) d²(x, y)` over `pairs`.
pub fn strong_convexity_certificate<M: Manifold, O: FirstOrderOracle<M> + ?Sized>(
    m: &M,
    oracle: &O,
    pairs: &[(M::Point, M::Point)],
    mu: f64,
) -> Result<QuadraticModelReport> {
    quadratic_model(m, oracle, pairs, mu, true)
}

/// `f(y) ≤ f(x) + ⟨grad f(x), log_x y⟩ + (L_g/2) d²(x, y)` over `pairs`.
pub fn smoothness_certificate<M: Manifold, O: FirstOrderOracle<M> + ?Sized>(
    m: &M,
    oracle: &O,
    pairs: &[(M::Point, M::Point)],
    lipschitz_grad: f64,
) -> Result<QuadraticModelReport> {
    quadratic_model(m, oracle, pairs, lipschitz_grad, false)
}

/// Compares `⟨grad f(x), v⟩` with the derivative of `t ↦ f(Exp_x(t v))` at 0,
/// estimated by Richardson-extrapolated central differences with steps `h` and
/// `h/2`. Returns `|fd − ⟨g, v⟩| / (‖g‖ ‖v‖)`.
pub fn gradient_fd_error<M: Manifold, O: FirstOrderOracle<M> + ?Sized>(
    m: &M,
    oracle: &O,
    x: &M::Point,
    v: &Tangent<M::Point, M::Vector>,
    h: f64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let g = oracle.gradient(m, x, &mut rng)?;
    let at = |t: f64| -> Result<f64> { oracle.value(m, &m.exp_map(x, &m.scale(v, t))?) };
    let central = |h: f64| -> Result<f64> { Ok((at(h)? - at(-h)?) / (2.0 * h)) };
    let d1 = central(h)?;
    let d2 = central(h / 2.0)?;
    let fd = (4.0 * d2 - d1) / 3.0;
    let exact = m.inner(x, &g, v)?;
    let scale = m.norm(x, &g)? * m.norm(x, v)?;
    if scale == 0.0 {
        return Ok(fd.abs());
    }
    Ok((fd - exact).abs() / scale)
}

/// Largest entry of `mean_i(sample gradient i) − full gradient`, relative to the
/// largest entry of the full gradient (or absolute when it vanishes).
pub fn karcher_unbiasedness_gap(p: &KarcherProblem, x: &crate::manifold::SpdPoint) -> Result<f64> {
    let full = p.full_gradient(x)?;
    let mut mean = nalgebra::DMatrix::zeros(p.n(), p.n());
    for i in 0..p.len() {
        mean += p.sample_gradient(x, i)?.components;
    }
    mean /= p.len() as f64;
    let scale = full.components.amax().max(1.0);
    Ok((mean - &full.components).amax() / scale)
}

pub fn frechet_unbiasedness_gap(
    p: &FrechetProblem,
    x: &crate::manifold::HyperbolicPoint,
) -> Result<f64> {
    let full = p.gradient(x)?;
    let mut mean = nalgebra::DVector::zeros(full.components.len());
    for i in 0..p.anchors().len() {
        mean += p.sample_gradient(x, i)?.components;
    }
    mean /= p.anchors().len() as f64;
    let scale = full.components.amax().max(1.0);
    Ok((mean - &full.components).amax() / scale)
}
