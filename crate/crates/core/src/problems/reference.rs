use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::manifold::Manifold;
use crate::solver::FirstOrderOracle;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 200_000;

/// High-accuracy minimizer used as `x*` when measuring gaps.
#[derive(Debug, Clone)]
pub struct Reference<P> {
    pub point: P,
    pub value: f64,
    /// Iterations used by the start that produced `point`.
    pub iterations: usize,
    /// Largest pairwise distance between the minimizers found from different starts.
    pub start_spread: f64,
    /// Largest pairwise difference between their objective values.
    pub value_spread: f64,
}

/// Gradient descent with `η = 1/L_g` from each start until
/// `‖grad f‖ ≤ tol · (1 + |f|)`; returns the lowest value found.
pub fn reference_solution<M: Manifold, O: FirstOrderOracle<M> + ?Sized>(
    m: &M,
    oracle: &O,
    starts: &[M::Point],
    tol: f64,
    max_iter: usize,
) -> Result<Reference<M::Point>> {
    if !oracle.is_deterministic() {
        return Err(Error::Config(
            "reference solves need a deterministic oracle".into(),
        ));
    }
    if starts.is_empty() {
        return Err(Error::Config(
            "reference solve needs at least one start".into(),
        ));
    }
    let lg = oracle
        .constants()
        .lipschitz_grad
        .ok_or(Error::MissingConstant("L_g"))?;
    let eta = 1.0 / lg;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut found = Vec::with_capacity(starts.len());
    for x0 in starts {
        let mut x = x0.clone();
        let mut done = None;
        let mut last = (f64::NAN, f64::NAN);
        for it in 0..=max_iter {
            let f = oracle.value(m, &x)?;
            let g = oracle.gradient(m, &x, &mut rng)?;
            let gn = m.norm(&x, &g)?;
            if !(f.is_finite() && gn.is_finite()) {
                return Err(Error::Numerical {
                    iteration: it,
                    what: format!("reference solve produced f = {f}, |grad| = {gn}"),
                });
            }
            last = (f, gn);
            if gn <= tol * (1.0 + f.abs()) {
                done = Some((f, it));
                break;
            }
            if it < max_iter {
                x = m.exp_map(&x, &m.scale(&g, -eta))?;
            }
        }
        let Some((f, it)) = done else {
            return Err(Error::NonConvergence {
                iterations: max_iter,
                diagnostics: format!("f = {}, |grad| = {}, tol = {tol}", last.0, last.1),
            });
        };
        found.push((x, f, it));
    }
    let mut start_spread = 0.0f64;
    let mut value_spread = 0.0f64;
    for i in 0..found.len() {
        for j in (i + 1)..found.len() {
            start_spread = start_spread.max(m.distance(&found[i].0, &found[j].0)?);
            value_spread = value_spread.max((found[i].1 - found[j].1).abs());
        }
    }
    let best = found
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one start");
    Ok(Reference {
        point: best.0,
        value: best.1,
        iterations: best.2,
        start_spread,
        value_spread,
    })
}
