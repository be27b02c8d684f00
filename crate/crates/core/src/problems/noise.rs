use rand::RngCore;

use crate::error::Result;
use crate::manifold::{Manifold, Tangent};
use crate::solver::{Constants, FirstOrderOracle};

/// Adds a uniformly directed tangent of fixed length `radius` to every gradient.
///
/// The noise has mean zero and squared norm `radius²`, so the wrapped oracle is
/// unbiased with `σ = radius` and `G = √(L_f² + radius²)` whenever the inner
/// gradients are bounded by `L_f`.
#[derive(Debug, Clone)]
pub struct NoisyOracle<O> {
    inner: O,
    radius: f64,
}

impl<O> NoisyOracle<O> {
    pub fn new(inner: O, radius: f64) -> Self {
        Self { inner, radius }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl<M: Manifold, O: FirstOrderOracle<M>> FirstOrderOracle<M> for NoisyOracle<O> {
    fn value(&self, m: &M, x: &M::Point) -> Result<f64> {
        self.inner.value(m, x)
    }

    fn gradient(
        &self,
        m: &M,
        x: &M::Point,
        rng: &mut dyn RngCore,
    ) -> Result<Tangent<M::Point, M::Vector>> {
        let g = self.inner.gradient(m, x, rng)?;
        let xi = m.random_tangent(x, rng);
        let len = m.norm(x, &xi)?;
        if len == 0.0 {
            return Ok(g);
        }
        m.add(&g, &m.scale(&xi, self.radius / len))
    }

    fn is_deterministic(&self) -> bool {
        self.radius == 0.0 && self.inner.is_deterministic()
    }

    fn constants(&self) -> Constants {
        let c = self.inner.constants();
        Constants {
            sigma: Some(self.radius),
            grad_bound: c.lipschitz_f.map(|l| l.hypot(self.radius)),
            ..c
        }
    }

    fn describe(&self) -> String {
        format!("{} noise={}", self.inner.describe(), self.radius)
    }
}
