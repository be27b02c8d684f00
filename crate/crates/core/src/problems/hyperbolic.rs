//! Objectives with certified constants for checking rate bounds.

use nalgebra::DVector;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::manifold::{Hyperbolic, HyperbolicPoint, Manifold, Tangent};
use crate::solver::{Constants, FirstOrderOracle};
use crate::trig::zeta;

type HTangent = Tangent<HyperbolicPoint, DVector<f64>>;

/// `f(x) = (1/N) Σ d²(x, p_i)` on a hyperbolic space.
///
/// With all anchors within `ρ` of a center and `x` within `r` of it, every
/// `d(x, p_i) ≤ r + ρ`, so `f` is 2-strongly convex, has gradient norm at most
/// `2(r + ρ)` and is `2ζ(κ, r + ρ)`-smooth there.
#[derive(Debug, Clone)]
pub struct FrechetProblem {
    manifold: Hyperbolic,
    anchors: Vec<HyperbolicPoint>,
    center: HyperbolicPoint,
    anchor_radius: f64,
}

impl FrechetProblem {
    /// Uses the origin as the center of the anchor ball.
    pub fn new(manifold: Hyperbolic, anchors: Vec<HyperbolicPoint>) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::Config(
                "Fréchet problem needs at least one anchor".into(),
            ));
        }
        let center = manifold.origin();
        let mut anchor_radius = 0.0f64;
        for p in &anchors {
            manifold.check_point(p)?;
            anchor_radius = anchor_radius.max(manifold.distance(&center, p)?);
        }
        Ok(Self {
            manifold,
            anchors,
            center,
            anchor_radius,
        })
    }

    /// `count` anchors drawn at distance at most `radius` from the origin, in
    /// uniformly random directions.
    pub fn random(manifold: Hyperbolic, count: usize, radius: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let o = manifold.origin();
        let anchors = (0..count)
            .map(|_| {
                let v = manifold.random_tangent(&o, &mut rng);
                let len = manifold.norm(&o, &v)?;
                let r = radius * rng.random::<f64>();
                manifold.exp_map(&o, &manifold.scale(&v, r / len))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(manifold, anchors)
    }

    pub fn manifold(&self) -> &Hyperbolic {
        &self.manifold
    }

    pub fn anchors(&self) -> &[HyperbolicPoint] {
        &self.anchors
    }

    pub fn center(&self) -> &HyperbolicPoint {
        &self.center
    }

    pub fn anchor_radius(&self) -> f64 {
        self.anchor_radius
    }

    pub fn loss(&self, x: &HyperbolicPoint) -> Result<f64> {
        let mut acc = 0.0;
        for p in &self.anchors {
            acc += self.manifold.distance(x, p)?.powi(2);
        }
        Ok(acc / self.anchors.len() as f64)
    }

    /// `−(2/N) Σ Exp⁻¹_x(p_i)`.
    pub fn gradient(&self, x: &HyperbolicPoint) -> Result<HTangent> {
        let mut acc = self.manifold.zero_tangent(x);
        for p in &self.anchors {
            acc = self.manifold.add(&acc, &self.manifold.log_map(x, p)?)?;
        }
        Ok(self.manifold.scale(&acc, -2.0 / self.anchors.len() as f64))
    }

    /// `−2 Exp⁻¹_x(p_i)`.
    pub fn sample_gradient(&self, x: &HyperbolicPoint, i: usize) -> Result<HTangent> {
        let p = self
            .anchors
            .get(i)
            .ok_or_else(|| Error::Contract(format!("anchor index {i} out of range")))?;
        Ok(self.manifold.scale(&self.manifold.log_map(x, p)?, -2.0))
    }

    /// Constants valid on the ball of radius `region` about the center.
    pub fn constants_on_ball(&self, region: f64) -> Result<Constants> {
        let reach = region + self.anchor_radius;
        Ok(Constants {
            mu: Some(2.0),
            lipschitz_grad: Some(2.0 * zeta(self.manifold.kappa(), reach)?),
            lipschitz_f: Some(2.0 * reach),
            diameter: Some(2.0 * region),
            ..Constants::default()
        })
    }

    pub fn oracle(&self, constants: Constants) -> FrechetOracle<'_> {
        FrechetOracle {
            problem: self,
            constants,
            stochastic: false,
        }
    }

    /// Single-anchor gradients at a uniformly drawn index.
    pub fn sampling_oracle(&self, constants: Constants) -> FrechetOracle<'_> {
        FrechetOracle {
            problem: self,
            constants,
            stochastic: true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FrechetOracle<'a> {
    problem: &'a FrechetProblem,
    constants: Constants,
    stochastic: bool,
}

impl FirstOrderOracle<Hyperbolic> for FrechetOracle<'_> {
    fn value(&self, _: &Hyperbolic, x: &HyperbolicPoint) -> Result<f64> {
        self.problem.loss(x)
    }

    fn gradient(
        &self,
        _: &Hyperbolic,
        x: &HyperbolicPoint,
        rng: &mut dyn RngCore,
    ) -> Result<HTangent> {
        if self.stochastic {
            let i = rng.random_range(0..self.problem.anchors.len());
            self.problem.sample_gradient(x, i)
        } else {
            self.problem.gradient(x)
        }
    }

    fn is_deterministic(&self) -> bool {
        !self.stochastic
    }

    fn constants(&self) -> Constants {
        self.constants
    }

    fn describe(&self) -> String {
        format!(
            "frechet n={} N={} kappa={}",
            self.problem.manifold.dim(),
            self.problem.anchors.len(),
            self.problem.manifold.kappa()
        )
    }
}

/// `f(x) = d(x, p)`: geodesically convex and 1-Lipschitz, nonsmooth at `p`.
#[derive(Debug, Clone)]
pub struct DistanceObjective<M: Manifold> {
    manifold: M,
    center: M::Point,
    constants: Constants,
}

/// Builds [`DistanceObjective`] with `L_f = 1` and diameter `diameter`.
pub fn lipschitz_distance_objective<M: Manifold>(
    manifold: M,
    center: M::Point,
    diameter: f64,
) -> Result<DistanceObjective<M>> {
    manifold.check_point(&center)?;
    Ok(DistanceObjective {
        manifold,
        center,
        constants: Constants {
            lipschitz_f: Some(1.0),
            grad_bound: Some(1.0),
            diameter: Some(diameter),
            ..Constants::default()
        },
    })
}

impl<M: Manifold> DistanceObjective<M> {
    pub fn manifold(&self) -> &M {
        &self.manifold
    }

    pub fn center(&self) -> &M::Point {
        &self.center
    }
}

impl<M: Manifold> FirstOrderOracle<M> for DistanceObjective<M> {
    fn value(&self, m: &M, x: &M::Point) -> Result<f64> {
        m.distance(x, &self.center)
    }

    /// `−Exp⁻¹_x(p) / d(x, p)`, and the subgradient `0` at `p`.
    fn gradient(
        &self,
        m: &M,
        x: &M::Point,
        _: &mut dyn RngCore,
    ) -> Result<Tangent<M::Point, M::Vector>> {
        let log = m.log_map(x, &self.center)?;
        let d = m.norm(x, &log)?;
        if d == 0.0 {
            return Ok(m.zero_tangent(x));
        }
        Ok(m.scale(&log, -1.0 / d))
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn constants(&self) -> Constants {
        self.constants
    }

    fn describe(&self) -> String {
        format!("distance {}", self.manifold.descriptor())
    }
}
