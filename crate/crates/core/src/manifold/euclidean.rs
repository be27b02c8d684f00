use nalgebra::DVector;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{Descriptor, GeometryKind, Manifold, Tangent};
use crate::error::{contract, Error, Result};

/// Flat `ℝⁿ`. Every operation is plain vector arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Euclidean {
    n: usize,
}

impl Euclidean {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.n {
            return Err(contract(format!(
                "vector of length {} on euclidean({})",
                v.len(),
                self.n
            )));
        }
        Ok(())
    }
}

type ETangent = Tangent<DVector<f64>, DVector<f64>>;

impl Manifold for Euclidean {
    type Point = DVector<f64>;
    type Vector = DVector<f64>;

    fn descriptor(&self) -> Descriptor {
        Descriptor {
            kind: GeometryKind::Euclidean,
            n: self.n,
        }
    }

    fn kappa_lower(&self) -> f64 {
        0.0
    }

    fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        self.check_len(x)?;
        if x.iter().all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidPoint("non-finite coordinate".into()))
        }
    }

    fn same_point(&self, x: &DVector<f64>, y: &DVector<f64>) -> bool {
        x.len() == y.len() && x == y
    }

    fn zero_tangent(&self, x: &DVector<f64>) -> ETangent {
        Tangent::new(x.clone(), DVector::zeros(x.len()))
    }

    fn scale_vector(&self, v: &DVector<f64>, a: f64) -> DVector<f64> {
        v * a
    }

    fn add_vectors(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        u + v
    }

    fn distance(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        self.check_len(x)?;
        self.check_len(y)?;
        Ok((y - x).norm())
    }

    fn exp_map(&self, x: &DVector<f64>, v: &ETangent) -> Result<DVector<f64>> {
        self.check_len(x)?;
        self.check_base(x, v)?;
        Ok(x + &v.components)
    }

    fn log_map(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<ETangent> {
        self.check_len(x)?;
        self.check_len(y)?;
        Ok(Tangent::new(x.clone(), y - x))
    }

    fn parallel_transport(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        v: &ETangent,
    ) -> Result<ETangent> {
        self.check_len(y)?;
        self.check_base(x, v)?;
        Ok(Tangent::new(y.clone(), v.components.clone()))
    }

    fn inner(&self, x: &DVector<f64>, u: &ETangent, v: &ETangent) -> Result<f64> {
        self.check_base(x, u)?;
        self.check_base(x, v)?;
        Ok(u.components.dot(&v.components))
    }

    fn random_tangent(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> ETangent {
        let comps = DVector::from_fn(self.n, |_, _| StandardNormal.sample(rng));
        Tangent::new(x.clone(), comps)
    }
}
