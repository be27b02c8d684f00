use nalgebra::DVector;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::manifold::{Euclidean, Tangent};
use crate::solver::{Constants, FirstOrderOracle};

/// `f(x) = ½ Σ_j a_j (x_j − c_j)²` with all `a_j > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanQuadratic {
    weights: DVector<f64>,
    center: DVector<f64>,
    diameter: Option<f64>,
}

impl EuclideanQuadratic {
    pub fn new(weights: DVector<f64>, center: DVector<f64>) -> Result<Self> {
        if weights.len() != center.len() {
            return Err(Error::Contract(
                "weights and center differ in length".into(),
            ));
        }
        if !weights.iter().all(|&a| a > 0.0 && a.is_finite()) {
            return Err(Error::Config("quadratic weights must be positive".into()));
        }
        Ok(Self {
            weights,
            center,
            diameter: None,
        })
    }

    /// Sets `D`, which also fixes `L_f = max a_j · D` on the region.
    pub fn with_diameter(mut self, d: f64) -> Self {
        self.diameter = Some(d);
        self
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn manifold(&self) -> Euclidean {
        Euclidean::new(self.center.len())
    }
}

impl FirstOrderOracle<Euclidean> for EuclideanQuadratic {
    fn value(&self, _: &Euclidean, x: &DVector<f64>) -> Result<f64> {
        let r = x - &self.center;
        Ok(0.5 * r.component_mul(&r).dot(&self.weights))
    }

    fn gradient(
        &self,
        _: &Euclidean,
        x: &DVector<f64>,
        _: &mut dyn RngCore,
    ) -> Result<Tangent<DVector<f64>, DVector<f64>>> {
        Ok(Tangent::new(
            x.clone(),
            (x - &self.center).component_mul(&self.weights),
        ))
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn constants(&self) -> Constants {
        let l = self.weights.max();
        Constants {
            lipschitz_grad: Some(l),
            mu: Some(self.weights.min()),
            diameter: self.diameter,
            lipschitz_f: self.diameter.map(|d| l * d),
            ..Constants::default()
        }
    }

    fn describe(&self) -> String {
        format!("euclidean-quad n={}", self.center.len())
    }
}
