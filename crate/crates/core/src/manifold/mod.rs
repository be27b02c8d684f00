//! Hadamard geometries and the operations every first-order method needs.
//!
//! A geometry implements [`Manifold`]: distance, exponential and inverse
//! exponential maps, parallel transport along the connecting geodesic and the
//! metric inner product. Tangent vectors carry their base point so that
//! base mismatches are caught instead of silently mixing tangent spaces.
//!
//! Three geometries are provided:
//! - [`Euclidean`]: flat `ℝⁿ`, curvature 0.
//! - [`Hyperbolic`]: constant curvature `κ < 0`, hyperboloid model.
//! - [`Spd`]: symmetric positive definite matrices with the affine-invariant metric.

use std::fmt::Debug;

use rand::RngCore;

use crate::error::{contract, Error, Result};

mod euclidean;
mod hyperbolic;
mod spd;

pub use euclidean::Euclidean;
pub use hyperbolic::{Hyperbolic, HyperbolicPoint};
pub use spd::{Spd, SpdPoint, DEFAULT_SPD_KAPPA};

/// Which concrete geometry a manifold is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometryKind {
    Euclidean,
    Hyperbolic,
    Spd,
}

/// Geometry kind plus intrinsic dimension parameter `n`.
///
/// For [`GeometryKind::Spd`] `n` is the matrix size, not the manifold dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Descriptor {
    pub kind: GeometryKind,
    pub n: usize,
}

impl std::fmt::Display for Descriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self.kind {
            GeometryKind::Euclidean => "euclidean",
            GeometryKind::Hyperbolic => "hyperbolic",
            GeometryKind::Spd => "spd",
        };
        write!(f, "{name}({})", self.n)
    }
}

/// A tangent vector together with the point it is attached to.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent<P, V> {
    pub base: P,
    pub components: V,
}

impl<P, V> Tangent<P, V> {
    pub fn new(base: P, components: V) -> Self {
        Self { base, components }
    }
}

/// A Riemannian manifold of nonpositive curvature.
///
/// All operations are pure. Implementations re-project their outputs onto the
/// manifold (hyperboloid renormalization, matrix re-symmetrization) so that long
/// chains of updates do not drift.
pub trait Manifold: Send + Sync + Debug {
    type Point: Clone + Debug + Send + Sync;
    type Vector: Clone + Debug + Send + Sync;

    fn descriptor(&self) -> Descriptor;

    /// Lower bound `κ ≤ 0` on the sectional curvature.
    fn kappa_lower(&self) -> f64;

    /// Validates that `x` belongs to this manifold.
    fn check_point(&self, x: &Self::Point) -> Result<()>;

    /// Whether two points coincide up to rounding; used for base-point checks.
    fn same_point(&self, x: &Self::Point, y: &Self::Point) -> bool;

    fn zero_tangent(&self, x: &Self::Point) -> Tangent<Self::Point, Self::Vector>;

    fn scale_vector(&self, v: &Self::Vector, a: f64) -> Self::Vector;

    fn add_vectors(&self, u: &Self::Vector, v: &Self::Vector) -> Self::Vector;

    fn distance(&self, x: &Self::Point, y: &Self::Point) -> Result<f64>;

    fn exp_map(
        &self,
        x: &Self::Point,
        v: &Tangent<Self::Point, Self::Vector>,
    ) -> Result<Self::Point>;

    fn log_map(
        &self,
        x: &Self::Point,
        y: &Self::Point,
    ) -> Result<Tangent<Self::Point, Self::Vector>>;

    fn parallel_transport(
        &self,
        x: &Self::Point,
        y: &Self::Point,
        v: &Tangent<Self::Point, Self::Vector>,
    ) -> Result<Tangent<Self::Point, Self::Vector>>;

    fn inner(
        &self,
        x: &Self::Point,
        u: &Tangent<Self::Point, Self::Vector>,
        v: &Tangent<Self::Point, Self::Vector>,
    ) -> Result<f64>;

    /// Tangent at `x` with independent standard normal coordinates in an
    /// orthonormal frame of `T_x M`.
    fn random_tangent(
        &self,
        x: &Self::Point,
        rng: &mut dyn RngCore,
    ) -> Tangent<Self::Point, Self::Vector>;

    fn norm(&self, x: &Self::Point, v: &Tangent<Self::Point, Self::Vector>) -> Result<f64> {
        Ok(self.inner(x, v, v)?.max(0.0).sqrt())
    }

    fn scale(
        &self,
        v: &Tangent<Self::Point, Self::Vector>,
        a: f64,
    ) -> Tangent<Self::Point, Self::Vector> {
        Tangent::new(v.base.clone(), self.scale_vector(&v.components, a))
    }

    fn add(
        &self,
        u: &Tangent<Self::Point, Self::Vector>,
        v: &Tangent<Self::Point, Self::Vector>,
    ) -> Result<Tangent<Self::Point, Self::Vector>> {
        if !self.same_point(&u.base, &v.base) {
            return Err(contract("cannot add tangents at different base points"));
        }
        Ok(Tangent::new(
            u.base.clone(),
            self.add_vectors(&u.components, &v.components),
        ))
    }

    /// Fails unless `v` is attached to `x`.
    fn check_base(&self, x: &Self::Point, v: &Tangent<Self::Point, Self::Vector>) -> Result<()> {
        if self.same_point(x, &v.base) {
            Ok(())
        } else {
            Err(contract(format!(
                "tangent base does not match point on {}",
                self.descriptor()
            )))
        }
    }
}

/// Moves `xbar` a fraction `w` of the way along the geodesic towards `x_new`:
/// `Exp_xbar(w · Exp_xbar⁻¹(x_new))`.
///
/// This is the running-average update of every averaged solver. `w = 0` and
/// `w = 1` return the endpoints exactly.
pub fn average_step<M: Manifold>(
    m: &M,
    xbar: &M::Point,
    x_new: &M::Point,
    w: f64,
) -> Result<M::Point> {
    if !(0.0..=1.0).contains(&w) {
        return Err(contract(format!("averaging weight {w} outside [0, 1]")));
    }
    if w == 0.0 {
        return Ok(xbar.clone());
    }
    if w == 1.0 {
        return Ok(x_new.clone());
    }
    let v = m.log_map(xbar, x_new)?;
    m.exp_map(xbar, &m.scale(&v, w))
}

/// The unique geodesic from `start` to `end`.
#[derive(Debug, Clone)]
pub struct GeodesicSegment<M: Manifold> {
    pub start: M::Point,
    pub end: M::Point,
    pub initial_velocity: Tangent<M::Point, M::Vector>,
}

impl<M: Manifold> GeodesicSegment<M> {
    pub fn between(m: &M, start: &M::Point, end: &M::Point) -> Result<Self> {
        let initial_velocity = m.log_map(start, end)?;
        Ok(Self {
            start: start.clone(),
            end: end.clone(),
            initial_velocity,
        })
    }

    pub fn length(&self, m: &M) -> Result<f64> {
        m.norm(&self.start, &self.initial_velocity)
    }

    /// Point at parameter `t ∈ [0, 1]`.
    pub fn point_at(&self, m: &M, t: f64) -> Result<M::Point> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Contract(format!(
                "geodesic parameter {t} outside [0, 1]"
            )));
        }
        m.exp_map(&self.start, &m.scale(&self.initial_velocity, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn average_weight_out_of_range() {
        let m = Euclidean::new(2);
        let a = DVector::from_vec(vec![0.0, 0.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(
            average_step(&m, &a, &b, 1.5),
            Err(Error::Contract(_))
        ));
        assert!(average_step(&m, &a, &b, -0.1).is_err());
        assert_eq!(average_step(&m, &a, &b, 0.0).unwrap(), a);
        assert_eq!(average_step(&m, &a, &b, 1.0).unwrap(), b);
    }

    #[test]
    fn streaming_average_is_arithmetic_mean() {
        let m = Euclidean::new(3);
        let pts: Vec<DVector<f64>> = (0..25)
            .map(|i| {
                let f = i as f64;
                DVector::from_vec(vec![f.sin(), f * 0.5 - 3.0, (f * 0.3).cos() * 7.0])
            })
            .collect();
        let mut avg = pts[0].clone();
        for (s, p) in pts.iter().enumerate().skip(1) {
            avg = average_step(&m, &avg, p, 1.0 / (s as f64 + 1.0)).unwrap();
        }
        let mut direct = DVector::zeros(3);
        for p in &pts {
            direct += p;
        }
        direct /= pts.len() as f64;
        assert!((avg - direct).abs().max() < 1e-13);
    }

    #[test]
    fn segment_endpoints() {
        let m = Hyperbolic::new(2, -1.0).unwrap();
        let x = m
            .point_from_spatial(DVector::from_vec(vec![0.3, -0.2]))
            .unwrap();
        let y = m
            .point_from_spatial(DVector::from_vec(vec![-1.0, 0.7]))
            .unwrap();
        let seg = GeodesicSegment::between(&m, &x, &y).unwrap();
        assert!(m.distance(&seg.point_at(&m, 1.0).unwrap(), &y).unwrap() < 1e-12);
        assert!((seg.length(&m).unwrap() - m.distance(&x, &y).unwrap()).abs() < 1e-12);
        let mid = seg.point_at(&m, 0.5).unwrap();
        let dx = m.distance(&x, &mid).unwrap();
        let dy = m.distance(&mid, &y).unwrap();
        assert!((dx - dy).abs() < 1e-12);
        assert!(seg.point_at(&m, 1.1).is_err());
    }
}
