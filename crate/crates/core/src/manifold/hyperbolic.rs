use nalgebra::DVector;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{Descriptor, GeometryKind, Manifold, Tangent};
use crate::error::{contract, domain, Error, Result};

/// Hyperbolic space of constant curvature `κ < 0` in the hyperboloid model.
///
/// Points are `x ∈ ℝⁿ⁺¹` with `⟨x, x⟩_L = 1/κ` and `x₀ > 0`, where
/// `⟨x, y⟩_L = -x₀y₀ + Σ xᵢyᵢ`. Tangents at `x` are Minkowski-orthogonal to `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperbolic {
    n: usize,
    kappa: f64,
    /// `1/√|κ|`
    radius: f64,
}

/// A point on the hyperboloid sheet. Construct through [`Hyperbolic`].
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicPoint {
    coords: DVector<f64>,
}

impl HyperbolicPoint {
    /// Ambient coordinates `(x₀, x₁, …, xₙ)`.
    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }
}

type HTangent = Tangent<HyperbolicPoint, DVector<f64>>;

pub(crate) fn minkowski(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let spatial: f64 = u.iter().zip(v.iter()).skip(1).map(|(a, b)| a * b).sum();
    spatial - u[0] * v[0]
}

/// `x / sinh(x)`, accurate near zero.
fn x_over_sinh(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x / x.sinh()
    }
}

/// `sinh(x) / x`, accurate near zero.
fn sinh_over_x(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

impl Hyperbolic {
    /// `n`-dimensional hyperbolic space with curvature `kappa`. Fails unless `kappa < 0`.
    pub fn new(n: usize, kappa: f64) -> Result<Self> {
        if !(kappa < 0.0) || !kappa.is_finite() {
            return Err(domain(format!(
                "hyperbolic space needs curvature κ < 0, got {kappa}"
            )));
        }
        if n == 0 {
            return Err(domain("hyperbolic space needs dimension ≥ 1"));
        }
        Ok(Self {
            n,
            kappa,
            radius: 1.0 / (-kappa).sqrt(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// The point `(1/√|κ|, 0, …, 0)`.
    pub fn origin(&self) -> HyperbolicPoint {
        let mut coords = DVector::zeros(self.n + 1);
        coords[0] = self.radius;
        HyperbolicPoint { coords }
    }

    /// Lifts spatial coordinates `(x₁, …, xₙ)` onto the sheet.
    pub fn point_from_spatial(&self, spatial: DVector<f64>) -> Result<HyperbolicPoint> {
        if spatial.len() != self.n {
            return Err(contract(format!(
                "spatial part of length {} on hyperbolic({})",
                spatial.len(),
                self.n
            )));
        }
        if !spatial.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        Ok(self.lift(spatial.as_slice()))
    }

    /// Accepts ambient coordinates that already satisfy the constraint to 1e-10
    /// (relative), then re-projects them.
    pub fn point_from_coords(&self, coords: DVector<f64>) -> Result<HyperbolicPoint> {
        if coords.len() != self.n + 1 {
            return Err(contract(format!(
                "ambient vector of length {} on hyperbolic({})",
                coords.len(),
                self.n
            )));
        }
        let p = HyperbolicPoint { coords };
        self.check_point(&p)?;
        Ok(self.lift(&p.coords.as_slice()[1..]))
    }

    /// Tangent at `x` from ambient components, which must be Minkowski-orthogonal to `x`.
    pub fn tangent(&self, x: &HyperbolicPoint, components: DVector<f64>) -> Result<HTangent> {
        if components.len() != self.n + 1 {
            return Err(contract("tangent of wrong length"));
        }
        let scale = (1.0 + components.norm()) * (1.0 + x.coords.norm());
        if minkowski(&x.coords, &components).abs() > 1e-10 * scale {
            return Err(contract("tangent is not Minkowski-orthogonal to its base"));
        }
        Ok(Tangent::new(x.clone(), self.project_tangent(x, components)))
    }

    /// `|κ⟨x,x⟩_L - 1|` normalized by `|κ| x₀²`, the squared hyperbolic cosine
    /// of the distance to the origin.
    pub fn constraint_residual(&self, x: &HyperbolicPoint) -> f64 {
        let q = minkowski(&x.coords, &x.coords);
        let x0 = x.coords[0];
        (q * self.kappa - 1.0).abs() / (-self.kappa * x0 * x0).max(1.0)
    }

    /// Normalized `|⟨x, v⟩_L|` for a tangent `v` at `x`.
    pub fn orthogonality_residual(&self, v: &HTangent) -> f64 {
        let x = &v.base.coords;
        minkowski(x, &v.components).abs() / ((1.0 + x.norm()) * (1.0 + v.components.norm()))
    }

    fn lift(&self, spatial: &[f64]) -> HyperbolicPoint {
        let sq: f64 = spatial.iter().map(|c| c * c).sum();
        let mut coords = DVector::zeros(self.n + 1);
        coords[0] = (self.radius * self.radius + sq).sqrt();
        coords.as_mut_slice()[1..].copy_from_slice(spatial);
        HyperbolicPoint { coords }
    }

    fn project_tangent(&self, x: &HyperbolicPoint, v: DVector<f64>) -> DVector<f64> {
        let r2 = self.radius * self.radius;
        let c = minkowski(&x.coords, &v) / r2;
        v + &x.coords * c
    }

    fn check_dims(&self, x: &HyperbolicPoint) -> Result<()> {
        if x.coords.len() != self.n + 1 {
            return Err(contract(format!(
                "point with {} ambient coordinates on hyperbolic({})",
                x.coords.len(),
                self.n
            )));
        }
        Ok(())
    }
}

impl Manifold for Hyperbolic {
    type Point = HyperbolicPoint;
    type Vector = DVector<f64>;

    fn descriptor(&self) -> Descriptor {
        Descriptor {
            kind: GeometryKind::Hyperbolic,
            n: self.n,
        }
    }

    fn kappa_lower(&self) -> f64 {
        self.kappa
    }

    fn check_point(&self, x: &HyperbolicPoint) -> Result<()> {
        self.check_dims(x)?;
        if !x.coords.iter().all(|c| c.is_finite()) || !(x.coords[0] > 0.0) {
            return Err(Error::InvalidPoint(
                "not on the upper hyperboloid sheet".into(),
            ));
        }
        let r = self.constraint_residual(x);
        if r > 1e-10 {
            return Err(Error::InvalidPoint(format!(
                "hyperboloid constraint violated by {r:e}"
            )));
        }
        Ok(())
    }

    fn same_point(&self, x: &HyperbolicPoint, y: &HyperbolicPoint) -> bool {
        if x.coords.len() != y.coords.len() {
            return false;
        }
        let scale = 1.0 + x.coords.amax();
        (&x.coords - &y.coords).amax() <= 1e-12 * scale
    }

    fn zero_tangent(&self, x: &HyperbolicPoint) -> HTangent {
        Tangent::new(x.clone(), DVector::zeros(self.n + 1))
    }

    fn scale_vector(&self, v: &DVector<f64>, a: f64) -> DVector<f64> {
        v * a
    }

    fn add_vectors(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        u + v
    }

    fn distance(&self, x: &HyperbolicPoint, y: &HyperbolicPoint) -> Result<f64> {
        self.check_dims(x)?;
        self.check_dims(y)?;
        let r2 = self.radius * self.radius;
        let cosh = -minkowski(&x.coords, &y.coords) / r2;
        if cosh > 2.0 {
            // Far apart: the chord cancels, the inner product does not.
            return Ok(self.radius * cosh.acosh());
        }
        // Chord form d = 2R asinh(‖x - y‖_L / 2R); stable for nearby points.
        let diff = &x.coords - &y.coords;
        let chord = minkowski(&diff, &diff).max(0.0).sqrt();
        Ok(2.0 * self.radius * (chord / (2.0 * self.radius)).asinh())
    }

    fn exp_map(&self, x: &HyperbolicPoint, v: &HTangent) -> Result<HyperbolicPoint> {
        self.check_dims(x)?;
        self.check_base(x, v)?;
        let speed = minkowski(&v.components, &v.components).max(0.0).sqrt();
        if speed == 0.0 {
            return Ok(x.clone());
        }
        let theta = speed / self.radius;
        let y = &x.coords * theta.cosh() + &v.components * sinh_over_x(theta);
        Ok(self.lift(&y.as_slice()[1..]))
    }

    fn log_map(&self, x: &HyperbolicPoint, y: &HyperbolicPoint) -> Result<HTangent> {
        let d = self.distance(x, y)?;
        if d == 0.0 {
            return Ok(self.zero_tangent(x));
        }
        let r2 = self.radius * self.radius;
        // Component of y orthogonal to x; its Minkowski norm is R sinh(d/R).
        let w = &y.coords + &x.coords * (minkowski(&x.coords, &y.coords) / r2);
        let v = w * x_over_sinh(d / self.radius);
        Ok(Tangent::new(x.clone(), self.project_tangent(x, v)))
    }

    fn parallel_transport(
        &self,
        x: &HyperbolicPoint,
        y: &HyperbolicPoint,
        v: &HTangent,
    ) -> Result<HTangent> {
        self.check_dims(y)?;
        self.check_base(x, v)?;
        let r2 = self.radius * self.radius;
        let denom = r2 - minkowski(&x.coords, &y.coords);
        let c = minkowski(&y.coords, &v.components) / denom;
        let moved = &v.components + (&x.coords + &y.coords) * c;
        Ok(Tangent::new(y.clone(), self.project_tangent(y, moved)))
    }

    fn inner(&self, x: &HyperbolicPoint, u: &HTangent, v: &HTangent) -> Result<f64> {
        self.check_base(x, u)?;
        self.check_base(x, v)?;
        Ok(minkowski(&u.components, &v.components))
    }

    fn random_tangent(&self, x: &HyperbolicPoint, rng: &mut dyn RngCore) -> HTangent {
        // Isotropic at the origin, carried to x by the transport isometry.
        let mut comps = DVector::zeros(self.n + 1);
        for c in comps.iter_mut().skip(1) {
            *c = StandardNormal.sample(rng);
        }
        let o = self.origin();
        let at_origin = Tangent::new(o.clone(), comps);
        self.parallel_transport(&o, x, &at_origin)
            .expect("origin tangent is well formed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_point(m: &Hyperbolic, rng: &mut ChaCha8Rng, spread: f64) -> HyperbolicPoint {
        let o = m.origin();
        let v = m.random_tangent(&o, rng);
        let v = m.scale(&v, spread / (m.dim() as f64).sqrt());
        m.exp_map(&o, &v).unwrap()
    }

    #[test]
    fn rejects_nonnegative_curvature() {
        assert!(matches!(Hyperbolic::new(2, 0.0), Err(Error::Domain(_))));
        assert!(Hyperbolic::new(2, 0.5).is_err());
        assert_eq!(Hyperbolic::new(3, -0.25).unwrap().kappa_lower(), -0.25);
    }

    #[test]
    fn origin_satisfies_constraint() {
        let m = Hyperbolic::new(3, -4.0).unwrap();
        let o = m.origin();
        let q = minkowski(o.coords(), o.coords());
        assert!((q - 1.0 / m.kappa()).abs() < 1e-15);
        m.check_point(&o).unwrap();
    }

    #[test]
    fn distance_along_axis() {
        // Exp from the origin along a unit spatial axis reaches distance |t|.
        for kappa in [-0.25, -1.0, -4.0] {
            let m = Hyperbolic::new(2, kappa).unwrap();
            let o = m.origin();
            let v = m
                .tangent(&o, DVector::from_vec(vec![0.0, 1.7, 0.0]))
                .unwrap();
            let y = m.exp_map(&o, &v).unwrap();
            assert!((m.distance(&o, &y).unwrap() - 1.7).abs() < 1e-13);
            m.check_point(&y).unwrap();
        }
    }

    #[test]
    fn log_of_self_is_zero() {
        let m = Hyperbolic::new(2, -1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = sample_point(&m, &mut rng, 2.0);
        let v = m.log_map(&x, &x).unwrap();
        assert_eq!(v.components.amax(), 0.0);
        assert_eq!(m.distance(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn transport_is_isometry() {
        let m = Hyperbolic::new(3, -1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let x = sample_point(&m, &mut rng, 3.0);
            let y = sample_point(&m, &mut rng, 3.0);
            let u = m.random_tangent(&x, &mut rng);
            let v = m.random_tangent(&x, &mut rng);
            let before = m.inner(&x, &u, &v).unwrap();
            let tu = m.parallel_transport(&x, &y, &u).unwrap();
            let tv = m.parallel_transport(&x, &y, &v).unwrap();
            let after = m.inner(&y, &tu, &tv).unwrap();
            assert!((before - after).abs() < 1e-9, "{before} vs {after}");
            assert!(m.orthogonality_residual(&tu) < 1e-12);
        }
    }

    #[test]
    fn transport_to_self_is_identity() {
        let m = Hyperbolic::new(2, -1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = sample_point(&m, &mut rng, 1.0);
        let v = m.random_tangent(&x, &mut rng);
        let same = m.parallel_transport(&x, &x, &v).unwrap();
        assert!((same.components - v.components).amax() < 1e-13);
    }

    #[test]
    fn non_orthogonal_tangent_rejected() {
        let m = Hyperbolic::new(2, -1.0).unwrap();
        let o = m.origin();
        assert!(m
            .tangent(&o, DVector::from_vec(vec![1.0, 0.0, 0.0]))
            .is_err());
    }

    #[test]
    fn off_sheet_point_rejected() {
        let m = Hyperbolic::new(2, -1.0).unwrap();
        let bad = DVector::from_vec(vec![2.0, 0.0, 0.0]);
        assert!(matches!(
            m.point_from_coords(bad),
            Err(Error::InvalidPoint(_))
        ));
    }
}
