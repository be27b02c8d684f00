//! Curvature-aware trigonometry of geodesic triangles.
//!
//! On a space whose curvature is bounded below by `κ ≤ 0`, the side `a` opposite
//! the angle `A` between sides `b` and `c` obeys
//!
//! ```text
//! a² ≤ ζ(κ, c) b² + c² - 2bc cos A,      ζ(κ, c) = √|κ| c / tanh(√|κ| c)
//! ```
//!
//! which is the flat law of cosines with the `b²` term inflated by `ζ ≥ 1`.
//! This module evaluates `ζ`, the bound, the exact hyperbolic law of cosines it is
//! compared against, and the per-step inequality the bound implies for an
//! exponential-map gradient step. [`certify`] holds the numerical checks.

pub mod certify;

use crate::error::{contract, domain, Result};
use crate::manifold::{Manifold, Tangent};

/// Below this value of `√|κ| c` the series of `x / tanh x` is used.
const ZETA_SERIES_THRESHOLD: f64 = 1e-4;

/// `ζ(κ, c) = √|κ| c / tanh(√|κ| c)`, extended by 1 at `κ = 0` or `c = 0`.
pub fn zeta(kappa: f64, c: f64) -> Result<f64> {
    if !(kappa <= 0.0) || !kappa.is_finite() {
        return Err(domain(format!("ζ needs κ ≤ 0, got {kappa}")));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(domain(format!("ζ needs c ≥ 0, got {c}")));
    }
    let x = (-kappa).sqrt() * c;
    if x < ZETA_SERIES_THRESHOLD {
        let x2 = x * x;
        Ok(1.0 + x2 / 3.0 - x2 * x2 / 45.0)
    } else {
        Ok(x / x.tanh())
    }
}

/// Curvature bound and domain diameter, the two inputs of every `ζ(κ, D)`
/// appearing in step sizes and rate bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaContext {
    pub kappa: f64,
    pub diameter: f64,
}

impl ZetaContext {
    pub fn new(kappa: f64, diameter: f64) -> Result<Self> {
        if !(diameter > 0.0) || !diameter.is_finite() {
            return Err(domain(format!("diameter must be positive, got {diameter}")));
        }
        zeta(kappa, diameter)?;
        Ok(Self { kappa, diameter })
    }

    pub fn value(&self) -> f64 {
        zeta(self.kappa, self.diameter).expect("validated on construction")
    }
}

fn check_angle(angle: f64) -> Result<()> {
    if !(0.0..=std::f64::consts::PI).contains(&angle) {
        return Err(domain(format!("angle {angle} outside [0, π]")));
    }
    Ok(())
}

fn check_side(name: &str, s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(domain(format!(
            "side {name} must be finite and ≥ 0, got {s}"
        )));
    }
    Ok(())
}

/// Side `a` of the triangle with sides `b`, `c` and included angle `A` in the
/// plane of constant curvature `κ < 0`.
///
/// Solves `cosh(√|κ|a) = cosh(√|κ|b)cosh(√|κ|c) - sinh(√|κ|b)sinh(√|κ|c)cos A`
/// through its half-angle form
/// `sinh²(a'/2) = sinh²((b'-c')/2) + sinh b' sinh c' sin²(A/2)`, which has no
/// cancellation for short sides.
pub fn hyperbolic_side(b: f64, c: f64, angle: f64, kappa: f64) -> Result<f64> {
    if !(kappa < 0.0) || !kappa.is_finite() {
        return Err(domain(format!(
            "hyperbolic law of cosines needs κ < 0, got {kappa}"
        )));
    }
    check_side("b", b)?;
    check_side("c", c)?;
    check_angle(angle)?;
    let s = (-kappa).sqrt();
    let (bs, cs) = (b * s, c * s);
    let half = ((bs - cs) / 2.0).sinh();
    let sin_half = (angle / 2.0).sin();
    let q = half * half + bs.sinh() * cs.sinh() * sin_half * sin_half;
    Ok(2.0 * q.sqrt().asinh() / s)
}

/// Euclidean law of cosines, `a² = b² + c² - 2bc cos A`, evaluated as
/// `(b - c)² + 4bc sin²(A/2)`.
pub fn law_of_cosines_flat(b: f64, c: f64, angle: f64) -> Result<f64> {
    if !b.is_finite() || !c.is_finite() || !angle.is_finite() {
        return Err(domain("law of cosines needs finite inputs"));
    }
    let sin_half = (angle / 2.0).sin();
    let sq = (b - c) * (b - c) + 4.0 * b * c * sin_half * sin_half;
    Ok(sq.max(0.0).sqrt())
}

/// `ζ(κ, c) b² + c² - 2bc cos A`, an upper bound on `a²`.
pub fn lemma1_upper_bound(b: f64, c: f64, angle: f64, kappa: f64) -> Result<f64> {
    check_side("b", b)?;
    let z = zeta(kappa, c)?;
    Ok(z * b * b + c * c - 2.0 * b * c * angle.cos())
}

/// A triangle described by two sides, their included angle and the opposite side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicTriangle {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Angle between sides `b` and `c`, in `[0, π]`.
    pub angle_a: f64,
    pub kappa: f64,
}

impl GeodesicTriangle {
    /// The comparison triangle in the constant-curvature plane: `a` is solved
    /// from `b`, `c`, `A`.
    pub fn from_sas(b: f64, c: f64, angle_a: f64, kappa: f64) -> Result<Self> {
        check_side("b", b)?;
        check_side("c", c)?;
        check_angle(angle_a)?;
        let a = if kappa == 0.0 {
            law_of_cosines_flat(b, c, angle_a)?
        } else {
            hyperbolic_side(b, c, angle_a, kappa)?
        };
        Ok(Self {
            a,
            b,
            c,
            angle_a,
            kappa,
        })
    }

    /// Measures a realized triangle on a manifold: vertex `apex` carries the
    /// angle, sides `b = d(apex, q)`, `c = d(apex, p)` and `a = d(p, q)`.
    pub fn measure<M: Manifold>(
        m: &M,
        apex: &M::Point,
        p: &M::Point,
        q: &M::Point,
    ) -> Result<Self> {
        let to_p = m.log_map(apex, p)?;
        let to_q = m.log_map(apex, q)?;
        let c = m.distance(apex, p)?;
        let b = m.distance(apex, q)?;
        let angle_a = if b == 0.0 || c == 0.0 {
            0.0
        } else {
            // atan2 keeps small and near-straight angles accurate.
            let e = m.scale(&to_p, 1.0 / m.norm(apex, &to_p)?);
            let along = m.inner(apex, &e, &to_q)?;
            let across = m.norm(apex, &m.add(&to_q, &m.scale(&e, -along))?)?;
            across.atan2(along)
        };
        Ok(Self {
            a: m.distance(p, q)?,
            b,
            c,
            angle_a,
            kappa: m.kappa_lower(),
        })
    }

    /// Largest violation of the three triangle inequalities (0 when all hold).
    pub fn triangle_inequality_violation(&self) -> f64 {
        let v1 = self.a - (self.b + self.c);
        let v2 = self.b - (self.a + self.c);
        let v3 = self.c - (self.a + self.b);
        v1.max(v2).max(v3).max(0.0)
    }

    /// `|cosh a' - (cosh b' cosh c' - sinh b' sinh c' cos A)|` relative to `cosh a'`,
    /// with sides scaled by `√|κ|`.
    pub fn law_of_cosines_residual(&self) -> f64 {
        let s = (-self.kappa).max(0.0).sqrt();
        if s == 0.0 {
            let rhs =
                self.b * self.b + self.c * self.c - 2.0 * self.b * self.c * self.angle_a.cos();
            return (self.a * self.a - rhs).abs() / (1.0 + self.a * self.a);
        }
        let (a, b, c) = (self.a * s, self.b * s, self.c * s);
        let rhs = b.cosh() * c.cosh() - b.sinh() * c.sinh() * self.angle_a.cos();
        (a.cosh() - rhs).abs() / a.cosh()
    }

    pub fn upper_bound(&self) -> Result<f64> {
        lemma1_upper_bound(self.b, self.c, self.angle_a, self.kappa)
    }
}

/// Outcome of checking the per-step inequality for one gradient step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corollary1Residual {
    /// Right-hand side minus left-hand side; nonnegative when the inequality holds.
    pub residual: f64,
    /// Sum of the magnitudes of all terms, for relative tolerances.
    pub scale: f64,
}

/// Performs `x_{s+1} = Exp_{x_s}(-η g_s)` and evaluates
///
/// ```text
/// (1/2η)(d²(x_s, x) - d²(x_{s+1}, x)) + (ζ η / 2)‖g_s‖²  -  ⟨-g_s, Exp_{x_s}⁻¹(x)⟩
/// ```
///
/// `zeta_cap` must dominate `ζ(κ, d(x_s, x))`.
pub fn corollary1_residual<M: Manifold>(
    m: &M,
    x_s: &M::Point,
    x: &M::Point,
    g_s: &Tangent<M::Point, M::Vector>,
    eta: f64,
    zeta_cap: f64,
) -> Result<Corollary1Residual> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(domain(format!("step size must be positive, got {eta}")));
    }
    m.check_base(x_s, g_s)?;
    let to_x = m.log_map(x_s, x)?;
    let c = m.norm(x_s, &to_x)?;
    let needed = zeta(m.kappa_lower(), c)?;
    if zeta_cap < needed * (1.0 - 1e-12) {
        return Err(contract(format!(
            "zeta_cap {zeta_cap} is below ζ(κ, d(x_s, x)) = {needed}"
        )));
    }
    let next = m.exp_map(x_s, &m.scale(g_s, -eta))?;
    let d_before = c * c;
    let d_after = m.distance(&next, x)?.powi(2);
    let g_sq = m.inner(x_s, g_s, g_s)?;
    let lhs = -m.inner(x_s, g_s, &to_x)?;
    let descent = (d_before - d_after) / (2.0 * eta);
    let curvature = zeta_cap * eta * g_sq / 2.0;
    Ok(Corollary1Residual {
        residual: descent + curvature - lhs,
        scale: lhs.abs() + (d_before + d_after) / (2.0 * eta) + curvature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    // High-precision values computed offline (40 digits).
    const COTH_1: f64 = 1.313_035_285_499_331_3;
    const ARCCOSH_COSH2_1: f64 = 1.513_374_006_596_504;

    #[test]
    fn zeta_flat_and_degenerate_limits() {
        assert_eq!(zeta(0.0, 5.0).unwrap(), 1.0);
        assert_eq!(zeta(-1.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn zeta_reference_value() {
        assert!((zeta(-1.0, 1.0).unwrap() - COTH_1).abs() < 1e-15);
    }

    #[test]
    fn zeta_series_matches_closed_form_at_threshold() {
        let x: f64 = ZETA_SERIES_THRESHOLD;
        let closed = x / x.tanh();
        let series = zeta(-1.0, x * (1.0 - 1e-9)).unwrap();
        assert!((closed - series).abs() < 1e-15);
    }

    #[test]
    fn zeta_domain_errors() {
        assert!(matches!(zeta(0.5, 1.0), Err(Error::Domain(_))));
        assert!(matches!(zeta(-1.0, -1.0), Err(Error::Domain(_))));
        assert!(zeta(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn hyperbolic_side_cases() {
        assert!((hyperbolic_side(0.0, 2.5, 1.0, -1.0).unwrap() - 2.5).abs() < 1e-14);
        assert!((hyperbolic_side(3.0, 1.25, 0.0, -1.0).unwrap() - 1.75).abs() < 1e-14);
        let right = hyperbolic_side(1.0, 1.0, FRAC_PI_2, -1.0).unwrap();
        assert!((right - ARCCOSH_COSH2_1).abs() < 1e-15);
        assert!(matches!(
            hyperbolic_side(1.0, 1.0, 1.0, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hyperbolic_side_symmetric_and_monotone() {
        for &(b, c) in &[(0.3, 2.0), (4.0, 1.5), (7.0, 7.0)] {
            let mut prev = -1.0;
            for k in 0..=50 {
                let ang = PI * k as f64 / 50.0;
                let a = hyperbolic_side(b, c, ang, -1.0).unwrap();
                let swapped = hyperbolic_side(c, b, ang, -1.0).unwrap();
                assert!((a - swapped).abs() <= 1e-13 * (1.0 + a));
                assert!(a >= prev);
                prev = a;
            }
        }
    }

    #[test]
    fn flat_law_cases() {
        assert!((law_of_cosines_flat(3.0, 4.0, FRAC_PI_2).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(law_of_cosines_flat(3.0, 5.0, 0.0).unwrap(), 2.0);
    }

    #[test]
    fn bound_reduces_to_flat_law() {
        let (b, c, ang) = (1.5, 2.5, 1.1);
        let bound = lemma1_upper_bound(b, c, ang, 0.0).unwrap();
        let flat = b * b + c * c - 2.0 * b * c * ang.cos();
        assert_eq!(bound, flat);
        assert_eq!(lemma1_upper_bound(0.0, 2.0, 1.0, -1.0).unwrap(), 4.0);
    }

    #[test]
    fn curvature_scaling_example() {
        let (b, c, ang, kappa) = (1.0, 1.0, FRAC_PI_3, -4.0);
        let direct = lemma1_upper_bound(b, c, ang, kappa).unwrap();
        let s = 2.0;
        let scaled = lemma1_upper_bound(s * b, s * c, ang, -1.0).unwrap() / 4.0;
        assert!((direct - scaled).abs() <= 1e-12 * direct.abs());
    }

    #[test]
    fn comparison_triangle_reproduces_law() {
        let t = GeodesicTriangle::from_sas(2.0, 3.0, 1.2, -1.0).unwrap();
        assert!(t.law_of_cosines_residual() < 1e-10);
        assert_eq!(t.triangle_inequality_violation(), 0.0);
        assert!(t.upper_bound().unwrap() >= t.a * t.a);
    }
}
