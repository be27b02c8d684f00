//! Numerical certification of the triangle bound and its consequences.
//!
//! Each check returns a report carrying the worst value seen and whether it
//! clears the pinned tolerance. Monte-Carlo checks shard their samples across
//! threads; shard `k` draws from ChaCha stream `k` of the given seed, so reports
//! are reproducible regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{corollary1_residual, hyperbolic_side, lemma1_upper_bound, zeta, GeodesicTriangle};
use crate::error::{domain, Result};
use crate::manifold::{Hyperbolic, Manifold, Tangent};

/// Sampled inequalities may dip below zero by this much (relative) from rounding.
pub const SAMPLED_SLACK: f64 = 1e-9;
/// Exact algebraic identities hold to this relative tolerance.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Finite-difference slack for the second-derivative inequality.
pub const FD_SLACK: f64 = 1e-6;
/// Equality of bound and side at `b = 0`.
pub const B_ZERO_TOL: f64 = 1e-10;
/// Flat-space residual of the per-step identity.
pub const FLAT_RESIDUAL_TOL: f64 = 1e-12;

const SHARD: usize = 4096;

fn shard_rng(seed: u64, shard: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    rng
}

fn shards(total: usize) -> Vec<(usize, usize)> {
    (0..total.div_ceil(SHARD))
        .map(|k| (k, SHARD.min(total - k * SHARD)))
        .collect()
}

type TangentOf<M> = Tangent<<M as Manifold>::Point, <M as Manifold>::Vector>;

/// Orthonormal pair in `T_x M` (needs dimension ≥ 2).
fn orthonormal_pair<M: Manifold>(
    m: &M,
    x: &M::Point,
    rng: &mut ChaCha8Rng,
) -> Result<(TangentOf<M>, TangentOf<M>)> {
    loop {
        let u = m.random_tangent(x, rng);
        let w = m.random_tangent(x, rng);
        let nu = m.norm(x, &u)?;
        if nu < 1e-8 {
            continue;
        }
        let e1 = m.scale(&u, 1.0 / nu);
        let proj = m.inner(x, &w, &e1)?;
        let w_perp = m.add(&w, &m.scale(&e1, -proj))?;
        let nw = m.norm(x, &w_perp)?;
        if nw < 1e-8 {
            continue;
        }
        return Ok((e1, m.scale(&w_perp, 1.0 / nw)));
    }
}

/// Random point at geodesic distance at most `radius` from `anchor`.
pub fn sample_point_near<M: Manifold>(
    m: &M,
    anchor: &M::Point,
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> Result<M::Point> {
    let v = m.random_tangent(anchor, rng);
    let nv = m.norm(anchor, &v)?;
    if nv == 0.0 {
        return Ok(anchor.clone());
    }
    let r = radius * rng.random::<f64>();
    m.exp_map(anchor, &m.scale(&v, r / nv))
}

/// Realizes a triangle with prescribed sides `b`, `c` and angle `A` at `apex`:
/// returns `(p, q)` with `p = Exp(c e₁)` and `q = Exp(b (cos A e₁ + sin A e₂))`.
pub fn realize_triangle<M: Manifold>(
    m: &M,
    apex: &M::Point,
    b: f64,
    c: f64,
    angle: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(M::Point, M::Point)> {
    let (e1, e2) = orthonormal_pair(m, apex, rng)?;
    let p = m.exp_map(apex, &m.scale(&e1, c))?;
    let dir = m.add(&m.scale(&e1, angle.cos()), &m.scale(&e2, angle.sin()))?;
    let q = m.exp_map(apex, &m.scale(&dir, b))?;
    Ok((p, q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Config {
    pub kappas: [f64; 3],
    pub samples_per_kappa: usize,
    pub max_side: f64,
    /// Largest distance of the apex from the hyperboloid origin.
    pub apex_spread: f64,
    pub dim: usize,
    pub seed: u64,
}

impl Default for Lemma1Config {
    fn default() -> Self {
        Self {
            kappas: [-0.25, -1.0, -4.0],
            samples_per_kappa: 40_000,
            max_side: 10.0,
            apex_spread: 1.0,
            dim: 3,
            seed: 2016,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Report {
    pub samples: usize,
    /// `min (bound - a²)/(1 + a²)` with `a` measured on the manifold.
    pub min_slack_measured: f64,
    /// Same with `a` from the hyperbolic law of cosines.
    pub min_slack_law: f64,
    /// Worst `|bound - a²|/(1 + c²)` for degenerate `b = 0` triangles.
    pub max_b_zero_gap: f64,
    pub max_triangle_violation: f64,
    pub max_law_residual: f64,
    /// `(κ, b, c, A)` of the tightest sample.
    pub tightest: (f64, f64, f64, f64),
}

impl Lemma1Report {
    pub fn passed(&self) -> bool {
        self.min_slack_measured >= -SAMPLED_SLACK
            && self.min_slack_law >= -SAMPLED_SLACK
            && self.max_b_zero_gap <= B_ZERO_TOL
            && self.max_triangle_violation <= 1e-9
    }
}

#[derive(Clone, Copy)]
struct Lemma1Partial {
    samples: usize,
    slack_m: f64,
    slack_l: f64,
    b_zero: f64,
    tri: f64,
    law: f64,
    tightest: (f64, f64, f64, f64),
}

impl Lemma1Partial {
    fn identity() -> Self {
        Self {
            samples: 0,
            slack_m: f64::INFINITY,
            slack_l: f64::INFINITY,
            b_zero: 0.0,
            tri: 0.0,
            law: 0.0,
            tightest: (0.0, 0.0, 0.0, 0.0),
        }
    }

    fn merge(self, o: Self) -> Self {
        let (slack_m, tightest) = if o.slack_m < self.slack_m {
            (o.slack_m, o.tightest)
        } else {
            (self.slack_m, self.tightest)
        };
        Self {
            samples: self.samples + o.samples,
            slack_m,
            slack_l: self.slack_l.min(o.slack_l),
            b_zero: self.b_zero.max(o.b_zero),
            tri: self.tri.max(o.tri),
            law: self.law.max(o.law),
            tightest,
        }
    }
}

/// Monte-Carlo check of `a² ≤ ζ(κ,c)b² + c² - 2bc cos A` on realized hyperbolic triangles.
pub fn certify_lemma1(cfg: &Lemma1Config) -> Result<Lemma1Report> {
    if cfg.samples_per_kappa == 0 || !(cfg.max_side > 0.0) {
        return Err(domain(
            "lemma check needs samples and a positive side range",
        ));
    }
    let mut total = Lemma1Partial::identity();
    for (ki, &kappa) in cfg.kappas.iter().enumerate() {
        let m = Hyperbolic::new(cfg.dim, kappa)?;
        let seed = cfg.seed.wrapping_add(ki as u64 * 0x9E37_79B9);
        let part = shards(cfg.samples_per_kappa)
            .into_par_iter()
            .map(|(k, count)| lemma1_shard(&m, cfg, seed, k, count))
            .try_reduce(Lemma1Partial::identity, |a, b| Ok(a.merge(b)))?;
        total = total.merge(part);
    }
    Ok(Lemma1Report {
        samples: total.samples,
        min_slack_measured: total.slack_m,
        min_slack_law: total.slack_l,
        max_b_zero_gap: total.b_zero,
        max_triangle_violation: total.tri,
        max_law_residual: total.law,
        tightest: total.tightest,
    })
}

fn lemma1_shard(
    m: &Hyperbolic,
    cfg: &Lemma1Config,
    seed: u64,
    shard: usize,
    count: usize,
) -> Result<Lemma1Partial> {
    let mut rng = shard_rng(seed, shard);
    let kappa = m.kappa();
    let origin = m.origin();
    let mut acc = Lemma1Partial::identity();
    for _ in 0..count {
        let apex = sample_point_near(m, &origin, cfg.apex_spread, &mut rng)?;
        // One in ten samples has a very short side b, where the bound is tightest.
        let b = if rng.random::<f64>() < 0.1 {
            cfg.max_side * 1e-3 * rng.random::<f64>()
        } else {
            cfg.max_side * rng.random::<f64>()
        };
        let c = cfg.max_side * rng.random::<f64>();
        let angle = std::f64::consts::PI * rng.random::<f64>();
        let (p, q) = realize_triangle(m, &apex, b, c, angle, &mut rng)?;
        let t = GeodesicTriangle::measure(m, &apex, &p, &q)?;
        let bound = t.upper_bound()?;
        let slack_m = (bound - t.a * t.a) / (1.0 + t.a * t.a);
        let a_law = hyperbolic_side(t.b, t.c, t.angle_a, kappa)?;
        let slack_l = (bound - a_law * a_law) / (1.0 + a_law * a_law);

        let degenerate = lemma1_upper_bound(0.0, c, angle, kappa)?;
        let side0 = hyperbolic_side(0.0, c, angle, kappa)?;
        let b_zero = (degenerate - side0 * side0).abs() / (1.0 + c * c);

        let sample = Lemma1Partial {
            samples: 1,
            slack_m,
            slack_l,
            b_zero,
            tri: t.triangle_inequality_violation() / (1.0 + t.a + t.b + t.c),
            law: t.law_of_cosines_residual(),
            tightest: (kappa, t.b, t.c, t.angle_a),
        };
        acc = acc.merge(sample);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corollary1Config {
    pub samples: usize,
    pub max_distance: f64,
    pub max_eta: f64,
    /// Largest `η‖g‖`.
    pub max_step: f64,
    pub seed: u64,
}

impl Default for Corollary1Config {
    fn default() -> Self {
        Self {
            samples: 10_000,
            max_distance: 5.0,
            max_eta: 1.0,
            max_step: 5.0,
            seed: 77,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corollary1Report {
    pub samples: usize,
    /// `min residual / scale`.
    pub min_relative: f64,
    pub max_abs: f64,
}

impl Corollary1Report {
    /// Passing criterion on a curved Hadamard geometry.
    pub fn passed_curved(&self) -> bool {
        self.min_relative >= -SAMPLED_SLACK
    }

    /// Passing criterion on flat space, where the inequality is an identity.
    pub fn passed_flat(&self) -> bool {
        self.max_abs <= FLAT_RESIDUAL_TOL
    }
}

/// Monte-Carlo check of the per-step distance inequality on any geometry.
pub fn certify_corollary1<M: Manifold>(
    m: &M,
    anchor: &M::Point,
    cfg: &Corollary1Config,
) -> Result<Corollary1Report> {
    if cfg.samples == 0 {
        return Err(domain("corollary check needs samples"));
    }
    let kappa = m.kappa_lower();
    let parts = shards(cfg.samples)
        .into_par_iter()
        .map(|(k, count)| -> Result<(usize, f64, f64)> {
            let mut rng = shard_rng(cfg.seed, k);
            let mut worst_rel = f64::INFINITY;
            let mut worst_abs = 0.0f64;
            for _ in 0..count {
                let x_s = sample_point_near(m, anchor, 1.0, &mut rng)?;
                let x = sample_point_near(m, &x_s, cfg.max_distance, &mut rng)?;
                let eta = cfg.max_eta * (0.01 + 0.99 * rng.random::<f64>());
                let g = m.random_tangent(&x_s, &mut rng);
                let ng = m.norm(&x_s, &g)?;
                let step = cfg.max_step * rng.random::<f64>();
                let g = if ng > 0.0 {
                    m.scale(&g, step / (eta * ng))
                } else {
                    g
                };
                let cap = zeta(kappa, m.distance(&x_s, &x)?)?;
                let r = corollary1_residual(m, &x_s, &x, &g, eta, cap)?;
                worst_rel = worst_rel.min(r.residual / r.scale.max(f64::MIN_POSITIVE));
                worst_abs = worst_abs.max(r.residual.abs());
            }
            Ok((count, worst_rel, worst_abs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corollary1Report {
        samples: parts.iter().map(|p| p.0).sum(),
        min_relative: parts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        max_abs: parts.iter().map(|p| p.2).fold(0.0, f64::max),
    })
}

/// `g(b, c) = cosh √((c / tanh c) b² + c² - 2bc cos A)`.
pub fn appendix_g(b: f64, c: f64, angle: f64) -> f64 {
    let z = zeta(-1.0, c.max(0.0)).unwrap_or(1.0);
    let arg = z * b * b + c * c - 2.0 * b * c * angle.cos();
    arg.max(0.0).sqrt().cosh()
}

/// `(∂²g/∂b² - g) / g` by Richardson-extrapolated central differences with steps
/// `h` and `h/2`. The inequality `∂²g/∂b² ≥ g` is equivalent to this being ≥ 0.
pub fn appendix_g_relative_gap(b: f64, c: f64, angle: f64, h: f64) -> f64 {
    let g0 = appendix_g(b, c, angle);
    let second = |step: f64| {
        let plus = appendix_g(b + step, c, angle) / g0;
        let minus = appendix_g(b - step, c, angle) / g0;
        (plus - 2.0 + minus) / (step * step)
    };
    let coarse = second(h);
    let fine = second(h / 2.0);
    let extrapolated = (4.0 * fine - coarse) / 3.0;
    extrapolated - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GGrid {
    pub b_max: f64,
    pub c_max: f64,
    pub points_b: usize,
    pub points_c: usize,
    pub points_angle: usize,
    pub h: f64,
}

impl Default for GGrid {
    fn default() -> Self {
        Self {
            b_max: 10.0,
            c_max: 10.0,
            points_b: 100,
            points_c: 100,
            points_angle: 100,
            h: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GReport {
    pub points: usize,
    pub min_relative_gap: f64,
    pub argmin: (f64, f64, f64),
}

impl GReport {
    pub fn passed(&self) -> bool {
        self.min_relative_gap >= -FD_SLACK
    }
}

/// Sweeps `b ∈ (0, b_max]`, `c ∈ (0, c_max]` (uniform interior grids ending at
/// the maximum) and `A ∈ [0, π]` (endpoints included).
pub fn certify_appendix_g_inequality(grid: &GGrid) -> Result<GReport> {
    if grid.points_b == 0 || grid.points_c == 0 || grid.points_angle < 2 {
        return Err(domain("grid needs ≥1 point in b and c and ≥2 angles"));
    }
    if !(grid.b_max > 0.0 && grid.c_max > 0.0 && grid.h > 0.0) {
        return Err(domain("grid ranges and step must be positive"));
    }
    let db = grid.b_max / grid.points_b as f64;
    if db <= grid.h {
        return Err(domain(
            "finite-difference step does not fit below the first b node",
        ));
    }
    let (min, argmin) = (1..=grid.points_b)
        .into_par_iter()
        .map(|ib| {
            let b = db * ib as f64;
            let mut best = (f64::INFINITY, (0.0, 0.0, 0.0));
            for ic in 1..=grid.points_c {
                let c = grid.c_max * ic as f64 / grid.points_c as f64;
                for ia in 0..grid.points_angle {
                    let angle = std::f64::consts::PI * ia as f64 / (grid.points_angle - 1) as f64;
                    let gap = appendix_g_relative_gap(b, c, angle, grid.h);
                    if gap < best.0 {
                        best = (gap, (b, c, angle));
                    }
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, (0.0, 0.0, 0.0)),
            |x, y| if y.0 < x.0 { y } else { x },
        );
    Ok(GReport {
        points: grid.points_b * grid.points_c * grid.points_angle,
        min_relative_gap: min,
        argmin,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub samples: usize,
    pub max_relative_deviation: f64,
}

impl ScalingReport {
    pub fn passed(&self) -> bool {
        self.max_relative_deviation < IDENTITY_TOL
    }
}

/// Deviation of `bound(b, c, A, κ)` from `bound(√|κ|b, √|κ|c, A, -1) / |κ|`,
/// relative to the sum of the magnitudes of the bound's three terms.
pub fn curvature_scaling_deviation(b: f64, c: f64, angle: f64, kappa: f64) -> Result<f64> {
    let s = (-kappa).sqrt();
    let direct = lemma1_upper_bound(b, c, angle, kappa)?;
    let canonic = lemma1_upper_bound(s * b, s * c, angle, -1.0)? / (-kappa);
    let magnitude = zeta(kappa, c)? * b * b + c * c + 2.0 * b * c * angle.cos().abs();
    Ok((direct - canonic).abs() / magnitude.max(f64::MIN_POSITIVE))
}

/// Samples `(κ, b, c, A)` with `κ` from `kappas` and `b, c ∈ [0, max_side]`.
pub fn certify_curvature_scaling(
    kappas: &[f64],
    samples: usize,
    max_side: f64,
    seed: u64,
) -> Result<ScalingReport> {
    if kappas.is_empty() || kappas.iter().any(|k| !(*k < 0.0)) {
        return Err(domain(
            "scaling check needs a nonempty set of negative curvatures",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let kappa = kappas[rng.random_range(0..kappas.len())];
        let b = max_side * rng.random::<f64>();
        let c = max_side * rng.random::<f64>();
        let angle = std::f64::consts::PI * rng.random::<f64>();
        worst = worst.max(curvature_scaling_deviation(b, c, angle, kappa)?);
    }
    Ok(ScalingReport {
        samples,
        max_relative_deviation: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Euclidean;
    use nalgebra::DVector;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    #[test]
    fn g_reduces_to_cosh_for_tiny_c() {
        // With c → 0, g → cosh b and the gap vanishes.
        for b in [0.5, 1.0, 3.0] {
            let gap = appendix_g_relative_gap(b, 1e-3, 1.0, 1e-4);
            assert!(gap.abs() < 1e-5, "b={b}: {gap}");
        }
    }

    #[test]
    fn g_gap_positive_at_right_angle() {
        assert!(appendix_g_relative_gap(1.0, 1.0, FRAC_PI_2, 1e-4) > 0.0);
    }

    #[test]
    fn degenerate_grid_rejected() {
        let g = GGrid {
            points_b: 0,
            ..GGrid::default()
        };
        assert!(certify_appendix_g_inequality(&g).is_err());
        let g = GGrid {
            h: 1.0,
            ..GGrid::default()
        };
        assert!(certify_appendix_g_inequality(&g).is_err());
    }

    #[test]
    fn small_grid_passes() {
        let g = GGrid {
            points_b: 12,
            points_c: 12,
            points_angle: 9,
            ..GGrid::default()
        };
        let r = certify_appendix_g_inequality(&g).unwrap();
        assert_eq!(r.points, 12 * 12 * 9);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn scaling_identity_trivial_and_nontrivial() {
        assert_eq!(
            curvature_scaling_deviation(1.0, 2.0, 0.4, -1.0).unwrap(),
            0.0
        );
        assert!(curvature_scaling_deviation(1.0, 1.0, FRAC_PI_3, -4.0).unwrap() < 1e-12);
    }

    #[test]
    fn realized_triangle_has_requested_shape() {
        let m = Hyperbolic::new(3, -1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let apex = m.origin();
        let (p, q) = realize_triangle(&m, &apex, 2.0, 3.0, 1.0, &mut rng).unwrap();
        let t = GeodesicTriangle::measure(&m, &apex, &p, &q).unwrap();
        assert!((t.b - 2.0).abs() < 1e-12);
        assert!((t.c - 3.0).abs() < 1e-12);
        assert!((t.angle_a - 1.0).abs() < 1e-10);
        assert!(t.law_of_cosines_residual() < 1e-10);
    }

    #[test]
    fn small_lemma_run_passes() {
        let cfg = Lemma1Config {
            samples_per_kappa: 500,
            ..Lemma1Config::default()
        };
        let r = certify_lemma1(&cfg).unwrap();
        assert_eq!(r.samples, 1500);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn corollary_flat_is_identity() {
        let m = Euclidean::new(3);
        let cfg = Corollary1Config {
            samples: 500,
            ..Corollary1Config::default()
        };
        let r = certify_corollary1(&m, &DVector::zeros(3), &cfg).unwrap();
        assert!(r.passed_flat(), "{r:?}");
    }

    #[test]
    fn corollary_zero_gradient_is_exact() {
        let m = Hyperbolic::new(2, -1.0).unwrap();
        let x_s = m.origin();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = sample_point_near(&m, &x_s, 3.0, &mut rng).unwrap();
        let cap = zeta(-1.0, m.distance(&x_s, &x).unwrap()).unwrap();
        let r = corollary1_residual(&m, &x_s, &x, &m.zero_tangent(&x_s), 0.5, cap).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn corollary_rejects_small_cap() {
        let m = Hyperbolic::new(2, -1.0).unwrap();
        let x_s = m.origin();
        let dir = m
            .tangent(&x_s, DVector::from_vec(vec![0.0, 2.0, 0.0]))
            .unwrap();
        let x = m.exp_map(&x_s, &dir).unwrap();
        let g = m.scale(&dir, 0.1);
        assert!(corollary1_residual(&m, &x_s, &x, &g, 0.5, 1.0).is_err());
        let cap = zeta(-1.0, 2.0).unwrap();
        assert!(corollary1_residual(&m, &x_s, &x, &g, 0.5, cap).is_ok());
    }
}
