use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::manifold::{Euclidean, Hyperbolic, Manifold};
use crate::problems::certify::{
    frechet_unbiasedness_gap, gradient_fd_error, karcher_unbiasedness_gap, sample_near,
    smoothness_certificate, strong_convexity_certificate, MODEL_SLACK,
};
use crate::problems::{generate_spd_dataset, FrechetProblem, Normalization};
use crate::trig::certify::{
    certify_appendix_g_inequality, certify_corollary1, certify_curvature_scaling, certify_lemma1,
    Corollary1Config, GGrid, Lemma1Config, B_ZERO_TOL, FD_SLACK, FLAT_RESIDUAL_TOL, IDENTITY_TOL,
    SAMPLED_SLACK,
};

/// Sample counts for [`certify_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertifyScale {
    /// Reduced counts for smoke tests.
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertRow {
    pub check_name: String,
    pub n_samples: usize,
    /// Smallest normalized slack (or largest error, negated, for error checks).
    pub min_residual: f64,
    /// Largest amount by which a sample exceeded its tolerance; 0 when none did.
    pub max_violation: f64,
    pub seed: u64,
    pub passed: bool,
    /// Reported but not counted as a failure.
    pub advisory: bool,
    pub seconds: f64,
}

fn row(name: &str, n: usize, min_residual: f64, tol: f64, seed: u64, start: Instant) -> CertRow {
    let violation = (-tol - min_residual).max(0.0);
    CertRow {
        check_name: name.into(),
        n_samples: n,
        min_residual,
        max_violation: violation,
        seed,
        passed: min_residual >= -tol,
        advisory: false,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every numerical certificate: the triangle bound, the per-step inequality,
/// the appendix inequality and scaling identity, and the problem certificates.
pub fn certify_suite(scale: CertifyScale, seed: u64) -> Result<Vec<CertRow>> {
    let full = scale == CertifyScale::Full;
    let mut rows = Vec::new();

    let start = Instant::now();
    let cfg = Lemma1Config {
        samples_per_kappa: if full { 40_000 } else { 2_000 },
        seed,
        ..Lemma1Config::default()
    };
    let l1 = certify_lemma1(&cfg)?;
    rows.push(row(
        "lemma1-bound",
        l1.samples,
        l1.min_slack_measured.min(l1.min_slack_law),
        SAMPLED_SLACK,
        seed,
        start,
    ));
    rows.push(row(
        "lemma1-b-zero",
        l1.samples,
        -l1.max_b_zero_gap,
        B_ZERO_TOL,
        seed,
        start,
    ));

    let start = Instant::now();
    let ccfg = Corollary1Config {
        samples: if full { 10_000 } else { 1_000 },
        seed,
        ..Corollary1Config::default()
    };
    let h = Hyperbolic::new(3, -1.0)?;
    let c1 = certify_corollary1(&h, &h.origin(), &ccfg)?;
    rows.push(row(
        "corollary1-curved",
        c1.samples,
        c1.min_relative,
        SAMPLED_SLACK,
        seed,
        start,
    ));
    let start = Instant::now();
    let e = Euclidean::new(3);
    let c0 = certify_corollary1(&e, &nalgebra::DVector::zeros(3), &ccfg)?;
    rows.push(row(
        "corollary1-flat",
        c0.samples,
        -c0.max_abs,
        FLAT_RESIDUAL_TOL,
        seed,
        start,
    ));

    let start = Instant::now();
    let grid = if full {
        GGrid::default()
    } else {
        GGrid {
            points_b: 20,
            points_c: 20,
            points_angle: 20,
            ..GGrid::default()
        }
    };
    let g = certify_appendix_g_inequality(&grid)?;
    rows.push(row(
        "appendix-g",
        g.points,
        g.min_relative_gap,
        FD_SLACK,
        seed,
        start,
    ));

    let start = Instant::now();
    let sc = certify_curvature_scaling(
        &[-0.25, -1.0, -4.0],
        if full { 10_000 } else { 1_000 },
        10.0,
        seed,
    )?;
    rows.push(row(
        "curvature-scaling",
        sc.samples,
        -sc.max_relative_deviation,
        IDENTITY_TOL,
        seed,
        start,
    ));

    // Karcher certificates at desk scale.
    let start = Instant::now();
    let (n, count, pairs_n) = if full {
        (20, 100, 10_000)
    } else {
        (5, 10, 200)
    };
    let p = generate_spd_dataset(n, count, 1e2, seed, Normalization::Spectral)?;
    let m = *p.manifold();
    let center = p.arithmetic_mean()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = p.spread_from(&center)?;
    let pairs = (0..pairs_n)
        .map(|_| {
            Ok((
                sample_near(&m, &center, radius, &mut rng)?,
                sample_near(&m, &center, radius, &mut rng)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let constants = p.nominal_constants();
    let oracle = p.oracle(false, constants);
    let sc = strong_convexity_certificate(&m, &oracle, &pairs, constants.mu.unwrap())?;
    rows.push(row(
        "karcher-strong-convexity",
        sc.samples,
        sc.min_normalized_slack,
        MODEL_SLACK,
        seed,
        start,
    ));
    let start = Instant::now();
    let sm = smoothness_certificate(&m, &oracle, &pairs, constants.lipschitz_grad.unwrap())?;
    let mut smooth = row(
        "karcher-smoothness-5N",
        sm.samples,
        sm.min_normalized_slack,
        MODEL_SLACK,
        seed,
        start,
    );
    smooth.advisory = true;
    rows.push(smooth);

    let start = Instant::now();
    let fd_n = if full { 100 } else { 10 };
    let mut worst = 0.0f64;
    let mut worst_unbiased = 0.0f64;
    for (x, _) in pairs.iter().take(fd_n) {
        let v = m.random_tangent(x, &mut rng);
        worst = worst.max(gradient_fd_error(&m, &oracle, x, &v, 1e-4)?);
        worst_unbiased = worst_unbiased.max(karcher_unbiasedness_gap(&p, x)?);
    }
    rows.push(row("karcher-gradient-fd", fd_n, -worst, 1e-5, seed, start));
    rows.push(row(
        "karcher-unbiasedness",
        fd_n,
        -worst_unbiased,
        1e-12,
        seed,
        start,
    ));

    let start = Instant::now();
    let h = Hyperbolic::new(3, -1.0)?;
    let fp = FrechetProblem::random(h, 10, 2.0, seed)?;
    let fo = fp.oracle(fp.constants_on_ball(3.0)?);
    let mut worst = 0.0f64;
    let mut worst_unbiased = 0.0f64;
    for _ in 0..fd_n {
        let x = sample_near(&h, &h.origin(), 3.0, &mut rng)?;
        let v = h.random_tangent(&x, &mut rng);
        worst = worst.max(gradient_fd_error(&h, &fo, &x, &v, 1e-4)?);
        worst_unbiased = worst_unbiased.max(frechet_unbiasedness_gap(&fp, &x)?);
    }
    rows.push(row("frechet-gradient-fd", fd_n, -worst, 1e-5, seed, start));
    rows.push(row(
        "frechet-unbiasedness",
        fd_n,
        -worst_unbiased,
        1e-12,
        seed,
        start,
    ));
    Ok(rows)
}

pub fn cert_rows_csv(rows: &[CertRow]) -> String {
    let mut s = String::from("check_name,n_samples,min_residual,max_violation,seed\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.check_name, r.n_samples, r.min_residual, r.max_violation, r.seed
        );
    }
    s
}

pub fn cert_rows_text(rows: &[CertRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let status = match (r.passed, r.advisory) {
            (true, _) => "pass",
            (false, true) => "advisory",
            (false, false) => "FAIL",
        };
        let _ = writeln!(
            s,
            "{status:<8} {:<26} n={:<8} min_residual={:<12.4e} max_violation={:.3e} ({:.2}s)",
            r.check_name, r.n_samples, r.min_residual, r.max_violation, r.seconds
        );
    }
    s
}
