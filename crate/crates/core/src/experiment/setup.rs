//! Builds problem instances from a configuration and runs single replicates.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, ProblemKind, MAX_DESK_CONDITION};
use crate::error::{Error, Result};
use crate::manifold::{Hyperbolic, HyperbolicPoint, Manifold, Spd, SpdPoint, DEFAULT_SPD_KAPPA};
use crate::problems::{
    generate_spd_dataset, lipschitz_distance_objective, reference_solution, DistanceObjective,
    EuclideanQuadratic, FrechetProblem, KarcherProblem, NoisyOracle, DEFAULT_MAX_ITER,
};
use crate::solver::{
    run_with, Constants, FirstOrderOracle, RunOptions, RunTrace, SolverPreset, TheoremId,
};

/// Curvature used for hyperbolic problems unless configured.
pub const DEFAULT_HYPERBOLIC_KAPPA: f64 = -1.0;
/// Anchors of generated Fréchet problems lie within this distance of the origin.
pub const FRECHET_ANCHOR_RADIUS: f64 = 1.0;
/// Default noise length for stochastic methods on the verification problems.
pub const DEFAULT_NOISE: f64 = 0.5;

#[allow(clippy::large_enum_variant)]
enum Data {
    Karcher {
        problem: KarcherProblem,
        x1: SpdPoint,
        x_star: SpdPoint,
    },
    Frechet {
        problem: FrechetProblem,
        x1: HyperbolicPoint,
        x_star: HyperbolicPoint,
    },
    Quadratic {
        objective: EuclideanQuadratic,
        x1: DVector<f64>,
    },
    Distance {
        objective: DistanceObjective<Hyperbolic>,
        x1: HyperbolicPoint,
    },
}

/// A configured problem with its start point, constants and reference optimum.
pub struct Instance {
    data: Data,
    pub kind: ProblemKind,
    /// Constants for deterministic methods; stochastic methods get theirs from
    /// the oracle they run with.
    pub constants: Constants,
    pub kappa: f64,
    /// `f(x*)`.
    pub f_star: f64,
    /// Oracle calls per pass through the data for stochastic methods.
    pub samples_per_pass: usize,
    pub noise: f64,
    /// Human-readable notes for summaries (substitutions, estimated constants).
    pub notes: Vec<String>,
    /// Radius about the center within which `constants` are certified.
    pub region: Option<f64>,
}

/// Result of one seeded run.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub trace: RunTrace,
    /// Largest distance from an iterate or running average to `x*`.
    pub max_dist_to_opt: f64,
    /// Largest distance from an iterate or running average to the problem center.
    pub max_dist_to_center: f64,
}

fn random_direction_point(
    m: &Hyperbolic,
    dist: f64,
    rng: &mut ChaCha8Rng,
) -> Result<HyperbolicPoint> {
    let o = m.origin();
    let v = m.random_tangent(&o, rng);
    let len = m.norm(&o, &v)?;
    m.exp_map(&o, &m.scale(&v, dist / len))
}

impl Instance {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let mut notes = Vec::new();
        let mut start_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EE_D0F5_7A27);
        let noise = cfg.noise.unwrap_or(DEFAULT_NOISE);
        match cfg.problem {
            ProblemKind::Karcher => {
                let mut q = cfg.condition;
                if q > MAX_DESK_CONDITION {
                    notes.push(format!(
                        "requested Q={q:e} replaced by Q={MAX_DESK_CONDITION:e} for conditioning of the reference solve"
                    ));
                    q = MAX_DESK_CONDITION;
                }
                notes.push(format!(
                    "desk scale n={} N={} Q={q:e}; full-scale Q=1e8 is replaced by at most Q=1e4",
                    cfg.n, cfg.count
                ));
                let kappa = cfg.kappa.unwrap_or(DEFAULT_SPD_KAPPA);
                let problem =
                    generate_spd_dataset(cfg.n, cfg.count, q, cfg.seed, cfg.normalization)?
                        .with_manifold(Spd::with_kappa(cfg.n, kappa)?)?;
                let x1 = problem.arithmetic_mean()?;
                let m = *problem.manifold();
                let r = problem.spread_from(&x1)?;
                let nn = problem.len() as f64;
                let diameter = match cfg.diameter {
                    Some(d) => d,
                    None => {
                        notes.push(format!(
                            "D = 2 max_i d(X_1, A_i) = {} (ball about X_1 holding the data and X*)",
                            2.0 * r
                        ));
                        2.0 * r
                    }
                };
                // Second moments of the single-sample gradients at the start.
                let full = problem.full_gradient(&x1)?;
                let mut second = 0.0;
                let mut var = 0.0;
                for i in 0..problem.len() {
                    let g = problem.sample_gradient(&x1, i)?;
                    second += m.inner(&x1, &g, &g)?;
                    let diff = m.add(&g, &m.scale(&full, -1.0))?;
                    var += m.inner(&x1, &diff, &diff)?;
                }
                let constants = Constants {
                    diameter: Some(diameter),
                    lipschitz_f: Some(4.0 * nn * r),
                    grad_bound: Some((second / nn).sqrt()),
                    sigma: Some((var / nn).sqrt()),
                    ..problem.nominal_constants()
                };
                notes.push(format!(
                    "mu=2N, L_g=5N; G and sigma estimated from the sample gradients at X_1: {}",
                    constants.describe()
                ));
                let reference = reference_solution(
                    &m,
                    &problem.oracle(false, constants),
                    &problem.default_starts()?,
                    cfg.tol,
                    DEFAULT_MAX_ITER,
                )?;
                Ok(Self {
                    kind: cfg.problem,
                    constants,
                    kappa,
                    f_star: reference.value,
                    samples_per_pass: problem.len(),
                    noise: 0.0,
                    notes,
                    region: None,
                    data: Data::Karcher {
                        problem,
                        x1,
                        x_star: reference.point,
                    },
                })
            }
            ProblemKind::Frechet => {
                let kappa = cfg.kappa.unwrap_or(DEFAULT_HYPERBOLIC_KAPPA);
                let m = Hyperbolic::new(cfg.n, kappa)?;
                let problem =
                    FrechetProblem::random(m, cfg.count, FRECHET_ANCHOR_RADIUS, cfg.seed)?;
                let region = cfg.diameter.unwrap_or(4.0) / 2.0;
                if region < 1.5 * FRECHET_ANCHOR_RADIUS {
                    return Err(Error::Config(format!(
                        "D must be at least {} to contain the start point",
                        3.0 * FRECHET_ANCHOR_RADIUS
                    )));
                }
                let constants = problem.constants_on_ball(region)?;
                let x1 = random_direction_point(&m, 1.5 * FRECHET_ANCHOR_RADIUS, &mut start_rng)?;
                let starts = vec![m.origin(), problem.anchors()[0].clone(), x1.clone()];
                let reference = reference_solution(
                    &m,
                    &problem.oracle(constants),
                    &starts,
                    cfg.tol,
                    DEFAULT_MAX_ITER,
                )?;
                Ok(Self {
                    kind: cfg.problem,
                    constants,
                    kappa,
                    f_star: reference.value,
                    samples_per_pass: 1,
                    noise,
                    notes,
                    region: Some(region),
                    data: Data::Frechet {
                        problem,
                        x1,
                        x_star: reference.point,
                    },
                })
            }
            ProblemKind::EuclideanQuad => {
                let n = cfg.n;
                let weights = DVector::from_fn(n, |i, _| {
                    if n == 1 {
                        1.0
                    } else {
                        cfg.condition.powf(i as f64 / (n - 1) as f64)
                    }
                });
                let d = cfg.diameter.unwrap_or(2.0);
                let objective =
                    EuclideanQuadratic::new(weights, DVector::zeros(n))?.with_diameter(d);
                let dir = DVector::from_fn(n, |_, _| {
                    start_rng.sample::<f64, _>(rand_distr::StandardNormal)
                });
                let x1 = dir.normalize() * (d / 2.0);
                Ok(Self {
                    kind: cfg.problem,
                    constants: objective.constants(),
                    kappa: 0.0,
                    f_star: 0.0,
                    samples_per_pass: 1,
                    noise,
                    notes,
                    region: None,
                    data: Data::Quadratic { objective, x1 },
                })
            }
            ProblemKind::HyperbolicDist => {
                let kappa = cfg.kappa.unwrap_or(DEFAULT_HYPERBOLIC_KAPPA);
                let m = Hyperbolic::new(cfg.n, kappa)?;
                let d = cfg.diameter.unwrap_or(3.0);
                let objective = lipschitz_distance_objective(m, m.origin(), d)?;
                let x1 = random_direction_point(&m, d / 2.0, &mut start_rng)?;
                Ok(Self {
                    kind: cfg.problem,
                    constants: objective.constants(),
                    kappa,
                    f_star: 0.0,
                    samples_per_pass: 1,
                    noise,
                    notes,
                    region: None,
                    data: Data::Distance { objective, x1 },
                })
            }
        }
    }

    /// Oracle calls that make up one pass for `theorem`.
    pub fn samples_per_pass(&self, theorem: TheoremId) -> usize {
        if theorem.is_stochastic() {
            self.samples_per_pass
        } else {
            1
        }
    }

    pub fn describe(&self) -> String {
        match &self.data {
            Data::Karcher { problem, .. } => problem.describe(),
            Data::Frechet { problem, .. } => problem.oracle(self.constants).describe(),
            Data::Quadratic { objective, .. } => objective.describe(),
            Data::Distance { objective, .. } => objective.describe(),
        }
    }

    /// Constants the preset for `theorem` is built from.
    pub fn constants_for(&self, theorem: TheoremId) -> Constants {
        if !theorem.is_stochastic() || self.kind == ProblemKind::Karcher {
            return self.constants;
        }
        Constants {
            sigma: Some(self.noise),
            grad_bound: self.constants.lipschitz_f.map(|l| l.hypot(self.noise)),
            ..self.constants
        }
    }

    /// Runs `theorem` for `horizon` iterations with run seed `seed`.
    pub fn run(
        &self,
        theorem: TheoremId,
        horizon: usize,
        seed: u64,
        evaluate: Option<&dyn Fn(usize) -> bool>,
        track_distances: bool,
    ) -> Result<Replicate> {
        let stochastic = theorem.is_stochastic();
        let mut rep = match &self.data {
            Data::Karcher {
                problem,
                x1,
                x_star,
            } => {
                let oracle = problem.oracle(stochastic, self.constants);
                drive(
                    problem.manifold(),
                    &oracle,
                    x1,
                    x_star,
                    None,
                    self,
                    theorem,
                    horizon,
                    seed,
                    evaluate,
                    track_distances,
                )
            }
            Data::Frechet {
                problem,
                x1,
                x_star,
            } => {
                let m = problem.manifold();
                let base = problem.oracle(self.constants);
                if stochastic {
                    let o = NoisyOracle::new(base, self.noise);
                    drive(
                        m,
                        &o,
                        x1,
                        x_star,
                        Some(problem.center()),
                        self,
                        theorem,
                        horizon,
                        seed,
                        evaluate,
                        track_distances,
                    )
                } else {
                    drive(
                        m,
                        &base,
                        x1,
                        x_star,
                        Some(problem.center()),
                        self,
                        theorem,
                        horizon,
                        seed,
                        evaluate,
                        track_distances,
                    )
                }
            }
            Data::Quadratic { objective, x1 } => {
                let m = objective.manifold();
                let x_star = objective.center().clone();
                if stochastic {
                    let o = NoisyOracle::new(objective.clone(), self.noise);
                    drive(
                        &m,
                        &o,
                        x1,
                        &x_star,
                        None,
                        self,
                        theorem,
                        horizon,
                        seed,
                        evaluate,
                        track_distances,
                    )
                } else {
                    drive(
                        &m,
                        objective,
                        x1,
                        &x_star,
                        None,
                        self,
                        theorem,
                        horizon,
                        seed,
                        evaluate,
                        track_distances,
                    )
                }
            }
            Data::Distance { objective, x1 } => {
                let m = objective.manifold();
                let x_star = objective.center().clone();
                if stochastic {
                    let o = NoisyOracle::new(objective.clone(), self.noise);
                    drive(
                        m,
                        &o,
                        x1,
                        &x_star,
                        None,
                        self,
                        theorem,
                        horizon,
                        seed,
                        evaluate,
                        track_distances,
                    )
                } else {
                    drive(
                        m,
                        objective,
                        x1,
                        &x_star,
                        None,
                        self,
                        theorem,
                        horizon,
                        seed,
                        evaluate,
                        track_distances,
                    )
                }
            }
        }?;
        rep.trace.meta.f_star = Some(self.f_star);
        Ok(rep)
    }
}

#[allow(clippy::too_many_arguments)]
fn drive<M: Manifold, O: FirstOrderOracle<M>>(
    m: &M,
    oracle: &O,
    x1: &M::Point,
    x_star: &M::Point,
    center: Option<&M::Point>,
    inst: &Instance,
    theorem: TheoremId,
    horizon: usize,
    seed: u64,
    evaluate: Option<&dyn Fn(usize) -> bool>,
    track: bool,
) -> Result<Replicate> {
    let preset = SolverPreset::new(theorem, horizon, &oracle.constants(), inst.kappa)?;
    let mut max_opt = 0.0f64;
    let mut max_center = 0.0f64;
    let mut failure = None;
    let mut observe = |v: &crate::solver::IterateView<'_, M>| {
        if !track || failure.is_some() {
            return;
        }
        let mut step = || -> Result<()> {
            for p in std::iter::once(v.x).chain(v.average) {
                max_opt = max_opt.max(m.distance(p, x_star)?);
                if let Some(c) = center {
                    max_center = max_center.max(m.distance(p, c)?);
                }
            }
            Ok(())
        };
        if let Err(e) = step() {
            failure = Some(e);
        }
    };
    let out = run_with(
        &preset,
        oracle,
        m,
        x1,
        seed,
        RunOptions {
            reference: Some(x_star),
            observer: Some(&mut observe),
            evaluate,
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Replicate {
        trace: out.trace,
        max_dist_to_opt: max_opt,
        max_dist_to_center: max_center,
    })
}
