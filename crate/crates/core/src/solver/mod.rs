//! One first-order loop, seven theorem presets.
//!
//! Every method iterates `x_{s+1} = Exp_{x_s}(-η_s g_s)`; they differ only in the
//! step schedule, in how the running average `x̄_s` is maintained and in whether
//! the oracle is stochastic. A [`SolverPreset`] fixes these for one theorem and
//! [`run`] executes it.

mod schedule;
mod trace;

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::manifold::{average_step, Manifold, Tangent};
use crate::trig::zeta;

pub use schedule::{
    averaging_t6_weight, schedule_t1, schedule_t2, schedule_t3t4, schedule_t5t7, schedule_t6,
    theoretical_bound,
};
pub use trace::{check_descent, DescentReport, RunRecord, RunTrace, TraceMeta};

/// Problem constants a preset may need. Units follow the objective.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Constants {
    /// Lipschitz constant of `f`.
    pub lipschitz_f: Option<f64>,
    /// Lipschitz constant of the gradient.
    pub lipschitz_grad: Option<f64>,
    /// Strong convexity modulus.
    pub mu: Option<f64>,
    /// Bound on the root mean square of stochastic gradient norms.
    pub grad_bound: Option<f64>,
    /// Root variance of the stochastic gradient.
    pub sigma: Option<f64>,
    /// Diameter bound on the region the iterates and the minimizer occupy.
    pub diameter: Option<f64>,
}

impl Constants {
    /// `key=value` pairs of the constants that are set.
    pub fn describe(&self) -> String {
        let fields = [
            ("D", self.diameter),
            ("L_f", self.lipschitz_f),
            ("L_g", self.lipschitz_grad),
            ("mu", self.mu),
            ("G", self.grad_bound),
            ("sigma", self.sigma),
        ];
        fields
            .iter()
            .filter_map(|(k, v)| v.map(|v| format!("{k}={v}")))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Access to values and (sub)gradients of an objective on a manifold.
pub trait FirstOrderOracle<M: Manifold>: Sync {
    fn value(&self, m: &M, x: &M::Point) -> Result<f64>;

    /// A (sub)gradient at `x`. Deterministic oracles ignore `rng`.
    fn gradient(
        &self,
        m: &M,
        x: &M::Point,
        rng: &mut dyn RngCore,
    ) -> Result<Tangent<M::Point, M::Vector>>;

    fn is_deterministic(&self) -> bool;

    fn constants(&self) -> Constants;

    /// Short label used in trace metadata.
    fn describe(&self) -> String;
}

/// The seven analyzed method configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TheoremId {
    /// Subgradient, g-convex Lipschitz.
    T1,
    /// Stochastic subgradient, g-convex.
    T2,
    /// Subgradient, strongly g-convex Lipschitz.
    T3,
    /// Stochastic subgradient, strongly g-convex.
    T4,
    /// Gradient descent, g-convex smooth.
    T5,
    /// Stochastic gradient, g-convex smooth with bounded variance.
    T6,
    /// Gradient descent, strongly g-convex smooth.
    T7,
}

impl TheoremId {
    pub const ALL: [TheoremId; 7] = [
        TheoremId::T1,
        TheoremId::T2,
        TheoremId::T3,
        TheoremId::T4,
        TheoremId::T5,
        TheoremId::T6,
        TheoremId::T7,
    ];

    pub fn averaging(self) -> Averaging {
        match self {
            TheoremId::T1 | TheoremId::T2 => Averaging::UniformStream,
            TheoremId::T3 | TheoremId::T4 => Averaging::Weighted2s,
            TheoremId::T5 | TheoremId::T7 => Averaging::LastIterate,
            TheoremId::T6 => Averaging::SmoothStochasticTail,
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, TheoremId::T2 | TheoremId::T4 | TheoremId::T6)
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = TheoremId::ALL.iter().position(|t| t == self).unwrap() + 1;
        write!(f, "T{i}")
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let idx = s
            .trim()
            .trim_start_matches(['T', 't'])
            .parse::<usize>()
            .ok()
            .filter(|i| (1..=7).contains(i))
            .ok_or_else(|| Error::Config(format!("unknown theorem id `{s}`")))?;
        Ok(TheoremId::ALL[idx - 1])
    }
}

/// How the designated output is formed from the iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    /// `x̄_{s+1} = Exp_{x̄_s}(1/(s+1) · Exp⁻¹_{x̄_s}(x_{s+1}))`: in flat space the
    /// arithmetic mean of `x_1..x_t`.
    UniformStream,
    /// `x̄_{s+1} = Exp_{x̄_s}(2/(s+2) · Exp⁻¹_{x̄_s}(x_{s+1}))`: in flat space the
    /// mean of `x_1..x_t` with weights `2s/(t(t+1))`.
    Weighted2s,
    /// No averaging; the last iterate is the output.
    LastIterate,
    /// Uniform average of `x_2..x_{t-1}` followed by a `ζ/(ζ+t-2)` step to `x_t`.
    SmoothStochasticTail,
}

impl Averaging {
    /// Weight that produces `x̄_{s+1}` from `x̄_s` and `x_{s+1}`.
    pub fn weight(self, s: usize, t: usize, zeta_d: f64) -> Result<Option<f64>> {
        let sf = s as f64;
        Ok(match self {
            Averaging::UniformStream => Some(1.0 / (sf + 1.0)),
            Averaging::Weighted2s => Some(2.0 / (sf + 2.0)),
            Averaging::LastIterate => None,
            Averaging::SmoothStochasticTail => Some(averaging_t6_weight(s, t, zeta_d)?),
        })
    }
}

/// Step size as a function of the iteration index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// `η_s = 2 / (μ (s + 1))`.
    InverseLinear {
        mu: f64,
    },
}

impl StepSchedule {
    pub fn eta(&self, s: usize) -> f64 {
        match *self {
            StepSchedule::Constant(eta) => eta,
            StepSchedule::InverseLinear { mu } => 2.0 / (mu * (s as f64 + 1.0)),
        }
    }
}

impl fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSchedule::Constant(eta) => write!(f, "constant({eta})"),
            StepSchedule::InverseLinear { mu } => write!(f, "2/(mu(s+1)) mu={mu}"),
        }
    }
}

/// A theorem's method, resolved against concrete constants and a horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverPreset {
    pub theorem: TheoremId,
    pub step_schedule: StepSchedule,
    pub averaging: Averaging,
    pub horizon: usize,
    /// `ζ(κ, D)` when a diameter is known; needed by tail averaging.
    pub zeta_d: Option<f64>,
}

fn required(v: Option<f64>, name: &'static str) -> Result<f64> {
    v.ok_or(Error::MissingConstant(name))
}

impl SolverPreset {
    /// Builds the theorem's schedule from `constants` and the curvature bound.
    pub fn new(
        theorem: TheoremId,
        horizon: usize,
        constants: &Constants,
        kappa: f64,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        let zeta_d = constants.diameter.map(|d| zeta(kappa, d)).transpose()?;
        let step_schedule = match theorem {
            TheoremId::T1 => StepSchedule::Constant(schedule_t1(
                required(constants.diameter, "D")?,
                required(constants.lipschitz_f, "L_f")?,
                zeta_d.unwrap(),
                horizon,
            )?),
            TheoremId::T2 => StepSchedule::Constant(schedule_t2(
                required(constants.diameter, "D")?,
                required(constants.grad_bound, "G")?,
                zeta_d.unwrap(),
                horizon,
            )?),
            TheoremId::T3 | TheoremId::T4 => {
                let mu = required(constants.mu, "mu")?;
                schedule_t3t4(1, mu)?;
                StepSchedule::InverseLinear { mu }
            }
            TheoremId::T5 | TheoremId::T7 => {
                StepSchedule::Constant(schedule_t5t7(required(constants.lipschitz_grad, "L_g")?)?)
            }
            TheoremId::T6 => {
                if horizon < 2 {
                    return Err(Error::Config(
                        "tail averaging needs a horizon of at least 2".into(),
                    ));
                }
                StepSchedule::Constant(schedule_t6(
                    required(constants.lipschitz_grad, "L_g")?,
                    required(constants.diameter, "D")?,
                    required(constants.sigma, "sigma")?,
                    zeta_d.unwrap(),
                    horizon,
                )?)
            }
        };
        Ok(Self {
            theorem,
            step_schedule,
            averaging: theorem.averaging(),
            horizon,
            zeta_d,
        })
    }
}

/// A read-only view of the state passed to [`RunOptions::observer`] once per iteration.
pub struct IterateView<'a, M: Manifold> {
    pub s: usize,
    pub x: &'a M::Point,
    pub average: Option<&'a M::Point>,
    pub gradient: &'a Tangent<M::Point, M::Vector>,
    pub eta: f64,
}

pub type Observer<'a, M> = &'a mut dyn FnMut(&IterateView<'_, M>);

/// Optional extras for [`run_with`].
pub struct RunOptions<'a, M: Manifold> {
    /// Point for the `dist_to_ref` column, filled at evaluated iterations.
    pub reference: Option<&'a M::Point>,
    pub observer: Option<Observer<'a, M>>,
    /// Iterations at which `f(x_s)` and `f(x̄_s)` are evaluated; all when unset.
    /// The final iteration is always evaluated.
    pub evaluate: Option<&'a dyn Fn(usize) -> bool>,
}

impl<M: Manifold> Default for RunOptions<'_, M> {
    fn default() -> Self {
        Self {
            reference: None,
            observer: None,
            evaluate: None,
        }
    }
}

/// Result of a run: the trace and the two candidate outputs.
#[derive(Debug, Clone)]
pub struct RunOutput<P> {
    pub trace: RunTrace,
    pub last: P,
    pub average: Option<P>,
}

impl<P> RunOutput<P> {
    /// The point each theorem makes its claim about.
    pub fn designated(&self) -> &P {
        self.average.as_ref().unwrap_or(&self.last)
    }
}

/// Runs `preset` from `x1` with RNG seed `seed`.
pub fn run<M: Manifold, O: FirstOrderOracle<M> + ?Sized>(
    preset: &SolverPreset,
    oracle: &O,
    m: &M,
    x1: &M::Point,
    seed: u64,
) -> Result<RunOutput<M::Point>> {
    run_with(preset, oracle, m, x1, seed, RunOptions::default())
}

/// [`run`] with a reference point and an observer.
///
/// Iteration `s = 1..=t` evaluates the oracle at `x_s`, records the row and,
/// for `s < t`, moves to `x_{s+1}` and updates the running average to `x̄_{s+1}`.
/// The trace therefore holds exactly `t` rows and the outputs are `x_t` and `x̄_t`.
pub fn run_with<M: Manifold, O: FirstOrderOracle<M> + ?Sized>(
    preset: &SolverPreset,
    oracle: &O,
    m: &M,
    x1: &M::Point,
    seed: u64,
    mut opts: RunOptions<'_, M>,
) -> Result<RunOutput<M::Point>> {
    m.check_point(x1)?;
    let t = preset.horizon;
    let zeta_d = preset.zeta_d.unwrap_or(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = x1.clone();
    let mut avg = match preset.averaging {
        Averaging::LastIterate => None,
        _ => Some(x1.clone()),
    };
    let mut records = Vec::with_capacity(t);

    for s in 1..=t {
        let evaluated = s == t || opts.evaluate.is_none_or(|e| e(s));
        let (f_x, f_avg) = if evaluated {
            let f_x = oracle.value(m, &x)?;
            if !f_x.is_finite() {
                return Err(Error::Numerical {
                    iteration: s,
                    what: format!("objective is {f_x}"),
                });
            }
            let f_avg = avg.as_ref().map(|a| oracle.value(m, a)).transpose()?;
            (Some(f_x), f_avg)
        } else {
            (None, None)
        };
        let g = oracle.gradient(m, &x, &mut rng)?;
        let grad_norm = m.norm(&x, &g)?;
        if !grad_norm.is_finite() {
            return Err(Error::Numerical {
                iteration: s,
                what: format!("gradient norm is {grad_norm}"),
            });
        }
        let eta = preset.step_schedule.eta(s);
        let dist_to_ref = match opts.reference {
            Some(r) if evaluated => Some(m.distance(&x, r)?),
            _ => None,
        };
        records.push(RunRecord {
            s,
            f_x,
            f_avg,
            eta,
            grad_norm,
            dist_to_ref,
        });
        if let Some(obs) = opts.observer.as_mut() {
            obs(&IterateView {
                s,
                x: &x,
                average: avg.as_ref(),
                gradient: &g,
                eta,
            });
        }
        if s == t {
            break;
        }
        let next = m
            .exp_map(&x, &m.scale(&g, -eta))
            .map_err(|e| Error::Numerical {
                iteration: s,
                what: e.to_string(),
            })?;
        if let Some(a) = avg.as_mut() {
            let w = preset
                .averaging
                .weight(s, t, zeta_d)?
                .expect("averaging presets have weights");
            *a = average_step(m, a, &next, w)?;
        }
        x = next;
    }

    let trace = RunTrace {
        meta: TraceMeta {
            theorem: preset.theorem,
            schedule: preset.step_schedule.to_string(),
            horizon: t,
            seed,
            problem: oracle.describe(),
            geometry: m.descriptor().to_string(),
            kappa: m.kappa_lower(),
            constants: oracle.constants(),
            f_star: None,
        },
        records,
    };
    Ok(RunOutput {
        trace,
        last: x,
        average: avg,
    })
}
