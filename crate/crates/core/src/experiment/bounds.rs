use std::fmt::Write as _;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ProblemKind};
use super::setup::Instance;
use super::with_jobs;
use crate::error::{Error, Result};
use crate::solver::{theoretical_bound, TheoremId};

/// Gaps within this many units of `1 + |f*|` of zero are below what two
/// floating-point objective values can resolve.
pub const GAP_RESOLUTION: f64 = 16.0 * f64::EPSILON;

/// Slack factor on expectation bounds checked through seed means.
pub const EXPECTATION_SLACK: f64 = 1.05;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub t: usize,
    /// Gap of the designated output, or its mean over seeds for stochastic methods.
    pub measured: f64,
    pub bound: f64,
    /// `bound` times the expectation slack for stochastic methods.
    pub allowed: f64,
    pub seeds: usize,
    /// Largest distance from an iterate or average to `x*` over the runs.
    pub max_dist_to_opt: f64,
    /// Largest distance to the problem center, when constants are certified on a ball.
    pub max_dist_to_center: Option<f64>,
    pub satisfied: bool,
    /// `false` when the runs left the region the constants were certified on.
    pub preconditions_hold: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub theorem: TheoremId,
    pub problem: String,
    pub kappa: f64,
    pub rows: Vec<BoundRow>,
    /// Set when a constant comes from configuration rather than construction, so
    /// a violation is reported but not counted as a failure.
    pub advisory: Option<String>,
}

impl BoundsReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| !r.satisfied).count()
    }

    /// `true` unless a non-advisory bound was violated.
    pub fn passed(&self) -> bool {
        self.advisory.is_some() || self.violations() == 0
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} on {} (kappa={})\n{:>7} {:>14} {:>14} {:>6} {:>10} {:>9}\n",
            self.theorem,
            self.problem,
            self.kappa,
            "t",
            "measured",
            "bound",
            "seeds",
            "max_dist",
            "satisfied"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>7} {:>14.6e} {:>14.6e} {:>6} {:>10.4} {:>9}",
                r.t,
                r.measured,
                r.bound,
                r.seeds,
                r.max_dist_to_opt,
                if r.satisfied { "yes" } else { "NO" }
            );
        }
        if let Some(a) = &self.advisory {
            let _ = writeln!(s, "advisory: {a}");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("theorem,t,measured,bound,allowed,seeds,max_dist_to_opt,max_dist_to_center,preconditions_hold,satisfied\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                self.theorem,
                r.t,
                r.measured,
                r.bound,
                r.allowed,
                r.seeds,
                r.max_dist_to_opt,
                r.max_dist_to_center
                    .map(|d| d.to_string())
                    .unwrap_or_default(),
                r.preconditions_hold,
                r.satisfied
            );
        }
        s
    }
}

/// Gap of the designated output at iteration `t` of each replicate.
struct Sample {
    gap: f64,
    max_opt: f64,
    max_center: f64,
}

/// Runs `cfg.algo` to every checkpoint and compares the measured suboptimality
/// with the theorem's bound.
///
/// Deterministic methods use one run; stochastic methods average the gap over
/// `cfg.repeat` seeds and allow the mean 5% above the bound. Methods whose step
/// size depends on the horizon get a separate run per checkpoint.
pub fn verify_bounds(cfg: &ExperimentConfig) -> Result<BoundsReport> {
    let inst = Instance::build(cfg)?;
    let theorem = cfg.algo;
    let mut checkpoints = cfg.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    if checkpoints.is_empty() || checkpoints[0] == 0 {
        return Err(Error::Config("checkpoints must be positive".into()));
    }
    let seeds = if theorem.is_stochastic() {
        cfg.repeat
    } else {
        1
    };
    let constants = inst.constants_for(theorem);
    let floor = super::resolution_floor(inst.f_star);
    let horizon_dependent = matches!(theorem, TheoremId::T1 | TheoremId::T2 | TheoremId::T6);
    let t_max = *checkpoints.last().unwrap();

    let samples: Vec<Vec<Sample>> = with_jobs(cfg.jobs, || -> Result<Vec<Vec<Sample>>> {
        if horizon_dependent {
            checkpoints
                .iter()
                .map(|&t| {
                    (0..seeds)
                        .into_par_iter()
                        .map(|r| {
                            let eval = |s: usize| s == t;
                            let rep =
                                inst.run(theorem, t, cfg.seed + r as u64, Some(&eval), true)?;
                            let f = rep.trace.gaps().unwrap().last().unwrap().1;
                            Ok(Sample {
                                gap: f,
                                max_opt: rep.max_dist_to_opt,
                                max_center: rep.max_dist_to_center,
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect()
        } else {
            let per_seed = (0..seeds)
                .into_par_iter()
                .map(|r| {
                    let eval = |s: usize| checkpoints.binary_search(&s).is_ok();
                    let rep = inst.run(theorem, t_max, cfg.seed + r as u64, Some(&eval), true)?;
                    let gaps = rep.trace.gaps().unwrap();
                    Ok(checkpoints
                        .iter()
                        .map(|&t| Sample {
                            gap: gaps
                                .iter()
                                .find(|g| g.0 == t)
                                .expect("checkpoint evaluated")
                                .1,
                            max_opt: rep.max_dist_to_opt,
                            max_center: rep.max_dist_to_center,
                        })
                        .collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?;
            // Transpose to checkpoint-major order.
            let mut by_t: Vec<Vec<Sample>> = checkpoints.iter().map(|_| Vec::new()).collect();
            for seed_samples in per_seed {
                for (i, s) in seed_samples.into_iter().enumerate() {
                    by_t[i].push(s);
                }
            }
            Ok(by_t)
        }
    })??;

    let diameter = constants.diameter.ok_or(Error::MissingConstant("D"))?;
    let mut rows = Vec::with_capacity(checkpoints.len());
    for (&t, group) in checkpoints.iter().zip(&samples) {
        let bound = theoretical_bound(theorem, &constants, inst.kappa, t)?;
        let allowed = if theorem.is_stochastic() {
            bound * EXPECTATION_SLACK
        } else {
            bound
        };
        let measured = group.iter().map(|s| s.gap).sum::<f64>() / group.len() as f64;
        let max_opt = group.iter().map(|s| s.max_opt).fold(0.0, f64::max);
        let max_center = inst
            .region
            .map(|_| group.iter().map(|s| s.max_center).fold(0.0, f64::max));
        let preconditions_hold = max_opt <= diameter
            && match (inst.region, max_center) {
                (Some(r), Some(c)) => c <= r,
                _ => true,
            };
        rows.push(BoundRow {
            t,
            measured,
            bound,
            allowed,
            seeds: group.len(),
            max_dist_to_opt: max_opt,
            max_dist_to_center: max_center,
            satisfied: preconditions_hold && measured <= allowed + floor,
            preconditions_hold,
        });
    }
    let advisory = (inst.kind == ProblemKind::Karcher).then(|| {
        format!(
            "SPD curvature bound kappa={} and L_g=5N are configured estimates, not certified constants",
            inst.kappa
        )
    });
    Ok(BoundsReport {
        theorem,
        problem: inst.describe(),
        kappa: inst.kappa,
        rows,
        advisory,
    })
}
