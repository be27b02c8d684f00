//! Seeded experiments, rate fits and bound verification on configured problems.

mod bounds;
mod config;
mod figure;
mod fit;
mod setup;
mod suite;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

pub use bounds::{verify_bounds, BoundRow, BoundsReport, GAP_RESOLUTION};
pub use config::{
    algo_name, parse_algo, ExperimentConfig, ProblemKind, ALIASES, DEFAULT_CHECKPOINTS,
    MAX_DESK_CONDITION, SGD_ST_STEP_NOTE,
};
pub use figure::{
    reproduce_figure, FigureCurve, FigureReport, FIGURE_PASSES, GD_MIN_R2, SGD_SM_SLOPE,
    SGD_ST_SLOPE, SWEEP_POINTS,
};
pub use fit::{fit_rate, RateFit, RateModel};
pub use setup::{
    Instance, Replicate, DEFAULT_HYPERBOLIC_KAPPA, DEFAULT_NOISE, FRECHET_ANCHOR_RADIUS,
};
pub use suite::{cert_rows_csv, cert_rows_text, certify_suite, CertRow, CertifyScale};

use crate::error::{Error, Result};
use crate::solver::{RunTrace, TheoremId};

/// Runs `f` on a pool of `jobs` threads (all cores when 0).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// The fit each method's rate claim is judged by, with its window.
pub fn default_fit(theorem: TheoremId, t: usize) -> (RateModel, (f64, f64)) {
    match theorem {
        TheoremId::T7 => (RateModel::SemiLog, (1.0, t as f64)),
        _ => (RateModel::LogLog, ((t as f64 / 10.0).max(1.0), t as f64)),
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub seed: u64,
    pub final_f: f64,
    pub final_gap: f64,
    pub fit: Option<RateFit>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub theorem: TheoremId,
    pub f_star: f64,
    pub traces: Vec<RunTrace>,
    pub summaries: Vec<RunSummary>,
    /// `(s, mean gap over seeds)` at evaluated iterations, for repeated runs.
    pub mean_gap: Option<Vec<(usize, f64)>>,
    pub mean_gap_fit: Option<RateFit>,
    pub notes: Vec<String>,
    pub samples_per_pass: usize,
    pub horizon: usize,
}

/// Iterations at which an experiment evaluates the objective: every pass for
/// stochastic methods on sampled data, otherwise about a thousand log-spaced
/// and evenly spaced points.
pub fn evaluation_stride(samples_per_pass: usize, t: usize) -> usize {
    if samples_per_pass > 1 {
        samples_per_pass
    } else {
        (t / 1000).max(1)
    }
}

pub fn resolution_floor(f_star: f64) -> f64 {
    GAP_RESOLUTION * (1.0 + f_star.abs())
}

fn fit_points(gaps: &[(usize, f64)], per_pass: usize) -> Vec<(f64, f64)> {
    gaps.iter()
        .map(|&(s, g)| (s as f64 / per_pass as f64, g))
        .collect()
}

/// Runs `cfg.repeat` seeded replicates (run seeds `seed, seed+1, …`) of the
/// configured method and fits each gap curve.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let inst = Instance::build(cfg)?;
    let theorem = cfg.algo;
    let t = cfg.horizon;
    let per_pass = inst.samples_per_pass(theorem);
    let stride = evaluation_stride(per_pass, t);
    let evaluate = move |s: usize| s <= 10 || s.is_multiple_of(stride);
    let reps = with_jobs(cfg.jobs, || {
        (0..cfg.repeat)
            .into_par_iter()
            .map(|r| inst.run(theorem, t, cfg.seed + r as u64, Some(&evaluate), false))
            .collect::<Result<Vec<_>>>()
    })??;
    let (model, window_iters) = default_fit(theorem, t);
    let window = (
        window_iters.0 / per_pass as f64,
        window_iters.1 / per_pass as f64,
    );
    let floor = resolution_floor(inst.f_star);
    let mut notes = inst.notes.clone();
    if theorem == TheoremId::T4 && inst.kind == ProblemKind::Karcher {
        notes.push(config::SGD_ST_STEP_NOTE.into());
    }
    let mut summaries = Vec::with_capacity(reps.len());
    for rep in &reps {
        let last = rep.trace.last();
        let final_f = last
            .f_avg
            .or(last.f_x)
            .expect("final iteration is evaluated");
        let gaps = rep.trace.gaps().expect("instances attach f_star");
        let fit = if t > 1 {
            fit_rate(&fit_points(&gaps, per_pass), model, window, floor).ok()
        } else {
            None
        };
        summaries.push(RunSummary {
            seed: rep.trace.meta.seed,
            final_f,
            final_gap: final_f - inst.f_star,
            fit,
        });
    }
    let (mean_gap, mean_gap_fit) = if reps.len() > 1 {
        let all: Vec<Vec<(usize, f64)>> = reps.iter().map(|r| r.trace.gaps().unwrap()).collect();
        let mean: Vec<(usize, f64)> = (0..all[0].len())
            .map(|i| {
                let s = all[0][i].0;
                (
                    s,
                    all.iter().map(|g| g[i].1).sum::<f64>() / all.len() as f64,
                )
            })
            .collect();
        let fit = if t > 1 {
            fit_rate(&fit_points(&mean, per_pass), model, window, floor).ok()
        } else {
            None
        };
        (Some(mean), fit)
    } else {
        (None, None)
    };
    Ok(ExperimentOutput {
        theorem,
        f_star: inst.f_star,
        traces: reps.into_iter().map(|r| r.trace).collect(),
        summaries,
        mean_gap,
        mean_gap_fit,
        notes,
        samples_per_pass: per_pass,
        horizon: t,
    })
}

fn fit_cells(fit: &Option<RateFit>) -> String {
    match fit {
        Some(f) => format!(
            "{},{},{},{},{},{}",
            f.model, f.slope, f.intercept, f.r2, f.window.0, f.window.1
        ),
        None => ",,,,,".into(),
    }
}

impl ExperimentOutput {
    pub fn trace_file_name(&self, seed: u64) -> String {
        format!("{}_seed{seed}.csv", algo_name(self.theorem))
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::new();
        for n in &self.notes {
            let _ = writeln!(s, "# note: {n}");
        }
        for sum in &self.summaries {
            if let Some(w) = sum.fit.as_ref().and_then(|f| f.warning.as_ref()) {
                let _ = writeln!(s, "# warning seed={}: {w}", sum.seed);
            }
        }
        let _ = writeln!(
            s,
            "algo,theorem,seed,t,passes,final_f,f_star,final_gap,model,slope,intercept,r2,window_lo,window_hi"
        );
        let passes = self.horizon as f64 / self.samples_per_pass as f64;
        for sum in &self.summaries {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                algo_name(self.theorem),
                self.theorem,
                sum.seed,
                self.horizon,
                passes,
                sum.final_f,
                self.f_star,
                sum.final_gap,
                fit_cells(&sum.fit)
            );
        }
        if let Some(mean) = &self.mean_gap {
            let last = mean.last().map(|m| m.1).unwrap_or(f64::NAN);
            let _ = writeln!(
                s,
                "{},{},mean,{},{},,{},{},{}",
                algo_name(self.theorem),
                self.theorem,
                self.horizon,
                passes,
                self.f_star,
                last,
                fit_cells(&self.mean_gap_fit)
            );
        }
        s
    }

    pub fn mean_gap_csv(&self) -> Option<String> {
        let mean = self.mean_gap.as_ref()?;
        let mut s = format!("# seeds={}\ns,passes,mean_gap\n", self.summaries.len());
        for (it, g) in mean {
            let _ = writeln!(s, "{it},{},{g}", *it as f64 / self.samples_per_pass as f64);
        }
        Some(s)
    }

    /// Writes one trace per seed, `summary.csv` and, for repeated runs,
    /// `mean_gap.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        for tr in &self.traces {
            let path = dir.join(self.trace_file_name(tr.meta.seed));
            fs::write(path, tr.to_csv_string(Some(self.samples_per_pass)))?;
        }
        fs::write(dir.join("summary.csv"), self.summary_csv())?;
        if let Some(m) = self.mean_gap_csv() {
            fs::write(dir.join("mean_gap.csv"), m)?;
        }
        Ok(())
    }
}
