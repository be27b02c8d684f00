use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use geoconvex::experiment::{
    algo_name, cert_rows_csv, cert_rows_text, certify_suite, default_fit, fit_rate,
    reproduce_figure, resolution_floor, run_experiment, verify_bounds, CertifyScale,
    ExperimentConfig, ExperimentOutput, ProblemKind, RateModel,
};
use geoconvex::problems::generate_spd_dataset;
use geoconvex::solver::RunTrace;
use geoconvex::{Error, TheoremId};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "geoconvex",
    version,
    about = "First-order methods on Hadamard manifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded replicates of one method and fit their gap curves.
    Run {
        #[command(flatten)]
        exp: ExpArgs,
        /// Also write `passes gap` data files for gnuplot.
        #[arg(long)]
        gnuplot: bool,
    },
    /// Fit a rate to a trace file written by `run`.
    Fit {
        trace: PathBuf,
        #[arg(long, default_value = "loglog")]
        model: String,
        /// Fit window `lo,hi` on the x axis; defaults to the method's asymptotic window.
        #[arg(long)]
        window: Option<String>,
        /// Oracle calls per pass; the x axis is iterations divided by this.
        #[arg(long, default_value_t = 1)]
        per_pass: usize,
    },
    /// Compare measured suboptimality with the theoretical bounds at checkpoints.
    VerifyBounds {
        #[command(flatten)]
        exp: ExpArgs,
        /// Comma-separated horizons.
        #[arg(long)]
        checkpoints: Option<String>,
        /// Check every method instead of `--algo`.
        #[arg(long)]
        all: bool,
    },
    /// Run the numerical certificates for the comparison inequalities and problems.
    Certify {
        /// Reduced sample counts.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated SPD dataset.
    GenData {
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Compare GD, SGD-st and SGD-sm on Karcher data at each condition number.
    Figure {
        #[command(flatten)]
        exp: ExpArgs,
        /// Seeds averaged for the stochastic methods.
        #[arg(long, default_value_t = 8)]
        seeds: usize,
        /// Comma-separated condition numbers.
        #[arg(long, default_value = "1e2,1e4")]
        conditions: String,
    },
}

#[derive(Args)]
struct ExpArgs {
    /// Flat `key=value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long = "N")]
    count: Option<String>,
    #[arg(long = "Q")]
    condition: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<String>,
    #[arg(long = "D")]
    diameter: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    /// Matrix normalization: spectral or frobenius.
    #[arg(long)]
    norm: Option<String>,
    /// Horizon in iterations.
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    repeat: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol: Option<String>,
}

impl ExpArgs {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                ExperimentConfig::from_kv(&text)?
            }
            None => match &self.problem {
                Some(p) => ExperimentConfig::for_problem(p.parse()?),
                None => ExperimentConfig::default(),
            },
        };
        let pairs = [
            ("problem", &self.problem),
            ("algo", &self.algo),
            ("n", &self.n),
            ("N", &self.count),
            ("Q", &self.condition),
            ("kappa", &self.kappa),
            ("D", &self.diameter),
            ("noise", &self.noise),
            ("norm", &self.norm),
            ("t", &self.t),
            ("seed", &self.seed),
            ("repeat", &self.repeat),
            ("jobs", &self.jobs),
            ("tol", &self.tol),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Numerical { .. } | Error::NonConvergence { .. } | Error::InvalidPoint(_)) => {
            EXIT_NUMERICAL
        }
        _ => EXIT_USAGE,
    }
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn gnuplot_files(out: &ExperimentOutput, dir: &Path) -> anyhow::Result<()> {
    let per_pass = out.samples_per_pass as f64;
    for tr in &out.traces {
        let mut s = format!(
            "# passes gap ({} seed {})\n",
            algo_name(out.theorem),
            tr.meta.seed
        );
        for (it, g) in tr.gaps().unwrap_or_default() {
            s.push_str(&format!("{} {g}\n", it as f64 / per_pass));
        }
        write_file(
            &dir.join(format!(
                "{}_seed{}.dat",
                algo_name(out.theorem),
                tr.meta.seed
            )),
            &s,
        )?;
    }
    if let Some(mean) = &out.mean_gap {
        let mut s = String::from("# passes mean_gap\n");
        for (it, g) in mean {
            s.push_str(&format!("{} {g}\n", *it as f64 / per_pass));
        }
        write_file(
            &dir.join(format!("{}_mean.dat", algo_name(out.theorem))),
            &s,
        )?;
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> anyhow::Result<Vec<T>> {
    s.split(',')
        .map(|c| {
            c.trim()
                .parse()
                .map_err(|_| anyhow::anyhow!("bad {what} `{c}`"))
        })
        .collect()
}

fn execute(command: Command) -> anyhow::Result<u8> {
    let stdout = io::stdout();
    let mut stdout = stdout.lock();
    match command {
        Command::Run { exp, gnuplot } => {
            let cfg = exp.config()?;
            let out = run_experiment(&cfg)
                .with_context(|| format!("running {} on {}", algo_name(cfg.algo), cfg.problem))?;
            if let Some(dir) = &cfg.out {
                out.write_to(dir)
                    .with_context(|| format!("writing results to {}", dir.display()))?;
                if gnuplot {
                    gnuplot_files(&out, dir)?;
                }
            }
            write!(stdout, "{}", out.summary_csv())?;
            Ok(0)
        }
        Command::Fit {
            trace,
            model,
            window,
            per_pass,
        } => {
            if per_pass == 0 {
                bail!("--per-pass must be positive");
            }
            let file =
                fs::File::open(&trace).with_context(|| format!("opening {}", trace.display()))?;
            let tr = RunTrace::read_csv(BufReader::new(file))?;
            let gaps = tr
                .gaps()
                .ok_or_else(|| anyhow::anyhow!("trace has no f_star line; cannot form gaps"))?;
            let model: RateModel = model.parse()?;
            let window = match window {
                Some(w) => {
                    let v: Vec<f64> = parse_list(&w, "window bound")?;
                    if v.len() != 2 {
                        bail!("--window takes lo,hi");
                    }
                    (v[0], v[1])
                }
                None => {
                    let (_, (lo, hi)) = default_fit(tr.meta.theorem, tr.meta.horizon);
                    (lo / per_pass as f64, hi / per_pass as f64)
                }
            };
            let points: Vec<(f64, f64)> = gaps
                .iter()
                .map(|&(s, g)| (s as f64 / per_pass as f64, g))
                .collect();
            let floor = resolution_floor(tr.meta.f_star.unwrap_or(0.0));
            let fit = fit_rate(&points, model, window, floor)?;
            if let Some(w) = &fit.warning {
                eprintln!("warning: {w}");
            }
            writeln!(
                stdout,
                "model,slope,intercept,r2,window_lo,window_hi,points"
            )?;
            writeln!(
                stdout,
                "{},{},{},{},{},{},{}",
                fit.model, fit.slope, fit.intercept, fit.r2, fit.window.0, fit.window.1, fit.points
            )?;
            Ok(0)
        }
        Command::VerifyBounds {
            exp,
            checkpoints,
            all,
        } => {
            let mut cfg = exp.config()?;
            if let Some(c) = checkpoints {
                cfg.set("checkpoints", &c)?;
            }
            let theorems: Vec<TheoremId> = if all {
                TheoremId::ALL.to_vec()
            } else {
                vec![cfg.algo]
            };
            let mut violated = false;
            for theorem in theorems {
                let cfg = ExperimentConfig {
                    algo: theorem,
                    ..cfg.clone()
                };
                let report = match verify_bounds(&cfg) {
                    Err(Error::MissingConstant(c)) if all => {
                        writeln!(stdout, "{theorem} skipped: problem has no `{c}`")?;
                        continue;
                    }
                    r => r.with_context(|| format!("verifying {theorem}"))?,
                };
                write!(stdout, "{}", report.to_text())?;
                if let Some(dir) = &cfg.out {
                    write_file(&dir.join(format!("bounds_{theorem}.csv")), &report.to_csv())?;
                }
                violated |= !report.passed();
            }
            Ok(if violated { EXIT_VIOLATION } else { 0 })
        }
        Command::Certify { quick, seed, out } => {
            let scale = if quick {
                CertifyScale::Quick
            } else {
                CertifyScale::Full
            };
            let rows = certify_suite(scale, seed)?;
            write!(stdout, "{}", cert_rows_text(&rows))?;
            if let Some(dir) = out {
                write_file(&dir.join("certify.csv"), &cert_rows_csv(&rows))?;
            }
            let failed = rows.iter().any(|r| !r.passed && !r.advisory);
            Ok(if failed { EXIT_VIOLATION } else { 0 })
        }
        Command::GenData { exp } => {
            let cfg = exp.config()?;
            if cfg.problem != ProblemKind::Karcher {
                bail!("gen-data writes SPD datasets; use --problem karcher");
            }
            let data =
                generate_spd_dataset(cfg.n, cfg.count, cfg.condition, cfg.seed, cfg.normalization)?;
            let mut buf = Vec::new();
            data.write_text(&mut buf)?;
            match &cfg.out {
                Some(path) => write_file(path, std::str::from_utf8(&buf)?)?,
                None => stdout.write_all(&buf)?,
            }
            Ok(0)
        }
        Command::Figure {
            exp,
            seeds,
            conditions,
        } => {
            let mut cfg = exp.config()?;
            cfg.problem = ProblemKind::Karcher;
            let conditions: Vec<f64> = parse_list(&conditions, "condition number")?;
            let report = reproduce_figure(&cfg, &conditions, seeds)?;
            write!(stdout, "{}", report.to_text())?;
            if let Some(dir) = &cfg.out {
                write_file(&dir.join("figure.csv"), &report.to_csv())?;
                write_file(&dir.join("figure.dat"), &report.to_gnuplot())?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
