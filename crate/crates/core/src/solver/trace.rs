//! Per-iteration records, CSV round trip and the descent-lemma check.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use super::{Constants, TheoremId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub s: usize,
    /// `None` at iterations the run was told not to evaluate.
    pub f_x: Option<f64>,
    pub f_avg: Option<f64>,
    pub eta: f64,
    pub grad_norm: f64,
    pub dist_to_ref: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub theorem: TheoremId,
    pub schedule: String,
    pub horizon: usize,
    pub seed: u64,
    pub problem: String,
    pub geometry: String,
    pub kappa: f64,
    pub constants: Constants,
    /// `f(x*)` from a reference solve, when the caller attached one.
    pub f_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub meta: TraceMeta,
    pub records: Vec<RunRecord>,
}

const COLUMNS: &str = "s,f_x,f_avg,eta,grad_norm,dist_to_ref";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl RunTrace {
    /// `(s, f)` for every evaluated iteration, where `f` is the objective at the
    /// designated output: `f(x̄_s)` when the method averages, `f(x_s)` otherwise.
    pub fn designated_values(&self) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.f_avg.or(r.f_x).map(|f| (r.s, f)))
            .collect()
    }

    /// Designated values minus `f_star`, when it is attached.
    pub fn gaps(&self) -> Option<Vec<(usize, f64)>> {
        let f_star = self.meta.f_star?;
        Some(
            self.designated_values()
                .into_iter()
                .map(|(s, f)| (s, f - f_star))
                .collect(),
        )
    }

    pub fn last(&self) -> &RunRecord {
        self.records.last().expect("traces are never empty")
    }

    /// Writes the trace as CSV. With `samples_per_pass = Some(N)` a trailing
    /// `passes` column holds `s / N`.
    pub fn write_csv<W: Write>(
        &self,
        w: &mut W,
        samples_per_pass: Option<usize>,
    ) -> io::Result<()> {
        let m = &self.meta;
        writeln!(
            w,
            "# theorem={} horizon={} seed={}",
            m.theorem, m.horizon, m.seed
        )?;
        writeln!(w, "# schedule={}", m.schedule)?;
        writeln!(w, "# problem={}", m.problem)?;
        writeln!(w, "# geometry={} kappa={}", m.geometry, m.kappa)?;
        writeln!(w, "# constants={}", m.constants.describe())?;
        if let Some(f) = m.f_star {
            writeln!(w, "# f_star={f}")?;
        }
        match samples_per_pass {
            Some(_) => writeln!(w, "{COLUMNS},passes")?,
            None => writeln!(w, "{COLUMNS}")?,
        }
        let mut line = String::new();
        for r in &self.records {
            line.clear();
            let _ = write!(
                line,
                "{},{},{},{},{},{}",
                r.s,
                opt(r.f_x),
                opt(r.f_avg),
                r.eta,
                r.grad_norm,
                opt(r.dist_to_ref)
            );
            if let Some(n) = samples_per_pass {
                let _ = write!(line, ",{}", r.s as f64 / n as f64);
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self, samples_per_pass: Option<usize>) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, samples_per_pass)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }

    /// Parses a CSV produced by [`RunTrace::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut meta = TraceMeta {
            theorem: TheoremId::T1,
            schedule: String::new(),
            horizon: 0,
            seed: 0,
            problem: String::new(),
            geometry: String::new(),
            kappa: 0.0,
            constants: Constants::default(),
            f_star: None,
        };
        let mut records = Vec::new();
        let mut saw_header = false;
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let bad = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 1));
            if let Some(comment) = line.strip_prefix('#') {
                parse_meta(comment.trim(), &mut meta).map_err(|e| bad(&e))?;
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !saw_header {
                if !line.starts_with(COLUMNS) {
                    return Err(bad("missing column header"));
                }
                saw_header = true;
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() < 6 {
                return Err(bad("expected at least 6 columns"));
            }
            let num = |i: usize| -> Result<f64> {
                cells[i]
                    .parse()
                    .map_err(|_| bad(&format!("bad number `{}`", cells[i])))
            };
            let maybe = |i: usize| -> Result<Option<f64>> {
                if cells[i].is_empty() {
                    Ok(None)
                } else {
                    num(i).map(Some)
                }
            };
            records.push(RunRecord {
                s: cells[0].parse().map_err(|_| bad("bad iteration index"))?,
                f_x: maybe(1)?,
                f_avg: maybe(2)?,
                eta: num(3)?,
                grad_norm: num(4)?,
                dist_to_ref: maybe(5)?,
            });
        }
        if records.is_empty() {
            return Err(Error::Parse("trace has no records".into()));
        }
        Ok(Self { meta, records })
    }
}

fn parse_meta(comment: &str, meta: &mut TraceMeta) -> std::result::Result<(), String> {
    let single = |prefix: &str| comment.strip_prefix(prefix).map(str::to_string);
    if let Some(v) = single("schedule=") {
        meta.schedule = v;
        return Ok(());
    }
    if let Some(v) = single("problem=") {
        meta.problem = v;
        return Ok(());
    }
    let comment = comment.strip_prefix("constants=").unwrap_or(comment);
    for kv in comment.split_whitespace() {
        let Some((k, v)) = kv.split_once('=') else {
            continue;
        };
        let f = || v.parse::<f64>().map_err(|_| format!("bad value for {k}"));
        match k {
            "theorem" => meta.theorem = v.parse().map_err(|e: Error| e.to_string())?,
            "horizon" => meta.horizon = v.parse().map_err(|_| "bad horizon")?,
            "seed" => meta.seed = v.parse().map_err(|_| "bad seed")?,
            "geometry" => meta.geometry = v.to_string(),
            "kappa" => meta.kappa = f()?,
            "f_star" => meta.f_star = Some(f()?),
            "D" => meta.constants.diameter = Some(f()?),
            "L_f" => meta.constants.lipschitz_f = Some(f()?),
            "L_g" => meta.constants.lipschitz_grad = Some(f()?),
            "mu" => meta.constants.mu = Some(f()?),
            "G" => meta.constants.grad_bound = Some(f()?),
            "sigma" => meta.constants.sigma = Some(f()?),
            _ => {}
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentViolation {
    pub s: usize,
    /// `f(x_{s+1}) − f(x_s) + ‖g_s‖²/(2L_g)`; positive means the lemma failed.
    pub excess: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DescentReport {
    pub checked: usize,
    pub violations: Vec<DescentViolation>,
    /// Largest `excess / (1 + |f(x_s)|)` seen, violating or not.
    pub worst_relative_excess: f64,
}

/// Checks `f(x_{s+1}) − f(x_s) ≤ −‖g_s‖²/(2L_g)` along a gradient descent trace,
/// with slack `1e−9 · (1 + |f(x_s)|)`.
pub fn check_descent(trace: &RunTrace, lipschitz_grad: f64) -> DescentReport {
    let mut report = DescentReport {
        worst_relative_excess: f64::NEG_INFINITY,
        ..Default::default()
    };
    for pair in trace.records.windows(2) {
        let (cur, next) = (&pair[0], &pair[1]);
        let (Some(f_cur), Some(f_next)) = (cur.f_x, next.f_x) else {
            continue;
        };
        let excess = f_next - f_cur + cur.grad_norm * cur.grad_norm / (2.0 * lipschitz_grad);
        let scale = 1.0 + f_cur.abs();
        let allowed = 1e-9 * scale;
        report.checked += 1;
        report.worst_relative_excess = report.worst_relative_excess.max(excess / scale);
        if excess > allowed {
            report.violations.push(DescentViolation {
                s: cur.s,
                excess,
                allowed,
            });
        }
    }
    if report.checked == 0 {
        report.worst_relative_excess = 0.0;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunTrace {
        RunTrace {
            meta: TraceMeta {
                theorem: TheoremId::T6,
                schedule: "constant(0.1)".into(),
                horizon: 3,
                seed: 42,
                problem: "frechet N=5".into(),
                geometry: "hyperbolic(3)".into(),
                kappa: -0.5,
                constants: Constants {
                    diameter: Some(2.5),
                    lipschitz_grad: Some(3.0),
                    sigma: Some(0.1),
                    ..Default::default()
                },
                f_star: Some(0.125),
            },
            records: (1..=3)
                .map(|s| RunRecord {
                    s,
                    f_x: (s != 2).then(|| 1.0 / s as f64),
                    f_avg: (s > 1).then(|| 0.1 + 1.0 / 3.0 / s as f64),
                    eta: 0.1,
                    grad_norm: std::f64::consts::PI * s as f64,
                    dist_to_ref: Some(1e-17 * s as f64),
                })
                .collect(),
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = sample();
        for passes in [None, Some(4)] {
            let text = t.to_csv_string(passes);
            let back = RunTrace::read_csv(text.as_bytes()).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn csv_announces_columns_and_constants() {
        let text = sample().to_csv_string(Some(2));
        assert!(text.contains("# theorem=T6"));
        assert!(text.contains("# constants=D=2.5 L_g=3 sigma=0.1"));
        assert!(text.contains("s,f_x,f_avg,eta,grad_norm,dist_to_ref,passes\n"));
        assert!(text.lines().last().unwrap().ends_with(",1.5"));
    }

    #[test]
    fn descent_flags_increase() {
        let mut t = sample();
        t.records[1].f_x = Some(2.0);
        let r = check_descent(&t, 1.0);
        assert_eq!(r.checked, 2);
        assert_eq!(r.violations.len(), 2);
        t.records[1].f_x = None;
        assert_eq!(check_descent(&t, 1.0).checked, 0);
        assert_eq!(r.violations[0].s, 1);
    }
}
