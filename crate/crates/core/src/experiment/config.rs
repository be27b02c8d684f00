use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problems::{Normalization, DEFAULT_TOL};
use crate::solver::TheoremId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Karcher,
    Frechet,
    EuclideanQuad,
    HyperbolicDist,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Karcher => "karcher",
            ProblemKind::Frechet => "frechet",
            ProblemKind::EuclideanQuad => "euclidean-quad",
            ProblemKind::HyperbolicDist => "hyperbolic-dist",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "karcher" => Ok(ProblemKind::Karcher),
            "frechet" => Ok(ProblemKind::Frechet),
            "euclidean-quad" => Ok(ProblemKind::EuclideanQuad),
            "hyperbolic-dist" => Ok(ProblemKind::HyperbolicDist),
            _ => Err(Error::Config(format!("unknown problem `{s}`"))),
        }
    }
}

/// Algorithm names accepted on the command line and the method each selects.
///
/// Every alias names exactly one method; `sgd-st` and `st-ssubgrad` are two
/// names for the same strongly convex stochastic method. Theorem ids (`T1`..`T7`)
/// are accepted as well.
pub const ALIASES: [(&str, TheoremId); 7] = [
    ("subgrad", TheoremId::T1),
    ("ssubgrad", TheoremId::T2),
    ("st-subgrad", TheoremId::T3),
    ("st-ssubgrad", TheoremId::T4),
    ("sgd-st", TheoremId::T4),
    ("sgd-sm", TheoremId::T6),
    ("gd", TheoremId::T7),
];

pub fn parse_algo(s: &str) -> Result<TheoremId> {
    if let Some((_, t)) = ALIASES.iter().find(|(a, _)| *a == s) {
        return Ok(*t);
    }
    s.parse::<TheoremId>()
        .map_err(|_| Error::Config(format!("unknown algorithm `{s}`")))
}

/// Preferred name of a method; theorem id when it has no alias.
pub fn algo_name(t: TheoremId) -> String {
    match t {
        TheoremId::T1 => "subgrad".into(),
        TheoremId::T2 => "ssubgrad".into(),
        TheoremId::T3 => "st-subgrad".into(),
        TheoremId::T4 => "sgd-st".into(),
        TheoremId::T6 => "sgd-sm".into(),
        TheoremId::T7 => "gd".into(),
        TheoremId::T5 => "T5".into(),
    }
}

/// Recorded with every Karcher run of the strongly convex stochastic method.
pub const SGD_ST_STEP_NOTE: &str = "sgd-st step 2/(mu(s+1)) with mu=2N equals 1/(N(s+1)); \
    it scales the Riemannian gradient -2 sum_i log_X(A_i), so a matrix-form update \
    exp(eta sum_i log X^{-1/2}A_iX^{-1/2}) with step eta is a gradient step of eta/2";

/// Largest condition number used for generated Karcher data; larger requests are
/// replaced to keep the reference solve well conditioned.
pub const MAX_DESK_CONDITION: f64 = 1e4;

pub const DEFAULT_CHECKPOINTS: [usize; 4] = [10, 100, 1_000, 10_000];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub algo: TheoremId,
    /// Matrix size or manifold dimension.
    pub n: usize,
    /// Number of data matrices or anchors.
    pub count: usize,
    /// Condition number of generated matrices (or of the quadratic's Hessian).
    pub condition: f64,
    pub kappa: Option<f64>,
    pub diameter: Option<f64>,
    /// Length of the injected gradient noise for stochastic methods on the
    /// bound-verification problems.
    pub noise: Option<f64>,
    pub normalization: Normalization,
    pub horizon: usize,
    pub seed: u64,
    pub repeat: usize,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub tol: f64,
    pub checkpoints: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Karcher,
            algo: TheoremId::T7,
            n: 20,
            count: 100,
            condition: 1e2,
            kappa: None,
            diameter: None,
            noise: None,
            normalization: Normalization::Spectral,
            horizon: 100,
            seed: 0,
            repeat: 1,
            jobs: 0,
            out: None,
            tol: DEFAULT_TOL,
            checkpoints: DEFAULT_CHECKPOINTS.to_vec(),
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
}

impl ExperimentConfig {
    /// Defaults for a problem kind: desk-scale SPD data for `karcher`, a small
    /// hyperbolic plane instance for the others.
    pub fn for_problem(problem: ProblemKind) -> Self {
        let base = Self {
            problem,
            ..Self::default()
        };
        match problem {
            ProblemKind::Karcher => base,
            ProblemKind::Frechet => Self {
                n: 2,
                count: 8,
                ..base
            },
            ProblemKind::EuclideanQuad => Self {
                n: 4,
                count: 1,
                // Larger ratios let the first 1/mu step overshoot the certified ball.
                condition: 2.0,
                ..base
            },
            ProblemKind::HyperbolicDist => Self {
                n: 2,
                count: 1,
                ..base
            },
        }
    }

    /// Applies one `key=value` setting. Keys match the long command-line flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "problem" => self.problem = v.parse()?,
            "algo" => self.algo = parse_algo(v)?,
            "n" => self.n = num(key, v)?,
            "N" => self.count = num(key, v)?,
            "Q" => self.condition = num(key, v)?,
            "kappa" => self.kappa = Some(num(key, v)?),
            "D" => self.diameter = Some(num(key, v)?),
            "noise" => self.noise = Some(num(key, v)?),
            "norm" => self.normalization = v.parse()?,
            "t" => self.horizon = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "repeat" => self.repeat = num(key, v)?,
            "jobs" => self.jobs = num(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "tol" => self.tol = num(key, v)?,
            "checkpoints" => {
                self.checkpoints = v
                    .split(',')
                    .map(|c| num(key, c.trim()))
                    .collect::<Result<_>>()?
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses a flat `key=value` file; `#` starts a comment. A `problem` key, if
    /// present, selects that problem's defaults before the other keys apply.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut cfg = match pairs.iter().find(|(k, _)| k == "problem") {
            Some((_, v)) => Self::for_problem(v.parse()?),
            None => Self::default(),
        };
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("t must be at least 1".into()));
        }
        if self.repeat == 0 {
            return Err(Error::Config("repeat must be at least 1".into()));
        }
        if self.problem == ProblemKind::Karcher && self.n < 2 {
            return Err(Error::Config("Karcher matrices need n ≥ 2".into()));
        }
        if self.n == 0 || self.count == 0 {
            return Err(Error::Config("n and N must be positive".into()));
        }
        if let Some(d) = self.diameter {
            if !(d > 0.0) {
                return Err(Error::Config("D must be positive".into()));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliases_resolve() {
        assert_eq!(parse_algo("gd").unwrap(), TheoremId::T7);
        assert_eq!(parse_algo("sgd-sm").unwrap(), TheoremId::T6);
        assert_eq!(parse_algo("sgd-st").unwrap(), TheoremId::T4);
        assert_eq!(parse_algo("T5").unwrap(), TheoremId::T5);
        assert!(parse_algo("adam").is_err());
        for t in TheoremId::ALL {
            assert_eq!(parse_algo(&algo_name(t)).unwrap(), t);
        }
    }

    #[test]
    fn kv_file() {
        let cfg = ExperimentConfig::from_kv(
            "# desk run\nalgo = sgd-st\nproblem=frechet\nt=50  # short\ncheckpoints=10,20\n",
        )
        .unwrap();
        assert_eq!(cfg.problem, ProblemKind::Frechet);
        assert_eq!(cfg.n, 2);
        assert_eq!(cfg.algo, TheoremId::T4);
        assert_eq!(cfg.horizon, 50);
        assert_eq!(cfg.checkpoints, vec![10, 20]);
        assert!(ExperimentConfig::from_kv("bogus=1").is_err());
        assert!(ExperimentConfig::from_kv("t").is_err());
    }
}
