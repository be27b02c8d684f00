//! Karcher mean of SPD matrices: `f(X) = Σ_i d²(X, A_i)`.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{symmetrize, SymEigen};
use crate::manifold::{Manifold, Spd, SpdPoint, Tangent};
use crate::solver::{Constants, FirstOrderOracle};

type STangent = Tangent<SpdPoint, DMatrix<f64>>;

/// Which norm the generated matrices are scaled to unit size in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Largest eigenvalue 1, so the spectrum spans exactly `[1/Q, 1]`.
    #[default]
    Spectral,
    Frobenius,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Spectral => "spectral",
            Normalization::Frobenius => "frobenius",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Normalization::Spectral),
            "frobenius" => Ok(Normalization::Frobenius),
            _ => Err(Error::Config(format!("unknown normalization `{s}`"))),
        }
    }
}

/// How a dataset was produced; written into the text header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetInfo {
    pub condition: f64,
    pub seed: u64,
    pub normalization: Normalization,
}

#[derive(Debug, Clone)]
pub struct KarcherProblem {
    manifold: Spd,
    matrices: Vec<SpdPoint>,
    info: Option<DatasetInfo>,
}

impl KarcherProblem {
    pub fn new(manifold: Spd, matrices: Vec<SpdPoint>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::Config(
                "Karcher problem needs at least one matrix".into(),
            ));
        }
        for a in &matrices {
            manifold.check_point(a)?;
        }
        Ok(Self {
            manifold,
            matrices,
            info: None,
        })
    }

    pub fn manifold(&self) -> &Spd {
        &self.manifold
    }

    pub fn matrices(&self) -> &[SpdPoint] {
        &self.matrices
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn n(&self) -> usize {
        self.manifold.n()
    }

    pub fn info(&self) -> Option<&DatasetInfo> {
        self.info.as_ref()
    }

    /// The same problem on an SPD manifold with a different curvature bound.
    pub fn with_manifold(mut self, manifold: Spd) -> Result<Self> {
        if manifold.n() != self.n() {
            return Err(Error::Config(
                "manifold dimension differs from the data".into(),
            ));
        }
        self.manifold = manifold;
        Ok(self)
    }

    fn whitened_logs(&self, x: &SpdPoint) -> Result<Vec<SymEigen>> {
        self.manifold.check_point(x)?;
        self.matrices
            .iter()
            .map(|a| {
                let eig = SymEigen::new(&x.whiten(a.matrix()));
                eig.require_positive("X^{-1/2} A X^{-1/2}")?;
                Ok(eig)
            })
            .collect()
    }

    pub fn loss(&self, x: &SpdPoint) -> Result<f64> {
        Ok(self
            .whitened_logs(x)?
            .iter()
            .map(|e| e.values.iter().map(|l| l.ln().powi(2)).sum::<f64>())
            .sum())
    }

    /// Riemannian gradient `−2 Σ_i Exp⁻¹_X(A_i)`.
    pub fn full_gradient(&self, x: &SpdPoint) -> Result<STangent> {
        let n = self.n();
        let mut acc = DMatrix::zeros(n, n);
        for e in self.whitened_logs(x)? {
            acc += e.map(f64::ln);
        }
        Ok(Tangent::new(x.clone(), x.color(&symmetrize(&(acc * -2.0)))))
    }

    /// `−2N Exp⁻¹_X(A_i)`, whose mean over `i` is the full gradient.
    pub fn sample_gradient(&self, x: &SpdPoint, i: usize) -> Result<STangent> {
        let a = self
            .matrices
            .get(i)
            .ok_or_else(|| Error::Contract(format!("sample index {i} out of range")))?;
        let log = self.manifold.log_map(x, a)?;
        Ok(self.manifold.scale(&log, -2.0 * self.len() as f64))
    }

    /// Single-sample gradient at a uniformly drawn index.
    pub fn stochastic_gradient(&self, x: &SpdPoint, rng: &mut dyn RngCore) -> Result<STangent> {
        let i = rng.random_range(0..self.len());
        self.sample_gradient(x, i)
    }

    pub fn arithmetic_mean(&self) -> Result<SpdPoint> {
        let n = self.n();
        let sum = self
            .matrices
            .iter()
            .fold(DMatrix::zeros(n, n), |acc, a| acc + a.matrix());
        SpdPoint::new(sum / self.len() as f64)
    }

    /// Largest distance from `x` to a data matrix.
    pub fn spread_from(&self, x: &SpdPoint) -> Result<f64> {
        self.matrices
            .iter()
            .map(|a| self.manifold.distance(x, a))
            .try_fold(0.0f64, |m, d| Ok(m.max(d?)))
    }

    /// Starting points for multi-start reference solves: the arithmetic mean, the
    /// first matrix and a scaled identity.
    pub fn default_starts(&self) -> Result<Vec<SpdPoint>> {
        let n = self.n();
        let tr: f64 = self
            .matrices
            .iter()
            .map(|a| a.matrix().trace())
            .sum::<f64>()
            / (self.len() * n) as f64;
        Ok(vec![
            self.arithmetic_mean()?,
            self.matrices[0].clone(),
            SpdPoint::new(DMatrix::identity(n, n) * tr)?,
        ])
    }

    /// `μ = 2N` and `L_g = 5N`; other constants are left to the caller.
    pub fn nominal_constants(&self) -> Constants {
        let n = self.len() as f64;
        Constants {
            mu: Some(2.0 * n),
            lipschitz_grad: Some(5.0 * n),
            ..Constants::default()
        }
    }

    pub fn oracle(&self, stochastic: bool, constants: Constants) -> KarcherOracle<'_> {
        KarcherOracle {
            problem: self,
            stochastic,
            constants,
        }
    }

    pub fn describe(&self) -> String {
        let mut s = format!("karcher n={} N={}", self.n(), self.len());
        if let Some(info) = &self.info {
            s += &format!(
                " Q={} seed={} norm={}",
                info.condition, info.seed, info.normalization
            );
        }
        s
    }

    /// Writes the portable text format: `spd n N Q seed [norm]` then `N`
    /// matrices, one row per line, 17 significant digits.
    pub fn write_text<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let n = self.n();
        match &self.info {
            Some(i) if i.normalization == Normalization::Frobenius => writeln!(
                w,
                "spd {n} {} {} {} frobenius",
                self.len(),
                i.condition,
                i.seed
            )?,
            Some(i) => writeln!(w, "spd {n} {} {} {}", self.len(), i.condition, i.seed)?,
            None => writeln!(w, "spd {n} {} 0 0", self.len())?,
        }
        for a in &self.matrices {
            let m = a.matrix();
            for r in 0..n {
                let row: Vec<String> = (0..n).map(|c| format!("{:.16e}", m[(r, c)])).collect();
                writeln!(w, "{}", row.join(" "))?;
            }
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R, kappa: f64) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dataset file".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if !(5..=6).contains(&fields.len()) || fields[0] != "spd" {
            return Err(Error::Parse(format!("bad header `{header}`")));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad integer `{s}`")))
        };
        let n = int(fields[1])?;
        let count = int(fields[2])?;
        let condition: f64 = fields[3]
            .parse()
            .map_err(|_| Error::Parse(format!("bad condition number `{}`", fields[3])))?;
        let seed: u64 = fields[4]
            .parse()
            .map_err(|_| Error::Parse(format!("bad seed `{}`", fields[4])))?;
        let normalization = match fields.get(5) {
            Some(s) => s.parse()?,
            None => Normalization::Spectral,
        };
        let mut values = Vec::with_capacity(count * n * n);
        for line in lines {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            for tok in line.split_whitespace() {
                values.push(
                    tok.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number `{tok}`")))?,
                );
            }
        }
        if values.len() != count * n * n {
            return Err(Error::Parse(format!(
                "expected {} numbers, found {}",
                count * n * n,
                values.len()
            )));
        }
        let matrices = values
            .chunks(n * n)
            .map(|c| SpdPoint::new(DMatrix::from_row_slice(n, n, c)))
            .collect::<Result<Vec<_>>>()?;
        let mut p = Self::new(Spd::with_kappa(n, kappa)?, matrices)?;
        if condition > 0.0 {
            p.info = Some(DatasetInfo {
                condition,
                seed,
                normalization,
            });
        }
        Ok(p)
    }
}

/// Random SPD matrices with condition number exactly `q`.
///
/// Each matrix is `U diag(λ) Uᵀ` with `U` the orthogonal factor of a Gaussian
/// matrix and `ln λ` uniform on `[−ln q, 0]`, with the two extreme eigenvalues
/// pinned to `1` and `1/q`. Spectral normalization leaves this unchanged.
pub fn generate_spd_dataset(
    n: usize,
    count: usize,
    q: f64,
    seed: u64,
    normalization: Normalization,
) -> Result<KarcherProblem> {
    if n < 2 {
        return Err(Error::Config(format!(
            "matrix size must be at least 2, got {n}"
        )));
    }
    if count == 0 {
        return Err(Error::Config(
            "dataset must contain at least one matrix".into(),
        ));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::Config(format!(
            "condition number must be ≥ 1, got {q}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_q = q.ln();
    let mut matrices = Vec::with_capacity(count);
    for _ in 0..count {
        let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
        let mut lambda = DVector::from_fn(n, |i, _| match i {
            0 => 1.0,
            1 => 1.0 / q,
            _ => (-log_q * rng.random::<f64>()).exp(),
        });
        if normalization == Normalization::Frobenius {
            lambda /= lambda.norm();
        }
        let mat = if q == 1.0 {
            DMatrix::identity(n, n) * lambda[0]
        } else {
            let qr = g.qr();
            let mut u = qr.q();
            let r = qr.r();
            for j in 0..n {
                if r[(j, j)] < 0.0 {
                    u.column_mut(j).neg_mut();
                }
            }
            symmetrize(&(&u * DMatrix::from_diagonal(&lambda) * u.transpose()))
        };
        matrices.push(SpdPoint::new(mat)?);
    }
    let mut p = KarcherProblem::new(Spd::new(n), matrices)?;
    p.info = Some(DatasetInfo {
        condition: q,
        seed,
        normalization,
    });
    Ok(p)
}

/// Full or single-sample gradient access to a [`KarcherProblem`].
#[derive(Debug, Clone, Copy)]
pub struct KarcherOracle<'a> {
    problem: &'a KarcherProblem,
    stochastic: bool,
    constants: Constants,
}

impl FirstOrderOracle<Spd> for KarcherOracle<'_> {
    fn value(&self, _: &Spd, x: &SpdPoint) -> Result<f64> {
        self.problem.loss(x)
    }

    fn gradient(&self, _: &Spd, x: &SpdPoint, rng: &mut dyn RngCore) -> Result<STangent> {
        if self.stochastic {
            self.problem.stochastic_gradient(x, rng)
        } else {
            self.problem.full_gradient(x)
        }
    }

    fn is_deterministic(&self) -> bool {
        !self.stochastic
    }

    fn constants(&self) -> Constants {
        self.constants
    }

    fn describe(&self) -> String {
        let mode = if self.stochastic {
            "stochastic"
        } else {
            "full"
        };
        format!("{} oracle={mode}", self.problem.describe())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: &[f64]) -> SpdPoint {
        SpdPoint::new(DMatrix::from_diagonal(&DVector::from_row_slice(d))).unwrap()
    }

    #[test]
    fn loss_cases() {
        let m = Spd::new(2);
        let a = diag(&[std::f64::consts::E, std::f64::consts::E]);
        let p = KarcherProblem::new(m, vec![a.clone()]).unwrap();
        assert!(p.loss(&a).unwrap() < 1e-28);
        assert!((p.loss(&SpdPoint::identity(2)).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_gradient() {
        let m = Spd::new(2);
        let p = KarcherProblem::new(m, vec![diag(&[2.0, 0.5]), diag(&[3.0, 1.5])]).unwrap();
        let x = diag(&[1.2, 0.7]);
        let g = p.full_gradient(&x).unwrap();
        // Whitened, the gradient at diagonal X is diag(2 Σ_i log(x_j / a_ij)).
        let w = x.whiten(&g.components);
        for (j, xj) in [1.2f64, 0.7].into_iter().enumerate() {
            let want = 2.0 * ((xj / [2.0, 0.5][j]).ln() + (xj / [3.0, 1.5][j]).ln());
            assert!((w[(j, j)] - want).abs() < 1e-13, "{j}");
        }
        assert!(g.components[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn generator_contract() {
        let p = generate_spd_dataset(6, 4, 1e2, 9, Normalization::Spectral).unwrap();
        for a in p.matrices() {
            let e = a.eigenvalues();
            let (lo, hi) = (e.min(), e.max());
            assert!((hi - 1.0).abs() < 1e-12);
            assert!((hi / lo - 1e2).abs() / 1e2 < 1e-9);
        }
        let again = generate_spd_dataset(6, 4, 1e2, 9, Normalization::Spectral).unwrap();
        assert_eq!(p.matrices(), again.matrices());
        let ident = generate_spd_dataset(3, 2, 1.0, 1, Normalization::Spectral).unwrap();
        assert_eq!(ident.matrices()[1].matrix(), &DMatrix::identity(3, 3));
        assert!(generate_spd_dataset(1, 4, 2.0, 0, Normalization::Spectral).is_err());
        assert!(generate_spd_dataset(3, 0, 2.0, 0, Normalization::Spectral).is_err());
        assert!(generate_spd_dataset(3, 2, 0.5, 0, Normalization::Spectral).is_err());
    }

    #[test]
    fn frobenius_option_scales_to_unit_frobenius_norm() {
        let p = generate_spd_dataset(5, 3, 10.0, 2, Normalization::Frobenius).unwrap();
        for a in p.matrices() {
            assert!((a.matrix().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn text_round_trip() {
        let p = generate_spd_dataset(4, 3, 1e4, 5, Normalization::Spectral).unwrap();
        let mut buf = Vec::new();
        p.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("spd 4 3 10000 5\n"));
        let back = KarcherProblem::read_text(&buf[..], crate::manifold::DEFAULT_SPD_KAPPA).unwrap();
        for (a, b) in p.matrices().iter().zip(back.matrices()) {
            for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues().iter()) {
                assert!((x - y).abs() <= 1e-15 * x.abs());
            }
        }
        assert_eq!(back.info(), p.info());
        assert!(KarcherProblem::read_text(&b"spd 4 3 1 1\n1 2\n"[..], -0.5).is_err());
    }
}
