use nalgebra::DMatrix;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{Descriptor, GeometryKind, Manifold, Tangent};
use crate::error::{contract, domain, Error, Result};
use crate::linalg::{asymmetry, frobenius_dot, symmetrize, SymEigen};

/// Curvature lower bound used for SPD problems unless configured otherwise.
///
/// The affine-invariant metric has sectional curvature in `[-1/2, 0]`; the
/// value is a configuration input, not something derived here.
pub const DEFAULT_SPD_KAPPA: f64 = -0.5;

const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric positive definite `n×n` matrices with the affine-invariant metric
/// `⟨U, V⟩_X = tr(X⁻¹ U X⁻¹ V)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spd {
    n: usize,
    kappa: f64,
}

/// An SPD matrix with its square root and inverse square root cached.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdPoint {
    mat: DMatrix<f64>,
    sqrt: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
    eig: SymEigen,
}

impl SpdPoint {
    /// Validates symmetry (to 1e-12 relative) and positive definiteness.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(contract("SPD point must be a square matrix"));
        }
        let scale = mat.amax().max(1.0);
        if asymmetry(&mat) > SYMMETRY_TOL * scale {
            return Err(Error::InvalidPoint(format!(
                "matrix is not symmetric (asymmetry {:e})",
                asymmetry(&mat)
            )));
        }
        Self::from_symmetric(symmetrize(&mat))
    }

    /// Assumes `mat` is exactly symmetric.
    pub(crate) fn from_symmetric(mat: DMatrix<f64>) -> Result<Self> {
        let eig = SymEigen::new(&mat);
        eig.require_positive("SPD point")?;
        let sqrt = eig.map(f64::sqrt);
        let inv_sqrt = eig.map(|l| 1.0 / l.sqrt());
        Ok(Self {
            mat,
            sqrt,
            inv_sqrt,
            eig,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_symmetric(DMatrix::identity(n, n)).expect("identity is SPD")
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn sqrt(&self) -> &DMatrix<f64> {
        &self.sqrt
    }

    pub fn inv_sqrt(&self) -> &DMatrix<f64> {
        &self.inv_sqrt
    }

    pub fn eigenvalues(&self) -> &nalgebra::DVector<f64> {
        &self.eig.values
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    /// `X^{-1/2} M X^{-1/2}`, symmetrized.
    pub(crate) fn whiten(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(&self.inv_sqrt * m * &self.inv_sqrt))
    }

    /// `X^{1/2} M X^{1/2}`, symmetrized.
    pub(crate) fn color(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(&self.sqrt * m * &self.sqrt))
    }
}

type STangent = Tangent<SpdPoint, DMatrix<f64>>;

impl Spd {
    /// SPD(n) with the default curvature bound [`DEFAULT_SPD_KAPPA`].
    pub fn new(n: usize) -> Self {
        Self {
            n,
            kappa: DEFAULT_SPD_KAPPA,
        }
    }

    /// SPD(n) with a caller-supplied curvature lower bound `kappa ≤ 0`.
    pub fn with_kappa(n: usize, kappa: f64) -> Result<Self> {
        if !(kappa <= 0.0) || !kappa.is_finite() {
            return Err(domain(format!("curvature bound must be ≤ 0, got {kappa}")));
        }
        Ok(Self { n, kappa })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Tangent at `x` from a symmetric matrix (checked to 1e-12).
    pub fn tangent(&self, x: &SpdPoint, components: DMatrix<f64>) -> Result<STangent> {
        if components.nrows() != self.n || components.ncols() != self.n {
            return Err(contract("tangent matrix has wrong shape"));
        }
        if asymmetry(&components) > SYMMETRY_TOL * components.amax().max(1.0) {
            return Err(contract("SPD tangent must be symmetric"));
        }
        Ok(Tangent::new(x.clone(), symmetrize(&components)))
    }

    fn check_dims(&self, x: &SpdPoint) -> Result<()> {
        if x.n() != self.n {
            return Err(contract(format!(
                "{}×{} matrix on spd({})",
                x.n(),
                x.n(),
                self.n
            )));
        }
        Ok(())
    }
}

impl Manifold for Spd {
    type Point = SpdPoint;
    type Vector = DMatrix<f64>;

    fn descriptor(&self) -> Descriptor {
        Descriptor {
            kind: GeometryKind::Spd,
            n: self.n,
        }
    }

    fn kappa_lower(&self) -> f64 {
        self.kappa
    }

    fn check_point(&self, x: &SpdPoint) -> Result<()> {
        self.check_dims(x)?;
        if asymmetry(&x.mat) > SYMMETRY_TOL * x.mat.amax().max(1.0) {
            return Err(Error::InvalidPoint("matrix is not symmetric".into()));
        }
        x.eig.require_positive("SPD point")
    }

    fn same_point(&self, x: &SpdPoint, y: &SpdPoint) -> bool {
        x.n() == y.n() && (&x.mat - &y.mat).amax() <= 1e-12 * x.mat.amax().max(1.0)
    }

    fn zero_tangent(&self, x: &SpdPoint) -> STangent {
        Tangent::new(x.clone(), DMatrix::zeros(self.n, self.n))
    }

    fn scale_vector(&self, v: &DMatrix<f64>, a: f64) -> DMatrix<f64> {
        v * a
    }

    fn add_vectors(&self, u: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
        u + v
    }

    fn distance(&self, x: &SpdPoint, y: &SpdPoint) -> Result<f64> {
        self.check_dims(x)?;
        self.check_dims(y)?;
        let eig = SymEigen::new(&x.whiten(&y.mat));
        eig.require_positive("X^{-1/2} Y X^{-1/2}")?;
        Ok(eig
            .values
            .iter()
            .map(|l| l.ln().powi(2))
            .sum::<f64>()
            .sqrt())
    }

    fn exp_map(&self, x: &SpdPoint, v: &STangent) -> Result<SpdPoint> {
        self.check_dims(x)?;
        self.check_base(x, v)?;
        let inner = SymEigen::new(&x.whiten(&v.components)).map(f64::exp);
        SpdPoint::from_symmetric(x.color(&inner))
    }

    fn log_map(&self, x: &SpdPoint, y: &SpdPoint) -> Result<STangent> {
        self.check_dims(x)?;
        self.check_dims(y)?;
        let eig = SymEigen::new(&x.whiten(&y.mat));
        eig.require_positive("X^{-1/2} Y X^{-1/2}")?;
        Ok(Tangent::new(x.clone(), x.color(&eig.map(f64::ln))))
    }

    fn parallel_transport(&self, x: &SpdPoint, y: &SpdPoint, v: &STangent) -> Result<STangent> {
        self.check_dims(y)?;
        self.check_base(x, v)?;
        // E = (Y X⁻¹)^{1/2} = X^{1/2} (X^{-1/2} Y X^{-1/2})^{1/2} X^{-1/2}; Γv = E v Eᵀ.
        let mid = SymEigen::new(&x.whiten(&y.mat)).map(f64::sqrt);
        let e = &x.sqrt * mid * &x.inv_sqrt;
        let moved = symmetrize(&(&e * &v.components * e.transpose()));
        Ok(Tangent::new(y.clone(), moved))
    }

    fn inner(&self, x: &SpdPoint, u: &STangent, v: &STangent) -> Result<f64> {
        self.check_base(x, u)?;
        self.check_base(x, v)?;
        Ok(frobenius_dot(
            &x.whiten(&u.components),
            &x.whiten(&v.components),
        ))
    }

    fn random_tangent(&self, x: &SpdPoint, rng: &mut dyn RngCore) -> STangent {
        // Whitened coordinates: symmetric with unit-variance orthonormal-basis coefficients.
        let n = self.n;
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            s[(i, i)] = StandardNormal.sample(rng);
            for j in (i + 1)..n {
                let z: f64 = StandardNormal.sample(rng);
                s[(i, j)] = z * std::f64::consts::FRAC_1_SQRT_2;
                s[(j, i)] = s[(i, j)];
            }
        }
        Tangent::new(x.clone(), x.color(&s))
    }
}
