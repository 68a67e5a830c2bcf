//! Bures–Wasserstein geometry on the cone of symmetric positive-definite
//! matrices.
//!
//! Every operation here goes through one primitive, the symmetric
//! eigendecomposition cached inside [`SpdMatrix`]. The Sylvester operator
//! `Γ_S[Y]` (the solution of `SΓ + ΓS = Y`) is diagonal in the eigenbasis of
//! `S`, which makes the metric, the curvature tensor and the closed-form
//! scalar curvature cheap to evaluate.

mod curvature;
mod wasserstein;

pub use curvature::{
    curvature_tensor, ordered_pair_curvature_sum, scalar_curvature, scalar_curvature_oracle,
    scalar_curvature_oracle_with_order, scalar_curvature_terms, tangent_basis, CurvatureBound, CurvatureTerms,
};
pub use wasserstein::{bures_distance, distance_matrix, wasserstein_distance, DistanceForm};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative asymmetry accepted before a matrix is rejected as non-symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Eigenvalues down to `-NEGATIVE_EIGEN_TOLERANCE * λ_max` are treated as
/// rounding noise and clamped; anything more negative is a domain error.
pub const NEGATIVE_EIGEN_TOLERANCE: f64 = 1e-12;

/// Regularization added to the diagonal of degenerate scatter matrices:
/// `1e-10 * max(1, trace)`.
pub fn regularization(trace: f64) -> f64 {
    1e-10 * trace.max(1.0)
}

/// A symmetric positive-definite matrix together with its spectrum.
///
/// Eigenvalues are stored in ascending order, with the eigenvectors as the
/// matching columns of an orthogonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    matrix: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpdMatrix {
    /// Validates `matrix` and caches its eigendecomposition.
    ///
    /// The input is symmetrized after the symmetry check. Slightly negative
    /// eigenvalues (rounding noise) are clamped to the regularization scale.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::Domain(format!(
                "expected a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > SYMMETRY_TOLERANCE * scale {
            return Err(Error::Domain(format!(
                "matrix is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let (mut values, vectors) = sorted_eigen(&sym);
        let lambda_max = values[n - 1];
        if lambda_max <= 0.0 {
            return Err(Error::Domain(format!(
                "largest eigenvalue {lambda_max:e} is not positive"
            )));
        }
        let lambda_min = values[0];
        if lambda_min > 0.0 {
            return Ok(SpdMatrix {
                matrix: sym,
                eigenvalues: values,
                eigenvectors: vectors,
            });
        }
        if lambda_min < -NEGATIVE_EIGEN_TOLERANCE * lambda_max {
            return Err(Error::Domain(format!("smallest eigenvalue {lambda_min:e} is negative")));
        }
        let delta = regularization(sym.trace());
        for v in values.iter_mut() {
            if *v <= 0.0 {
                *v = delta;
            }
        }
        Ok(Self::from_eigen(values, vectors))
    }

    /// Builds the matrix `V diag(values) Vᵀ` from a trusted decomposition.
    ///
    /// `values` must be positive and ascending and `vectors` orthogonal.
    pub(crate) fn from_eigen(values: DVector<f64>, vectors: DMatrix<f64>) -> Self {
        let matrix = recompose(&vectors, values.as_slice());
        SpdMatrix {
            matrix,
            eigenvalues: values,
            eigenvectors: vectors,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_eigen(DVector::from_element(n, 1.0), DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diagonal: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diagonal)))
    }

    /// Returns `c * self`; `c` must be positive.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Parameter(format!("scale factor {c} must be positive")));
        }
        let values = &self.eigenvalues * c;
        let mut out = Self::from_eigen(values, self.eigenvectors.clone());
        out.matrix = &self.matrix * c;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Expresses `m` in the eigenbasis: `Vᵀ m V`.
    fn to_eigenbasis(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.eigenvectors.transpose() * m * &self.eigenvectors
    }

    fn out_of_eigenbasis(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.eigenvectors * m * self.eigenvectors.transpose()
    }
}

/// A symmetric matrix, viewed as a tangent vector of SPD(n).
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector(DMatrix<f64>);

impl TangentVector {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Parameter("tangent vector must be square".into()));
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > SYMMETRY_TOLERANCE * scale {
            return Err(Error::Parameter(format!(
                "tangent vector is not symmetric (max asymmetry {asym:e})"
            )));
        }
        Ok(Self::symmetrized(matrix))
    }

    /// `(m + mᵀ) / 2`, with no symmetry check.
    pub fn symmetrized(matrix: DMatrix<f64>) -> Self {
        let sym = (&matrix + matrix.transpose()) * 0.5;
        TangentVector(sym)
    }

    pub fn from_row_slice(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Parameter(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
pub(crate) fn sorted_eigen(sym: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = sym.nrows();
    let eig = sym.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

fn recompose(vectors: &DMatrix<f64>, values: &[f64]) -> DMatrix<f64> {
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    let m = scaled * vectors.transpose();
    (&m + m.transpose()) * 0.5
}

/// Principal square root: the unique SPD `R` with `R·R = S`.
pub fn spd_sqrt(s: &SpdMatrix) -> SpdMatrix {
    let values = s.eigenvalues.map(f64::sqrt);
    SpdMatrix::from_eigen(values, s.eigenvectors.clone())
}

/// Solves `SΓ + ΓS = Y` for an arbitrary square right-hand side.
///
/// In the eigenbasis of `S` the equation decouples entrywise:
/// `Γ'_ij = Y'_ij / (λ_i + λ_j)`. Antisymmetric `Y` gives antisymmetric `Γ`.
pub(crate) fn sylvester_solve_matrix(s: &SpdMatrix, y: &DMatrix<f64>) -> DMatrix<f64> {
    let lambda = &s.eigenvalues;
    let mut rotated = s.to_eigenbasis(y);
    for j in 0..rotated.ncols() {
        for i in 0..rotated.nrows() {
            rotated[(i, j)] /= lambda[i] + lambda[j];
        }
    }
    s.out_of_eigenbasis(&rotated)
}

/// `Γ_S[Y]`, the solution of the Sylvester equation `SΓ + ΓS = Y`.
pub fn sylvester_solve(s: &SpdMatrix, y: &TangentVector) -> Result<TangentVector> {
    check_dims(s, y)?;
    Ok(TangentVector::symmetrized(sylvester_solve_matrix(s, &y.0)))
}

/// The Wasserstein metric `g_S(X, Y) = ½ tr(Γ_S[Y] X)`.
pub fn metric(s: &SpdMatrix, x: &TangentVector, y: &TangentVector) -> Result<f64> {
    check_dims(s, x)?;
    check_dims(s, y)?;
    let gamma_y = sylvester_solve_matrix(s, &y.0);
    Ok(0.5 * trace_of_product(&gamma_y, &x.0))
}

/// `tr(A B)` without forming the product.
pub(crate) fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| x * y).sum()
}

fn check_dims(s: &SpdMatrix, v: &TangentVector) -> Result<()> {
    if s.dim() != v.dim() {
        return Err(Error::Parameter(format!(
            "dimension mismatch: SPD({}) vs tangent vector of size {}",
            s.dim(),
            v.dim()
        )));
    }
    Ok(())
}

/// Draws `A Aᵀ + jitter·I` with standard normal `A`.
///
/// The jitter keeps the smallest eigenvalue away from zero so that samples are
/// usable for residual checks at fixed tolerances.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, n: usize, jitter: f64) -> SpdMatrix {
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let m = &a * a.transpose() + DMatrix::identity(n, n) * jitter;
    SpdMatrix::new(m).expect("A Aᵀ + jitter I is positive definite")
}

/// A random symmetric matrix with standard normal upper triangle.
pub fn random_tangent<R: Rng + ?Sized>(rng: &mut R, n: usize) -> TangentVector {
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    TangentVector::symmetrized(a)
}
