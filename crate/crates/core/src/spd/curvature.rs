//! Riemannian curvature of `(SPD(n), g_W)`.
//!
//! Two independent routes to the scalar curvature live here:
//!
//! * [`scalar_curvature`]: the closed form in the eigenvalues of `S`,
//!   `3 tr(UΛP + PΛU + PΛUΛP)` with `P = U + Uᵀ` and `U` strictly upper
//!   triangular, `U_ij = 1/(λ_i + λ_j)` for `i < j`.
//! * [`scalar_curvature_oracle`]: builds a `g_W`-orthonormal basis of the
//!   tangent space and sums the curvature tensor over basis pairs.
//!
//! The closed form equals the oracle summed over *unordered* pairs `a < b`.
//! Summing over ordered pairs ([`ordered_pair_curvature_sum`]) gives exactly
//! twice that value, which is the scalar curvature under the usual
//! `Σ_{a≠b} K(e_a, e_b)` convention. Features use the closed form as is.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{metric, sylvester_solve_matrix, trace_of_product, SpdMatrix, TangentVector};
use crate::error::{Error, Result};

/// `R(X, Y, X, Y) = 3 tr(Γ[X] S Γ([Γ[X], Γ[Y]]) S Γ[Y])`.
///
/// The inner `Γ` is the Sylvester solve applied to the commutator, which is
/// antisymmetric; its solution is antisymmetric as well.
pub fn curvature_tensor(s: &SpdMatrix, x: &TangentVector, y: &TangentVector) -> Result<f64> {
    if x.dim() != s.dim() || y.dim() != s.dim() {
        return Err(Error::Parameter("dimension mismatch in curvature tensor".into()));
    }
    let gx = sylvester_solve_matrix(s, x.as_matrix());
    let gy = sylvester_solve_matrix(s, y.as_matrix());
    Ok(tensor_from_gammas(s, &gx, &gy))
}

fn tensor_from_gammas(s: &SpdMatrix, gx: &DMatrix<f64>, gy: &DMatrix<f64>) -> f64 {
    let commutator = gx * gy - gy * gx;
    let inner = sylvester_solve_matrix(s, &commutator);
    let left = gx * s.matrix() * inner * s.matrix();
    3.0 * trace_of_product(&left, gy)
}

/// The three trace terms of the closed form, each already multiplied by 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTerms {
    /// `3 tr(UΛP)`
    pub upper_first: f64,
    /// `3 tr(PΛU)`
    pub upper_last: f64,
    /// `3 tr(PΛUΛP)`
    pub sandwich: f64,
}

impl CurvatureTerms {
    pub fn total(&self) -> f64 {
        self.upper_first + self.upper_last + self.sandwich
    }

    /// Sum with per-term signs. Used to check that the oracle comparison
    /// notices a transcription error in any single term.
    pub fn signed_total(&self, signs: [f64; 3]) -> f64 {
        signs[0] * self.upper_first + signs[1] * self.upper_last + signs[2] * self.sandwich
    }
}

/// Evaluates the three closed-form terms from the spectrum of `S`.
pub fn scalar_curvature_terms(s: &SpdMatrix) -> Result<CurvatureTerms> {
    let n = s.dim();
    if n < 2 {
        return Err(Error::Domain(format!("scalar curvature needs n >= 2, got SPD({n})")));
    }
    let lambda = s.eigenvalues();
    let mut u = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let sum = lambda[i] + lambda[j];
            let inv = 1.0 / sum;
            if !(sum > 0.0) || !inv.is_finite() {
                return Err(Error::Domain(format!(
                    "eigenvalue pair λ_{i} = {:e}, λ_{j} = {:e} has an unusable sum",
                    lambda[i], lambda[j]
                )));
            }
            u[(i, j)] = inv;
        }
    }
    let lam = DMatrix::from_diagonal(lambda);
    let p = &u + u.transpose();
    let u_lam = &u * &lam;
    let p_lam = &p * &lam;
    let upper_first = 3.0 * trace_of_product(&u_lam, &p);
    let upper_last = 3.0 * trace_of_product(&p_lam, &u);
    let sandwich = 3.0 * trace_of_product(&(&p_lam * &u_lam), &p);
    let terms = CurvatureTerms {
        upper_first,
        upper_last,
        sandwich,
    };
    if !terms.total().is_finite() {
        return Err(Error::Domain("scalar curvature overflowed".into()));
    }
    Ok(terms)
}

/// Closed-form Wasserstein scalar curvature `ρ(S)`.
pub fn scalar_curvature(s: &SpdMatrix) -> Result<f64> {
    scalar_curvature_terms(s).map(|t| t.total())
}

/// The upper bound `3n(n-1) / λ_min2(S)` on the scalar curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBound {
    /// Second-smallest eigenvalue.
    pub lambda_min2: f64,
    pub bound: f64,
}

impl CurvatureBound {
    pub fn of(s: &SpdMatrix) -> Result<Self> {
        let n = s.dim();
        if n < 2 {
            return Err(Error::Domain("curvature bound needs n >= 2".into()));
        }
        let lambda_min2 = s.eigenvalues()[1];
        let bound = 3.0 * (n * (n - 1)) as f64 / lambda_min2;
        Ok(CurvatureBound { lambda_min2, bound })
    }

    pub fn contains(&self, rho: f64) -> bool {
        rho > 0.0 && rho < self.bound
    }
}

/// Canonical basis of symmetric matrices: `E_ii`, then `(E_ij + E_ji)/√2`
/// for `i < j`, in row-major order.
fn canonical_basis(n: usize) -> Vec<DMatrix<f64>> {
    let mut basis = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let mut e = DMatrix::zeros(n, n);
            if i == j {
                e[(i, i)] = 1.0;
            } else {
                e[(i, j)] = std::f64::consts::FRAC_1_SQRT_2;
                e[(j, i)] = std::f64::consts::FRAC_1_SQRT_2;
            }
            basis.push(e);
        }
    }
    basis
}

/// A `g_W`-orthonormal basis of `T_S SPD(n)` by modified Gram–Schmidt.
///
/// `order` permutes the canonical basis before orthonormalization; `None`
/// keeps the canonical order. Each vector is orthogonalized twice.
pub fn tangent_basis(s: &SpdMatrix, order: Option<&[usize]>) -> Result<Vec<TangentVector>> {
    let canonical = canonical_basis(s.dim());
    let m = canonical.len();
    let order: Vec<usize> = match order {
        Some(o) => {
            let mut sorted = o.to_vec();
            sorted.sort_unstable();
            if sorted != (0..m).collect::<Vec<_>>() {
                return Err(Error::Parameter(format!("basis order must be a permutation of 0..{m}")));
            }
            o.to_vec()
        }
        None => (0..m).collect(),
    };
    let mut out: Vec<TangentVector> = Vec::with_capacity(m);
    for &idx in &order {
        let mut v = TangentVector::symmetrized(canonical[idx].clone());
        for _ in 0..2 {
            for q in &out {
                let c = metric(s, &v, q)?;
                v = TangentVector::symmetrized(v.as_matrix() - q.as_matrix() * c);
            }
        }
        let norm = metric(s, &v, &v)?.sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain("tangent basis became degenerate".into()));
        }
        out.push(TangentVector::symmetrized(v.into_matrix() / norm));
    }
    Ok(out)
}

fn pair_sum(s: &SpdMatrix, order: Option<&[usize]>, ordered: bool) -> Result<f64> {
    let basis = tangent_basis(s, order)?;
    let gammas: Vec<DMatrix<f64>> = basis.iter().map(|e| sylvester_solve_matrix(s, e.as_matrix())).collect();
    let mut total = 0.0;
    for a in 0..gammas.len() {
        let start = if ordered { 0 } else { a + 1 };
        for b in start..gammas.len() {
            if a != b {
                total += tensor_from_gammas(s, &gammas[a], &gammas[b]);
            }
        }
    }
    Ok(total)
}

/// Scalar curvature from the curvature tensor, summed over unordered pairs
/// of a `g_W`-orthonormal tangent basis. Independent of the closed form.
pub fn scalar_curvature_oracle(s: &SpdMatrix) -> Result<f64> {
    pair_sum(s, None, false)
}

/// [`scalar_curvature_oracle`] with a permuted Gram–Schmidt input order.
pub fn scalar_curvature_oracle_with_order(s: &SpdMatrix, order: &[usize]) -> Result<f64> {
    pair_sum(s, Some(order), false)
}

/// `Σ_a Σ_b R(e_a, e_b, e_a, e_b)` over all ordered pairs of the basis.
pub fn ordered_pair_curvature_sum(s: &SpdMatrix) -> Result<f64> {
    pair_sum(s, None, true)
}
