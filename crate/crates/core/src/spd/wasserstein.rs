use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{sorted_eigen, spd_sqrt, SpdMatrix};
use crate::error::{Error, Result};
use crate::local_stats::{GaussianPoint, SpdCloud};

/// How the mean term and the covariance (Bures) term are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceForm {
    /// `‖μ₁ − μ₂‖ + B(Σ₁, Σ₂)`.
    #[default]
    Additive,
    /// `sqrt(‖μ₁ − μ₂‖² + B(Σ₁, Σ₂)²)`, the usual 2-Wasserstein distance.
    L2,
}

impl std::str::FromStr for DistanceForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "additive" => Ok(DistanceForm::Additive),
            "l2" => Ok(DistanceForm::L2),
            other => Err(Error::Parameter(format!("unknown distance form `{other}`"))),
        }
    }
}

/// Bures distance `sqrt(tr(Σ₁ + Σ₂ − 2 (Σ₁^½ Σ₂ Σ₁^½)^½))`.
///
/// The symmetrized product has the same trace square root as `(Σ₁Σ₂)^½`
/// and stays symmetric, so it is diagonalized directly. The trace argument
/// is clamped at zero before the square root.
pub fn bures_distance(s1: &SpdMatrix, s2: &SpdMatrix) -> Result<f64> {
    if s1.dim() != s2.dim() {
        return Err(Error::Parameter(format!(
            "dimension mismatch: SPD({}) vs SPD({})",
            s1.dim(),
            s2.dim()
        )));
    }
    if s1.matrix() == s2.matrix() {
        return Ok(0.0);
    }
    let root = spd_sqrt(s1);
    let middle = root.matrix() * s2.matrix() * root.matrix();
    let middle = (&middle + middle.transpose()) * 0.5;
    let (values, _) = sorted_eigen(&middle);
    let cross: f64 = values.iter().map(|v| v.max(0.0).sqrt()).sum();
    let arg = s1.trace() + s2.trace() - 2.0 * cross;
    Ok(arg.max(0.0).sqrt())
}

/// Wasserstein distance between two Gaussians.
pub fn wasserstein_distance(g1: &GaussianPoint, g2: &GaussianPoint, form: DistanceForm) -> Result<f64> {
    if g1.mean.len() != g2.mean.len() {
        return Err(Error::Parameter("mean dimension mismatch".into()));
    }
    let mean_term = (&g1.mean - &g2.mean).norm();
    let bures = bures_distance(&g1.covariance, &g2.covariance)?;
    Ok(match form {
        DistanceForm::Additive => mean_term + bures,
        DistanceForm::L2 => mean_term.hypot(bures),
    })
}

/// Pairwise distances over a cloud: zero diagonal, exactly symmetric.
pub fn distance_matrix(cloud: &SpdCloud, form: DistanceForm) -> Result<DMatrix<f64>> {
    let points = cloud.points();
    let n = points.len();
    if n == 0 {
        return Err(Error::Parameter("empty cloud".into()));
    }
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = wasserstein_distance(&points[i], &points[j], form)?;
            out[(i, j)] = d;
            out[(j, i)] = d;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::random_spd;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian(mean: &[f64], cov: SpdMatrix) -> GaussianPoint {
        GaussianPoint {
            mean: DVector::from_column_slice(mean),
            covariance: cov,
        }
    }

    #[test]
    fn identical_gaussians_have_zero_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = gaussian(&[1.0, -2.0, 0.5], random_spd(&mut rng, 3, 0.1));
        assert_eq!(wasserstein_distance(&g, &g, DistanceForm::Additive).unwrap(), 0.0);
    }

    #[test]
    fn identity_versus_four_identity() {
        for n in [1, 2, 3, 5] {
            let a = gaussian(&vec![0.0; n], SpdMatrix::identity(n));
            let b = gaussian(&vec![0.0; n], SpdMatrix::from_diagonal(&vec![4.0; n]).unwrap());
            let w = wasserstein_distance(&a, &b, DistanceForm::Additive).unwrap();
            assert!((w - (n as f64).sqrt()).abs() <= 1e-12);
        }
    }

    #[test]
    fn equal_covariances_reduce_to_mean_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cov = random_spd(&mut rng, 3, 0.1);
        let a = gaussian(&[0.0, 0.0, 0.0], cov.clone());
        let b = gaussian(&[3.0, 4.0, 0.0], cov);
        assert_eq!(wasserstein_distance(&a, &b, DistanceForm::Additive).unwrap(), 5.0);
        assert_eq!(wasserstein_distance(&a, &b, DistanceForm::L2).unwrap(), 5.0);
    }

    #[test]
    fn distance_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = gaussian(&[0.1, 0.2, 0.3], random_spd(&mut rng, 3, 0.1));
            let b = gaussian(&[-1.0, 0.0, 2.0], random_spd(&mut rng, 3, 0.1));
            let ab = wasserstein_distance(&a, &b, DistanceForm::Additive).unwrap();
            let ba = wasserstein_distance(&b, &a, DistanceForm::Additive).unwrap();
            assert!((ab - ba).abs() <= 1e-9 * ab.max(1.0));
            let l2 = wasserstein_distance(&a, &b, DistanceForm::L2).unwrap();
            assert!(l2 <= ab + 1e-12);
        }
    }

    #[test]
    fn commuting_case_matches_closed_form() {
        // Diagonal covariances: B² = Σ (√a_i − √b_i)².
        let a = SpdMatrix::from_diagonal(&[1.0, 2.0, 9.0]).unwrap();
        let b = SpdMatrix::from_diagonal(&[4.0, 0.5, 1.0]).unwrap();
        let expected: f64 = [(1.0f64, 4.0f64), (2.0, 0.5), (9.0, 1.0)]
            .iter()
            .map(|(x, y)| (x.sqrt() - y.sqrt()).powi(2))
            .sum::<f64>()
            .sqrt();
        let got = bures_distance(&a, &b).unwrap();
        assert!((got - expected).abs() <= 1e-12);
    }
}
