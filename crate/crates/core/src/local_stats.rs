//! Lifting a Euclidean point cloud to SPD(d) through kNN neighborhoods.
//!
//! Each point is replaced by the Gaussian fitted to its `k` nearest
//! neighbors (itself included). The covariance is the unnormalized scatter
//! `Σ_j (N_j − μ)(N_j − μ)ᵀ` by default, plus a tiny ridge so degenerate
//! neighborhoods still land inside the SPD cone.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::EuclideanCloud;
use crate::error::{Error, Result};
use crate::spd::{regularization, SpdMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceNormalization {
    /// Plain sum of outer products.
    #[default]
    Sum,
    /// Sum divided by `k`.
    Mean,
}

impl std::str::FromStr for CovarianceNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(CovarianceNormalization::Sum),
            "mean" => Ok(CovarianceNormalization::Mean),
            other => Err(Error::Parameter(format!("unknown covariance normalization `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub center_index: usize,
    /// Indices of the members, nearest first.
    pub member_indices: Vec<usize>,
    pub members: Vec<DVector<f64>>,
}

/// A Gaussian `N(μ, Σ)` attached to one point of the cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPoint {
    pub mean: DVector<f64>,
    pub covariance: SpdMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpdCloud {
    points: Vec<GaussianPoint>,
    k: usize,
    normalization: CovarianceNormalization,
    regularization: Vec<f64>,
}

impl SpdCloud {
    pub fn points(&self) -> &[GaussianPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn normalization(&self) -> CovarianceNormalization {
        self.normalization
    }

    /// The ridge added to each covariance, in cloud order.
    pub fn regularization(&self) -> &[f64] {
        &self.regularization
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GaussianPoint> {
        self.points.iter()
    }
}

/// Exhaustive kNN. Every neighborhood contains its own center; ties in
/// distance go to the lower index.
pub fn knn(cloud: &EuclideanCloud, k: usize) -> Result<Vec<Neighborhood>> {
    let points = cloud.points();
    check_k(k, points.len())?;
    Ok((0..points.len())
        .map(|center| neighborhood(points, center, k))
        .collect())
}

fn check_k(k: usize, count: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::Parameter(format!("k = {k}, need k >= 2")));
    }
    if k > count {
        return Err(Error::Parameter(format!("k = {k} exceeds the point count {count}")));
    }
    Ok(())
}

fn neighborhood(points: &[DVector<f64>], center: usize, k: usize) -> Neighborhood {
    let origin = &points[center];
    let mut by_distance: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| ((p - origin).norm_squared(), i))
        .collect();
    by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let member_indices: Vec<usize> = by_distance[..k].iter().map(|&(_, i)| i).collect();
    let members = member_indices.iter().map(|&i| points[i].clone()).collect();
    Neighborhood {
        center_index: center,
        member_indices,
        members,
    }
}

/// Mean and unnormalized scatter of a neighborhood, before the ridge.
pub fn raw_scatter(members: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let d = members[0].len();
    let mut mean = DVector::zeros(d);
    for m in members {
        mean += m;
    }
    mean /= members.len() as f64;
    let mut scatter = DMatrix::zeros(d, d);
    for m in members {
        let c = m - &mean;
        scatter += &c * c.transpose();
    }
    (mean, scatter)
}

/// Fits the local Gaussian to one neighborhood. Returns the point and the
/// ridge `δ` that was added to the diagonal.
pub fn local_gaussian(nbhd: &Neighborhood, normalization: CovarianceNormalization) -> Result<(GaussianPoint, f64)> {
    if nbhd.members.len() < 2 {
        return Err(Error::Parameter("neighborhood needs at least 2 members".into()));
    }
    let (mean, mut scatter) = raw_scatter(&nbhd.members);
    if normalization == CovarianceNormalization::Mean {
        scatter /= nbhd.members.len() as f64;
    }
    let scatter = (&scatter + scatter.transpose()) * 0.5;
    let delta = regularization(scatter.trace());
    let d = scatter.nrows();
    let covariance =
        SpdMatrix::new(scatter + DMatrix::identity(d, d) * delta).map_err(|e| e.at_point(nbhd.center_index))?;
    Ok((GaussianPoint { mean, covariance }, delta))
}

/// Maps every point of the cloud to its local Gaussian, order preserved.
pub fn lift(cloud: &EuclideanCloud, k: usize, normalization: CovarianceNormalization) -> Result<SpdCloud> {
    let points = cloud.points();
    check_k(k, points.len())?;
    let fitted: Vec<(GaussianPoint, f64)> = (0..points.len())
        .into_par_iter()
        .map(|i| local_gaussian(&neighborhood(points, i, k), normalization))
        .collect::<Result<_>>()?;
    let (points, regularization) = fitted.into_iter().unzip();
    Ok(SpdCloud {
        points,
        k,
        normalization,
        regularization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cloud(points: &[&[f64]]) -> EuclideanCloud {
        EuclideanCloud::from_points(points.iter().map(|p| DVector::from_column_slice(p)).collect()).unwrap()
    }

    #[test]
    fn collinear_self_inclusive() {
        let c = cloud(&[&[0.0], &[1.0], &[2.0], &[3.0]]);
        let n = knn(&c, 2).unwrap();
        assert_eq!(n[0].member_indices, vec![0, 1]);
        // Point 1 is equidistant from 0 and 2; the lower index wins.
        assert_eq!(n[1].member_indices, vec![1, 0]);
        assert_eq!(n[3].member_indices, vec![3, 2]);
    }

    #[test]
    fn k_equal_to_count_takes_everything() {
        let c = cloud(&[&[0.0, 1.0], &[5.0, 1.0], &[2.0, -1.0]]);
        for nb in knn(&c, 3).unwrap() {
            let mut idx = nb.member_indices.clone();
            idx.sort();
            assert_eq!(idx, vec![0, 1, 2]);
        }
    }

    #[test]
    fn invalid_k() {
        let c = cloud(&[&[0.0], &[1.0]]);
        assert!(matches!(knn(&c, 3), Err(Error::Parameter(_))));
        assert!(matches!(knn(&c, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn identical_members_give_ridge_only() {
        let p = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        let nb = Neighborhood {
            center_index: 0,
            member_indices: vec![0, 1, 2],
            members: vec![p.clone(), p.clone(), p.clone()],
        };
        let (g, delta) = local_gaussian(&nb, CovarianceNormalization::Sum).unwrap();
        assert_eq!(g.mean, p);
        assert_eq!(delta, 1e-10);
        assert_relative_eq!(*g.covariance.matrix(), DMatrix::identity(3, 3) * 1e-10, epsilon = 1e-24);
    }

    #[test]
    fn scatter_hand_example() {
        let members: Vec<DVector<f64>> = [[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]]
            .iter()
            .map(|p| DVector::from_column_slice(p))
            .collect();
        let (mean, scatter) = raw_scatter(&members);
        assert_eq!(mean, DVector::from_column_slice(&[1.0, 1.0]));
        assert_eq!(scatter, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 6.0]));
    }

    #[test]
    fn mean_normalization_divides_by_k() {
        let members: Vec<DVector<f64>> = [[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]]
            .iter()
            .map(|p| DVector::from_column_slice(p))
            .collect();
        let nb = Neighborhood {
            center_index: 0,
            member_indices: vec![0, 1, 2],
            members,
        };
        let (sum, _) = local_gaussian(&nb, CovarianceNormalization::Sum).unwrap();
        let (mean, _) = local_gaussian(&nb, CovarianceNormalization::Mean).unwrap();
        assert_relative_eq!(sum.covariance.matrix()[(1, 1)], 6.0, epsilon = 1e-8);
        assert_relative_eq!(mean.covariance.matrix()[(1, 1)], 2.0, epsilon = 1e-8);
    }

    #[test]
    fn lift_preserves_cardinality() {
        let pts: Vec<DVector<f64>> = (0..30)
            .map(|i| {
                let t = i as f64 * 0.3;
                DVector::from_column_slice(&[t.cos(), t.sin(), 0.1 * t])
            })
            .collect();
        let c = EuclideanCloud::from_points(pts).unwrap();
        let lifted = lift(&c, 5, CovarianceNormalization::Sum).unwrap();
        assert_eq!(lifted.len(), 30);
        assert_eq!(lifted.k(), 5);
        for (g, delta) in lifted.iter().zip(lifted.regularization()) {
            assert!(g.covariance.eigenvalues()[0] >= delta * (1.0 - 1e-6));
        }
    }
}
