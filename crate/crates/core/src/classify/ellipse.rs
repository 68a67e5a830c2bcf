use nalgebra::{Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::features::DispersionPoint;

/// Coverage region of a class on the dispersion plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceEllipse {
    pub label: String,
    pub center: [f64; 2],
    /// Major then minor semi-axis.
    pub semi_axes: [f64; 2],
    /// Angle of the major axis from the `cur1` axis, in `(-π/2, π/2]`.
    pub orientation: f64,
    pub coverage: f64,
}

impl ConfidenceEllipse {
    /// Squared Mahalanobis-type radius of `p`; `<= 1` inside the ellipse.
    pub fn radius2(&self, p: DispersionPoint) -> f64 {
        let (dx, dy) = (p.cur1 - self.center[0], p.cur2 - self.center[1]);
        let (c, s) = (self.orientation.cos(), self.orientation.sin());
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        (u / self.semi_axes[0]).powi(2) + (v / self.semi_axes[1]).powi(2)
    }
}

/// Quantile of the χ² distribution with `dof` degrees of freedom, by
/// bisection on the regularized lower incomplete gamma function.
pub fn chi_squared_quantile(p: f64, dof: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) || !(dof > 0.0) {
        return Err(Error::Parameter(format!(
            "χ² quantile needs 0 < p < 1 and dof > 0, got p = {p}, dof = {dof}"
        )));
    }
    let cdf = |x: f64| gamma_lr(dof / 2.0, x / 2.0);
    let mut hi = dof.max(1.0);
    while cdf(hi) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// PCA ellipse of a point set at the given coverage.
pub fn confidence_ellipse(points: &[DispersionPoint], coverage: f64, label: &str) -> Result<ConfidenceEllipse> {
    if points.len() < 3 {
        return Err(Error::Parameter(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let q = chi_squared_quantile(coverage, 2.0)?;
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.cur1).sum::<f64>() / n;
    let my = points.iter().map(|p| p.cur2).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.cur1 - mx, p.cur2 - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let cov = Matrix2::new(sxx, sxy, sxy, syy) / (n - 1.0);
    let eig = SymmetricEigen::new(cov);
    let (major, minor) = if eig.eigenvalues[0] >= eig.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let (l_major, l_minor) = (eig.eigenvalues[major], eig.eigenvalues[minor]);
    if !(l_minor > 1e-12 * l_major.abs().max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateEllipse(format!(
            "covariance eigenvalues {l_major:e}, {l_minor:e}: points are collinear or coincident"
        )));
    }
    let v = eig.eigenvectors.column(major);
    let mut angle = v[1].atan2(v[0]);
    if angle <= -std::f64::consts::FRAC_PI_2 {
        angle += std::f64::consts::PI;
    } else if angle > std::f64::consts::FRAC_PI_2 {
        angle -= std::f64::consts::PI;
    }
    Ok(ConfidenceEllipse {
        label: label.to_string(),
        center: [mx, my],
        semi_axes: [(q * l_major).sqrt(), (q * l_minor).sqrt()],
        orientation: angle,
        coverage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<DispersionPoint> {
        v.iter().map(|&(a, b)| DispersionPoint::new(a, b)).collect()
    }

    #[test]
    fn chi2_two_dof_is_closed_form() {
        for p in [0.5, 0.9, 0.95, 0.99] {
            let q = chi_squared_quantile(p, 2.0).unwrap();
            assert!((q - (-2.0 * (1.0 - p).ln())).abs() < 1e-10);
        }
        assert!((chi_squared_quantile(0.95, 2.0).unwrap() - 5.991).abs() < 1e-3);
        assert!((chi_squared_quantile(0.95, 1.0).unwrap() - 3.841).abs() < 1e-3);
    }

    #[test]
    fn symmetric_cross_is_axis_aligned() {
        let e = confidence_ellipse(&pts(&[(2.0, 0.0), (-2.0, 0.0), (0.0, 1.0), (0.0, -1.0)]), 0.95, "x").unwrap();
        assert!(e.center[0].abs() < 1e-15 && e.center[1].abs() < 1e-15);
        assert!(e.orientation.abs() < 1e-12);
        assert!((e.semi_axes[0] / e.semi_axes[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_has_equal_axes() {
        let e = confidence_ellipse(&pts(&[(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]), 0.9, "x").unwrap();
        assert!((e.semi_axes[0] - e.semi_axes[1]).abs() < 1e-12);
    }

    #[test]
    fn collinear_is_degenerate() {
        let r = confidence_ellipse(&pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]), 0.95, "x");
        assert!(matches!(r, Err(Error::DegenerateEllipse(_))));
        assert!(confidence_ellipse(&pts(&[(0.0, 0.0), (1.0, 1.0)]), 0.95, "x").is_err());
        assert!(confidence_ellipse(&pts(&[(0.0, 1.0), (1.0, 0.0), (2.0, 2.0)]), 1.0, "x").is_err());
    }
}
