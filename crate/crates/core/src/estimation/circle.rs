//! Algebraic (Kåsa) least-squares circle fit.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::EstimationError;

/// Smallest/largest eigenvalue ratio of the normal matrix below which the
/// points are treated as collinear.
pub const CONDITION_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleFit {
    pub center: Vector2<f64>,
    pub radius: f64,
    /// Population standard deviation of the point distances to `center`.
    pub radius_std: f64,
}

/// Fits `x² + y² + D·x + E·y + F = 0` by linear least squares.
///
/// Points are centred on their mean and scaled to unit RMS spread first, so
/// the conditioning test is independent of units and placement.
pub fn fit_circle(points: &[Vector2<f64>]) -> Result<CircleFit, EstimationError> {
    if points.len() < 3 {
        return Err(EstimationError::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vector2<f64>>() / n;
    let scale = (points.iter().map(|p| (p - mean).norm_squared()).sum::<f64>() / n).sqrt();
    if !(scale.is_finite() && scale > 0.0) {
        return Err(EstimationError::CollinearPoints);
    }

    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for p in points {
        let u = (p - mean) / scale;
        let row = Vector3::new(u.x, u.y, 1.0);
        normal += row * row.transpose();
        rhs -= row * u.norm_squared();
    }

    let eig = normal.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(hi > 0.0) || lo / hi < CONDITION_THRESHOLD {
        return Err(EstimationError::CollinearPoints);
    }
    let sol = normal
        .cholesky()
        .ok_or(EstimationError::CollinearPoints)?
        .solve(&rhs);

    let center_u = Vector2::new(-0.5 * sol.x, -0.5 * sol.y);
    let r2 = center_u.norm_squared() - sol.z;
    if !(r2 > 0.0) {
        return Err(EstimationError::CollinearPoints);
    }
    let center = mean + center_u * scale;
    let radius = r2.sqrt() * scale;

    let dists: Vec<f64> = points.iter().map(|p| (p - center).norm()).collect();
    let mean_d = dists.iter().sum::<f64>() / n;
    let radius_std = (dists.iter().map(|d| (d - mean_d).powi(2)).sum::<f64>() / n).sqrt();

    Ok(CircleFit {
        center,
        radius,
        radius_std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    #[test]
    fn eight_exact_points() {
        let pts: Vec<_> = (0..8)
            .map(|i| {
                let a = TAU * i as f64 / 8.0;
                Vector2::new(1.0 + 3.0 * a.cos(), 2.0 + 3.0 * a.sin())
            })
            .collect();
        let fit = fit_circle(&pts).unwrap();
        assert_relative_eq!(fit.center.x, 1.0, epsilon = 1e-9);
        assert_relative_eq!(fit.center.y, 2.0, epsilon = 1e-9);
        assert_relative_eq!(fit.radius, 3.0, epsilon = 1e-9);
        assert!(fit.radius_std < 1e-9);
    }

    #[test]
    fn three_point_circumcircle() {
        let pts = [Vector2::new(0.0, 0.0), Vector2::new(2.0, 0.0), Vector2::new(1.0, 1.0)];
        let fit = fit_circle(&pts).unwrap();
        assert_relative_eq!(fit.center.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.center.y, 0.0, epsilon = 1e-12);
        assert_relative_eq!(fit.radius, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn collinear_and_degenerate_inputs() {
        let line: Vec<_> = (0..10).map(|i| Vector2::new(i as f64, 2.0 * i as f64)).collect();
        assert_eq!(fit_circle(&line), Err(EstimationError::CollinearPoints));
        let same = [Vector2::new(1.0, 1.0); 5];
        assert_eq!(fit_circle(&same), Err(EstimationError::CollinearPoints));
        assert!(matches!(
            fit_circle(&[Vector2::new(0.0, 0.0), Vector2::new(1.0, 0.0)]),
            Err(EstimationError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn short_arc_is_still_exact() {
        let pts: Vec<_> = (0..4)
            .map(|i| {
                let a = 0.05 * i as f64;
                Vector2::new(-4.0 + 0.7 * a.cos(), 9.0 + 0.7 * a.sin())
            })
            .collect();
        let fit = fit_circle(&pts).unwrap();
        assert_relative_eq!(fit.radius, 0.7, epsilon = 1e-9);
    }
}
