use crate::{EditError, Result};
use geom_core::{RigidTransform, UnitQuaternion, Vec3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// RANSAC settings for plane fitting.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Point-to-plane inlier distance, meters.
    pub inlier_threshold: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig { iterations: 512, inlier_threshold: 0.005, seed: 0 }
    }
}

/// A fitted plane `normal · p = offset` with the supporting inlier indices.
/// The normal is unit length and oriented toward the +z hemisphere.
#[derive(Debug, Clone)]
pub struct PlaneFit {
    pub normal: Vec3,
    pub offset: f64,
    pub inliers: Vec<usize>,
}

/// RANSAC plane regression: best consensus over random 3-point samples,
/// refit by least squares on the inliers.
pub fn fit_ground_plane(points: &[Vec3], cfg: &RansacConfig) -> Result<PlaneFit> {
    if points.len() < 3 {
        return Err(EditError::DegenerateInput(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(usize, Vec3, f64)> = None;

    for _ in 0..cfg.iterations {
        let i = rng.random_range(0..points.len());
        let j = rng.random_range(0..points.len());
        let k = rng.random_range(0..points.len());
        if i == j || j == k || i == k {
            continue;
        }
        let n = (points[j] - points[i]).cross(points[k] - points[i]);
        let Some(n) = n.normalized() else { continue };
        if n.norm_squared() < 0.5 {
            continue;
        }
        let d = n.dot(points[i]);
        let count =
            points.iter().filter(|p| (n.dot(**p) - d).abs() <= cfg.inlier_threshold).count();
        if best.map_or(true, |(c, _, _)| count > c) {
            best = Some((count, n, d));
        }
    }

    let Some((_, n0, d0)) = best else {
        return Err(EditError::DegenerateInput("all samples were collinear".into()));
    };

    // Least-squares refit on the consensus inliers: centroid plus the
    // smallest-eigenvector of the scatter matrix.
    let inliers0: Vec<usize> = (0..points.len())
        .filter(|&i| (n0.dot(points[i]) - d0).abs() <= cfg.inlier_threshold)
        .collect();
    let (mut normal, mut offset) = (n0, d0);
    if inliers0.len() >= 3 {
        if let Some((n, d)) = least_squares_plane(points, &inliers0) {
            normal = n;
            offset = d;
        }
    }
    if normal.z < 0.0 {
        normal = -normal;
        offset = -offset;
    }
    let inliers: Vec<usize> = (0..points.len())
        .filter(|&i| (normal.dot(points[i]) - offset).abs() <= cfg.inlier_threshold)
        .collect();
    Ok(PlaneFit { normal, offset, inliers })
}

fn least_squares_plane(points: &[Vec3], subset: &[usize]) -> Option<(Vec3, f64)> {
    let n = subset.len() as f64;
    let mut centroid = Vec3::ZERO;
    for &i in subset {
        centroid += points[i];
    }
    let centroid = centroid / n;
    let mut scatter = nalgebra::Matrix3::<f64>::zeros();
    for &i in subset {
        let d = points[i] - centroid;
        let v = nalgebra::Vector3::new(d.x, d.y, d.z);
        scatter += v * v.transpose();
    }
    let eigen = nalgebra::SymmetricEigen::new(scatter);
    let mut min_idx = 0;
    for k in 1..3 {
        if eigen.eigenvalues[k] < eigen.eigenvalues[min_idx] {
            min_idx = k;
        }
    }
    let ev = eigen.eigenvectors.column(min_idx);
    let normal = Vec3::new(ev[0], ev[1], ev[2]).normalized()?;
    Some((normal, normal.dot(centroid)))
}

/// Rigid transform taking the fitted plane onto z = 0: rotate the normal to
/// +z, drop the plane to height zero, then apply the manual adjustment.
///
/// When `obj_points` is nonempty the plane offset is re-estimated as the
/// mean normal projection of those points, which absorbs fit noise.
pub fn align_to_simulator(
    obj_points: &[Vec3],
    plane: &PlaneFit,
    manual: RigidTransform,
) -> RigidTransform {
    let rotation = UnitQuaternion::rotation_between(plane.normal, Vec3::Z);
    let offset = if obj_points.is_empty() {
        plane.offset
    } else {
        obj_points.iter().map(|p| plane.normal.dot(*p)).sum::<f64>() / obj_points.len() as f64
    };
    let align = RigidTransform::from_translation(Vec3::new(0.0, 0.0, -offset))
        .compose(RigidTransform::from_rotation(rotation));
    manual.compose(align)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_on_z0(n: usize) -> Vec<Vec3> {
        let mut pts = Vec::new();
        let side = (n as f64).sqrt().ceil() as usize;
        for i in 0..side {
            for j in 0..side {
                pts.push(Vec3::new(i as f64 * 0.01, j as f64 * 0.01, 0.0));
            }
        }
        pts.truncate(n);
        pts
    }

    #[test]
    fn noiseless_plane_is_recovered_exactly() {
        let pts = grid_on_z0(100);
        let fit = fit_ground_plane(&pts, &RansacConfig::default()).unwrap();
        assert!((fit.normal - Vec3::Z).norm() < 1e-9);
        assert!(fit.offset.abs() < 1e-12);
        assert_eq!(fit.inliers.len(), 100);
    }

    #[test]
    fn outliers_are_rejected() {
        use rand::Rng;
        let mut pts = grid_on_z0(90);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            pts.push(Vec3::new(
                rng.random_range(0.0..0.1),
                rng.random_range(0.0..0.1),
                rng.random_range(0.5..1.0),
            ));
        }
        let cfg = RansacConfig { inlier_threshold: 0.01, ..Default::default() };
        let fit = fit_ground_plane(&pts, &cfg).unwrap();
        assert!(fit.inliers.len() >= 90);
        let angle = fit.normal.dot(Vec3::Z).clamp(-1.0, 1.0).acos().to_degrees();
        assert!(angle < 1.0, "normal off by {angle} degrees");
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts: Vec<Vec3> = (0..3).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(
            fit_ground_plane(&pts, &RansacConfig::default()),
            Err(EditError::DegenerateInput(_))
        ));
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let pts: Vec<Vec3> = (0..200)
            .map(|_| {
                Vec3::new(
                    rng.random_range(-0.2..0.2),
                    rng.random_range(-0.2..0.2),
                    rng.random_range(-0.002..0.002),
                )
            })
            .collect();
        let cfg = RansacConfig { seed: 3, ..Default::default() };
        let a = fit_ground_plane(&pts, &cfg).unwrap();
        let b = fit_ground_plane(&pts, &cfg).unwrap();
        assert_eq!(a.normal, b.normal);
        assert_eq!(a.offset, b.offset);
        assert_eq!(a.inliers, b.inliers);
    }

    #[test]
    fn align_identity_when_already_on_z0() {
        let pts = grid_on_z0(64);
        let fit = fit_ground_plane(&pts, &RansacConfig::default()).unwrap();
        let t = align_to_simulator(&pts, &fit, RigidTransform::identity());
        assert!(t.translation.norm() < 1e-9);
        assert!(t.rotation.dot(UnitQuaternion::IDENTITY).abs() > 1.0 - 1e-9);
    }

    #[test]
    fn align_removes_plane_height() {
        let pts: Vec<Vec3> =
            grid_on_z0(64).into_iter().map(|p| p + Vec3::new(0.0, 0.0, 0.2)).collect();
        let fit = fit_ground_plane(&pts, &RansacConfig::default()).unwrap();
        let t = align_to_simulator(&pts, &fit, RigidTransform::identity());
        assert!((t.translation.z + 0.2).abs() < 1e-9);
        for p in &pts {
            assert!(t.apply(*p).z.abs() < 1e-9);
        }
    }

    #[test]
    fn align_untilts_a_rotated_plane() {
        let tilt = UnitQuaternion::from_axis_angle(Vec3::X, 10f64.to_radians());
        let pts: Vec<Vec3> = grid_on_z0(64).into_iter().map(|p| tilt.rotate(p)).collect();
        let fit = fit_ground_plane(&pts, &RansacConfig::default()).unwrap();
        let t = align_to_simulator(&pts, &fit, RigidTransform::identity());
        // Result rotation is Rx(-10°) up to sign of the quaternion.
        let expect = UnitQuaternion::from_axis_angle(Vec3::X, -10f64.to_radians());
        assert!(t.rotation.dot(expect).abs() > 1.0 - 1e-6);
        for p in &pts {
            assert!(t.apply(*p).z.abs() < 1e-6);
        }
    }
}
