use crate::{COV2D_FLOOR, CULL_SIGMA, NEAR_PLANE};
use gauss_model::GaussianUnit;
use geom_core::{PinholeCamera, Vec3};

/// A Gaussian projected to screen space.
///
/// `cov2d` stores the symmetric 2x2 covariance as `[a, b, c]` for
/// `[[a, b], [b, c]]`, in px², after the diagonal floor.
#[derive(Debug, Clone, Copy)]
pub struct Splat2D {
    pub mean: (f64, f64),
    pub cov2d: [f64; 3],
    pub depth: f64,
    pub opacity: f64,
    pub color: [f64; 3],
}

impl Splat2D {
    /// Inverse covariance `[a, b, c]` layout; well conditioned thanks to the
    /// diagonal floor.
    pub fn cov2d_inv(&self) -> [f64; 3] {
        let [a, b, c] = self.cov2d;
        let det = a * c - b * b;
        [c / det, -b / det, a / det]
    }

    /// Screen-space culling radius: CULL_SIGMA standard deviations of the
    /// major axis.
    pub fn radius(&self) -> f64 {
        let [a, b, c] = self.cov2d;
        let mid = 0.5 * (a + c);
        let disc = (0.5 * (a - c)).powi(2) + b * b;
        let lambda_max = mid + disc.sqrt();
        CULL_SIGMA * lambda_max.sqrt()
    }
}

/// Result of projecting one Gaussian: a screen splat or a culled marker.
#[derive(Debug, Clone, Copy)]
pub enum ProjectOutcome {
    Splat(Splat2D),
    Culled,
}

impl ProjectOutcome {
    pub fn splat(&self) -> Option<&Splat2D> {
        match self {
            ProjectOutcome::Splat(s) => Some(s),
            ProjectOutcome::Culled => None,
        }
    }
}

/// Project a 3D Gaussian to screen space.
///
/// Culled when the center is behind the near plane or the CULL_SIGMA
/// footprint misses the image; culling is a value, not an error.
pub fn project_gaussian(g: &GaussianUnit, cam: &PinholeCamera) -> ProjectOutcome {
    let p_cam = cam.to_camera(g.position);
    if p_cam.z <= NEAR_PLANE {
        return ProjectOutcome::Culled;
    }
    let (z, inv_z) = (p_cam.z, 1.0 / p_cam.z);
    let u = cam.fx * p_cam.x * inv_z + cam.cx;
    let v = cam.fy * p_cam.y * inv_z + cam.cy;

    // M = J·W rows; J is the projection Jacobian at p_cam.
    let w_mat = cam.world_to_camera.rotation.to_matrix();
    let j = projection_jacobian(cam, p_cam);
    let m = mat2x3_mul3(&j, &w_mat);

    let sigma3 = g.covariance();
    // Σ2D = M Σ Mᵀ + floor·I
    let ms = [
        [
            m[0][0] * sigma3[0][0] + m[0][1] * sigma3[1][0] + m[0][2] * sigma3[2][0],
            m[0][0] * sigma3[0][1] + m[0][1] * sigma3[1][1] + m[0][2] * sigma3[2][1],
            m[0][0] * sigma3[0][2] + m[0][1] * sigma3[1][2] + m[0][2] * sigma3[2][2],
        ],
        [
            m[1][0] * sigma3[0][0] + m[1][1] * sigma3[1][0] + m[1][2] * sigma3[2][0],
            m[1][0] * sigma3[0][1] + m[1][1] * sigma3[1][1] + m[1][2] * sigma3[2][1],
            m[1][0] * sigma3[0][2] + m[1][1] * sigma3[1][2] + m[1][2] * sigma3[2][2],
        ],
    ];
    let a = ms[0][0] * m[0][0] + ms[0][1] * m[0][1] + ms[0][2] * m[0][2] + COV2D_FLOOR;
    let b = ms[0][0] * m[1][0] + ms[0][1] * m[1][1] + ms[0][2] * m[1][2];
    let c = ms[1][0] * m[1][0] + ms[1][1] * m[1][1] + ms[1][2] * m[1][2] + COV2D_FLOOR;

    let splat = Splat2D { mean: (u, v), cov2d: [a, b, c], depth: z, opacity: g.opacity, color: g.color };

    let r = splat.radius();
    if u + r < 0.0 || u - r > cam.width as f64 || v + r < 0.0 || v - r > cam.height as f64 {
        return ProjectOutcome::Culled;
    }
    ProjectOutcome::Splat(splat)
}

pub(crate) fn projection_jacobian(cam: &PinholeCamera, p_cam: Vec3) -> [[f64; 3]; 2] {
    let inv_z = 1.0 / p_cam.z;
    let inv_z2 = inv_z * inv_z;
    [
        [cam.fx * inv_z, 0.0, -cam.fx * p_cam.x * inv_z2],
        [0.0, cam.fy * inv_z, -cam.fy * p_cam.y * inv_z2],
    ]
}

pub(crate) fn mat2x3_mul3(a: &[[f64; 3]; 2], b: &[[f64; 3]; 3]) -> [[f64; 3]; 2] {
    let mut out = [[0.0; 3]; 2];
    for i in 0..2 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

/// One splat prepared for rasterization: inverse covariance plus its pixel
/// bounding box, tagged with the index of the source Gaussian.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PreparedSplat {
    pub source: usize,
    pub splat: Splat2D,
    pub inv_cov: [f64; 3],
    pub x0: u32,
    pub x1: u32, // inclusive
    pub y0: u32,
    pub y1: u32, // inclusive
}

/// Project all Gaussians, cull, sort front-to-back (ties by input index) and
/// bucket splat indices per image row.
pub(crate) fn prepare_scene(
    gaussians: &[GaussianUnit],
    cam: &PinholeCamera,
) -> (Vec<PreparedSplat>, Vec<Vec<u32>>) {
    let mut prepared: Vec<PreparedSplat> = Vec::with_capacity(gaussians.len());
    let (w, h) = (cam.width, cam.height);
    for (i, g) in gaussians.iter().enumerate() {
        let ProjectOutcome::Splat(s) = project_gaussian(g, cam) else { continue };
        let r = s.radius();
        let x0 = (s.mean.0 - r).floor().max(0.0) as u32;
        let x1 = ((s.mean.0 + r).ceil() as i64).min(w as i64 - 1);
        let y0 = (s.mean.1 - r).floor().max(0.0) as u32;
        let y1 = ((s.mean.1 + r).ceil() as i64).min(h as i64 - 1);
        if x1 < x0 as i64 || y1 < y0 as i64 {
            continue;
        }
        prepared.push(PreparedSplat {
            source: i,
            splat: s,
            inv_cov: s.cov2d_inv(),
            x0,
            x1: x1 as u32,
            y0,
            y1: y1 as u32,
        });
    }
    prepared.sort_by(|l, r| l.splat.depth.total_cmp(&r.splat.depth).then(l.source.cmp(&r.source)));

    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); h as usize];
    for (k, p) in prepared.iter().enumerate() {
        for row in rows.iter_mut().take(p.y1 as usize + 1).skip(p.y0 as usize) {
            row.push(k as u32);
        }
    }
    (prepared, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use geom_core::{RigidTransform, UnitQuaternion};

    fn cam(f: f64) -> PinholeCamera {
        PinholeCamera::new(f, f, 32.0, 32.0, 64, 64, RigidTransform::identity()).unwrap()
    }

    fn isotropic(pos: Vec3, s: f64) -> GaussianUnit {
        GaussianUnit {
            position: pos,
            rotation: UnitQuaternion::IDENTITY,
            scale: Vec3::new(s, s, s),
            opacity: 0.8,
            color: [1.0, 0.0, 0.0],
        }
    }

    #[test]
    fn axis_aligned_closed_form_covariance() {
        let f = 100.0;
        let g = isotropic(Vec3::new(0.0, 0.0, 1.0), 0.1);
        let ProjectOutcome::Splat(s) = project_gaussian(&g, &cam(f)) else {
            panic!("culled")
        };
        // J = diag(f, f) at the optical axis, so cov2d = (0.1 f)² I + floor.
        let expect = (0.1 * f) * (0.1 * f);
        assert!((s.cov2d[0] - COV2D_FLOOR - expect).abs() < 1e-9);
        assert!((s.cov2d[2] - COV2D_FLOOR - expect).abs() < 1e-9);
        assert!(s.cov2d[1].abs() < 1e-9);
        assert_eq!(s.mean, (32.0, 32.0));
        assert_eq!(s.depth, 1.0);
    }

    #[test]
    fn behind_camera_is_culled() {
        let g = isotropic(Vec3::new(0.0, 0.0, -1.0), 0.1);
        assert!(matches!(project_gaussian(&g, &cam(100.0)), ProjectOutcome::Culled));
    }

    #[test]
    fn off_screen_is_culled() {
        let g = isotropic(Vec3::new(100.0, 0.0, 1.0), 0.01);
        assert!(matches!(project_gaussian(&g, &cam(100.0)), ProjectOutcome::Culled));
    }

    #[test]
    fn doubling_scale_quadruples_unfloored_covariance() {
        let f = 100.0;
        let g1 = isotropic(Vec3::new(0.05, -0.02, 1.2), 0.05);
        let mut g2 = g1;
        g2.scale = g1.scale * 2.0;
        let s1 = *project_gaussian(&g1, &cam(f)).splat().unwrap();
        let s2 = *project_gaussian(&g2, &cam(f)).splat().unwrap();
        for k in 0..3 {
            let floor = if k == 1 { 0.0 } else { COV2D_FLOOR };
            let unfloored1 = s1.cov2d[k] - floor;
            let unfloored2 = s2.cov2d[k] - floor;
            assert!(
                (unfloored2 - 4.0 * unfloored1).abs() < 1e-9 * unfloored1.abs().max(1.0),
                "component {k}: {unfloored2} vs 4x{unfloored1}"
            );
        }
    }
}
