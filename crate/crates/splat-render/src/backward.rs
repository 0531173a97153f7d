use crate::project::{mat2x3_mul3, prepare_scene, projection_jacobian};
use crate::{ImageRgb, RenderError, Result, ALPHA_MAX, ALPHA_MIN, TRANSMITTANCE_MIN};
use gauss_model::{GaussianUnit, UnitGrad};
use geom_core::{PinholeCamera, Vec3};

/// Per-Gaussian partials of a scalar loss with respect to position, rotation
/// (raw quaternion components), scale, opacity and color. Culled Gaussians
/// carry zero gradients.
#[derive(Debug, Clone)]
pub struct RenderGradients {
    pub per_gaussian: Vec<UnitGrad>,
}

/// Screen-space gradient accumulator for one prepared splat.
#[derive(Debug, Clone, Copy, Default)]
struct SplatAccum {
    g_mean: (f64, f64),
    // d/d(a, b, c) with cov2d = [[a, b], [b, c]]
    g_cov: [f64; 3],
    g_opacity: f64,
    g_color: [f64; 3],
}

/// One compositing step recorded during the forward walk of a pixel.
#[derive(Debug, Clone, Copy)]
struct Step {
    prepared_index: u32,
    alpha: f64,
    gauss_value: f64, // exp(power)
    e: (f64, f64),    // Σ⁻¹ d
    t_before: f64,
    clamped: bool,
}

/// Exact reverse-mode gradients of [`crate::render`] under a per-pixel loss
/// gradient `loss_grad` (same dimensions as the camera image).
pub fn render_backward(
    gaussians: &[GaussianUnit],
    cam: &PinholeCamera,
    background: [f64; 3],
    loss_grad: &ImageRgb,
) -> Result<RenderGradients> {
    if loss_grad.width() != cam.width || loss_grad.height() != cam.height {
        return Err(RenderError::DimensionMismatch {
            expected_w: cam.width,
            expected_h: cam.height,
            got_w: loss_grad.width(),
            got_h: loss_grad.height(),
        });
    }

    let (w, h) = (cam.width, cam.height);
    let (prepared, rows) = prepare_scene(gaussians, cam);
    let mut accums = vec![SplatAccum::default(); prepared.len()];
    let mut steps: Vec<Step> = Vec::with_capacity(64);

    for y in 0..h {
        let row = &rows[y as usize];
        if row.is_empty() {
            continue;
        }
        let py = y as f64 + 0.5;
        for x in 0..w {
            let gpx = loss_grad.pixel(x, y);
            if gpx == [0.0, 0.0, 0.0] {
                continue;
            }
            let px = x as f64 + 0.5;

            // Forward walk, recording every compositing step.
            steps.clear();
            let mut transmittance = 1.0f64;
            let mut foreground = [0.0f64; 3];
            for &k in row {
                let p = &prepared[k as usize];
                if x < p.x0 || x > p.x1 {
                    continue;
                }
                let dx = px - p.splat.mean.0;
                let dy = py - p.splat.mean.1;
                let [ia, ib, ic] = p.inv_cov;
                let ex = ia * dx + ib * dy;
                let ey = ib * dx + ic * dy;
                let power = -0.5 * (dx * ex + dy * ey);
                let gauss_value = power.exp();
                let a_raw = p.splat.opacity * gauss_value;
                let clamped = a_raw > ALPHA_MAX;
                let a = if clamped { ALPHA_MAX } else { a_raw };
                if a < ALPHA_MIN {
                    continue;
                }
                let weight = a * transmittance;
                for ch in 0..3 {
                    foreground[ch] += p.splat.color[ch] * weight;
                }
                steps.push(Step {
                    prepared_index: k,
                    alpha: a,
                    gauss_value,
                    e: (ex, ey),
                    t_before: transmittance,
                    clamped,
                });
                transmittance *= 1.0 - a;
                if transmittance < TRANSMITTANCE_MIN {
                    break;
                }
            }

            let total = [
                foreground[0] + background[0] * transmittance,
                foreground[1] + background[1] * transmittance,
                foreground[2] + background[2] * transmittance,
            ];

            // Reverse sweep over the recorded steps. With prefix_i the color
            // accumulated through step i, the suffix S_i = total − prefix_i
            // gives dC/da_i = c_i·T_i − S_i/(1 − a_i).
            let mut prefix = [0.0f64; 3];
            for step in &steps {
                let p = &prepared[step.prepared_index as usize];
                let acc = &mut accums[step.prepared_index as usize];
                let weight = step.alpha * step.t_before;
                let mut g_alpha = 0.0;
                for ch in 0..3 {
                    prefix[ch] += p.splat.color[ch] * weight;
                    acc.g_color[ch] += gpx[ch] * weight;
                    let suffix = total[ch] - prefix[ch];
                    g_alpha += gpx[ch]
                        * (p.splat.color[ch] * step.t_before - suffix / (1.0 - step.alpha));
                }
                if step.clamped {
                    continue;
                }
                acc.g_opacity += g_alpha * step.gauss_value;
                let g_gauss = g_alpha * p.splat.opacity;
                let g_power = -0.5 * step.gauss_value * g_gauss;
                // q = dᵀΣ⁻¹d, e = Σ⁻¹d: dq/d(mean) = -2e, dq/dΣ = -eeᵀ.
                acc.g_mean.0 += g_power * (-2.0 * step.e.0);
                acc.g_mean.1 += g_power * (-2.0 * step.e.1);
                acc.g_cov[0] += g_power * (-step.e.0 * step.e.0);
                acc.g_cov[1] += g_power * (-2.0 * step.e.0 * step.e.1);
                acc.g_cov[2] += g_power * (-step.e.1 * step.e.1);
            }
        }
    }

    // Chain screen-space gradients back to world-space Gaussian parameters.
    let mut per_gaussian = vec![UnitGrad::default(); gaussians.len()];
    let w_mat = cam.world_to_camera.rotation.to_matrix();
    for (p, acc) in prepared.iter().zip(&accums) {
        let g = &gaussians[p.source];
        let out = &mut per_gaussian[p.source];
        backproject_splat_grad(g, cam, &w_mat, acc, out);
    }

    Ok(RenderGradients { per_gaussian })
}

fn backproject_splat_grad(
    g: &GaussianUnit,
    cam: &PinholeCamera,
    w_mat: &[[f64; 3]; 3],
    acc: &SplatAccum,
    out: &mut UnitGrad,
) {
    let p_cam = cam.to_camera(g.position);
    let j = projection_jacobian(cam, p_cam);
    let m = mat2x3_mul3(&j, w_mat);
    let sigma3 = g.covariance();

    // Full-matrix gradient of the symmetric 2x2 covariance.
    let g2 = [[acc.g_cov[0], acc.g_cov[1] * 0.5], [acc.g_cov[1] * 0.5, acc.g_cov[2]]];

    // dL/dΣ3 = Mᵀ G2 M
    let mut g2m = [[0.0; 3]; 2];
    for i in 0..2 {
        for jj in 0..3 {
            g2m[i][jj] = g2[i][0] * m[0][jj] + g2[i][1] * m[1][jj];
        }
    }
    let mut g_sigma3 = [[0.0; 3]; 3];
    for i in 0..3 {
        for jj in 0..3 {
            g_sigma3[i][jj] = m[0][i] * g2m[0][jj] + m[1][i] * g2m[1][jj];
        }
    }

    // dL/dM = 2 G2 M Σ3
    let mut m_sigma = [[0.0; 3]; 2];
    for i in 0..2 {
        for jj in 0..3 {
            m_sigma[i][jj] =
                m[i][0] * sigma3[0][jj] + m[i][1] * sigma3[1][jj] + m[i][2] * sigma3[2][jj];
        }
    }
    let mut g_m = [[0.0; 3]; 2];
    for i in 0..2 {
        for jj in 0..3 {
            g_m[i][jj] = 2.0 * (g2[i][0] * m_sigma[0][jj] + g2[i][1] * m_sigma[1][jj]);
        }
    }

    // dL/dJ = dL/dM · Wᵀ
    let mut g_j = [[0.0; 3]; 2];
    for i in 0..2 {
        for k in 0..3 {
            g_j[i][k] = g_m[i][0] * w_mat[k][0] + g_m[i][1] * w_mat[k][1] + g_m[i][2] * w_mat[k][2];
        }
    }

    // Camera-space position gradient: mean projection term (Jᵀ · g_mean)
    // plus the J(p_cam) dependence of the covariance.
    let (fx, fy) = (cam.fx, cam.fy);
    let inv_z = 1.0 / p_cam.z;
    let inv_z2 = inv_z * inv_z;
    let inv_z3 = inv_z2 * inv_z;
    let mut g_pcam = Vec3::new(
        j[0][0] * acc.g_mean.0,
        j[1][1] * acc.g_mean.1,
        j[0][2] * acc.g_mean.0 + j[1][2] * acc.g_mean.1,
    );
    g_pcam.x += g_j[0][2] * (-fx * inv_z2);
    g_pcam.y += g_j[1][2] * (-fy * inv_z2);
    g_pcam.z += g_j[0][0] * (-fx * inv_z2)
        + g_j[1][1] * (-fy * inv_z2)
        + g_j[0][2] * (2.0 * fx * p_cam.x * inv_z3)
        + g_j[1][2] * (2.0 * fy * p_cam.y * inv_z3);

    // World-space position: p_cam = W·μ + t.
    out.position += Vec3::new(
        w_mat[0][0] * g_pcam.x + w_mat[1][0] * g_pcam.y + w_mat[2][0] * g_pcam.z,
        w_mat[0][1] * g_pcam.x + w_mat[1][1] * g_pcam.y + w_mat[2][1] * g_pcam.z,
        w_mat[0][2] * g_pcam.x + w_mat[1][2] * g_pcam.y + w_mat[2][2] * g_pcam.z,
    );

    // Σ3 = R diag(s²) Rᵀ: scale and rotation pull-backs.
    let r = g.rotation.to_matrix();
    let s = [g.scale.x, g.scale.y, g.scale.z];
    let mut g_scale = [0.0; 3];
    for k in 0..3 {
        let col = [r[0][k], r[1][k], r[2][k]];
        let mut quad = 0.0;
        for i in 0..3 {
            for jj in 0..3 {
                quad += col[i] * g_sigma3[i][jj] * col[jj];
            }
        }
        g_scale[k] = 2.0 * s[k] * quad;
    }
    out.scale += Vec3::new(g_scale[0], g_scale[1], g_scale[2]);

    // dL/dR = 2 G3 R diag(s²)
    let s2 = [s[0] * s[0], s[1] * s[1], s[2] * s[2]];
    let mut g_r = [[0.0; 3]; 3];
    for i in 0..3 {
        for jj in 0..3 {
            let mut v = 0.0;
            for k in 0..3 {
                v += g_sigma3[i][k] * r[k][jj];
            }
            g_r[i][jj] = 2.0 * v * s2[jj];
        }
    }

    // Contract with the quaternion-to-matrix formula partials.
    let q = g.rotation;
    let (qw, qx, qy, qz) = (q.w, q.x, q.y, q.z);
    let dr_dw = [[0.0, -2.0 * qz, 2.0 * qy], [2.0 * qz, 0.0, -2.0 * qx], [-2.0 * qy, 2.0 * qx, 0.0]];
    let dr_dx = [
        [0.0, 2.0 * qy, 2.0 * qz],
        [2.0 * qy, -4.0 * qx, -2.0 * qw],
        [2.0 * qz, 2.0 * qw, -4.0 * qx],
    ];
    let dr_dy = [
        [-4.0 * qy, 2.0 * qx, 2.0 * qw],
        [2.0 * qx, 0.0, 2.0 * qz],
        [-2.0 * qw, 2.0 * qz, -4.0 * qy],
    ];
    let dr_dz = [
        [-4.0 * qz, -2.0 * qw, 2.0 * qx],
        [2.0 * qw, -4.0 * qz, 2.0 * qy],
        [2.0 * qx, 2.0 * qy, 0.0],
    ];
    for (slot, dr) in [(0, &dr_dw), (1, &dr_dx), (2, &dr_dy), (3, &dr_dz)] {
        let mut v = 0.0;
        for i in 0..3 {
            for jj in 0..3 {
                v += g_r[i][jj] * dr[i][jj];
            }
        }
        out.rotation[slot] += v;
    }

    out.opacity += acc.g_opacity;
    for ch in 0..3 {
        out.color[ch] += acc.g_color[ch];
    }
}
