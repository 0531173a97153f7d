use crate::adam::AdamState;
use crate::metrics::{psnr, ssim_with_grad};
use crate::{OptimError, Result};
use gauss_model::{BindingGrad, BindingMode, BoundGaussianSet};
use geom_core::UnitQuaternion;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use splat_render::{render, render_backward, ImageRgb};
use std::io::Write;
use std::path::Path;

/// One training view: camera, target image, optional foreground mask
/// (pixels with `false` are excluded from the loss).
#[derive(Debug, Clone)]
pub struct PosedView {
    pub camera: geom_core::PinholeCamera,
    pub image: ImageRgb,
    pub mask: Option<Vec<bool>>,
}

/// Training configuration; learning rates are per parameter group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GsTrainConfig {
    pub iterations: usize,
    pub lr_bary: f64,
    pub lr_normal: f64,
    pub lr_scale: f64,
    pub lr_rotation: f64,
    pub lr_opacity: f64,
    pub lr_color: f64,
    /// SSIM weight λ_s in loss = (1-λ_s)·L1 + λ_s·(1-SSIM).
    pub ssim_weight: f64,
    pub background: [f64; 3],
    /// PSNR probe cadence on view 0 (carried forward between probes).
    pub probe_interval: usize,
    pub seed: u64,
}

impl Default for GsTrainConfig {
    fn default() -> Self {
        GsTrainConfig {
            iterations: 3000,
            lr_bary: 1.6e-4,
            lr_normal: 1.6e-4,
            lr_scale: 5e-3,
            lr_rotation: 1e-3,
            lr_opacity: 5e-2,
            lr_color: 2.5e-2,
            ssim_weight: 0.2,
            background: [0.0, 0.0, 0.0],
            probe_interval: 10,
            seed: 0,
        }
    }
}

/// One row of the training history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub iteration: usize,
    pub loss: f64,
    pub probe_psnr: f64,
}

/// Write the loss history as CSV (iteration, loss, psnr-on-probe-view).
pub fn write_loss_csv(path: impl AsRef<Path>, records: &[LossRecord]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "iteration,loss,probe_psnr")?;
    for r in records {
        writeln!(out, "{},{},{}", r.iteration, r.loss, r.probe_psnr)?;
    }
    Ok(())
}

/// L1 + DSSIM loss between a rendering and a target, with its pixel gradient.
fn loss_and_grad(
    rendered: &ImageRgb,
    target: &ImageRgb,
    mask: Option<&[bool]>,
    ssim_weight: f64,
) -> Result<(f64, ImageRgb)> {
    let (w, h) = (rendered.width(), rendered.height());
    let mut grad = ImageRgb::new(w, h);

    let valid_count = match mask {
        Some(m) => m.iter().filter(|&&v| v).count(),
        None => (w * h) as usize,
    };
    if valid_count == 0 {
        return Ok((0.0, grad));
    }
    let norm = 1.0 / (3.0 * valid_count as f64);

    let mut l1 = 0.0;
    {
        let g = grad.data_mut();
        for px in 0..(w * h) as usize {
            if let Some(m) = mask {
                if !m[px] {
                    continue;
                }
            }
            for ch in 0..3 {
                let i = px * 3 + ch;
                let diff = rendered.data()[i] - target.data()[i];
                l1 += diff.abs() * norm;
                // L1 subgradient; note f64::signum(0.0) is 1, not 0.
                let sign = if diff > 0.0 {
                    1.0
                } else if diff < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                g[i] = (1.0 - ssim_weight) * sign * norm;
            }
        }
    }

    let mut loss = (1.0 - ssim_weight) * l1;
    if ssim_weight > 0.0 {
        let (s, s_grad) = ssim_with_grad(rendered, target, mask)?;
        loss += ssim_weight * (1.0 - s);
        let g = grad.data_mut();
        for (gi, si) in g.iter_mut().zip(s_grad.data()) {
            *gi -= ssim_weight * si;
        }
    }
    Ok((loss, grad))
}

/// Optimize the binding parameters of `set` against posed views by Adam over
/// per-parameter-group learning rates, one uniformly-shuffled view per
/// iteration. Returns the trained set and the per-iteration loss history.
pub fn train_gs(
    set: &BoundGaussianSet,
    views: &[PosedView],
    cfg: &GsTrainConfig,
) -> Result<(BoundGaussianSet, Vec<LossRecord>)> {
    if views.len() < 2 {
        return Err(OptimError::TooFewViews(views.len()));
    }
    for (index, v) in views.iter().enumerate() {
        if v.image.width() != v.camera.width || v.image.height() != v.camera.height {
            return Err(OptimError::ViewMismatch {
                index,
                got_w: v.image.width(),
                got_h: v.image.height(),
                cam_w: v.camera.width,
                cam_h: v.camera.height,
            });
        }
    }

    let mut set = set.clone();
    let n = set.len();
    let mut history = Vec::with_capacity(cfg.iterations);

    let mut adam_bary = AdamState::new(n * 3);
    let mut adam_normal = AdamState::new(n);
    let mut adam_scale = AdamState::new(n * 3);
    let mut adam_rot = AdamState::new(n * 4);
    let mut adam_opacity = AdamState::new(n);
    let mut adam_color = AdamState::new(n * 3);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..views.len()).collect();
    order.shuffle(&mut rng);
    let mut order_pos = 0usize;

    let mut probe_psnr = f64::NAN;

    for iteration in 0..cfg.iterations {
        if order_pos == order.len() {
            order.shuffle(&mut rng);
            order_pos = 0;
        }
        let view = &views[order[order_pos]];
        order_pos += 1;

        let units = set.resolve_all()?;
        let rendered = render(&units, &view.camera, cfg.background);
        let (loss, pixel_grad) =
            loss_and_grad(&rendered.rgb, &view.image, view.mask.as_deref(), cfg.ssim_weight)?;
        let render_grads = render_backward(&units, &view.camera, cfg.background, &pixel_grad)?;

        // Pull gradients back to binding parameters, flattened per group.
        let mut g_bary = vec![0.0; n * 3];
        let mut g_normal = vec![0.0; n];
        let mut g_scale = vec![0.0; n * 3];
        let mut g_rot = vec![0.0; n * 4];
        let mut g_opacity = vec![0.0; n];
        let mut g_color = vec![0.0; n * 3];
        for i in 0..n {
            let bg: BindingGrad = set.resolve_backward(i, &render_grads.per_gaussian[i])?;
            g_bary[i * 3..i * 3 + 3].copy_from_slice(&bg.bary_logits);
            g_normal[i] = bg.normal_raw;
            g_scale[i * 3..i * 3 + 3].copy_from_slice(&bg.scale_logits);
            g_rot[i * 4..i * 4 + 4].copy_from_slice(&bg.rotation_offset);
            g_opacity[i] = bg.opacity_logit;
            g_color[i * 3..i * 3 + 3].copy_from_slice(&bg.color);
        }

        // Flatten current parameters, step, write back with projections.
        let mut p_bary = vec![0.0; n * 3];
        let mut p_normal = vec![0.0; n];
        let mut p_scale = vec![0.0; n * 3];
        let mut p_rot = vec![0.0; n * 4];
        let mut p_opacity = vec![0.0; n];
        let mut p_color = vec![0.0; n * 3];
        for (i, g) in set.gaussians().iter().enumerate() {
            p_bary[i * 3..i * 3 + 3].copy_from_slice(&g.bary_logits);
            p_normal[i] = g.normal_raw;
            p_scale[i * 3..i * 3 + 3].copy_from_slice(&g.scale_logits);
            p_rot[i * 4] = g.rotation_offset.w;
            p_rot[i * 4 + 1] = g.rotation_offset.x;
            p_rot[i * 4 + 2] = g.rotation_offset.y;
            p_rot[i * 4 + 3] = g.rotation_offset.z;
            p_opacity[i] = g.opacity_logit;
            p_color[i * 3..i * 3 + 3].copy_from_slice(&g.color);
        }

        adam_bary.step(&mut p_bary, &g_bary, cfg.lr_bary);
        if set.mode() == BindingMode::Soft {
            adam_normal.step(&mut p_normal, &g_normal, cfg.lr_normal);
        }
        adam_scale.step(&mut p_scale, &g_scale, cfg.lr_scale);
        adam_rot.step(&mut p_rot, &g_rot, cfg.lr_rotation);
        adam_opacity.step(&mut p_opacity, &g_opacity, cfg.lr_opacity);
        adam_color.step(&mut p_color, &g_color, cfg.lr_color);

        for (i, g) in set.gaussians_mut().iter_mut().enumerate() {
            g.bary_logits.copy_from_slice(&p_bary[i * 3..i * 3 + 3]);
            g.normal_raw = p_normal[i];
            g.scale_logits.copy_from_slice(&p_scale[i * 3..i * 3 + 3]);
            g.rotation_offset = UnitQuaternion::new(
                p_rot[i * 4],
                p_rot[i * 4 + 1],
                p_rot[i * 4 + 2],
                p_rot[i * 4 + 3],
            );
            g.opacity_logit = p_opacity[i];
            for ch in 0..3 {
                g.color[ch] = p_color[i * 3 + ch].clamp(0.0, 1.0);
            }
        }

        if cfg.probe_interval > 0
            && (iteration % cfg.probe_interval == 0 || iteration + 1 == cfg.iterations)
        {
            let units = set.resolve_all()?;
            let probe = render(&units, &views[0].camera, cfg.background);
            probe_psnr = psnr(&probe.rgb, &views[0].image)?;
        }
        history.push(LossRecord { iteration, loss, probe_psnr });
    }

    Ok((set, history))
}
