use crate::project::prepare_scene;
use crate::{ImageRgb, ALPHA_MAX, ALPHA_MIN, TRANSMITTANCE_MIN};
use gauss_model::GaussianUnit;
use geom_core::PinholeCamera;

/// A rendered frame: RGB in [0, 1] plus per-pixel alpha (1 − transmittance).
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedImage {
    pub rgb: ImageRgb,
    pub alpha: Vec<f64>,
}

impl RenderedImage {
    pub fn width(&self) -> u32 {
        self.rgb.width()
    }

    pub fn height(&self) -> u32 {
        self.rgb.height()
    }
}

/// Rasterize Gaussians front-to-back over a constant background color.
///
/// Per pixel: color = Σᵢ cᵢ·aᵢ·Πⱼ<ᵢ(1−aⱼ) + background·Π(1−aⱼ) with
/// aᵢ = σᵢ·exp(−½ dᵀ Σ₂D⁻¹ d) clamped to [0, ALPHA_MAX]. Deterministic:
/// identical inputs give bitwise-identical output.
pub fn render(
    gaussians: &[GaussianUnit],
    cam: &PinholeCamera,
    background: [f64; 3],
) -> RenderedImage {
    let (w, h) = (cam.width, cam.height);
    let (prepared, rows) = prepare_scene(gaussians, cam);

    let mut rgb = ImageRgb::new(w, h);
    let mut alpha = vec![0.0f64; (w * h) as usize];

    for y in 0..h {
        let row = &rows[y as usize];
        if row.is_empty() {
            for x in 0..w {
                rgb.set_pixel(x, y, background);
            }
            continue;
        }
        let py = y as f64 + 0.5;
        for x in 0..w {
            let px = x as f64 + 0.5;
            let mut transmittance = 1.0f64;
            let mut color = [0.0f64; 3];
            for &k in row {
                let p = &prepared[k as usize];
                if x < p.x0 || x > p.x1 {
                    continue;
                }
                let dx = px - p.splat.mean.0;
                let dy = py - p.splat.mean.1;
                let [ia, ib, ic] = p.inv_cov;
                let power = -0.5 * (ia * dx * dx + 2.0 * ib * dx * dy + ic * dy * dy);
                let a = (p.splat.opacity * power.exp()).min(ALPHA_MAX);
                if a < ALPHA_MIN {
                    continue;
                }
                let weight = a * transmittance;
                color[0] += p.splat.color[0] * weight;
                color[1] += p.splat.color[1] * weight;
                color[2] += p.splat.color[2] * weight;
                transmittance *= 1.0 - a;
                if transmittance < TRANSMITTANCE_MIN {
                    break;
                }
            }
            color[0] += background[0] * transmittance;
            color[1] += background[1] * transmittance;
            color[2] += background[2] * transmittance;
            rgb.set_pixel(x, y, color);
            alpha[(y * w + x) as usize] = 1.0 - transmittance;
        }
    }

    RenderedImage { rgb, alpha }
}
