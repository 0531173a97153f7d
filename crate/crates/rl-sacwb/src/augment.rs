use crate::obs::Obs;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Training-time image augmentation ranges. All-zero ranges are the
/// identity. Proprioception is never touched.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Additive Gaussian pixel noise; σ drawn uniformly from [0, max].
    pub noise_sigma_max: f32,
    /// Multiplicative brightness range half-width around 1.
    pub brightness: f32,
    /// Contrast range half-width around 1 (pivot 0.5).
    pub contrast: f32,
    /// Hue rotation half-range in turns.
    pub hue_turns: f32,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig { noise_sigma_max: 0.02, brightness: 0.2, contrast: 0.2, hue_turns: 0.05 }
    }
}

impl AugmentConfig {
    pub fn identity() -> Self {
        AugmentConfig { noise_sigma_max: 0.0, brightness: 0.0, contrast: 0.0, hue_turns: 0.0 }
    }
}

/// Randomly perturb the image channels of an observation: Gaussian noise,
/// brightness, contrast and hue rotation, clamped to [0, 1].
pub fn augment_observation(obs: &Obs, rng: &mut impl Rng, cfg: &AugmentConfig) -> Obs {
    let Some(image) = &obs.image else {
        return obs.clone();
    };
    let sigma = if cfg.noise_sigma_max > 0.0 {
        rng.random_range(0.0..cfg.noise_sigma_max)
    } else {
        0.0
    };
    let brightness = if cfg.brightness > 0.0 {
        rng.random_range(1.0 - cfg.brightness..1.0 + cfg.brightness)
    } else {
        1.0
    };
    let contrast = if cfg.contrast > 0.0 {
        rng.random_range(1.0 - cfg.contrast..1.0 + cfg.contrast)
    } else {
        1.0
    };
    let hue = if cfg.hue_turns > 0.0 {
        rng.random_range(-cfg.hue_turns..cfg.hue_turns)
    } else {
        0.0
    };

    let pixels = image.h * image.w;
    let mut data = image.data.clone();
    debug_assert_eq!(image.c, 3);
    for px in 0..pixels {
        let i = px * 3;
        let mut rgb = [data[i], data[i + 1], data[i + 2]];
        if sigma > 0.0 {
            for ch in &mut rgb {
                let n: f32 = StandardNormal.sample(rng);
                *ch += sigma * n;
            }
        }
        for ch in &mut rgb {
            *ch = (*ch * brightness - 0.5) * contrast + 0.5;
        }
        if hue != 0.0 {
            rgb = rotate_hue(rgb, hue);
        }
        data[i] = rgb[0].clamp(0.0, 1.0);
        data[i + 1] = rgb[1].clamp(0.0, 1.0);
        data[i + 2] = rgb[2].clamp(0.0, 1.0);
    }

    let mut out = obs.clone();
    out.image.as_mut().unwrap().data = data;
    out
}

/// Rotate hue by `turns` in HSV space, preserving saturation and value.
fn rotate_hue(rgb: [f32; 3], turns: f32) -> [f32; 3] {
    let (r, g, b) = (rgb[0], rgb[1], rgb[2]);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if delta < 1e-9 {
        return rgb;
    }
    let mut h = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    } / 6.0;
    let s = delta / max.max(1e-9);
    let v = max;

    h = (h + turns).rem_euclid(1.0);

    let i = (h * 6.0).floor();
    let f = h * 6.0 - i;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match i as i32 % 6 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}
