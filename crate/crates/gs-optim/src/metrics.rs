use crate::{OptimError, Result};
use splat_render::ImageRgb;

/// SSIM window size (11x11 Gaussian, sigma 1.5) and stability constants for
/// dynamic range 1.0.
pub const SSIM_WINDOW: u32 = 11;
const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const C1: f64 = K1 * K1;
const C2: f64 = K2 * K2;

/// Peak signal-to-noise ratio in dB over all RGB channels, capped at 100 dB
/// for (near-)identical images.
pub fn psnr(a: &ImageRgb, b: &ImageRgb) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(OptimError::DimensionMismatch(a.width(), a.height(), b.width(), b.height()));
    }
    let n = a.data().len() as f64;
    let mse: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n;
    if mse < 1e-10 {
        Ok(100.0)
    } else {
        Ok(10.0 * (1.0 / mse).log10())
    }
}

/// Mean structural similarity over the valid (fully-windowed) region of the
/// grayscale images (channel mean), in [-1, 1].
pub fn ssim(a: &ImageRgb, b: &ImageRgb) -> Result<f64> {
    ssim_impl(a, b, None, None)
}

/// SSIM together with the gradient of the mean SSIM with respect to image
/// `a`'s RGB channels (used by the training loss). An optional per-pixel
/// weight restricts the mean to windows centered on unmasked pixels.
pub fn ssim_with_grad(
    a: &ImageRgb,
    b: &ImageRgb,
    mask: Option<&[bool]>,
) -> Result<(f64, ImageRgb)> {
    let mut grad = ImageRgb::new(a.width(), a.height());
    let value = ssim_impl(a, b, mask, Some(&mut grad))?;
    Ok((value, grad))
}

fn gaussian_kernel() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as i64;
    let mut k = Vec::with_capacity((SSIM_WINDOW * SSIM_WINDOW) as usize);
    let mut sum = 0.0;
    for dy in -half..=half {
        for dx in -half..=half {
            let v = (-((dx * dx + dy * dy) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            k.push(v);
            sum += v;
        }
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

fn ssim_impl(
    a: &ImageRgb,
    b: &ImageRgb,
    mask: Option<&[bool]>,
    mut grad_out: Option<&mut ImageRgb>,
) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(OptimError::DimensionMismatch(a.width(), a.height(), b.width(), b.height()));
    }
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(OptimError::ImageTooSmall(w, h, SSIM_WINDOW));
    }

    let x = a.to_gray();
    let y = b.to_gray();
    let kernel = gaussian_kernel();
    let half = (SSIM_WINDOW / 2) as usize;
    let (vw, vh) = (w as usize - 2 * half, h as usize - 2 * half);

    // Per-valid-pixel statistics and, when requested, the weight maps that
    // get scattered back through the window in the gradient pass.
    let mut total = 0.0f64;
    let mut count = 0.0f64;
    let mut w_mu = vec![0.0f64; if grad_out.is_some() { vw * vh } else { 0 }];
    let mut w_m2 = vec![0.0f64; w_mu.len()];
    let mut w_mxy = vec![0.0f64; w_mu.len()];

    let stride = w as usize;
    for vy in 0..vh {
        for vx in 0..vw {
            if let Some(m) = mask {
                // Window centered at (vx+half, vy+half); skip masked centers.
                if !m[(vy + half) * stride + (vx + half)] {
                    continue;
                }
            }
            let mut mu_x = 0.0;
            let mut mu_y = 0.0;
            let mut m_x2 = 0.0;
            let mut m_y2 = 0.0;
            let mut m_xy = 0.0;
            let mut ki = 0;
            for dy in 0..SSIM_WINDOW as usize {
                let row = (vy + dy) * stride + vx;
                for dx in 0..SSIM_WINDOW as usize {
                    let kv = kernel[ki];
                    ki += 1;
                    let xv = x[row + dx];
                    let yv = y[row + dx];
                    mu_x += kv * xv;
                    mu_y += kv * yv;
                    m_x2 += kv * xv * xv;
                    m_y2 += kv * yv * yv;
                    m_xy += kv * xv * yv;
                }
            }
            let sig_x2 = m_x2 - mu_x * mu_x;
            let sig_y2 = m_y2 - mu_y * mu_y;
            let sig_xy = m_xy - mu_x * mu_y;

            let a1 = 2.0 * mu_x * mu_y + C1;
            let a2 = 2.0 * sig_xy + C2;
            let b1 = mu_x * mu_x + mu_y * mu_y + C1;
            let b2 = sig_x2 + sig_y2 + C2;
            let s = (a1 * a2) / (b1 * b2);
            total += s;
            count += 1.0;

            if grad_out.is_some() {
                // Partials w.r.t. the filtered statistics (mu_x, m_x2, m_xy).
                let ds_d_a1 = a2 / (b1 * b2);
                let ds_d_a2 = a1 / (b1 * b2);
                let ds_d_b1 = -s / b1;
                let ds_d_b2 = -s / b2;
                let ds_d_sig_x2 = ds_d_b2;
                let ds_d_sig_xy = 2.0 * ds_d_a2;
                let ds_d_mu_x = 2.0 * mu_y * ds_d_a1 + 2.0 * mu_x * ds_d_b1
                    - 2.0 * mu_x * ds_d_sig_x2
                    - mu_y * ds_d_sig_xy;
                let vi = vy * vw + vx;
                w_mu[vi] = ds_d_mu_x;
                w_m2[vi] = ds_d_sig_x2;
                w_mxy[vi] = ds_d_sig_xy;
            }
        }
    }

    if count == 0.0 {
        // Fully masked image: define SSIM as 1 with zero gradient.
        return Ok(1.0);
    }
    let mean = total / count;

    if let Some(grad) = grad_out.as_deref_mut() {
        // Scatter the per-window weights back to gray-pixel gradients:
        // d mean / d x_q = (1/N) Σ_p k(q-p)·[w_mu_p + 2 x_q w_m2_p + y_q w_mxy_p]
        let mut gray_grad = vec![0.0f64; (w * h) as usize];
        let inv_count = 1.0 / count;
        for vy in 0..vh {
            for vx in 0..vw {
                let vi = vy * vw + vx;
                let (wm, w2, wxy) = (w_mu[vi], w_m2[vi], w_mxy[vi]);
                if wm == 0.0 && w2 == 0.0 && wxy == 0.0 {
                    continue;
                }
                let mut ki = 0;
                for dy in 0..SSIM_WINDOW as usize {
                    let row = (vy + dy) * stride + vx;
                    for dx in 0..SSIM_WINDOW as usize {
                        let kv = kernel[ki];
                        ki += 1;
                        let q = row + dx;
                        gray_grad[q] +=
                            inv_count * kv * (wm + 2.0 * x[q] * w2 + y[q] * wxy);
                    }
                }
            }
        }
        // gray = mean of channels
        let data = grad.data_mut();
        for (q, g) in gray_grad.iter().enumerate() {
            let third = g / 3.0;
            data[q * 3] = third;
            data[q * 3 + 1] = third;
            data[q * 3 + 2] = third;
        }
    }

    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise_image(w: u32, h: u32, seed: u64) -> ImageRgb {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..(w * h * 3) as usize).map(|_| rng.random_range(0.0..1.0)).collect();
        ImageRgb::from_data(w, h, data).unwrap()
    }

    #[test]
    fn psnr_identical_is_capped() {
        let a = noise_image(16, 16, 1);
        assert_eq!(psnr(&a, &a).unwrap(), 100.0);
    }

    #[test]
    fn psnr_uniform_half_difference() {
        let a = ImageRgb::filled(16, 16, [0.25, 0.25, 0.25]);
        let b = ImageRgb::filled(16, 16, [0.75, 0.75, 0.75]);
        // MSE = 0.25 -> 10·log10(4) = 6.0206 dB
        assert!((psnr(&a, &b).unwrap() - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn psnr_maximal_error_is_zero_db() {
        let a = ImageRgb::filled(16, 16, [0.0, 0.0, 0.0]);
        let b = ImageRgb::filled(16, 16, [1.0, 1.0, 1.0]);
        assert!((psnr(&a, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn psnr_is_symmetric() {
        let a = noise_image(24, 18, 3);
        let b = noise_image(24, 18, 4);
        assert!((psnr(&a, &b).unwrap() - psnr(&b, &a).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn ssim_identical_is_one() {
        let a = noise_image(32, 32, 5);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_constant_shift_penalizes_luminance_only() {
        let a = ImageRgb::filled(32, 32, [0.5, 0.5, 0.5]);
        let mut b = a.clone();
        for v in b.data_mut() {
            *v += 0.1;
        }
        // Closed form on constants: s = (2·0.5·0.6 + C1)/(0.25 + 0.36 + C1)
        let expected = (2.0 * 0.5 * 0.6 + C1) / (0.25 + 0.36 + C1);
        let got = ssim(&a, &b).unwrap();
        assert!((got - expected).abs() < 1e-9, "got {got}, expected {expected}");
        assert!(got < 1.0 && got > 0.5);
    }

    #[test]
    fn ssim_uncorrelated_noise_is_near_zero() {
        for seed in 0..10 {
            let a = noise_image(48, 48, 100 + seed);
            let b = noise_image(48, 48, 200 + seed);
            let s = ssim(&a, &b).unwrap();
            assert!(s.abs() < 0.2, "seed {seed}: ssim {s}");
        }
    }

    #[test]
    fn ssim_is_symmetric() {
        let a = noise_image(32, 32, 11);
        let b = noise_image(32, 32, 12);
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = ImageRgb::new(8, 8);
        assert!(matches!(ssim(&a, &a), Err(OptimError::ImageTooSmall(8, 8, 11))));
    }

    #[test]
    fn ssim_rejects_dimension_mismatch() {
        let a = ImageRgb::new(16, 16);
        let b = ImageRgb::new(16, 12);
        assert!(matches!(ssim(&a, &b), Err(OptimError::DimensionMismatch(..))));
    }

    #[test]
    fn ssim_gradient_matches_finite_differences() {
        let a = noise_image(16, 16, 21);
        let b = noise_image(16, 16, 22);
        let (_, grad) = ssim_with_grad(&a, &b, None).unwrap();

        let step = 1e-5;
        // Spot-check a handful of pixels across the image.
        for &(x, y, ch) in &[(0u32, 0u32, 0usize), (8, 8, 1), (15, 15, 2), (5, 11, 0), (12, 3, 2)] {
            let idx = ((y * 16 + x) * 3) as usize + ch;
            let mut plus = a.clone();
            plus.data_mut()[idx] += step;
            let mut minus = a.clone();
            minus.data_mut()[idx] -= step;
            let fd = (ssim(&plus, &b).unwrap() - ssim(&minus, &b).unwrap()) / (2.0 * step);
            let analytic = grad.data()[idx];
            assert!(
                (analytic - fd).abs() < 1e-6 + 1e-3 * fd.abs(),
                "pixel ({x},{y},{ch}): analytic {analytic} vs fd {fd}"
            );
        }
    }
}
