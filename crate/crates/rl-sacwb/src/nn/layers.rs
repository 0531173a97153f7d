use super::{c, Float};
use ndarray::{Array1, Array2};
use rand::Rng;

/// Fully connected layer, weight layout [n_out, n_in].
#[derive(Debug, Clone)]
pub struct Dense<F> {
    pub weight: Array2<F>,
    pub bias: Array1<F>,
}

#[derive(Debug, Clone)]
pub struct DenseGrad<F> {
    pub weight: Array2<F>,
    pub bias: Array1<F>,
}

impl<F: Float> Dense<F> {
    pub fn init(n_in: usize, n_out: usize, rng: &mut impl Rng) -> Self {
        // Kaiming-uniform fan-in scaling.
        let lim = (1.0 / n_in as f64).sqrt();
        let weight = Array2::from_shape_fn((n_out, n_in), |_| c(rng.random_range(-lim..lim)));
        let bias = Array1::from_elem(n_out, F::zero());
        Dense { weight, bias }
    }

    /// x: [B, n_in] -> [B, n_out]
    pub fn forward(&self, x: &Array2<F>) -> Array2<F> {
        let mut out = x.dot(&self.weight.t());
        for mut row in out.rows_mut() {
            ndarray::Zip::from(&mut row).and(&self.bias).for_each(|o, &b| *o = *o + b);
        }
        out
    }

    /// Returns (input gradient, parameter gradients).
    pub fn backward(&self, x: &Array2<F>, d_out: &Array2<F>) -> (Array2<F>, DenseGrad<F>) {
        let d_w = d_out.t().dot(x);
        let d_b = d_out.sum_axis(ndarray::Axis(0));
        let d_x = d_out.dot(&self.weight);
        (d_x, DenseGrad { weight: d_w, bias: d_b })
    }

    pub fn zero_grad(&self) -> DenseGrad<F> {
        DenseGrad {
            weight: Array2::zeros(self.weight.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }
}

/// C = A·B for tall A and narrow contiguous B, monomorphized over the
/// column count so the accumulator loop vectorizes. matrixmultiply leaves a
/// lot on the table for these shapes.
fn small_gemm_const<F: Float, const N: usize>(
    a: ndarray::ArrayView2<F>,
    b: &Array2<F>,
) -> Array2<F> {
    let (m, k) = a.dim();
    debug_assert_eq!(b.dim(), (k, N));
    let a_s = a.as_slice().expect("standard layout");
    let b_s = b.as_slice().expect("standard layout");
    let mut out = Array2::zeros((m, N));
    let out_s = out.as_slice_mut().expect("standard layout");
    for row in 0..m {
        let a_row = &a_s[row * k..(row + 1) * k];
        let mut acc = [F::zero(); N];
        for (kk, &av) in a_row.iter().enumerate() {
            let b_row: &[F; N] = b_s[kk * N..(kk + 1) * N].try_into().unwrap();
            for n in 0..N {
                acc[n] = acc[n] + av * b_row[n];
            }
        }
        out_s[row * N..(row + 1) * N].copy_from_slice(&acc);
    }
    out
}

fn small_gemm<F: Float>(a: ndarray::ArrayView2<F>, b: &Array2<F>) -> Array2<F> {
    match b.ncols() {
        8 => small_gemm_const::<F, 8>(a, b),
        16 => small_gemm_const::<F, 16>(a, b),
        32 => small_gemm_const::<F, 32>(a, b),
        _ => a.dot(b),
    }
}

/// C = A·Bᵀ with short contiguous rows in both operands, monomorphized over
/// the dot length.
fn small_gemm_bt_const<F: Float, const N: usize>(
    a: ndarray::ArrayView2<F>,
    b: &Array2<F>,
) -> Array2<F> {
    let (m, n_in) = a.dim();
    debug_assert_eq!(n_in, N);
    let rows_b = b.nrows();
    let a_s = a.as_slice().expect("standard layout");
    let b_s = b.as_slice().expect("standard layout");
    let mut out = Array2::zeros((m, rows_b));
    let out_s = out.as_slice_mut().expect("standard layout");
    for row in 0..m {
        let a_row: &[F; N] = a_s[row * N..(row + 1) * N].try_into().unwrap();
        let out_row = &mut out_s[row * rows_b..(row + 1) * rows_b];
        for (j, o) in out_row.iter_mut().enumerate() {
            let b_row: &[F; N] = b_s[j * N..(j + 1) * N].try_into().unwrap();
            let mut dot = F::zero();
            for n in 0..N {
                dot = dot + a_row[n] * b_row[n];
            }
            *o = dot;
        }
    }
    out
}

fn small_gemm_bt<F: Float>(a: ndarray::ArrayView2<F>, b: &Array2<F>) -> Array2<F> {
    match a.ncols() {
        8 => small_gemm_bt_const::<F, 8>(a, b),
        16 => small_gemm_bt_const::<F, 16>(a, b),
        32 => small_gemm_bt_const::<F, 32>(a, b),
        _ => a.dot(&b.t()),
    }
}

/// dW = AᵀB with A tall [M, K] and B narrow [M, N]: one streaming pass over
/// the rows, accumulating K·N partials that stay cache-resident.
fn small_atb_const<F: Float, const N: usize>(
    a: ndarray::ArrayView2<F>,
    b: ndarray::ArrayView2<F>,
) -> Array2<F> {
    let (m, k) = a.dim();
    debug_assert_eq!(b.dim(), (m, N));
    let a_s = a.as_slice().expect("standard layout");
    let b_s = b.as_slice().expect("standard layout");
    let mut out = Array2::zeros((k, N));
    let out_s = out.as_slice_mut().expect("standard layout");
    for row in 0..m {
        let a_row = &a_s[row * k..(row + 1) * k];
        let b_row: &[F; N] = b_s[row * N..(row + 1) * N].try_into().unwrap();
        for (kk, &av) in a_row.iter().enumerate() {
            let acc = &mut out_s[kk * N..(kk + 1) * N];
            for n in 0..N {
                acc[n] = acc[n] + av * b_row[n];
            }
        }
    }
    out
}

fn small_atb<F: Float>(a: ndarray::ArrayView2<F>, b: ndarray::ArrayView2<F>) -> Array2<F> {
    match b.ncols() {
        8 => small_atb_const::<F, 8>(a, b),
        16 => small_atb_const::<F, 16>(a, b),
        32 => small_atb_const::<F, 32>(a, b),
        _ => a.t().dot(&b),
    }
}

/// Square-kernel strided convolution without padding, in HWC layout.
///
/// Weight layout [k·k·c_in, c_out] (patch-major rows); per-sample data is
/// row-major (h, w, c), flattened as [B, h·w·c].
#[derive(Debug, Clone)]
pub struct Conv2d<F> {
    pub weight: Array2<F>,
    pub bias: Array1<F>,
    pub c_in: usize,
    pub c_out: usize,
    pub k: usize,
    pub stride: usize,
}

#[derive(Debug, Clone)]
pub struct ConvGrad<F> {
    pub weight: Array2<F>,
    pub bias: Array1<F>,
}

/// Cached column matrix from the forward pass, reused for dW.
pub struct ConvCache<F> {
    pub cols: Array2<F>, // [B·P, k·k·c_in]
    pub h_in: usize,
    pub w_in: usize,
    pub h_out: usize,
    pub w_out: usize,
    pub batch: usize,
}

impl<F: Float> Conv2d<F> {
    pub fn init(c_in: usize, c_out: usize, k: usize, stride: usize, rng: &mut impl Rng) -> Self {
        let fan_in = c_in * k * k;
        let lim = (1.0 / fan_in as f64).sqrt();
        let weight = Array2::from_shape_fn((fan_in, c_out), |_| c(rng.random_range(-lim..lim)));
        let bias = Array1::from_elem(c_out, F::zero());
        Conv2d { weight, bias, c_in, c_out, k, stride }
    }

    pub fn out_dims(&self, h: usize, w: usize) -> (usize, usize) {
        ((h - self.k) / self.stride + 1, (w - self.k) / self.stride + 1)
    }

    fn im2col(&self, input: &Array2<F>, h: usize, w: usize) -> ConvCache<F> {
        let batch = input.nrows();
        let (h_out, w_out) = self.out_dims(h, w);
        let patches = h_out * w_out;
        let kc = self.k * self.c_in;
        let kk_c = self.k * kc;
        let mut cols = Array2::zeros((batch * patches, kk_c));
        let cols_s = cols.as_slice_mut().expect("standard layout");
        let input_s = input.as_slice().expect("standard layout");
        let stride = self.stride;
        let c = self.c_in;
        for b in 0..batch {
            let sample = &input_s[b * h * w * c..(b + 1) * h * w * c];
            for oy in 0..h_out {
                for ox in 0..w_out {
                    let dst_base = (b * patches + oy * w_out + ox) * kk_c;
                    // Each kernel row is one contiguous chunk of k·c values.
                    for ky in 0..self.k {
                        let src = ((oy * stride + ky) * w + ox * stride) * c;
                        cols_s[dst_base + ky * kc..dst_base + (ky + 1) * kc]
                            .copy_from_slice(&sample[src..src + kc]);
                    }
                }
            }
        }
        ConvCache { cols, h_in: h, w_in: w, h_out, w_out, batch }
    }

    /// input: [B, h·w·c_in] -> ([B, h_out·w_out·c_out], cache)
    pub fn forward(&self, input: &Array2<F>, h: usize, w: usize) -> (Array2<F>, ConvCache<F>) {
        let cache = self.im2col(input, h, w);
        let patches = cache.h_out * cache.w_out;
        let mut out = small_gemm(cache.cols.view(), &self.weight); // [B·P, c_out]
        {
            let out_s = out.as_slice_mut().expect("standard layout");
            let bias = self.bias.as_slice().expect("standard layout");
            for row in out_s.chunks_exact_mut(self.c_out) {
                for (o, &bv) in row.iter_mut().zip(bias) {
                    *o = *o + bv;
                }
            }
        }
        let out = out
            .into_shape_with_order((cache.batch, patches * self.c_out))
            .expect("contiguous reshape");
        (out, cache)
    }

    /// d_out: [B, P·c_out] -> (d_input [B, h·w·c_in], parameter grads)
    pub fn backward(
        &self,
        cache: &ConvCache<F>,
        d_out: &Array2<F>,
    ) -> (Array2<F>, ConvGrad<F>) {
        let patches = cache.h_out * cache.w_out;
        let batch = cache.batch;
        let bp = batch * patches;
        let d_out_bp = d_out
            .view()
            .into_shape_with_order((bp, self.c_out))
            .expect("contiguous reshape");

        // dW = colsᵀ · d_out, [K, c_out]; reduction over B·P.
        let d_w = small_atb(cache.cols.view(), d_out_bp.view());
        let d_b = d_out_bp.sum_axis(ndarray::Axis(0));
        // d_cols = d_out · Wᵀ, [B·P, K].
        let d_cols = small_gemm_bt(d_out_bp.view(), &self.weight);
        let d_cols_s = d_cols.as_slice().expect("standard layout");

        // col2im: accumulate the patch chunks back into input positions.
        let (h, w) = (cache.h_in, cache.w_in);
        let stride = self.stride;
        let c = self.c_in;
        let kc = self.k * c;
        let kk_c = self.k * kc;
        let mut d_input = Array2::zeros((batch, h * w * c));
        let d_input_s = d_input.as_slice_mut().expect("standard layout");
        for b in 0..batch {
            let sample = &mut d_input_s[b * h * w * c..(b + 1) * h * w * c];
            for oy in 0..cache.h_out {
                for ox in 0..cache.w_out {
                    let src_base = (b * patches + oy * cache.w_out + ox) * kk_c;
                    for ky in 0..self.k {
                        let dst = ((oy * stride + ky) * w + ox * stride) * c;
                        let src = &d_cols_s[src_base + ky * kc..src_base + (ky + 1) * kc];
                        for (d, s) in sample[dst..dst + kc].iter_mut().zip(src) {
                            *d = *d + *s;
                        }
                    }
                }
            }
        }
        (d_input, ConvGrad { weight: d_w, bias: d_b })
    }
}

/// In-place ReLU; returns the activation (used as its own backward mask).
pub fn relu<F: Float>(mut x: Array2<F>) -> Array2<F> {
    x.mapv_inplace(|v| if v > F::zero() { v } else { F::zero() });
    x
}

/// d_out masked by activation > 0.
pub fn relu_backward<F: Float>(activated: &Array2<F>, d_out: &Array2<F>) -> Array2<F> {
    let mut d = d_out.clone();
    ndarray::Zip::from(&mut d).and(activated).for_each(|g, &a| {
        if a <= F::zero() {
            *g = F::zero();
        }
    });
    d
}
