use super::layers::{relu, relu_backward, Conv2d, ConvCache, ConvGrad, Dense, DenseGrad};
use super::{c, Float};
use ndarray::{Array1, Array2, Axis};
use rand::Rng;

/// Flattened-image batch: one row per sample, row-major (h, w, c).
#[derive(Debug, Clone)]
pub struct ImageBatch<F> {
    pub data: Array2<F>, // [B, h·w·c]
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

/// Batch of observations: optional image plus a low-dimensional state row.
#[derive(Debug, Clone)]
pub struct ObsBatch<F> {
    pub image: Option<ImageBatch<F>>,
    pub state: Array2<F>, // [B, state_dim]
}

impl<F: Float> ObsBatch<F> {
    pub fn batch_len(&self) -> usize {
        self.state.nrows()
    }
}

/// Three-stage strided conv stack: 8, 16, 32 channels of 3x3 stride 2.
#[derive(Debug, Clone)]
pub struct Encoder<F> {
    pub conv1: Conv2d<F>,
    pub conv2: Conv2d<F>,
    pub conv3: Conv2d<F>,
}

pub struct EncoderCache<F> {
    c1: ConvCache<F>,
    a1: Array2<F>,
    c2: ConvCache<F>,
    a2: Array2<F>,
    c3: ConvCache<F>,
    a3: Array2<F>,
}

#[derive(Debug, Clone)]
pub struct EncoderGrad<F> {
    pub conv1: ConvGrad<F>,
    pub conv2: ConvGrad<F>,
    pub conv3: ConvGrad<F>,
}

impl<F: Float> Encoder<F> {
    pub fn init(c_in: usize, rng: &mut impl Rng) -> Self {
        Encoder {
            conv1: Conv2d::init(c_in, 8, 3, 2, rng),
            conv2: Conv2d::init(8, 16, 3, 2, rng),
            conv3: Conv2d::init(16, 32, 3, 2, rng),
        }
    }

    pub fn feature_len(&self, h: usize, w: usize) -> usize {
        let (h1, w1) = self.conv1.out_dims(h, w);
        let (h2, w2) = self.conv2.out_dims(h1, w1);
        let (h3, w3) = self.conv3.out_dims(h2, w2);
        h3 * w3 * 32
    }

    pub fn forward(&self, img: &ImageBatch<F>) -> (Array2<F>, EncoderCache<F>) {
        let (o1, c1) = self.conv1.forward(&img.data, img.h, img.w);
        let a1 = relu(o1);
        let (h1, w1) = self.conv1.out_dims(img.h, img.w);
        let (o2, c2) = self.conv2.forward(&a1, h1, w1);
        let a2 = relu(o2);
        let (h2, w2) = self.conv2.out_dims(h1, w1);
        let (o3, c3) = self.conv3.forward(&a2, h2, w2);
        let a3 = relu(o3);
        let cache = EncoderCache { c1, a1, c2, a2, c3, a3: a3.clone() };
        (a3, cache)
    }

    pub fn backward(&self, cache: &EncoderCache<F>, d_feat: &Array2<F>) -> EncoderGrad<F> {
        let d3 = relu_backward(&cache.a3, d_feat);
        let (d_a2, g3) = self.conv3.backward(&cache.c3, &d3);
        let d2 = relu_backward(&cache.a2, &d_a2);
        let (d_a1, g2) = self.conv2.backward(&cache.c2, &d2);
        let d1 = relu_backward(&cache.a1, &d_a1);
        let (_, g1) = self.conv1.backward(&cache.c1, &d1);
        EncoderGrad { conv1: g1, conv2: g2, conv3: g3 }
    }
}

/// Log-std clamp bounds.
pub const LOG_STD_MIN: f64 = -10.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Tanh-Gaussian policy network: optional conv encoder, one hidden layer,
/// mean and log-std heads (log-std clamped to [-10, 2]).
#[derive(Debug, Clone)]
pub struct ActorNet<F> {
    pub encoder: Option<Encoder<F>>,
    pub fc1: Dense<F>,
    pub mean: Dense<F>,
    pub log_std: Dense<F>,
    pub action_dim: usize,
}

pub struct ActorCache<F> {
    enc: Option<EncoderCache<F>>,
    features: Array2<F>, // [B, feat+state] input to fc1
    hidden: Array2<F>,   // post-relu
    pre_clamp: Array2<F>,
    feat_len: usize,
}

#[derive(Debug, Clone)]
pub struct ActorOut<F> {
    pub mean: Array2<F>,
    pub log_std: Array2<F>,
}

#[derive(Debug, Clone)]
pub struct ActorGrad<F> {
    pub encoder: Option<EncoderGrad<F>>,
    pub fc1: DenseGrad<F>,
    pub mean: DenseGrad<F>,
    pub log_std: DenseGrad<F>,
}

impl<F: Float> ActorNet<F> {
    pub fn init(
        image: Option<(usize, usize, usize)>, // (c, h, w)
        state_dim: usize,
        action_dim: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let encoder = image.map(|(ci, _, _)| Encoder::init(ci, rng));
        let feat = match (&encoder, image) {
            (Some(enc), Some((_, h, w))) => enc.feature_len(h, w),
            _ => 0,
        };
        let fc1 = Dense::init(feat + state_dim, hidden, rng);
        let mean = Dense::init(hidden, action_dim, rng);
        let mut log_std = Dense::init(hidden, action_dim, rng);
        // Start with a moderate exploration spread.
        log_std.bias.fill(c(-1.0));
        ActorNet { encoder, fc1, mean, log_std, action_dim }
    }

    fn assemble_features(
        &self,
        obs: &ObsBatch<F>,
    ) -> (Array2<F>, Option<EncoderCache<F>>, usize) {
        match (&self.encoder, &obs.image) {
            (Some(enc), Some(img)) => {
                let (feat, cache) = enc.forward(img);
                let feat_len = feat.ncols();
                let mut full = Array2::zeros((feat.nrows(), feat_len + obs.state.ncols()));
                full.slice_mut(ndarray::s![.., 0..feat_len]).assign(&feat);
                full.slice_mut(ndarray::s![.., feat_len..]).assign(&obs.state);
                (full, Some(cache), feat_len)
            }
            _ => (obs.state.clone(), None, 0),
        }
    }

    pub fn forward(&self, obs: &ObsBatch<F>) -> (ActorOut<F>, ActorCache<F>) {
        let (features, enc, feat_len) = self.assemble_features(obs);
        let hidden = relu(self.fc1.forward(&features));
        let pre_clamp = self.log_std.forward(&hidden);
        let mean = self.mean.forward(&hidden);
        let log_std = pre_clamp.mapv(|v| {
            num_traits::clamp(v, c::<F>(LOG_STD_MIN), c::<F>(LOG_STD_MAX))
        });
        (
            ActorOut { mean, log_std },
            ActorCache { enc, features, hidden, pre_clamp, feat_len },
        )
    }

    /// Backward from gradients on the mean and (clamped) log-std heads.
    pub fn backward(
        &self,
        cache: &ActorCache<F>,
        d_mean: &Array2<F>,
        d_log_std: &Array2<F>,
    ) -> ActorGrad<F> {
        // Clamp mask: zero gradient outside the bounds.
        let mut d_ls = d_log_std.clone();
        ndarray::Zip::from(&mut d_ls).and(&cache.pre_clamp).for_each(|g, &p| {
            if p <= c::<F>(LOG_STD_MIN) || p >= c::<F>(LOG_STD_MAX) {
                *g = F::zero();
            }
        });
        let (d_hidden_m, g_mean) = self.mean.backward(&cache.hidden, d_mean);
        let (d_hidden_l, g_log_std) = self.log_std.backward(&cache.hidden, &d_ls);
        let d_hidden = &d_hidden_m + &d_hidden_l;
        let d_hidden = relu_backward(&cache.hidden, &d_hidden);
        let (d_features, g_fc1) = self.fc1.backward(&cache.features, &d_hidden);

        let encoder = match (&self.encoder, &cache.enc) {
            (Some(enc), Some(enc_cache)) => {
                let d_feat = d_features.slice(ndarray::s![.., 0..cache.feat_len]).to_owned();
                Some(enc.backward(enc_cache, &d_feat))
            }
            _ => None,
        };
        ActorGrad { encoder, fc1: g_fc1, mean: g_mean, log_std: g_log_std }
    }
}

/// Q network: optional conv encoder over the observation, then a hidden
/// layer over [features | state | action] and a scalar head.
#[derive(Debug, Clone)]
pub struct CriticNet<F> {
    pub encoder: Option<Encoder<F>>,
    pub fc1: Dense<F>,
    pub out: Dense<F>,
    pub action_dim: usize,
}

/// Observation-side cache: encoder features assembled with the state, so
/// several actions can be evaluated against one encode pass.
pub struct CriticObsCache<F> {
    enc: Option<EncoderCache<F>>,
    pub obs_features: Array2<F>, // [B, feat+state]
    feat_len: usize,
}

pub struct CriticHeadCache<F> {
    full_input: Array2<F>, // [B, feat+state+action]
    hidden: Array2<F>,
}

#[derive(Debug, Clone)]
pub struct CriticGrad<F> {
    pub encoder: Option<EncoderGrad<F>>,
    pub fc1: DenseGrad<F>,
    pub out: DenseGrad<F>,
}

impl<F: Float> CriticNet<F> {
    pub fn init(
        image: Option<(usize, usize, usize)>,
        state_dim: usize,
        action_dim: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let encoder = image.map(|(ci, _, _)| Encoder::init(ci, rng));
        let feat = match (&encoder, image) {
            (Some(enc), Some((_, h, w))) => enc.feature_len(h, w),
            _ => 0,
        };
        let fc1 = Dense::init(feat + state_dim + action_dim, hidden, rng);
        let out = Dense::init(hidden, 1, rng);
        CriticNet { encoder, fc1, out, action_dim }
    }

    pub fn encode(&self, obs: &ObsBatch<F>) -> CriticObsCache<F> {
        match (&self.encoder, &obs.image) {
            (Some(enc), Some(img)) => {
                let (feat, cache) = enc.forward(img);
                let feat_len = feat.ncols();
                let mut full = Array2::zeros((feat.nrows(), feat_len + obs.state.ncols()));
                full.slice_mut(ndarray::s![.., 0..feat_len]).assign(&feat);
                full.slice_mut(ndarray::s![.., feat_len..]).assign(&obs.state);
                CriticObsCache { enc: Some(cache), obs_features: full, feat_len }
            }
            _ => CriticObsCache { enc: None, obs_features: obs.state.clone(), feat_len: 0 },
        }
    }

    /// Q values for one action batch against a cached encode.
    pub fn head(
        &self,
        obs_cache: &CriticObsCache<F>,
        action: &Array2<F>,
    ) -> (Array1<F>, CriticHeadCache<F>) {
        let b = obs_cache.obs_features.nrows();
        let n_obs = obs_cache.obs_features.ncols();
        let mut full = Array2::zeros((b, n_obs + action.ncols()));
        full.slice_mut(ndarray::s![.., 0..n_obs]).assign(&obs_cache.obs_features);
        full.slice_mut(ndarray::s![.., n_obs..]).assign(action);
        let hidden = relu(self.fc1.forward(&full));
        let q = self.out.forward(&hidden).index_axis(Axis(1), 0).to_owned();
        (q, CriticHeadCache { full_input: full, hidden })
    }

    /// Convenience full forward.
    pub fn q_value(&self, obs: &ObsBatch<F>, action: &Array2<F>) -> Array1<F> {
        let cache = self.encode(obs);
        self.head(&cache, action).0
    }

    /// Gradient of Σ d_q·q with respect to the action inputs only (the
    /// head path; the encoder does not touch the action).
    pub fn action_gradient(
        &self,
        head_cache: &CriticHeadCache<F>,
        d_q: &Array1<F>,
    ) -> Array2<F> {
        let d_out = d_q.view().insert_axis(Axis(1)).to_owned();
        let (d_hidden, _) = self.out.backward(&head_cache.hidden, &d_out);
        let d_hidden = relu_backward(&head_cache.hidden, &d_hidden);
        let (d_full, _) = self.fc1.backward(&head_cache.full_input, &d_hidden);
        let n = d_full.ncols();
        d_full.slice(ndarray::s![.., n - self.action_dim..]).to_owned()
    }

    /// Full parameter gradients for one (obs, action) head pass.
    pub fn backward(
        &self,
        obs_cache: &CriticObsCache<F>,
        head_cache: &CriticHeadCache<F>,
        d_q: &Array1<F>,
    ) -> CriticGrad<F> {
        let d_out = d_q.view().insert_axis(Axis(1)).to_owned();
        let (d_hidden, g_out) = self.out.backward(&head_cache.hidden, &d_out);
        let d_hidden = relu_backward(&head_cache.hidden, &d_hidden);
        let (d_full, g_fc1) = self.fc1.backward(&head_cache.full_input, &d_hidden);
        let encoder = match (&self.encoder, &obs_cache.enc) {
            (Some(enc), Some(enc_cache)) => {
                let d_feat =
                    d_full.slice(ndarray::s![.., 0..obs_cache.feat_len]).to_owned();
                Some(enc.backward(enc_cache, &d_feat))
            }
            _ => None,
        };
        CriticGrad { encoder, fc1: g_fc1, out: g_out }
    }
}

/// Stable-order access to every parameter array, used by the optimizer,
/// polyak averaging and checkpointing.
pub trait FlatParams<F> {
    fn visit(&self, f: &mut dyn FnMut(&[F]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [F]));

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |s| n += s.len());
        n
    }

    fn to_flat(&self) -> Vec<F>
    where
        F: Copy,
    {
        let mut out = Vec::with_capacity(self.param_count());
        self.visit(&mut |s| out.extend_from_slice(s));
        out
    }

    fn load_flat(&mut self, flat: &[F])
    where
        F: Copy,
    {
        let mut pos = 0;
        self.visit_mut(&mut |s| {
            s.copy_from_slice(&flat[pos..pos + s.len()]);
            pos += s.len();
        });
        assert_eq!(pos, flat.len(), "flat parameter length mismatch");
    }
}

macro_rules! impl_flat {
    ($ty:ident, $($field:ident),+) => {
        impl<F: Float> FlatParams<F> for $ty<F> {
            fn visit(&self, f: &mut dyn FnMut(&[F])) {
                $( self.$field.visit(f); )+
            }
            fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [F])) {
                $( self.$field.visit_mut(f); )+
            }
        }
    };
}

impl<F: Float> FlatParams<F> for Dense<F> {
    fn visit(&self, f: &mut dyn FnMut(&[F])) {
        f(self.weight.as_slice().expect("standard layout"));
        f(self.bias.as_slice().expect("standard layout"));
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [F])) {
        f(self.weight.as_slice_mut().expect("standard layout"));
        f(self.bias.as_slice_mut().expect("standard layout"));
    }
}

impl<F: Float> FlatParams<F> for DenseGrad<F> {
    fn visit(&self, f: &mut dyn FnMut(&[F])) {
        f(self.weight.as_slice().expect("standard layout"));
        f(self.bias.as_slice().expect("standard layout"));
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [F])) {
        f(self.weight.as_slice_mut().expect("standard layout"));
        f(self.bias.as_slice_mut().expect("standard layout"));
    }
}

impl<F: Float> FlatParams<F> for Conv2d<F> {
    fn visit(&self, f: &mut dyn FnMut(&[F])) {
        f(self.weight.as_slice().expect("standard layout"));
        f(self.bias.as_slice().expect("standard layout"));
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [F])) {
        f(self.weight.as_slice_mut().expect("standard layout"));
        f(self.bias.as_slice_mut().expect("standard layout"));
    }
}

impl<F: Float> FlatParams<F> for ConvGrad<F> {
    fn visit(&self, f: &mut dyn FnMut(&[F])) {
        f(self.weight.as_slice().expect("standard layout"));
        f(self.bias.as_slice().expect("standard layout"));
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [F])) {
        f(self.weight.as_slice_mut().expect("standard layout"));
        f(self.bias.as_slice_mut().expect("standard layout"));
    }
}

impl_flat!(Encoder, conv1, conv2, conv3);
impl_flat!(EncoderGrad, conv1, conv2, conv3);

impl<F: Float, T: FlatParams<F>> FlatParams<F> for Option<T> {
    fn visit(&self, f: &mut dyn FnMut(&[F])) {
        if let Some(v) = self {
            v.visit(f);
        }
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [F])) {
        if let Some(v) = self {
            v.visit_mut(f);
        }
    }
}

impl_flat!(ActorNet, encoder, fc1, mean, log_std);
impl_flat!(ActorGrad, encoder, fc1, mean, log_std);
impl_flat!(CriticNet, encoder, fc1, out);
impl_flat!(CriticGrad, encoder, fc1, out);

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_roundtrip_preserves_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net: ActorNet<f32> = ActorNet::init(Some((3, 16, 16)), 4, 4, 32, &mut rng);
        let flat = net.to_flat();
        let mut changed = flat.clone();
        for v in &mut changed {
            *v += 1.0;
        }
        net.load_flat(&changed);
        let back = net.to_flat();
        for (a, b) in back.iter().zip(&flat) {
            assert!((a - b - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn critic_action_gradient_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net: CriticNet<f64> = CriticNet::init(None, 3, 2, 16, &mut rng);
        let obs = ObsBatch {
            image: None,
            state: Array2::from_shape_fn((2, 3), |_| rng.random_range(-1.0..1.0)),
        };
        let action = Array2::from_shape_fn((2, 2), |_| rng.random_range(-0.9..0.9));
        let cache = net.encode(&obs);
        let (_, head) = net.head(&cache, &action);
        let d_q = Array1::from_elem(2, 1.0);
        let d_a = net.action_gradient(&head, &d_q);

        let step = 1e-6;
        for bi in 0..2 {
            for j in 0..2 {
                let mut ap = action.clone();
                ap[[bi, j]] += step;
                let mut am = action.clone();
                am[[bi, j]] -= step;
                let qp = net.q_value(&obs, &ap).sum();
                let qm = net.q_value(&obs, &am).sum();
                let fd = (qp - qm) / (2.0 * step);
                assert!((d_a[[bi, j]] - fd).abs() < 1e-6, "a[{bi}][{j}]");
            }
        }
    }

    #[test]
    fn encoder_feature_len_for_default_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let enc: Encoder<f32> = Encoder::init(3, &mut rng);
        assert_eq!(enc.feature_len(64, 64), 32 * 7 * 7);
    }
}
