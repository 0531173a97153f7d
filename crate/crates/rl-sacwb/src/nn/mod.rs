//! Minimal neural-network kernels with hand-derived backward passes.
//!
//! Float-generic so the training path runs in f32 while gradient-check
//! tests instantiate f64.

mod layers;
mod net;

pub use layers::{Conv2d, ConvGrad, Dense, DenseGrad};
pub use net::{
    ActorCache, ActorGrad, ActorNet, ActorOut, CriticGrad, CriticHeadCache, CriticNet,
    CriticObsCache, Encoder, EncoderCache, EncoderGrad, FlatParams, ImageBatch, ObsBatch,
    LOG_STD_MAX, LOG_STD_MIN,
};

/// Scalar type the kernels are generic over.
pub trait Float:
    ndarray::LinalgScalar + num_traits::Float + std::fmt::Debug + std::fmt::Display
{
}

impl Float for f32 {}
impl Float for f64 {}

/// Cast an f64 constant into the working float type.
#[inline]
pub fn c<F: Float>(x: f64) -> F {
    F::from(x).expect("finite constant converts")
}
