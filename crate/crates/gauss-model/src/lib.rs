//! Gaussian scene representation bound to triangle meshes.
//!
//! Each Gaussian is parameterized relative to one mesh face: barycentric
//! logits pick a point inside the face via softmax, and in soft binding an
//! extra tanh-bounded weight lets the Gaussian float along the face normal
//! by up to one face-scale length. Hard binding pins the weight to zero so
//! the Gaussian stays in the face plane.

mod binding;
mod serialize;
mod unit;

pub use binding::{
    resolve_backward, BindingGrad, BindingMode, BoundGaussian, BoundGaussianSet, NormalScale,
};
pub use serialize::BoundGaussianSetFile;
pub use unit::{GaussianUnit, UnitGrad};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GaussError {
    #[error("mesh has no faces")]
    EmptyMesh,

    #[error("per_face must be >= 1")]
    ZeroPerFace,

    #[error(transparent)]
    Geom(#[from] geom_core::GeomError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GaussError>;

pub(crate) fn softmax3(logits: [f64; 3]) -> [f64; 3] {
    let m = logits[0].max(logits[1]).max(logits[2]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp(), (logits[2] - m).exp()];
    let s = e[0] + e[1] + e[2];
    [e[0] / s, e[1] / s, e[2] / s]
}

pub(crate) fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
