//! Rigid-body editing of Gaussian scenes: applies simulator poses to
//! per-object Gaussian models, concatenates them into one renderable set,
//! and aligns reconstructed models into the simulator frame via RANSAC
//! plane fitting plus a manual adjustment.

mod manifest;
mod plane;
mod scene;

pub use manifest::{ManifestEntry, SceneManifest};
pub use plane::{align_to_simulator, fit_ground_plane, PlaneFit, RansacConfig};
pub use scene::{compose_scene, transform_gaussians, GsScene, SceneObject};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EditError {
    #[error("duplicate object name {0:?}")]
    DuplicateName(String),

    #[error("no such object {0:?}")]
    NoSuchObject(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error(transparent)]
    Gauss(#[from] gauss_model::GaussError),

    #[error(transparent)]
    Geom(#[from] geom_core::GeomError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EditError>;
