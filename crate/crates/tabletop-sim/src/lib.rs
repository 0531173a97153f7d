//! Desk-scale tabletop manipulation environment with a kinematic gripper,
//! quasi-static objects, sparse-reward grasp / pick-and-place tasks, and
//! three observation renderers: Gaussian-splat (training), flat-shaded mesh
//! (baseline), and a textured Lambertian mesh with soft shadows standing in
//! for reality.

mod baseline;
mod env;
mod raster;
mod trace;

pub use baseline::baseline_controller;
pub use env::{
    Action, EnvConfig, ObjectAsset, Observation, RendererKind, SceneAssets, SimState, StepResult,
    TabletopEnv, Task,
};
pub use raster::{rasterize, MeshInstance, ShadingParams, TexturedMesh};
pub use trace::{read_trace, TraceRecord, TraceWriter};

#[cfg(test)]
pub(crate) mod testutil;


use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("step called on a terminal state")]
    SteppedTerminalState,

    #[error("no such object {0:?}")]
    NoSuchObject(String),

    #[error("GS renderer requested but no Gaussian scene is attached")]
    GsUnavailable,

    #[error("vertex color count {colors} does not match vertex count {vertices}")]
    ColorCountMismatch { colors: usize, vertices: usize },

    #[error(transparent)]
    Geom(#[from] geom_core::GeomError),

    #[error(transparent)]
    Edit(#[from] scene_edit::EditError),

    #[error(transparent)]
    Gauss(#[from] gauss_model::GaussError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
