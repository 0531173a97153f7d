use thiserror::Error;

/// Errors produced by geometric operations.
#[derive(Debug, Error)]
pub enum GeomError {
    #[error("point is behind the camera (camera-space z = {z})")]
    BehindCamera { z: f64 },

    #[error("face {index} is degenerate (area = {area} m^2)")]
    DegenerateFace { index: usize, area: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("vertex count mismatch: expected {expected}, got {got}")]
    VertexCountMismatch { expected: usize, got: usize },

    #[error("obj parse error at line {line}: {message}")]
    ObjParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
