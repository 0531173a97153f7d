//! Forward and backward software rasterizer for 3D Gaussians.
//!
//! Projection follows the standard EWA first-order approximation
//! Σ₂D = J·W·Σ·Wᵀ·Jᵀ with a +0.3 px² diagonal floor; compositing is
//! depth-sorted front-to-back alpha blending with an opacity ceiling of
//! 0.999 and early termination below a transmittance of 1e-4. The backward
//! pass is the exact reverse-mode derivative of the forward pass for every
//! non-culled Gaussian.

mod backward;
mod forward;
mod image_buf;
mod project;

pub use backward::{render_backward, RenderGradients};
pub use forward::{render, RenderedImage};
pub use image_buf::ImageRgb;
pub use project::{project_gaussian, ProjectOutcome, Splat2D};

use thiserror::Error;

/// Near plane in meters; splat centers at or behind it are culled.
pub const NEAR_PLANE: f64 = 0.01;
/// Diagonal floor added to the projected covariance, px².
pub const COV2D_FLOOR: f64 = 0.3;
/// Per-splat alpha ceiling.
pub const ALPHA_MAX: f64 = 0.999;
/// Contributions with alpha below this are skipped.
pub const ALPHA_MIN: f64 = 1e-6;
/// Compositing stops once transmittance falls below this.
pub const TRANSMITTANCE_MIN: f64 = 1e-4;
/// Screen-space culling radius in standard deviations.
pub const CULL_SIGMA: f64 = 3.0;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch { expected_w: u32, expected_h: u32, got_w: u32, got_h: u32 },

    #[error("invalid pfm file: {0}")]
    PfmFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, RenderError>;
