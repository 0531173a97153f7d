//! Optimizes a bound Gaussian set against posed multi-view images and
//! provides the image-quality metrics (PSNR, SSIM) used to score
//! reconstructions.

mod adam;
mod metrics;
mod train;

pub use adam::AdamState;
pub use metrics::{psnr, ssim, ssim_with_grad};
pub use train::{train_gs, write_loss_csv, GsTrainConfig, LossRecord, PosedView};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("need at least two views, got {0}")]
    TooFewViews(usize),

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),

    #[error("image {0}x{1} is smaller than the {2}x{2} SSIM window")]
    ImageTooSmall(u32, u32, u32),

    #[error("view {index}: image dimensions {got_w}x{got_h} do not match camera {cam_w}x{cam_h}")]
    ViewMismatch { index: usize, got_w: u32, got_h: u32, cam_w: u32, cam_h: u32 },

    #[error(transparent)]
    Gauss(#[from] gauss_model::GaussError),

    #[error(transparent)]
    Render(#[from] splat_render::RenderError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, OptimError>;
