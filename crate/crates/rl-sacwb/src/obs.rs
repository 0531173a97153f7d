use crate::nn::{ImageBatch, ObsBatch};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Shape contract of an environment's observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObsSpec {
    /// (channels, height, width) when the observation carries an image.
    pub image: Option<(usize, usize, usize)>,
    pub state_dim: usize,
}

/// One observation: optional CHW image in [0,1] plus a flat state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Obs {
    pub image: Option<ObsImage>,
    pub state: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObsImage {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    /// Row-major (h, w, c) pixel data, length h·w·c.
    pub data: Vec<f32>,
}

impl Obs {
    pub fn state_only(state: Vec<f32>) -> Self {
        Obs { image: None, state }
    }

    pub fn spec(&self) -> ObsSpec {
        ObsSpec {
            image: self.image.as_ref().map(|im| (im.c, im.h, im.w)),
            state_dim: self.state.len(),
        }
    }
}

/// Convert a tabletop observation into the RL observation layout:
/// the renderer's HWC f64 image narrowed to f32, proprioception scaled to
/// O(1).
pub fn from_tabletop(obs: &tabletop_sim::Observation) -> Obs {
    let rgb = &obs.rgb;
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data: Vec<f32> = rgb.data().iter().map(|&v| v as f32).collect();
    let p = obs.proprio;
    Obs {
        image: Some(ObsImage { c: 3, h, w, data }),
        state: vec![
            (p[0] / 0.25) as f32,
            (p[1] / 0.25) as f32,
            (p[2] / 0.30) as f32,
            p[3] as f32,
        ],
    }
}

/// Stack observations into network batches.
pub fn batch_obs(items: &[&Obs]) -> ObsBatch<f32> {
    assert!(!items.is_empty());
    let state_dim = items[0].state.len();
    let mut state = Array2::zeros((items.len(), state_dim));
    for (i, o) in items.iter().enumerate() {
        for (j, v) in o.state.iter().enumerate() {
            state[[i, j]] = *v;
        }
    }
    let image = items[0].image.as_ref().map(|first| {
        let len = first.data.len();
        let mut data = Array2::zeros((items.len(), len));
        for (i, o) in items.iter().enumerate() {
            let im = o.image.as_ref().expect("uniform observation layout");
            for (j, v) in im.data.iter().enumerate() {
                data[[i, j]] = *v;
            }
        }
        ImageBatch { data, c: first.c, h: first.h, w: first.w }
    });
    ObsBatch { image, state }
}
