use crate::obs::{Obs, ObsImage};
use crate::{Result, RlError};
use rand::Rng;
use std::sync::Arc;

/// One stored transition. Observation images are quantized to u8 and shared
/// between consecutive transitions (s' of step t is s of step t+1), keeping
/// the buffer's image cost near one frame per step.
///
/// Baseline-controller actions at both endpoints are recorded at collection
/// time so the guidance terms never need to reconstruct simulator state.
#[derive(Debug, Clone)]
pub struct Transition {
    pub s: StoredObs,
    pub a: Vec<f32>,
    pub r: f32,
    pub s_next: StoredObs,
    /// Terminal-for-bootstrapping (task success); horizon truncation is not
    /// a terminal and still bootstraps.
    pub done: bool,
    pub baseline_s: Vec<f32>,
    pub baseline_s_next: Vec<f32>,
}

/// Compact observation: u8 image plus full-precision state.
#[derive(Debug, Clone)]
pub struct StoredObs {
    image: Option<Arc<StoredImage>>,
    state: Vec<f32>,
}

#[derive(Debug)]
pub struct StoredImage {
    c: usize,
    h: usize,
    w: usize,
    data: Vec<u8>,
}

impl StoredObs {
    pub fn from_obs(obs: &Obs) -> Self {
        let image = obs.image.as_ref().map(|im| {
            Arc::new(StoredImage {
                c: im.c,
                h: im.h,
                w: im.w,
                data: im
                    .data
                    .iter()
                    .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                    .collect(),
            })
        });
        StoredObs { image, state: obs.state.clone() }
    }

    pub fn to_obs(&self) -> Obs {
        Obs {
            image: self.image.as_ref().map(|im| ObsImage {
                c: im.c,
                h: im.h,
                w: im.w,
                data: im.data.iter().map(|&v| v as f32 / 255.0).collect(),
            }),
            state: self.state.clone(),
        }
    }
}

/// Uniform-sampling ring buffer.
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    next: usize,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer { items: Vec::new(), capacity, next: 0, inserted: 0 }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
        self.inserted += 1;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    /// Uniform sample with replacement.
    pub fn sample_indices(&self, batch: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
        if self.items.len() < batch {
            return Err(RlError::BufferTooSmall { have: self.items.len(), need: batch });
        }
        Ok((0..batch).map(|_| rng.random_range(0..self.items.len())).collect())
    }
}
