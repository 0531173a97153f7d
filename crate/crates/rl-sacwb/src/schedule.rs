use serde::{Deserialize, Serialize};

/// How the guidance factor decays toward zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecayMode {
    /// λ ← λ·rate per episode.
    Exponential { rate: f64 },
    /// Linear ramp to zero at `end_episode`.
    Linear { end_episode: u64 },
}

/// The guidance mixing factor λ ∈ [0, 1], monotonically non-increasing.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GuidanceSchedule {
    pub lambda0: f64,
    pub mode: DecayMode,
    lambda: f64,
    episode: u64,
}

impl GuidanceSchedule {
    pub fn new(lambda0: f64, mode: DecayMode) -> Self {
        assert!((0.0..=1.0).contains(&lambda0));
        GuidanceSchedule { lambda0, mode, lambda: lambda0, episode: 0 }
    }

    /// Exponential decay calibrated so that λ < target at `episodes` (the
    /// default calibration point is half the training budget).
    pub fn exponential_reaching(lambda0: f64, target: f64, episodes: u64) -> Self {
        assert!(target > 0.0 && target < lambda0.max(1e-12));
        let rate = (target / lambda0).powf(1.0 / episodes.max(1) as f64);
        Self::new(lambda0, DecayMode::Exponential { rate })
    }

    /// Schedule pinned at zero: plain SAC.
    pub fn off() -> Self {
        GuidanceSchedule {
            lambda0: 0.0,
            mode: DecayMode::Exponential { rate: 1.0 },
            lambda: 0.0,
            episode: 0,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    /// Advance one episode.
    pub fn decay(&mut self) {
        self.episode += 1;
        self.lambda = match self.mode {
            DecayMode::Exponential { rate } => self.lambda * rate.clamp(0.0, 1.0),
            DecayMode::Linear { end_episode } => {
                if self.episode >= end_episode {
                    0.0
                } else {
                    self.lambda0 * (1.0 - self.episode as f64 / end_episode as f64)
                }
            }
        };
    }
}
