use crate::obs::{Obs, ObsSpec};
use crate::train::GymEnv;
use crate::Result;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BOX_HALF: f32 = 0.2;
const MAX_STEP: f32 = 0.02;
const SUCCESS_RADIUS: f32 = 0.02;
const HORIZON: u32 = 60;

/// Dense-reward 3D point-mass reach task: move a point to a random goal
/// inside a box with bounded position deltas. The standard off-policy
/// sanity benchmark.
pub struct PointMassEnv {
    pos: [f32; 3],
    goal: [f32; 3],
    steps: u32,
    done: bool,
}

impl PointMassEnv {
    pub fn new() -> Self {
        PointMassEnv { pos: [0.0; 3], goal: [0.1; 3], steps: 0, done: true }
    }

    fn distance(&self) -> f32 {
        let mut d2 = 0.0;
        for k in 0..3 {
            let d = self.pos[k] - self.goal[k];
            d2 += d * d;
        }
        d2.sqrt()
    }

    fn obs(&self) -> Obs {
        Obs::state_only(vec![
            self.pos[0] / BOX_HALF,
            self.pos[1] / BOX_HALF,
            self.pos[2] / BOX_HALF,
            self.goal[0] / BOX_HALF,
            self.goal[1] / BOX_HALF,
            self.goal[2] / BOX_HALF,
        ])
    }
}

impl Default for PointMassEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl GymEnv for PointMassEnv {
    fn obs_spec(&self) -> ObsSpec {
        ObsSpec { image: None, state_dim: 6 }
    }

    fn action_dim(&self) -> usize {
        3
    }

    fn reset(&mut self, seed: u64) -> Result<Obs> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..3 {
            self.pos[k] = rng.random_range(-BOX_HALF..BOX_HALF);
            self.goal[k] = rng.random_range(-BOX_HALF..BOX_HALF);
        }
        self.steps = 0;
        self.done = false;
        Ok(self.obs())
    }

    fn step(&mut self, action: &[f32]) -> Result<(Obs, f32, bool, bool)> {
        assert!(!self.done, "reset before stepping");
        for k in 0..3 {
            let delta = action[k].clamp(-1.0, 1.0) * MAX_STEP;
            self.pos[k] = (self.pos[k] + delta).clamp(-BOX_HALF, BOX_HALF);
        }
        self.steps += 1;
        let dist = self.distance();
        let success = dist < SUCCESS_RADIUS;
        // Dense negative distance, normalized by the box diagonal.
        let reward = -dist / (2.0 * BOX_HALF * 3f32.sqrt());
        let done = success || self.steps >= HORIZON;
        self.done = done;
        Ok((self.obs(), reward, done, success))
    }

    fn baseline_action(&self) -> Result<Vec<f32>> {
        Ok((0..3)
            .map(|k| ((self.goal[k] - self.pos[k]) / MAX_STEP).clamp(-0.9, 0.9))
            .collect())
    }
}
