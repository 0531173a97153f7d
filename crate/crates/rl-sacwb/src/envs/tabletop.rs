use crate::obs::{from_tabletop, Obs, ObsSpec};
use crate::train::GymEnv;
use crate::Result;
use geom_core::Vec3;
use tabletop_sim::{baseline_controller, Action, RendererKind, TabletopEnv};

/// Adapter exposing the tabletop environment through the trainer interface:
/// normalized [-1, 1] actions, CHW f32 observations from the configured
/// renderer.
pub struct TabletopGymEnv {
    env: TabletopEnv,
    renderer: RendererKind,
}

impl TabletopGymEnv {
    pub fn new(env: TabletopEnv, renderer: RendererKind) -> Self {
        TabletopGymEnv { env, renderer }
    }

    pub fn inner(&self) -> &TabletopEnv {
        &self.env
    }

    pub fn renderer(&self) -> RendererKind {
        self.renderer
    }

    pub fn set_renderer(&mut self, renderer: RendererKind) {
        self.renderer = renderer;
    }

    fn denormalize(&self, action: &[f32]) -> Action {
        let cap = self.env.config().max_step;
        Action {
            delta: Vec3::new(
                action[0].clamp(-1.0, 1.0) as f64 * cap,
                action[1].clamp(-1.0, 1.0) as f64 * cap,
                action[2].clamp(-1.0, 1.0) as f64 * cap,
            ),
            gripper: action[3].clamp(-1.0, 1.0) as f64,
        }
    }

    fn observe(&self) -> Result<Obs> {
        let obs = self.env.observe(self.env.state(), self.renderer)?;
        Ok(from_tabletop(&obs))
    }
}

impl GymEnv for TabletopGymEnv {
    fn obs_spec(&self) -> ObsSpec {
        let side = self.env.config().image_size as usize;
        ObsSpec { image: Some((3, side, side)), state_dim: 4 }
    }

    fn action_dim(&self) -> usize {
        4
    }

    fn reset(&mut self, seed: u64) -> Result<Obs> {
        self.env.reset(seed)?;
        self.observe()
    }

    fn step(&mut self, action: &[f32]) -> Result<(Obs, f32, bool, bool)> {
        let act = self.denormalize(action);
        let (_, result) = self.env.step(&act)?;
        let obs = self.observe()?;
        Ok((obs, result.reward as f32, result.done, result.success))
    }

    fn baseline_action(&self) -> Result<Vec<f32>> {
        let act = baseline_controller(&self.env, self.env.state())?;
        let cap = self.env.config().max_step;
        Ok(vec![
            (act.delta.x / cap) as f32,
            (act.delta.y / cap) as f32,
            (act.delta.z / cap) as f32,
            act.gripper as f32,
        ])
    }
}
