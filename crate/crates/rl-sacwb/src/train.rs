use crate::augment::{augment_observation, AugmentConfig};
use crate::buffer::{ReplayBuffer, StoredObs, Transition};
use crate::nn::FlatParams;
use crate::obs::{batch_obs, Obs, ObsSpec};
use crate::sac::{ActorCriticParams, Batch, SacConfig};
use crate::schedule::GuidanceSchedule;
use crate::{Result, RlError};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Environment interface the trainer drives. Actions are normalized to
/// [-1, 1] per dimension.
pub trait GymEnv {
    fn obs_spec(&self) -> ObsSpec;
    fn action_dim(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Result<Obs>;
    /// Returns (next observation, reward, done, success).
    fn step(&mut self, action: &[f32]) -> Result<(Obs, f32, bool, bool)>;
    /// Baseline-controller action for the current state.
    fn baseline_action(&self) -> Result<Vec<f32>>;
}

/// Trainer settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub total_steps: usize,
    pub warmup_steps: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// SACwB guidance on/off (off = vanilla SAC).
    pub guidance: bool,
    pub augment: AugmentConfig,
    /// Env steps between deterministic evaluation probes (0 disables).
    pub eval_interval: usize,
    pub eval_episodes: usize,
    /// Stop early once a probe reaches this success rate.
    pub success_stop: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            total_steps: 30_000,
            warmup_steps: 1000,
            batch_size: 64,
            buffer_capacity: 100_000,
            guidance: true,
            augment: AugmentConfig::default(),
            eval_interval: 1000,
            eval_episodes: 8,
            success_stop: None,
            seed: 0,
        }
    }
}

/// Per-episode log row.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricsRow {
    pub episode: u64,
    pub env_steps: usize,
    pub episode_return: f64,
    pub success: bool,
    pub lambda: f64,
    pub critic_loss: f64,
    pub actor_loss: f64,
}

/// Evaluation probe result.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct EvalRow {
    pub env_step: usize,
    pub success_rate: f64,
}

pub struct TrainResult {
    pub metrics: Vec<MetricsRow>,
    pub evals: Vec<EvalRow>,
    /// First env-step count at which a probe reached `success_stop`.
    pub steps_to_success: Option<usize>,
    pub env_steps_run: usize,
}

/// Deterministic evaluation: greedy actor (tanh of the mean), no
/// augmentation, episodes seeded from `seed_base`.
pub fn evaluate_policy(
    params: &ActorCriticParams<f32>,
    env: &mut dyn GymEnv,
    episodes: usize,
    seed_base: u64,
) -> Result<f64> {
    let mut successes = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed_base);
    for ep in 0..episodes {
        let mut obs = env.reset(seed_base.wrapping_add(ep as u64))?;
        loop {
            let batch = batch_obs(&[&obs]);
            let (action, _) = params.sample_action(&batch, false, &mut rng);
            let action_vec: Vec<f32> = action.row(0).to_vec();
            let (next, _, done, success) = env.step(&action_vec)?;
            obs = next;
            if done {
                if success {
                    successes += 1;
                }
                break;
            }
        }
    }
    Ok(successes as f64 / episodes.max(1) as f64)
}

fn build_batch(
    buffer: &ReplayBuffer,
    indices: &[usize],
    action_dim: usize,
) -> Batch<f32> {
    let obs_s: Vec<Obs> = indices.iter().map(|&i| buffer.get(i).s.to_obs()).collect();
    let obs_n: Vec<Obs> = indices.iter().map(|&i| buffer.get(i).s_next.to_obs()).collect();
    let refs_s: Vec<&Obs> = obs_s.iter().collect();
    let refs_n: Vec<&Obs> = obs_n.iter().collect();
    let n = indices.len();
    let mut a = Array2::zeros((n, action_dim));
    let mut r = Array1::zeros(n);
    let mut done = Array1::zeros(n);
    let mut baseline_s = Array2::zeros((n, action_dim));
    let mut baseline_n = Array2::zeros((n, action_dim));
    for (row, &i) in indices.iter().enumerate() {
        let t = buffer.get(i);
        for j in 0..action_dim {
            a[[row, j]] = t.a[j];
            baseline_s[[row, j]] = t.baseline_s[j];
            baseline_n[[row, j]] = t.baseline_s_next[j];
        }
        r[row] = t.r;
        done[row] = if t.done { 1.0 } else { 0.0 };
    }
    Batch {
        s: batch_obs(&refs_s),
        a,
        r,
        s_next: batch_obs(&refs_n),
        done,
        baseline_s,
        baseline_s_next: baseline_n,
    }
}

/// Off-policy training loop: rollout with guided action selection, uniform
/// replay, and one critic + one actor + one polyak update per env step
/// after warmup. λ decays once per episode. Fully deterministic under a
/// fixed seed.
pub fn train(
    env: &mut dyn GymEnv,
    params: &mut ActorCriticParams<f32>,
    schedule: &mut GuidanceSchedule,
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut metrics = Vec::new();
    let mut evals = Vec::new();
    let mut steps_to_success = None;

    if cfg.total_steps == 0 {
        return Ok(TrainResult { metrics, evals, steps_to_success: None, env_steps_run: 0 });
    }

    let action_dim = params.action_dim;
    let mut episode: u64 = 0;
    let mut episode_return = 0.0f64;
    let mut episode_success = false;
    let mut last_critic_loss = 0.0f64;
    let mut last_actor_loss = 0.0f64;

    let episode_seed = |rng: &mut ChaCha8Rng| rng.random::<u64>();
    let mut obs = {
        let seed = episode_seed(&mut rng);
        let raw = env.reset(seed)?;
        augment_observation(&raw, &mut rng, &cfg.augment)
    };

    let mut step_count = 0usize;
    'outer: while step_count < cfg.total_steps {
        // Action selection.
        let baseline = env.baseline_action()?;
        let action: Vec<f32> = if step_count < cfg.warmup_steps {
            if cfg.guidance {
                baseline.clone()
            } else {
                (0..action_dim).map(|_| rng.random_range(-1.0..1.0)).collect()
            }
        } else if cfg.guidance {
            let obs_batch = batch_obs(&[&obs]);
            let mut brow = Array2::zeros((1, action_dim));
            for (j, v) in baseline.iter().enumerate() {
                brow[[0, j]] = *v;
            }
            let (chosen, _) = params.select_env_action(&obs_batch, &brow, schedule, &mut rng);
            chosen.row(0).to_vec()
        } else {
            let obs_batch = batch_obs(&[&obs]);
            let (a, _) = params.sample_action(&obs_batch, true, &mut rng);
            a.row(0).to_vec()
        };

        let (raw_next, reward, done, success) = env.step(&action)?;
        let next_obs = augment_observation(&raw_next, &mut rng, &cfg.augment);
        let baseline_next = if done { baseline.clone() } else { env.baseline_action()? };
        episode_return += reward as f64;
        episode_success |= success;

        buffer.push(Transition {
            s: StoredObs::from_obs(&obs),
            a: action,
            r: reward,
            s_next: StoredObs::from_obs(&next_obs),
            // Horizon truncation still bootstraps; success is terminal.
            done: success,
            baseline_s: baseline,
            baseline_s_next: baseline_next,
        });
        obs = next_obs;
        step_count += 1;

        // Updates.
        if step_count >= cfg.warmup_steps && buffer.len() >= cfg.batch_size {
            let indices = buffer.sample_indices(cfg.batch_size, &mut rng)?;
            let batch = build_batch(&buffer, &indices, action_dim);
            last_critic_loss =
                params.critic_update(&batch, schedule, cfg.guidance, &mut rng)?;
            let (actor_loss, _bc) =
                params.actor_update(&batch, schedule, cfg.guidance, &mut rng)?;
            last_actor_loss = actor_loss;
            params.polyak_update(params.config.tau);
        }

        // Evaluation probe and early stop.
        if cfg.eval_interval > 0 && step_count % cfg.eval_interval == 0 {
            let rate = evaluate_policy(params, env, cfg.eval_episodes, 9_000_000 + episode)?;
            evals.push(EvalRow { env_step: step_count, success_rate: rate });
            if let Some(target) = cfg.success_stop {
                if rate >= target && steps_to_success.is_none() {
                    steps_to_success = Some(step_count);
                    break 'outer;
                }
            }
            // The probe consumed the env; restart the training episode.
            let seed = episode_seed(&mut rng);
            let raw = env.reset(seed)?;
            obs = augment_observation(&raw, &mut rng, &cfg.augment);
            metrics.push(MetricsRow {
                episode,
                env_steps: step_count,
                episode_return,
                success: episode_success,
                lambda: schedule.lambda(),
                critic_loss: last_critic_loss,
                actor_loss: last_actor_loss,
            });
            episode += 1;
            episode_return = 0.0;
            episode_success = false;
            schedule.decay();
            continue;
        }

        if done {
            metrics.push(MetricsRow {
                episode,
                env_steps: step_count,
                episode_return,
                success: episode_success,
                lambda: schedule.lambda(),
                critic_loss: last_critic_loss,
                actor_loss: last_actor_loss,
            });
            episode += 1;
            episode_return = 0.0;
            episode_success = false;
            schedule.decay();
            let seed = episode_seed(&mut rng);
            let raw = env.reset(seed)?;
            obs = augment_observation(&raw, &mut rng, &cfg.augment);
        }
    }

    Ok(TrainResult { metrics, evals, steps_to_success, env_steps_run: step_count })
}

/// Write the per-episode metrics log as CSV.
pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[MetricsRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "episode,env_steps,return,success,lambda,critic_loss,actor_loss")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.episode,
            r.env_steps,
            r.episode_return,
            r.success as u8,
            r.lambda,
            r.critic_loss,
            r.actor_loss
        )?;
    }
    Ok(())
}

/// On-disk network checkpoint: flattened parameters plus layout metadata.
#[derive(Serialize, Deserialize)]
pub struct Checkpoint {
    pub obs_spec: ObsSpec,
    pub action_dim: usize,
    pub config: SacConfig,
    pub actor: Vec<f32>,
    pub critic1: Vec<f32>,
    pub critic2: Vec<f32>,
    pub target1: Vec<f32>,
    pub target2: Vec<f32>,
}

impl Checkpoint {
    pub fn from_params(p: &ActorCriticParams<f32>) -> Self {
        Checkpoint {
            obs_spec: p.obs_spec,
            action_dim: p.action_dim,
            config: p.config,
            actor: p.actor.to_flat(),
            critic1: p.critic1.to_flat(),
            critic2: p.critic2.to_flat(),
            target1: p.target1.to_flat(),
            target2: p.target2.to_flat(),
        }
    }

    pub fn into_params(self) -> Result<ActorCriticParams<f32>> {
        let mut params =
            ActorCriticParams::init(self.obs_spec, self.action_dim, self.config, 0);
        if params.actor.param_count() != self.actor.len() {
            return Err(RlError::Checkpoint(format!(
                "actor parameter count {} does not match architecture {}",
                self.actor.len(),
                params.actor.param_count()
            )));
        }
        params.actor.load_flat(&self.actor);
        params.critic1.load_flat(&self.critic1);
        params.critic2.load_flat(&self.critic2);
        params.target1.load_flat(&self.target1);
        params.target2.load_flat(&self.target2);
        Ok(params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}
