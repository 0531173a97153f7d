use crate::nn::{
    c, ActorNet, ActorOut, CriticNet, FlatParams, Float, ObsBatch, LOG_STD_MAX, LOG_STD_MIN,
};
use crate::obs::ObsSpec;
use crate::schedule::GuidanceSchedule;
use crate::{Result, RlError};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

const TANH_EPS: f64 = 1e-6;

/// Hyperparameters of the actor-critic learner.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SacConfig {
    pub gamma: f64,
    pub tau: f64,
    /// Fixed entropy temperature.
    pub alpha: f64,
    pub lr: f64,
    /// Behavior-clone loss weight.
    pub beta_bc: f64,
    pub hidden: usize,
}

impl Default for SacConfig {
    fn default() -> Self {
        SacConfig { gamma: 0.99, tau: 0.005, alpha: 0.2, lr: 3e-4, beta_bc: 1.0, hidden: 128 }
    }
}

/// Actor, twin critics and their polyak-averaged targets.
pub struct ActorCriticParams<F: Float> {
    pub actor: ActorNet<F>,
    pub critic1: CriticNet<F>,
    pub critic2: CriticNet<F>,
    pub target1: CriticNet<F>,
    pub target2: CriticNet<F>,
    pub config: SacConfig,
    pub obs_spec: ObsSpec,
    pub action_dim: usize,
    opt_actor: Adam<F>,
    opt_critic1: Adam<F>,
    opt_critic2: Adam<F>,
}

/// Adam over one flattened parameter vector.
struct Adam<F> {
    m: Vec<F>,
    v: Vec<F>,
    step: u64,
}

impl<F: Float> Adam<F> {
    fn new(len: usize) -> Self {
        Adam { m: vec![F::zero(); len], v: vec![F::zero(); len], step: 0 }
    }

    fn apply(&mut self, params: &mut [F], grads: &[F], lr: f64) {
        let (b1, b2, eps) = (c::<F>(0.9), c::<F>(0.999), c::<F>(1e-8));
        self.step += 1;
        let bc1 = F::one() - b1.powi(self.step as i32);
        let bc2 = F::one() - b2.powi(self.step as i32);
        let lr = c::<F>(lr);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = b1 * self.m[i] + (F::one() - b1) * g;
            self.v[i] = b2 * self.v[i] + (F::one() - b2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] = params[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// A training batch in network form, including baseline-controller actions
/// at both ends of each transition.
pub struct Batch<F: Float> {
    pub s: ObsBatch<F>,
    pub a: Array2<F>,
    pub r: Array1<F>,
    pub s_next: ObsBatch<F>,
    pub done: Array1<F>,
    pub baseline_s: Array2<F>,
    pub baseline_s_next: Array2<F>,
}

impl<F: Float> Batch<F> {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// Losses returned by one training step.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepLosses {
    pub critic: f64,
    pub actor: f64,
    pub bc: f64,
}

/// How a rollout action was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionKind {
    /// The λ branch: baseline executed unconditionally.
    LambdaBaseline,
    /// The 1−λ branch picked the baseline on its higher min-Q.
    QBaseline,
    /// The 1−λ branch picked the actor sample.
    Actor,
}

impl<F: Float> ActorCriticParams<F> {
    pub fn init(obs_spec: ObsSpec, action_dim: usize, config: SacConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor =
            ActorNet::init(obs_spec.image, obs_spec.state_dim, action_dim, config.hidden, &mut rng);
        let critic1 =
            CriticNet::init(obs_spec.image, obs_spec.state_dim, action_dim, config.hidden, &mut rng);
        let critic2 =
            CriticNet::init(obs_spec.image, obs_spec.state_dim, action_dim, config.hidden, &mut rng);
        let target1 = critic1.clone();
        let target2 = critic2.clone();
        let na = actor.param_count();
        let nc1 = critic1.param_count();
        let nc2 = critic2.param_count();
        ActorCriticParams {
            actor,
            critic1,
            critic2,
            target1,
            target2,
            config,
            obs_spec,
            action_dim,
            opt_actor: Adam::new(na),
            opt_critic1: Adam::new(nc1),
            opt_critic2: Adam::new(nc2),
        }
    }

    /// Squashed-Gaussian action. Stochastic draws use the reparameterization
    /// a = tanh(μ + σ⊙ε); deterministic returns tanh(μ). The log-probability
    /// includes the tanh change-of-variables correction.
    pub fn sample_action(
        &self,
        obs: &ObsBatch<F>,
        stochastic: bool,
        rng: &mut impl Rng,
    ) -> (Array2<F>, Array1<F>) {
        let (out, _) = self.actor.forward(obs);
        let (action, log_prob, _) = sample_from_heads(&out, stochastic, rng);
        (action, log_prob)
    }

    /// Eq. 4 loss of both critics against the Eq. 5 target (or the widened
    /// Eq. 8 target under guidance), with parameter gradients. Pure in the
    /// parameters; `rng` drives the next-action sample.
    pub fn critic_loss_and_grads(
        &self,
        batch: &Batch<F>,
        guidance: bool,
        rng: &mut impl Rng,
    ) -> Result<(f64, crate::nn::CriticGrad<F>, crate::nn::CriticGrad<F>)> {
        if batch.is_empty() {
            return Err(RlError::EmptyBatch);
        }
        let y = self.compute_target(batch, guidance, rng);
        let nb = c::<F>(batch.len() as f64);
        let mut critic_loss = 0.0f64;
        let mut grads = Vec::with_capacity(2);
        for critic in [&self.critic1, &self.critic2] {
            let enc = critic.encode(&batch.s);
            let (q, head) = critic.head(&enc, &batch.a);
            let mut d_q = Array1::zeros(batch.len());
            let mut mse = F::zero();
            for i in 0..batch.len() {
                let err = q[i] - y[i];
                mse = mse + err * err;
                d_q[i] = c::<F>(2.0) * err / nb;
            }
            critic_loss += (mse / nb).to_f64().unwrap();
            grads.push(critic.backward(&enc, &head, &d_q));
        }
        let g2 = grads.pop().unwrap();
        let g1 = grads.pop().unwrap();
        Ok((critic_loss, g1, g2))
    }

    /// One critic gradient step. Returns the summed per-critic mean squared
    /// errors.
    pub fn critic_update(
        &mut self,
        batch: &Batch<F>,
        schedule: &GuidanceSchedule,
        guidance: bool,
        rng: &mut impl Rng,
    ) -> Result<f64> {
        let _ = schedule;
        let (loss, g1, g2) = self.critic_loss_and_grads(batch, guidance, rng)?;
        let (flat_g, mut flat_p) = (g1.to_flat(), self.critic1.to_flat());
        self.opt_critic1.apply(&mut flat_p, &flat_g, self.config.lr);
        self.critic1.load_flat(&flat_p);
        let (flat_g, mut flat_p) = (g2.to_flat(), self.critic2.to_flat());
        self.opt_critic2.apply(&mut flat_p, &flat_g, self.config.lr);
        self.critic2.load_flat(&flat_p);
        Ok(loss)
    }

    /// Bootstrap target: Eq. 5, or the max of the actor and baseline soft
    /// values (Eq. 8) under guidance. Terminal transitions use the bare
    /// reward.
    pub fn compute_target(
        &self,
        batch: &Batch<F>,
        guidance: bool,
        rng: &mut impl Rng,
    ) -> Array1<F> {
        let (out_next, _) = self.actor.forward(&batch.s_next);
        let (a_next, log_prob_next, _) = sample_from_heads(&out_next, true, rng);

        let enc1 = self.target1.encode(&batch.s_next);
        let enc2 = self.target2.encode(&batch.s_next);
        let (q1, _) = self.target1.head(&enc1, &a_next);
        let (q2, _) = self.target2.head(&enc2, &a_next);

        let alpha = c::<F>(self.config.alpha);
        let gamma = c::<F>(self.config.gamma);

        let soft_baseline: Option<(Array1<F>, Array1<F>)> = if guidance {
            let (qb1, _) = self.target1.head(&enc1, &batch.baseline_s_next);
            let (qb2, _) = self.target2.head(&enc2, &batch.baseline_s_next);
            let log_prob_b = log_prob_of_action(&out_next, &batch.baseline_s_next);
            let mut qb = Array1::zeros(batch.len());
            for i in 0..batch.len() {
                qb[i] = if qb1[i] < qb2[i] { qb1[i] } else { qb2[i] };
            }
            Some((qb, log_prob_b))
        } else {
            None
        };

        let mut y = Array1::zeros(batch.len());
        for i in 0..batch.len() {
            let q_min = if q1[i] < q2[i] { q1[i] } else { q2[i] };
            let mut soft_v = q_min - alpha * log_prob_next[i];
            if let Some((qb, lpb)) = &soft_baseline {
                let soft_b = qb[i] - alpha * lpb[i];
                if soft_b > soft_v {
                    soft_v = soft_b;
                }
            }
            let not_done = F::one() - batch.done[i];
            y[i] = batch.r[i] + gamma * not_done * soft_v;
        }
        y
    }

    /// Reparameterized soft-Q actor objective (Eq. 6) plus the per-sample
    /// behavior-clone term (Eq. 9 with probability λ, Eq. 10 otherwise),
    /// with parameter gradients. Pure in the parameters.
    pub fn actor_loss_and_grads(
        &self,
        batch: &Batch<F>,
        schedule: &GuidanceSchedule,
        guidance: bool,
        rng: &mut impl Rng,
    ) -> Result<(f64, f64, crate::nn::ActorGrad<F>)> {
        if batch.is_empty() {
            return Err(RlError::EmptyBatch);
        }
        let n = batch.len();
        let nb = c::<F>(n as f64);
        let alpha = c::<F>(self.config.alpha);

        let (out, actor_cache) = self.actor.forward(&batch.s);
        let (a_tilde, log_prob, eps) = sample_from_heads(&out, true, rng);

        // Q(s, ã) on both live critics; gradient flows through the argmin.
        let enc1 = self.critic1.encode(&batch.s);
        let enc2 = self.critic2.encode(&batch.s);
        let (q1, head1) = self.critic1.head(&enc1, &a_tilde);
        let (q2, head2) = self.critic2.head(&enc2, &a_tilde);

        let mut base_loss = F::zero();
        let mut d_q1 = Array1::zeros(n);
        let mut d_q2 = Array1::zeros(n);
        for i in 0..n {
            let (q_min, use_first) = if q1[i] <= q2[i] { (q1[i], true) } else { (q2[i], false) };
            base_loss = base_loss + alpha * log_prob[i] - q_min;
            let d = -F::one() / nb;
            if use_first {
                d_q1[i] = d;
            } else {
                d_q2[i] = d;
            }
        }
        base_loss = base_loss / nb;

        // dQ/dã through the critic heads (encoder untouched by the action).
        let d_a_from_q1 = self.critic1.action_gradient(&head1, &d_q1);
        let d_a_from_q2 = self.critic2.action_gradient(&head2, &d_q2);

        // Behavior-clone branch per sample.
        let lambda = schedule.lambda();
        let beta_bc = c::<F>(self.config.beta_bc);
        let mean_action = out.mean.mapv(|m| m.tanh());
        let mut bc_target: Array2<F> = Array2::zeros((n, self.action_dim));
        let mut bc_active = vec![false; n];
        if guidance && self.config.beta_bc > 0.0 {
            // Eq. 10 candidates need target-critic values at both actions.
            let mut eq10_rows: Vec<usize> = Vec::new();
            for i in 0..n {
                if rng.random_range(0.0..1.0) < lambda {
                    bc_active[i] = true;
                    for j in 0..self.action_dim {
                        bc_target[[i, j]] = batch.baseline_s[[i, j]];
                    }
                } else {
                    eq10_rows.push(i);
                }
            }
            if !eq10_rows.is_empty() {
                let tenc1 = self.target1.encode(&batch.s);
                let tenc2 = self.target2.encode(&batch.s);
                let (qm1, _) = self.target1.head(&tenc1, &mean_action);
                let (qm2, _) = self.target2.head(&tenc2, &mean_action);
                let (qb1, _) = self.target1.head(&tenc1, &batch.baseline_s);
                let (qb2, _) = self.target2.head(&tenc2, &batch.baseline_s);
                for &i in &eq10_rows {
                    let q_self = if qm1[i] < qm2[i] { qm1[i] } else { qm2[i] };
                    let q_base = if qb1[i] < qb2[i] { qb1[i] } else { qb2[i] };
                    if q_base > q_self {
                        bc_active[i] = true;
                        for j in 0..self.action_dim {
                            bc_target[[i, j]] = batch.baseline_s[[i, j]];
                        }
                    }
                    // Self-selection leaves the term at zero.
                }
            }
        }

        // Assemble gradients on the actor heads.
        let mut d_mean: Array2<F> = Array2::zeros(out.mean.raw_dim());
        let mut d_log_std: Array2<F> = Array2::zeros(out.log_std.raw_dim());
        let mut bc_loss = F::zero();
        let two = c::<F>(2.0);
        let eps_min = c::<F>(TANH_EPS);
        for i in 0..n {
            for j in 0..self.action_dim {
                let a = a_tilde[[i, j]];
                let one_m_a2 = F::one() - a * a;
                let sigma_eps = out.log_std[[i, j]].exp() * eps[[i, j]];
                // d logπ / du with u = μ + σ·ε (the tanh correction term).
                let dlp_du = two * a * one_m_a2 / (one_m_a2 + eps_min);
                let d_q_a = d_a_from_q1[[i, j]] + d_a_from_q2[[i, j]];
                // base: (α/nb)·dlogπ − dQ path (d_q_a already carries −1/nb)
                let d_u = alpha * dlp_du / nb + d_q_a * one_m_a2;
                d_mean[[i, j]] = d_mean[[i, j]] + d_u;
                d_log_std[[i, j]] = d_log_std[[i, j]]
                    + d_u * sigma_eps
                    + alpha * (-F::one()) / nb;

                if bc_active[i] {
                    let m = mean_action[[i, j]];
                    let diff = m - bc_target[[i, j]];
                    bc_loss = bc_loss + diff * diff;
                    let d_m = beta_bc * two * diff * (F::one() - m * m) / nb;
                    d_mean[[i, j]] = d_mean[[i, j]] + d_m;
                }
            }
        }
        bc_loss = bc_loss / nb;

        let grads = self.actor.backward(&actor_cache, &d_mean, &d_log_std);
        Ok((
            base_loss.to_f64().unwrap() + self.config.beta_bc * bc_loss.to_f64().unwrap(),
            bc_loss.to_f64().unwrap(),
            grads,
        ))
    }

    /// One actor gradient step. Returns (actor loss, bc loss).
    pub fn actor_update(
        &mut self,
        batch: &Batch<F>,
        schedule: &GuidanceSchedule,
        guidance: bool,
        rng: &mut impl Rng,
    ) -> Result<(f64, f64)> {
        let (loss, bc, grads) = self.actor_loss_and_grads(batch, schedule, guidance, rng)?;
        let (flat_g, mut flat_p) = (grads.to_flat(), self.actor.to_flat());
        self.opt_actor.apply(&mut flat_p, &flat_g, self.config.lr);
        self.actor.load_flat(&flat_p);
        Ok((loss, bc))
    }

    /// Polyak-average the live critics into the targets: φ̄ ← (1−τ)φ̄ + τφ.
    pub fn polyak_update(&mut self, tau: f64) {
        polyak(&self.critic1, &mut self.target1, tau);
        polyak(&self.critic2, &mut self.target2, tau);
    }

    /// Rollout action selection: with probability λ the baseline action,
    /// otherwise the better (by live min-Q) of an actor sample and the
    /// baseline.
    pub fn select_env_action(
        &self,
        obs: &ObsBatch<F>,
        baseline: &Array2<F>,
        schedule: &GuidanceSchedule,
        rng: &mut impl Rng,
    ) -> (Array2<F>, SelectionKind) {
        if rng.random_range(0.0..1.0) < schedule.lambda() {
            return (baseline.clone(), SelectionKind::LambdaBaseline);
        }
        let (actor_action, _) = self.sample_action(obs, true, rng);
        let enc1 = self.critic1.encode(obs);
        let enc2 = self.critic2.encode(obs);
        let (qa1, _) = self.critic1.head(&enc1, &actor_action);
        let (qa2, _) = self.critic2.head(&enc2, &actor_action);
        let (qb1, _) = self.critic1.head(&enc1, baseline);
        let (qb2, _) = self.critic2.head(&enc2, baseline);
        let q_actor = if qa1[0] < qa2[0] { qa1[0] } else { qa2[0] };
        let q_base = if qb1[0] < qb2[0] { qb1[0] } else { qb2[0] };
        if q_base > q_actor {
            (baseline.clone(), SelectionKind::QBaseline)
        } else {
            (actor_action, SelectionKind::Actor)
        }
    }
}

fn polyak<F: Float>(live: &CriticNet<F>, target: &mut CriticNet<F>, tau: f64) {
    let tau = c::<F>(tau);
    let live_flat = live.to_flat();
    let mut target_flat = target.to_flat();
    for (t, l) in target_flat.iter_mut().zip(&live_flat) {
        *t = (F::one() - tau) * *t + tau * *l;
    }
    target.load_flat(&target_flat);
}

/// Draw (action, log-prob, ε) from actor head outputs. Deterministic mode
/// uses ε = 0.
pub fn sample_from_heads<F: Float>(
    out: &ActorOut<F>,
    stochastic: bool,
    rng: &mut impl Rng,
) -> (Array2<F>, Array1<F>, Array2<F>) {
    let (n, dim) = out.mean.dim();
    let mut eps: Array2<F> = Array2::zeros((n, dim));
    if stochastic {
        for v in eps.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v = c(z);
        }
    }
    let mut action = Array2::zeros((n, dim));
    let mut log_prob = Array1::zeros(n);
    let half_ln_2pi = c::<F>(0.5 * (2.0 * std::f64::consts::PI).ln());
    let eps_min = c::<F>(TANH_EPS);
    for i in 0..n {
        let mut lp = F::zero();
        for j in 0..dim {
            let sigma = out.log_std[[i, j]].exp();
            let u = out.mean[[i, j]] + sigma * eps[[i, j]];
            let a = u.tanh();
            action[[i, j]] = a;
            lp = lp
                - c::<F>(0.5) * eps[[i, j]] * eps[[i, j]]
                - out.log_std[[i, j]]
                - half_ln_2pi
                - (F::one() - a * a + eps_min).ln();
        }
        log_prob[i] = lp;
    }
    (action, log_prob, eps)
}

/// Log-density of given (already squashed) actions under the actor heads.
pub fn log_prob_of_action<F: Float>(out: &ActorOut<F>, action: &Array2<F>) -> Array1<F> {
    let (n, dim) = out.mean.dim();
    let mut log_prob = Array1::zeros(n);
    let half_ln_2pi = c::<F>(0.5 * (2.0 * std::f64::consts::PI).ln());
    let eps_min = c::<F>(TANH_EPS);
    let a_lim = c::<F>(1.0 - 1e-7);
    for i in 0..n {
        let mut lp = F::zero();
        for j in 0..dim {
            let a = num_traits::clamp(action[[i, j]], -a_lim, a_lim);
            let u = num_traits::Float::atanh(a);
            let sigma = out.log_std[[i, j]].exp();
            let z = (u - out.mean[[i, j]]) / sigma;
            lp = lp
                - c::<F>(0.5) * z * z
                - out.log_std[[i, j]]
                - half_ln_2pi
                - (F::one() - a * a + eps_min).ln();
        }
        log_prob[i] = lp;
    }
    log_prob
}

/// Clamp helper for building actor outputs in tests.
pub fn clamp_log_std<F: Float>(x: F) -> F {
    num_traits::clamp(x, c::<F>(LOG_STD_MIN), c::<F>(LOG_STD_MAX))
}
