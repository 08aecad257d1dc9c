//! PPO training against the pass-scheduling environment.
//!
//! An episode starts from a circuit, each step applies one registered
//! pass, and the reward is the fraction of the episode's initial
//! two-qubit gates removed by that step, minus a flat penalty for every
//! action other than DoNothing.  Episodes end when DoNothing is chosen,
//! the two-qubit count reaches zero, or `no_improve_limit` consecutive
//! steps fail to reduce it.  Training steps `n_envs` environments in
//! lockstep, scores actions by softmax sampling, and updates the network
//! with clipped-surrogate PPO over GAE advantages.  Deployment follows
//! the argmax policy and reports penalty-free rewards, whose sum
//! telescopes to (n0 - n_final)/n0.

use crate::error::AgentError;
use crate::graph::{batch, encode, GraphObservation};
use crate::nn::{log_softmax, AdamState, ArchConfig, PolicyParams};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rlpass_core::format::CircuitRecord;
use rlpass_core::gen::substream;
use rlpass_core::passes::{apply_pass, Action};
use rlpass_core::rebase::rebase;
use rlpass_core::Circuit;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// PPO and environment hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PpoConfig {
    pub lr: f64,
    /// Environment steps collected per environment between updates.
    pub n_steps: usize,
    /// Minibatch size within each update epoch.
    pub batch_size: usize,
    pub epochs: usize,
    pub gamma: f64,
    pub lam: f64,
    pub clip: f64,
    pub entropy_coef: f64,
    pub vf_coef: f64,
    pub grad_clip: f64,
    pub action_penalty: f64,
    pub n_envs: usize,
    /// Total environment step budget for training.
    pub max_steps: usize,
    /// Episode ends after this many consecutive non-improving steps.
    pub no_improve_limit: usize,
    /// Updates between validation evaluations.
    pub eval_interval: usize,
    /// Evaluations without improvement before early stopping.
    pub patience: usize,
    /// Number of held-out circuits scored at each evaluation.
    pub validation_size: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            lr: 3.36e-4,
            n_steps: 128,
            batch_size: 64,
            epochs: 3,
            gamma: 0.952,
            lam: 0.938,
            clip: 0.2,
            entropy_coef: 0.01,
            vf_coef: 0.5,
            grad_clip: 0.5,
            action_penalty: 0.013,
            n_envs: 8,
            max_steps: 300_000,
            no_improve_limit: 3,
            eval_interval: 5,
            patience: 10,
            validation_size: 256,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let positive = [
            ("lr", self.lr),
            ("clip", self.clip),
            ("grad_clip", self.grad_clip),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(AgentError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("gamma", self.gamma), ("lam", self.lam)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(AgentError::Config(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        let counts = [
            ("n_steps", self.n_steps),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("n_envs", self.n_envs),
            ("max_steps", self.max_steps),
            ("no_improve_limit", self.no_improve_limit),
            ("eval_interval", self.eval_interval),
            ("patience", self.patience),
            ("validation_size", self.validation_size),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(AgentError::Config(format!("{name} must be positive")));
            }
        }
        if self.action_penalty < 0.0 {
            return Err(AgentError::Config("action_penalty must be non-negative".into()));
        }
        Ok(())
    }
}

/// Fraction of the episode's initial two-qubit gates removed by one step.
pub fn fraction_removed(n_prev: usize, n_next: usize, n0: usize) -> f64 {
    if n0 == 0 {
        0.0
    } else {
        (n_prev as f64 - n_next as f64) / n0 as f64
    }
}

/// Learning reward: gate-count fraction minus the flat action penalty.
/// DoNothing is worth exactly zero.
pub fn compute_reward(
    n_prev: usize,
    n_next: usize,
    n0: usize,
    action: Action,
    penalty: f64,
) -> f64 {
    if action == Action::DoNothing {
        return 0.0;
    }
    fraction_removed(n_prev, n_next, n0) - penalty
}

/// One optimisation episode in progress.
///
/// `steps_since_improvement` counts every step that failed to lower the
/// two-qubit count; it is a budget for the whole episode rather than a
/// consecutive-stall counter, which bounds episode length by
/// `no_improve_limit` plus the number of strict improvements.
#[derive(Debug, Clone)]
pub struct EnvState {
    pub circuit: Circuit,
    pub n0: usize,
    pub steps_taken: usize,
    pub steps_since_improvement: usize,
    pub last_pass: Option<Action>,
    pub done: bool,
}

impl EnvState {
    /// Start an episode; the circuit is normalised to the native gate set
    /// and the initial two-qubit count is frozen as the reward scale.
    pub fn reset(circuit: &Circuit) -> EnvState {
        let circuit = rebase(circuit);
        let n0 = circuit.two_qubit_count();
        EnvState {
            n0,
            done: n0 == 0,
            circuit,
            steps_taken: 0,
            steps_since_improvement: 0,
            last_pass: None,
        }
    }

    pub fn observe<S: Scalar>(&self) -> Result<GraphObservation<S>, AgentError> {
        encode(&self.circuit, self.last_pass)
    }
}

/// Apply one pass to a live episode.
///
/// Returns the next observation, the learning reward, and the done flag.
pub fn env_step<S: Scalar>(
    state: &mut EnvState,
    action: Action,
    config: &PpoConfig,
) -> Result<(GraphObservation<S>, f64, bool), AgentError> {
    if state.done {
        return Err(AgentError::EpisodeFinished);
    }
    let n_prev = state.circuit.two_qubit_count();
    let result = apply_pass(action, &state.circuit);
    let n_next = result.circuit.two_qubit_count();
    let reward = compute_reward(n_prev, n_next, state.n0, action, config.action_penalty);
    state.circuit = result.circuit;
    state.steps_taken += 1;
    if n_next >= n_prev {
        state.steps_since_improvement += 1;
    }
    state.last_pass = Some(action);
    state.done = action == Action::DoNothing
        || n_next == 0
        || state.steps_since_improvement >= config.no_improve_limit;
    let obs = state.observe()?;
    Ok((obs, reward, state.done))
}

/// Generalised advantage estimation over one trajectory.
///
/// `values` must hold one entry per reward plus a trailing bootstrap value
/// for the state after the last step; the bootstrap is masked out when the
/// trajectory ends in a terminal step.  Returns (advantages, returns)
/// where returns = advantages + values.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lam: f64,
) -> (Vec<f64>, Vec<f64>) {
    let t = rewards.len();
    assert_eq!(values.len(), t + 1, "values must include a bootstrap entry");
    assert_eq!(dones.len(), t, "dones must align with rewards");
    let mut advantages = vec![0.0; t];
    let mut carry = 0.0;
    for k in (0..t).rev() {
        let cont = if dones[k] { 0.0 } else { 1.0 };
        let delta = rewards[k] + gamma * cont * values[k + 1] - values[k];
        carry = delta + gamma * lam * cont * carry;
        advantages[k] = carry;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

/// Fixed-capacity on-policy storage, step-major: index = step * n_envs + env.
pub struct RolloutBuffer {
    pub n_envs: usize,
    pub n_steps: usize,
    pub obs: Vec<GraphObservation<f32>>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// Value estimate of each environment's state after the final step.
    pub bootstrap: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(n_envs: usize, n_steps: usize) -> Self {
        let cap = n_envs * n_steps;
        RolloutBuffer {
            n_envs,
            n_steps,
            obs: Vec::with_capacity(cap),
            actions: Vec::with_capacity(cap),
            log_probs: Vec::with_capacity(cap),
            values: Vec::with_capacity(cap),
            rewards: Vec::with_capacity(cap),
            dones: Vec::with_capacity(cap),
            bootstrap: Vec::new(),
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.n_envs * self.n_steps
    }

    pub fn is_full(&self) -> bool {
        self.rewards.len() == self.capacity() && self.bootstrap.len() == self.n_envs
    }

    /// Fill `advantages`/`returns` per environment trajectory.
    pub fn compute_gae(&mut self, gamma: f64, lam: f64) {
        assert!(self.is_full(), "rollout buffer must be full before GAE");
        self.advantages = vec![0.0; self.capacity()];
        self.returns = vec![0.0; self.capacity()];
        for e in 0..self.n_envs {
            let idx = |s: usize| s * self.n_envs + e;
            let rewards: Vec<f64> = (0..self.n_steps).map(|s| self.rewards[idx(s)]).collect();
            let mut values: Vec<f64> =
                (0..self.n_steps).map(|s| self.values[idx(s)]).collect();
            values.push(self.bootstrap[e]);
            let dones: Vec<bool> = (0..self.n_steps).map(|s| self.dones[idx(s)]).collect();
            let (adv, ret) = gae(&rewards, &values, &dones, gamma, lam);
            for s in 0..self.n_steps {
                self.advantages[idx(s)] = adv[s];
                self.returns[idx(s)] = ret[s];
            }
        }
    }
}

/// Loss components of one update, averaged over minibatches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub total_loss: f64,
}

/// Minimum of the two PPO surrogates for a single sample, and whether the
/// gradient flows through the probability ratio.
fn clipped_objective(ratio: f64, advantage: f64, clip: f64) -> (f64, bool) {
    let s1 = ratio * advantage;
    let s2 = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    if s1 <= s2 {
        (s1, true)
    } else {
        // The clamped surrogate is selected only when the ratio sits
        // outside the clip interval, where its derivative vanishes.
        (s2, false)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LossBreakdown {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
}

/// PPO loss over one minibatch plus its parameter gradients.
///
/// `advantages` are used as given; normalisation happens in the caller.
pub fn ppo_loss_and_grads<S: Scalar>(
    params: &PolicyParams<S>,
    graphs: &crate::graph::GraphBatch<S>,
    actions: &[usize],
    old_log_probs: &[f64],
    advantages: &[f64],
    returns: &[f64],
    config: &PpoConfig,
) -> (LossBreakdown, PolicyParams<S>) {
    let b = actions.len();
    assert!(b > 0 && graphs.n_graphs == b);
    let (out, cache) = params.forward_cached(graphs);
    let lsm = log_softmax(&out.logits);
    let n_actions = lsm.ncols();
    let inv_b = 1.0 / b as f64;

    let mut dlogits = Array2::<S>::zeros(out.logits.raw_dim());
    let mut dvalues = Array1::<S>::zeros(b);
    let (mut policy_sum, mut value_sum, mut entropy_sum) = (0.0, 0.0, 0.0);
    for i in 0..b {
        let a = actions[i];
        let lp_row: Vec<f64> = (0..n_actions).map(|k| lsm[[i, k]].into_f64()).collect();
        let p_row: Vec<f64> = lp_row.iter().map(|x| x.exp()).collect();
        let ratio = (lp_row[a] - old_log_probs[i]).exp();
        let (surrogate, flows) = clipped_objective(ratio, advantages[i], config.clip);
        policy_sum -= surrogate;
        if flows {
            let coeff = -ratio * advantages[i] * inv_b;
            for k in 0..n_actions {
                let onehot = if k == a { 1.0 } else { 0.0 };
                dlogits[[i, k]] += S::from_f64(coeff * (onehot - p_row[k]));
            }
        }
        let entropy: f64 = -lp_row.iter().zip(&p_row).map(|(lp, p)| p * lp).sum::<f64>();
        entropy_sum += entropy;
        for k in 0..n_actions {
            let dh = config.entropy_coef * p_row[k] * (lp_row[k] + entropy) * inv_b;
            dlogits[[i, k]] += S::from_f64(dh);
        }
        let diff = out.values[i].into_f64() - returns[i];
        value_sum += diff * diff;
        dvalues[i] = S::from_f64(config.vf_coef * 2.0 * diff * inv_b);
    }
    let policy = policy_sum * inv_b;
    let value = value_sum * inv_b;
    let entropy = entropy_sum * inv_b;
    let total = policy + config.vf_coef * value - config.entropy_coef * entropy;
    let grads = params.backward(graphs, &cache, &dlogits, &dvalues);
    (LossBreakdown { total, policy, value, entropy }, grads)
}

fn normalised(xs: &[f64]) -> Vec<f64> {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    xs.iter().map(|x| (x - mean) / (std + 1e-8)).collect()
}

/// One PPO update: `epochs` passes of shuffled minibatches over the buffer.
pub fn ppo_update(
    buffer: &RolloutBuffer,
    params: &mut PolicyParams<f32>,
    adam: &mut AdamState<f32>,
    config: &PpoConfig,
    rng: &mut ChaCha8Rng,
) -> UpdateStats {
    assert!(buffer.is_full(), "ppo_update needs a full rollout buffer");
    assert!(!buffer.advantages.is_empty(), "compute_gae must run first");
    let n = buffer.capacity();
    let mut acc = UpdateStats { policy_loss: 0.0, value_loss: 0.0, entropy: 0.0, total_loss: 0.0 };
    let mut batches = 0usize;
    for _ in 0..config.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        for chunk in order.chunks(config.batch_size) {
            let obs: Vec<GraphObservation<f32>> =
                chunk.iter().map(|&i| buffer.obs[i].clone()).collect();
            let graphs = batch(&obs).expect("minibatch is non-empty");
            let actions: Vec<usize> = chunk.iter().map(|&i| buffer.actions[i]).collect();
            let old_lp: Vec<f64> = chunk.iter().map(|&i| buffer.log_probs[i]).collect();
            let adv: Vec<f64> = chunk.iter().map(|&i| buffer.advantages[i]).collect();
            let ret: Vec<f64> = chunk.iter().map(|&i| buffer.returns[i]).collect();
            let adv = normalised(&adv);
            let (parts, mut grads) =
                ppo_loss_and_grads(params, &graphs, &actions, &old_lp, &adv, &ret, config);
            adam.step(params, &mut grads, config.grad_clip);
            acc.policy_loss += parts.policy;
            acc.value_loss += parts.value;
            acc.entropy += parts.entropy;
            acc.total_loss += parts.total;
            batches += 1;
        }
    }
    let inv = 1.0 / batches.max(1) as f64;
    UpdateStats {
        policy_loss: acc.policy_loss * inv,
        value_loss: acc.value_loss * inv,
        entropy: acc.entropy * inv,
        total_loss: acc.total_loss * inv,
    }
}

/// Why a deployment episode stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    DoNothing,
    ZeroTwoQubit,
    NoImprovement,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::DoNothing => write!(f, "DoNothing selected"),
            Termination::ZeroTwoQubit => write!(f, "two-qubit count reached zero"),
            Termination::NoImprovement => write!(f, "no improvement within limit"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub action: Action,
    pub two_qubit_after: usize,
    /// Penalty-free reward: fraction of initial two-qubit gates removed.
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeployTrace {
    pub steps: Vec<TraceStep>,
    pub termination: Termination,
    pub n0: usize,
    pub n_final: usize,
    pub cumulative_reward: f64,
}

/// Run the argmax policy until termination, reporting penalty-free rewards.
fn greedy_episode<S: Scalar>(
    params: &PolicyParams<S>,
    circuit: &Circuit,
    no_improve_limit: usize,
) -> Result<(Circuit, DeployTrace), AgentError> {
    let native = rebase(circuit);
    let n0 = native.two_qubit_count();
    if n0 == 0 {
        return Ok((
            circuit.clone(),
            DeployTrace {
                steps: Vec::new(),
                termination: Termination::ZeroTwoQubit,
                n0,
                n_final: 0,
                cumulative_reward: 0.0,
            },
        ));
    }
    let mut current = native;
    let mut last_pass = None;
    let mut since_improvement = 0usize;
    let mut steps = Vec::new();
    let termination = loop {
        if current.two_qubit_count() == 0 {
            break Termination::ZeroTwoQubit;
        }
        if since_improvement >= no_improve_limit {
            break Termination::NoImprovement;
        }
        let obs = encode::<S>(&current, last_pass)?;
        let out = params.forward(&batch(&[obs])?);
        let action = argmax_action(&out.logits, 0);
        let n_prev = current.two_qubit_count();
        let next = apply_pass(action, &current).circuit;
        let n_next = next.two_qubit_count();
        steps.push(TraceStep {
            action,
            two_qubit_after: n_next,
            reward: fraction_removed(n_prev, n_next, n0),
        });
        current = next;
        last_pass = Some(action);
        if n_next >= n_prev {
            since_improvement += 1;
        }
        if action == Action::DoNothing {
            break Termination::DoNothing;
        }
    };
    let n_final = current.two_qubit_count();
    let cumulative_reward = steps.iter().map(|s| s.reward).sum();
    Ok((
        current,
        DeployTrace { steps, termination, n0, n_final, cumulative_reward },
    ))
}

/// Deterministic argmax with lowest-index tie breaking.
fn argmax_action<S: Scalar>(logits: &Array2<S>, row: usize) -> Action {
    let mut best = 0usize;
    for k in 1..logits.ncols() {
        if logits[[row, k]] > logits[[row, best]] {
            best = k;
        }
    }
    Action::from_index(best).expect("logit columns match the registry")
}

/// Optimise a circuit with a trained policy.
///
/// Circuits that already have zero two-qubit gates are returned unchanged
/// with an empty trace.
pub fn deploy_optimize<S: Scalar>(
    params: &PolicyParams<S>,
    circuit: &Circuit,
    no_improve_limit: usize,
) -> Result<(Circuit, DeployTrace), AgentError> {
    if params.arch.n_actions != Action::COUNT {
        return Err(AgentError::RegistryMismatch {
            checkpoint: format!("{} actions", params.arch.n_actions),
            registry: Action::ALL.map(|a| a.name()).join(", "),
        });
    }
    greedy_episode(params, circuit, no_improve_limit)
}

/// One validation measurement on the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub step: usize,
    pub mean_episode_reward: f64,
    pub validation_reward: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

/// Best weights found plus the training curve.
pub struct TrainOutcome {
    pub params: PolicyParams<f32>,
    pub arch: ArchConfig,
    pub validation_score: f64,
    pub log: Vec<EvalPoint>,
    pub steps_taken: usize,
}

fn split_dataset(records: &[CircuitRecord]) -> (Vec<&Circuit>, Vec<&Circuit>) {
    let tagged: Vec<bool> = records
        .iter()
        .map(|r| r.metadata.split.as_deref() == Some("validation"))
        .collect();
    let any_tagged = tagged.iter().any(|&t| t);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for (i, record) in records.iter().enumerate() {
        let is_validation = if any_tagged { tagged[i] } else { i % 10 == 9 };
        if is_validation {
            validation.push(&record.circuit);
        } else {
            train.push(&record.circuit);
        }
    }
    (train, validation)
}

/// Mean penalty-free cumulative reward of the argmax policy.
pub fn evaluate_policy<S: Scalar>(
    params: &PolicyParams<S>,
    circuits: &[&Circuit],
    no_improve_limit: usize,
) -> f64 {
    if circuits.is_empty() {
        return 0.0;
    }
    let scores: Vec<f64> = circuits
        .par_iter()
        .map(|c| {
            greedy_episode(params, c, no_improve_limit)
                .map(|(_, trace)| trace.cumulative_reward)
                .unwrap_or(0.0)
        })
        .collect();
    scores.iter().sum::<f64>() / scores.len() as f64
}

/// Train a policy with PPO over the dataset's training split.
///
/// All randomness is drawn from `seed`, and stepping results do not
/// depend on the worker thread count, so fixed seeds give bit-identical
/// checkpoints.
pub fn train(
    arch: ArchConfig,
    config: &PpoConfig,
    dataset: &[CircuitRecord],
    seed: u64,
) -> Result<TrainOutcome, AgentError> {
    config.validate()?;
    let (train_all, validation_all) = split_dataset(dataset);
    let train_set: Vec<&Circuit> =
        train_all.into_iter().filter(|c| c.two_qubit_count() > 0).collect();
    if train_set.is_empty() {
        return Err(AgentError::EmptyDataset("non-trivial training"));
    }
    let validation: Vec<&Circuit> = validation_all
        .into_iter()
        .filter(|c| c.two_qubit_count() > 0)
        .take(config.validation_size)
        .collect();
    if validation.is_empty() {
        return Err(AgentError::EmptyDataset("validation"));
    }

    let mut init_rng = substream(seed, 0);
    let mut action_rng = substream(seed, 1);
    let mut shuffle_rng = substream(seed, 2);
    let mut draw_rng = substream(seed, 3);

    let mut params = PolicyParams::<f32>::init(arch, &mut init_rng);
    let mut adam = AdamState::new(&params, config.lr);

    let draw = |rng: &mut ChaCha8Rng| -> EnvState {
        let c = train_set[rng.gen_range(0..train_set.len())];
        EnvState::reset(c)
    };
    let mut envs: Vec<EnvState> = (0..config.n_envs).map(|_| draw(&mut draw_rng)).collect();
    let mut obs: Vec<GraphObservation<f32>> = envs
        .iter()
        .map(|e| e.observe())
        .collect::<Result<_, _>>()?;

    let mut episode_acc = vec![0.0f64; config.n_envs];
    let mut recent: VecDeque<f64> = VecDeque::with_capacity(100);
    let mut log = Vec::new();
    let mut best_score = f64::NEG_INFINITY;
    let mut best_params = params.clone();
    let mut patience_left = config.patience;
    let mut total_steps = 0usize;
    let mut update_index = 0usize;
    let mut last_stats =
        UpdateStats { policy_loss: 0.0, value_loss: 0.0, entropy: 0.0, total_loss: 0.0 };

    'training: while total_steps < config.max_steps {
        let mut buffer = RolloutBuffer::new(config.n_envs, config.n_steps);
        for _ in 0..config.n_steps {
            let graphs = batch(&obs)?;
            let out = params.forward(&graphs);
            let lsm = log_softmax(&out.logits);
            let mut actions = Vec::with_capacity(config.n_envs);
            for e in 0..config.n_envs {
                let probs: Vec<f64> =
                    (0..Action::COUNT).map(|k| (lsm[[e, k]] as f64).exp()).collect();
                let idx = sample_index(&probs, action_rng.gen());
                actions.push(Action::from_index(idx).expect("sampled index in registry"));
                buffer.obs.push(obs[e].clone());
                buffer.actions.push(idx);
                buffer.log_probs.push(lsm[[e, idx]] as f64);
                buffer.values.push(out.values[e] as f64);
            }
            let results: Vec<(GraphObservation<f32>, f64, bool)> = envs
                .par_iter_mut()
                .zip(actions.par_iter())
                .map(|(env, &a)| env_step(env, a, config).expect("stepped a finished env"))
                .collect();
            for (e, (next_obs, reward, done)) in results.into_iter().enumerate() {
                buffer.rewards.push(reward);
                buffer.dones.push(done);
                episode_acc[e] += reward;
                if done {
                    if recent.len() == 100 {
                        recent.pop_front();
                    }
                    recent.push_back(episode_acc[e]);
                    episode_acc[e] = 0.0;
                    envs[e] = draw(&mut draw_rng);
                    obs[e] = envs[e].observe()?;
                } else {
                    obs[e] = next_obs;
                }
            }
            total_steps += config.n_envs;
        }
        let graphs = batch(&obs)?;
        let out = params.forward(&graphs);
        buffer.bootstrap = out.values.iter().map(|&v| v as f64).collect();
        buffer.compute_gae(config.gamma, config.lam);
        last_stats = ppo_update(&buffer, &mut params, &mut adam, config, &mut shuffle_rng);
        update_index += 1;

        if update_index % config.eval_interval == 0 {
            let score = evaluate_policy(&params, &validation, config.no_improve_limit);
            log.push(eval_point(total_steps, &recent, score, &last_stats));
            if score > best_score {
                best_score = score;
                best_params = params.clone();
                patience_left = config.patience;
            } else {
                patience_left -= 1;
                if patience_left == 0 {
                    break 'training;
                }
            }
        }
    }

    if log.is_empty() {
        let score = evaluate_policy(&params, &validation, config.no_improve_limit);
        log.push(eval_point(total_steps, &recent, score, &last_stats));
        best_score = score;
        best_params = params;
    }

    Ok(TrainOutcome {
        params: best_params,
        arch,
        validation_score: best_score,
        log,
        steps_taken: total_steps,
    })
}

fn eval_point(
    step: usize,
    recent: &VecDeque<f64>,
    validation_reward: f64,
    stats: &UpdateStats,
) -> EvalPoint {
    let mean_episode_reward = if recent.is_empty() {
        0.0
    } else {
        recent.iter().sum::<f64>() / recent.len() as f64
    };
    EvalPoint {
        step,
        mean_episode_reward,
        validation_reward,
        policy_loss: stats.policy_loss,
        value_loss: stats.value_loss,
        entropy: stats.entropy,
    }
}

/// Inverse-CDF sample over a probability row.
fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rlpass_core::gen::{generate, CircuitClass, GenSpec};
    use rlpass_core::Gate;

    fn training_records(count: usize, seed: u64) -> Vec<CircuitRecord> {
        let classes = [CircuitClass::RandomSu4, CircuitClass::CliffordSu4, CircuitClass::Qaoa];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|i| {
                let spec = GenSpec {
                    class: classes[i % classes.len()],
                    qubits: (2, 3),
                    size: (1, 4),
                    seed,
                    count: 1,
                };
                CircuitRecord {
                    circuit: generate(&spec, &mut rng).unwrap(),
                    metadata: Default::default(),
                }
            })
            .collect()
    }

    fn tiny_config() -> PpoConfig {
        PpoConfig {
            n_steps: 16,
            batch_size: 16,
            epochs: 2,
            n_envs: 4,
            max_steps: 128,
            eval_interval: 1,
            validation_size: 4,
            ..PpoConfig::default()
        }
    }

    #[test]
    fn reward_examples_from_the_reward_definition() {
        let r = compute_reward(80, 60, 100, Action::KakDecomposition, 0.013);
        assert!((r - 0.187).abs() < 1e-15);
        assert_eq!(compute_reward(80, 60, 100, Action::DoNothing, 0.013), 0.0);
        assert!((fraction_removed(50, 60, 100) + 0.1).abs() < 1e-15);
        assert_eq!(fraction_removed(5, 3, 0), 0.0);
    }

    #[test]
    fn do_nothing_ends_the_episode_with_zero_reward() {
        let c = Circuit::from_gates(2, [Gate::zz_phase(0, 1, 0.3)]);
        let mut state = EnvState::reset(&c);
        let config = PpoConfig::default();
        let (_, reward, done) =
            env_step::<f64>(&mut state, Action::DoNothing, &config).unwrap();
        assert_eq!(reward, 0.0);
        assert!(done);
        assert!(matches!(
            env_step::<f64>(&mut state, Action::DoNothing, &config),
            Err(AgentError::EpisodeFinished)
        ));
    }

    #[test]
    fn reducing_to_zero_two_qubit_gates_terminates() {
        // Two ZZPhase gates with angles summing to a full period cancel.
        let c = Circuit::from_gates(2, [Gate::zz_phase(0, 1, 0.5), Gate::zz_phase(0, 1, 1.5)]);
        let mut state = EnvState::reset(&c);
        let config = PpoConfig::default();
        let (_, reward, done) =
            env_step::<f64>(&mut state, Action::CliffordSimp, &config).unwrap();
        assert!(done);
        assert_eq!(state.circuit.two_qubit_count(), 0);
        assert!((reward - (1.0 - config.action_penalty)).abs() < 1e-15);
    }

    #[test]
    fn stalled_episodes_stop_at_the_no_improve_limit() {
        // A single non-Clifford ZZPhase cannot be improved by any pass.
        let c = Circuit::from_gates(2, [Gate::zz_phase(0, 1, 0.7)]);
        let mut state = EnvState::reset(&c);
        let config = PpoConfig::default();
        for step in 0..config.no_improve_limit {
            let (_, _, done) =
                env_step::<f64>(&mut state, Action::KakDecomposition, &config).unwrap();
            assert_eq!(done, step + 1 == config.no_improve_limit);
        }
        assert_eq!(state.steps_since_improvement, config.no_improve_limit);
    }

    #[test]
    fn episode_rewards_telescope_and_lengths_stay_bounded() {
        let config = PpoConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for record in training_records(10, 12) {
            let mut state = EnvState::reset(&record.circuit);
            let n0 = state.n0;
            let mut reported = 0.0;
            let mut steps = 0usize;
            while !state.done {
                let action = Action::from_index(rng.gen_range(0..Action::COUNT)).unwrap();
                let (_, reward, _) = env_step::<f64>(&mut state, action, &config).unwrap();
                reported += if action == Action::DoNothing {
                    0.0
                } else {
                    reward + config.action_penalty
                };
                steps += 1;
                assert!(steps <= config.no_improve_limit + n0);
            }
            let n_final = state.circuit.two_qubit_count();
            let expected = fraction_removed(n0, n_final, n0);
            assert!((reported - expected).abs() < 1e-12);
            assert!(reported <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn gae_reduces_to_one_step_td_when_lambda_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rewards: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let values: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dones = vec![false; 8];
        let gamma = 0.9;
        let (adv, ret) = gae(&rewards, &values, &dones, gamma, 0.0);
        for t in 0..8 {
            let expected = rewards[t] + gamma * values[t + 1] - values[t];
            assert!((adv[t] - expected).abs() < 1e-14);
            assert_eq!(ret[t], adv[t] + values[t]);
        }
    }

    #[test]
    fn gae_telescopes_to_reward_to_go_for_terminal_undiscounted_episodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let t = 6;
        let rewards: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let values: Vec<f64> = (0..=t).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut dones = vec![false; t];
        dones[t - 1] = true;
        let (adv, _) = gae(&rewards, &values, &dones, 1.0, 1.0);
        for k in 0..t {
            let to_go: f64 = rewards[k..].iter().sum();
            assert!((adv[k] - (to_go - values[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn gae_matches_a_double_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let t = 50;
            let rewards: Vec<f64> = (0..t).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let values: Vec<f64> = (0..=t).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let dones: Vec<bool> = (0..t).map(|_| rng.gen_bool(0.15)).collect();
            let gamma = rng.gen_range(0.8..1.0);
            let lam = rng.gen_range(0.5..1.0);
            let (adv, _) = gae(&rewards, &values, &dones, gamma, lam);

            for t0 in 0..t {
                let mut expected = 0.0;
                let mut factor = 1.0;
                for k in t0..t {
                    let cont = if dones[k] { 0.0 } else { 1.0 };
                    let delta = rewards[k] + gamma * cont * values[k + 1] - values[k];
                    expected += factor * delta;
                    if dones[k] {
                        break;
                    }
                    factor *= gamma * lam;
                }
                assert!(
                    (adv[t0] - expected).abs() < 1e-10,
                    "t={t0}: {} vs {expected}",
                    adv[t0]
                );
            }
        }
    }

    #[test]
    fn clipped_surrogate_uses_the_bound_when_the_ratio_leaves_the_window() {
        let (value, flows) = clipped_objective(1.5, 1.0, 0.2);
        assert!((value - 1.2).abs() < 1e-15);
        assert!(!flows);
        let (value, flows) = clipped_objective(1.0, 1.0, 0.2);
        assert_eq!(value, 1.0);
        assert!(flows);
        let (value, flows) = clipped_objective(0.5, -1.0, 0.2);
        assert!((value + 0.8).abs() < 1e-15);
        assert!(!flows);
    }

    #[test]
    fn fresh_policy_sees_unit_ratios_and_no_clipping() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let params =
            PolicyParams::<f64>::init(ArchConfig { hidden: 8, layers: 1, n_actions: 5 }, &mut rng);
        let records = training_records(6, 32);
        let graphs: Vec<GraphObservation<f64>> = records
            .iter()
            .map(|r| encode(&r.circuit, None).unwrap())
            .collect();
        let gb = batch(&graphs).unwrap();
        let out = params.forward(&gb);
        let lsm = log_softmax(&out.logits);
        let actions: Vec<usize> = (0..6).map(|i| i % Action::COUNT).collect();
        let old_lp: Vec<f64> = actions.iter().enumerate().map(|(i, &a)| lsm[[i, a]]).collect();
        let adv: Vec<f64> = (0..6).map(|i| (i as f64) - 2.5).collect();
        let returns = vec![0.0; 6];
        let config = PpoConfig::default();
        let (parts, _) =
            ppo_loss_and_grads(&params, &gb, &actions, &old_lp, &adv, &returns, &config);
        // Ratios are exactly one, so the policy term is minus the mean advantage.
        let mean_adv = adv.iter().sum::<f64>() / 6.0;
        assert!((parts.policy + mean_adv).abs() < 1e-12);
    }

    #[test]
    fn ppo_loss_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut params =
            PolicyParams::<f64>::init(ArchConfig { hidden: 8, layers: 1, n_actions: 5 }, &mut rng);
        let records = training_records(6, 34);
        let graphs: Vec<GraphObservation<f64>> = records
            .iter()
            .map(|r| encode(&r.circuit, None).unwrap())
            .collect();
        let gb = batch(&graphs).unwrap();
        let out = params.forward(&gb);
        let lsm = log_softmax(&out.logits);
        let actions: Vec<usize> = (0..6).map(|_| rng.gen_range(0..Action::COUNT)).collect();
        // Stale log-probs keep the ratios away from exactly one.
        let old_lp: Vec<f64> = actions
            .iter()
            .enumerate()
            .map(|(i, &a)| lsm[[i, a]] + rng.gen_range(-0.1..0.1))
            .collect();
        let adv: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let returns: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let config = PpoConfig::default();

        let (_, analytic) =
            ppo_loss_and_grads(&params, &gb, &actions, &old_lp, &adv, &returns, &config);
        let analytic_flat = analytic.to_flat();
        let theta = params.to_flat();
        let step = 1e-5;
        let mut worst = 0.0f64;
        for i in 0..theta.len() {
            let mut plus = theta.clone();
            plus[i] += step;
            params.load_flat(&plus);
            let (lp, _) =
                ppo_loss_and_grads(&params, &gb, &actions, &old_lp, &adv, &returns, &config);
            let mut minus = theta.clone();
            minus[i] -= step;
            params.load_flat(&minus);
            let (lm, _) =
                ppo_loss_and_grads(&params, &gb, &actions, &old_lp, &adv, &returns, &config);
            let fd = (lp.total - lm.total) / (2.0 * step);
            let denom = analytic_flat[i].abs().max(fd.abs()).max(1e-6);
            worst = worst.max((analytic_flat[i] - fd).abs() / denom);
        }
        params.load_flat(&theta);
        assert!(worst < 1e-4, "worst relative loss-gradient error {worst}");
    }

    #[test]
    fn training_is_bit_identical_for_a_fixed_seed() {
        let records = training_records(24, 40);
        let arch = ArchConfig { hidden: 8, layers: 1, n_actions: Action::COUNT };
        let config = tiny_config();
        let a = train(arch, &config, &records, 7).unwrap();
        let b = train(arch, &config, &records, 7).unwrap();
        let fa = a.params.to_flat();
        let fb = b.params.to_flat();
        assert_eq!(fa.len(), fb.len());
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.log, b.log);
        assert!(!a.log.is_empty());
        assert_eq!(a.steps_taken, b.steps_taken);
    }

    #[test]
    fn training_rejects_datasets_without_usable_circuits() {
        let arch = ArchConfig { hidden: 8, layers: 1, n_actions: Action::COUNT };
        let config = tiny_config();
        assert!(matches!(
            train(arch, &config, &[], 1),
            Err(AgentError::EmptyDataset(_))
        ));
        let trivial = CircuitRecord { circuit: Circuit::new(2), metadata: Default::default() };
        assert!(matches!(
            train(arch, &config, &[trivial], 1),
            Err(AgentError::EmptyDataset(_))
        ));
    }

    #[test]
    fn deployment_returns_trivial_circuits_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let params =
            PolicyParams::<f64>::init(ArchConfig { hidden: 8, layers: 1, n_actions: 5 }, &mut rng);
        let c = Circuit::from_gates(2, [Gate::rz(0, 0.3), Gate::phased_x(1, 0.5, 0.25)]);
        let (out, trace) = deploy_optimize(&params, &c, 3).unwrap();
        assert_eq!(out, c);
        assert!(trace.steps.is_empty());
        assert_eq!(trace.cumulative_reward, 0.0);
        assert_eq!(trace.termination, Termination::ZeroTwoQubit);
    }

    #[test]
    fn deployment_rewards_telescope_to_the_total_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let params =
            PolicyParams::<f64>::init(ArchConfig { hidden: 8, layers: 2, n_actions: 5 }, &mut rng);
        for record in training_records(8, 52) {
            let (out, trace) = deploy_optimize(&params, &record.circuit, 3).unwrap();
            let expected = fraction_removed(trace.n0, trace.n_final, trace.n0);
            assert!((trace.cumulative_reward - expected).abs() < 1e-12);
            assert_eq!(out.two_qubit_count(), trace.n_final);
            assert!(trace.cumulative_reward <= 1.0 + 1e-12);
            let (out2, trace2) = deploy_optimize(&params, &record.circuit, 3).unwrap();
            assert_eq!(out, out2);
            assert_eq!(trace, trace2);
        }
    }

    #[test]
    fn deployment_rejects_mismatched_action_heads() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let params =
            PolicyParams::<f64>::init(ArchConfig { hidden: 8, layers: 1, n_actions: 7 }, &mut rng);
        let c = Circuit::from_gates(2, [Gate::zz_phase(0, 1, 0.25)]);
        assert!(matches!(
            deploy_optimize(&params, &c, 3),
            Err(AgentError::RegistryMismatch { .. })
        ));
    }

    #[test]
    fn sample_index_walks_the_cdf() {
        let probs = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(sample_index(&probs, 0.05), 0);
        assert_eq!(sample_index(&probs, 0.1), 1);
        assert_eq!(sample_index(&probs, 0.55), 2);
        assert_eq!(sample_index(&probs, 0.999), 3);
        assert_eq!(sample_index(&probs, 1.5), 3);
    }
}
