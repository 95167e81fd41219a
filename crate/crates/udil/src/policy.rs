//! Learner policy: tanh-squashed linear-Gaussian controller, rollouts, and
//! a cross-entropy-method optimizer.
//!
//! The optimizer is derivative-free: it scores Gaussian perturbations of the
//! controller by total relabeled reward and averages the elite fraction.
//! Exploration noise comes from the policy's own `log_std`, which anneals
//! with the empirical spread of the elites.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::envsuite::Env;
use crate::error::{Error, Result};
use crate::trajstore::{StateVector, Transition};

/// Below this log-std the policy is treated as exactly deterministic.
pub const LOG_STD_FLOOR: f64 = -10.0;

/// Linear-Gaussian controller: a = tanh(gain * s + bias + eps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    /// gain[action_dim][state_dim]
    pub gain: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub log_std: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(action_dim: usize, state_dim: usize, log_std: f64) -> Self {
        PolicyParams {
            gain: vec![vec![0.0; state_dim]; action_dim],
            bias: vec![0.0; action_dim],
            log_std: vec![log_std.max(LOG_STD_FLOOR); action_dim],
        }
    }

    pub fn action_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn state_dim(&self) -> usize {
        self.gain.first().map_or(0, |row| row.len())
    }

    fn mean_action(&self, s: &StateVector) -> Vec<f64> {
        self.gain
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(s.values()).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }
}

/// Samples an action; components with log_std at the floor are noise-free.
pub fn policy_act(p: &PolicyParams, s: &StateVector, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if s.dim() != p.state_dim() {
        return Err(Error::dim(p.state_dim(), s.dim(), "policy input"));
    }
    let mut a = p.mean_action(s);
    for (ai, ls) in a.iter_mut().zip(&p.log_std) {
        if *ls > LOG_STD_FLOOR {
            let eps: f64 = rng.sample(StandardNormal);
            *ai += eps * ls.exp();
        }
        *ai = ai.tanh();
    }
    Ok(a)
}

/// The noise-free action tanh(gain * s + bias).
pub fn policy_act_deterministic(p: &PolicyParams, s: &StateVector) -> Result<Vec<f64>> {
    if s.dim() != p.state_dim() {
        return Err(Error::dim(p.state_dim(), s.dim(), "policy input"));
    }
    Ok(p.mean_action(s).into_iter().map(f64::tanh).collect())
}

/// One fixed-length episode. Rewards start at zero and are filled in later
/// by relabeling; there is no early-termination path.
#[derive(Debug, Clone)]
pub struct Episode {
    pub states: Vec<StateVector>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
}

impl Episode {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    /// Consecutive transitions (s_t, s_{t+1}).
    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        self.states.windows(2).map(|w| Transition {
            from: w[0].clone(),
            to: w[1].clone(),
        })
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// A batch of fixed-length episodes.
#[derive(Debug, Clone)]
pub struct RolloutBatch {
    pub episodes: Vec<Episode>,
    pub horizon: usize,
}

impl RolloutBatch {
    pub fn new(episodes: Vec<Episode>, horizon: usize) -> Result<Self> {
        if episodes.iter().any(|e| e.horizon() != horizon) {
            return Err(Error::validation("episodes must share the fixed horizon"));
        }
        Ok(RolloutBatch { episodes, horizon })
    }
}

/// Rolls out `p` for exactly `horizon` steps; the episode seed is drawn
/// from `rng`.
pub fn rollout(
    env: &mut dyn Env,
    p: &PolicyParams,
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Episode> {
    rollout_with(env, horizon, rng, |s, rng| policy_act(p, s, rng))
}

/// Rollout with the deterministic (noise-free) policy and a pinned episode
/// seed.
pub fn rollout_deterministic(
    env: &mut dyn Env,
    p: &PolicyParams,
    horizon: usize,
    episode_seed: u64,
) -> Result<Episode> {
    let mut states = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    let mut s = env.reset(episode_seed);
    states.push(s.clone());
    for _ in 0..horizon {
        let a = policy_act_deterministic(p, &s)?;
        s = env.step(&a)?;
        states.push(s.clone());
        actions.push(a);
    }
    Ok(Episode {
        states,
        rewards: vec![0.0; actions.len()],
        actions,
    })
}

fn rollout_with(
    env: &mut dyn Env,
    horizon: usize,
    rng: &mut ChaCha8Rng,
    mut act: impl FnMut(&StateVector, &mut ChaCha8Rng) -> Result<Vec<f64>>,
) -> Result<Episode> {
    let episode_seed: u64 = rng.gen();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    let mut s = env.reset(episode_seed);
    states.push(s.clone());
    for _ in 0..horizon {
        let a = act(&s, rng)?;
        s = env.step(&a)?;
        states.push(s.clone());
        actions.push(a);
    }
    Ok(Episode {
        states,
        rewards: vec![0.0; actions.len()],
        actions,
    })
}

/// Cross-entropy-method settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CemConfig {
    pub population: usize,
    pub elite_frac: f64,
    pub noise_std: f64,
    pub episodes_per_candidate: usize,
}

impl Default for CemConfig {
    fn default() -> Self {
        CemConfig {
            population: 64,
            elite_frac: 0.125,
            noise_std: 0.2,
            episodes_per_candidate: 2,
        }
    }
}

/// Diagnostics from one CEM update.
#[derive(Debug, Clone, Copy)]
pub struct CemReport {
    pub mean_population_score: f64,
    pub mean_elite_score: f64,
}

/// One CEM update: perturb, score by mean total relabeled reward over
/// `episodes_per_candidate` rollouts, average the elites.
pub fn cem_update(
    env: &mut dyn Env,
    reward_fn: &dyn Fn(&Transition) -> f64,
    p: &PolicyParams,
    horizon: usize,
    cfg: &CemConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(PolicyParams, CemReport)> {
    if cfg.population < 2 {
        return Err(Error::config("CEM population must be >= 2"));
    }
    if !(cfg.elite_frac > 0.0 && cfg.elite_frac <= 1.0) {
        return Err(Error::config("elite_frac must be in (0, 1]"));
    }
    if cfg.episodes_per_candidate == 0 {
        return Err(Error::config("episodes_per_candidate must be >= 1"));
    }

    let action_dim = p.action_dim();
    let state_dim = p.state_dim();
    let n_perturbed = action_dim * state_dim + action_dim;

    // candidates: seeded perturbations of (gain, bias)
    let mut candidates = Vec::with_capacity(cfg.population);
    for _ in 0..cfg.population {
        let mut c = p.clone();
        for row in &mut c.gain {
            for w in row.iter_mut() {
                let eps: f64 = rng.sample(StandardNormal);
                *w += cfg.noise_std * eps;
            }
        }
        for b in &mut c.bias {
            let eps: f64 = rng.sample(StandardNormal);
            *b += cfg.noise_std * eps;
        }
        candidates.push(c);
    }

    let mut scores = Vec::with_capacity(cfg.population);
    for (idx, candidate) in candidates.iter().enumerate() {
        let mut total = 0.0;
        for _ in 0..cfg.episodes_per_candidate {
            let mut ep = rollout_with(env, horizon, rng, |s, rng| policy_act(candidate, s, rng))?;
            let transitions: Vec<Transition> = ep.transitions().collect();
            for (t, transition) in transitions.iter().enumerate() {
                ep.rewards[t] = reward_fn(transition);
            }
            total += ep.total_reward();
        }
        let score = total / cfg.episodes_per_candidate as f64;
        if !score.is_finite() {
            return Err(Error::NonFinite(format!("CEM candidate {idx} score")));
        }
        scores.push((idx, score));
    }

    // stable order: descending score, candidate index breaks ties
    scores.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let n_elite =
        ((cfg.elite_frac * cfg.population as f64).ceil() as usize).clamp(1, cfg.population);
    let elites: Vec<&PolicyParams> = scores[..n_elite]
        .iter()
        .map(|&(idx, _)| &candidates[idx])
        .collect();

    let mean_population_score =
        scores.iter().map(|&(_, s)| s).sum::<f64>() / cfg.population as f64;
    let mean_elite_score = scores[..n_elite].iter().map(|&(_, s)| s).sum::<f64>() / n_elite as f64;

    // elite mean for gain and bias
    let mut next = p.clone();
    for (i, row) in next.gain.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            *w = elites.iter().map(|e| e.gain[i][j]).sum::<f64>() / n_elite as f64;
        }
    }
    for (i, b) in next.bias.iter_mut().enumerate() {
        *b = elites.iter().map(|e| e.bias[i]).sum::<f64>() / n_elite as f64;
    }

    // anneal exploration noise with the elite parameter spread; zero spread
    // (noise_std = 0, or every elite identical) leaves log_std untouched
    let mut spread_acc = 0.0;
    for i in 0..action_dim {
        for j in 0..state_dim {
            let mean = next.gain[i][j];
            spread_acc += elites
                .iter()
                .map(|e| (e.gain[i][j] - mean).powi(2))
                .sum::<f64>()
                / n_elite as f64;
        }
        let mean = next.bias[i];
        spread_acc += elites
            .iter()
            .map(|e| (e.bias[i] - mean).powi(2))
            .sum::<f64>()
            / n_elite as f64;
    }
    let spread = (spread_acc / n_perturbed as f64).sqrt();
    if spread > 0.0 {
        let ls = spread.ln().clamp(LOG_STD_FLOOR, 0.0);
        for v in &mut next.log_std {
            *v = ls;
        }
    }

    Ok((
        next,
        CemReport {
            mean_population_score,
            mean_elite_score,
        },
    ))
}
