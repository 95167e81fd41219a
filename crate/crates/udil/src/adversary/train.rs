//! Joint training of policy, encoder and discriminator.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diffcore::{adam_step, DiscConfig, DiscriminatorState, EncoderConfig, EncoderState};
use crate::envsuite::{mix_seed, Env, OrderedPairsSet};
use crate::error::{Error, Result};
use crate::miembed::{cumulative_mi_curve, EmbeddingSpec};
use crate::policy::{cem_update, rollout, rollout_deterministic, CemConfig, PolicyParams};
use crate::trajstore::{extract_transitions, DemoSet, StateVector, Transition};

use super::jsd::js_estimate;
use super::losses::{
    discriminator_loss_grad, encoder_loss, encoder_loss_grad, pair_disc_input, single_disc_input,
};
use super::reward::{compute_goal_state, goal_distance_reward, synthesize_reward};

const EVAL_SEED_SALT: u64 = 0x6576_616c;

/// How the policy's reward is synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardMode {
    Adversarial,
    GoalDistance,
}

/// How the encoder starts out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderInit {
    Seeded,
    /// Square identity encoder; requires the embedded dimension to equal
    /// the learner state dimension.
    Identity,
}

/// Training-loop configuration. Type-level defaults follow the reference
/// hyperparameters; individual runs override what they need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr_encoder: f64,
    pub lr_discriminator: f64,
    /// Probability of one encoder update per discriminator step (the
    /// fractional "train every n steps" cadence expressed as a ratio).
    pub encoder_update_prob: f64,
    pub use_bias: bool,
    pub batch_size: usize,
    pub disc_updates_per_iter: usize,
    pub total_iters: usize,
    pub rng_seed: u64,
    pub reward_mode: RewardMode,
    /// Override the embedding with the top-d dimensions of its MI report.
    pub embedding_dim_override: Option<usize>,
    /// Frameskip for both expert and learner transition sets during
    /// adversarial training (the MI stage has its own).
    pub train_frameskip: usize,
    /// Episodes rolled out per iteration to feed the discriminator.
    pub rollout_episodes: usize,
    pub js_bins: usize,
    /// Discriminator input: pair (z, z') when true, current state only in
    /// the no-pair ablation.
    pub pair_input: bool,
    pub encoder_init: EncoderInit,
    pub diagonal_encoder: bool,
    pub policy_log_std_init: f64,
    pub cem: CemConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_encoder: 0.001,
            lr_discriminator: 0.001,
            encoder_update_prob: 0.01,
            use_bias: false,
            batch_size: 64,
            disc_updates_per_iter: 4,
            total_iters: 100,
            rng_seed: 0,
            reward_mode: RewardMode::Adversarial,
            embedding_dim_override: None,
            train_frameskip: 1,
            rollout_episodes: 2,
            js_bins: 8,
            pair_input: true,
            encoder_init: EncoderInit::Seeded,
            diagonal_encoder: false,
            policy_log_std_init: -0.5,
            cem: CemConfig::default(),
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.lr_encoder <= 0.0 || self.lr_discriminator <= 0.0 {
            return Err(Error::config("learning rates must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.encoder_update_prob) {
            return Err(Error::config("encoder_update_prob must be in [0, 1]"));
        }
        if self.batch_size == 0 || self.rollout_episodes == 0 || self.train_frameskip == 0 {
            return Err(Error::config("batch/rollout/frameskip sizes must be >= 1"));
        }
        if self.js_bins < 2 {
            return Err(Error::config("js_bins must be >= 2"));
        }
        Ok(())
    }
}

/// One row of the per-iteration metrics series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iter: usize,
    pub disc_loss: f64,
    pub encoder_loss: f64,
    pub mean_synth_reward: f64,
    pub eval_true_reward: f64,
    pub js_estimate: f64,
}

/// Everything a training run produces.
#[derive(Debug, Clone)]
pub struct TrainedArtifacts {
    pub policy: PolicyParams,
    pub encoder: EncoderState,
    pub discriminator: DiscriminatorState,
    pub metrics: Vec<MetricsRow>,
}

fn resolve_dims(embedding: &EmbeddingSpec, override_d: Option<usize>) -> Result<Vec<usize>> {
    match override_d {
        None => Ok(embedding.selected_dims.clone()),
        Some(d) => {
            let curve = cumulative_mi_curve(&embedding.source_report)?;
            if d == 0 || d > curve.sorted_dims.len() {
                return Err(Error::config(format!(
                    "embedding override d={d} out of range 1..={}",
                    curve.sorted_dims.len()
                )));
            }
            Ok(curve.sorted_dims[..d].to_vec())
        }
    }
}

fn project(dims: &[usize], s: &StateVector) -> Result<StateVector> {
    let needed = dims.iter().copied().max().unwrap_or(0) + 1;
    if s.dim() < needed {
        return Err(Error::dim(needed, s.dim(), "embedding input"));
    }
    StateVector::new(dims.iter().map(|&d| s[d]).collect())
}

/// Frameskipped sliding-window transitions from one episode's states.
fn episode_transitions(states: &[StateVector], frameskip: usize) -> Vec<Transition> {
    let mut out = Vec::new();
    if states.len() > frameskip {
        for t in 0..states.len() - frameskip {
            out.push(Transition {
                from: states[t].clone(),
                to: states[t + frameskip].clone(),
            });
        }
    }
    out
}

/// The full adversarial loop: roll out the policy, update the
/// discriminator, occasionally update the encoder, relabel rewards and
/// update the policy. Fully deterministic given `cfg.rng_seed`.
pub fn udil_train(
    env: &mut dyn Env,
    demos: &DemoSet,
    embedding: &EmbeddingSpec,
    cfg: &TrainConfig,
) -> Result<TrainedArtifacts> {
    cfg.validate()?;
    let dims = resolve_dims(embedding, cfg.embedding_dim_override)?;
    let m = dims.len();
    let state_dim = env.spec().state_dim;
    let action_dim = env.spec().action_dim;
    let horizon = env.spec().horizon;

    // expert side: embedded transition pairs and ready-made disc inputs
    let expert_transitions = extract_transitions(demos, cfg.train_frameskip)?;
    let mut expert_pairs = Vec::with_capacity(expert_transitions.len());
    let mut expert_inputs = Vec::with_capacity(expert_transitions.len());
    for t in &expert_transitions {
        let z = project(&dims, &t.from)?;
        let zp = project(&dims, &t.to)?;
        expert_inputs.push(if cfg.pair_input {
            pair_disc_input(&z, &zp)
        } else {
            single_disc_input(&zp)
        });
        expert_pairs.push((z, zp));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let enc_seed: u64 = rng.gen();
    let disc_seed: u64 = rng.gen();

    let mut encoder = match cfg.encoder_init {
        EncoderInit::Seeded => EncoderState::init(
            EncoderConfig::new(state_dim, m)
                .with_bias(cfg.use_bias)
                .with_diagonal(cfg.diagonal_encoder),
            enc_seed,
        ),
        EncoderInit::Identity => {
            if state_dim != m {
                return Err(Error::config(format!(
                    "identity encoder needs embedded dim == state dim, got {m} vs {state_dim}"
                )));
            }
            EncoderState::identity(state_dim)
        }
    };
    let disc_input_dim = if cfg.pair_input { 2 * m } else { m };
    let mut discriminator = DiscriminatorState::init(DiscConfig::new(disc_input_dim), disc_seed);
    let mut policy = PolicyParams::zeros(action_dim, state_dim, cfg.policy_log_std_init);

    let goal = match cfg.reward_mode {
        RewardMode::GoalDistance => {
            let spec_for_goal = EmbeddingSpec::from_dims(dims.clone())?;
            Some(compute_goal_state(demos, &spec_for_goal)?)
        }
        RewardMode::Adversarial => None,
    };

    let mut metrics = Vec::with_capacity(cfg.total_iters);
    for iter in 0..cfg.total_iters {
        // (1) on-policy learner transitions
        let mut pool = Vec::new();
        for _ in 0..cfg.rollout_episodes {
            let ep = rollout(env, &policy, horizon, &mut rng)?;
            pool.extend(episode_transitions(&ep.states, cfg.train_frameskip));
        }
        if pool.is_empty() {
            return Err(Error::validation("horizon too short for train_frameskip"));
        }

        // (2)+(3) discriminator updates, (4) gated encoder updates
        let mut disc_loss_acc = 0.0;
        for _ in 0..cfg.disc_updates_per_iter {
            let learner_batch: Vec<Vec<f64>> = (0..cfg.batch_size)
                .map(|_| {
                    let t = &pool[rng.gen_range(0..pool.len())];
                    if cfg.pair_input {
                        let (z, zp) = encoder.apply_pair(t)?;
                        Ok(pair_disc_input(&z, &zp))
                    } else {
                        Ok(single_disc_input(&encoder.apply(&t.to)?))
                    }
                })
                .collect::<Result<_>>()?;
            let expert_batch: Vec<Vec<f64>> = (0..cfg.batch_size)
                .map(|_| expert_inputs[rng.gen_range(0..expert_inputs.len())].clone())
                .collect();
            let (loss, grad) = discriminator_loss_grad(&discriminator, &learner_batch, &expert_batch)?;
            if !loss.is_finite() {
                return Err(Error::NumericAbort {
                    iter,
                    msg: "discriminator loss is not finite".into(),
                });
            }
            adam_step(&mut discriminator, &grad, cfg.lr_discriminator)?;
            disc_loss_acc += loss;

            if rng.gen::<f64>() < cfg.encoder_update_prob {
                let batch: Vec<Transition> = (0..cfg.batch_size)
                    .map(|_| pool[rng.gen_range(0..pool.len())].clone())
                    .collect();
                let (eloss, egrad) =
                    encoder_loss_grad(&discriminator, &encoder, &batch, cfg.pair_input)?;
                if !eloss.is_finite() {
                    return Err(Error::NumericAbort {
                        iter,
                        msg: "encoder loss is not finite".into(),
                    });
                }
                adam_step(&mut encoder, &egrad, cfg.lr_encoder)?;
            }
        }
        let disc_loss = disc_loss_acc / cfg.disc_updates_per_iter as f64;

        // (5) policy update on relabeled rewards
        let enc_ref = &encoder;
        let disc_ref = &discriminator;
        let goal_ref = goal.as_ref();
        let pair_input = cfg.pair_input;
        let reward_fn = move |t: &Transition| -> f64 {
            let r = match goal_ref {
                None => synthesize_reward(disc_ref, enc_ref, t, pair_input),
                Some(g) => goal_distance_reward(g, enc_ref, &t.to),
            };
            r.unwrap_or(f64::NAN)
        };
        let (next_policy, _report) =
            cem_update(env, &reward_fn, &policy, horizon, &cfg.cem, &mut rng)?;
        policy = next_policy;

        // metrics on the post-update models
        let encoder_loss_metric = {
            let take = pool.len().min(cfg.batch_size * 4);
            encoder_loss(&discriminator, &encoder, &pool[..take], cfg.pair_input)?
        };
        let mean_synth_reward = {
            let mut acc = 0.0;
            for t in &pool {
                acc += synthesize_reward(&discriminator, &encoder, t, cfg.pair_input)?;
            }
            acc / pool.len() as f64
        };
        let eval_true_reward = {
            let ep = rollout_deterministic(env, &policy, horizon, mix_seed(EVAL_SEED_SALT, iter as u64))?;
            let first = ep.states.first().expect("episode has states");
            let last = ep.states.last().expect("episode has states");
            env.canonical_progress(first, last)
        };
        let js = {
            let learner_pairs: Vec<(StateVector, StateVector)> = pool
                .iter()
                .map(|t| encoder.apply_pair(t))
                .collect::<Result<_>>()?;
            js_estimate(&learner_pairs, &expert_pairs, cfg.js_bins)?
        };
        metrics.push(MetricsRow {
            iter,
            disc_loss,
            encoder_loss: encoder_loss_metric,
            mean_synth_reward,
            eval_true_reward,
            js_estimate: js,
        });
    }

    Ok(TrainedArtifacts {
        policy,
        encoder,
        discriminator,
        metrics,
    })
}

/// Configuration for the encoder/discriminator-only fit on ordered pair
/// sets (no policy in the loop).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFitConfig {
    pub iters: usize,
    pub batch_size: usize,
    pub lr_encoder: f64,
    pub lr_discriminator: f64,
    pub encoder_update_prob: f64,
    pub rng_seed: u64,
}

impl Default for PairFitConfig {
    fn default() -> Self {
        PairFitConfig {
            iters: 1500,
            batch_size: 128,
            lr_encoder: 0.02,
            lr_discriminator: 0.003,
            encoder_update_prob: 0.5,
            rng_seed: 0,
        }
    }
}

/// Outcome of [`fit_encoder_adversarial`].
#[derive(Debug, Clone)]
pub struct PairFitResult {
    pub encoder: EncoderState,
    pub discriminator: DiscriminatorState,
    pub final_disc_loss: f64,
    /// Effective slope of the learned 1-D affine map.
    pub effective_slope: f64,
    pub effective_bias: f64,
}

/// Adversarially fits a time-invariant 1-D affine encoder mapping the
/// learner's ordered pairs onto the expert's, with no policy involved.
pub fn fit_encoder_adversarial(
    learner: &OrderedPairsSet,
    expert: &OrderedPairsSet,
    cfg: &PairFitConfig,
) -> Result<PairFitResult> {
    if learner.pairs.is_empty() || expert.pairs.is_empty() {
        return Err(Error::validation("pair sets must be non-empty"));
    }
    if cfg.iters == 0 || cfg.batch_size == 0 {
        return Err(Error::config("iters and batch_size must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let enc_seed: u64 = rng.gen();
    let disc_seed: u64 = rng.gen();
    let mut encoder =
        EncoderState::init(EncoderConfig::new(1, 1).with_bias(true), enc_seed);
    let mut discriminator = DiscriminatorState::init(DiscConfig::new(2), disc_seed);

    let learner_transitions: Vec<Transition> = learner
        .pairs
        .iter()
        .map(|&(z, zp)| {
            Transition::new(
                StateVector::new(vec![z]).expect("unit-square value"),
                StateVector::new(vec![zp]).expect("unit-square value"),
            )
        })
        .collect::<Result<_>>()?;
    let expert_inputs: Vec<Vec<f64>> =
        expert.pairs.iter().map(|&(z, zp)| vec![z, zp]).collect();

    let mut final_loss = f64::NAN;
    for iter in 0..cfg.iters {
        let learner_batch: Vec<Vec<f64>> = (0..cfg.batch_size)
            .map(|_| {
                let t = &learner_transitions[rng.gen_range(0..learner_transitions.len())];
                let (z, zp) = encoder.apply_pair(t)?;
                Ok(pair_disc_input(&z, &zp))
            })
            .collect::<Result<_>>()?;
        let expert_batch: Vec<Vec<f64>> = (0..cfg.batch_size)
            .map(|_| expert_inputs[rng.gen_range(0..expert_inputs.len())].clone())
            .collect();
        let (loss, grad) = discriminator_loss_grad(&discriminator, &learner_batch, &expert_batch)?;
        if !loss.is_finite() {
            return Err(Error::NumericAbort {
                iter,
                msg: "discriminator loss is not finite".into(),
            });
        }
        adam_step(&mut discriminator, &grad, cfg.lr_discriminator)?;
        final_loss = loss;

        if rng.gen::<f64>() < cfg.encoder_update_prob {
            let batch: Vec<Transition> = (0..cfg.batch_size)
                .map(|_| learner_transitions[rng.gen_range(0..learner_transitions.len())].clone())
                .collect();
            let (_, egrad) = encoder_loss_grad(&discriminator, &encoder, &batch, true)?;
            adam_step(&mut encoder, &egrad, cfg.lr_encoder)?;
        }
    }

    let effective_slope = encoder.effective_weights()[0][0];
    let effective_bias = encoder.effective_bias()[0];
    Ok(PairFitResult {
        encoder,
        discriminator,
        final_disc_loss: final_loss,
        effective_slope,
        effective_bias,
    })
}
