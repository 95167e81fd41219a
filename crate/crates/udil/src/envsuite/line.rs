//! Line-world environments: one progress axis, saturating velocity,
//! action-independent nuisance walks.
//!
//! Canonical dynamics (shared by every variant):
//!
//! ```text
//! x' = max(-1, x + 0.1 * v)
//! v' = clamp(v + gain * a, -1, 1)
//! n_i' = reflect(n_i + U(-0.5, 0.5))     reflecting at +-1
//! ```
//!
//! Initial state: x = 0, v = 0, nuisance ~ U(-1, 1). The position floor at
//! -1 makes sustained backward motion degenerate (the state pins to the
//! wall), which is what identifies the demonstrated direction of progress
//! for a learner that never observes rewards. Forward behaviour never
//! touches the floor.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{mix_seed, Env, EnvSpec};
use crate::error::{Error, Result};
use crate::trajstore::{DemoSet, StateVector, Trajectory};

const POSITION_STEP: f64 = 0.1;
const EXPERT_ACTION_GAIN: f64 = 0.5;
const POSITION_FLOOR: f64 = -1.0;
const NUISANCE_STEP: f64 = 0.5;

/// Observation lens applied to the canonical state.
#[derive(Debug, Clone, PartialEq)]
pub enum LineVariant {
    /// Observation = canonical state.
    Expert,
    /// Dimensions shuffled by a fixed permutation.
    Permuted(Vec<usize>),
    /// Progress axis observed as u = -2.5 * x.
    NegatedScaled,
    /// Five nuisance dims and action gain 0.25; otherwise canonical.
    ExtraNuisance,
}

/// A line-world environment instance (owns its episode state).
#[derive(Debug, Clone)]
pub struct LineEnv {
    spec: EnvSpec,
    variant: LineVariant,
    nuisance_dims: usize,
    action_gain: f64,
    base_seed: u64,
    // episode state, canonical coordinates
    canonical: Vec<f64>,
    rng: ChaCha8Rng,
}

pub const DEFAULT_HORIZON: usize = 100;

/// Expert line world with the given number of nuisance dimensions.
pub fn make_expert_line(nuisance_dims: usize, seed: u64) -> LineEnv {
    LineEnv::new(
        LineVariant::Expert,
        nuisance_dims,
        EXPERT_ACTION_GAIN,
        seed,
        "expert-line",
    )
}

/// Learner-side counterpart of the expert line world.
///
/// `Permuted` draws a fixed permutation from `seed`; use
/// [`LineEnv::with_permutation`] to pin one explicitly.
pub fn make_learner_line(variant: LineVariant, seed: u64) -> LineEnv {
    match variant {
        LineVariant::Expert => LineEnv::new(
            LineVariant::Expert,
            3,
            EXPERT_ACTION_GAIN,
            seed,
            "learner-line-same",
        ),
        LineVariant::Permuted(_) => {
            let dim = 2 + 3;
            let perm = seeded_permutation(dim, mix_seed(seed, 0x7065726d));
            LineEnv::new(
                LineVariant::Permuted(perm),
                3,
                EXPERT_ACTION_GAIN,
                seed,
                "learner-line-permuted",
            )
        }
        LineVariant::NegatedScaled => LineEnv::new(
            LineVariant::NegatedScaled,
            3,
            EXPERT_ACTION_GAIN,
            seed,
            "learner-line-negated-scaled",
        ),
        LineVariant::ExtraNuisance => LineEnv::new(
            LineVariant::ExtraNuisance,
            5,
            0.25,
            seed,
            "learner-line-extra-nuisance",
        ),
    }
}

fn seeded_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

impl LineEnv {
    fn new(
        variant: LineVariant,
        nuisance_dims: usize,
        action_gain: f64,
        base_seed: u64,
        name: &str,
    ) -> Self {
        let state_dim = 2 + nuisance_dims;
        LineEnv {
            spec: EnvSpec {
                state_dim,
                action_dim: 1,
                horizon: DEFAULT_HORIZON,
                domain_name: name.to_string(),
            },
            variant,
            nuisance_dims,
            action_gain,
            base_seed,
            canonical: vec![0.0; state_dim],
            rng: ChaCha8Rng::seed_from_u64(base_seed),
        }
    }

    /// Permuted variant with an explicit permutation (`perm[i]` = canonical
    /// index observed at position i).
    pub fn with_permutation(perm: Vec<usize>, nuisance_dims: usize, seed: u64) -> Result<Self> {
        let dim = 2 + nuisance_dims;
        let mut seen = vec![false; dim];
        if perm.len() != dim {
            return Err(Error::dim(dim, perm.len(), "permutation length"));
        }
        for &p in &perm {
            if p >= dim || seen[p] {
                return Err(Error::validation("not a permutation"));
            }
            seen[p] = true;
        }
        Ok(LineEnv::new(
            LineVariant::Permuted(perm),
            nuisance_dims,
            EXPERT_ACTION_GAIN,
            seed,
            "learner-line-permuted",
        ))
    }

    pub fn variant(&self) -> &LineVariant {
        &self.variant
    }

    pub fn nuisance_dims(&self) -> usize {
        self.nuisance_dims
    }

    /// Canonical x recovered from an observation.
    pub fn canonical_x(&self, obs: &StateVector) -> f64 {
        match &self.variant {
            LineVariant::Expert | LineVariant::ExtraNuisance => obs[0],
            LineVariant::Permuted(perm) => {
                let pos = perm.iter().position(|&p| p == 0).expect("0 in permutation");
                obs[pos]
            }
            LineVariant::NegatedScaled => -obs[0] / 2.5,
        }
    }

    fn observe(&self) -> StateVector {
        let obs: Vec<f64> = match &self.variant {
            LineVariant::Expert | LineVariant::ExtraNuisance => self.canonical.clone(),
            LineVariant::Permuted(perm) => perm.iter().map(|&p| self.canonical[p]).collect(),
            LineVariant::NegatedScaled => {
                let mut v = self.canonical.clone();
                v[0] = -2.5 * v[0];
                v
            }
        };
        StateVector::new(obs).expect("canonical state stays finite")
    }

    /// The scripted optimal controller: maximum forward action.
    pub fn scripted_expert_action(&self) -> Vec<f64> {
        vec![1.0]
    }

    /// Maximum canonical progress achievable over `horizon` steps, i.e. the
    /// scripted controller's displacement (direct recurrence evaluation).
    pub fn scripted_progress(&self, horizon: usize) -> f64 {
        let mut x = 0.0;
        let mut v: f64 = 0.0;
        for _ in 0..horizon {
            x += POSITION_STEP * v;
            v = (v + self.action_gain).clamp(-1.0, 1.0);
        }
        x
    }
}

fn reflect(mut v: f64) -> f64 {
    // one reflection suffices for |step| <= 0.5
    if v > 1.0 {
        v = 2.0 - v;
    } else if v < -1.0 {
        v = -2.0 - v;
    }
    v
}

impl Env for LineEnv {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, episode_seed: u64) -> StateVector {
        self.rng = ChaCha8Rng::seed_from_u64(mix_seed(self.base_seed, episode_seed));
        self.canonical[0] = 0.0;
        self.canonical[1] = 0.0;
        for i in 0..self.nuisance_dims {
            self.canonical[2 + i] = self.rng.gen_range(-1.0..1.0);
        }
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> Result<StateVector> {
        if action.len() != 1 {
            return Err(Error::dim(1, action.len(), "line env action"));
        }
        let a = action[0];
        if !a.is_finite() {
            return Err(Error::NonFinite("line env action".into()));
        }
        let x = self.canonical[0];
        let v = self.canonical[1];
        self.canonical[0] = (x + POSITION_STEP * v).max(POSITION_FLOOR);
        self.canonical[1] = (v + self.action_gain * a).clamp(-1.0, 1.0);
        // nuisance walks consume exactly one draw per dim per step,
        // independent of the action
        for i in 0..self.nuisance_dims {
            let step = self.rng.gen_range(-NUISANCE_STEP..NUISANCE_STEP);
            self.canonical[2 + i] = reflect(self.canonical[2 + i] + step);
        }
        Ok(self.observe())
    }

    fn canonical_progress(&self, from: &StateVector, to: &StateVector) -> f64 {
        self.canonical_x(to) - self.canonical_x(from)
    }
}

/// Rolls out the scripted expert for `n_traj` episodes of `horizon` steps.
pub fn gen_expert_demos(
    env: &mut LineEnv,
    n_traj: usize,
    horizon: usize,
    seed: u64,
) -> Result<DemoSet> {
    if n_traj == 0 {
        return Err(Error::config("n_traj must be >= 1"));
    }
    if horizon == 0 {
        return Err(Error::config("horizon must be >= 1"));
    }
    let mut trajectories = Vec::with_capacity(n_traj);
    for i in 0..n_traj {
        let mut states = Vec::with_capacity(horizon + 1);
        let mut s = env.reset(mix_seed(seed, i as u64));
        states.push(s.clone());
        for _ in 0..horizon {
            s = env.step(&env.scripted_expert_action())?;
            states.push(s);
        }
        trajectories.push(Trajectory::new(states)?);
    }
    DemoSet::new(env.spec().domain_name.clone(), seed as i64, trajectories)
}
