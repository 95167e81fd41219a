//! Toy cross-domain environments and exact analysis oracles.
//!
//! The line environments are stand-ins for locomotion tasks: progress along
//! one canonical axis, a saturating velocity, and action-independent nuisance
//! dimensions. Learner variants observe the same canonical dynamics through
//! an affine/permuted lens, so a bounded affine encoder can recover the
//! expert view. The module also provides the ordered-pair construction used
//! to analyse time-invariance, and a small finite MDP with an exact
//! discounted-occupancy solver.

mod grid_chain;
mod line;
mod ordered_pairs;

pub use grid_chain::{
    exact_occupancy, make_grid_chain, reward_equivalence, reward_equivalence_check, FiniteMdp,
    GridChain, Occupancy, RewardComparison,
};
pub use line::{gen_expert_demos, make_expert_line, make_learner_line, LineEnv, LineVariant};
pub use ordered_pairs::{
    make_ordered_pairs, make_ordered_pairs_with_stats, OrderedPairsSet, PairSide,
};

use crate::error::Result;
use crate::trajstore::StateVector;

/// Static description of an environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub state_dim: usize,
    pub action_dim: usize,
    pub horizon: usize,
    pub domain_name: String,
}

/// An expert/learner environment pairing with the shared evaluation reward.
#[derive(Debug, Clone)]
pub struct DomainPair {
    pub expert_env: EnvSpec,
    pub learner_env: EnvSpec,
    /// Name of the reward computable in both domains in canonical units.
    pub true_reward_name: String,
}

/// A resettable, seeded environment.
///
/// `reset(seed)` fully determines all randomness of the episode; nuisance
/// processes never consume action-dependent entropy, so changing the action
/// sequence leaves them bit-identical.
pub trait Env {
    fn spec(&self) -> &EnvSpec;

    /// Starts a new episode and returns the initial observation.
    fn reset(&mut self, episode_seed: u64) -> StateVector;

    /// Advances one step and returns the next observation.
    fn step(&mut self, action: &[f64]) -> Result<StateVector>;

    /// True evaluation reward in canonical units for one observed transition.
    fn canonical_progress(&self, from: &StateVector, to: &StateVector) -> f64;
}

/// splitmix64; used to derive independent stream seeds.
pub(crate) fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
