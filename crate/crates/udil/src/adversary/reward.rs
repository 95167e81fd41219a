//! Reward synthesis for the policy: adversarial and goal-distance modes.

use crate::diffcore::{DiscriminatorState, EncoderState};
use crate::error::Result;
use crate::miembed::EmbeddingSpec;
use crate::trajstore::{DemoSet, StateVector, Transition};

use super::losses::{pair_disc_input, single_disc_input, PROB_CLAMP};

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// r = -log D on the encoded transition, D clamped to
/// [PROB_CLAMP, 1 - PROB_CLAMP]. Under the D->1-on-learner convention,
/// fooling the discriminator (small D) earns a large reward; the range is
/// [-log(1 - 1e-6), -log 1e-6], about [1e-6, 13.8155].
pub fn synthesize_reward(
    d: &DiscriminatorState,
    enc: &EncoderState,
    t: &Transition,
    pair_input: bool,
) -> Result<f64> {
    let x = if pair_input {
        let (z, zp) = enc.apply_pair(t)?;
        pair_disc_input(&z, &zp)
    } else {
        single_disc_input(&enc.apply(&t.to)?)
    };
    let p = sigmoid(d.forward(&x)?).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    Ok(-p.ln())
}

/// Mean embedded terminal state over all demonstration trajectories.
pub fn compute_goal_state(demos: &DemoSet, embedding: &EmbeddingSpec) -> Result<StateVector> {
    let m = embedding.out_dim();
    let mut acc = vec![0.0; m];
    for traj in demos.trajectories() {
        let z = embedding.project(traj.last())?;
        for (a, v) in acc.iter_mut().zip(z.values()) {
            *a += v;
        }
    }
    let n = demos.n_trajectories() as f64;
    StateVector::new(acc.into_iter().map(|a| a / n).collect())
}

/// r = -|| enc(s) - goal ||_2 in the embedded space.
pub fn goal_distance_reward(
    goal: &StateVector,
    enc: &EncoderState,
    s: &StateVector,
) -> Result<f64> {
    let z = enc.apply(s)?;
    if z.dim() != goal.dim() {
        return Err(crate::error::Error::dim(
            goal.dim(),
            z.dim(),
            "goal distance",
        ));
    }
    let dist_sq: f64 = z
        .values()
        .iter()
        .zip(goal.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(-dist_sq.sqrt())
}
