//! Cross-domain imitation learning from state-only demonstrations.
//!
//! The toolkit covers the full pipeline on desk-scale toy domains:
//!
//! 1. [`trajstore`] — demonstration data model and JSONL file I/O.
//! 2. [`miembed`] — task-relevant embedding discovery: pseudo-random
//!    transitions, per-dimension kNN mutual information, cumulative curve,
//!    elbow selection and the resulting projection.
//! 3. [`diffcore`] — bounded affine encoder, MLP discriminator, manual
//!    reverse-mode gradients, Adam and finite-difference verification.
//! 4. [`policy`] — linear-Gaussian controller, rollouts and a
//!    cross-entropy-method optimizer.
//! 5. [`envsuite`] — toy cross-domain environments, scripted experts,
//!    ordered-pair constructions and exact occupancy oracles for finite MDPs.
//! 6. [`adversary`] — the adversarial objective: discriminator/encoder
//!    losses, reward synthesis, goal-distance rewards, histogram
//!    Jensen-Shannon divergence and the joint training loop.
//!
//! Everything is deterministic given explicit seeds; all numerics are `f64`.

pub mod adversary;
pub mod diffcore;
pub mod envsuite;
pub mod error;
pub mod miembed;
pub mod policy;
pub mod trajstore;

pub use error::{Error, Result};
