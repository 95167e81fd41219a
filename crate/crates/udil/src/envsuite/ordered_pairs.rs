//! Ordered uniform pairs on the unit square.
//!
//! Expert pairs satisfy z' < z, learner pairs z' > z; both are obtained by
//! rejection sampling from U([0,1]^2). These two minimal distributions are
//! the substrate for analysing what a time-invariant encoder can and cannot
//! express.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Which ordering constraint a pair set satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSide {
    /// z' < z for every pair.
    Expert,
    /// z' > z for every pair.
    Learner,
}

/// A set of ordered pairs in the unit square.
#[derive(Debug, Clone)]
pub struct OrderedPairsSet {
    pub pairs: Vec<(f64, f64)>,
    pub side: PairSide,
}

/// Rejection-samples `n` pairs obeying the side's ordering constraint.
pub fn make_ordered_pairs(n: usize, side: PairSide, seed: u64) -> Result<OrderedPairsSet> {
    make_ordered_pairs_with_stats(n, side, seed).map(|(set, _)| set)
}

/// Same as [`make_ordered_pairs`] but also reports the total number of
/// candidate draws, so the acceptance rate is observable.
pub fn make_ordered_pairs_with_stats(
    n: usize,
    side: PairSide,
    seed: u64,
) -> Result<(OrderedPairsSet, u64)> {
    if n == 0 {
        return Err(Error::config("n must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n);
    let mut draws = 0u64;
    while pairs.len() < n {
        let z: f64 = rng.gen_range(0.0..1.0);
        let zp: f64 = rng.gen_range(0.0..1.0);
        draws += 1;
        let ok = match side {
            PairSide::Expert => zp < z,
            PairSide::Learner => zp > z,
        };
        if ok {
            pairs.push((z, zp));
        }
    }
    debug_assert!(pairs.iter().all(|&(z, zp)| match side {
        PairSide::Expert => zp < z,
        PairSide::Learner => zp > z,
    }));
    Ok((OrderedPairsSet { pairs, side }, draws))
}
