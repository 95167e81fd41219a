//! Finite MDPs with an exact discounted-occupancy solver.
//!
//! The grid chain couples a deterministic 1-D chain position with an
//! action-independent uniformly-resampled nuisance tag. The solver computes
//! the discounted state visitation by a direct linear solve and composes it
//! with the policy kernel into the joint occupancy over state pairs, which
//! is the exact substrate for checking that rewards defined on a projection
//! of the state can be evaluated on the marginalized occupancy.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A finite MDP with dense transition kernels `p[s][a][s']` and an initial
/// state distribution.
#[derive(Debug, Clone)]
pub struct FiniteMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub p: Vec<Vec<Vec<f64>>>,
    pub initial: Vec<f64>,
}

impl FiniteMdp {
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::validation("MDP needs states and actions"));
        }
        if self.p.len() != self.n_states || self.initial.len() != self.n_states {
            return Err(Error::validation("MDP table sizes inconsistent"));
        }
        for row in &self.p {
            if row.len() != self.n_actions {
                return Err(Error::validation("MDP action table sizes inconsistent"));
            }
            for kernel in row {
                let sum: f64 = kernel.iter().sum();
                if kernel.len() != self.n_states || (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::validation("transition kernel must sum to 1"));
                }
            }
        }
        let zeta: f64 = self.initial.iter().sum();
        if (zeta - 1.0).abs() > 1e-12 {
            return Err(Error::validation("initial distribution must sum to 1"));
        }
        Ok(())
    }
}

/// Chain-with-nuisance MDP. State index = chain * nuisance_levels + tag.
#[derive(Debug, Clone)]
pub struct GridChain {
    pub mdp: FiniteMdp,
    pub n_chain: usize,
    pub nuisance_levels: usize,
    pub gamma: f64,
}

impl GridChain {
    pub fn chain_pos(&self, state: usize) -> usize {
        state / self.nuisance_levels
    }

    pub fn nuisance_tag(&self, state: usize) -> usize {
        state % self.nuisance_levels
    }
}

/// Builds the chain: actions {0: left, 1: right} move the position
/// deterministically with clamping at the ends; the nuisance tag is
/// resampled uniformly, independent of the action; the initial distribution
/// is uniform.
pub fn make_grid_chain(n_states: usize, nuisance_levels: usize, gamma: f64) -> Result<GridChain> {
    if n_states < 2 {
        return Err(Error::config("n_states must be >= 2"));
    }
    if nuisance_levels == 0 {
        return Err(Error::config("nuisance_levels must be >= 1"));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::config("gamma must be in [0, 1)"));
    }
    let total = n_states * nuisance_levels;
    let u_prob = 1.0 / nuisance_levels as f64;
    let mut p = vec![vec![vec![0.0; total]; 2]; total];
    for c in 0..n_states {
        for u in 0..nuisance_levels {
            let s = c * nuisance_levels + u;
            for (a, delta) in [(0usize, -1isize), (1usize, 1isize)] {
                let c_next = (c as isize + delta).clamp(0, n_states as isize - 1) as usize;
                for u_next in 0..nuisance_levels {
                    p[s][a][c_next * nuisance_levels + u_next] += u_prob;
                }
            }
        }
    }
    let initial = vec![1.0 / total as f64; total];
    let mdp = FiniteMdp {
        n_states: total,
        n_actions: 2,
        p,
        initial,
    };
    mdp.validate()?;
    Ok(GridChain {
        mdp,
        n_chain: n_states,
        nuisance_levels,
        gamma,
    })
}

/// Exact discounted occupancy of a finite MDP under a stochastic policy.
#[derive(Debug, Clone)]
pub struct Occupancy {
    /// Discounted visitation v(s) = sum_t gamma^t P(s_t = s); sums to 1/(1-gamma).
    pub visitation: Vec<f64>,
    /// Joint pair occupancy rho(s, s') = v(s) * P_pi(s'|s); same total mass.
    pub pair: Vec<Vec<f64>>,
    pub gamma: f64,
}

impl Occupancy {
    /// Pair occupancy scaled to sum to exactly 1.
    pub fn normalized_pair(&self) -> Vec<Vec<f64>> {
        let scale = 1.0 - self.gamma;
        self.pair
            .iter()
            .map(|row| row.iter().map(|v| v * scale).collect())
            .collect()
    }
}

/// Solves (I - gamma * P_pi^T) v = zeta directly, then composes with the
/// policy kernel. `policy[s][a]` are action probabilities.
pub fn exact_occupancy(mdp: &FiniteMdp, policy: &[Vec<f64>], gamma: f64) -> Result<Occupancy> {
    mdp.validate()?;
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::config("gamma must be in [0, 1)"));
    }
    if policy.len() != mdp.n_states {
        return Err(Error::dim(mdp.n_states, policy.len(), "policy table"));
    }
    for row in policy {
        let sum: f64 = row.iter().sum();
        if row.len() != mdp.n_actions || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::validation("policy row must sum to 1"));
        }
    }

    let n = mdp.n_states;
    // P_pi(s'|s)
    let mut kernel = vec![vec![0.0; n]; n];
    for s in 0..n {
        for a in 0..mdp.n_actions {
            let pa = policy[s][a];
            if pa == 0.0 {
                continue;
            }
            for s_next in 0..n {
                kernel[s][s_next] += pa * mdp.p[s][a][s_next];
            }
        }
    }

    // (I - gamma * K^T) v = zeta
    let mut m = DMatrix::<f64>::identity(n, n);
    for s in 0..n {
        for s_next in 0..n {
            m[(s_next, s)] -= gamma * kernel[s][s_next];
        }
    }
    let zeta = DVector::from_iterator(n, mdp.initial.iter().copied());
    let visitation = m
        .lu()
        .solve(&zeta)
        .ok_or_else(|| Error::validation("singular visitation system"))?;

    let mut pair = vec![vec![0.0; n]; n];
    for s in 0..n {
        for s_next in 0..n {
            pair[s][s_next] = visitation[s] * kernel[s][s_next];
        }
    }
    Ok(Occupancy {
        visitation: visitation.iter().copied().collect(),
        pair,
        gamma,
    })
}

/// Both routes of the expected-reward computation.
#[derive(Debug, Clone, Copy)]
pub struct RewardComparison {
    /// Full-state occupancy times reward.
    pub full: f64,
    /// Marginalized (chain-only) occupancy times reward.
    pub embedded: f64,
}

impl RewardComparison {
    pub fn agree(&self, tol: f64) -> bool {
        (self.full - self.embedded).abs() <= tol
    }
}

/// Computes the expected reward two ways on a grid chain: (a) the full-state
/// pair occupancy against `full_reward(s, s')`, and (b) the occupancy
/// marginalized over nuisance tags against `embedded_reward(c, c')`. When
/// the full reward genuinely depends only on chain positions the two are
/// equal.
pub fn reward_equivalence(
    chain: &GridChain,
    policy: &[Vec<f64>],
    gamma: f64,
    full_reward: impl Fn(usize, usize) -> f64,
    embedded_reward: impl Fn(usize, usize) -> f64,
) -> Result<RewardComparison> {
    let occ = exact_occupancy(&chain.mdp, policy, gamma)?;
    let n = chain.mdp.n_states;

    let mut full = 0.0;
    for s in 0..n {
        for s_next in 0..n {
            full += occ.pair[s][s_next] * full_reward(s, s_next);
        }
    }

    // marginalize over (u, u')
    let mut marginal = vec![vec![0.0; chain.n_chain]; chain.n_chain];
    for s in 0..n {
        for s_next in 0..n {
            marginal[chain.chain_pos(s)][chain.chain_pos(s_next)] += occ.pair[s][s_next];
        }
    }
    let mut embedded = 0.0;
    for c in 0..chain.n_chain {
        for c_next in 0..chain.n_chain {
            embedded += marginal[c][c_next] * embedded_reward(c, c_next);
        }
    }

    Ok(RewardComparison { full, embedded })
}

/// Convenience wrapper for rewards that are declared to be functions of the
/// chain positions only: evaluates [`reward_equivalence`] with the same
/// function on both routes and reports whether the identity holds.
pub fn reward_equivalence_check(
    chain: &GridChain,
    policy: &[Vec<f64>],
    gamma: f64,
    reward_on_embedded: impl Fn(usize, usize) -> f64,
) -> Result<(RewardComparison, bool)> {
    let cmp = reward_equivalence(
        chain,
        policy,
        gamma,
        |s, s_next| reward_on_embedded(chain.chain_pos(s), chain.chain_pos(s_next)),
        &reward_on_embedded,
    )?;
    let ok = cmp.agree(1e-12);
    Ok((cmp, ok))
}
