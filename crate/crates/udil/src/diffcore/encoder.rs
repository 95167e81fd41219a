//! Bounded affine encoder.
//!
//! Effective weights and bias are `10 * (sigmoid(raw) - 0.5)`, so every
//! effective coefficient lies strictly inside (-5, 5) for any raw value.
//! The encoder is applied independently at both endpoints of a transition;
//! there are no pair-level parameters, which is the time-invariance
//! property everything downstream relies on.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, AdamMoments, Trainable};
use crate::error::{Error, Result};
use crate::trajstore::{StateVector, Transition};

/// Magnitude bound on effective weights and bias.
pub const WEIGHT_BOUND: f64 = 5.0;

/// Raw value whose effective weight is exactly 1 (sigma(ln 1.5) = 0.6).
const RAW_IDENTITY: f64 = 0.405_465_108_108_164_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub n_in: usize,
    pub m_out: usize,
    pub use_bias: bool,
    /// Restrict the effective matrix to its diagonal (off-diagonal
    /// coefficients are exactly 0 and receive no gradient).
    pub diagonal: bool,
}

impl EncoderConfig {
    pub fn new(n_in: usize, m_out: usize) -> Self {
        EncoderConfig {
            n_in,
            m_out,
            use_bias: false,
            diagonal: false,
        }
    }

    pub fn with_bias(mut self, use_bias: bool) -> Self {
        self.use_bias = use_bias;
        self
    }

    pub fn with_diagonal(mut self, diagonal: bool) -> Self {
        self.diagonal = diagonal;
        self
    }
}

/// Parameters of the learner encoder plus its optimizer state.
///
/// Flat parameter order: raw weights row-major, then raw bias. The bias
/// slots always exist so the layout does not depend on `use_bias`; with
/// `use_bias` off they contribute nothing and get zero gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderState {
    cfg: EncoderConfig,
    raw_weights: Vec<Vec<f64>>,
    raw_bias: Vec<f64>,
    moments: AdamMoments,
    step_count: u64,
}

fn bound(raw: f64) -> f64 {
    // In deep saturation sigmoid(raw) rounds to exactly 0 or 1, which would
    // put the effective value ON the bound; clamp to the adjacent float so
    // the open interval holds for every raw value.
    let max_eff = f64::from_bits(WEIGHT_BOUND.to_bits() - 1);
    (10.0 * (sigmoid(raw) - 0.5)).clamp(-max_eff, max_eff)
}

/// d(bound)/d(raw) = 10 * sigma'(raw).
fn bound_grad(raw: f64) -> f64 {
    let s = sigmoid(raw);
    10.0 * s * (1.0 - s)
}

impl EncoderState {
    /// Seeded init: raw parameters uniform in (-0.1, 0.1).
    pub fn init(cfg: EncoderConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw_weights = (0..cfg.m_out)
            .map(|_| (0..cfg.n_in).map(|_| rng.gen_range(-0.1..0.1)).collect())
            .collect();
        let raw_bias = (0..cfg.m_out).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let n = cfg.m_out * cfg.n_in + cfg.m_out;
        EncoderState {
            cfg,
            raw_weights,
            raw_bias,
            moments: AdamMoments::zeros(n),
            step_count: 0,
        }
    }

    /// All raw parameters zero: the effective map is identically zero.
    pub fn zeros(cfg: EncoderConfig) -> Self {
        let n = cfg.m_out * cfg.n_in + cfg.m_out;
        EncoderState {
            raw_weights: vec![vec![0.0; cfg.n_in]; cfg.m_out],
            raw_bias: vec![0.0; cfg.m_out],
            cfg,
            moments: AdamMoments::zeros(n),
            step_count: 0,
        }
    }

    /// Square encoder whose effective map is the identity (up to f64
    /// rounding of sigma(ln 1.5) = 0.6).
    pub fn identity(n: usize) -> Self {
        let mut enc = EncoderState::zeros(EncoderConfig::new(n, n));
        for i in 0..n {
            enc.raw_weights[i][i] = RAW_IDENTITY;
        }
        enc
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.cfg
    }

    pub fn raw_weights(&self) -> &[Vec<f64>] {
        &self.raw_weights
    }

    /// Effective weight matrix after the sigmoid bound (and diagonal mask).
    pub fn effective_weights(&self) -> Vec<Vec<f64>> {
        (0..self.cfg.m_out)
            .map(|i| {
                (0..self.cfg.n_in)
                    .map(|j| {
                        if self.cfg.diagonal && i != j {
                            0.0
                        } else {
                            bound(self.raw_weights[i][j])
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Effective bias; exactly zero when `use_bias` is off.
    pub fn effective_bias(&self) -> Vec<f64> {
        if self.cfg.use_bias {
            self.raw_bias.iter().map(|&r| bound(r)).collect()
        } else {
            vec![0.0; self.cfg.m_out]
        }
    }

    /// z = W_eff * s + b_eff.
    pub fn apply(&self, s: &StateVector) -> Result<StateVector> {
        if s.dim() != self.cfg.n_in {
            return Err(Error::dim(self.cfg.n_in, s.dim(), "encoder input"));
        }
        let w = self.effective_weights();
        let b = self.effective_bias();
        let mut z = vec![0.0; self.cfg.m_out];
        for i in 0..self.cfg.m_out {
            let mut acc = b[i];
            for j in 0..self.cfg.n_in {
                acc += w[i][j] * s[j];
            }
            z[i] = acc;
        }
        StateVector::new(z)
    }

    /// Applies the same encoder independently at both endpoints.
    pub fn apply_pair(&self, t: &Transition) -> Result<(StateVector, StateVector)> {
        Ok((self.apply(&t.from)?, self.apply(&t.to)?))
    }

    /// Accumulates dLoss/draw into `grad` given dLoss/dz at one input.
    /// `grad` must be laid out in the flat parameter order.
    pub(crate) fn accumulate_input_grad(&self, s: &StateVector, dz: &[f64], grad: &mut [f64]) {
        let nw = self.cfg.m_out * self.cfg.n_in;
        for i in 0..self.cfg.m_out {
            for j in 0..self.cfg.n_in {
                if self.cfg.diagonal && i != j {
                    continue;
                }
                let idx = i * self.cfg.n_in + j;
                grad[idx] += dz[i] * s[j] * bound_grad(self.raw_weights[i][j]);
            }
            if self.cfg.use_bias {
                grad[nw + i] += dz[i] * bound_grad(self.raw_bias[i]);
            }
        }
    }
}

impl Trainable for EncoderState {
    fn param_count(&self) -> usize {
        self.cfg.m_out * self.cfg.n_in + self.cfg.m_out
    }

    fn param_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for row in &self.raw_weights {
            v.extend_from_slice(row);
        }
        v.extend_from_slice(&self.raw_bias);
        v
    }

    fn set_param_vec(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let mut it = params.iter();
        for row in &mut self.raw_weights {
            for w in row.iter_mut() {
                *w = *it.next().unwrap();
            }
        }
        for b in &mut self.raw_bias {
            *b = *it.next().unwrap();
        }
    }

    fn moments_mut(&mut self) -> &mut AdamMoments {
        &mut self.moments
    }

    fn step_count(&self) -> u64 {
        self.step_count
    }

    fn bump_step(&mut self) {
        self.step_count += 1;
    }
}
