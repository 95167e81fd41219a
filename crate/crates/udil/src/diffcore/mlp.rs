//! Discriminator MLP: tanh hidden layers, scalar logit head.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AdamMoments, Trainable};
use crate::error::{Error, Result};
use crate::trajstore::StateVector;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscConfig {
    pub input_dim: usize,
    /// Hidden layer widths; empty means a single linear layer.
    pub hidden: Vec<usize>,
}

impl DiscConfig {
    /// The default architecture: input -> 64 -> 64 -> 1, tanh activations.
    pub fn new(input_dim: usize) -> Self {
        DiscConfig {
            input_dim,
            hidden: vec![64, 64],
        }
    }

    pub fn linear(input_dim: usize) -> Self {
        DiscConfig {
            input_dim,
            hidden: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    /// weights[out][in]
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

/// Discriminator parameters plus optimizer state.
///
/// Flat parameter order: layer by layer, weights row-major then bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorState {
    cfg: DiscConfig,
    layers: Vec<Layer>,
    moments: AdamMoments,
    step_count: u64,
}

/// Per-layer pre-activation inputs cached by the forward pass.
pub struct MlpCache {
    /// inputs[l] is the input vector to layer l; inputs.len() == layers + 1,
    /// with the last entry holding the scalar logit.
    inputs: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn logit(&self) -> f64 {
        self.inputs.last().expect("cache populated")[0]
    }
}

impl DiscriminatorState {
    /// Scaled-uniform fan-in init, seeded.
    pub fn init(cfg: DiscConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut fan_in = cfg.input_dim;
        for &width in cfg.hidden.iter().chain(std::iter::once(&1)) {
            let scale = 1.0 / (fan_in as f64).sqrt();
            let w = (0..width)
                .map(|_| (0..fan_in).map(|_| rng.gen_range(-scale..scale)).collect())
                .collect();
            let b = vec![0.0; width];
            layers.push(Layer { w, b });
            fan_in = width;
        }
        let n = param_count(&layers);
        DiscriminatorState {
            cfg,
            layers,
            moments: AdamMoments::zeros(n),
            step_count: 0,
        }
    }

    /// All weights and biases zero (logit identically 0, D = 0.5).
    pub fn zeros(cfg: DiscConfig) -> Self {
        let mut layers = Vec::new();
        let mut fan_in = cfg.input_dim;
        for &width in cfg.hidden.iter().chain(std::iter::once(&1)) {
            layers.push(Layer {
                w: vec![vec![0.0; fan_in]; width],
                b: vec![0.0; width],
            });
            fan_in = width;
        }
        let n = param_count(&layers);
        DiscriminatorState {
            cfg,
            layers,
            moments: AdamMoments::zeros(n),
            step_count: 0,
        }
    }

    pub fn config(&self) -> &DiscConfig {
        &self.cfg
    }

    /// Raw logit for a flat input of width `cfg.input_dim`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        Ok(self.forward_cached(x)?.logit())
    }

    /// Logit for the concatenated pair [z, z'].
    pub fn forward_pair(&self, z: &StateVector, zp: &StateVector) -> Result<f64> {
        if z.dim() + zp.dim() != self.cfg.input_dim {
            return Err(Error::dim(
                self.cfg.input_dim,
                z.dim() + zp.dim(),
                "discriminator pair input",
            ));
        }
        let mut x = Vec::with_capacity(self.cfg.input_dim);
        x.extend_from_slice(z.values());
        x.extend_from_slice(zp.values());
        self.forward(&x)
    }

    /// Forward pass that keeps every layer input for backprop.
    pub fn forward_cached(&self, x: &[f64]) -> Result<MlpCache> {
        if x.len() != self.cfg.input_dim {
            return Err(Error::dim(self.cfg.input_dim, x.len(), "discriminator input"));
        }
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        inputs.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let cur = inputs.last().expect("non-empty");
            let mut out = Vec::with_capacity(layer.w.len());
            for (row, bias) in layer.w.iter().zip(&layer.b) {
                let mut acc = *bias;
                for (wij, xj) in row.iter().zip(cur.iter()) {
                    acc += wij * xj;
                }
                if !acc.is_finite() {
                    return Err(Error::NonFinite(format!("discriminator layer {l}")));
                }
                out.push(if l == last { acc } else { acc.tanh() });
            }
            inputs.push(out);
        }
        Ok(MlpCache { inputs })
    }

    /// Backprop from dLoss/dlogit. Accumulates parameter gradients into
    /// `grad` (flat layout) and returns dLoss/dinput.
    pub(crate) fn backward(&self, cache: &MlpCache, dlogit: f64, grad: &mut [f64]) -> Vec<f64> {
        debug_assert_eq!(grad.len(), param_count(&self.layers));
        let last = self.layers.len() - 1;
        // delta w.r.t. the layer's (post-activation) output
        let mut delta = vec![dlogit];
        let mut offset = grad.len();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &cache.inputs[l];
            let output = &cache.inputs[l + 1];
            let n_out = layer.w.len();
            let n_in = input.len();
            offset -= n_out * n_in + n_out;

            // chain through tanh (hidden layers only; the head is linear)
            let mut dpre = delta;
            if l != last {
                for (d, &y) in dpre.iter_mut().zip(output.iter()) {
                    *d *= 1.0 - y * y;
                }
            }

            for i in 0..n_out {
                let row_off = offset + i * n_in;
                for j in 0..n_in {
                    grad[row_off + j] += dpre[i] * input[j];
                }
                grad[offset + n_out * n_in + i] += dpre[i];
            }

            let mut dinput = vec![0.0; n_in];
            for i in 0..n_out {
                for j in 0..n_in {
                    dinput[j] += dpre[i] * layer.w[i][j];
                }
            }
            delta = dinput;
        }
        delta
    }
}

fn param_count(layers: &[Layer]) -> usize {
    layers
        .iter()
        .map(|l| l.w.len() * l.w[0].len() + l.b.len())
        .sum()
}

impl Trainable for DiscriminatorState {
    fn param_count(&self) -> usize {
        param_count(&self.layers)
    }

    fn param_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            for row in &layer.w {
                v.extend_from_slice(row);
            }
            v.extend_from_slice(&layer.b);
        }
        v
    }

    fn set_param_vec(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let mut it = params.iter();
        for layer in &mut self.layers {
            for row in &mut layer.w {
                for w in row.iter_mut() {
                    *w = *it.next().unwrap();
                }
            }
            for b in &mut layer.b {
                *b = *it.next().unwrap();
            }
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
