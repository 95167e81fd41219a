//! Minimal differentiable-model kit.
//!
//! Two fixed computation graphs: a bounded affine encoder (weights and bias
//! squashed into (-5, 5) through a sigmoid) and a small tanh MLP
//! discriminator with a scalar logit head. Gradients are hand-written
//! reverse mode; [`finite_diff_check`] verifies them against central
//! differences. All parameter states carry their own Adam moments.

mod adam;
mod encoder;
mod findiff;
mod mlp;

pub use adam::{adam_step, AdamMoments, ADAM_BETA1, ADAM_BETA2, ADAM_EPS, DEFAULT_ENCODER_LR};
pub use encoder::{EncoderConfig, EncoderState, WEIGHT_BOUND};
pub use findiff::finite_diff_check;
pub use mlp::{DiscConfig, DiscriminatorState, MlpCache};

use crate::error::{Error, Result};

/// A flat gradient, laid out in the owning state's canonical parameter
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient(pub Vec<f64>);

impl Gradient {
    pub fn zeros(n: usize) -> Self {
        Gradient(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.0.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient for {context}")));
        }
        Ok(())
    }
}

/// Anything with a flat parameter vector and Adam state.
///
/// The flat layout is the contract between gradients, the optimizer and the
/// finite-difference checker; each implementor documents its order.
pub trait Trainable {
    fn param_count(&self) -> usize;
    fn param_vec(&self) -> Vec<f64>;
    fn set_param_vec(&mut self, params: &[f64]);
    fn moments_mut(&mut self) -> &mut AdamMoments;
    fn step_count(&self) -> u64;
    fn bump_step(&mut self);
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
