//! Adaptive-moment parameter updates.

use serde::{Deserialize, Serialize};

use super::{Gradient, Trainable};
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;
pub const DEFAULT_ENCODER_LR: f64 = 0.001;

/// First and second moment accumulators, shaped like the flat parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamMoments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamMoments {
    pub fn zeros(n: usize) -> Self {
        AdamMoments {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

/// One bias-corrected Adam step; increments the state's step count.
pub fn adam_step<P: Trainable>(params: &mut P, grad: &Gradient, lr: f64) -> Result<()> {
    if lr <= 0.0 {
        return Err(Error::config("learning rate must be > 0"));
    }
    if grad.len() != params.param_count() {
        return Err(Error::dim(params.param_count(), grad.len(), "gradient"));
    }
    grad.check_finite("adam_step")?;

    params.bump_step();
    let t = params.step_count() as i32;
    let mut theta = params.param_vec();
    {
        let moments = params.moments_mut();
        let bc1 = 1.0 - ADAM_BETA1.powi(t);
        let bc2 = 1.0 - ADAM_BETA2.powi(t);
        for i in 0..theta.len() {
            let g = grad.0[i];
            moments.m[i] = ADAM_BETA1 * moments.m[i] + (1.0 - ADAM_BETA1) * g;
            moments.v[i] = ADAM_BETA2 * moments.v[i] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = moments.m[i] / bc1;
            let v_hat = moments.v[i] / bc2;
            theta[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
    params.set_param_vec(&theta);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::{EncoderConfig, EncoderState};

    #[test]
    fn zero_gradient_leaves_fresh_state_unchanged() {
        let cfg = EncoderConfig::new(3, 2);
        let mut enc = EncoderState::init(cfg, 0);
        let before = enc.param_vec();
        let g = Gradient::zeros(enc.param_count());
        adam_step(&mut enc, &g, 0.001).unwrap();
        assert_eq!(enc.param_vec(), before);
        assert_eq!(enc.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let cfg = EncoderConfig::new(2, 1);
        let mut enc = EncoderState::zeros(cfg);
        let before = enc.param_vec();
        let mut g = Gradient::zeros(enc.param_count());
        g.0[0] = 0.37;
        g.0[1] = -4.1;
        let lr = 0.01;
        adam_step(&mut enc, &g, lr).unwrap();
        let after = enc.param_vec();
        // bias-corrected first step is -lr * g / (|g| + eps) ~= -lr * sign(g)
        assert!((after[0] - (before[0] - lr)).abs() < 1e-6);
        assert!((after[1] - (before[1] + lr)).abs() < 1e-6);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let cfg = EncoderConfig::new(1, 1);
        let mut enc = EncoderState::zeros(cfg);
        let mut g = Gradient::zeros(enc.param_count());
        g.0[0] = f64::NAN;
        assert!(adam_step(&mut enc, &g, 0.001).is_err());
    }

    #[test]
    fn invalid_lr_rejected() {
        let cfg = EncoderConfig::new(1, 1);
        let mut enc = EncoderState::zeros(cfg);
        let g = Gradient::zeros(enc.param_count());
        assert!(adam_step(&mut enc, &g, 0.0).is_err());
        assert!(adam_step(&mut enc, &g, -1.0).is_err());
    }
}
