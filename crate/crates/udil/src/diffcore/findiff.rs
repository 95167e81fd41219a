//! Central-difference verification of analytic gradients.

use super::{Gradient, Trainable};
use crate::error::{Error, Result};

/// Compares an analytic gradient against central finite differences of
/// `loss_fn`, coordinate by coordinate, and returns the maximum relative
/// error with denominator `max(|analytic|, |numeric|, 1e-8)`.
pub fn finite_diff_check<P, F>(params: &P, analytic: &Gradient, loss_fn: F, eps: f64) -> Result<f64>
where
    P: Trainable + Clone,
    F: Fn(&P) -> f64,
{
    if eps <= 0.0 {
        return Err(Error::config("finite-difference eps must be > 0"));
    }
    if analytic.len() != params.param_count() {
        return Err(Error::dim(params.param_count(), analytic.len(), "gradient"));
    }
    let theta = params.param_vec();
    let mut max_rel = 0.0f64;
    for i in 0..theta.len() {
        let mut probe = params.clone();
        let mut t = theta.clone();
        t[i] = theta[i] + eps;
        probe.set_param_vec(&t);
        let plus = loss_fn(&probe);
        t[i] = theta[i] - eps;
        probe.set_param_vec(&t);
        let minus = loss_fn(&probe);
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic.0[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::{EncoderConfig, EncoderState};

    #[test]
    fn quadratic_loss_is_exact_up_to_roundoff() {
        let enc = EncoderState::init(EncoderConfig::new(2, 2).with_bias(true), 1);
        let theta = enc.param_vec();
        let analytic = Gradient(theta.iter().map(|t| 2.0 * t).collect());
        let loss = |p: &EncoderState| p.param_vec().iter().map(|t| t * t).sum::<f64>();
        let err = finite_diff_check(&enc, &analytic, loss, 1e-5).unwrap();
        assert!(err < 1e-8, "err = {err}");
    }

    #[test]
    fn zero_eps_rejected() {
        let enc = EncoderState::zeros(EncoderConfig::new(1, 1));
        let g = Gradient::zeros(enc.param_count());
        assert!(finite_diff_check(&enc, &g, |_| 0.0, 0.0).is_err());
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let enc = EncoderState::init(EncoderConfig::new(2, 1), 4);
        let g = Gradient::zeros(enc.param_count());
        let err = finite_diff_check(&enc, &g, |_| 42.0, 1e-5).unwrap();
        assert_eq!(err, 0.0);
    }
}
