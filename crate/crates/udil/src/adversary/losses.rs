//! Discriminator and encoder losses with analytic gradients.

use crate::diffcore::{DiscriminatorState, EncoderState, Gradient, Trainable};
use crate::error::{Error, Result};
use crate::trajstore::{StateVector, Transition};

/// Probabilities are clamped to [PROB_CLAMP, 1 - PROB_CLAMP] so the log
/// terms stay finite.
pub const PROB_CLAMP: f64 = 1e-6;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

fn in_clamp_range(p: f64) -> bool {
    p > PROB_CLAMP && p < 1.0 - PROB_CLAMP
}

/// Discriminator input for a pair of embedded states: [z, z'].
pub fn pair_disc_input(z: &StateVector, zp: &StateVector) -> Vec<f64> {
    let mut x = Vec::with_capacity(z.dim() + zp.dim());
    x.extend_from_slice(z.values());
    x.extend_from_slice(zp.values());
    x
}

/// Discriminator input in the no-pair ablation: the current state alone.
pub fn single_disc_input(z: &StateVector) -> Vec<f64> {
    z.values().to_vec()
}

/// -( mean log D(learner) + mean log(1 - D(expert)) ).
///
/// The discriminator minimizes this, driving D toward 1 on learner inputs
/// and 0 on expert inputs. Inputs are pre-built flat vectors (see
/// [`pair_disc_input`]).
pub fn discriminator_loss(
    d: &DiscriminatorState,
    learner_inputs: &[Vec<f64>],
    expert_inputs: &[Vec<f64>],
) -> Result<f64> {
    if learner_inputs.is_empty() || expert_inputs.is_empty() {
        return Err(Error::validation("discriminator batch must be non-empty"));
    }
    let mut learner_term = 0.0;
    for x in learner_inputs {
        let p = clamp_prob(sigmoid(d.forward(x)?));
        learner_term += p.ln();
    }
    let mut expert_term = 0.0;
    for x in expert_inputs {
        let p = clamp_prob(sigmoid(d.forward(x)?));
        expert_term += (1.0 - p).ln();
    }
    Ok(-(learner_term / learner_inputs.len() as f64 + expert_term / expert_inputs.len() as f64))
}

/// [`discriminator_loss`] plus its exact gradient w.r.t. the discriminator
/// parameters.
pub fn discriminator_loss_grad(
    d: &DiscriminatorState,
    learner_inputs: &[Vec<f64>],
    expert_inputs: &[Vec<f64>],
) -> Result<(f64, Gradient)> {
    if learner_inputs.is_empty() || expert_inputs.is_empty() {
        return Err(Error::validation("discriminator batch must be non-empty"));
    }
    let mut grad = Gradient::zeros(d.param_count());
    let n_l = learner_inputs.len() as f64;
    let n_e = expert_inputs.len() as f64;
    let mut loss = 0.0;
    for x in learner_inputs {
        let cache = d.forward_cached(x)?;
        let s = sigmoid(cache.logit());
        loss -= clamp_prob(s).ln() / n_l;
        // d(-ln D)/dlogit = -(1 - D); zero in the clamped region
        let dlogit = if in_clamp_range(s) { -(1.0 - s) / n_l } else { 0.0 };
        d.backward(&cache, dlogit, &mut grad.0);
    }
    for x in expert_inputs {
        let cache = d.forward_cached(x)?;
        let s = sigmoid(cache.logit());
        loss -= (1.0 - clamp_prob(s)).ln() / n_e;
        // d(-ln(1 - D))/dlogit = D
        let dlogit = if in_clamp_range(s) { s / n_e } else { 0.0 };
        d.backward(&cache, dlogit, &mut grad.0);
    }
    grad.check_finite("discriminator loss")?;
    Ok((loss, grad))
}

/// mean log D over encoded learner transitions; minimizing drives the
/// discriminator's view of learner pairs toward the expert label.
pub fn encoder_loss(
    d: &DiscriminatorState,
    enc: &EncoderState,
    batch: &[Transition],
    pair_input: bool,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::validation("encoder batch must be non-empty"));
    }
    let mut acc = 0.0;
    for t in batch {
        let x = encode_input(enc, t, pair_input)?;
        let p = clamp_prob(sigmoid(d.forward(&x)?));
        acc += p.ln();
    }
    Ok(acc / batch.len() as f64)
}

/// [`encoder_loss`] plus its exact gradient w.r.t. the encoder's raw
/// parameters (through the discriminator inputs).
pub fn encoder_loss_grad(
    d: &DiscriminatorState,
    enc: &EncoderState,
    batch: &[Transition],
    pair_input: bool,
) -> Result<(f64, Gradient)> {
    if batch.is_empty() {
        return Err(Error::validation("encoder batch must be non-empty"));
    }
    let m = enc.config().m_out;
    let n = batch.len() as f64;
    let mut grad = Gradient::zeros(enc.param_count());
    let mut disc_scratch = vec![0.0; d.param_count()];
    let mut loss = 0.0;
    for t in batch {
        let x = encode_input(enc, t, pair_input)?;
        let cache = d.forward_cached(&x)?;
        let s = sigmoid(cache.logit());
        loss += clamp_prob(s).ln() / n;
        // d(mean ln D)/dlogit = (1 - D) / n
        let dlogit = if in_clamp_range(s) { (1.0 - s) / n } else { 0.0 };
        let dinput = d.backward(&cache, dlogit, &mut disc_scratch);
        if pair_input {
            enc.accumulate_input_grad(&t.from, &dinput[..m], &mut grad.0);
            enc.accumulate_input_grad(&t.to, &dinput[m..], &mut grad.0);
        } else {
            enc.accumulate_input_grad(&t.to, &dinput[..m], &mut grad.0);
        }
    }
    grad.check_finite("encoder loss")?;
    Ok((loss, grad))
}

fn encode_input(enc: &EncoderState, t: &Transition, pair_input: bool) -> Result<Vec<f64>> {
    if pair_input {
        let (z, zp) = enc.apply_pair(t)?;
        Ok(pair_disc_input(&z, &zp))
    } else {
        Ok(single_disc_input(&enc.apply(&t.to)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::{finite_diff_check, DiscConfig, EncoderConfig};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sv(vals: &[f64]) -> StateVector {
        StateVector::new(vals.to_vec()).unwrap()
    }

    fn random_inputs(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect()
    }

    #[test]
    fn uninformative_discriminator_loss_is_two_ln_two() {
        let d = DiscriminatorState::zeros(DiscConfig::new(4));
        let learner = random_inputs(8, 4, 0);
        let expert = random_inputs(8, 4, 1);
        let loss = discriminator_loss(&d, &learner, &expert).unwrap();
        assert!((loss - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn perfect_separation_loss_is_near_zero() {
        // single linear unit reading the first input coordinate, huge scale:
        // learner at +1 saturates D to 1, expert at -1 to 0, clamp active
        let mut d = DiscriminatorState::zeros(DiscConfig::linear(1));
        d.set_param_vec(&[50.0, 0.0]);
        let learner = vec![vec![1.0]; 4];
        let expert = vec![vec![-1.0]; 4];
        let loss = discriminator_loss(&d, &learner, &expert).unwrap();
        assert!(loss > 0.0);
        assert!(loss < 3e-6, "loss = {loss}");
    }

    #[test]
    fn hand_computed_two_sample_loss() {
        // logit 0.6 on the learner pair, -0.3 on the expert pair:
        // loss = -(ln sigma(0.6) + ln(1 - sigma(-0.3)))
        //      = -(ln 0.645656 + ln 0.574443) = 0.99203...
        let mut d = DiscriminatorState::zeros(DiscConfig::linear(1));
        d.set_param_vec(&[1.0, 0.0]);
        let loss = discriminator_loss(&d, &[vec![0.6]], &[vec![-0.3]]).unwrap();
        assert!((loss - 0.9920).abs() < 1e-3, "loss = {loss}");
    }

    #[test]
    fn encoder_loss_at_uninformative_discriminator() {
        let d = DiscriminatorState::zeros(DiscConfig::new(2));
        let enc = EncoderState::init(EncoderConfig::new(3, 1), 2);
        let batch = vec![Transition::new(sv(&[1.0, 0.0, 2.0]), sv(&[0.5, 1.0, -1.0])).unwrap()];
        let loss = encoder_loss(&d, &enc, &batch, true).unwrap();
        assert!((loss - 0.5f64.ln()).abs() < 1e-12);
        // and the gradient vanishes since D is locally flat at zero weights
        let (_, grad) = encoder_loss_grad(&d, &enc, &batch, true).unwrap();
        assert!(grad.0.iter().all(|&g| g.abs() < 1e-15));
    }

    #[test]
    fn fully_fooled_discriminator_saturates_encoder_loss() {
        let mut d = DiscriminatorState::zeros(DiscConfig::linear(2));
        d.set_param_vec(&[-60.0, -60.0, 0.0]);
        let enc = EncoderState::identity(1);
        let batch = vec![Transition::new(sv(&[1.0]), sv(&[1.0])).unwrap()];
        let loss = encoder_loss(&d, &enc, &batch, true).unwrap();
        assert!((loss - PROB_CLAMP.ln()).abs() < 1e-9, "loss = {loss}");
    }

    #[test]
    fn loss_identity_on_shared_batch() {
        // encoder_loss equals the negated learner term of discriminator_loss
        // when both see the same encoded pairs
        let d = DiscriminatorState::init(DiscConfig::new(4), 5);
        let enc = EncoderState::init(EncoderConfig::new(3, 2).with_bias(true), 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let batch: Vec<Transition> = (0..16)
            .map(|_| {
                Transition::new(
                    sv(&[rng.gen_range(-1.0..1.0), rng.gen(), rng.gen()]),
                    sv(&[rng.gen_range(-1.0..1.0), rng.gen(), rng.gen()]),
                )
                .unwrap()
            })
            .collect();
        let inputs: Vec<Vec<f64>> = batch
            .iter()
            .map(|t| {
                let (z, zp) = enc.apply_pair(t).unwrap();
                pair_disc_input(&z, &zp)
            })
            .collect();
        let expert = random_inputs(16, 4, 8);

        let enc_loss = encoder_loss(&d, &enc, &batch, true).unwrap();
        let learner_term: f64 = inputs
            .iter()
            .map(|x| clamp_prob(sigmoid(d.forward(x).unwrap())).ln())
            .sum::<f64>()
            / inputs.len() as f64;
        let disc_loss = discriminator_loss(&d, &inputs, &expert).unwrap();
        assert!((enc_loss - learner_term).abs() < 1e-12);
        // the expert term accounts for the remainder of the total loss
        let expert_term: f64 = expert
            .iter()
            .map(|x| (1.0 - clamp_prob(sigmoid(d.forward(x).unwrap()))).ln())
            .sum::<f64>()
            / expert.len() as f64;
        assert!((disc_loss + learner_term + expert_term).abs() < 1e-12);
    }

    #[test]
    fn discriminator_gradient_matches_finite_differences() {
        let d = DiscriminatorState::init(DiscConfig::new(4), 11);
        let learner = random_inputs(16, 4, 12);
        let expert = random_inputs(16, 4, 13);
        let (_, grad) = discriminator_loss_grad(&d, &learner, &expert).unwrap();
        let err = finite_diff_check(
            &d,
            &grad,
            |p| discriminator_loss(p, &learner, &expert).unwrap(),
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "max rel err {err}");
    }

    #[test]
    fn encoder_gradient_matches_finite_differences() {
        let d = DiscriminatorState::init(DiscConfig::new(4), 14);
        let enc = EncoderState::init(EncoderConfig::new(3, 2).with_bias(true), 15);
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let batch: Vec<Transition> = (0..16)
            .map(|_| {
                Transition::new(
                    sv(&[rng.gen_range(-2.0..2.0), rng.gen(), rng.gen()]),
                    sv(&[rng.gen_range(-2.0..2.0), rng.gen(), rng.gen()]),
                )
                .unwrap()
            })
            .collect();
        let (_, grad) = encoder_loss_grad(&d, &enc, &batch, true).unwrap();
        let err = finite_diff_check(
            &enc,
            &grad,
            |p| encoder_loss(&d, p, &batch, true).unwrap(),
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "max rel err {err}");
    }

    #[test]
    fn saturated_encoder_weight_has_vanishing_gradient() {
        let d = DiscriminatorState::init(DiscConfig::new(2), 17);
        let mut enc = EncoderState::zeros(EncoderConfig::new(1, 1));
        enc.set_param_vec(&[50.0, 0.0]);
        let batch = vec![Transition::new(sv(&[1.0]), sv(&[2.0])).unwrap()];
        let (_, grad) = encoder_loss_grad(&d, &enc, &batch, true).unwrap();
        assert!(grad.0[0].abs() < 1e-8, "grad = {}", grad.0[0]);
    }

    #[test]
    fn empty_batches_rejected() {
        let d = DiscriminatorState::zeros(DiscConfig::new(2));
        let enc = EncoderState::identity(1);
        assert!(discriminator_loss(&d, &[], &[vec![0.0, 0.0]]).is_err());
        assert!(discriminator_loss(&d, &[vec![0.0, 0.0]], &[]).is_err());
        assert!(encoder_loss(&d, &enc, &[], true).is_err());
    }

    #[test]
    fn no_pair_mode_uses_current_state_only() {
        let d = DiscriminatorState::init(DiscConfig::new(1), 18);
        let enc = EncoderState::identity(1);
        let t1 = Transition::new(sv(&[0.1]), sv(&[0.7])).unwrap();
        let t2 = Transition::new(sv(&[0.9]), sv(&[0.7])).unwrap();
        // same destination state: identical loss regardless of origin
        let a = encoder_loss(&d, &enc, &[t1], false).unwrap();
        let b = encoder_loss(&d, &enc, &[t2], false).unwrap();
        assert_eq!(a, b);
    }
}
