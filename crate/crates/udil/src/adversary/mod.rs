//! Adversarial distribution matching between encoded learner transitions
//! and embedded expert transitions.
//!
//! Sign convention: the discriminator outputs a logit whose sigmoid D tends
//! to 1 on learner pairs and 0 on expert pairs. The discriminator minimizes
//! `-(mean log D_learner + mean log(1 - D_expert))`; the encoder minimizes
//! `mean log D` on encoded learner pairs (it is trained to fool the
//! discriminator); the policy is rewarded with `-log D`, so transitions the
//! discriminator mistakes for expert data earn the most.

mod jsd;
mod losses;
mod reward;
mod train;

pub use jsd::{js_estimate, ordering_indicator_js};
pub use losses::{
    discriminator_loss, discriminator_loss_grad, encoder_loss, encoder_loss_grad, pair_disc_input,
    single_disc_input, PROB_CLAMP,
};
pub use reward::{compute_goal_state, goal_distance_reward, synthesize_reward};
pub use train::{
    fit_encoder_adversarial, udil_train, EncoderInit, MetricsRow, PairFitConfig, PairFitResult,
    RewardMode, TrainConfig, TrainedArtifacts,
};
