//! The six regularized VAE objectives, their training loop, and
//! checkpointing.

pub mod checkpoint;
pub mod config;
pub mod factor_vae;
pub mod losses;
pub mod train;
pub mod vae;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::{ObjectiveConfig, ObjectiveKind, ANNEALED_GAMMA, ANNEALED_THRESHOLD_FRACTION};
pub use factor_vae::{shuffle_columns, Discriminator};
pub use losses::{beta_vae_loss, kl_term, recon_nll, LossTerms};
pub use train::{evaluate_recon_nll, train_model, TrainConfig, TrainedModel};
pub use vae::{
    observations_to_matrix, representation_from_posterior, EncoderOutput, RepresentationMode,
    VaeArchitecture, VaeModel,
};
