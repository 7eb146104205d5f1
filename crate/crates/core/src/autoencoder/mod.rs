//! Single-hidden-layer denoising autoencoder with ReLU units, trained by
//! minibatch Adam with hidden-layer dropout.

mod adam;
mod network;
mod params;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use network::{accumulate_gradients, backward, forward, loss, relu, Activations, DropoutMask};
pub use params::{
    decode_model, encode_model, init_params, load_model, save_model, AeParams,
    MODEL_FORMAT_VERSION,
};
pub use train::{mean_loss, restore, train, train_from, TrainConfig, TrainOutcome};
