//! Holographic memory channel simulation and autoencoder restoration.
//!
//! Binary page data (or any binary image, e.g. a QR code) is given a random
//! phase, propagated to the hologram plane, recorded as an on-axis
//! amplitude hologram, and reconstructed by back-propagation. The speckled
//! reconstruction is then cleaned up tile by tile with a small denoising
//! autoencoder trained on pairs of reconstructions and originals.

pub mod autoencoder;
pub mod error;
pub mod image;
pub mod imageio;
pub mod optics;
pub mod par;
pub mod patterns;
pub mod pipeline;
pub mod rng;
pub mod tiling;

pub use error::{Error, Result};
pub use image::Image;
