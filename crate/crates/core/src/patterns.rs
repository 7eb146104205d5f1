//! Binary test patterns: random page data, externally rendered binary
//! images (QR codes and the like), and a block-level bit error rate.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::imageio;
use crate::rng;

/// Random page data layout: `blocks_x` x `blocks_y` square cells of
/// `block_px` pixels, each black or white with equal probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageDataSpec {
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub block_px: usize,
    pub seed: u64,
}

impl Default for PageDataSpec {
    /// 100 x 100 blocks of 10 pixels, i.e. a 1000 x 1000 page.
    fn default() -> Self {
        Self {
            blocks_x: 100,
            blocks_y: 100,
            block_px: 10,
            seed: 0,
        }
    }
}

impl PageDataSpec {
    pub fn width(&self) -> usize {
        self.blocks_x * self.block_px
    }

    pub fn height(&self) -> usize {
        self.blocks_y * self.block_px
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_px == 0 || self.blocks_x == 0 || self.blocks_y == 0 {
            return Err(Error::Config(format!(
                "page data needs at least one block of at least one pixel, got {}x{} blocks of {} px",
                self.blocks_x, self.blocks_y, self.block_px
            )));
        }
        Ok(())
    }
}

/// Draws one fair coin per block (row-major block order) and paints it.
pub fn generate_page_data(spec: &PageDataSpec) -> Result<Image> {
    spec.validate()?;
    let mut rng = rng::seeded(spec.seed);
    let bits: Vec<bool> = (0..spec.blocks_x * spec.blocks_y)
        .map(|_| rng.gen::<bool>())
        .collect();
    Ok(paint_blocks(&bits, spec.blocks_x, spec.blocks_y, spec.block_px))
}

/// Checkerboard of `block_px` cells, starting white at the top left. Used
/// as a QR-style stand-in when no real code image is at hand.
pub fn checkerboard(blocks_x: usize, blocks_y: usize, block_px: usize) -> Result<Image> {
    if block_px == 0 || blocks_x == 0 || blocks_y == 0 {
        return Err(Error::Dimension("checkerboard must be non-empty".into()));
    }
    let bits: Vec<bool> = (0..blocks_y)
        .flat_map(|by| (0..blocks_x).map(move |bx| (bx + by) % 2 == 0))
        .collect();
    Ok(paint_blocks(&bits, blocks_x, blocks_y, block_px))
}

fn paint_blocks(bits: &[bool], blocks_x: usize, blocks_y: usize, block_px: usize) -> Image {
    let width = blocks_x * block_px;
    let height = blocks_y * block_px;
    let mut data = vec![0.0; width * height];
    for (y, row) in data.chunks_exact_mut(width).enumerate() {
        let by = y / block_px;
        for (x, px) in row.iter_mut().enumerate() {
            if bits[by * blocks_x + x / block_px] {
                *px = 1.0;
            }
        }
    }
    Image::new(width, height, data).expect("binary samples")
}

/// Loads a grayscale PGM or PNG and binarizes it: a pixel becomes 1 when
/// its normalized gray level is at least `threshold`.
pub fn load_binary_image(path: impl AsRef<Path>, threshold: f64) -> Result<Image> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidValue(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let gray = imageio::read_image(path)?;
    gray.map(|v| if v >= threshold { 1.0 } else { 0.0 })
}

/// Per-block means of `image`, row-major over blocks.
pub fn block_means(image: &Image, block_px: usize) -> Result<Vec<f64>> {
    if block_px == 0 || image.width() % block_px != 0 || image.height() % block_px != 0 {
        return Err(Error::Dimension(format!(
            "{}x{} image is not divisible into {block_px}-pixel blocks",
            image.width(),
            image.height()
        )));
    }
    let bx = image.width() / block_px;
    let by = image.height() / block_px;
    let mut sums = vec![0.0; bx * by];
    for (y, row) in image.data().chunks_exact(image.width()).enumerate() {
        let base = (y / block_px) * bx;
        for (x, &v) in row.iter().enumerate() {
            sums[base + x / block_px] += v;
        }
    }
    let n = (block_px * block_px) as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// Fraction of blocks whose thresholded mean (at 0.5) in `candidate`
/// disagrees with the binary `reference`.
pub fn bit_error_rate(reference: &Image, candidate: &Image, block_px: usize) -> Result<f64> {
    reference.check_same_shape(candidate)?;
    if let Some(v) = reference.data().iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidValue(format!(
            "reference must be binary, found sample {v}"
        )));
    }
    let truth = block_means(reference, block_px)?;
    let seen = block_means(candidate, block_px)?;
    let errors = truth
        .iter()
        .zip(&seen)
        .filter(|(t, s)| (**t >= 0.5) != (**s >= 0.5))
        .count();
    Ok(errors as f64 / truth.len() as f64)
}
