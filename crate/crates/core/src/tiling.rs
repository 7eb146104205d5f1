//! Square subpattern extraction and reassembly.
//!
//! Tiles are enumerated in row-major tile order and each tile is flattened
//! row-major, so vector `k` of a batch holds tile `(k % tiles_x, k / tiles_x)`.

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, PartialEq)]
pub struct SubpatternBatch {
    tile_px: usize,
    tiles_x: usize,
    tiles_y: usize,
    vectors: Vec<Vec<f64>>,
}

impl SubpatternBatch {
    pub fn new(
        tile_px: usize,
        tiles_x: usize,
        tiles_y: usize,
        vectors: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if tile_px == 0 || tiles_x == 0 || tiles_y == 0 {
            return Err(Error::Dimension(format!(
                "empty tile grid: {tiles_x}x{tiles_y} tiles of {tile_px} px"
            )));
        }
        if vectors.len() != tiles_x * tiles_y {
            return Err(Error::Dimension(format!(
                "{tiles_x}x{tiles_y} tile grid needs {} vectors, got {}",
                tiles_x * tiles_y,
                vectors.len()
            )));
        }
        let len = tile_px * tile_px;
        if let Some((k, v)) = vectors.iter().enumerate().find(|(_, v)| v.len() != len) {
            return Err(Error::Dimension(format!(
                "vector {k} has {} entries, expected {len}",
                v.len()
            )));
        }
        Ok(Self {
            tile_px,
            tiles_x,
            tiles_y,
            vectors,
        })
    }

    pub fn tile_px(&self) -> usize {
        self.tile_px
    }

    pub fn tiles_x(&self) -> usize {
        self.tiles_x
    }

    pub fn tiles_y(&self) -> usize {
        self.tiles_y
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn into_vectors(self) -> Vec<Vec<f64>> {
        self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Same grid, new vectors (e.g. network outputs).
    pub fn with_vectors(&self, vectors: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.tile_px, self.tiles_x, self.tiles_y, vectors)
    }
}

/// A degraded input vector and the clean target it should map to.
#[derive(Debug, Clone, PartialEq)]
pub struct SubpatternPair {
    pub x: Vec<f64>,
    pub x_target: Vec<f64>,
}

impl SubpatternPair {
    pub fn new(x: Vec<f64>, x_target: Vec<f64>) -> Result<Self> {
        if x.len() != x_target.len() {
            return Err(Error::Dimension(format!(
                "input has {} entries, target {}",
                x.len(),
                x_target.len()
            )));
        }
        if let Some(v) = x_target.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidValue(format!("target sample {v} outside [0, 1]")));
        }
        Ok(Self { x, x_target })
    }
}

/// Number of `tile_px` tiles along each axis of a `width x height` grid.
pub fn tile_grid(width: usize, height: usize, tile_px: usize) -> Result<(usize, usize)> {
    if tile_px == 0 || width % tile_px != 0 || height % tile_px != 0 {
        return Err(Error::Dimension(format!(
            "{width}x{height} image is not divisible into {tile_px}x{tile_px} tiles"
        )));
    }
    Ok((width / tile_px, height / tile_px))
}

pub fn tile(image: &Image, tile_px: usize) -> Result<SubpatternBatch> {
    let (tiles_x, tiles_y) = tile_grid(image.width(), image.height(), tile_px)?;
    let w = image.width();
    let data = image.data();
    let mut vectors = Vec::with_capacity(tiles_x * tiles_y);
    for ty in 0..tiles_y {
        for tx in 0..tiles_x {
            let mut v = Vec::with_capacity(tile_px * tile_px);
            for row in 0..tile_px {
                let start = (ty * tile_px + row) * w + tx * tile_px;
                v.extend_from_slice(&data[start..start + tile_px]);
            }
            vectors.push(v);
        }
    }
    SubpatternBatch::new(tile_px, tiles_x, tiles_y, vectors)
}

pub fn untile(batch: &SubpatternBatch) -> Result<Image> {
    let n = batch.tile_px;
    let w = batch.tiles_x * n;
    let h = batch.tiles_y * n;
    let mut data = vec![0.0; w * h];
    for (k, v) in batch.vectors.iter().enumerate() {
        let (tx, ty) = (k % batch.tiles_x, k / batch.tiles_x);
        for (row, src) in v.chunks_exact(n).enumerate() {
            let start = (ty * n + row) * w + tx * n;
            data[start..start + n].copy_from_slice(src);
        }
    }
    Image::new(w, h, data)
}

/// Tiles a degraded image and its clean original into aligned pairs.
pub fn pair_tiles(degraded: &Image, original: &Image, tile_px: usize) -> Result<Vec<SubpatternPair>> {
    degraded.check_same_shape(original)?;
    let xs = tile(degraded, tile_px)?.into_vectors();
    let ts = tile(original, tile_px)?.into_vectors();
    xs.into_iter()
        .zip(ts)
        .map(|(x, t)| SubpatternPair::new(x, t))
        .collect()
}
