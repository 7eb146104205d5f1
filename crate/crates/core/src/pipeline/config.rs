//! Experiment configuration and its `key = value` file format.
//!
//! ```text
//! # desk-scale run
//! pixels_x = 200
//! pixels_y = 200
//! blocks_x = 20
//! blocks_y = 20
//! normalization = per-image-max
//! ```
//!
//! Every key is optional and falls back to [`ExperimentConfig::default`].
//! Unknown keys, repeated keys and malformed values are errors.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::autoencoder::TrainConfig;
use crate::error::{Error, Result};
use crate::optics::OpticalConfig;
use crate::patterns::PageDataSpec;
use crate::rng;

/// How a raw reconstruction is scaled into `[0, 1]` before it is stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Divide by the image's own maximum.
    PerImageMax,
    /// Divide by a fixed constant and clip at 1.
    GlobalConstant(f64),
}

impl Normalization {
    pub fn apply(&self, raw: &crate::Image) -> Result<crate::Image> {
        match *self {
            Normalization::PerImageMax => {
                let max = raw.max();
                if max > 0.0 {
                    raw.map(|v| v / max)
                } else {
                    Ok(raw.clone())
                }
            }
            Normalization::GlobalConstant(c) => raw.map(|v| (v / c).min(1.0)),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Normalization::PerImageMax => f.write_str("per-image-max"),
            Normalization::GlobalConstant(c) => write!(f, "global-constant:{c}"),
        }
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "per-image-max" {
            return Ok(Normalization::PerImageMax);
        }
        if let Some(c) = s.strip_prefix("global-constant:") {
            let c: f64 = c
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad normalization constant {c:?}")))?;
            if c.is_finite() && c > 0.0 {
                return Ok(Normalization::GlobalConstant(c));
            }
            return Err(Error::Config(format!("normalization constant must be > 0, got {c}")));
        }
        Err(Error::Config(format!(
            "normalization must be `per-image-max` or `global-constant:<c>`, got {s:?}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub optical: OpticalConfig,
    /// Page layout; its `seed` is ignored in favour of per-image seeds.
    pub page: PageDataSpec,
    pub tile_px: usize,
    pub train: TrainConfig,
    pub n_train_images: usize,
    pub n_eval_images: usize,
    pub normalization: Normalization,
    /// Top-level seed from which every other seed is derived.
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    /// Desk-scale run: 200 x 200 pixels, 20 x 20 blocks of 10 px, 20 px
    /// tiles, 19 training images.
    fn default() -> Self {
        Self {
            optical: OpticalConfig {
                pixels_x: 200,
                pixels_y: 200,
                ..OpticalConfig::default()
            },
            page: PageDataSpec {
                blocks_x: 20,
                blocks_y: 20,
                block_px: 10,
                seed: 0,
            },
            tile_px: 20,
            train: TrainConfig::default(),
            n_train_images: 19,
            n_eval_images: 2,
            normalization: Normalization::PerImageMax,
            seed: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

const TRAIN_STREAM: u64 = 0x7472_6169_6e;
const PHASE_STREAM: u64 = 0x7068_6173_65;

impl ExperimentConfig {
    /// 1000 x 1000 pixels with 100 x 100 blocks; otherwise the defaults.
    pub fn full_scale() -> Self {
        let mut cfg = Self::default();
        cfg.optical.pixels_x = 1000;
        cfg.optical.pixels_y = 1000;
        cfg.page.blocks_x = 100;
        cfg.page.blocks_y = 100;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.optical.validate()?;
        self.page.validate()?;
        self.train.validate()?;
        if self.page.width() != self.optical.pixels_x || self.page.height() != self.optical.pixels_y
        {
            return Err(Error::Config(format!(
                "page data is {}x{} px but the optical grid is {}x{}",
                self.page.width(),
                self.page.height(),
                self.optical.pixels_x,
                self.optical.pixels_y
            )));
        }
        if self.tile_px == 0
            || self.optical.pixels_x % self.tile_px != 0
            || self.optical.pixels_y % self.tile_px != 0
        {
            return Err(Error::Config(format!(
                "{}x{} grid is not divisible into {} px tiles",
                self.optical.pixels_x, self.optical.pixels_y, self.tile_px
            )));
        }
        Ok(())
    }

    pub fn tiles_per_image(&self) -> usize {
        (self.optical.pixels_x / self.tile_px) * (self.optical.pixels_y / self.tile_px)
    }

    /// Training subpatterns produced by `n_train_images` images.
    pub fn training_subpatterns(&self) -> usize {
        self.n_train_images * self.tiles_per_image()
    }

    /// Page-data seed of image `index` (1-based; evaluation images follow
    /// the training images).
    pub fn page_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }

    pub fn phase_seed(&self, index: usize) -> u64 {
        rng::derive_seed(self.page_seed(index), PHASE_STREAM)
    }

    /// Training configuration with its seed derived from the top-level seed.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: rng::derive_seed(self.seed, TRAIN_STREAM),
            ..self.train.clone()
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "pixels_x" => self.optical.pixels_x = parse(key, value)?,
            "pixels_y" => self.optical.pixels_y = parse(key, value)?,
            "pitch" => self.optical.pitch = parse(key, value)?,
            "wavelength" => self.optical.wavelength = parse(key, value)?,
            "distance_z" => self.optical.distance_z = parse(key, value)?,
            "zero_pad" => self.optical.zero_pad = parse(key, value)?,
            "blocks_x" => self.page.blocks_x = parse(key, value)?,
            "blocks_y" => self.page.blocks_y = parse(key, value)?,
            "block_px" => self.page.block_px = parse(key, value)?,
            "tile_px" => self.tile_px = parse(key, value)?,
            "batch_size" => self.train.batch_size = parse(key, value)?,
            "dropout_rate" => self.train.dropout_rate = parse(key, value)?,
            "epochs" => self.train.epochs = parse(key, value)?,
            "n_hidden" => self.train.n_hidden = parse(key, value)?,
            "updates_per_epoch" => {
                self.train.updates_per_epoch = match value {
                    "none" | "" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "learning_rate" => self.train.adam.alpha = parse(key, value)?,
            "beta1" => self.train.adam.beta1 = parse(key, value)?,
            "beta2" => self.train.adam.beta2 = parse(key, value)?,
            "epsilon" => self.train.adam.epsilon = parse(key, value)?,
            "n_train_images" => self.n_train_images = parse(key, value)?,
            "n_eval_images" => self.n_eval_images = parse(key, value)?,
            "normalization" => self.normalization = value.parse().map_err(|e: Error| e.to_string())?,
            "seed" => self.seed = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Serializes every key; `parse(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let o = &self.optical;
        let t = &self.train;
        let lines = [
            format!("pixels_x = {}", o.pixels_x),
            format!("pixels_y = {}", o.pixels_y),
            format!("pitch = {:e}", o.pitch),
            format!("wavelength = {:e}", o.wavelength),
            format!("distance_z = {:e}", o.distance_z),
            format!("zero_pad = {}", o.zero_pad),
            format!("blocks_x = {}", self.page.blocks_x),
            format!("blocks_y = {}", self.page.blocks_y),
            format!("block_px = {}", self.page.block_px),
            format!("tile_px = {}", self.tile_px),
            format!("batch_size = {}", t.batch_size),
            format!("dropout_rate = {}", t.dropout_rate),
            format!("epochs = {}", t.epochs),
            format!("n_hidden = {}", t.n_hidden),
            format!(
                "updates_per_epoch = {}",
                t.updates_per_epoch.map_or("none".to_string(), |u| u.to_string())
            ),
            format!("learning_rate = {:e}", t.adam.alpha),
            format!("beta1 = {}", t.adam.beta1),
            format!("beta2 = {}", t.adam.beta2),
            format!("epsilon = {:e}", t.adam.epsilon),
            format!("n_train_images = {}", self.n_train_images),
            format!("n_eval_images = {}", self.n_eval_images),
            format!("normalization = {}", self.normalization),
            format!("seed = {}", self.seed),
            format!("out_dir = {}", self.out_dir.display()),
        ];
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("cannot parse `{value}` for `{key}`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_desk_scale_and_valid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.tiles_per_image(), 100);
        assert_eq!(cfg.optical.pitch, 4e-6);
        assert_eq!(cfg.optical.wavelength, 633e-9);
        assert_eq!(cfg.optical.distance_z, 0.05);
        assert_eq!(cfg.train.batch_size, 100);
        assert_eq!(cfg.train.n_hidden, 50);
    }

    #[test]
    fn full_scale_counts() {
        let mut cfg = ExperimentConfig::full_scale();
        cfg.validate().unwrap();
        assert_eq!(cfg.tiles_per_image(), 2500);
        cfg.n_train_images = 19;
        assert_eq!(cfg.training_subpatterns(), 47_500);
        cfg.n_train_images = 99;
        assert_eq!(cfg.training_subpatterns(), 247_500);
    }

    #[test]
    fn parse_overrides_and_comments() {
        let cfg = ExperimentConfig::parse(
            "# small\npixels_x = 40 # inline\npixels_y=40\nblocks_x = 4\nblocks_y = 4\n\
             normalization = global-constant:2.5\nupdates_per_epoch = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.optical.pixels_x, 40);
        assert_eq!(cfg.normalization, Normalization::GlobalConstant(2.5));
        assert_eq!(cfg.train.updates_per_epoch, Some(3));
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(ExperimentConfig::parse("pixel_x = 3").is_err());
        assert!(ExperimentConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(ExperimentConfig::parse("epochs = many").is_err());
        assert!(ExperimentConfig::parse("no equals sign").is_err());
        // Page grid no longer matches the optical grid.
        assert!(ExperimentConfig::parse("pixels_x = 300").is_err());
        assert!(ExperimentConfig::parse("tile_px = 30").is_err());
        assert!(ExperimentConfig::parse("normalization = global-constant:-1").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::full_scale();
        cfg.normalization = Normalization::GlobalConstant(3.0);
        cfg.train.updates_per_epoch = Some(2);
        cfg.train.dropout_rate = 0.008;
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn normalization_ranges() {
        let raw = crate::Image::new(3, 1, vec![0.0, 2.0, 4.0]).unwrap();
        let n = Normalization::PerImageMax.apply(&raw).unwrap();
        assert_eq!(n.data(), &[0.0, 0.5, 1.0]);
        let g = Normalization::GlobalConstant(2.0).apply(&raw).unwrap();
        assert_eq!(g.data(), &[0.0, 1.0, 1.0]);
        let zero = crate::Image::filled(2, 2, 0.0).unwrap();
        assert_eq!(Normalization::PerImageMax.apply(&zero).unwrap(), zero);
    }

    #[test]
    fn seeds_are_distinct_per_image() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.page_seed(3), 4);
        assert_ne!(cfg.phase_seed(1), cfg.phase_seed(2));
        assert_ne!(cfg.phase_seed(1), cfg.page_seed(1));
    }
}
