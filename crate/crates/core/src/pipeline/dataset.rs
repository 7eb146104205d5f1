//! Dataset generation and the manifest that indexes it.
//!
//! Manifest layout (paths relative to the manifest's directory):
//!
//! ```text
//! # holo-restore dataset manifest
//! format = 1
//! width = 200
//! height = 200
//! tile_px = 20
//! normalization = per-image-max
//! seed = 1
//! subpatterns = 1900
//! pair train 2 8187335468712364829 train/original_0001.pgm train/reconstruction_0001.pgm
//! pair eval 21 1360233153463640115 eval/original_0020.pgm eval/reconstruction_0020.pgm
//! ```
//!
//! `pair` fields are split, page-data seed, phase seed, original path and
//! reconstruction path. `subpatterns` counts training tiles only.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::imageio;
use crate::optics;
use crate::par;
use crate::patterns::{self, PageDataSpec};
use crate::tiling::{self, SubpatternPair};

use super::config::{ExperimentConfig, Normalization};

pub const MANIFEST_FILE: &str = "manifest.txt";
const MANIFEST_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Eval,
}

impl Split {
    fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Eval => "eval",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairEntry {
    pub split: Split,
    pub page_seed: u64,
    pub phase_seed: u64,
    pub original: PathBuf,
    pub reconstruction: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub width: usize,
    pub height: usize,
    pub tile_px: usize,
    pub normalization: Normalization,
    pub seed: u64,
    pub subpatterns: usize,
    pub pairs: Vec<PairEntry>,
    /// Directory the entry paths are relative to.
    pub root: PathBuf,
}

impl Manifest {
    pub fn entries(&self, split: Split) -> impl Iterator<Item = &PairEntry> {
        self.pairs.iter().filter(move |p| p.split == split)
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }

    /// Loads the original and normalized reconstruction of an entry.
    pub fn load_pair(&self, entry: &PairEntry) -> Result<(Image, Image)> {
        let original = imageio::read_image(self.resolve(&entry.original))?;
        let recon = imageio::read_image(self.resolve(&entry.reconstruction))?;
        if !original.same_shape(&recon) || original.width() != self.width || original.height() != self.height {
            return Err(Error::malformed(
                self.resolve(&entry.original),
                "pair image size does not match the manifest",
            ));
        }
        Ok((original, recon))
    }

    /// All training tiles, in manifest order.
    pub fn training_pairs(&self, tile_px: usize) -> Result<Vec<SubpatternPair>> {
        let entries: Vec<&PairEntry> = self.entries(Split::Train).collect();
        let per_image = par::map_collect(&entries, |e| {
            let (original, recon) = self.load_pair(e)?;
            tiling::pair_tiles(&recon, &original, tile_px)
        });
        let mut out = Vec::with_capacity(self.subpatterns);
        for tiles in per_image {
            out.extend(tiles?);
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# holo-restore dataset manifest\n");
        s += &format!("format = {MANIFEST_FORMAT}\n");
        s += &format!("width = {}\nheight = {}\n", self.width, self.height);
        s += &format!("tile_px = {}\n", self.tile_px);
        s += &format!("normalization = {}\n", self.normalization);
        s += &format!("seed = {}\n", self.seed);
        s += &format!("subpatterns = {}\n", self.subpatterns);
        for p in &self.pairs {
            s += &format!(
                "pair {} {} {} {} {}\n",
                p.split.as_str(),
                p.page_seed,
                p.phase_seed,
                p.original.display(),
                p.reconstruction.display()
            );
        }
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, root).map_err(|reason| Error::malformed(path, reason))
    }

    fn parse(text: &str, root: PathBuf) -> std::result::Result<Self, String> {
        let mut format = None;
        let (mut width, mut height, mut tile_px, mut subpatterns) = (None, None, None, None);
        let mut normalization = None;
        let mut seed = None;
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| format!("line {}: {what}", n + 1);
            if let Some(rest) = line.strip_prefix("pair ") {
                let f: Vec<&str> = rest.split_whitespace().collect();
                if f.len() != 5 {
                    return Err(bad("pair needs 5 fields"));
                }
                let split = match f[0] {
                    "train" => Split::Train,
                    "eval" => Split::Eval,
                    _ => return Err(bad("split must be train or eval")),
                };
                pairs.push(PairEntry {
                    split,
                    page_seed: f[1].parse().map_err(|_| bad("bad page seed"))?,
                    phase_seed: f[2].parse().map_err(|_| bad("bad phase seed"))?,
                    original: PathBuf::from(f[3]),
                    reconstruction: PathBuf::from(f[4]),
                });
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
            let v = v.trim();
            let num = || v.parse::<usize>().map_err(|_| bad("expected an integer"));
            match k.trim() {
                "format" => format = Some(num()?),
                "width" => width = Some(num()?),
                "height" => height = Some(num()?),
                "tile_px" => tile_px = Some(num()?),
                "subpatterns" => subpatterns = Some(num()?),
                "seed" => seed = Some(v.parse::<u64>().map_err(|_| bad("bad seed"))?),
                "normalization" => {
                    normalization = Some(v.parse::<Normalization>().map_err(|e| bad(&e.to_string()))?)
                }
                other => return Err(bad(&format!("unknown key `{other}`"))),
            }
        }
        if format != Some(MANIFEST_FORMAT as usize) {
            return Err(format!("unsupported manifest format {format:?}"));
        }
        let manifest = Manifest {
            width: width.ok_or("missing width")?,
            height: height.ok_or("missing height")?,
            tile_px: tile_px.ok_or("missing tile_px")?,
            normalization: normalization.ok_or("missing normalization")?,
            seed: seed.ok_or("missing seed")?,
            subpatterns: subpatterns.ok_or("missing subpatterns")?,
            pairs,
            root,
        };
        let (tx, ty) = tiling::tile_grid(manifest.width, manifest.height, manifest.tile_px)
            .map_err(|e| e.to_string())?;
        let train = manifest.entries(Split::Train).count();
        if train * tx * ty != manifest.subpatterns {
            return Err(format!(
                "declares {} subpatterns but {train} training images give {}",
                manifest.subpatterns,
                train * tx * ty
            ));
        }
        Ok(manifest)
    }
}

/// Generates one page-data image and its normalized reconstruction.
pub fn simulate_page(config: &ExperimentConfig, index: usize) -> Result<(Image, Image)> {
    let spec = PageDataSpec {
        seed: config.page_seed(index),
        ..config.page.clone()
    };
    let original = patterns::generate_page_data(&spec)?;
    let recon = simulate_channel(config, &original, config.phase_seed(index))?;
    Ok((original, recon))
}

/// Records and reconstructs any binary image under the configured optics
/// and normalization.
pub fn simulate_channel(config: &ExperimentConfig, original: &Image, phase_seed: u64) -> Result<Image> {
    let raw = optics::record_and_reconstruct(original, phase_seed, &config.optical)?;
    config.normalization.apply(&raw)
}

/// Writes `n_train_images + n_eval_images` pairs under `<out_dir>/dataset`
/// and returns the manifest.
pub fn gen_dataset(config: &ExperimentConfig) -> Result<Manifest> {
    config.validate()?;
    if config.n_train_images == 0 {
        return Err(Error::Config("n_train_images must be >= 1".into()));
    }
    let root = config.out_dir.join("dataset");
    for dir in [root.join("train"), root.join("eval")] {
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let total = config.n_train_images + config.n_eval_images;
    let entries = par::map_range(total, |k| -> Result<PairEntry> {
        let index = k + 1;
        let split = if index <= config.n_train_images {
            Split::Train
        } else {
            Split::Eval
        };
        let (original, recon) = simulate_page(config, index)?;
        let original_rel = PathBuf::from(format!("{}/original_{index:04}.pgm", split.as_str()));
        let recon_rel = PathBuf::from(format!("{}/reconstruction_{index:04}.pgm", split.as_str()));
        imageio::write_pgm(root.join(&original_rel), &original)?;
        imageio::write_pgm(root.join(&recon_rel), &recon)?;
        Ok(PairEntry {
            split,
            page_seed: config.page_seed(index),
            phase_seed: config.phase_seed(index),
            original: original_rel,
            reconstruction: recon_rel,
        })
    });
    let manifest = Manifest {
        width: config.optical.pixels_x,
        height: config.optical.pixels_y,
        tile_px: config.tile_px,
        normalization: config.normalization,
        seed: config.seed,
        subpatterns: config.training_subpatterns(),
        pairs: entries.into_iter().collect::<Result<_>>()?,
        root: root.clone(),
    };
    let path = root.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
