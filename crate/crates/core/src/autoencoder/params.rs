use std::fs;
use std::path::Path;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;

/// Weights and biases of the `n_in -> n_hidden -> n_in` network.
///
/// `w` is `n_hidden x n_in` and `w_out` is `n_in x n_hidden`, both stored
/// row-major. The same shape doubles as a gradient or moment accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct AeParams {
    n_in: usize,
    n_hidden: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: Vec<f64>,
}

impl AeParams {
    pub fn zeros(n_in: usize, n_hidden: usize) -> Self {
        Self {
            n_in,
            n_hidden,
            w: vec![0.0; n_hidden * n_in],
            b: vec![0.0; n_hidden],
            w_out: vec![0.0; n_in * n_hidden],
            b_out: vec![0.0; n_in],
        }
    }

    pub fn from_parts(
        n_in: usize,
        n_hidden: usize,
        w: Vec<f64>,
        b: Vec<f64>,
        w_out: Vec<f64>,
        b_out: Vec<f64>,
    ) -> Result<Self> {
        if n_in == 0 || n_hidden == 0 {
            return Err(Error::Dimension(format!(
                "layer sizes must be >= 1, got n_in={n_in} n_hidden={n_hidden}"
            )));
        }
        let expect = [
            ("w", w.len(), n_hidden * n_in),
            ("b", b.len(), n_hidden),
            ("w_out", w_out.len(), n_in * n_hidden),
            ("b_out", b_out.len(), n_in),
        ];
        for (name, got, want) in expect {
            if got != want {
                return Err(Error::Dimension(format!(
                    "{name} has {got} entries, expected {want}"
                )));
            }
        }
        let params = Self {
            n_in,
            n_hidden,
            w,
            b,
            w_out,
            b_out,
        };
        if !params.is_finite() {
            return Err(Error::InvalidValue("parameters contain non-finite entries".into()));
        }
        Ok(params)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn same_shape(&self, other: &AeParams) -> bool {
        self.n_in == other.n_in && self.n_hidden == other.n_hidden
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    /// All entries in serialization order: `w`, `b`, `w_out`, `b_out`.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.w
            .iter()
            .chain(&self.b)
            .chain(&self.w_out)
            .chain(&self.b_out)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w
            .iter_mut()
            .chain(self.b.iter_mut())
            .chain(self.w_out.iter_mut())
            .chain(self.b_out.iter_mut())
    }

    pub fn len(&self) -> usize {
        2 * self.n_in * self.n_hidden + self.n_in + self.n_hidden
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn add_assign(&mut self, other: &AeParams) {
        debug_assert!(self.same_shape(other));
        self.iter_mut().zip(other.iter()).for_each(|(a, b)| *a += b);
    }

    pub(crate) fn scale(&mut self, s: f64) {
        self.iter_mut().for_each(|a| *a *= s);
    }
}

/// He initialisation: weights ~ N(0, 2 / fan_in), biases zero.
pub fn init_params(n_in: usize, n_hidden: usize, seed: u64) -> Result<AeParams> {
    if n_in == 0 || n_hidden == 0 {
        return Err(Error::Dimension(format!(
            "layer sizes must be >= 1, got n_in={n_in} n_hidden={n_hidden}"
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut params = AeParams::zeros(n_in, n_hidden);
    let enc = Normal::new(0.0, (2.0 / n_in as f64).sqrt()).expect("positive std");
    let dec = Normal::new(0.0, (2.0 / n_hidden as f64).sqrt()).expect("positive std");
    params.w.iter_mut().for_each(|v| *v = enc.sample(&mut rng));
    params.w_out.iter_mut().for_each(|v| *v = dec.sample(&mut rng));
    Ok(params)
}

const MAGIC: &[u8; 4] = b"HRAE";
pub const MODEL_FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// Little-endian model encoding: magic, version, `n_in`, `n_hidden`, then
/// `w`, `b`, `w_out`, `b_out` as f64.
pub fn encode_model(params: &AeParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.n_in as u32).to_le_bytes());
    out.extend_from_slice(&(params.n_hidden as u32).to_le_bytes());
    for v in params.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_model(bytes: &[u8], path: &Path) -> Result<AeParams> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::malformed(path, "not an autoencoder model file"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::malformed(
            path,
            format!("unsupported model format version {version}"),
        ));
    }
    let (n_in, n_hidden) = (word(8) as usize, word(12) as usize);
    if n_in == 0 || n_hidden == 0 {
        return Err(Error::malformed(path, "zero layer size"));
    }
    let mut params = AeParams::zeros(n_in, n_hidden);
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * params.len() {
        return Err(Error::malformed(
            path,
            format!(
                "expected {} parameter bytes for {n_in}x{n_hidden}, found {}",
                8 * params.len(),
                body.len()
            ),
        ));
    }
    for (dst, chunk) in params.iter_mut().zip(body.chunks_exact(8)) {
        *dst = f64::from_le_bytes(chunk.try_into().unwrap());
    }
    if !params.is_finite() {
        return Err(Error::malformed(path, "non-finite parameter"));
    }
    Ok(params)
}

pub fn save_model(path: impl AsRef<Path>, params: &AeParams) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_model(params)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<AeParams> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn init_biases_zero_and_seeded() {
        let p = init_params(7, 3, 1).unwrap();
        assert!(p.b.iter().chain(&p.b_out).all(|&v| v == 0.0));
        assert_eq!(p, init_params(7, 3, 1).unwrap());
        assert_ne!(p, init_params(7, 3, 2).unwrap());
        assert!(init_params(0, 3, 1).is_err());
    }

    #[test]
    fn init_weight_statistics() {
        // 20_000 draws with sd sqrt(2/400): standard error of the mean is
        // sd / sqrt(20_000).
        let p = init_params(400, 50, 3).unwrap();
        let n = p.w.len() as f64;
        let mean = p.w.iter().sum::<f64>() / n;
        let sd = (2.0f64 / 400.0).sqrt();
        assert!(mean.abs() < 4.0 * sd / n.sqrt(), "mean {mean}");
        let var = p.w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() / sd - 1.0).abs() < 0.03);

        let dec_sd = (2.0f64 / 50.0).sqrt();
        let dvar = p.w_out.iter().map(|v| v * v).sum::<f64>() / n;
        assert!((dvar.sqrt() / dec_sd - 1.0).abs() < 0.03);
    }

    #[test]
    fn header_layout() {
        let p = init_params(4, 2, 0).unwrap();
        let bytes = encode_model(&p);
        assert_eq!(&bytes[..4], b"HRAE");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &4u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &2u32.to_le_bytes());
        assert_eq!(bytes.len(), 16 + 8 * (8 + 2 + 8 + 4));
        assert_eq!(&bytes[16..24], &p.w[0].to_le_bytes());
    }

    #[test]
    fn corrupt_models_rejected() {
        let p = init_params(4, 2, 0).unwrap();
        let mut bytes = encode_model(&p);
        let path = Path::new("mem");
        assert!(decode_model(&bytes[..bytes.len() - 1], path).is_err());
        assert!(decode_model(b"HRA", path).is_err());
        bytes[4] = 9;
        assert!(decode_model(&bytes, path).is_err());
    }

    proptest! {
        #[test]
        fn model_bytes_round_trip(n_in in 1usize..6, n_hidden in 1usize..5, seed in any::<u64>()) {
            let p = init_params(n_in, n_hidden, seed).unwrap();
            let back = decode_model(&encode_model(&p), Path::new("mem")).unwrap();
            prop_assert_eq!(encode_model(&back), encode_model(&p));
            prop_assert_eq!(back, p);
        }
    }
}
