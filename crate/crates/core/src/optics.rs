//! Scalar diffraction, amplitude-hologram recording and intensity
//! reconstruction.
//!
//! Propagation uses the angular spectrum method on the periodic sampling
//! grid with unitary (orthonormal) transform scaling, so a forward step
//! followed by the reverse step is the identity up to rounding, and energy
//! is conserved. Evanescent spatial frequencies are zeroed.
//!
//! The reference wave is an on-axis plane wave of unit amplitude, so a
//! reconstruction overlaps the direct light, the object term and its
//! conjugate.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::par;
use crate::rng;

/// Sampled complex amplitude on a `width` x `height` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    width: usize,
    height: usize,
    pitch: f64,
    wavelength: f64,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(
        width: usize,
        height: usize,
        pitch: f64,
        wavelength: f64,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "field must be non-empty, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} field needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        check_positive("pitch", pitch)?;
        check_positive("wavelength", wavelength)?;
        Ok(Self {
            width,
            height,
            pitch,
            wavelength,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize, pitch: f64, wavelength: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            pitch,
            wavelength,
            vec![Complex64::new(0.0, 0.0); width * height],
        )
    }

    /// Embeds a real image as a field with zero phase.
    pub fn from_real(image: &Image, pitch: f64, wavelength: f64) -> Result<Self> {
        let data = image
            .data()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        Self::new(image.width(), image.height(), pitch, wavelength, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Per-pixel squared modulus.
    pub fn intensity(&self) -> Image {
        let data = self.data.iter().map(|c| c.norm_sqr()).collect();
        Image::new(self.width, self.height, data).expect("squared modulus is non-negative")
    }

    fn with_data(&self, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            width: self.width,
            height: self.height,
            pitch: self.pitch,
            wavelength: self.wavelength,
            data,
        }
    }
}

/// Physical recording conditions. Defaults are 1000x1000 pixels at a 4 um
/// pitch, 633 nm light and a 5 cm propagation distance.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalConfig {
    pub pixels_x: usize,
    pub pixels_y: usize,
    pub pitch: f64,
    pub wavelength: f64,
    pub distance_z: f64,
    /// Propagate on a grid padded to twice the size in each direction,
    /// suppressing periodic wraparound.
    pub zero_pad: bool,
}

impl Default for OpticalConfig {
    fn default() -> Self {
        Self {
            pixels_x: 1000,
            pixels_y: 1000,
            pitch: 4e-6,
            wavelength: 633e-9,
            distance_z: 0.05,
            zero_pad: false,
        }
    }
}

impl OpticalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pixels_x == 0 || self.pixels_y == 0 {
            return Err(Error::Config(format!(
                "optical grid must be non-empty, got {}x{}",
                self.pixels_x, self.pixels_y
            )));
        }
        check_positive("pitch", self.pitch)?;
        check_positive("wavelength", self.wavelength)?;
        check_positive("distance_z", self.distance_z)
    }

    /// Propagates by `z`, honouring `zero_pad`.
    pub fn propagate(&self, field: &ComplexField, z: f64) -> ComplexField {
        if self.zero_pad {
            propagate_padded(field, z)
        } else {
            propagate(field, z)
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite and > 0, got {v}")))
    }
}

/// Multiplies each pixel of `image` by a uniformly random phase
/// `exp(i 2 pi p)`, `p ~ U[0, 1)`, drawn in row-major order from `seed`.
pub fn random_phase_object(
    image: &Image,
    seed: u64,
    pitch: f64,
    wavelength: f64,
) -> Result<ComplexField> {
    if let Some(v) = image.data().iter().find(|&&v| v > 1.0) {
        return Err(Error::InvalidValue(format!(
            "object amplitude {v} outside [0, 1]; normalize the image first"
        )));
    }
    let mut rng = rng::seeded(seed);
    let data = image
        .data()
        .iter()
        .map(|&a| {
            let p: f64 = rng.gen();
            Complex64::from_polar(a, 2.0 * PI * p)
        })
        .collect();
    ComplexField::new(image.width(), image.height(), pitch, wavelength, data)
}

/// Signed spatial frequency index of DFT bin `k` on an `n`-point grid.
fn frequency_index(k: usize, n: usize) -> f64 {
    if k < (n + 1) / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Angular spectrum transfer function for the field's grid, row-major in
/// frequency space. Evanescent entries are zero.
fn transfer_function(field: &ComplexField, z: f64) -> Vec<Complex64> {
    let (w, h) = (field.width, field.height);
    let inv_lambda_sq = 1.0 / (field.wavelength * field.wavelength);
    let dfx = 1.0 / (w as f64 * field.pitch);
    let dfy = 1.0 / (h as f64 * field.pitch);
    let fx_sq: Vec<f64> = (0..w)
        .map(|k| (frequency_index(k, w) * dfx).powi(2))
        .collect();
    let mut out = Vec::with_capacity(w * h);
    for ky in 0..h {
        let fy_sq = (frequency_index(ky, h) * dfy).powi(2);
        for fx2 in &fx_sq {
            let arg = inv_lambda_sq - fx2 - fy_sq;
            if arg < 0.0 {
                out.push(Complex64::new(0.0, 0.0));
            } else {
                out.push(Complex64::from_polar(1.0, 2.0 * PI * z * arg.sqrt()));
            }
        }
    }
    out
}

/// Angular spectrum propagation by signed distance `z` (meters).
pub fn propagate(field: &ComplexField, z: f64) -> ComplexField {
    let (w, h) = (field.width, field.height);
    let mut spectrum = field.data.clone();
    let fft = Fft2::new(w, h);
    fft.forward(&mut spectrum);
    let tf = transfer_function(field, z);
    spectrum.iter_mut().zip(&tf).for_each(|(s, t)| *s *= t);
    fft.inverse(&mut spectrum);
    field.with_data(spectrum)
}

/// Propagation on a grid zero-padded to `2w x 2h`, with the field centred
/// and the central `w x h` window returned.
pub fn propagate_padded(field: &ComplexField, z: f64) -> ComplexField {
    let (w, h) = (field.width, field.height);
    let (pw, ph) = (2 * w, 2 * h);
    let (ox, oy) = (w / 2, h / 2);
    let mut padded = vec![Complex64::new(0.0, 0.0); pw * ph];
    for y in 0..h {
        padded[(y + oy) * pw + ox..(y + oy) * pw + ox + w]
            .copy_from_slice(&field.data[y * w..(y + 1) * w]);
    }
    let big = ComplexField::new(pw, ph, field.pitch, field.wavelength, padded)
        .expect("padded grid is valid");
    let out = propagate(&big, z);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        data.extend_from_slice(&out.data[(y + oy) * pw + ox..(y + oy) * pw + ox + w]);
    }
    field.with_data(data)
}

/// Amplitude hologram `|O + R|^2` with the unit on-axis plane reference.
pub fn record_hologram(object: &ComplexField) -> Image {
    let reference = Complex64::new(1.0, 0.0);
    let data = object
        .data
        .iter()
        .map(|&o| (o + reference).norm_sqr())
        .collect();
    Image::new(object.width, object.height, data).expect("intensity is non-negative")
}

/// Back-propagates the hologram (as a real field) by `-z` and returns the
/// squared modulus. No DC or twin-image suppression is applied.
pub fn reconstruct(hologram: &Image, config: &OpticalConfig) -> Result<Image> {
    let field = ComplexField::from_real(hologram, config.pitch, config.wavelength)?;
    Ok(config.propagate(&field, -config.distance_z).intensity())
}

/// Full simulated channel: random phase, forward propagation, recording
/// and reconstruction of an image with amplitudes in `[0, 1]`.
pub fn record_and_reconstruct(
    image: &Image,
    phase_seed: u64,
    config: &OpticalConfig,
) -> Result<Image> {
    config.validate()?;
    let object = random_phase_object(image, phase_seed, config.pitch, config.wavelength)?;
    let object = config.propagate(&object, config.distance_z);
    reconstruct(&record_hologram(&object), config)
}

/// Unitary 2-D DFT over a row-major `w x h` grid.
struct Fft2 {
    w: usize,
    h: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(w: usize, h: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            w,
            h,
            row_fwd: planner.plan_fft_forward(w),
            row_inv: planner.plan_fft_inverse(w),
            col_fwd: planner.plan_fft_forward(h),
            col_inv: planner.plan_fft_inverse(h),
        }
    }

    fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_inv, &self.col_inv);
    }

    fn run(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (w, h) = (self.w, self.h);
        transform_lines(data, w, rows);
        let mut t = transpose(data, w, h);
        transform_lines(&mut t, h, cols);
        let back = transpose(&t, h, w);
        let scale = 1.0 / ((w * h) as f64).sqrt();
        data.iter_mut()
            .zip(back)
            .for_each(|(d, b)| *d = b * scale);
    }
}

fn transform_lines(data: &mut [Complex64], len: usize, fft: &Arc<dyn Fft<f64>>) {
    let scratch_len = fft.get_inplace_scratch_len();
    par::for_each_chunk_mut(data, len, |_, line| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
        fft.process_with_scratch(line, &mut scratch);
    });
}

/// Transposes a row-major `w x h` grid into a row-major `h x w` grid.
fn transpose(data: &[Complex64], w: usize, h: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); w * h];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = data[y * w + x];
        }
    }
    out
}
