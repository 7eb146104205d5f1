//! Grayscale image files: binary PGM ("P5", 8 or 16 bit) and PNG.
//!
//! Samples are mapped linearly between `[0, 1]` and `[0, maxval]`. Writers
//! always emit 16-bit data; PGM output uses maxval 65535 and big-endian
//! samples.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Reads a PGM or PNG file into an image with samples in `[0, 1]`. The
/// format is detected from the file contents.
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes, path)
    } else if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(&bytes, path)
    } else {
        Err(Error::UnsupportedFormat(format!(
            "{}: not a binary PGM (P5) or PNG file",
            path.display()
        )))
    }
}

/// Writes `image` as a 16-bit binary PGM. Samples above 1 are clipped.
pub fn write_pgm(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pgm(image);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `image` as a 16-bit grayscale PNG. Samples above 1 are clipped.
pub fn write_png(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        image.width() as u32,
        image.height() as u32,
    );
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Sixteen);
    let to_io = |e: png::EncodingError| match e {
        png::EncodingError::IoError(e) => Error::io(path, e),
        other => Error::malformed(path, other.to_string()),
    };
    let mut writer = encoder.write_header().map_err(to_io)?;
    let data: Vec<u8> = image
        .data()
        .iter()
        .flat_map(|&v| quantize16(v).to_be_bytes())
        .collect();
    writer.write_image_data(&data).map_err(to_io)?;
    writer.finish().map_err(to_io)
}

/// Writes the image in the format implied by the extension (`.png`,
/// otherwise PGM).
pub fn write_image(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("png") => write_png(path, image),
        _ => write_pgm(path, image),
    }
}

pub(crate) fn quantize16(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0).round() as u16
}

pub fn encode_pgm(image: &Image) -> Vec<u8> {
    let header = format!("P5\n{} {}\n65535\n", image.width(), image.height());
    let mut out = Vec::with_capacity(header.len() + 2 * image.data().len());
    out.extend_from_slice(header.as_bytes());
    for &v in image.data() {
        out.extend_from_slice(&quantize16(v).to_be_bytes());
    }
    out
}

pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<Image> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        *field = next_header_number(bytes, &mut pos)
            .ok_or_else(|| Error::malformed(path, "truncated or invalid PGM header"))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::Dimension(format!(
            "{}: zero-size image ({width}x{height})",
            path.display()
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::malformed(path, format!("maxval {maxval} out of range")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::malformed(path, "missing raster separator"));
    }
    pos += 1;
    let bytes_per_sample = if maxval < 256 { 1 } else { 2 };
    let count = width * height;
    let raster = bytes
        .get(pos..pos + count * bytes_per_sample)
        .ok_or_else(|| Error::malformed(path, "raster shorter than header declares"))?;
    let scale = 1.0 / maxval as f64;
    let data: Vec<f64> = if bytes_per_sample == 1 {
        raster.iter().map(|&b| (b as f64 * scale).min(1.0)).collect()
    } else {
        raster
            .chunks_exact(2)
            .map(|c| (u16::from_be_bytes([c[0], c[1]]) as f64 * scale).min(1.0))
            .collect()
    };
    Image::new(width, height, data)
}

fn next_header_number(bytes: &[u8], pos: &mut usize) -> Option<usize> {
    loop {
        match bytes.get(*pos)? {
            b'#' => {
                while *bytes.get(*pos)? != b'\n' {
                    *pos += 1;
                }
            }
            c if c.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos]).ok()?.parse().ok()
}

fn decode_png(bytes: &[u8], path: &Path) -> Result<Image> {
    let mut decoder = png::Decoder::new(bytes);
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    let (width, height) = (info.width as usize, info.height as usize);
    if width == 0 || height == 0 {
        return Err(Error::Dimension(format!("{}: zero-size image", path.display())));
    }
    let samples: Vec<f64> = match info.bit_depth {
        png::BitDepth::Eight => buf[..info.buffer_size()]
            .iter()
            .map(|&b| b as f64 / 255.0)
            .collect(),
        png::BitDepth::Sixteen => buf[..info.buffer_size()]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 65535.0)
            .collect(),
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: PNG bit depth {other:?} after expansion",
                path.display()
            )))
        }
    };
    // Colour images are reduced to the mean of their colour channels;
    // alpha is ignored.
    let (channels, colour) = match info.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: indexed PNG was not expanded",
                path.display()
            )))
        }
    };
    let data = samples
        .chunks_exact(channels)
        .map(|px| px[..colour].iter().sum::<f64>() / colour as f64)
        .collect();
    Image::new(width, height, data)
}
