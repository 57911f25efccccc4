//! Image containers, codecs and the differential stencils every pipeline
//! shares.
//!
//! Two raster types cover the whole crate: [`ImageU8`] for decoded 8-bit
//! data and [`ImageF`] for the normalized `[0, 1]` working representation.
//! Both are immutable values; every operation returns a new image. All
//! stencils use replicate (nearest-edge) boundary handling.

use std::path::Path;

use image::{DynamicImage, ImageError, ImageFormat, ImageReader};

use crate::{Error, Result};

/// ITU-R BT.601 luma weights used wherever a single gray channel is needed.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// An 8-bit raster, row-major, interleaved; 1 (gray) or 3 (RGB) channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageU8 {
    width: u32,
    height: u32,
    channels: u8,
    samples: Vec<u8>,
}

/// A real-valued raster with the same layout as [`ImageU8`].
///
/// Samples are finite `f64`; pipeline stages that promise a `[0, 1]` range
/// clamp explicitly. Intermediate fields (Laplacians, frequency responses,
/// 0-255 scale workspaces) use the same type without the range promise.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF {
    width: u32,
    height: u32,
    channels: u8,
    samples: Vec<f64>,
}

macro_rules! raster_accessors {
    ($t:ty, $s:ty) => {
        impl $t {
            pub fn width(&self) -> u32 {
                self.width
            }
            pub fn height(&self) -> u32 {
                self.height
            }
            pub fn channels(&self) -> u8 {
                self.channels
            }
            pub fn pixel_count(&self) -> usize {
                self.width as usize * self.height as usize
            }
            pub fn samples(&self) -> &[$s] {
                &self.samples
            }
            /// Sample at (x, y, c); coordinates must be in range.
            pub fn at(&self, x: u32, y: u32, c: u8) -> $s {
                let idx = (y as usize * self.width as usize + x as usize)
                    * self.channels as usize
                    + c as usize;
                self.samples[idx]
            }
        }
    };
}

raster_accessors!(ImageU8, u8);
raster_accessors!(ImageF, f64);

fn check_dims(width: u32, height: u32, channels: u8, len: usize) -> Result<()> {
    if channels != 1 && channels != 3 {
        return Err(Error::invalid("channels", format!("must be 1 or 3, got {channels}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::TooSmall(format!("{width}x{height}")));
    }
    let expect = width as usize * height as usize * channels as usize;
    if len != expect {
        return Err(Error::DimensionMismatch(format!(
            "{width}x{height}x{channels} needs {expect} samples, got {len}"
        )));
    }
    Ok(())
}

impl ImageU8 {
    pub fn new(width: u32, height: u32, channels: u8, samples: Vec<u8>) -> Result<Self> {
        check_dims(width, height, channels, samples.len())?;
        Ok(Self { width, height, channels, samples })
    }
}

impl ImageF {
    pub fn new(width: u32, height: u32, channels: u8, samples: Vec<f64>) -> Result<Self> {
        check_dims(width, height, channels, samples.len())?;
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Degenerate("non-finite sample".into()));
        }
        Ok(Self { width, height, channels, samples })
    }

    /// Constant image of the given shape.
    pub fn constant(width: u32, height: u32, channels: u8, value: f64) -> Self {
        let n = width as usize * height as usize * channels as usize;
        Self { width, height, channels, samples: vec![value; n] }
    }

    /// Build a single-channel image from a function of (x, y).
    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> f64) -> Self {
        let mut samples = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self { width, height, channels: 1, samples }
    }

    /// Apply `f` to every sample.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            channels: self.channels,
            samples: self.samples.iter().map(|&s| f(s)).collect(),
        }
    }

    /// Extract channel `c` as a single-channel image.
    pub fn plane(&self, c: u8) -> Self {
        assert!(c < self.channels, "channel {c} out of range");
        let ch = self.channels as usize;
        let samples = self.samples[c as usize..].iter().step_by(ch).copied().collect();
        Self { width: self.width, height: self.height, channels: 1, samples }
    }

    /// Interleave single-channel planes of identical shape.
    pub fn from_planes(planes: &[Self]) -> Result<Self> {
        let first = planes.first().ok_or_else(|| Error::EmptyInput("no planes".into()))?;
        if planes.len() != 1 && planes.len() != 3 {
            return Err(Error::invalid("planes", format!("must be 1 or 3, got {}", planes.len())));
        }
        for p in planes {
            if p.channels != 1 || p.width != first.width || p.height != first.height {
                return Err(Error::DimensionMismatch("planes must be single-channel and same size".into()));
            }
        }
        let ch = planes.len();
        let mut samples = vec![0.0; first.samples.len() * ch];
        for (c, p) in planes.iter().enumerate() {
            for (i, &v) in p.samples.iter().enumerate() {
                samples[i * ch + c] = v;
            }
        }
        Ok(Self { width: first.width, height: first.height, channels: ch as u8, samples })
    }

    /// BT.601 gray conversion; single-channel input is returned as-is.
    pub fn gray(&self) -> Self {
        if self.channels == 1 {
            return self.clone();
        }
        let samples = self
            .samples
            .chunks_exact(3)
            .map(|p| LUMA_WEIGHTS[0] * p[0] + LUMA_WEIGHTS[1] * p[1] + LUMA_WEIGHTS[2] * p[2])
            .collect();
        Self { width: self.width, height: self.height, channels: 1, samples }
    }

    /// Replicate a gray image to three channels; RGB input is returned as-is.
    pub fn to_rgb(&self) -> Self {
        if self.channels == 3 {
            return self.clone();
        }
        let mut samples = Vec::with_capacity(self.samples.len() * 3);
        for &v in &self.samples {
            samples.extend_from_slice(&[v, v, v]);
        }
        Self { width: self.width, height: self.height, channels: 3, samples }
    }

    /// Clamp every sample into `[0, 1]`.
    pub fn clamp01(&self) -> Self {
        self.map(|s| s.clamp(0.0, 1.0))
    }

}

/// Decode a PNG, JPEG or binary PPM/PGM file.
///
/// Grayscale sources yield one channel, everything else three; alpha is
/// discarded. I/O failures, unrecognized formats and corrupt streams are
/// reported as distinct [`Error`] variants.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageU8> {
    let path = path.as_ref();
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let reader = ImageReader::open(path)
        .map_err(io_err)?
        .with_guessed_format()
        .map_err(io_err)?;
    let decoded = reader.decode().map_err(|e| match e {
        // Truncation inside the decoder surfaces as UnexpectedEof; that is
        // a corrupt stream, not an I/O failure on the file itself.
        ImageError::IoError(source) if source.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::CorruptData { path: path.to_path_buf(), detail: source.to_string() }
        }
        ImageError::IoError(source) => Error::Io { path: path.to_path_buf(), source },
        ImageError::Unsupported(u) => Error::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: u.to_string(),
        },
        other => Error::CorruptData {
            path: path.to_path_buf(),
            detail: other.to_string(),
        },
    })?;
    let gray_source = matches!(
        decoded.color(),
        image::ColorType::L8 | image::ColorType::L16 | image::ColorType::La8 | image::ColorType::La16
    );
    if gray_source {
        let luma = decoded.to_luma8();
        ImageU8::new(luma.width(), luma.height(), 1, luma.into_raw())
    } else {
        let rgb = decoded.to_rgb8();
        ImageU8::new(rgb.width(), rgb.height(), 3, rgb.into_raw())
    }
}

/// Encode `img` as an 8-bit PNG at `path` (regardless of extension).
pub fn save_image(img: &ImageU8, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dynimg = match img.channels {
        1 => DynamicImage::ImageLuma8(
            image::GrayImage::from_raw(img.width, img.height, img.samples.clone())
                .expect("validated dimensions"),
        ),
        _ => DynamicImage::ImageRgb8(
            image::RgbImage::from_raw(img.width, img.height, img.samples.clone())
                .expect("validated dimensions"),
        ),
    };
    dynimg.save_with_format(path, ImageFormat::Png).map_err(|e| match e {
        ImageError::IoError(source) => Error::Io { path: path.to_path_buf(), source },
        other => Error::CorruptData { path: path.to_path_buf(), detail: other.to_string() },
    })
}

/// Save a single-channel `[0, 1]` field as a 16-bit grayscale PNG.
pub fn save_gray16(field: &ImageF, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    assert_eq!(field.channels, 1, "save_gray16 takes a single-channel field");
    let samples: Vec<u16> = field
        .samples
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
        .collect();
    let buf: image::ImageBuffer<image::Luma<u16>, Vec<u16>> =
        image::ImageBuffer::from_raw(field.width, field.height, samples).expect("validated dimensions");
    DynamicImage::ImageLuma16(buf)
        .save_with_format(path, ImageFormat::Png)
        .map_err(|e| match e {
            ImageError::IoError(source) => Error::Io { path: path.to_path_buf(), source },
            other => Error::CorruptData { path: path.to_path_buf(), detail: other.to_string() },
        })
}

/// Load a 16-bit grayscale PNG back into a `[0, 1]` field.
pub fn load_gray16(path: impl AsRef<Path>) -> Result<ImageF> {
    let path = path.as_ref();
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let decoded = ImageReader::open(path)
        .map_err(io_err)?
        .decode()
        .map_err(|e| Error::CorruptData { path: path.to_path_buf(), detail: e.to_string() })?;
    let luma = decoded.to_luma16();
    ImageF::new(
        luma.width(),
        luma.height(),
        1,
        luma.into_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
    )
}

/// Map 8-bit samples onto `[0, 1]` by dividing by 255.
pub fn to_unit(img: &ImageU8) -> ImageF {
    ImageF {
        width: img.width,
        height: img.height,
        channels: img.channels,
        samples: img.samples.iter().map(|&s| s as f64 / 255.0).collect(),
    }
}

/// Quantize to 8 bits: `round(clamp(s, 0, 1) * 255)`, round half up.
pub fn from_unit(img: &ImageF) -> ImageU8 {
    ImageU8 {
        width: img.width,
        height: img.height,
        channels: img.channels,
        samples: img
            .samples
            .iter()
            .map(|&s| (s.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect(),
    }
}

/// Photometric inversion `s -> 1 - s`.
pub fn invert(img: &ImageF) -> ImageF {
    img.map(|s| 1.0 - s)
}

/// 5-point Laplacian (N+S+E+W-4C) with replicate boundary.
pub fn laplacian(ch: &ImageF) -> Result<ImageF> {
    assert_eq!(ch.channels(), 1, "laplacian takes a single-channel field");
    if ch.width < 3 || ch.height < 3 {
        return Err(Error::TooSmall(format!("laplacian needs at least 3x3, got {}x{}", ch.width, ch.height)));
    }
    let (w, h) = (ch.width as usize, ch.height as usize);
    let s = &ch.samples;
    let mut out = vec![0.0; s.len()];
    for y in 0..h {
        let up = y.saturating_sub(1);
        let down = if y + 1 < h { y + 1 } else { y };
        for x in 0..w {
            let left = x.saturating_sub(1);
            let right = if x + 1 < w { x + 1 } else { x };
            let c = s[y * w + x];
            // Differenced form so constant fields come out exactly zero.
            out[y * w + x] =
                (s[y * w + left] - c) + (s[y * w + right] - c) + (s[up * w + x] - c) + (s[down * w + x] - c);
        }
    }
    Ok(ImageF { width: ch.width, height: ch.height, channels: 1, samples: out })
}

/// Forward-difference gradient magnitude `sqrt((dx^2 + dy^2) / 2)` with
/// replicate boundary.
pub fn gradient_magnitude(ch: &ImageF) -> Result<ImageF> {
    assert_eq!(ch.channels(), 1, "gradient_magnitude takes a single-channel field");
    if ch.width < 2 || ch.height < 2 {
        return Err(Error::TooSmall(format!(
            "gradient needs at least 2x2, got {}x{}",
            ch.width, ch.height
        )));
    }
    let (w, h) = (ch.width as usize, ch.height as usize);
    let s = &ch.samples;
    let mut out = vec![0.0; s.len()];
    for y in 0..h {
        let down = if y + 1 < h { y + 1 } else { y };
        for x in 0..w {
            let right = if x + 1 < w { x + 1 } else { x };
            let c = s[y * w + x];
            let dx = s[y * w + right] - c;
            let dy = s[down * w + x] - c;
            out[y * w + x] = ((dx * dx + dy * dy) / 2.0).sqrt();
        }
    }
    Ok(ImageF { width: ch.width, height: ch.height, channels: 1, samples: out })
}

/// Separable Gaussian blur with replicate boundary; kernel radius
/// `ceil(3 * sigma)`. Works per channel. `sigma <= 0` returns the input.
pub fn gaussian_blur(img: &ImageF, sigma: f64) -> ImageF {
    if sigma <= 0.0 {
        return img.clone();
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for i in -radius..=radius {
        kernel.push((-(i as f64).powi(2) / (2.0 * sigma * sigma)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= norm;
    }

    let (w, h, ch) = (img.width as i64, img.height as i64, img.channels as usize);
    let horizontal = |src: &[f64]| -> Vec<f64> {
        let mut dst = vec![0.0; src.len()];
        for y in 0..h {
            for x in 0..w {
                for c in 0..ch {
                    let mut acc = 0.0;
                    for (ki, &kv) in kernel.iter().enumerate() {
                        let sx = (x + ki as i64 - radius).clamp(0, w - 1);
                        acc += kv * src[(y * w + sx) as usize * ch + c];
                    }
                    dst[(y * w + x) as usize * ch + c] = acc;
                }
            }
        }
        dst
    };
    let vertical = |src: &[f64]| -> Vec<f64> {
        let mut dst = vec![0.0; src.len()];
        for y in 0..h {
            for x in 0..w {
                for c in 0..ch {
                    let mut acc = 0.0;
                    for (ki, &kv) in kernel.iter().enumerate() {
                        let sy = (y + ki as i64 - radius).clamp(0, h - 1);
                        acc += kv * src[(sy * w + x) as usize * ch + c];
                    }
                    dst[(y * w + x) as usize * ch + c] = acc;
                }
            }
        }
        dst
    };
    let samples = vertical(&horizontal(&img.samples));
    ImageF { width: img.width, height: img.height, channels: img.channels, samples }
}

/// Mean and population standard deviation of a sample slice.
pub fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|&s| (s - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Summary statistics of one channel, with percentile queries.
#[derive(Debug, Clone)]
pub struct ChannelStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    sorted: Vec<f64>,
}

impl ChannelStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("channel_stats of empty channel".into()));
        }
        let (mean, std) = mean_std(samples);
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
        Ok(Self { mean, std, min: sorted[0], max: *sorted.last().unwrap(), sorted })
    }

    /// Percentile by sorted-rank linear interpolation, `p` in `[0, 100]`.
    pub fn percentile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 100.0);
        let rank = p / 100.0 * (self.sorted.len() - 1) as f64;
        let lo = rank.floor() as usize;
        let hi = rank.ceil() as usize;
        let frac = rank - lo as f64;
        self.sorted[lo] * (1.0 - frac) + self.sorted[hi] * frac
    }
}

/// Stats of a single-channel image.
pub fn channel_stats(ch: &ImageF) -> Result<ChannelStats> {
    assert_eq!(ch.channels(), 1, "channel_stats takes a single-channel image");
    ChannelStats::from_samples(ch.samples())
}
