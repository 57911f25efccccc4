//! Log-less logarithmic image processing (LIP) scalar multiplication and
//! the adaptive exponent driven by black/white area fractions.
//!
//! The operator `lip_mult(x, lambda)` computes
//! `((1+x)^l - (1-x)^l) / ((1+x)^l + (1-x)^l)`, i.e. scalar multiplication
//! in the logarithmic gray-tone algebra evaluated in closed form, without
//! logarithms. It is equivalent to `tanh(lambda * atanh(x))` on `[0, 1)`,
//! fixes 0 and 1, and expands (`lambda > 1`) or compresses (`lambda < 1`)
//! tones monotonically.

use serde::{Deserialize, Serialize};

use crate::imgcore::ImageF;
use crate::{Error, Result};

/// Parameters of the LIP operator and its exponent adaptation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipParams {
    /// Fixed exponent; `None` selects adaptive computation from BA/WA.
    pub lambda: Option<f64>,
    /// Gray threshold below which a pixel counts as black area.
    pub t_low: f64,
    /// Gray threshold above which a pixel counts as white area.
    pub t_high: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_base: f64,
    pub w_black: f64,
    pub w_white: f64,
}

impl Default for LipParams {
    fn default() -> Self {
        Self {
            lambda: None,
            t_low: 0.15,
            t_high: 0.85,
            lambda_min: 1.0,
            lambda_max: 4.0,
            lambda_base: 2.0,
            w_black: 2.0,
            w_white: 1.0,
        }
    }
}

impl LipParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min > 0.0 && self.lambda_min <= self.lambda_max) {
            return Err(Error::invalid(
                "lambda_min/lambda_max",
                format!("need 0 < min <= max, got [{}, {}]", self.lambda_min, self.lambda_max),
            ));
        }
        if let Some(l) = self.lambda {
            if !(l >= self.lambda_min && l <= self.lambda_max) {
                return Err(Error::invalid(
                    "lambda",
                    format!("{l} outside [{}, {}]", self.lambda_min, self.lambda_max),
                ));
            }
        }
        if !(0.0 <= self.t_low && self.t_low < self.t_high && self.t_high <= 1.0) {
            return Err(Error::invalid(
                "t_low/t_high",
                format!("need 0 <= t_low < t_high <= 1, got ({}, {})", self.t_low, self.t_high),
            ));
        }
        Ok(())
    }
}

/// Fractions of dark (black) and light (white) pixels in an image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaStats {
    pub black: f64,
    pub white: f64,
}

/// LIP scalar multiplication of a gray value `x` in `[0, 1]` by `lambda`.
pub fn lip_mult(x: f64, lambda: f64) -> f64 {
    let up = (1.0 + x).powf(lambda);
    let down = (1.0 - x).powf(lambda);
    (up - down) / (up + down)
}

/// Count gray pixels below `t_low` (black area) and above `t_high`
/// (white area), as fractions of the pixel count.
pub fn black_white_area(img: &ImageF, t_low: f64, t_high: f64) -> AreaStats {
    let gray = img.gray();
    let n = gray.samples().len() as f64;
    let black = gray.samples().iter().filter(|&&v| v < t_low).count() as f64 / n;
    let white = gray.samples().iter().filter(|&&v| v > t_high).count() as f64 / n;
    AreaStats { black, white }
}

/// Exponent adapted to image content: darker images get a larger lambda
/// (stronger expansion), lighter ones a smaller lambda, clamped to the
/// configured bounds.
pub fn adaptive_lambda(area: AreaStats, params: &LipParams) -> f64 {
    (params.lambda_base + params.w_black * area.black - params.w_white * area.white)
        .clamp(params.lambda_min, params.lambda_max)
}

/// The exponent the pipelines use: the fixed override if present,
/// otherwise [`adaptive_lambda`] of the image's area fractions.
pub fn resolve_lambda(img: &ImageF, params: &LipParams) -> f64 {
    match params.lambda {
        Some(l) => l,
        None => adaptive_lambda(black_white_area(img, params.t_low, params.t_high), params),
    }
}
