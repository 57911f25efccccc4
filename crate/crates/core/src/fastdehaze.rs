//! The haze formation model `I = J t + A (1 - t)`, its exact inversion
//! (the test oracle), and two fast approximation pipelines:
//!
//! * variant A: per-channel LIP expansion of the inverted image followed
//!   by CLAHE, complemented back (`J = 1 - clahe(lip(1 - I))`);
//! * variant B: a smoothed log of the inverted image serves as the
//!   transmission estimate, and the radiance follows from the rewritten
//!   formation model in 0-255 arithmetic.

use serde::{Deserialize, Serialize};

use crate::enhance::{self, ClaheCfg};
use crate::freq;
use crate::imgcore::{self, ImageF};
use crate::lip::{self, LipParams};
use crate::pde::{self, EvolutionTrace, PdeParams};
use crate::{Error, Result};

/// Transmission floor before division in the exact inversion.
pub const T_MIN: f64 = 0.05;

/// Scene parameters of the formation model: airlight, scattering
/// coefficient and the per-pixel transmission field.
#[derive(Debug, Clone, PartialEq)]
pub struct HazeModel {
    pub airlight: f64,
    pub beta_scatter: f64,
    pub transmission: ImageF,
}

impl HazeModel {
    /// Build from a depth field: `t = exp(-beta * d)`.
    pub fn from_depth(depth: &ImageF, beta_scatter: f64, airlight: f64) -> Result<Self> {
        if !(airlight > 0.0 && airlight <= 1.0) {
            return Err(Error::invalid("airlight", format!("must be in (0, 1], got {airlight}")));
        }
        Ok(Self { airlight, beta_scatter, transmission: transmission_from_depth(depth, beta_scatter)? })
    }
}

/// Transmission from depth under homogeneous scattering: `t = exp(-beta d)`.
pub fn transmission_from_depth(depth: &ImageF, beta: f64) -> Result<ImageF> {
    if beta < 0.0 {
        return Err(Error::invalid("beta", format!("scattering coefficient must be nonnegative, got {beta}")));
    }
    if depth.samples().iter().any(|&d| d < 0.0) {
        return Err(Error::invalid("depth", "must be nonnegative".to_string()));
    }
    Ok(depth.map(|d| (-beta * d).exp()))
}

/// Render a hazy image: `I = J t + A (1 - t)` per channel, `t` single
/// channel.
pub fn synth_haze(clean: &ImageF, t: &ImageF, airlight: f64) -> Result<ImageF> {
    if t.channels() != 1 || t.width() != clean.width() || t.height() != clean.height() {
        return Err(Error::DimensionMismatch(format!(
            "transmission {}x{}x{} does not match image {}x{}",
            t.width(),
            t.height(),
            t.channels(),
            clean.width(),
            clean.height()
        )));
    }
    let ch = clean.channels() as usize;
    let samples = clean
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let tv = t.samples()[i / ch];
            j * tv + airlight * (1.0 - tv)
        })
        .collect();
    ImageF::new(clean.width(), clean.height(), clean.channels(), samples)
}

/// Invert the formation model exactly: `J = (I - A) / max(t, T_MIN) + A`,
/// clamped to `[0, 1]`.
pub fn restore_exact(hazy: &ImageF, t: &ImageF, airlight: f64) -> Result<ImageF> {
    if t.channels() != 1 || t.width() != hazy.width() || t.height() != hazy.height() {
        return Err(Error::DimensionMismatch("transmission does not match image".to_string()));
    }
    let ch = hazy.channels() as usize;
    let samples = hazy
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let tv = t.samples()[i / ch].max(T_MIN);
            ((v - airlight) / tv + airlight).clamp(0.0, 1.0)
        })
        .collect();
    ImageF::new(hazy.width(), hazy.height(), hazy.channels(), samples)
}

/// Smoothing filter selection for the transmission estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterKind {
    FractionalGaussian,
    Bilateral,
}

/// Filter configuration for variant B and the illumination estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterCfg {
    pub kind: FilterKind,
    /// Relative cutoff as a fraction of the half-diagonal frequency.
    pub d0: f64,
    /// Fractional order of the Gaussian low-pass.
    pub nu: f64,
    /// Spatial standard deviation of the bilateral filter, pixels.
    pub sigma_s: f64,
    /// Range standard deviation of the bilateral filter, 0-255 units.
    pub sigma_r: f64,
}

impl Default for FilterCfg {
    fn default() -> Self {
        Self { kind: FilterKind::FractionalGaussian, d0: 0.15, nu: 0.5, sigma_s: 8.0, sigma_r: 25.0 }
    }
}

impl FilterCfg {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::invalid("nu", format!("must be in (0, 1], got {}", self.nu)));
        }
        if self.d0 <= 0.0 {
            return Err(Error::invalid("d0", "must be positive".to_string()));
        }
        if self.sigma_s <= 0.0 || self.sigma_r <= 0.0 {
            return Err(Error::invalid("sigma_s/sigma_r", "must be positive".to_string()));
        }
        Ok(())
    }
}

/// Fractional-order Gaussian low-pass: spectrum multiplied by
/// `exp(-(D^2 / (2 D0^2))^nu)` with `D0 = d0 * half_diagonal`.
pub fn fractional_gaussian_lpf(field: &ImageF, d0: f64, nu: f64) -> ImageF {
    let cutoff = d0 * freq::half_diagonal(field.width(), field.height());
    freq::apply_radial_transfer(field, |d| {
        (-((d * d) / (2.0 * cutoff * cutoff)).powf(nu)).exp()
    })
}

/// Spatial bilateral filter: Gaussian spatial weights within radius
/// `ceil(3 sigma_s)`, Gaussian range weights, replicate boundary, weight
/// normalization.
pub fn bilateral_filter(field: &ImageF, sigma_s: f64, sigma_r: f64) -> ImageF {
    assert_eq!(field.channels(), 1, "bilateral_filter takes a single-channel field");
    let radius = (3.0 * sigma_s).ceil() as i64;
    let mut spatial = Vec::with_capacity((2 * radius as usize + 1).pow(2));
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            spatial.push((-((dx * dx + dy * dy) as f64) / (2.0 * sigma_s * sigma_s)).exp());
        }
    }
    let norm: f64 = spatial.iter().sum();
    for s in &mut spatial {
        *s /= norm;
    }

    let (w, h) = (field.width() as i64, field.height() as i64);
    let src = field.samples();
    let inv_2sr2 = 1.0 / (2.0 * sigma_r * sigma_r);
    let mut out = Vec::with_capacity(src.len());
    for y in 0..h {
        for x in 0..w {
            let center = src[(y * w + x) as usize];
            let mut acc = 0.0;
            let mut weight = 0.0;
            let mut k = 0;
            for dy in -radius..=radius {
                let sy = (y + dy).clamp(0, h - 1);
                for dx in -radius..=radius {
                    let sx = (x + dx).clamp(0, w - 1);
                    let v = src[(sy * w + sx) as usize];
                    let dv = v - center;
                    let wgt = spatial[k] * (-dv * dv * inv_2sr2).exp();
                    acc += wgt * v;
                    weight += wgt;
                    k += 1;
                }
            }
            out.push(acc / weight);
        }
    }
    ImageF::new(field.width(), field.height(), 1, out).expect("same shape")
}

/// Illumination estimate: fractional-Gaussian low-pass of the per-pixel
/// channel maximum, clamped into `[0, 1]`.
pub fn estimate_illumination(img: &ImageF, cfg: &FilterCfg) -> ImageF {
    let ch = img.channels() as usize;
    let maxes: Vec<f64> = img
        .samples()
        .chunks_exact(ch)
        .map(|p| p.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let field = ImageF::new(img.width(), img.height(), 1, maxes).expect("same shape");
    fractional_gaussian_lpf(&field, cfg.d0, cfg.nu).clamp01()
}

/// No-airlight approximate de-hazing: `J = (I - 1) / max(1 - L, 0.05) + 1`
/// with `L` the illumination estimate, clamped.
pub fn fast_dehaze_simple(img: &ImageF, cfg: &FilterCfg) -> ImageF {
    let illum = estimate_illumination(img, cfg);
    let ch = img.channels() as usize;
    let samples = img
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let denom = (1.0 - illum.samples()[i / ch]).max(0.05);
            ((v - 1.0) / denom + 1.0).clamp(0.0, 1.0)
        })
        .collect();
    ImageF::new(img.width(), img.height(), img.channels(), samples).expect("same shape")
}

/// Provenance tag of a transmission estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TprimeSource {
    LipClahe,
    FractionalLpf,
    Bilateral,
}

/// A refined transmission estimate with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionEstimate {
    pub t_prime: ImageF,
    pub source: TprimeSource,
}

/// Variant A output: the dehazed image, the adaptive LIP exponent used and
/// the refined transmission for debug inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct FastAOutcome {
    pub image: ImageF,
    pub lambda_used: f64,
    pub t_prime: TransmissionEstimate,
}

/// Fast variant A: per RGB channel, complement to the transmission-like
/// image `t = 1 - I`, expand globally with LIP (adaptive exponent from the
/// inverted image), refine locally with CLAHE, and complement back.
///
/// Best suited to uniform thin haze; heavy or uneven haze distorts colours.
pub fn fast_dehaze_a(img: &ImageF, clahe_cfg: &ClaheCfg, lip_params: &LipParams) -> Result<FastAOutcome> {
    if img.channels() != 3 {
        return Err(Error::NotRgb(img.channels()));
    }
    let inverted = imgcore::invert(&img.clamp01());
    let lambda_used = lip::resolve_lambda(&inverted, lip_params);
    let mut planes = Vec::with_capacity(3);
    for c in 0..3 {
        let expanded = inverted.plane(c).map(|t| lip::lip_mult(t, lambda_used));
        planes.push(enhance::clahe(&expanded, clahe_cfg)?);
    }
    let t_prime = ImageF::from_planes(&planes)?;
    Ok(FastAOutcome {
        image: imgcore::invert(&t_prime).clamp01(),
        lambda_used,
        t_prime: TransmissionEstimate { t_prime, source: TprimeSource::LipClahe },
    })
}

/// Scaling applied to the 20 log10 of the inverted image so it is
/// commensurate with 0-255 pixel data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LogScale {
    /// Rescale by `255 / (20 log10 255)` so the field occupies `[0, 255]`.
    #[default]
    FullRange,
    /// Keep the raw decibel values (top out near 48).
    Raw,
    /// Normalize by the per-image maximum.
    ImageMax,
}

/// Log of the inverted image in 0-255 units: `20 log10(max(255(1-I), 1))`,
/// scaled per [`LogScale`].
pub fn log_inverted_scaled(img: &ImageF, scale: LogScale) -> ImageF {
    let raw = img.map(|v| 20.0 * (255.0 * (1.0 - v.clamp(0.0, 1.0))).max(1.0).log10());
    match scale {
        LogScale::Raw => raw,
        LogScale::FullRange => {
            let k = 255.0 / (20.0 * 255.0f64.log10());
            raw.map(|v| v * k)
        }
        LogScale::ImageMax => {
            let max = raw.samples().iter().cloned().fold(0.0f64, f64::max);
            if max > 0.0 {
                raw.map(|v| v * 255.0 / max)
            } else {
                raw
            }
        }
    }
}

/// [`log_inverted_scaled`] with the default full-range scaling.
pub fn log_inverted(img: &ImageF) -> ImageF {
    log_inverted_scaled(img, LogScale::FullRange)
}

/// Intermediates of variant B kept for debug dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct FastBState {
    /// `255 - I` in 0-255 units.
    pub inverted: ImageF,
    pub log_inverted: ImageF,
    pub t_prime: TransmissionEstimate,
}

/// Variant B output.
#[derive(Debug, Clone, PartialEq)]
pub struct FastBOutcome {
    pub image: ImageF,
    pub state: FastBState,
    /// Present when the PDE refinement ran.
    pub trace: Option<EvolutionTrace>,
}

/// Fast variant B: the smoothed log of the inverted image acts as the
/// transmission estimate and the radiance follows from
/// `J = 255 (I - Ilog) / max(255 - t', 1)` per channel (0-255 arithmetic).
/// With `refine`, the result seeds the PDE evolution for gradual contrast
/// improvement.
pub fn fast_dehaze_b(
    img: &ImageF,
    cfg: &FilterCfg,
    scale: LogScale,
    refine: Option<&PdeParams>,
) -> FastBOutcome {
    let unit = img.clamp01();
    let inverted = unit.map(|v| 255.0 * (1.0 - v));
    let ilog = log_inverted_scaled(&unit, scale);

    let mut t_planes = Vec::with_capacity(ilog.channels() as usize);
    for c in 0..ilog.channels() {
        let plane = ilog.plane(c);
        let filtered = match cfg.kind {
            FilterKind::FractionalGaussian => fractional_gaussian_lpf(&plane, cfg.d0, cfg.nu),
            FilterKind::Bilateral => bilateral_filter(&plane, cfg.sigma_s, cfg.sigma_r),
        };
        t_planes.push(filtered.map(|v| v.clamp(0.0, 255.0)));
    }
    let t_prime_field = ImageF::from_planes(&t_planes).expect("same shape");

    let samples = unit
        .samples()
        .iter()
        .zip(ilog.samples())
        .zip(t_prime_field.samples())
        .map(|((&v, &lg), &tp)| {
            let num = 255.0 * v - lg;
            (255.0 * num / (255.0 - tp).max(1.0)).clamp(0.0, 255.0) / 255.0
        })
        .collect::<Vec<_>>();
    let dehazed =
        ImageF::new(unit.width(), unit.height(), unit.channels(), samples).expect("same shape");

    let (image, trace) = match refine {
        Some(params) => {
            let (refined, trace) = pde::evolve(&dehazed, params);
            (refined, Some(trace))
        }
        None => (dehazed, None),
    };

    let source = match cfg.kind {
        FilterKind::FractionalGaussian => TprimeSource::FractionalLpf,
        FilterKind::Bilateral => TprimeSource::Bilateral,
    };
    FastBOutcome {
        image,
        state: FastBState {
            inverted,
            log_inverted: ilog,
            t_prime: TransmissionEstimate { t_prime: t_prime_field, source },
        },
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64, w: u32, h: u32, ch: u8) -> ImageF {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..w as usize * h as usize * ch as usize)
            .map(|_| rng.random_range(0.0..=1.0))
            .collect::<Vec<f64>>();
        ImageF::new(w, h, ch, samples).unwrap()
    }

    fn smooth_field(seed: u64, w: u32, h: u32) -> ImageF {
        let noise = random_image(seed, w, h, 1);
        let blurred = imgcore::gaussian_blur(&noise, w as f64 / 16.0);
        // Rescale into a comfortable transmission band.
        let lo = blurred.samples().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = blurred.samples().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        blurred.map(|v| 0.1 + 0.85 * (v - lo) / (hi - lo).max(1e-12))
    }

    #[test]
    fn transmission_examples() {
        let zero_depth = ImageF::constant(4, 4, 1, 0.0);
        assert!(transmission_from_depth(&zero_depth, 1.3)
            .unwrap()
            .samples()
            .iter()
            .all(|&t| t == 1.0));
        let d = ImageF::constant(4, 4, 1, 0.7);
        assert!(transmission_from_depth(&d, 0.0).unwrap().samples().iter().all(|&t| t == 1.0));
        let ln2 = ImageF::constant(4, 4, 1, 2f64.ln());
        for &t in transmission_from_depth(&ln2, 1.0).unwrap().samples() {
            assert_abs_diff_eq!(t, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn synth_haze_examples() {
        let j = ImageF::constant(4, 4, 3, 0.2);
        let t1 = ImageF::constant(4, 4, 1, 1.0);
        assert_eq!(synth_haze(&j, &t1, 0.9).unwrap(), j);
        let t0 = ImageF::constant(4, 4, 1, 0.0);
        assert!(synth_haze(&j, &t0, 0.9).unwrap().samples().iter().all(|&v| v == 0.9));
        let th = ImageF::constant(4, 4, 1, 0.5);
        for &v in synth_haze(&j, &th, 1.0).unwrap().samples() {
            assert_abs_diff_eq!(v, 0.6, epsilon = 1e-15);
        }
    }

    #[test]
    fn synth_haze_rejects_mismatched_transmission() {
        let j = ImageF::constant(4, 4, 3, 0.2);
        let t = ImageF::constant(5, 4, 1, 0.5);
        assert!(matches!(synth_haze(&j, &t, 0.9), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn restore_examples() {
        let i = ImageF::constant(4, 4, 3, 0.6);
        let t1 = ImageF::constant(4, 4, 1, 1.0);
        assert_eq!(restore_exact(&i, &t1, 0.9).unwrap(), i);
        let th = ImageF::constant(4, 4, 1, 0.5);
        for &v in restore_exact(&i, &th, 1.0).unwrap().samples() {
            assert_abs_diff_eq!(v, 0.2, epsilon = 1e-12);
        }
    }

    #[test]
    fn formation_model_roundtrip() {
        for seed in 0..10u64 {
            let clean = random_image(seed, 32, 32, 3);
            let t = smooth_field(seed + 100, 32, 32);
            for airlight in [0.8, 0.9, 1.0] {
                let hazy = synth_haze(&clean, &t, airlight).unwrap();
                let restored = restore_exact(&hazy, &t, airlight).unwrap();
                for (i, (&r, &c)) in restored.samples().iter().zip(clean.samples()).enumerate() {
                    if t.samples()[i / 3] >= T_MIN {
                        assert_abs_diff_eq!(r, c, epsilon = 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn haze_shrinks_toward_clean_as_t_rises() {
        let clean = random_image(3, 16, 16, 3);
        let mut prev_dist = f64::INFINITY;
        for tv in [0.2, 0.5, 0.8, 0.95] {
            let t = ImageF::constant(16, 16, 1, tv);
            let hazy = synth_haze(&clean, &t, 0.9).unwrap();
            let dist = hazy
                .samples()
                .iter()
                .zip(clean.samples())
                .map(|(&a, &b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(dist <= prev_dist);
            prev_dist = dist;
        }
    }

    #[test]
    fn lpf_preserves_constants_and_bounds_gain() {
        let c = ImageF::constant(24, 24, 1, 0.37);
        for &v in fractional_gaussian_lpf(&c, 0.2, 0.5).samples() {
            assert_abs_diff_eq!(v, 0.37, epsilon = 1e-12);
        }
    }

    #[test]
    fn lpf_attenuation_matches_transfer_function() {
        // A pure cosine at k cycles is attenuated by H(k) exactly.
        let (w, h) = (64u32, 64u32);
        let k = 8.0;
        let field = ImageF::from_fn(w, h, |x, _| {
            0.5 + 0.25 * (2.0 * std::f64::consts::PI * k * x as f64 / w as f64).cos()
        });
        // Choose d0 so that D0 * sqrt(2) = k, making the expected gain 1/e.
        let d0 = (k / 2f64.sqrt()) / freq::half_diagonal(w, h);
        let out = fractional_gaussian_lpf(&field, d0, 1.0);
        let cos_at = |img: &ImageF| {
            let mut num = 0.0;
            let mut den = 0.0;
            for y in 0..h {
                for x in 0..w {
                    let c = (2.0 * std::f64::consts::PI * k * x as f64 / w as f64).cos();
                    num += (img.at(x, y, 0) - 0.5) * c;
                    den += c * c;
                }
            }
            num / den
        };
        assert_abs_diff_eq!(cos_at(&out) / cos_at(&field), (-1.0f64).exp(), epsilon = 1e-6);
    }

    #[test]
    fn lpf_nu_one_reduces_to_gaussian_transfer() {
        let field = random_image(5, 32, 32, 1);
        let a = fractional_gaussian_lpf(&field, 0.3, 1.0);
        let cutoff = 0.3 * freq::half_diagonal(32, 32);
        let b = freq::apply_radial_transfer(&field, |d| (-(d * d) / (2.0 * cutoff * cutoff)).exp());
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn lpf_output_of_real_field_is_real() {
        let field = random_image(11, 48, 36, 1);
        let cutoff = 0.15 * freq::half_diagonal(48, 36);
        let residue =
            freq::imaginary_residue(&field, |d| (-((d * d) / (2.0 * cutoff * cutoff)).powf(0.5)).exp());
        assert!(residue <= 1e-10, "imaginary residue {residue}");
    }

    #[test]
    fn bilateral_preserves_constants() {
        let c = ImageF::constant(20, 20, 1, 42.0);
        for &v in bilateral_filter(&c, 2.0, 10.0).samples() {
            assert_abs_diff_eq!(v, 42.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn bilateral_with_huge_range_sigma_is_gaussian_blur() {
        let field = random_image(7, 24, 24, 1).map(|v| v * 255.0);
        let a = bilateral_filter(&field, 2.0, 1e6);
        let b = imgcore::gaussian_blur(&field, 2.0);
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-6 * 255.0);
        }
    }

    #[test]
    fn bilateral_preserves_step_edges_better_than_gaussian() {
        let step = ImageF::from_fn(32, 16, |x, _| if x < 16 { 0.0 } else { 255.0 });
        let bf = bilateral_filter(&step, 3.0, 10.0);
        let gb = imgcore::gaussian_blur(&step, 3.0);
        let l1 = |img: &ImageF| {
            img.samples()
                .iter()
                .zip(step.samples())
                .map(|(&a, &b)| (a - b).abs())
                .sum::<f64>()
        };
        assert!(l1(&bf) < l1(&gb));
    }

    #[test]
    fn illumination_estimate_examples() {
        let cfg = FilterCfg::default();
        let c = ImageF::constant(32, 32, 3, 0.4);
        for &v in estimate_illumination(&c, &cfg).samples() {
            assert_abs_diff_eq!(v, 0.4, epsilon = 1e-9);
        }
        let white = ImageF::constant(32, 32, 3, 1.0);
        for &v in estimate_illumination(&white, &cfg).samples() {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-9);
        }
        let textured = random_image(3, 64, 64, 3);
        let lum = estimate_illumination(&textured, &cfg);
        let max_field = ImageF::new(
            64,
            64,
            1,
            textured
                .samples()
                .chunks_exact(3)
                .map(|p| p.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
                .collect(),
        )
        .unwrap();
        assert!(
            crate::metrics::average_gradient(&lum) <= crate::metrics::average_gradient(&max_field)
        );
    }

    #[test]
    fn fast_dehaze_simple_examples() {
        // L = 0 (yields division by one): output equals input.
        let dark = ImageF::constant(32, 32, 3, 0.0);
        let out = fast_dehaze_simple(&dark, &FilterCfg::default());
        for &v in out.samples() {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-9);
        }
        // Arithmetic: I = 0.6, L = 0.5 -> 0.2 (constant image gives L = I_max).
        // Constructed via the formula directly on one pixel.
        let j = (0.6 - 1.0) / (1.0 - 0.5f64).max(0.05) + 1.0;
        assert_abs_diff_eq!(j, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn fast_a_double_complement_identity() {
        // With lambda = 1 and an identity local refinement the pipeline is
        // a double complement: J = 1 - lip(1 - I, 1) = I.
        let img = random_image(9, 32, 32, 3);
        let inverted = imgcore::invert(&img);
        let back = imgcore::invert(&inverted.map(|t| lip::lip_mult(t, 1.0)));
        for (a, b) in back.samples().iter().zip(img.samples()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn fast_a_defaults_match_published_settings() {
        let cfg = ClaheCfg::default();
        assert_eq!(cfg.clip, 0.002);
        assert_eq!(cfg.tiles, 32);
    }

    #[test]
    fn fast_a_propagates_tiny_image_error() {
        let img = random_image(2, 16, 16, 3);
        assert!(fast_dehaze_a(&img, &ClaheCfg::default(), &LipParams::default()).is_err());
    }

    #[test]
    fn log_inverted_examples() {
        // I = 0: inverted 255 -> scaled 255.
        let black = ImageF::constant(2, 2, 1, 0.0);
        for &v in log_inverted(&black).samples() {
            assert_abs_diff_eq!(v, 255.0, epsilon = 1e-9);
        }
        // Inverted value 1 (I = 254/255): log 1 = 0.
        let nearly_white = ImageF::constant(2, 2, 1, 254.0 / 255.0);
        for &v in log_inverted(&nearly_white).samples() {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-9);
        }
        // Inverted value 10: raw 20 dB, scaled 20 * 255 / (20 log10 255).
        let tenth = ImageF::constant(2, 2, 1, 245.0 / 255.0);
        let expected = 20.0 * 255.0 / (20.0 * 255.0f64.log10());
        for &v in log_inverted(&tenth).samples() {
            assert_abs_diff_eq!(v, expected, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(expected, 105.9612, epsilon = 1e-3);
        // Raw scale keeps decibels.
        for &v in log_inverted_scaled(&black, LogScale::Raw).samples() {
            assert_abs_diff_eq!(v, 20.0 * 255.0f64.log10(), epsilon = 1e-9);
        }
    }

    #[test]
    fn fast_b_white_stays_white() {
        let white = ImageF::constant(32, 32, 3, 1.0);
        let out = fast_dehaze_b(&white, &FilterCfg::default(), LogScale::FullRange, None);
        for &v in out.image.samples() {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn fast_b_extremes_stay_in_range() {
        for img in [
            ImageF::constant(32, 32, 3, 0.0),
            ImageF::constant(32, 32, 3, 1.0),
            random_image(13, 32, 32, 3),
        ] {
            for scale in [LogScale::FullRange, LogScale::Raw, LogScale::ImageMax] {
                let out = fast_dehaze_b(&img, &FilterCfg::default(), scale, None);
                assert!(out.image.samples().iter().all(|&v| (0.0..=1.0).contains(&v)));
                assert!(out.state.t_prime.t_prime.samples().iter().all(|&v| v.is_finite()));
            }
        }
    }

    #[test]
    fn fast_b_bilateral_variant_runs() {
        let img = random_image(21, 24, 24, 3);
        let cfg = FilterCfg { kind: FilterKind::Bilateral, sigma_s: 2.0, ..FilterCfg::default() };
        let out = fast_dehaze_b(&img, &cfg, LogScale::FullRange, None);
        assert_eq!(out.state.t_prime.source, TprimeSource::Bilateral);
        assert!(out.image.samples().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn fast_b_refinement_attaches_trace() {
        let img = random_image(23, 32, 32, 3);
        let params = PdeParams { max_iters: 3, ..PdeParams::default() };
        let out = fast_dehaze_b(&img, &FilterCfg::default(), LogScale::FullRange, Some(&params));
        let trace = out.trace.expect("refinement trace");
        assert!(trace.iters_run <= 3);
    }
}
