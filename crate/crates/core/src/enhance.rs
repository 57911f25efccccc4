//! Pre- and post-enhancement operators: contrast-limited adaptive histogram
//! equalization (CLAHE), illumination-reflectance contrast enhancement
//! (IRCES), fuzzy homomorphic enhancement (FHE) and gain-offset-correction
//! contrast stretching (GOC-CS).

use serde::{Deserialize, Serialize};

use crate::freq;
use crate::imgcore::{self, ChannelStats, ImageF};
use crate::{Error, Result};

/// CLAHE configuration: `clip` is a fraction of the tile pixel count,
/// `tiles` the tile grid edge count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaheCfg {
    pub clip: f64,
    pub tiles: u32,
}

impl Default for ClaheCfg {
    fn default() -> Self {
        Self { clip: 0.002, tiles: 32 }
    }
}

impl ClaheCfg {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip > 0.0 && self.clip <= 1.0) {
            return Err(Error::invalid("clip", format!("must be in (0, 1], got {}", self.clip)));
        }
        if self.tiles < 1 {
            return Err(Error::invalid("tiles", "must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// Contrast-limited adaptive histogram equalization of one channel.
///
/// Per-tile 256-bin histograms are clipped at `clip * tile_pixels` (floored
/// at one count) with the excess redistributed uniformly over all bins in a
/// single pass; the output interpolates bilinearly between the four
/// surrounding tile mappings, with edge tiles clamped.
pub fn clahe(ch: &ImageF, cfg: &ClaheCfg) -> Result<ImageF> {
    assert_eq!(ch.channels(), 1, "clahe takes a single-channel image");
    cfg.validate()?;
    let (w, h) = (ch.width() as usize, ch.height() as usize);
    let tiles = cfg.tiles as usize;
    if w < tiles || h < tiles {
        return Err(Error::TooSmall(format!(
            "{w}x{h} image cannot hold a {tiles}x{tiles} tile grid"
        )));
    }

    let levels: Vec<usize> = ch
        .samples()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as usize)
        .collect();

    let tile_w = w as f64 / tiles as f64;
    let tile_h = h as f64 / tiles as f64;

    // Per-tile equalization mappings, 256 entries each.
    let mut maps = vec![vec![0.0f64; 256]; tiles * tiles];
    for ty in 0..tiles {
        let y0 = (ty as f64 * tile_h).floor() as usize;
        let y1 = if ty + 1 == tiles { h } else { ((ty + 1) as f64 * tile_h).floor() as usize };
        for tx in 0..tiles {
            let x0 = (tx as f64 * tile_w).floor() as usize;
            let x1 = if tx + 1 == tiles { w } else { ((tx + 1) as f64 * tile_w).floor() as usize };
            let area = ((x1 - x0) * (y1 - y0)) as f64;
            let mut hist = [0.0f64; 256];
            for y in y0..y1 {
                for x in x0..x1 {
                    hist[levels[y * w + x]] += 1.0;
                }
            }
            let limit = (cfg.clip * area).max(1.0);
            let mut excess = 0.0;
            for b in hist.iter_mut() {
                if *b > limit {
                    excess += *b - limit;
                    *b = limit;
                }
            }
            let add = excess / 256.0;
            let mut cdf = 0.0;
            let map = &mut maps[ty * tiles + tx];
            for (v, b) in hist.iter().enumerate() {
                cdf += b + add;
                map[v] = cdf / area * 255.0;
            }
        }
    }
    let mut out = Vec::with_capacity(levels.len());
    for y in 0..h {
        let fy = (y as f64 + 0.5) / tile_h - 0.5;
        let ty0 = fy.floor().clamp(0.0, (tiles - 1) as f64) as usize;
        let ty1 = (ty0 + 1).min(tiles - 1);
        let wy = (fy - fy.floor()).clamp(0.0, 1.0);
        let wy = if fy < 0.0 { 0.0 } else { wy };
        for x in 0..w {
            let fx = (x as f64 + 0.5) / tile_w - 0.5;
            let tx0 = fx.floor().clamp(0.0, (tiles - 1) as f64) as usize;
            let tx1 = (tx0 + 1).min(tiles - 1);
            let wx = (fx - fx.floor()).clamp(0.0, 1.0);
            let wx = if fx < 0.0 { 0.0 } else { wx };
            let v = levels[y * w + x];
            let top = maps[ty0 * tiles + tx0][v] * (1.0 - wx) + maps[ty0 * tiles + tx1][v] * wx;
            let bottom = maps[ty1 * tiles + tx0][v] * (1.0 - wx) + maps[ty1 * tiles + tx1][v] * wx;
            out.push(((top * (1.0 - wy) + bottom * wy) / 255.0).clamp(0.0, 1.0));
        }
    }
    ImageF::new(ch.width(), ch.height(), 1, out)
}

/// IRCES configuration; `sigma_l = None` selects `min(width, height) / 4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrcesCfg {
    pub sigma_l: Option<f64>,
    pub gamma: f64,
    pub sharpen_k: f64,
    pub noise_gate: f64,
}

impl Default for IrcesCfg {
    fn default() -> Self {
        Self { sigma_l: None, gamma: 0.7, sharpen_k: 0.5, noise_gate: 0.02 }
    }
}

impl IrcesCfg {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid("gamma", format!("must be in (0, 1], got {}", self.gamma)));
        }
        if self.sharpen_k < 0.0 {
            return Err(Error::invalid("sharpen_k", "must be nonnegative".to_string()));
        }
        if !(0.0..=1.0).contains(&self.noise_gate) {
            return Err(Error::invalid("noise_gate", "must be in [0, 1]".to_string()));
        }
        Ok(())
    }
}

const IRCES_REFLECTANCE_EPS: f64 = 1e-4;
const IRCES_SHARPEN_SIGMA: f64 = 1.5;

/// Illumination-reflectance contrast enhancement: brightens via a power law
/// on the estimated illumination and sharpens edges through a gradient-gated
/// unsharp mask, so flat (noisy) regions are left alone.
pub fn irces(img: &ImageF, cfg: &IrcesCfg) -> ImageF {
    let sigma = cfg
        .sigma_l
        .unwrap_or_else(|| img.width().min(img.height()) as f64 / 4.0);
    let illum = imgcore::gaussian_blur(&img.gray(), sigma);
    let ch = img.channels() as usize;

    let mut base = Vec::with_capacity(img.samples().len());
    for (i, &v) in img.samples().iter().enumerate() {
        let l = illum.samples()[i / ch];
        let reflectance = v / (l + IRCES_REFLECTANCE_EPS);
        base.push((l.max(0.0).powf(cfg.gamma) * reflectance).clamp(0.0, 1.0));
    }
    let base = ImageF::new(img.width(), img.height(), img.channels(), base).expect("same shape");
    if cfg.sharpen_k == 0.0 {
        return base;
    }

    let blurred = imgcore::gaussian_blur(&base, IRCES_SHARPEN_SIGMA);
    let grad = imgcore::gradient_magnitude(&base.gray()).expect("image at least 2x2");
    let mut out = Vec::with_capacity(base.samples().len());
    for (i, (&v, &bl)) in base.samples().iter().zip(blurred.samples()).enumerate() {
        let gate = if grad.samples()[i / ch] > cfg.noise_gate { 1.0 } else { 0.0 };
        out.push((v + cfg.sharpen_k * (v - bl) * gate).clamp(0.0, 1.0));
    }
    ImageF::new(img.width(), img.height(), img.channels(), out).expect("same shape")
}

/// FHE configuration: homomorphic low/high frequency gains, relative cutoff
/// and the number of fuzzy intensification passes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FheCfg {
    pub gamma_low: f64,
    pub gamma_high: f64,
    pub d0: f64,
    pub int_passes: u32,
}

impl Default for FheCfg {
    fn default() -> Self {
        Self { gamma_low: 0.6, gamma_high: 1.4, d0: 0.1, int_passes: 1 }
    }
}

impl FheCfg {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_low > 0.0 && self.gamma_high >= self.gamma_low) {
            return Err(Error::invalid(
                "gamma_low/gamma_high",
                format!("need high >= low > 0, got ({}, {})", self.gamma_low, self.gamma_high),
            ));
        }
        if self.d0 <= 0.0 {
            return Err(Error::invalid("d0", "must be positive".to_string()));
        }
        Ok(())
    }
}

/// Pal-King style fuzzy intensification: S-shaped remap with fixpoints at
/// 0, 1/2 and 1.
pub fn fuzzy_intensify(mu: f64) -> f64 {
    if mu <= 0.5 {
        2.0 * mu * mu
    } else {
        1.0 - 2.0 * (1.0 - mu) * (1.0 - mu)
    }
}

/// Fuzzy homomorphic enhancement: per channel, a high-emphasis filter on the
/// log-domain image followed by min-max normalization and `int_passes`
/// rounds of fuzzy intensification.
pub fn fhe(img: &ImageF, cfg: &FheCfg) -> ImageF {
    let d0 = cfg.d0 * freq::half_diagonal(img.width(), img.height());
    let mut planes = Vec::with_capacity(img.channels() as usize);
    for c in 0..img.channels() {
        let z = img.plane(c).map(|v| (1.0 + 255.0 * v.clamp(0.0, 1.0)).ln());
        let filtered = freq::apply_radial_transfer(&z, |d| {
            cfg.gamma_low
                + (cfg.gamma_high - cfg.gamma_low) * (1.0 - (-(d * d) / (2.0 * d0 * d0)).exp())
        });
        let restored = filtered.map(|v| (v.exp() - 1.0) / 255.0);
        let stats = ChannelStats::from_samples(restored.samples()).expect("nonempty");
        let span = stats.max - stats.min;
        let mut plane = if span > 1e-9 {
            restored.map(|v| (v - stats.min) / span)
        } else {
            restored.map(|v| v.clamp(0.0, 1.0))
        };
        for _ in 0..cfg.int_passes {
            plane = plane.map(fuzzy_intensify);
        }
        planes.push(plane);
    }
    ImageF::from_planes(&planes).expect("same shape")
}

/// Percentile clip points of the gain-offset stretch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GocCsCfg {
    pub p_low: f64,
    pub p_high: f64,
}

impl Default for GocCsCfg {
    fn default() -> Self {
        Self { p_low: 1.0, p_high: 99.0 }
    }
}

impl GocCsCfg {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.p_low && self.p_low < self.p_high && self.p_high <= 100.0) {
            return Err(Error::invalid(
                "p_low/p_high",
                format!("need 0 <= low < high <= 100, got ({}, {})", self.p_low, self.p_high),
            ));
        }
        Ok(())
    }
}

/// Gain-offset-correction contrast stretching: each channel is stretched
/// so its `p_low`/`p_high` percentiles map to 0 and 1. Nearly constant
/// channels pass through unchanged.
pub fn goc_cs(img: &ImageF, cfg: &GocCsCfg) -> Result<ImageF> {
    if img.channels() != 3 {
        return Err(Error::NotRgb(img.channels()));
    }
    cfg.validate()?;
    let mut planes = Vec::with_capacity(3);
    for c in 0..3 {
        let plane = img.plane(c);
        let stats = channel_percentiles(&plane, cfg.p_low, cfg.p_high)?;
        let (lo, hi) = stats;
        if hi - lo < 1e-4 {
            planes.push(plane);
        } else {
            planes.push(plane.map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)));
        }
    }
    ImageF::from_planes(&planes)
}

fn channel_percentiles(plane: &ImageF, p_low: f64, p_high: f64) -> Result<(f64, f64)> {
    let stats = ChannelStats::from_samples(plane.samples())?;
    Ok((stats.percentile(p_low), stats.percentile(p_high)))
}
