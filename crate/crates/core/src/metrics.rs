//! No-reference quality metrics: entropy, average gradient, global contrast
//! factor, colourfulness, blockwise contrast (EMEC) and the underwater
//! colour image quality measure (UCIQE), plus the paired ratios used to
//! compare an enhanced image against its input.
//!
//! All metrics are evaluated on the 8-bit quantized representation, matching
//! how they are reported in the enhancement literature. A value after
//! enhancement that exceeds the value before counts as an improvement.

use serde::{Deserialize, Serialize};

use crate::imgcore::{self, ChannelStats, ImageF, LUMA_WEIGHTS};
use crate::{Error, Result};

/// UCIQE combination weights from the metric's defining publication
/// (Yang & Sowmya).
pub const UCIQE_COEFFS: [f64; 3] = [0.4680, 0.2745, 0.2576];

/// Resolution weights of the global contrast factor, from the GCF
/// publication (Matkovic et al.): `w_i = (-0.406385 i/9 + 0.334573) i/9 +
/// 0.0877526` for the i-th of 9 half-resolutions.
fn gcf_weight(level: usize) -> f64 {
    let i = level as f64 / 9.0;
    (-0.406385 * i + 0.334573) * i + 0.0877526
}

/// Hasler-Suesstrunk colourfulness mean weight.
const COLOURFULNESS_MEAN_WEIGHT: f64 = 0.3;

/// Quantize one sample to an integer 0-255 level (kept as f64).
fn q255(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * 255.0).round()
}

/// Quantized gray image: channels are rounded to 8-bit levels, combined
/// with BT.601 weights, and rounded to a level again. Values are integers
/// in 0-255 stored as f64.
fn quantized_gray(img: &ImageF) -> ImageF {
    if img.channels() == 1 {
        return img.map(q255);
    }
    let mut samples = Vec::with_capacity(img.pixel_count());
    for p in img.samples().chunks_exact(3) {
        let g = LUMA_WEIGHTS[0] * q255(p[0]) + LUMA_WEIGHTS[1] * q255(p[1]) + LUMA_WEIGHTS[2] * q255(p[2]);
        samples.push(g.round());
    }
    ImageF::new(img.width(), img.height(), 1, samples).expect("same shape")
}

/// Shannon entropy (bits) of the 256-bin gray histogram.
pub fn entropy(img: &ImageF) -> f64 {
    let gray = quantized_gray(img);
    let mut hist = [0usize; 256];
    for &v in gray.samples() {
        hist[v as usize] += 1;
    }
    let n = gray.samples().len() as f64;
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Mean gradient magnitude of the quantized gray image (0-255 scale).
pub fn average_gradient(img: &ImageF) -> f64 {
    let g = imgcore::gradient_magnitude(&quantized_gray(img)).expect("image at least 2x2");
    g.samples().iter().sum::<f64>() / g.samples().len() as f64
}

/// Relative average gradient `AG(after) / AG(before)`; `None` when the
/// before-image has no gradient content.
pub fn rag(before: &ImageF, after: &ImageF) -> Option<f64> {
    let b = average_gradient(before);
    if b < 1e-9 {
        return None;
    }
    Some(average_gradient(after) / b)
}

/// Contrast enhancement factor: the ratio of the coefficients of variation
/// `(std/mean)` of the gray images after and before.
pub fn contrast_factor_f(before: &ImageF, after: &ImageF) -> Result<f64> {
    let (mb, sb) = imgcore::mean_std(quantized_gray(before).samples());
    let (ma, sa) = imgcore::mean_std(quantized_gray(after).samples());
    if mb < 1e-6 || ma < 1e-6 {
        return Err(Error::Degenerate("contrast factor needs nonzero gray means".into()));
    }
    if sb == 0.0 {
        return Err(Error::Degenerate("contrast factor undefined for a constant before-image".into()));
    }
    Ok((sa / ma) / (sb / mb))
}

/// Mean absolute lightness difference to the 4-neighbors, averaged over
/// the field.
fn local_contrast(lightness: &ImageF) -> f64 {
    let (w, h) = (lightness.width() as usize, lightness.height() as usize);
    let s = lightness.samples();
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            let c = s[y * w + x];
            let mut acc = 0.0;
            let mut count = 0.0;
            if x > 0 {
                acc += (s[y * w + x - 1] - c).abs();
                count += 1.0;
            }
            if x + 1 < w {
                acc += (s[y * w + x + 1] - c).abs();
                count += 1.0;
            }
            if y > 0 {
                acc += (s[(y - 1) * w + x] - c).abs();
                count += 1.0;
            }
            if y + 1 < h {
                acc += (s[(y + 1) * w + x] - c).abs();
                count += 1.0;
            }
            if count > 0.0 {
                total += acc / count;
            }
        }
    }
    total / (w * h) as f64
}

/// 2x2 superpixel average; odd trailing rows/columns average what exists.
fn half_resolution(gray: &ImageF) -> ImageF {
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let nw = w.div_ceil(2);
    let nh = h.div_ceil(2);
    let s = gray.samples();
    let mut out = Vec::with_capacity(nw * nh);
    for by in 0..nh {
        for bx in 0..nw {
            let mut acc = 0.0;
            let mut count = 0.0;
            for dy in 0..2 {
                for dx in 0..2 {
                    let (x, y) = (bx * 2 + dx, by * 2 + dy);
                    if x < w && y < h {
                        acc += s[y * w + x];
                        count += 1.0;
                    }
                }
            }
            out.push(acc / count);
        }
    }
    ImageF::new(nw as u32, nh as u32, 1, out).expect("halved shape")
}

/// Global contrast factor: weighted sum of mean local lightness contrast
/// over 9 successive half-resolutions, lightness `100 * g^(1/2.5)`.
pub fn gcf(img: &ImageF) -> f64 {
    let mut gray = quantized_gray(img).map(|v| v / 255.0);
    let mut total = 0.0;
    for level in 1..=9 {
        let lightness = gray.map(|g| 100.0 * g.powf(1.0 / 2.5));
        total += gcf_weight(level) * local_contrast(&lightness);
        gray = half_resolution(&gray);
    }
    total
}

fn rg_yb_stats(img: &ImageF) -> Result<(f64, f64, f64, f64)> {
    if img.channels() != 3 {
        return Err(Error::NotRgb(img.channels()));
    }
    let mut rg = Vec::with_capacity(img.pixel_count());
    let mut yb = Vec::with_capacity(img.pixel_count());
    for p in img.samples().chunks_exact(3) {
        let (r, g, b) = (q255(p[0]), q255(p[1]), q255(p[2]));
        rg.push(r - g);
        yb.push((r + g) / 2.0 - b);
    }
    let (mu_rg, sd_rg) = imgcore::mean_std(&rg);
    let (mu_yb, sd_yb) = imgcore::mean_std(&yb);
    Ok((mu_rg, sd_rg, mu_yb, sd_yb))
}

/// Hasler-Suesstrunk colourfulness on the opponent axes `R-G` and
/// `(R+G)/2 - B` (0-255 units).
pub fn colourfulness(img: &ImageF) -> Result<f64> {
    let (mu_rg, sd_rg, mu_yb, sd_yb) = rg_yb_stats(img)?;
    Ok((sd_rg * sd_rg + sd_yb * sd_yb).sqrt()
        + COLOURFULNESS_MEAN_WEIGHT * (mu_rg * mu_rg + mu_yb * mu_yb).sqrt())
}

/// Colour enhancement factor `colourfulness(after) / colourfulness(before)`;
/// `None` for an achromatic before-image.
pub fn cef(before: &ImageF, after: &ImageF) -> Option<f64> {
    let b = colourfulness(before).ok()?;
    if b < 1e-9 {
        return None;
    }
    Some(colourfulness(after).ok()? / b)
}

/// Blockwise colour contrast: mean over 8x8 blocks and channels of
/// `20 log10((max + 1) / (min + 1))` in 0-255 units.
pub fn emec(img: &ImageF) -> Result<f64> {
    if img.channels() != 3 {
        return Err(Error::NotRgb(img.channels()));
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut total = 0.0;
    let mut blocks = 0.0;
    for c in 0..3 {
        let plane = img.plane(c).map(q255);
        let s = plane.samples();
        for by in (0..h).step_by(8) {
            for bx in (0..w).step_by(8) {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for y in by..(by + 8).min(h) {
                    for x in bx..(bx + 8).min(w) {
                        let v = s[y * w + x];
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                total += 20.0 * ((hi + 1.0) / (lo + 1.0)).log10();
                blocks += 1.0;
            }
        }
    }
    Ok(total / blocks)
}

fn srgb_linearize(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// sRGB (unit range) to CIELab. The white point is taken as the row sums
/// of the RGB-to-XYZ matrix (D65 by construction), which keeps achromatic
/// inputs at exactly zero chroma.
fn rgb_to_lab(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    const M: [[f64; 3]; 3] = [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ];
    let (rl, gl, bl) = (srgb_linearize(r), srgb_linearize(g), srgb_linearize(b));
    let norm = |row: &[f64; 3]| {
        (row[0] * rl + row[1] * gl + row[2] * bl) / (row[0] + row[1] + row[2])
    };
    let fx = lab_f(norm(&M[0]));
    let fy = lab_f(norm(&M[1]));
    let fz = lab_f(norm(&M[2]));
    (116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

/// Underwater colour image quality: weighted sum of chroma spread, top-
/// minus bottom-percentile lightness contrast and mean saturation in
/// CIELab, each normalized to unit scale.
pub fn uciqe(img: &ImageF) -> Result<f64> {
    if img.channels() != 3 {
        return Err(Error::NotRgb(img.channels()));
    }
    let n = img.pixel_count();
    let mut chroma = Vec::with_capacity(n);
    let mut lightness = Vec::with_capacity(n);
    let mut saturation = Vec::with_capacity(n);
    for p in img.samples().chunks_exact(3) {
        let (l, a, b) = rgb_to_lab(q255(p[0]) / 255.0, q255(p[1]) / 255.0, q255(p[2]) / 255.0);
        let c = (a * a + b * b).sqrt();
        let denom = (c * c + l * l).sqrt();
        chroma.push(c);
        lightness.push(l);
        saturation.push(if denom > 0.0 { c / denom } else { 0.0 });
    }
    let (_, sigma_c) = imgcore::mean_std(&chroma);
    let l_stats = ChannelStats::from_samples(&lightness)?;
    let con_l = l_stats.percentile(99.0) - l_stats.percentile(1.0);
    let (mu_s, _) = imgcore::mean_std(&saturation);
    Ok(UCIQE_COEFFS[0] * sigma_c / 100.0 + UCIQE_COEFFS[1] * con_l / 100.0 + UCIQE_COEFFS[2] * mu_s)
}

/// All metrics of one image; the paired ratios are populated only by
/// [`paired_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub entropy: f64,
    pub ag: f64,
    pub gcf: f64,
    pub colourfulness: f64,
    pub emec: f64,
    pub uciqe: f64,
    pub rag: Option<f64>,
    pub cef: Option<f64>,
    pub f_factor: Option<f64>,
}

/// Per-metric improvement flags: strictly greater after enhancement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Improvement {
    pub entropy: bool,
    pub ag: bool,
    pub gcf: bool,
    pub colourfulness: bool,
    pub emec: bool,
    pub uciqe: bool,
}

impl Improvement {
    pub fn between(before: &MetricsReport, after: &MetricsReport) -> Self {
        Self {
            entropy: after.entropy > before.entropy,
            ag: after.ag > before.ag,
            gcf: after.gcf > before.gcf,
            colourfulness: after.colourfulness > before.colourfulness,
            emec: after.emec > before.emec,
            uciqe: after.uciqe > before.uciqe,
        }
    }
}

/// Metrics of a single image. Gray images are replicated to three channels
/// for the colour metrics, which then report zero colour content.
pub fn report(img: &ImageF) -> MetricsReport {
    let rgb = img.to_rgb();
    MetricsReport {
        entropy: entropy(img),
        ag: average_gradient(img),
        gcf: gcf(img),
        colourfulness: colourfulness(&rgb).expect("rgb by construction"),
        emec: emec(&rgb).expect("rgb by construction"),
        uciqe: uciqe(&rgb).expect("rgb by construction"),
        rag: None,
        cef: None,
        f_factor: None,
    }
}

/// Before/after pair; the after-report carries the ratios against before.
pub fn paired_report(before: &ImageF, after: &ImageF) -> (MetricsReport, MetricsReport) {
    let rb = report(before);
    let mut ra = report(after);
    ra.rag = rag(before, after);
    ra.cef = cef(&before.to_rgb(), &after.to_rgb());
    ra.f_factor = contrast_factor_f(before, after).ok();
    (rb, ra)
}
