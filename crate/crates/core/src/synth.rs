//! Deterministic synthetic scenes with known haze: procedurally generated
//! clean images, smooth random depth fields and hazy renders under the
//! formation model, with the true transmission saved alongside. This is the
//! reproducible test bed for the pipelines and metrics.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fastdehaze;
use crate::imgcore::{self, ImageF, ImageU8};
use crate::Result;

/// Corpus shape: `scenes` scenes rendered at `size` x `size` for every
/// scattering coefficient in `betas`, all derived from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusCfg {
    pub scenes: usize,
    pub betas: Vec<f64>,
    pub seed: u64,
    pub size: u32,
}

impl Default for CorpusCfg {
    fn default() -> Self {
        Self { scenes: 20, betas: vec![0.5, 1.0, 2.0], seed: 42, size: 256 }
    }
}

/// One generated scene: the quantized clean image, its depth field and the
/// scene airlight.
#[derive(Debug, Clone)]
pub struct SynthScene {
    pub index: usize,
    pub clean: ImageU8,
    pub depth: ImageF,
    pub airlight: f64,
}

impl SynthScene {
    /// True transmission for a scattering coefficient.
    pub fn transmission(&self, beta: f64) -> ImageF {
        fastdehaze::transmission_from_depth(&self.depth, beta).expect("nonnegative depth")
    }

    /// Hazy render and its true transmission. The render starts from the
    /// quantized clean image, so `beta = 0` reproduces it bit-exactly.
    pub fn hazy(&self, beta: f64) -> (ImageU8, ImageF) {
        let t = self.transmission(beta);
        let hazy = fastdehaze::synth_haze(&imgcore::to_unit(&self.clean), &t, self.airlight)
            .expect("matching dimensions");
        (imgcore::from_unit(&hazy), t)
    }
}

fn scene_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Smooth depth field in `[0.2, 2.5]`: heavily blurred noise, rescaled.
fn depth_field(rng: &mut ChaCha8Rng, size: u32) -> ImageF {
    let noise = ImageF::new(
        size,
        size,
        1,
        (0..(size as usize * size as usize)).map(|_| rng.random_range(0.0..1.0)).collect(),
    )
    .expect("matching length");
    let blurred = imgcore::gaussian_blur(&noise, size as f64 / 12.0);
    let lo = blurred.samples().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = blurred.samples().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-12);
    blurred.map(|v| 0.2 + 2.3 * (v - lo) / span)
}

/// Clean scene: a colour gradient background, a handful of solid shapes
/// and low-amplitude texture noise.
fn clean_scene(rng: &mut ChaCha8Rng, size: u32) -> ImageU8 {
    let c0: [f64; 3] = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
    let c1: [f64; 3] = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
    let diag = rng.random_range(0.0..1.0) < 0.5;

    let n = size as usize;
    let mut samples = vec![0.0f64; n * n * 3];
    for y in 0..n {
        for x in 0..n {
            let u = if diag {
                (x + y) as f64 / (2 * (n - 1)) as f64
            } else {
                x as f64 / (n - 1) as f64
            };
            for c in 0..3 {
                samples[(y * n + x) * 3 + c] = c0[c] * (1.0 - u) + c1[c] * u;
            }
        }
    }

    let shapes = rng.random_range(5..10);
    for _ in 0..shapes {
        let colour: [f64; 3] =
            [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let cx = rng.random_range(0..n);
        let cy = rng.random_range(0..n);
        let half = rng.random_range(n / 16..n / 4).max(2);
        if rng.random_range(0.0..1.0) < 0.5 {
            // rectangle
            for y in cy.saturating_sub(half)..(cy + half).min(n) {
                for x in cx.saturating_sub(half)..(cx + half).min(n) {
                    for c in 0..3 {
                        samples[(y * n + x) * 3 + c] = colour[c];
                    }
                }
            }
        } else {
            // disc
            let r2 = (half * half) as f64;
            for y in cy.saturating_sub(half)..(cy + half).min(n) {
                for x in cx.saturating_sub(half)..(cx + half).min(n) {
                    let dx = x as f64 - cx as f64;
                    let dy = y as f64 - cy as f64;
                    if dx * dx + dy * dy <= r2 {
                        for c in 0..3 {
                            samples[(y * n + x) * 3 + c] = colour[c];
                        }
                    }
                }
            }
        }
    }

    // Anti-alias the composed shapes so scenes are band-limited like
    // photographs, then add light texture noise.
    let img = ImageF::new(size, size, 3, samples).expect("matching length");
    let mut img = imgcore::gaussian_blur(&img, 0.7);
    let noisy: Vec<f64> = img
        .samples()
        .iter()
        .map(|&s| (s + rng.random_range(-0.01..0.01)).clamp(0.0, 1.0))
        .collect();
    img = ImageF::new(size, size, 3, noisy).expect("matching length");
    imgcore::from_unit(&img)
}

/// Generate all scenes of a corpus in memory.
pub fn corpus(cfg: &CorpusCfg) -> Vec<SynthScene> {
    (0..cfg.scenes)
        .map(|index| {
            let mut rng = scene_rng(cfg.seed, index);
            let clean = clean_scene(&mut rng, cfg.size);
            let depth = depth_field(&mut rng, cfg.size);
            let airlight = rng.random_range(0.85..0.95);
            SynthScene { index, clean, depth, airlight }
        })
        .collect()
}

/// Multiply channels by per-channel gains, producing a colour-cast image;
/// used to synthesize underwater (suppressed red) and dust (suppressed
/// blue) looks.
pub fn tint(img: &ImageF, gains: [f64; 3]) -> ImageF {
    assert_eq!(img.channels(), 3, "tint takes an RGB image");
    let samples = img
        .samples()
        .chunks_exact(3)
        .flat_map(|p| [p[0] * gains[0], p[1] * gains[1], p[2] * gains[2]])
        .collect();
    ImageF::new(img.width(), img.height(), 3, samples).expect("same shape")
}

/// Files written for one (scene, beta) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub scene: usize,
    pub beta: f64,
    pub clean: PathBuf,
    pub hazy: PathBuf,
    pub truth_t: PathBuf,
}

/// Render the corpus to `dir`: clean PNGs, hazy PNGs per beta, and the true
/// transmission as 16-bit grayscale PNGs.
pub fn write_corpus(cfg: &CorpusCfg, dir: impl AsRef<Path>) -> Result<Vec<CorpusEntry>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| crate::Error::Io { path: dir.to_path_buf(), source })?;
    let mut entries = Vec::new();
    for scene in corpus(cfg) {
        let clean_path = dir.join(format!("scene_{:03}_clean.png", scene.index));
        imgcore::save_image(&scene.clean, &clean_path)?;
        for &beta in &cfg.betas {
            let (hazy, t) = scene.hazy(beta);
            let hazy_path = dir.join(format!("scene_{:03}_beta{beta:.2}_hazy.png", scene.index));
            let t_path = dir.join(format!("scene_{:03}_beta{beta:.2}_t.png", scene.index));
            imgcore::save_image(&hazy, &hazy_path)?;
            imgcore::save_gray16(&t, &t_path)?;
            entries.push(CorpusEntry {
                scene: scene.index,
                beta,
                clean: clean_path.clone(),
                hazy: hazy_path,
                truth_t: t_path,
            });
        }
    }
    Ok(entries)
}
