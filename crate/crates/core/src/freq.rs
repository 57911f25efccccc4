//! Shared frequency-domain machinery: 2-D FFT application of radial
//! transfer functions to single-channel fields.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::imgcore::ImageF;

/// Half-diagonal of the centered frequency plane, the reference length for
/// relative cutoffs.
pub(crate) fn half_diagonal(width: u32, height: u32) -> f64 {
    let hw = width as f64 / 2.0;
    let hh = height as f64 / 2.0;
    (hw * hw + hh * hh).sqrt()
}

/// Multiply the spectrum of `field` by `gain(D)` where `D` is the centered
/// radial frequency distance in index units, then transform back.
///
/// The gain is evaluated with `D = 0` at the DC bin, so a transfer function
/// with `gain(0) = 1` preserves constant fields. Output is the real part;
/// for radially symmetric gains the imaginary residue is at rounding level.
pub(crate) fn apply_radial_transfer(field: &ImageF, gain: impl Fn(f64) -> f64) -> ImageF {
    assert_eq!(field.channels(), 1, "radial transfer takes a single-channel field");
    let (w, h) = (field.width() as usize, field.height() as usize);
    let mut data: Vec<Complex<f64>> =
        field.samples().iter().map(|&v| Complex::new(v, 0.0)).collect();

    let mut planner = FftPlanner::new();
    let fw = planner.plan_fft_forward(w);
    let fh = planner.plan_fft_forward(h);
    let iw = planner.plan_fft_inverse(w);
    let ih = planner.plan_fft_inverse(h);

    let transpose = |src: &[Complex<f64>], rows: usize, cols: usize| {
        let mut dst = vec![Complex::new(0.0, 0.0); src.len()];
        for r in 0..rows {
            for c in 0..cols {
                dst[c * rows + r] = src[r * cols + c];
            }
        }
        dst
    };

    // Forward 2-D: rows, then columns via transpose.
    for row in data.chunks_exact_mut(w) {
        fw.process(row);
    }
    let mut data = transpose(&data, h, w);
    for col in data.chunks_exact_mut(h) {
        fh.process(col);
    }

    // Spectrum is transposed: index [u * h + v] with u along width.
    for u in 0..w {
        let du = if u <= w / 2 { u as f64 } else { u as f64 - w as f64 };
        for v in 0..h {
            let dv = if v <= h / 2 { v as f64 } else { v as f64 - h as f64 };
            data[u * h + v] *= gain((du * du + dv * dv).sqrt());
        }
    }

    for col in data.chunks_exact_mut(h) {
        ih.process(col);
    }
    let mut data = transpose(&data, w, h);
    for row in data.chunks_exact_mut(w) {
        iw.process(row);
    }

    let scale = 1.0 / (w as f64 * h as f64);
    let samples = data.iter().map(|c| c.re * scale).collect();
    ImageF::new(field.width(), field.height(), 1, samples).expect("same shape as input")
}

/// Largest imaginary residue after an inverse transform, used by tests to
/// confirm the output of a real field is real.
#[cfg(test)]
pub(crate) fn imaginary_residue(field: &ImageF, gain: impl Fn(f64) -> f64) -> f64 {
    let (w, h) = (field.width() as usize, field.height() as usize);
    let mut data: Vec<Complex<f64>> =
        field.samples().iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    let fw = planner.plan_fft_forward(w);
    let fh = planner.plan_fft_forward(h);
    let iw = planner.plan_fft_inverse(w);
    let ih = planner.plan_fft_inverse(h);
    let transpose = |src: &[Complex<f64>], rows: usize, cols: usize| {
        let mut dst = vec![Complex::new(0.0, 0.0); src.len()];
        for r in 0..rows {
            for c in 0..cols {
                dst[c * rows + r] = src[r * cols + c];
            }
        }
        dst
    };
    for row in data.chunks_exact_mut(w) {
        fw.process(row);
    }
    let mut data = transpose(&data, h, w);
    for col in data.chunks_exact_mut(h) {
        fh.process(col);
    }
    for u in 0..w {
        let du = if u <= w / 2 { u as f64 } else { u as f64 - w as f64 };
        for v in 0..h {
            let dv = if v <= h / 2 { v as f64 } else { v as f64 - h as f64 };
            data[u * h + v] *= gain((du * du + dv * dv).sqrt());
        }
    }
    for col in data.chunks_exact_mut(h) {
        ih.process(col);
    }
    let mut data = transpose(&data, w, h);
    for row in data.chunks_exact_mut(w) {
        iw.process(row);
    }
    let scale = 1.0 / (w as f64 * h as f64);
    data.iter().map(|c| (c.im * scale).abs()).fold(0.0, f64::max)
}
