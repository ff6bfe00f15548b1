//! Fast-time FFT, range-bin detection and per-bin slice extraction.

use ndarray::{s, Array2, Array3, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::config::derived_params;
use crate::error::{Error, Result};
use crate::sim::RawDataCube;
use crate::PHASE_SIGN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    Rect,
    #[default]
    Hann,
    Hamming,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        if n < 2 {
            return vec![1.0; n];
        }
        let m = (n - 1) as f64;
        (0..n)
            .map(|i| {
                let c = (std::f64::consts::TAU * i as f64 / m).cos();
                match self {
                    Window::Rect => 1.0,
                    Window::Hann => 0.5 - 0.5 * c,
                    Window::Hamming => 0.54 - 0.46 * c,
                }
            })
            .collect()
    }
}

/// Range-compressed data `[channel][chirp][range bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeSpectrum {
    pub bins: Array3<Complex64>,
    /// Range of each FFT bin, m.
    pub axis: Vec<f64>,
    /// Bins `[0, usable_bins)` carry unambiguous range.
    pub usable_bins: usize,
}

/// Windowed FFT over fast time for every `(channel, chirp)`, scaled by
/// `1/√Bd` so that the rectangular window preserves energy.
pub fn range_fft(cube: &RawDataCube, window: Window) -> RangeSpectrum {
    let (nc, nl, nb) = cube.samples.dim();
    let dp = derived_params(&cube.cfg);
    let fft = {
        let mut planner = FftPlanner::<f64>::new();
        // A positive PHASE_SIGN puts the beat tone at positive frequency,
        // the forward transform then maps range to increasing bins.
        if PHASE_SIGN > 0.0 {
            planner.plan_fft_forward(nb)
        } else {
            planner.plan_fft_inverse(nb)
        }
    };
    let win = window.coefficients(nb);
    let scale = 1.0 / (nb as f64).sqrt();
    let mut bins = cube.samples.clone();
    bins.as_slice_mut()
        .expect("standard layout")
        .par_chunks_mut(nb)
        .for_each(|row| {
            for (v, w) in row.iter_mut().zip(&win) {
                *v *= *w * scale;
            }
            fft.process(row);
        });
    debug_assert_eq!(bins.dim(), (nc, nl, nb));
    RangeSpectrum {
        bins,
        axis: (0..nb).map(|r| r as f64 * dp.range_res).collect(),
        usable_bins: dp.num_range_bins.min(nb),
    }
}

/// Ascending list of range bins that hold detected energy.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DetectionList {
    pub bins: Vec<usize>,
}

/// Noncoherent power per usable bin, summed over channels and chirps.
pub fn bin_power(spec: &RangeSpectrum) -> Vec<f64> {
    (0..spec.usable_bins)
        .map(|r| {
            spec.bins
                .slice(s![.., .., r])
                .iter()
                .map(|z| z.norm_sqr())
                .sum()
        })
        .collect()
}

/// Bins whose noncoherent power exceeds the median by `threshold_db`.
pub fn detect_range_bins(spec: &RangeSpectrum, threshold_db: f64) -> DetectionList {
    let power = bin_power(spec);
    if power.is_empty() {
        return DetectionList::default();
    }
    let mut sorted = power.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let level = median * 10f64.powf(threshold_db / 10.0);
    DetectionList {
        bins: power
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > level)
            .map(|(i, _)| i)
            .collect(),
    }
}

/// The `[channel][chirp]` matrix at range bin `bin`.
pub fn extract_slice(spec: &RangeSpectrum, bin: usize) -> Result<Array2<Complex64>> {
    if bin >= spec.usable_bins {
        return Err(Error::OutOfRange {
            index: bin,
            limit: spec.usable_bins,
        });
    }
    Ok(spec.bins.index_axis(Axis(2), bin).to_owned())
}
