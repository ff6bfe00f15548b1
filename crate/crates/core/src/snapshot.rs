//! Motion-enhanced snapshot planning and the reshaping of a per-range
//! `[channel][chirp]` slice into the extended tensor and stacked matrix.
//!
//! While the platform moves along Y by `A·d/2` (A = azimuth extent of the
//! array, d = element spacing) the two-way path to every far-field scatterer
//! changes exactly as if the array had been shifted by `A` azimuth elements.
//! Slow-time windows that start `T_ind` chirps apart therefore act as extra
//! azimuth apertures.

use nalgebra::DMatrix;
use ndarray::{Array2, Array3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{coherence_ratio, speed_bounds, EgoMotion, RadarConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPlan {
    /// Chirps between consecutive snapshots.
    pub t_ind: usize,
    /// First chirp of the reference snapshot.
    pub l0: usize,
    /// Start chirp of each snapshot, `l0 + n·t_ind` for `n = 0..=n_ex`.
    pub indices: Vec<usize>,
    /// Number of motion-enhanced snapshots beyond the reference one.
    pub n_ex: usize,
    /// Upper bound `⌊Ld / T_ind⌋` on the number of snapshots in a frame.
    pub n_max: usize,
    /// Slow-time samples per snapshot.
    pub samples: usize,
    /// Accumulated timing error per snapshot, s: `n·(A·d/(2|vy|) − T_ind·Tp)`.
    pub residual: Vec<f64>,
    /// Chirp repetition interval, s.
    pub prt: f64,
    /// Azimuth elements advanced per snapshot.
    pub stride: usize,
    /// +1 when driving along +Y, −1 in reverse.
    pub direction: f64,
}

impl SnapshotPlan {
    /// Elapsed time between the reference snapshot and snapshot `n`, s.
    pub fn elapsed(&self, n: usize) -> f64 {
        (self.indices[n] - self.l0) as f64 * self.prt
    }

    pub fn num_snapshots(&self) -> usize {
        self.n_ex + 1
    }
}

/// `T_ind = ⌊A·d / (2·|vy|·Tp)⌋`, rejected outside the admissible speed
/// interval so that `1 ≤ T_ind ≤ Ld`.
pub fn compute_snapshot_interval(cfg: &RadarConfig, motion: &EgoMotion) -> Result<usize> {
    let ratio = coherence_ratio(cfg, motion);
    let (lower, upper) = speed_bounds(cfg);
    let speed = motion.vy().abs();
    if ratio < 1.0 {
        return Err(Error::SpeedOutOfRange {
            speed,
            lower,
            upper,
            too_fast: true,
        });
    }
    if ratio > cfg.num_chirps as f64 {
        return Err(Error::SpeedOutOfRange {
            speed,
            lower,
            upper,
            too_fast: false,
        });
    }
    Ok(ratio.floor() as usize)
}

/// Largest `N_ex` that fits in the frame for the given start and window.
pub fn max_feasible_snapshots(
    cfg: &RadarConfig,
    motion: &EgoMotion,
    l0: usize,
    samples: usize,
) -> Result<Option<usize>> {
    let t_ind = compute_snapshot_interval(cfg, motion)?;
    let n_max = cfg.num_chirps / t_ind;
    Ok(max_fit(cfg.num_chirps, t_ind, n_max, l0, samples))
}

fn max_fit(ld: usize, t_ind: usize, n_max: usize, l0: usize, samples: usize) -> Option<usize> {
    let room = ld.checked_sub(l0 + samples)?;
    Some((room / t_ind).min(n_max.saturating_sub(1)))
}

/// Plans `min(n_ex_requested, N_m − 1)` snapshots of `samples` chirps each,
/// starting at `l0`.
pub fn build_plan(
    cfg: &RadarConfig,
    motion: &EgoMotion,
    l0: usize,
    n_ex_requested: usize,
    samples: usize,
) -> Result<SnapshotPlan> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "snapshot length L_s must be at least 1".into(),
        ));
    }
    let t_ind = compute_snapshot_interval(cfg, motion)?;
    let ld = cfg.num_chirps;
    let n_max = ld / t_ind;
    let n_ex = n_ex_requested.min(n_max.saturating_sub(1));
    if l0 + n_ex * t_ind + samples > ld {
        return Err(Error::FrameTooShort {
            max_feasible: max_fit(ld, t_ind, n_max, l0, samples),
        });
    }
    let stride = cfg.azimuth_extent();
    let ideal = stride as f64 * cfg.spacing() / (2.0 * motion.vy().abs());
    let step_error = ideal - t_ind as f64 * cfg.prt;
    Ok(SnapshotPlan {
        t_ind,
        l0,
        indices: (0..=n_ex).map(|n| l0 + n * t_ind).collect(),
        n_ex,
        n_max,
        samples,
        residual: (0..=n_ex).map(|n| n as f64 * step_error).collect(),
        prt: cfg.prt,
        stride,
        direction: motion.vy().signum(),
    })
}

/// Extended data tensor `Z[n][c][s] = slice[c][l_n + s]` for one range bin.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotTensor {
    pub z: Array3<Complex64>,
    pub plan: SnapshotPlan,
    pub range_bin: usize,
}

pub fn form_tensor(
    slice: &Array2<Complex64>,
    plan: &SnapshotPlan,
    range_bin: usize,
) -> Result<SnapshotTensor> {
    let (nc, nl) = slice.dim();
    let last = plan.indices.last().copied().unwrap_or(plan.l0) + plan.samples;
    if last > nl {
        return Err(Error::OutOfRange {
            index: last - 1,
            limit: nl,
        });
    }
    let z = Array3::from_shape_fn((plan.num_snapshots(), nc, plan.samples), |(n, c, s)| {
        slice[[c, plan.indices[n] + s]]
    });
    Ok(SnapshotTensor {
        z,
        plan: plan.clone(),
        range_bin,
    })
}

/// Snapshots stacked over channels: row `n·C + c`, column `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedMatrix {
    pub x: DMatrix<Complex64>,
    pub channels: usize,
}

impl StackedMatrix {
    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn samples(&self) -> usize {
        self.x.ncols()
    }

    /// Inverse of [`stack`].
    pub fn unstack(&self) -> Array3<Complex64> {
        let n = self.rows() / self.channels;
        Array3::from_shape_fn((n, self.channels, self.samples()), |(i, c, s)| {
            self.x[(i * self.channels + c, s)]
        })
    }
}

pub fn stack(tensor: &SnapshotTensor) -> StackedMatrix {
    let (n, nc, ns) = tensor.z.dim();
    let x = DMatrix::from_fn(n * nc, ns, |row, s| tensor.z[[row / nc, row % nc, s]]);
    StackedMatrix { x, channels: nc }
}
