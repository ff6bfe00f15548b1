//! Range–azimuth–elevation beamscan over detected range bins with DBF,
//! MVDR and MUSIC estimators.

use std::io::{Read, Write};
use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use ndarray::{s, Array2, Array3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ImagingGrid;
use crate::error::{Error, Result};
use crate::range::{
    detect_range_bins, extract_slice, range_fft, DetectionList, RangeSpectrum, Window,
};
use crate::scene::polar_to_cartesian;
use crate::sim::RawDataCube;
use crate::snapshot::{form_tensor, stack, SnapshotPlan, StackedMatrix};
use crate::steering::SteeringContext;

/// Reported SNR when the noise region holds no power at all, dB.
pub const SNR_CAP_DB: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Method {
    Dbf,
    /// Capon beamformer. `loading` is relative to the mean diagonal.
    Mvdr {
        loading: f64,
    },
    /// `sources` is the assumed signal-subspace dimension.
    Music {
        sources: usize,
    },
}

impl Method {
    pub fn tag(&self) -> String {
        match self {
            Method::Dbf => "dbf".into(),
            Method::Mvdr { loading } => format!("mvdr(loading={loading})"),
            Method::Music { sources } => format!("music(K={sources})"),
        }
    }
}

/// Provenance stored alongside every power cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CubeMeta {
    pub method: String,
    pub n_ex: usize,
    pub t_ind: usize,
    pub samples: usize,
    pub compensated: bool,
    pub detected_bins: Vec<usize>,
}

/// Linear power indexed `[range][azimuth][elevation]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCube {
    pub values: Array3<f64>,
    pub grid: ImagingGrid,
    pub meta: CubeMeta,
}

const CUBE_MAGIC: &[u8; 12] = b"MSNAP-PWRCUB";
const CUBE_VERSION: u32 = 1;

impl PowerCube {
    pub fn empty(grid: &ImagingGrid, meta: CubeMeta) -> Self {
        Self {
            values: Array3::zeros(grid.shape()),
            grid: grid.clone(),
            meta,
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Index of the largest cell.
    pub fn argmax(&self) -> (usize, usize, usize) {
        let mut best = ((0, 0, 0), f64::NEG_INFINITY);
        for (idx, v) in self.values.indexed_iter() {
            if *v > best.1 {
                best = (idx, *v);
            }
        }
        best.0
    }

    /// The azimuth–elevation image at range index `r`.
    pub fn range_slice(&self, r: usize) -> Array2<f64> {
        self.values.index_axis(ndarray::Axis(0), r).to_owned()
    }

    /// Sub-cube over half-open index ranges of range, azimuth and elevation.
    pub fn crop(
        &self,
        range: Range<usize>,
        azimuth: Range<usize>,
        elevation: Range<usize>,
    ) -> Result<Self> {
        let (nr, na, ne) = self.values.dim();
        for (name, r, n) in [
            ("range", &range, nr),
            ("azimuth", &azimuth, na),
            ("elevation", &elevation, ne),
        ] {
            if r.start >= r.end || r.end > n {
                return Err(Error::InvalidConfig(format!(
                    "{name} crop {r:?} outside 0..{n}"
                )));
            }
        }
        let grid = ImagingGrid::new(
            self.grid.azimuth_deg[azimuth.clone()].to_vec(),
            self.grid.elevation_deg[elevation.clone()].to_vec(),
            self.grid.range_m[range.clone()].to_vec(),
        )?;
        let values = self.values.slice(s![range, azimuth, elevation]).to_owned();
        Ok(Self {
            values,
            grid,
            meta: self.meta.clone(),
        })
    }

    /// Header (magic, version, dims, JSON metadata) followed by the three
    /// axes as f64 and the values as f32, little-endian, `[r][θ][φ]` order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CUBE_MAGIC)?;
        w.write_all(&CUBE_VERSION.to_le_bytes())?;
        let (a, b, c) = self.values.dim();
        for d in [a, b, c] {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        let meta = serde_json::to_vec(&self.meta).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(&(meta.len() as u32).to_le_bytes())?;
        w.write_all(&meta)?;
        let mut buf = Vec::with_capacity(8 * (a + b + c) + 4 * self.values.len());
        for axis in [
            &self.grid.range_m,
            &self.grid.azimuth_deg,
            &self.grid.elevation_deg,
        ] {
            for v in axis {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        for v in self.values.iter() {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 32];
        r.read_exact(&mut head)?;
        if &head[..12] != CUBE_MAGIC {
            return Err(Error::Format("not a power cube".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap()) as usize;
        if u32_at(12) != CUBE_VERSION as usize {
            return Err(Error::Format(format!(
                "unsupported power cube version {}",
                u32_at(12)
            )));
        }
        let dims = (u32_at(16), u32_at(20), u32_at(24));
        let mut meta = vec![0u8; u32_at(28)];
        r.read_exact(&mut meta)?;
        let meta: CubeMeta =
            serde_json::from_slice(&meta).map_err(|e| Error::Format(e.to_string()))?;
        let mut read_f64 = |n: usize| -> Result<Vec<f64>> {
            let mut b = vec![0u8; 8 * n];
            r.read_exact(&mut b)?;
            Ok(b.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let range = read_f64(dims.0)?;
        let az = read_f64(dims.1)?;
        let el = read_f64(dims.2)?;
        let mut b = vec![0u8; 4 * dims.0 * dims.1 * dims.2];
        r.read_exact(&mut b)?;
        let vals = b
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        Ok(Self {
            values: Array3::from_shape_vec(dims, vals).map_err(|e| Error::Format(e.to_string()))?,
            grid: ImagingGrid::new(az, el, range)?,
            meta,
        })
    }
}

/// `R = (1/L_s)·X·X^H`, optionally loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub r: DMatrix<Complex64>,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.r.diagonal().iter().map(|z| z.re).sum()
    }
}

/// `(1/L_s)·X·X^H + loading·(trace/M)·I`.
pub fn sample_covariance(x: &StackedMatrix, loading: f64) -> CovarianceMatrix {
    let m = x.rows();
    let mut r = &x.x * x.x.adjoint() / Complex64::from(x.samples() as f64);
    // exact Hermitian symmetry regardless of summation order
    for i in 0..m {
        r[(i, i)].im = 0.0;
        for j in 0..i {
            r[(j, i)] = r[(i, j)].conj();
        }
    }
    if loading > 0.0 {
        let add = loading * r.diagonal().iter().map(|z| z.re).sum::<f64>() / m as f64;
        for i in 0..m {
            r[(i, i)].re += add;
        }
    }
    CovarianceMatrix { r }
}

/// `Re(w^H R w) / (w^H w)`.
pub fn dbf_power(r: &CovarianceMatrix, w: &DVector<Complex64>) -> Result<f64> {
    if w.len() != r.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("weight of length {}", r.dim()),
            actual: format!("{}", w.len()),
        });
    }
    let num = w.dotc(&(&r.r * w)).re;
    Ok((num / w.norm_squared()).max(0.0))
}

/// Stacked snapshots of one detected range bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinInput {
    /// Index into the grid's range axis.
    pub bin: usize,
    pub x: StackedMatrix,
}

/// Forms the stacked matrix for every detected bin.
pub fn prepare_inputs(
    spec: &RangeSpectrum,
    detections: &DetectionList,
    plan: &SnapshotPlan,
) -> Result<Vec<BinInput>> {
    detections
        .bins
        .iter()
        .map(|&bin| {
            let slice = extract_slice(spec, bin)?;
            let t = form_tensor(&slice, plan, bin)?;
            Ok(BinInput { bin, x: stack(&t) })
        })
        .collect()
}

/// Range FFT, detection and beamscan of one frame. Detections beyond the
/// grid's range axis are dropped.
pub fn image_frame(
    cube: &RawDataCube,
    plan: &SnapshotPlan,
    grid: &ImagingGrid,
    method: Method,
    compensate: bool,
    threshold_db: f64,
) -> Result<PowerCube> {
    let spec = range_fft(cube, Window::Hann);
    let mut det = detect_range_bins(&spec, threshold_db);
    det.bins.retain(|b| *b < grid.range_m.len());
    let inputs = prepare_inputs(&spec, &det, plan)?;
    let ctx = SteeringContext::new(&cube.cfg, &cube.motion, plan).with_compensation(compensate);
    scan(&inputs, grid, method, &ctx)
}

/// Per-bin state shared read-only by every angle of the scan.
enum Estimator {
    /// DBF straight from the data: `(1/L_s)·Σ_s |w^H x_s|²` with unit `w`.
    Dbf(DMatrix<Complex64>),
    /// Inverse Cholesky factor: `w^H R⁻¹ w = ‖L⁻¹ w‖²`.
    Mvdr(DMatrix<Complex64>),
    /// Signal-subspace basis, columns orthonormal.
    Music(DMatrix<Complex64>),
}

impl Estimator {
    fn build(x: &StackedMatrix, method: Method) -> Result<Self> {
        let m = x.rows();
        match method {
            Method::Dbf => Ok(Estimator::Dbf(x.x.clone())),
            Method::Mvdr { loading } => {
                let cov = sample_covariance(x, loading.max(0.0));
                let scale = cov.trace() / m as f64;
                if !(scale > 0.0) {
                    return Err(Error::SingularCovariance);
                }
                let chol = Cholesky::new(cov.r).ok_or(Error::SingularCovariance)?;
                let l = chol.l();
                let min_pivot = l
                    .diagonal()
                    .iter()
                    .map(|z| z.re)
                    .fold(f64::INFINITY, f64::min);
                if min_pivot * min_pivot < 1e-12 * scale {
                    return Err(Error::SingularCovariance);
                }
                let inv = l
                    .solve_lower_triangular(&DMatrix::identity(m, m))
                    .ok_or(Error::SingularCovariance)?;
                Ok(Estimator::Mvdr(inv))
            }
            Method::Music { sources } => {
                if sources >= m {
                    return Err(Error::Rank {
                        sources,
                        channels: m,
                    });
                }
                if sources == 0 {
                    return Err(Error::InvalidArgument(
                        "MUSIC needs at least one source".into(),
                    ));
                }
                let cov = sample_covariance(x, 0.0);
                let eig = SymmetricEigen::new(cov.r);
                let mut order: Vec<usize> = (0..m).collect();
                order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
                let cols: Vec<DVector<Complex64>> = order[..sources]
                    .iter()
                    .map(|&i| eig.eigenvectors.column(i).into_owned())
                    .collect();
                Ok(Estimator::Music(DMatrix::from_columns(&cols)))
            }
        }
    }

    /// Power for a unit-norm weight.
    fn power(&self, w: &DVector<Complex64>) -> f64 {
        match self {
            Estimator::Dbf(x) => {
                let ls = x.ncols() as f64;
                x.column_iter()
                    .map(|col| w.dotc(&col).norm_sqr())
                    .sum::<f64>()
                    / ls
            }
            Estimator::Mvdr(inv) => 1.0 / (inv * w).norm_squared(),
            Estimator::Music(es) => {
                let proj = (es.adjoint() * w).norm_squared();
                1.0 / (1.0 - proj).max(1e-12)
            }
        }
    }
}

/// Beamscan of every detected bin over the grid's angle axes. Range bins
/// without input stay zero.
pub fn scan(
    inputs: &[BinInput],
    grid: &ImagingGrid,
    method: Method,
    ctx: &SteeringContext,
) -> Result<PowerCube> {
    let (nr, na, ne) = grid.shape();
    let m = ctx.len();
    for inp in inputs {
        if inp.bin >= nr {
            return Err(Error::OutOfRange {
                index: inp.bin,
                limit: nr,
            });
        }
        if inp.x.rows() != m {
            return Err(Error::DimensionMismatch {
                expected: format!("{m} stacked channels"),
                actual: format!("{}", inp.x.rows()),
            });
        }
    }
    let estimators: Vec<Estimator> = inputs
        .par_iter()
        .map(|i| Estimator::build(&i.x, method))
        .collect::<Result<_>>()?;

    let az: Vec<f64> = grid.azimuth_deg.iter().map(|a| a.to_radians()).collect();
    let el: Vec<f64> = grid.elevation_deg.iter().map(|a| a.to_radians()).collect();
    // the steering vector of a cell is shared by all bins
    let rows: Vec<Vec<f64>> = (0..na)
        .into_par_iter()
        .map(|ia| {
            let mut out = vec![0.0; estimators.len() * ne];
            let mut w = DVector::zeros(m);
            for (ie, &phi) in el.iter().enumerate() {
                ctx.steer_into(az[ia], phi, w.as_mut_slice());
                w /= Complex64::from((m as f64).sqrt());
                for (b, est) in estimators.iter().enumerate() {
                    out[b * ne + ie] = est.power(&w);
                }
            }
            out
        })
        .collect();

    let mut values = Array3::zeros((nr, na, ne));
    for (b, inp) in inputs.iter().enumerate() {
        for (ia, row) in rows.iter().enumerate() {
            for ie in 0..ne {
                values[[inp.bin, ia, ie]] = row[b * ne + ie];
            }
        }
    }
    Ok(PowerCube {
        values,
        grid: grid.clone(),
        meta: CubeMeta {
            method: method.tag(),
            n_ex: ctx.plan.n_ex,
            t_ind: ctx.plan.t_ind,
            samples: ctx.plan.samples,
            compensated: ctx.compensate,
            detected_bins: inputs.iter().map(|i| i.bin).collect(),
        },
    })
}

/// Half-open index ranges of the cells that only hold noise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseRegion {
    pub range: (usize, usize),
    pub azimuth: (usize, usize),
    pub elevation: (usize, usize),
}

/// Peak power within one cell of `truth` over the mean power of `noise`,
/// in dB. A silent noise region yields [`SNR_CAP_DB`].
pub fn measure_snr(
    cube: &PowerCube,
    truth: (usize, usize, usize),
    noise: &NoiseRegion,
) -> Result<f64> {
    let (nr, na, ne) = cube.values.dim();
    if truth.0 >= nr || truth.1 >= na || truth.2 >= ne {
        return Err(Error::OutOfRange {
            index: truth.0.max(truth.1).max(truth.2),
            limit: nr.min(na).min(ne),
        });
    }
    let clip = |(a, b): (usize, usize), n: usize| (a.min(n), b.min(n));
    let (r0, r1) = clip(noise.range, nr);
    let (a0, a1) = clip(noise.azimuth, na);
    let (e0, e1) = clip(noise.elevation, ne);
    if r0 >= r1 || a0 >= a1 || e0 >= e1 {
        return Err(Error::InvalidArgument("noise region is empty".into()));
    }
    let region = cube.values.slice(ndarray::s![r0..r1, a0..a1, e0..e1]);
    let floor = region.mean().unwrap_or(0.0);
    let hood = cube.values.slice(ndarray::s![
        truth.0.saturating_sub(1)..(truth.0 + 2).min(nr),
        truth.1.saturating_sub(1)..(truth.1 + 2).min(na),
        truth.2.saturating_sub(1)..(truth.2 + 2).min(ne)
    ]);
    let peak = hood.iter().copied().fold(0.0, f64::max);
    if floor <= 0.0 {
        return Ok(if peak > 0.0 {
            SNR_CAP_DB
        } else {
            f64::NEG_INFINITY
        });
    }
    Ok((10.0 * (peak / floor).log10()).min(SNR_CAP_DB))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Deposit each polar cell's power into the voxel holding its centre.
    #[default]
    Nearest,
    /// Sample the polar cube at each voxel centre by trilinear
    /// interpolation in `(r, θ, φ)`.
    Trilinear,
}

/// Cartesian resampling, values indexed `[x][y][z]` at voxel centres.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianVolume {
    pub values: Array3<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub voxel_size: f64,
}

/// Voxel axes covering every positive cell of the cube.
fn voxel_axes(cube: &PowerCube, size: f64) -> Option<[Vec<f64>; 3]> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for ((r, a, e), v) in cube.values.indexed_iter() {
        if *v > 0.0 {
            let p = cell_position(cube, r, a, e);
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
    }
    if lo[0] > hi[0] {
        return None;
    }
    Some(std::array::from_fn(|k| {
        let start = (lo[k] / size).floor();
        let n = ((hi[k] / size).floor() - start) as usize + 1;
        (0..n).map(|i| (start + i as f64 + 0.5) * size).collect()
    }))
}

fn cell_position(cube: &PowerCube, r: usize, a: usize, e: usize) -> [f64; 3] {
    polar_to_cartesian(
        cube.grid.range_m[r],
        cube.grid.azimuth_deg[a].to_radians(),
        cube.grid.elevation_deg[e].to_radians(),
    )
}

/// Fractional index of `v` on a monotone axis, `None` outside it.
fn fractional_index(axis: &[f64], v: f64) -> Option<f64> {
    if axis.len() == 1 {
        return ((v - axis[0]).abs() < 1e-9).then_some(0.0);
    }
    if v < axis[0] || v > axis[axis.len() - 1] {
        return None;
    }
    let i = axis.partition_point(|a| *a <= v).clamp(1, axis.len() - 1);
    Some(i as f64 - 1.0 + (v - axis[i - 1]) / (axis[i] - axis[i - 1]))
}

pub fn project_to_cartesian(
    cube: &PowerCube,
    voxel_size: f64,
    method: Interpolation,
) -> Result<CartesianVolume> {
    if !(voxel_size > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "voxel size {voxel_size} must be positive"
        )));
    }
    let Some([x, y, z]) = voxel_axes(cube, voxel_size) else {
        return Ok(CartesianVolume {
            values: Array3::zeros((0, 0, 0)),
            x: vec![],
            y: vec![],
            z: vec![],
            voxel_size,
        });
    };
    let mut values = Array3::zeros((x.len(), y.len(), z.len()));
    let locate = |axis: &[f64], v: f64| ((v - axis[0]) / voxel_size + 0.5).floor() as usize;
    match method {
        Interpolation::Nearest => {
            for ((r, a, e), v) in cube.values.indexed_iter() {
                if *v > 0.0 {
                    let p = cell_position(cube, r, a, e);
                    let idx = [locate(&x, p[0]), locate(&y, p[1]), locate(&z, p[2])];
                    values[idx] += *v;
                }
            }
        }
        Interpolation::Trilinear => {
            let g = &cube.grid;
            let (nr, na, ne) = cube.values.dim();
            for ((i, j, k), out) in values.indexed_iter_mut() {
                let (r, th, ph) = crate::scene::cartesian_to_polar([x[i], y[j], z[k]]);
                let (Some(fr), Some(fa), Some(fe)) = (
                    fractional_index(&g.range_m, r),
                    fractional_index(&g.azimuth_deg, th.to_degrees()),
                    fractional_index(&g.elevation_deg, ph.to_degrees()),
                ) else {
                    continue;
                };
                let mut acc = 0.0;
                for (dr, wr) in corners(fr, nr) {
                    for (da, wa) in corners(fa, na) {
                        for (de, we) in corners(fe, ne) {
                            acc += wr * wa * we * cube.values[[dr, da, de]];
                        }
                    }
                }
                *out = acc;
            }
        }
    }
    Ok(CartesianVolume {
        values,
        x,
        y,
        z,
        voxel_size,
    })
}

fn corners(f: f64, n: usize) -> [(usize, f64); 2] {
    let i0 = (f.floor() as usize).min(n - 1);
    let i1 = (i0 + 1).min(n - 1);
    let t = f - i0 as f64;
    [(i0, 1.0 - t), (i1, t)]
}
