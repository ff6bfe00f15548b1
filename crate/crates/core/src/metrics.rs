//! Scoring of power cubes against ground truth: voxel confusion metrics,
//! image contrast and dynamic range.

use ndarray::{Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::config::ImagingGrid;
use crate::error::{Error, Result};
use crate::imaging::PowerCube;
use crate::scene::{cartesian_to_polar, Scene};

/// Cells more than `threshold_db` above the median positive cell.
pub fn voxelise(cube: &PowerCube, threshold_db: f64) -> Result<Array3<bool>> {
    let mut positive: Vec<f64> = cube.values.iter().copied().filter(|v| *v > 0.0).collect();
    if positive.is_empty() {
        return Err(Error::Degenerate("cannot voxelise an all-zero cube".into()));
    }
    positive.sort_by(f64::total_cmp);
    let floor = positive[positive.len() / 2];
    Ok(cube
        .values
        .mapv(|v| v > 0.0 && 10.0 * (v / floor).log10() > threshold_db))
}

/// Grid cells holding at least one scatterer. Scatterers outside the grid by
/// more than half a step are ignored.
pub fn truth_occupancy(scene: &Scene, grid: &ImagingGrid) -> Array3<bool> {
    let mut out = Array3::from_elem(grid.shape(), false);
    let within = |axis: &[f64], v: f64| {
        let half = if axis.len() > 1 {
            0.5 * (axis[1] - axis[0]).abs()
        } else {
            1e-9
        };
        v >= axis[0] - half && v <= axis[axis.len() - 1] + half
    };
    for s in &scene.scatterers {
        let (r, th, ph) = cartesian_to_polar(s.position);
        let (th, ph) = (th.to_degrees(), ph.to_degrees());
        if within(&grid.range_m, r)
            && within(&grid.azimuth_deg, th)
            && within(&grid.elevation_deg, ph)
        {
            out[[
                ImagingGrid::nearest(&grid.range_m, r),
                ImagingGrid::nearest(&grid.azimuth_deg, th),
                ImagingGrid::nearest(&grid.elevation_deg, ph),
            ]] = true;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(detected: &Array3<bool>, truth: &Array3<bool>) -> Result<ConfusionCounts> {
    if detected.dim() != truth.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", truth.dim()),
            actual: format!("{:?}", detected.dim()),
        });
    }
    let mut c = ConfusionCounts::default();
    for (d, t) in detected.iter().zip(truth.iter()) {
        match (*d, *t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Image contrast per projection plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneContrast {
    pub range_azimuth: f64,
    pub range_elevation: f64,
    pub azimuth_elevation: f64,
}

/// Confusion metrics as fractions in `[0, 1]`; `None` where a denominator
/// vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub counts: ConfusionCounts,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub auc: Option<f64>,
    pub f_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast: Option<PlaneContrast>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamic_range_ratio: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn report(c: &ConfusionCounts) -> MetricsReport {
    let precision = ratio(c.tp, c.tp + c.fp);
    let sensitivity = ratio(c.tp, c.tp + c.fn_);
    let specificity = ratio(c.tn, c.tn + c.fp);
    let auc = sensitivity.zip(specificity).map(|(a, b)| (a + b) / 2.0);
    let f_score = precision.zip(sensitivity).map(|(p, s)| {
        if p + s > 0.0 {
            2.0 * p * s / (p + s)
        } else {
            // both zero: no true positive at all
            0.0
        }
    });
    MetricsReport {
        counts: *c,
        accuracy: ratio(c.tp + c.tn, c.total()),
        precision,
        sensitivity,
        specificity,
        auc,
        f_score,
        contrast: None,
        dynamic_range_ratio: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ContrastKind {
    /// std/mean of the amplitude `√P`.
    #[default]
    Amplitude,
    /// std/mean of the power `P`.
    Power,
}

/// `std/mean` of a power image, population standard deviation.
pub fn image_contrast(slice: &Array2<f64>, kind: ContrastKind) -> Result<f64> {
    if slice.is_empty() {
        return Err(Error::Degenerate("empty slice".into()));
    }
    let vals: Vec<f64> = slice
        .iter()
        .map(|p| match kind {
            ContrastKind::Amplitude => p.max(0.0).sqrt(),
            ContrastKind::Power => *p,
        })
        .collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if !(mean > 0.0) {
        return Err(Error::Degenerate("slice has zero mean".into()));
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt() / mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Plane {
    RangeAzimuth,
    RangeElevation,
    AzimuthElevation,
}

impl Plane {
    pub const ALL: [Plane; 3] = [
        Plane::RangeAzimuth,
        Plane::RangeElevation,
        Plane::AzimuthElevation,
    ];

    /// The cube axis a slice of this plane is taken along.
    pub fn normal_axis(self) -> Axis {
        match self {
            Plane::RangeAzimuth => Axis(2),
            Plane::RangeElevation => Axis(1),
            Plane::AzimuthElevation => Axis(0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Plane::RangeAzimuth => "range-azimuth",
            Plane::RangeElevation => "range-elevation",
            Plane::AzimuthElevation => "azimuth-elevation",
        }
    }
}

/// Mean contrast over every non-empty slice of the cube parallel to `plane`.
pub fn plane_contrast(cube: &PowerCube, plane: Plane, kind: ContrastKind) -> Result<f64> {
    let vals: Vec<f64> = cube
        .values
        .axis_iter(plane.normal_axis())
        .filter(|s| s.iter().any(|v| *v > 0.0))
        .map(|s| image_contrast(&s.to_owned(), kind))
        .collect::<Result<_>>()?;
    if vals.is_empty() {
        return Err(Error::Degenerate("cube has no non-empty slice".into()));
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

pub fn contrast_per_plane(cube: &PowerCube, kind: ContrastKind) -> Result<PlaneContrast> {
    Ok(PlaneContrast {
        range_azimuth: plane_contrast(cube, Plane::RangeAzimuth, kind)?,
        range_elevation: plane_contrast(cube, Plane::RangeElevation, kind)?,
        azimuth_elevation: plane_contrast(cube, Plane::AzimuthElevation, kind)?,
    })
}

fn span_db(cube: &PowerCube) -> Result<f64> {
    let (lo, hi) = cube
        .values
        .iter()
        .filter(|v| **v > 0.0)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
    if hi == 0.0 {
        return Err(Error::Degenerate("cube has no positive cell".into()));
    }
    Ok(10.0 * (hi / lo).log10())
}

/// Ratio of the dB spans `max − min` over positive cells of two cubes.
pub fn dynamic_range_ratio(a: &PowerCube, b: &PowerCube) -> Result<f64> {
    let den = span_db(b)?;
    if den <= 0.0 {
        return Err(Error::Degenerate(
            "reference cube has zero dynamic range".into(),
        ));
    }
    Ok(span_db(a)? / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::CubeMeta;
    use crate::scene::Scatterer;
    use ndarray::Array3;

    fn cube_from(values: Array3<f64>) -> PowerCube {
        let (r, a, e) = values.dim();
        let grid = ImagingGrid::new(
            (0..a).map(|i| i as f64).collect(),
            (0..e).map(|i| i as f64).collect(),
            (0..r).map(|i| 1.0 + i as f64 * 0.5).collect(),
        )
        .unwrap();
        PowerCube {
            values,
            grid,
            meta: CubeMeta::default(),
        }
    }

    #[test]
    fn voxelise_single_peak() {
        let mut v = Array3::from_elem((4, 5, 6), 1.0);
        v[[2, 2, 2]] = 1e4;
        v[[2, 2, 3]] = 500.0;
        v[[2, 3, 3]] = 50.0;
        let d = voxelise(&cube_from(v), 20.0).unwrap();
        assert_eq!(d.iter().filter(|b| **b).count(), 2);
        assert!(d[[2, 2, 2]] && d[[2, 2, 3]]);
    }

    #[test]
    fn voxelise_extremes() {
        let mut v = Array3::from_elem((2, 3, 3), 0.0);
        v[[0, 0, 0]] = 1.0;
        v[[1, 2, 2]] = 3.0;
        let all = voxelise(&cube_from(v.clone()), f64::MIN).unwrap();
        assert_eq!(all.iter().filter(|b| **b).count(), 2);
        let uniform = voxelise(&cube_from(Array3::from_elem((2, 3, 3), 7.0)), 20.0).unwrap();
        assert!(uniform.iter().all(|b| !*b));
        assert!(voxelise(&cube_from(Array3::zeros((2, 2, 2))), 20.0).is_err());
    }

    #[test]
    fn identical_tensors_are_perfect() {
        let mut t = Array3::from_elem((3, 4, 5), false);
        t[[0, 1, 2]] = true;
        t[[2, 3, 4]] = true;
        let c = confusion(&t, &t).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 2,
                fp: 0,
                tn: 58,
                fn_: 0
            }
        );
        let r = report(&c);
        assert_eq!(r.accuracy, Some(1.0));
        assert_eq!(r.f_score, Some(1.0));
    }

    #[test]
    fn disjoint_tensors() {
        let mut a = Array3::from_elem((2, 2, 2), false);
        let mut b = a.clone();
        a[[0, 0, 0]] = true;
        b[[1, 1, 1]] = true;
        let r = report(&confusion(&a, &b).unwrap());
        assert_eq!(r.f_score, Some(0.0));
    }

    #[test]
    fn four_cell_hand_case() {
        let d = Array3::from_shape_vec((1, 1, 4), vec![true, true, false, false]).unwrap();
        let t = Array3::from_shape_vec((1, 1, 4), vec![true, false, true, false]).unwrap();
        let c = confusion(&d, &t).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 1,
                fp: 1,
                tn: 1,
                fn_: 1
            }
        );
        let r = report(&c);
        for m in [
            r.accuracy,
            r.precision,
            r.sensitivity,
            r.specificity,
            r.auc,
            r.f_score,
        ] {
            assert!((m.unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn undefined_precision() {
        let r = report(&ConfusionCounts {
            tp: 0,
            fp: 0,
            tn: 5,
            fn_: 2,
        });
        assert_eq!(r.precision, None);
        assert_eq!(r.f_score, None);
        assert_eq!(r.sensitivity, Some(0.0));
    }

    #[test]
    fn symmetric_counts_auc_equals_accuracy() {
        let r = report(&ConfusionCounts {
            tp: 7,
            fp: 3,
            tn: 7,
            fn_: 3,
        });
        assert!((r.auc.unwrap() - r.accuracy.unwrap()).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let a = Array3::from_elem((2, 2, 2), false);
        let b = Array3::from_elem((2, 2, 3), false);
        assert!(matches!(
            confusion(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn contrast_closed_forms() {
        let flat = Array2::from_elem((4, 4), 3.0);
        assert!(image_contrast(&flat, ContrastKind::Amplitude).unwrap() < 1e-12);
        for n in [2usize, 9, 64] {
            let mut s = Array2::zeros((1, n));
            s[[0, 0]] = 4.0;
            let c = image_contrast(&s, ContrastKind::Amplitude).unwrap();
            assert!((c - ((n - 1) as f64).sqrt()).abs() < 1e-12);
        }
        assert!(image_contrast(&Array2::zeros((3, 3)), ContrastKind::Amplitude).is_err());
    }

    #[test]
    fn contrast_scale_invariant() {
        let s = Array2::from_shape_fn((5, 7), |(i, j)| ((i * 7 + j) as f64).sin().abs());
        for kind in [ContrastKind::Amplitude, ContrastKind::Power] {
            let a = image_contrast(&s, kind).unwrap();
            let b = image_contrast(&(&s * 13.7), kind).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_contrast_skips_empty_slices() {
        let mut v = Array3::zeros((3, 4, 5));
        v[[1, 1, 1]] = 2.0;
        let c = cube_from(v);
        // only one non-empty range-azimuth slice: one-hot over 3×4 cells
        let ra = plane_contrast(&c, Plane::RangeAzimuth, ContrastKind::Amplitude).unwrap();
        assert!((ra - 11f64.sqrt()).abs() < 1e-12);
        let ae = plane_contrast(&c, Plane::AzimuthElevation, ContrastKind::Amplitude).unwrap();
        assert!((ae - 19f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dynamic_range_conventions() {
        let v = Array3::from_shape_fn((2, 3, 4), |(a, b, c)| 1.0 + (a * 12 + b * 4 + c) as f64);
        let a = cube_from(v.clone());
        assert!((dynamic_range_ratio(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let b = cube_from(&v * 10.0);
        assert!((dynamic_range_ratio(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        let flat = cube_from(Array3::from_elem((2, 2, 2), 1.0));
        assert!(dynamic_range_ratio(&a, &flat).is_err());
    }

    #[test]
    fn truth_cells_from_scatterers() {
        let grid = ImagingGrid::new(
            (-10..=10).map(|a| a as f64).collect(),
            (-5..=5).map(|a| a as f64).collect(),
            (0..100).map(|r| r as f64 * 0.15).collect(),
        )
        .unwrap();
        let scene = Scene::new(
            "t",
            vec![
                Scatterer::at_angles(9.0, 3.2, -1.9),
                Scatterer::at_angles(9.01, 3.1, -2.1),
                Scatterer::at_angles(12.0, 40.0, 0.0),
            ],
        );
        let t = truth_occupancy(&scene, &grid);
        assert_eq!(t.iter().filter(|b| **b).count(), 1);
        assert!(t[[60, 13, 3]]);
    }
}
