//! 2D max-projections of a power cube rendered as CSV tables and 8-bit PGM
//! heatmaps.

use std::fmt::Write as _;

use ndarray::{Array2, Axis};

use crate::imaging::PowerCube;
use crate::metrics::{Plane, PlaneContrast};

/// Maximum over the axis normal to `plane`. The result is indexed
/// `[range][azimuth]`, `[range][elevation]` or `[azimuth][elevation]`.
pub fn max_projection(cube: &PowerCube, plane: Plane) -> Array2<f64> {
    cube.values
        .fold_axis(plane.normal_axis(), 0.0, |acc, v| acc.max(*v))
}

/// Row and column axes of a projection.
pub fn projection_axes(cube: &PowerCube, plane: Plane) -> (&[f64], &[f64]) {
    let g = &cube.grid;
    match plane {
        Plane::RangeAzimuth => (&g.range_m, &g.azimuth_deg),
        Plane::RangeElevation => (&g.range_m, &g.elevation_deg),
        Plane::AzimuthElevation => (&g.azimuth_deg, &g.elevation_deg),
    }
}

/// CSV with the column axis as header and the row axis as first column.
pub fn projection_csv(values: &Array2<f64>, rows: &[f64], cols: &[f64]) -> String {
    let mut out = String::from("axis");
    for c in cols {
        write!(out, ",{c}").unwrap();
    }
    out.push('\n');
    for (row, r) in values.axis_iter(Axis(0)).zip(rows) {
        write!(out, "{r}").unwrap();
        for v in row {
            write!(out, ",{v:e}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Binary PGM (P5), one byte per pixel. Power is mapped linearly in dB from
/// `max − window_db` (black) to `max` (white); non-positive cells are black.
pub fn pgm_heatmap(values: &Array2<f64>, window_db: f64) -> Vec<u8> {
    let (h, w) = values.dim();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    let peak = values.iter().copied().fold(0.0, f64::max);
    for v in values.iter() {
        let byte = if *v > 0.0 && peak > 0.0 && window_db > 0.0 {
            let db = 10.0 * (v / peak).log10();
            (255.0 * (1.0 + db / window_db)).clamp(0.0, 255.0).round() as u8
        } else {
            0
        };
        out.push(byte);
    }
    out
}

/// One row per labelled run: `label,range-azimuth,range-elevation,azimuth-elevation`.
pub fn contrast_csv(rows: &[(&str, PlaneContrast)]) -> String {
    let mut out = String::from("label");
    for p in Plane::ALL {
        write!(out, ",{}", p.name()).unwrap();
    }
    out.push('\n');
    for (label, c) in rows {
        writeln!(
            out,
            "{label},{},{},{}",
            c.range_azimuth, c.range_elevation, c.azimuth_elevation
        )
        .unwrap();
    }
    out
}
