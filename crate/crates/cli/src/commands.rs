use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use motionsnap_core::export::{max_projection, pgm_heatmap, projection_axes, projection_csv};
use motionsnap_core::sim::{read_raw_cube, write_raw_cube};
use motionsnap_core::{
    add_noise, confusion, contrast_per_plane, dynamic_range_ratio, image_frame, report,
    simulate_frame, truth_occupancy, voxelise, MetricsReport, Plane, PowerCube,
};
use ndarray::Array3;

use crate::artifacts::Manifest;
use crate::config::LoadedConfig;
use crate::error::CliError;

pub const RAW_CUBE: &str = "raw.cube";
pub const POWER_CUBE: &str = "power.cube";
pub const METRICS_JSON: &str = "metrics.json";

pub fn simulate(cfg: &LoadedConfig, out: &Path, overrides: Vec<String>) -> Result<(), CliError> {
    let c = &cfg.config;
    let scene = cfg.scene()?;
    let mut manifest = Manifest::new("simulate", cfg, overrides);
    let power = c.noise.power.unwrap_or(0.0);
    let mut cube = simulate_frame(&scene, &c.radar, &c.motion, power, c.noise.seed, c.sim_mode)
        .map_err(|e| CliError::runtime("simulation", e))?;
    if let Some(snr) = c.noise.snr_db {
        cube = add_noise(&cube, snr, c.noise.seed).map_err(|e| CliError::runtime("noise", e))?;
    }
    let mut bytes = Vec::new();
    write_raw_cube(&cube, &mut bytes).map_err(|e| CliError::runtime("raw cube", e))?;
    manifest.write(out, RAW_CUBE, &bytes)?;
    let (q, l, b) = cube.samples.dim();
    eprintln!(
        "simulated {} scatterers into a {q}×{l}×{b} cube",
        scene.len()
    );
    manifest.finish(out, "simulate.manifest.json")
}

pub fn image(
    cfg: &LoadedConfig,
    cube_path: &Path,
    out: &Path,
    overrides: Vec<String>,
) -> Result<(), CliError> {
    let c = &cfg.config;
    let plan = cfg.plan()?;
    let grid = cfg.grid()?;
    let mut manifest = Manifest::new("image", cfg, overrides);
    manifest.plan = serde_json::to_value(&plan).ok();
    manifest.input(cube_path)?;
    let file = File::open(cube_path).map_err(|e| CliError::runtime(cube_path.display(), e))?;
    let raw = read_raw_cube(BufReader::new(file), &c.radar, &c.motion)
        .map_err(|e| CliError::runtime(cube_path.display(), e))?;
    let power = image_frame(
        &raw,
        &plan,
        &grid,
        c.imaging.method,
        c.snapshots.compensate,
        c.imaging.detection_threshold_db,
    )
    .map_err(|e| CliError::runtime("imaging", e))?;
    if power.meta.detected_bins.is_empty() {
        let msg = "no range bin passed detection; the power cube is empty".to_string();
        eprintln!("warning: {msg}");
        manifest.warnings.push(msg);
    }

    let mut bytes = Vec::new();
    power
        .write_to(&mut bytes)
        .map_err(|e| CliError::runtime("power cube", e))?;
    manifest.write(out, POWER_CUBE, &bytes)?;
    for plane in Plane::ALL {
        let proj = max_projection(&power, plane);
        let (rows, cols) = projection_axes(&power, plane);
        let stem = format!("projection_{}", plane.name());
        manifest.write(
            out,
            &format!("{stem}.csv"),
            projection_csv(&proj, rows, cols).as_bytes(),
        )?;
        manifest.write(
            out,
            &format!("{stem}.pgm"),
            &pgm_heatmap(&proj, c.imaging.heatmap_window_db),
        )?;
    }
    eprintln!(
        "imaged {} range bins with {} (N_ex = {}, T_ind = {}, compensation {})",
        power.meta.detected_bins.len(),
        power.meta.method,
        plan.n_ex,
        plan.t_ind,
        if c.snapshots.compensate { "on" } else { "off" }
    );
    manifest.finish(out, "image.manifest.json")
}

fn read_power_cube(path: &Path) -> Result<PowerCube, CliError> {
    let file = File::open(path).map_err(|e| CliError::runtime(path.display(), e))?;
    PowerCube::read_from(BufReader::new(file)).map_err(|e| CliError::runtime(path.display(), e))
}

pub fn metrics(
    cfg: &LoadedConfig,
    cube_path: &Path,
    reference: Option<&Path>,
    out: &Path,
    overrides: Vec<String>,
) -> Result<(), CliError> {
    let c = &cfg.config;
    let mut manifest = Manifest::new("metrics", cfg, overrides);
    manifest.input(cube_path)?;
    let cube = read_power_cube(cube_path)?;
    let grid = cfg.grid()?;
    if cube.grid.shape() != grid.shape() {
        return Err(CliError::Runtime(format!(
            "grid mismatch: cube {} has shape {:?}, the scenario grid is {:?}",
            cube_path.display(),
            cube.grid.shape(),
            grid.shape()
        )));
    }
    let scene = cfg.scene()?;
    let truth = truth_occupancy(&scene, &cube.grid);
    let detected = if cube.max() > 0.0 {
        voxelise(&cube, c.metrics.threshold_db).map_err(|e| CliError::runtime("voxelisation", e))?
    } else {
        Array3::from_elem(cube.values.dim(), false)
    };
    let counts = confusion(&detected, &truth).map_err(|e| CliError::runtime("confusion", e))?;
    let mut rep = report(&counts);
    rep.contrast = contrast_per_plane(&cube, c.metrics.contrast).ok();
    if let Some(r) = reference {
        manifest.input(r)?;
        let other = read_power_cube(r)?;
        rep.dynamic_range_ratio = Some(
            dynamic_range_ratio(&cube, &other)
                .map_err(|e| CliError::runtime("dynamic range", e))?,
        );
    }

    let mut json = serde_json::to_vec_pretty(&rep).map_err(|e| CliError::runtime("report", e))?;
    json.push(b'\n');
    manifest.write(out, METRICS_JSON, &json)?;
    manifest.write(out, "metrics.csv", metrics_csv(&rep).as_bytes())?;
    eprintln!(
        "tp {} fp {} tn {} fn {}; F-score {}",
        counts.tp,
        counts.fp,
        counts.tn,
        counts.fn_,
        rep.f_score
            .map_or("undefined".into(), |f| format!("{f:.4}"))
    );
    manifest.finish(out, "metrics.manifest.json")
}

/// `(name, value)` rows of a report, contrast and dynamic range included
/// when present.
fn report_rows(r: &MetricsReport) -> Vec<(&'static str, Option<f64>)> {
    let mut rows = vec![
        ("accuracy", r.accuracy),
        ("precision", r.precision),
        ("sensitivity", r.sensitivity),
        ("specificity", r.specificity),
        ("auc", r.auc),
        ("f_score", r.f_score),
    ];
    let c = r.contrast;
    rows.push(("contrast_range_azimuth", c.map(|c| c.range_azimuth)));
    rows.push(("contrast_range_elevation", c.map(|c| c.range_elevation)));
    rows.push(("contrast_azimuth_elevation", c.map(|c| c.azimuth_elevation)));
    rows.push(("dynamic_range_ratio", r.dynamic_range_ratio));
    rows
}

fn cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v}"))
}

pub fn metrics_csv(r: &MetricsReport) -> String {
    let mut out = String::from("metric,value\n");
    let counts = &r.counts;
    for (name, v) in [
        ("tp", counts.tp),
        ("fp", counts.fp),
        ("tn", counts.tn),
        ("fn", counts.fn_),
    ] {
        writeln!(out, "{name},{v}").unwrap();
    }
    for (name, v) in report_rows(r) {
        writeln!(out, "{name},{}", cell(v)).unwrap();
    }
    out
}

/// `b / a`, with equal values (zeros included) comparing as 1.
fn ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if a == b => Some(1.0),
        (Some(a), Some(b)) => Some(b / a),
        _ => None,
    }
}

pub fn compare_table(a: &MetricsReport, b: &MetricsReport, labels: [&str; 2]) -> String {
    let mut out = format!("metric,{},{},ratio\n", labels[0], labels[1]);
    for ((name, va), (_, vb)) in report_rows(a).into_iter().zip(report_rows(b)) {
        writeln!(
            out,
            "{name},{},{},{}",
            cell(va),
            cell(vb),
            cell(ratio(va, vb))
        )
        .unwrap();
    }
    out
}

pub fn compare(a: &Path, b: &Path, labels: [&str; 2], out: Option<&Path>) -> Result<(), CliError> {
    let load = |p: &Path| -> Result<MetricsReport, CliError> {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::runtime(p.display(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::runtime(p.display(), e))
    };
    let table = compare_table(&load(a)?, &load(b)?, labels);
    print!("{table}");
    if let Some(dir) = out {
        crate::artifacts::write_atomic(&dir.join("compare.csv"), table.as_bytes())?;
    }
    Ok(())
}
