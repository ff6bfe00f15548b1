//! Point-scatterer scenes: loading CAD-derived point clouds, resampling them
//! to uniform density and assigning Swerling-III amplitudes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod shapes;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    /// Position in the radar frame, m.
    pub position: [f64; 3],
    /// Complex reflectivity.
    pub amplitude: Complex64,
}

impl Scatterer {
    pub fn new(position: [f64; 3], amplitude: Complex64) -> Self {
        Self {
            position,
            amplitude,
        }
    }

    pub fn unit(position: [f64; 3]) -> Self {
        Self::new(position, Complex64::new(1.0, 0.0))
    }

    /// Places a unit scatterer at `range` along azimuth/elevation given in
    /// degrees.
    pub fn at_angles(range: f64, azimuth_deg: f64, elevation_deg: f64) -> Self {
        Self::unit(polar_to_cartesian(
            range,
            azimuth_deg.to_radians(),
            elevation_deg.to_radians(),
        ))
    }

    /// `(range, azimuth, elevation)` with angles in radians.
    pub fn polar(&self) -> (f64, f64, f64) {
        cartesian_to_polar(self.position)
    }
}

pub fn polar_to_cartesian(range: f64, theta: f64, phi: f64) -> [f64; 3] {
    [
        range * theta.cos() * phi.cos(),
        range * theta.sin() * phi.cos(),
        range * phi.sin(),
    ]
}

pub fn cartesian_to_polar(p: [f64; 3]) -> (f64, f64, f64) {
    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let theta = p[1].atan2(p[0]);
    let phi = if r > 0.0 {
        (p[2] / r).clamp(-1.0, 1.0).asin()
    } else {
        0.0
    };
    (r, theta, phi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub label: String,
    pub scatterers: Vec<Scatterer>,
}

impl Scene {
    pub fn new(label: impl Into<String>, scatterers: Vec<Scatterer>) -> Self {
        Self {
            label: label.into(),
            scatterers,
        }
    }

    pub fn len(&self) -> usize {
        self.scatterers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scatterers.is_empty()
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> Option<([f64; 3], [f64; 3])> {
        let first = self.scatterers.first()?.position;
        let mut lo = first;
        let mut hi = first;
        for s in &self.scatterers {
            for k in 0..3 {
                lo[k] = lo[k].min(s.position[k]);
                hi[k] = hi[k].max(s.position[k]);
            }
        }
        Some((lo, hi))
    }

    pub fn translated(mut self, offset: [f64; 3]) -> Self {
        for s in &mut self.scatterers {
            for (p, o) in s.position.iter_mut().zip(offset) {
                *p += o;
            }
        }
        self
    }

    pub fn merged(mut self, other: Scene) -> Self {
        self.scatterers.extend(other.scatterers);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CloudFormat {
    XyzText,
    PlyAscii,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "xyz" | "txt" => Some(Self::XyzText),
            "ply" => Some(Self::PlyAscii),
            _ => None,
        }
    }
}

pub fn load_point_cloud(path: &Path, format: CloudFormat) -> Result<Scene> {
    let text = fs::read_to_string(path)?;
    let points = match format {
        CloudFormat::XyzText => parse_xyz(&text, path)?,
        CloudFormat::PlyAscii => parse_ply(&text, path)?,
    };
    if points.is_empty() {
        return Err(Error::EmptyScene);
    }
    let label = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("cloud")
        .to_string();
    Ok(Scene::new(
        label,
        points.into_iter().map(Scatterer::unit).collect(),
    ))
}

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedInput {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn parse_coord(tok: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| malformed(path, line, format!("non-numeric token {tok:?}")))?;
    if !v.is_finite() {
        return Err(malformed(
            path,
            line,
            format!("non-finite coordinate {tok:?}"),
        ));
    }
    Ok(v)
}

fn parse_xyz(text: &str, path: &Path) -> Result<Vec<[f64; 3]>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(malformed(path, i + 1, "expected three coordinates"));
        }
        out.push([
            parse_coord(toks[0], path, i + 1)?,
            parse_coord(toks[1], path, i + 1)?,
            parse_coord(toks[2], path, i + 1)?,
        ]);
    }
    Ok(out)
}

struct PlyElement {
    name: String,
    count: usize,
    props: Vec<String>,
}

fn parse_ply(text: &str, path: &Path) -> Result<Vec<[f64; 3]>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(malformed(path, 1, "missing 'ply' magic")),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut header_done = false;
    for (i, raw) in lines.by_ref() {
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks.as_slice() {
            ["format", fmt, ..] => {
                if *fmt != "ascii" {
                    return Err(malformed(
                        path,
                        i + 1,
                        format!("unsupported PLY format {fmt}"),
                    ));
                }
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| malformed(path, i + 1, "bad element count"))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            ["property", "list", ..] => {
                let name = toks.last().unwrap_or(&"").to_string();
                match elements.last_mut() {
                    Some(e) => e.props.push(name),
                    None => return Err(malformed(path, i + 1, "property before element")),
                }
            }
            ["property", _ty, name] => match elements.last_mut() {
                Some(e) => e.props.push(name.to_string()),
                None => return Err(malformed(path, i + 1, "property before element")),
            },
            ["end_header"] => {
                header_done = true;
                break;
            }
            _ => {
                return Err(malformed(
                    path,
                    i + 1,
                    format!("unexpected header line {raw:?}"),
                ))
            }
        }
    }
    if !header_done {
        return Err(malformed(path, text.lines().count(), "missing end_header"));
    }
    let mut out = Vec::new();
    for el in &elements {
        let idx = |n: &str| el.props.iter().position(|p| p == n);
        let xyz = (idx("x"), idx("y"), idx("z"));
        for _ in 0..el.count {
            let (i, raw) = lines
                .next()
                .ok_or_else(|| malformed(path, text.lines().count(), "truncated body"))?;
            if el.name != "vertex" {
                continue;
            }
            let (Some(ix), Some(iy), Some(iz)) = xyz else {
                return Err(malformed(path, i + 1, "vertex element lacks x/y/z"));
            };
            let toks: Vec<&str> = raw.split_whitespace().collect();
            let get = |k: usize| -> Result<f64> {
                let tok = toks
                    .get(k)
                    .ok_or_else(|| malformed(path, i + 1, "too few vertex properties"))?;
                parse_coord(tok, path, i + 1)
            };
            out.push([get(ix)?, get(iy)?, get(iz)?]);
        }
    }
    Ok(out)
}

/// Writes an ASCII PLY containing only vertex positions.
pub fn write_ply(scene: &Scene, path: &Path) -> Result<()> {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "ply\nformat ascii 1.0\ncomment {}", scene.label);
    let _ = writeln!(s, "element vertex {}", scene.len());
    s.push_str("property double x\nproperty double y\nproperty double z\nend_header\n");
    for p in &scene.scatterers {
        let _ = writeln!(s, "{} {} {}", p.position[0], p.position[1], p.position[2]);
    }
    fs::write(path, s)?;
    Ok(())
}

/// Voxel-stratified resampling to `target_count` points.
///
/// The bounding box is cut into cubic voxels sized so that each holds four
/// input points on average; the output budget is spread evenly over the
/// occupied voxels and drawn from the points inside each. Voxels that run
/// out of points contribute jittered copies, clamped to the voxel.
pub fn resample_uniform(scene: &Scene, target_count: usize, seed: u64) -> Result<Scene> {
    if target_count == 0 {
        return Err(Error::InvalidArgument(
            "target_count must be at least 1".into(),
        ));
    }
    let (lo, hi) = scene.bounds().ok_or(Error::EmptyScene)?;
    let n = scene.len();
    let extent: Vec<f64> = (0..3).map(|k| hi[k] - lo[k]).collect();

    // Edge length: the smallest one that gives ≥ 4 points per voxel on
    // average over the non-degenerate dimensions.
    let live: Vec<f64> = extent.iter().copied().filter(|e| *e > 0.0).collect();
    let edge = if live.is_empty() {
        1.0
    } else {
        let measure: f64 = live.iter().product();
        let voxels = (n as f64 / 4.0).max(1.0);
        let mut h = (measure / voxels).powf(1.0 / live.len() as f64);
        loop {
            let count: f64 = live.iter().map(|e| (e / h).ceil().max(1.0)).product();
            if count <= voxels {
                break;
            }
            h *= 1.05;
        }
        h
    };
    let dims: Vec<usize> = extent
        .iter()
        .map(|e| ((e / edge).ceil() as usize).max(1))
        .collect();
    let key = |p: [f64; 3]| -> [usize; 3] {
        let mut k = [0usize; 3];
        for d in 0..3 {
            let i = if extent[d] > 0.0 {
                ((p[d] - lo[d]) / edge) as usize
            } else {
                0
            };
            k[d] = i.min(dims[d] - 1);
        }
        k
    };

    let mut cells: BTreeMap<[usize; 3], Vec<usize>> = BTreeMap::new();
    for (i, s) in scene.scatterers.iter().enumerate() {
        cells.entry(key(s.position)).or_default().push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<[usize; 3]> = cells.keys().copied().collect();
    order.shuffle(&mut rng);
    let per = target_count / order.len();
    let extra = target_count % order.len();

    let mut out = Vec::with_capacity(target_count);
    for (ci, cell) in order.iter().enumerate() {
        let want = per + usize::from(ci < extra);
        if want == 0 {
            continue;
        }
        let members = &cells[cell];
        let mut picks = members.clone();
        picks.shuffle(&mut rng);
        for j in 0..want {
            let src = &scene.scatterers[picks[j % picks.len()]];
            let mut pos = src.position;
            if j >= picks.len() {
                for d in 0..3 {
                    if extent[d] > 0.0 {
                        let cell_lo = lo[d] + cell[d] as f64 * edge;
                        let cell_hi = (cell_lo + edge).min(hi[d]);
                        let jitter = (rng.random::<f64>() - 0.5) * 0.5 * edge;
                        pos[d] = (pos[d] + jitter).clamp(cell_lo, cell_hi);
                    }
                }
            }
            out.push(Scatterer::new(pos, src.amplitude));
        }
    }
    Ok(Scene::new(scene.label.clone(), out))
}

/// Draws `|α| ~ U(lo, hi)` independently per scatterer with zero phase.
pub fn assign_swerling3_amplitudes(scene: &Scene, lo: f64, hi: f64, seed: u64) -> Result<Scene> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "amplitude bounds need 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scatterers = scene
        .scatterers
        .iter()
        .map(|s| {
            let mag = rng.random_range(lo..=hi);
            Scatterer::new(s.position, Complex64::new(mag, 0.0))
        })
        .collect();
    Ok(Scene::new(scene.label.clone(), scatterers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str, suffix: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn xyz_three_points() {
        let f = write_tmp("0 10 0\n1 10 0\n0 10 1\n", ".xyz");
        let s = load_point_cloud(f.path(), CloudFormat::XyzText).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.scatterers[1].position, [1.0, 10.0, 0.0]);
        assert!(s
            .scatterers
            .iter()
            .all(|p| p.amplitude == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn xyz_non_numeric_token_names_line() {
        let f = write_tmp("0 10 0\n1 ten 0\n", ".xyz");
        match load_point_cloud(f.path(), CloudFormat::XyzText) {
            Err(Error::MalformedInput { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_cloud_is_error() {
        let f = write_tmp("# nothing\n\n", ".xyz");
        assert!(matches!(
            load_point_cloud(f.path(), CloudFormat::XyzText),
            Err(Error::EmptyScene)
        ));
    }

    #[test]
    fn ply_with_12000_vertices_and_faces() {
        let mut s = String::from(
            "ply\nformat ascii 1.0\ncomment test\nelement vertex 12000\nproperty float x\n\
             property float y\nproperty float z\nproperty uchar red\nelement face 1\n\
             property list uchar int vertex_indices\nend_header\n",
        );
        for i in 0..12000 {
            s.push_str(&format!("{} {} {} 255\n", i as f64 * 1e-3, 5.0, 0.5));
        }
        s.push_str("3 0 1 2\n");
        let f = write_tmp(&s, ".ply");
        let scene = load_point_cloud(f.path(), CloudFormat::PlyAscii).unwrap();
        assert_eq!(scene.len(), 12000);
        assert_eq!(scene.scatterers[2].position, [0.002, 5.0, 0.5]);
    }

    #[test]
    fn ply_round_trip() {
        let scene = shapes::pedestrian([5.0, 0.0, -0.8], 500, 3);
        let f = tempfile::Builder::new().suffix(".ply").tempfile().unwrap();
        write_ply(&scene, f.path()).unwrap();
        let back = load_point_cloud(f.path(), CloudFormat::PlyAscii).unwrap();
        assert_eq!(back.len(), 500);
        for (a, b) in back.scatterers.iter().zip(&scene.scatterers) {
            for k in 0..3 {
                assert!((a.position[k] - b.position[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn resample_to_one() {
        let scene = shapes::pedestrian([5.0, 0.0, 0.0], 300, 1);
        let out = resample_uniform(&scene, 1, 9).unwrap();
        assert_eq!(out.len(), 1);
        let (lo, hi) = scene.bounds().unwrap();
        for k in 0..3 {
            let v = out.scatterers[0].position[k];
            assert!(lo[k] <= v && v <= hi[k]);
        }
    }

    #[test]
    fn resample_keeps_cardinality_and_bounds() {
        let scene = shapes::bungalows([8.0, 0.0, -1.0], 3.0, 23_000, 5);
        assert_eq!(scene.len(), 23_000);
        let out = resample_uniform(&scene, 23_000, 2).unwrap();
        assert_eq!(out.len(), 23_000);
        let (lo, hi) = scene.bounds().unwrap();
        for s in &out.scatterers {
            for k in 0..3 {
                assert!(lo[k] <= s.position[k] && s.position[k] <= hi[k]);
            }
        }
    }

    #[test]
    fn resample_is_bit_reproducible() {
        let scene = shapes::pedestrian([5.0, 0.0, 0.0], 2000, 1);
        let a = resample_uniform(&scene, 700, 42).unwrap();
        let b = resample_uniform(&scene, 700, 42).unwrap();
        assert_eq!(a, b);
        let c = resample_uniform(&scene, 700, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn resample_rejects_zero_target() {
        let scene = Scene::new("x", vec![Scatterer::unit([1.0, 0.0, 0.0])]);
        assert!(resample_uniform(&scene, 0, 0).is_err());
        assert!(matches!(
            resample_uniform(&Scene::new("e", vec![]), 3, 0),
            Err(Error::EmptyScene)
        ));
    }

    #[test]
    fn swerling_bounds_and_phase() {
        let scene = shapes::pedestrian([5.0, 0.0, 0.0], 1000, 1);
        let out = assign_swerling3_amplitudes(&scene, 0.5, 1.0, 7).unwrap();
        for s in &out.scatterers {
            let m = s.amplitude.norm();
            assert!((0.5..=1.0).contains(&m));
            assert_eq!(s.amplitude.im, 0.0);
            assert!(m > 0.0);
        }
    }

    #[test]
    fn swerling_nearly_degenerate() {
        let scene = shapes::pedestrian([5.0, 0.0, 0.0], 100, 1);
        let out = assign_swerling3_amplitudes(&scene, 0.8 - 1e-9, 0.8, 1).unwrap();
        assert!(out
            .scatterers
            .iter()
            .all(|s| (s.amplitude.re - 0.8).abs() < 1e-8));
        assert!(assign_swerling3_amplitudes(&scene, 1.0, 0.5, 1).is_err());
        assert!(assign_swerling3_amplitudes(&scene, 0.0, 0.5, 1).is_err());
    }

    #[test]
    fn swerling_sample_mean() {
        let pts = (0..100_000)
            .map(|i| Scatterer::unit([1.0 + i as f64, 0.0, 0.0]))
            .collect();
        let scene = Scene::new("many", pts);
        let out = assign_swerling3_amplitudes(&scene, 0.5, 1.0, 11).unwrap();
        let mean: f64 = out.scatterers.iter().map(|s| s.amplitude.re).sum::<f64>() / 1e5;
        assert!((mean - 0.75).abs() < 0.005, "{mean}");
    }

    #[test]
    fn polar_round_trip() {
        let (r, t, p) = cartesian_to_polar(polar_to_cartesian(12.0, 0.3, -0.2));
        assert!((r - 12.0).abs() < 1e-12 && (t - 0.3).abs() < 1e-12 && (p + 0.2).abs() < 1e-12);
    }
}
