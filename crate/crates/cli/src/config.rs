//! Scenario files: radar, motion, scene, snapshot plan, grid, estimator and
//! noise in one TOML (or JSON) document.

use std::fmt;
use std::path::{Path, PathBuf};

use motionsnap_core::scene::shapes::{bungalows, pedestrian};
use motionsnap_core::{
    assign_swerling3_amplitudes, build_plan, compute_snapshot_interval, derived_params,
    load_point_cloud, max_feasible_snapshots, resample_uniform, AxisSpec, CloudFormat,
    ContrastKind, EgoMotion, ImagingGrid, Method, RadarConfig, Scatterer, Scene, SimMode,
    SnapshotPlan,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub radar: RadarConfig,
    pub motion: EgoMotion,
    pub scene: SceneSpec,
    #[serde(default)]
    pub snapshots: SnapshotSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub imaging: ImagingSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub sim_mode: SimMode,
    #[serde(default)]
    pub metrics: MetricsSpec,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Exactly one of `points`, `cloud` or `shape`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud: Option<CloudSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeSpec>,
    /// Draw `|α| ~ U(lo, hi)` per scatterer after the geometry is built.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swerling: Option<SwerlingSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    /// m
    pub range: f64,
    /// degrees
    pub azimuth: f64,
    /// degrees
    pub elevation: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// degrees
    #[serde(default)]
    pub phase: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudSpec {
    /// Relative paths resolve against the scenario file's directory.
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<CloudFormat>,
    #[serde(default)]
    pub offset: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapeSpec {
    Pedestrian {
        base: [f64; 3],
        count: usize,
        #[serde(default)]
        seed: u64,
    },
    Bungalows {
        base: [f64; 3],
        gap: f64,
        count: usize,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwerlingSpec {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub seed: u64,
}

/// `n_ex = "max"` or a count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnapshotCount {
    #[default]
    Max,
    Count(usize),
}

impl std::str::FromStr for SnapshotCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("max") {
            Ok(Self::Max)
        } else {
            s.parse()
                .map(Self::Count)
                .map_err(|_| format!("expected a count or \"max\", got {s:?}"))
        }
    }
}

impl fmt::Display for SnapshotCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Max => f.write_str("max"),
            Self::Count(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for SnapshotCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Max => s.serialize_str("max"),
            Self::Count(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for SnapshotCount {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(Self::Count(n as usize)),
            Raw::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotSpec {
    #[serde(default)]
    pub l0: usize,
    #[serde(default)]
    pub n_ex: SnapshotCount,
    /// Slow-time samples per snapshot. Defaults to the snapshot interval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default = "yes")]
    pub compensate: bool,
}

fn yes() -> bool {
    true
}

impl Default for SnapshotSpec {
    fn default() -> Self {
        Self {
            l0: 0,
            n_ex: SnapshotCount::Max,
            samples: None,
            compensate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "full_axis")]
    pub azimuth: AxisSpec,
    #[serde(default = "full_axis")]
    pub elevation: AxisSpec,
    /// Drop range bins beyond this distance, m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_range: Option<f64>,
}

fn full_axis() -> AxisSpec {
    AxisSpec::new(-90.0, 90.0, 1.0)
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            azimuth: full_axis(),
            elevation: full_axis(),
            max_range: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImagingSpec {
    #[serde(default = "dbf")]
    pub method: Method,
    /// Range-bin detection threshold above the median bin power, dB.
    #[serde(default = "twelve")]
    pub detection_threshold_db: f64,
    /// Heatmap span below the peak, dB.
    #[serde(default = "forty")]
    pub heatmap_window_db: f64,
}

fn dbf() -> Method {
    Method::Dbf
}

fn twelve() -> f64 {
    12.0
}

fn forty() -> f64 {
    40.0
}

impl Default for ImagingSpec {
    fn default() -> Self {
        Self {
            method: dbf(),
            detection_threshold_db: twelve(),
            heatmap_window_db: forty(),
        }
    }
}

/// Either an absolute per-sample noise power or an SNR relative to the mean
/// signal power, not both.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSpec {
    /// Voxelisation threshold above the median positive cell, dB.
    #[serde(default = "twenty")]
    pub threshold_db: f64,
    #[serde(default)]
    pub contrast: ContrastKind,
}

fn twenty() -> f64 {
    20.0
}

impl Default for MetricsSpec {
    fn default() -> Self {
        Self {
            threshold_db: twenty(),
            contrast: ContrastKind::default(),
        }
    }
}

/// A parsed scenario together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub path: PathBuf,
    /// SHA-256 of the file bytes, hex.
    pub sha256: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::Config(format!("{} is not UTF-8", path.display())))?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let config: ScenarioConfig = if is_json {
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        Ok(Self {
            config,
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }

    fn base_dir(&self) -> &Path {
        self.path.parent().unwrap_or(Path::new("."))
    }

    /// Field-by-field checks that need no scene data.
    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        if let Err(e) = c.radar.validate() {
            return bad("radar", e.to_string());
        }
        if c.motion.velocity.iter().any(|v| !v.is_finite()) {
            return bad("motion.velocity", "components must be finite".into());
        }
        if c.motion.vy() == 0.0 {
            return bad(
                "motion.velocity[1]",
                "forward speed must be non-zero".into(),
            );
        }
        if let Err(e) = compute_snapshot_interval(&c.radar, &c.motion) {
            return bad("motion.velocity[1]", e.to_string());
        }
        let sources = [
            !c.scene.points.is_empty(),
            c.scene.cloud.is_some(),
            c.scene.shape.is_some(),
        ];
        match sources.iter().filter(|s| **s).count() {
            0 => return bad("scene", "no scatterers: give points, cloud or shape".into()),
            1 => {}
            _ => {
                return bad(
                    "scene",
                    "points, cloud and shape are mutually exclusive".into(),
                )
            }
        }
        for (i, p) in c.scene.points.iter().enumerate() {
            if !(p.range > 0.0 && p.range.is_finite()) {
                return bad(
                    &format!("scene.points[{i}].range"),
                    format!("must be positive, got {}", p.range),
                );
            }
            if !(p.amplitude > 0.0 && p.amplitude.is_finite()) {
                return bad(
                    &format!("scene.points[{i}].amplitude"),
                    format!("must be positive, got {}", p.amplitude),
                );
            }
        }
        if let Some(s) = c.scene.swerling {
            if !(s.lo > 0.0 && s.hi > s.lo && s.hi.is_finite()) {
                return bad(
                    "scene.swerling",
                    format!("need 0 < lo < hi, got [{}, {}]", s.lo, s.hi),
                );
            }
        }
        if c.snapshots.samples == Some(0) {
            return bad("snapshots.samples", "must be at least 1".into());
        }
        for (field, axis) in [
            ("grid.azimuth", c.grid.azimuth),
            ("grid.elevation", c.grid.elevation),
        ] {
            if let Err(e) = axis
                .values()
                .and_then(|v| ImagingGrid::new(v.clone(), v, vec![1.0]).map(|_| ()))
            {
                return bad(field, e.to_string());
            }
        }
        if let Some(r) = c.grid.max_range {
            if !(r > 0.0) {
                return bad("grid.max_range", format!("must be positive, got {r}"));
            }
        }
        match c.imaging.method {
            Method::Mvdr { loading } if !(loading >= 0.0 && loading.is_finite()) => {
                return bad(
                    "imaging.method.loading",
                    format!("must be non-negative, got {loading}"),
                );
            }
            Method::Music { sources: 0 } => {
                return bad("imaging.method.sources", "must be at least 1".into())
            }
            _ => {}
        }
        if !(c.imaging.heatmap_window_db > 0.0) {
            return bad("imaging.heatmap_window_db", "must be positive".into());
        }
        if c.noise.power.is_some() && c.noise.snr_db.is_some() {
            return bad("noise", "give power or snr_db, not both".into());
        }
        if let Some(p) = c.noise.power {
            if !(p >= 0.0 && p.is_finite()) {
                return bad("noise.power", format!("must be non-negative, got {p}"));
            }
        }
        if !c.metrics.threshold_db.is_finite() {
            return bad("metrics.threshold_db", "must be finite".into());
        }
        self.plan().map(|_| ())
    }

    /// Snapshot plan, with `"max"` resolved to the largest count that fits.
    pub fn plan(&self) -> Result<SnapshotPlan, CliError> {
        let c = &self.config;
        let t_ind = compute_snapshot_interval(&c.radar, &c.motion)
            .map_err(|e| CliError::Config(format!("motion.velocity[1]: {e}")))?;
        let samples = c.snapshots.samples.unwrap_or(t_ind);
        let n_ex = match c.snapshots.n_ex {
            SnapshotCount::Count(n) => n,
            SnapshotCount::Max => {
                max_feasible_snapshots(&c.radar, &c.motion, c.snapshots.l0, samples)
                    .map_err(|e| CliError::Config(format!("snapshots: {e}")))?
                    .ok_or_else(|| {
                        CliError::Config(format!(
                            "snapshots: l0 {} + samples {samples} exceed the {} chirps in a frame",
                            c.snapshots.l0, c.radar.num_chirps
                        ))
                    })?
            }
        };
        build_plan(&c.radar, &c.motion, c.snapshots.l0, n_ex, samples)
            .map_err(|e| CliError::Config(format!("snapshots: {e}")))
    }

    pub fn grid(&self) -> Result<ImagingGrid, CliError> {
        let c = &self.config;
        let mut grid = ImagingGrid::for_radar(&c.radar, c.grid.azimuth, c.grid.elevation)
            .map_err(|e| CliError::Config(format!("grid: {e}")))?;
        if let Some(max) = c.grid.max_range {
            let keep = grid
                .range_m
                .iter()
                .take_while(|r| **r <= max)
                .count()
                .max(1);
            grid.range_m.truncate(keep);
        }
        Ok(grid)
    }

    pub fn scene(&self) -> Result<Scene, CliError> {
        let spec = &self.config.scene;
        let label = spec.label.clone().unwrap_or_else(|| "scene".into());
        let mut scene = if !spec.points.is_empty() {
            let pts = spec
                .points
                .iter()
                .map(|p| {
                    let at = Scatterer::at_angles(p.range, p.azimuth, p.elevation);
                    Scatterer::new(
                        at.position,
                        Complex64::from_polar(p.amplitude, p.phase.to_radians()),
                    )
                })
                .collect();
            Scene::new(label, pts)
        } else if let Some(cloud) = &spec.cloud {
            let path = self.base_dir().join(&cloud.path);
            let format = match cloud.format.or_else(|| CloudFormat::from_path(&path)) {
                Some(f) => f,
                None => {
                    return Err(CliError::Config(format!(
                        "scene.cloud.format: cannot infer from {}",
                        path.display()
                    )))
                }
            };
            let mut s = load_point_cloud(&path, format)
                .map_err(|e| CliError::Config(format!("scene.cloud.path: {e}")))?
                .translated(cloud.offset);
            if let Some(n) = cloud.resample {
                s = resample_uniform(&s, n, cloud.seed)
                    .map_err(|e| CliError::Config(format!("scene.cloud.resample: {e}")))?;
            }
            s.label = label;
            s
        } else {
            let mut s = match spec.shape {
                Some(ShapeSpec::Pedestrian { base, count, seed }) => pedestrian(base, count, seed),
                Some(ShapeSpec::Bungalows {
                    base,
                    gap,
                    count,
                    seed,
                }) => bungalows(base, gap, count, seed),
                None => return Err(CliError::Config("scene: no scatterers given".into())),
            };
            s.label = label;
            s
        };
        if let Some(sw) = spec.swerling {
            scene = assign_swerling3_amplitudes(&scene, sw.lo, sw.hi, sw.seed)
                .map_err(|e| CliError::Config(format!("scene.swerling: {e}")))?;
        }
        if scene.is_empty() {
            return Err(CliError::Config("scene: no scatterers".into()));
        }
        Ok(scene)
    }

    /// Summary numbers recorded in every manifest.
    pub fn derived(&self) -> serde_json::Value {
        serde_json::to_value(derived_params(&self.config.radar)).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    const MINIMAL: &str = r#"
[radar]
f0 = 77e9
bandwidth = 1e9
chirp_duration = 16e-6
sample_rate = 32e6
prt = 16e-6
num_chirps = 512
num_elev = 8

[motion]
velocity = [-1.0, 15.0, 2.0]

[[scene.points]]
range = 15.0
azimuth = 10.0
elevation = 5.0
"#;

    #[test]
    fn minimal_config_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = LoadedConfig::load(&write(dir.path(), "s.toml", MINIMAL)).unwrap();
        cfg.validate().unwrap();
        let plan = cfg.plan().unwrap();
        assert_eq!(plan.t_ind, 4);
        assert_eq!(plan.samples, 4);
        assert_eq!(plan.n_ex, 127);
        assert_eq!(cfg.sha256.len(), 64);
        assert_eq!(cfg.scene().unwrap().len(), 1);
        assert_eq!(cfg.config.imaging.method, Method::Dbf);
    }

    #[test]
    fn unknown_field_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let text = MINIMAL.replace("num_elev = 8", "num_elev = 8\nnum_azim = 2");
        let err = LoadedConfig::load(&write(dir.path(), "s.toml", &text)).unwrap_err();
        assert!(
            matches!(err, CliError::Config(ref m) if m.contains("num_azim")),
            "{err}"
        );
    }

    #[test]
    fn json_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let toml_cfg = LoadedConfig::load(&write(dir.path(), "s.toml", MINIMAL)).unwrap();
        let json = serde_json::to_string(&toml_cfg.config).unwrap();
        let json_cfg = LoadedConfig::load(&write(dir.path(), "s.json", &json)).unwrap();
        assert_eq!(json_cfg.config, toml_cfg.config);
    }

    #[test]
    fn field_paths_in_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            (
                MINIMAL.replace(
                    "velocity = [-1.0, 15.0, 2.0]",
                    "velocity = [0.0, 400.0, 0.0]",
                ),
                "motion.velocity[1]",
            ),
            (
                MINIMAL.replace("range = 15.0", "range = -1.0"),
                "scene.points[0].range",
            ),
            (
                format!("{MINIMAL}\n[snapshots]\nn_ex = 400\nsamples = 64\n"),
                "snapshots",
            ),
            (
                format!("{MINIMAL}\n[noise]\npower = 1.0\nsnr_db = 3.0\n"),
                "noise",
            ),
            (
                format!("{MINIMAL}\n[imaging]\nmethod = {{ kind = \"music\", sources = 0 }}\n"),
                "imaging.method.sources",
            ),
        ];
        for (text, field) in cases {
            let cfg = LoadedConfig::load(&write(dir.path(), "s.toml", &text)).unwrap();
            match cfg.validate() {
                Err(CliError::Config(m)) => assert!(m.starts_with(field), "{m}"),
                other => panic!("expected config error for {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn missing_scene_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let text = MINIMAL
            .split("[[scene.points]]")
            .next()
            .unwrap()
            .to_string()
            + "[scene]\n";
        let cfg = LoadedConfig::load(&write(dir.path(), "s.toml", &text)).unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(m)) if m.starts_with("scene")));
    }

    #[test]
    fn snapshot_count_parsing() {
        assert_eq!("max".parse::<SnapshotCount>().unwrap(), SnapshotCount::Max);
        assert_eq!(
            "12".parse::<SnapshotCount>().unwrap(),
            SnapshotCount::Count(12)
        );
        assert!("-1".parse::<SnapshotCount>().is_err());
        let s: SnapshotSpec = toml::from_str("n_ex = 5").unwrap();
        assert_eq!(s.n_ex, SnapshotCount::Count(5));
        let s: SnapshotSpec = toml::from_str("n_ex = \"max\"").unwrap();
        assert_eq!(s.n_ex, SnapshotCount::Max);
    }

    #[test]
    fn max_range_trims_grid() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!("{MINIMAL}\n[grid]\nmax_range = 20.0\n");
        let cfg = LoadedConfig::load(&write(dir.path(), "s.toml", &text)).unwrap();
        let g = cfg.grid().unwrap();
        assert!(g.range_m.last().copied().unwrap() <= 20.0);
        assert!(g.range_m.len() > 100);
    }
}
