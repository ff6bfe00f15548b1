//! Radar waveform, array and ego-motion parameters plus the quantities
//! derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Virtual array layout in units of the element spacing `d`.
///
/// Element `(az, el)` sits at `(0, az·d, el·d)` relative to the transmitter,
/// i.e. `az` counts along the direction of travel and `el` along elevation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ArrayLayout {
    /// `num_elev` elements stacked vertically, the side-looking 1D array.
    #[default]
    Elevation,
    /// `azimuth` elements along travel at el = 0 plus `num_elev` elements
    /// above them at az = 0.
    LShaped { azimuth: usize },
    /// Full `azimuth × num_elev` grid, channel index `p·num_elev + q`.
    Planar { azimuth: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Element {
    pub az: i32,
    pub el: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    /// Chirp start frequency, Hz.
    pub f0: f64,
    /// Sweep bandwidth, Hz.
    pub bandwidth: f64,
    /// Chirp duration, s.
    pub chirp_duration: f64,
    /// ADC rate, samples/s.
    pub sample_rate: f64,
    /// Chirp repetition interval, s.
    pub prt: f64,
    /// Chirps per frame.
    pub num_chirps: usize,
    /// Virtual elements along elevation.
    pub num_elev: usize,
    /// Element spacing, m. Defaults to half the carrier wavelength.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elem_spacing: Option<f64>,
    /// Treat the ADC stream as complex baseband (full FFT span usable)
    /// instead of real sampling (only the positive half).
    #[serde(default)]
    pub complex_baseband: bool,
    /// Scale scatterer amplitudes by 1/R².
    #[serde(default)]
    pub range_attenuation: bool,
    #[serde(default)]
    pub layout: ArrayLayout,
}

impl RadarConfig {
    /// Simulation parameters used for the point-target and extended-target
    /// studies: 77 GHz, 1 GHz sweep in 16 µs, 32 Msps, 512 chirps.
    pub fn automotive_77ghz(num_elev: usize) -> Self {
        Self {
            f0: 77e9,
            bandwidth: 1e9,
            chirp_duration: 16e-6,
            sample_rate: 32e6,
            prt: 16e-6,
            num_chirps: 512,
            num_elev,
            elem_spacing: None,
            complex_baseband: false,
            range_attenuation: false,
            layout: ArrayLayout::Elevation,
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f0
    }

    pub fn spacing(&self) -> f64 {
        self.elem_spacing.unwrap_or_else(|| self.wavelength() / 2.0)
    }

    pub fn samples_per_chirp(&self) -> usize {
        (self.chirp_duration * self.sample_rate).round() as usize
    }

    pub fn chirp_slope(&self) -> f64 {
        self.bandwidth / self.chirp_duration
    }

    /// Virtual elements in channel order.
    pub fn elements(&self) -> Vec<Element> {
        let ne = self.num_elev as i32;
        match self.layout {
            ArrayLayout::Elevation => (0..ne).map(|el| Element { az: 0, el }).collect(),
            ArrayLayout::LShaped { azimuth } => (0..azimuth as i32)
                .map(|az| Element { az, el: 0 })
                .chain((1..=ne).map(|el| Element { az: 0, el }))
                .collect(),
            ArrayLayout::Planar { azimuth } => (0..azimuth as i32)
                .flat_map(|az| (0..ne).map(move |el| Element { az, el }))
                .collect(),
        }
    }

    pub fn num_channels(&self) -> usize {
        match self.layout {
            ArrayLayout::Elevation => self.num_elev,
            ArrayLayout::LShaped { azimuth } => azimuth + self.num_elev,
            ArrayLayout::Planar { azimuth } => azimuth * self.num_elev,
        }
    }

    /// Number of distinct azimuth positions in the physical array. Each
    /// motion-enhanced snapshot advances the array by this many elements.
    pub fn azimuth_extent(&self) -> usize {
        match self.layout {
            ArrayLayout::Elevation => 1,
            ArrayLayout::LShaped { azimuth } | ArrayLayout::Planar { azimuth } => azimuth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("f0", self.f0),
            ("bandwidth", self.bandwidth),
            ("chirp_duration", self.chirp_duration),
            ("sample_rate", self.sample_rate),
            ("prt", self.prt),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "radar.{name} must be positive, got {v}"
                )));
            }
        }
        if let Some(d) = self.elem_spacing {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "radar.elem_spacing must be positive, got {d}"
                )));
            }
        }
        if self.prt < self.chirp_duration {
            return Err(Error::InvalidConfig(format!(
                "radar.prt ({}) must be at least radar.chirp_duration ({})",
                self.prt, self.chirp_duration
            )));
        }
        if self.num_chirps == 0 {
            return Err(Error::InvalidConfig(
                "radar.num_chirps must be positive".into(),
            ));
        }
        if self.num_elev == 0 {
            return Err(Error::InvalidConfig(
                "radar.num_elev must be positive".into(),
            ));
        }
        if let ArrayLayout::LShaped { azimuth } | ArrayLayout::Planar { azimuth } = self.layout {
            if azimuth == 0 {
                return Err(Error::InvalidConfig(
                    "radar.layout.azimuth must be positive".into(),
                ));
            }
        }
        let bd = self.samples_per_chirp();
        if bd < 8 {
            return Err(Error::InvalidConfig(format!(
                "samples per chirp round(Tc·fs) = {bd}, need at least 8"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoMotion {
    /// Platform velocity `(vx, vy, vz)`, m/s, constant over the frame.
    pub velocity: [f64; 3],
}

impl EgoMotion {
    pub fn new(vx: f64, vy: f64, vz: f64) -> Self {
        Self {
            velocity: [vx, vy, vz],
        }
    }

    pub fn vx(&self) -> f64 {
        self.velocity[0]
    }

    pub fn vy(&self) -> f64 {
        self.velocity[1]
    }

    pub fn vz(&self) -> f64 {
        self.velocity[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Chirp slope, Hz/s.
    pub mu: f64,
    /// Carrier wavelength at `f0`, m.
    pub lambda: f64,
    /// Samples per chirp.
    pub bd: usize,
    /// Range bin width, m.
    pub range_res: f64,
    /// Maximum unambiguous range for the configured sampling convention, m.
    pub unambiguous_range: f64,
    /// Number of usable range bins.
    pub num_range_bins: usize,
}

pub fn derived_params(cfg: &RadarConfig) -> DerivedParams {
    let mu = cfg.chirp_slope();
    let bd = cfg.samples_per_chirp();
    let span = if cfg.complex_baseband { 2.0 } else { 4.0 };
    DerivedParams {
        mu,
        lambda: cfg.wavelength(),
        bd,
        range_res: SPEED_OF_LIGHT / (2.0 * cfg.bandwidth),
        unambiguous_range: cfg.sample_rate * SPEED_OF_LIGHT / (span * mu),
        num_range_bins: if cfg.complex_baseband { bd } else { bd / 2 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeedClass {
    Ok,
    TooSlow,
    TooFast,
}

/// Chirps the platform needs to advance by one azimuth extent of the array:
/// `A·d / (2·|vy|·Tp)`, unrounded. Infinite at `vy = 0`. Values within a
/// few ulps of an integer snap to it, so a speed computed as `A·d/(2·k·Tp)`
/// yields exactly `k`.
pub(crate) fn coherence_ratio(cfg: &RadarConfig, motion: &EgoMotion) -> f64 {
    let a = cfg.azimuth_extent() as f64;
    let ratio = a * cfg.spacing() / (2.0 * motion.vy().abs() * cfg.prt);
    let near = ratio.round();
    if (ratio - near).abs() <= 1e-12 * near.max(1.0) {
        near
    } else {
        ratio
    }
}

/// Admissible forward-speed interval `[A·d/(2·Ld·Tp), A·d/(2·Tp)]`.
pub fn speed_bounds(cfg: &RadarConfig) -> (f64, f64) {
    let a = cfg.azimuth_extent() as f64;
    let upper = a * cfg.spacing() / (2.0 * cfg.prt);
    (upper / cfg.num_chirps as f64, upper)
}

/// Classifies `|vy|` against [`speed_bounds`]. Evaluated through the same
/// ratio as [`crate::compute_snapshot_interval`] so the two always agree.
pub fn validate_speed(cfg: &RadarConfig, motion: &EgoMotion) -> SpeedClass {
    let ratio = coherence_ratio(cfg, motion);
    if ratio < 1.0 {
        SpeedClass::TooFast
    } else if ratio > cfg.num_chirps as f64 {
        SpeedClass::TooSlow
    } else {
        SpeedClass::Ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl AxisSpec {
    pub fn new(min: f64, max: f64, step: f64) -> Self {
        Self { min, max, step }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || self.max < self.min {
            return Err(Error::InvalidConfig(format!("bad axis {self:?}")));
        }
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| self.min + i as f64 * self.step).collect())
    }
}

/// Beamscan grid. Angles are in degrees, ranges in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagingGrid {
    pub azimuth_deg: Vec<f64>,
    pub elevation_deg: Vec<f64>,
    pub range_m: Vec<f64>,
}

impl ImagingGrid {
    pub fn new(azimuth_deg: Vec<f64>, elevation_deg: Vec<f64>, range_m: Vec<f64>) -> Result<Self> {
        for (name, axis) in [("azimuth", &azimuth_deg), ("elevation", &elevation_deg)] {
            if axis.iter().any(|a| !(-90.0..=90.0).contains(a)) {
                return Err(Error::InvalidConfig(format!(
                    "{name} axis leaves [-90°, 90°]"
                )));
            }
        }
        for (name, axis) in [
            ("azimuth", &azimuth_deg),
            ("elevation", &elevation_deg),
            ("range", &range_m),
        ] {
            if axis.is_empty() {
                return Err(Error::InvalidConfig(format!("{name} axis is empty")));
            }
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidConfig(format!(
                    "{name} axis is not strictly increasing"
                )));
            }
        }
        Ok(Self {
            azimuth_deg,
            elevation_deg,
            range_m,
        })
    }

    /// Angle axes from specs, range axis covering every usable bin of `cfg`.
    pub fn for_radar(cfg: &RadarConfig, azimuth: AxisSpec, elevation: AxisSpec) -> Result<Self> {
        let dp = derived_params(cfg);
        let range = (0..dp.num_range_bins)
            .map(|r| r as f64 * dp.range_res)
            .collect();
        Self::new(azimuth.values()?, elevation.values()?, range)
    }

    /// 1° grid over the full hemisphere.
    pub fn hemisphere(cfg: &RadarConfig) -> Result<Self> {
        let full = AxisSpec::new(-90.0, 90.0, 1.0);
        Self::for_radar(cfg, full, full)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (
            self.range_m.len(),
            self.azimuth_deg.len(),
            self.elevation_deg.len(),
        )
    }

    /// Index of the axis entry nearest to `value`.
    pub fn nearest(axis: &[f64], value: f64) -> usize {
        let mut best = 0;
        for (i, a) in axis.iter().enumerate() {
            if (a - value).abs() < (axis[best] - value).abs() {
                best = i;
            }
        }
        best
    }
}
