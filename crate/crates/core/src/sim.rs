//! De-chirped raw data synthesis for a point-scatterer scene seen by the
//! moving virtual array.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use ndarray::{Array3, Axis};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{derived_params, EgoMotion, RadarConfig};
use crate::error::{Error, Result};
use crate::scene::{cartesian_to_polar, Scene};
use crate::{PHASE_SIGN, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    /// Exact transmitter and receiver path lengths per chirp, stop-and-go.
    #[default]
    Geometric,
    /// Far-field linearised phases: fixed per-scatterer angles and radial
    /// velocity, element phases from the plane-wave projection.
    LiteralEq1,
}

/// Complex samples indexed `[channel][chirp][fast-time sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataCube {
    pub samples: Array3<Complex64>,
    pub cfg: RadarConfig,
    pub motion: EgoMotion,
}

impl RawDataCube {
    pub fn zeros(cfg: &RadarConfig, motion: &EgoMotion) -> Self {
        let shape = (cfg.num_channels(), cfg.num_chirps, cfg.samples_per_chirp());
        Self {
            samples: Array3::zeros(shape),
            cfg: cfg.clone(),
            motion: *motion,
        }
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    fn check_dims(&self) -> Result<()> {
        let expect = (
            self.cfg.num_channels(),
            self.cfg.num_chirps,
            self.cfg.samples_per_chirp(),
        );
        if self.samples.dim() != expect {
            return Err(Error::DimensionMismatch {
                expected: format!("{expect:?}"),
                actual: format!("{:?}", self.samples.dim()),
            });
        }
        Ok(())
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Adds `amp·exp(PHASE_SIGN·j·2π·(cycles + step·b))` for `b = 0..row.len()`.
fn accumulate_tone(row: &mut [Complex64], amp: Complex64, cycles: f64, step: f64) {
    let c = cycles - cycles.floor();
    let mut acc = amp * Complex64::from_polar(1.0, PHASE_SIGN * TAU * c);
    let s = step - step.floor();
    let rot = Complex64::from_polar(1.0, PHASE_SIGN * TAU * s);
    for v in row.iter_mut() {
        *v += acc;
        acc *= rot;
    }
}

struct Target {
    amp: Complex64,
    pos: [f64; 3],
    // literal-mode terms
    two_range: f64,
    radial_velocity: f64,
    az_proj: f64,
    el_proj: f64,
}

/// Synthesises one frame.
///
/// The contribution of a scatterer to channel `c`, chirp `l`, sample `b` is
/// `α·exp(PHASE_SIGN·j·2π·(f0·τ + μ·τ·b/fs))` with `τ` the round-trip delay
/// from the transmitter to the scatterer and back to receiver `c`. The
/// platform is frozen during a chirp and sits at `l·Tp·v` at its start.
/// With `noise_power > 0`, circular Gaussian noise of that power is added
/// to every sample.
pub fn simulate_frame(
    scene: &Scene,
    cfg: &RadarConfig,
    motion: &EgoMotion,
    noise_power: f64,
    seed: u64,
    mode: SimMode,
) -> Result<RawDataCube> {
    cfg.validate()?;
    if scene.is_empty() {
        return Err(Error::EmptyScene);
    }
    if !(noise_power >= 0.0 && noise_power.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise power {noise_power}")));
    }
    let dp = derived_params(cfg);
    let d = cfg.spacing();
    let lambda = dp.lambda;
    let offsets: Vec<[f64; 3]> = cfg
        .elements()
        .iter()
        .map(|e| [0.0, e.az as f64 * d, e.el as f64 * d])
        .collect();

    let mut targets = Vec::with_capacity(scene.len());
    for (index, s) in scene.scatterers.iter().enumerate() {
        let (r, theta, phi) = cartesian_to_polar(s.position);
        if !(r > 1e-9) {
            return Err(Error::SingularGeometry { index });
        }
        let amp = if cfg.range_attenuation {
            s.amplitude / (r * r)
        } else {
            s.amplitude
        };
        let [vx, vy, vz] = motion.velocity;
        targets.push(Target {
            amp,
            pos: s.position,
            two_range: 2.0 * r,
            radial_velocity: vx * theta.cos() * phi.cos()
                + vy * theta.sin() * phi.cos()
                + vz * phi.sin(),
            az_proj: theta.sin() * phi.cos(),
            el_proj: phi.sin(),
        });
    }

    let mut cube = RawDataCube::zeros(cfg, motion);
    let n_chirps = cfg.num_chirps;
    let fast_step = dp.mu / (cfg.sample_rate * SPEED_OF_LIGHT);
    cube.samples
        .outer_iter_mut()
        .into_par_iter()
        .enumerate()
        .for_each(|(c, mut chan)| {
            let off = offsets[c];
            for l in 0..n_chirps {
                let t = l as f64 * cfg.prt;
                let tx = [
                    motion.velocity[0] * t,
                    motion.velocity[1] * t,
                    motion.velocity[2] * t,
                ];
                let rx = [tx[0] + off[0], tx[1] + off[1], tx[2] + off[2]];
                let mut row = chan.index_axis_mut(Axis(0), l);
                let row = row.as_slice_mut().expect("contiguous row");
                for tg in &targets {
                    let (path, fast_path) = match mode {
                        SimMode::Geometric => {
                            let p = norm(sub(tg.pos, tx)) + norm(sub(tg.pos, rx));
                            (p, p)
                        }
                        SimMode::LiteralEq1 => {
                            let p = tg.two_range
                                - 2.0 * tg.radial_velocity * t
                                - (off[1] * tg.az_proj + off[2] * tg.el_proj);
                            (p, tg.two_range)
                        }
                    };
                    accumulate_tone(row, tg.amp, path / lambda, fast_path * fast_step);
                }
            }
        });

    if noise_power > 0.0 {
        add_noise_power(&mut cube.samples, noise_power, seed);
    }
    Ok(cube)
}

/// One counter-based stream per `(channel, chirp)` row so the noise does not
/// depend on how rows are scheduled.
pub(crate) fn add_noise_power(samples: &mut Array3<Complex64>, power: f64, seed: u64) {
    let sigma = (power / 2.0).sqrt();
    let n_chirps = samples.dim().1;
    samples
        .outer_iter_mut()
        .into_par_iter()
        .enumerate()
        .for_each(|(c, mut chan)| {
            for (l, mut row) in chan.outer_iter_mut().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((c * n_chirps + l) as u64);
                for v in row.iter_mut() {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    *v += Complex64::new(sigma * re, sigma * im);
                }
            }
        });
}

/// Adds noise so that mean signal power over noise power is `10^(snr_db/10)`.
pub fn add_noise(cube: &RawDataCube, snr_db: f64, seed: u64) -> Result<RawDataCube> {
    cube.check_dims()?;
    if cube
        .samples
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::InvalidArgument(
            "cube contains non-finite samples".into(),
        ));
    }
    let signal = cube.mean_power();
    if signal == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    let mut out = cube.clone();
    let noise = signal / 10f64.powf(snr_db / 10.0);
    if noise > 0.0 {
        add_noise_power(&mut out.samples, noise, seed);
    }
    Ok(out)
}

const RAW_MAGIC: &[u8; 12] = b"MSNAP-RAWCUB";
const RAW_VERSION: u32 = 1;

/// Writes the cube as a 16-byte header (12-byte magic, u32 version), three
/// u32 dimensions and interleaved f32 `(re, im)` pairs, all little-endian,
/// in `[channel][chirp][sample]` order.
pub fn write_raw_cube<W: Write>(cube: &RawDataCube, mut w: W) -> Result<()> {
    w.write_all(RAW_MAGIC)?;
    w.write_all(&RAW_VERSION.to_le_bytes())?;
    let (a, b, c) = cube.samples.dim();
    for dim in [a, b, c] {
        w.write_all(&(dim as u32).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(cube.samples.len() * 8);
    for z in cube.samples.iter() {
        buf.extend_from_slice(&(z.re as f32).to_le_bytes());
        buf.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a cube written by [`write_raw_cube`]. The dimensions must match
/// `cfg`.
pub fn read_raw_cube<R: Read>(
    mut r: R,
    cfg: &RadarConfig,
    motion: &EgoMotion,
) -> Result<RawDataCube> {
    let mut head = [0u8; 28];
    r.read_exact(&mut head)?;
    if &head[..12] != RAW_MAGIC {
        return Err(Error::Format("not a raw data cube".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
    let version = u32_at(12);
    if version != RAW_VERSION {
        return Err(Error::Format(format!(
            "unsupported raw cube version {version}"
        )));
    }
    let dims = (
        u32_at(16) as usize,
        u32_at(20) as usize,
        u32_at(24) as usize,
    );
    let expect = (cfg.num_channels(), cfg.num_chirps, cfg.samples_per_chirp());
    if dims != expect {
        return Err(Error::DimensionMismatch {
            expected: format!("{expect:?}"),
            actual: format!("{dims:?}"),
        });
    }
    let n = dims.0 * dims.1 * dims.2;
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    let data: Vec<Complex64> = buf
        .chunks_exact(8)
        .map(|ch| {
            let re = f32::from_le_bytes(ch[..4].try_into().unwrap());
            let im = f32::from_le_bytes(ch[4..].try_into().unwrap());
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    let samples = Array3::from_shape_vec(dims, data).map_err(|e| Error::Format(e.to_string()))?;
    Ok(RawDataCube {
        samples,
        cfg: cfg.clone(),
        motion: *motion,
    })
}
