//! Motion-compensated steering vectors for the stacked snapshot aperture.
//!
//! Snapshot `n` starts `t_n = (l_n − l_0)·Tp` after the reference. For a
//! far-field direction `u` the two-way path shrinks by `2·u·v·t_n`, which in
//! the ideal case equals a shift of `n·A` azimuth elements. The residual from
//! rounding `T_ind` down and any cross-track or vertical velocity are folded
//! into the per-snapshot term `w_er`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::config::{EgoMotion, Element, RadarConfig};
use crate::snapshot::SnapshotPlan;
use crate::PHASE_SIGN;

/// Phase correction for snapshot `n` in cycles: the rounding term `w_ea`
/// plus the off-axis velocity term `w_ev`.
pub fn compensation_phase(
    plan: &SnapshotPlan,
    motion: &EgoMotion,
    theta: f64,
    phi: f64,
    n: usize,
    lambda: f64,
) -> f64 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let w_ea = -2.0 * motion.vy() * plan.residual[n] * st * cp / lambda;
    let w_ev = 2.0 * plan.elapsed(n) * (motion.vx() * ct * cp + motion.vz() * sp) / lambda;
    w_ea + w_ev
}

/// `a_θ ⊗ a_φ`, entry `n·C + c` for snapshot `n` and channel `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub values: DVector<Complex64>,
    pub theta: f64,
    pub phi: f64,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `w_er[n][m]` for a list of grid angles, in cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompensationTable {
    pub angles: Vec<(f64, f64)>,
    pub w_er: Vec<Vec<f64>>,
}

/// Everything a scan needs to evaluate steering vectors at arbitrary angles.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringContext {
    pub plan: SnapshotPlan,
    pub motion: EgoMotion,
    pub lambda: f64,
    pub spacing: f64,
    pub elements: Vec<Element>,
    pub compensate: bool,
}

impl SteeringContext {
    pub fn new(cfg: &RadarConfig, motion: &EgoMotion, plan: &SnapshotPlan) -> Self {
        Self {
            plan: plan.clone(),
            motion: *motion,
            lambda: cfg.wavelength(),
            spacing: cfg.spacing(),
            elements: cfg.elements(),
            compensate: true,
        }
    }

    pub fn with_compensation(mut self, on: bool) -> Self {
        self.compensate = on;
        self
    }

    pub fn num_snapshots(&self) -> usize {
        self.plan.num_snapshots()
    }

    pub fn len(&self) -> usize {
        self.num_snapshots() * self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Azimuth phase `ω_a(n)` of every snapshot, cycles.
    pub fn snapshot_phases(&self, theta: f64, phi: f64) -> Vec<f64> {
        let u_y = theta.sin() * phi.cos();
        let shift =
            self.plan.direction * self.plan.stride as f64 * self.spacing * u_y / self.lambda;
        (0..self.num_snapshots())
            .map(|n| {
                let w_er = if self.compensate {
                    compensation_phase(&self.plan, &self.motion, theta, phi, n, self.lambda)
                } else {
                    0.0
                };
                n as f64 * shift + w_er
            })
            .collect()
    }

    /// Physical element phase `ω(c)` of every channel, cycles.
    pub fn element_phases(&self, theta: f64, phi: f64) -> Vec<f64> {
        let u_y = theta.sin() * phi.cos();
        let u_z = phi.sin();
        self.elements
            .iter()
            .map(|e| self.spacing * (e.az as f64 * u_y + e.el as f64 * u_z) / self.lambda)
            .collect()
    }

    /// Writes the steering vector for `(θ, φ)` into `out`.
    pub fn steer_into(&self, theta: f64, phi: f64, out: &mut [Complex64]) {
        let a = self.snapshot_phases(theta, phi);
        let e: Vec<Complex64> = self
            .element_phases(theta, phi)
            .into_iter()
            .map(cis)
            .collect();
        let nc = e.len();
        assert_eq!(out.len(), a.len() * nc);
        for (n, wa) in a.into_iter().enumerate() {
            let an = cis(wa);
            for (c, ec) in e.iter().enumerate() {
                out[n * nc + c] = an * ec;
            }
        }
    }

    pub fn steering(&self, theta: f64, phi: f64) -> SteeringVector {
        let mut v = DVector::zeros(self.len());
        self.steer_into(theta, phi, v.as_mut_slice());
        SteeringVector {
            values: v,
            theta,
            phi,
        }
    }

    pub fn compensation_table(&self, angles: &[(f64, f64)]) -> CompensationTable {
        let w_er = (0..self.num_snapshots())
            .map(|n| {
                angles
                    .iter()
                    .map(|&(t, p)| {
                        if self.compensate {
                            compensation_phase(&self.plan, &self.motion, t, p, n, self.lambda)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        CompensationTable {
            angles: angles.to_vec(),
            w_er,
        }
    }

    /// Steering vector for grid angle `m` with the compensation read from a
    /// precomputed table.
    pub fn steering_from_table(&self, table: &CompensationTable, m: usize) -> SteeringVector {
        let (theta, phi) = table.angles[m];
        let u_y = theta.sin() * phi.cos();
        let shift =
            self.plan.direction * self.plan.stride as f64 * self.spacing * u_y / self.lambda;
        let e = self.element_phases(theta, phi);
        let nc = e.len();
        let mut v = DVector::zeros(self.len());
        for n in 0..self.num_snapshots() {
            let an = cis(n as f64 * shift + table.w_er[n][m]);
            for (c, wc) in e.iter().enumerate() {
                v[n * nc + c] = an * cis(*wc);
            }
        }
        SteeringVector {
            values: v,
            theta,
            phi,
        }
    }
}

/// `exp(−PHASE_SIGN·j·2π·ω)` for a phase `ω` in cycles.
fn cis(omega: f64) -> Complex64 {
    Complex64::from_polar(1.0, -PHASE_SIGN * TAU * omega)
}

pub fn steering_vector(
    theta: f64,
    phi: f64,
    plan: &SnapshotPlan,
    motion: &EgoMotion,
    cfg: &RadarConfig,
) -> SteeringVector {
    SteeringContext::new(cfg, motion, plan).steering(theta, phi)
}

/// Unit-norm DBF weight `α / √(α^H α)`.
pub fn dbf_weight(sv: &SteeringVector) -> DVector<Complex64> {
    let norm = sv.values.norm();
    sv.values.map(|z| z / norm)
}
