//! Motion-enhanced snapshot imaging for side-looking FMCW MIMO radar.
//!
//! A vertical (elevation) virtual array mounted on a moving platform samples
//! the scene at positions that advance along the direction of travel. Picking
//! slow-time windows whose platform displacement lands the array on the next
//! coherent azimuth position turns the 1D elevation array into a 2D
//! azimuth-elevation aperture. This crate simulates the de-chirped data,
//! forms those snapshots, builds the motion-compensated steering vectors and
//! runs the 3D beamscan, then scores the images against ground truth.
//!
//! Processing chain:
//!
//! ```text
//! Scene ──simulate_frame──▶ RawDataCube ──range_fft──▶ RangeSpectrum
//!                                                         │ detect / extract_slice
//!                                                         ▼
//!  PowerCube ◀──scan── StackedMatrix ◀──stack── SnapshotTensor ◀──form_tensor
//!      │
//!      └──▶ metrics (voxelisation, contrast, dynamic range)
//! ```
//!
//! Frame convention: X is cross-forward (radar boresight), Y is the direction
//! of travel and Z is elevation. A direction with azimuth `θ` and elevation
//! `φ` has unit vector `(cosθ cosφ, sinθ cosφ, sinφ)`.

// `!(x > 0.0)` is how NaN gets rejected alongside non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod export;
pub mod imaging;
pub mod metrics;
pub mod range;
pub mod scene;
pub mod sim;
pub mod snapshot;
pub mod steering;

pub use config::{
    derived_params, speed_bounds, validate_speed, ArrayLayout, AxisSpec, DerivedParams, EgoMotion,
    Element, ImagingGrid, RadarConfig, SpeedClass,
};
pub use error::{Error, Result};
pub use imaging::{
    dbf_power, image_frame, measure_snr, prepare_inputs, project_to_cartesian, sample_covariance,
    scan, BinInput, CartesianVolume, CovarianceMatrix, CubeMeta, Interpolation, Method,
    NoiseRegion, PowerCube,
};
pub use metrics::{
    confusion, contrast_per_plane, dynamic_range_ratio, image_contrast, plane_contrast, report,
    truth_occupancy, voxelise, ConfusionCounts, ContrastKind, MetricsReport, Plane, PlaneContrast,
};
pub use range::{
    detect_range_bins, extract_slice, range_fft, DetectionList, RangeSpectrum, Window,
};
pub use scene::{
    assign_swerling3_amplitudes, load_point_cloud, resample_uniform, CloudFormat, Scatterer, Scene,
};
pub use sim::{add_noise, simulate_frame, RawDataCube, SimMode};
pub use snapshot::{
    build_plan, compute_snapshot_interval, form_tensor, max_feasible_snapshots, stack,
    SnapshotPlan, SnapshotTensor, StackedMatrix,
};
pub use steering::{
    compensation_phase, dbf_weight, steering_vector, CompensationTable, SteeringContext,
    SteeringVector,
};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Sign of the propagation phase in the de-chirped signal model.
///
/// The simulator writes every path-length term as `exp(PHASE_SIGN·j·2π·f·τ)`
/// and the steering vectors use `exp(-PHASE_SIGN·j·2π·ω)` with `ω` the
/// path-length advance in wavelengths, so the two can never disagree.
pub const PHASE_SIGN: f64 = 1.0;
