//! Fixtures shared by the benchmarks.

use motionsnap_core::{
    add_noise, build_plan, detect_range_bins, prepare_inputs, range_fft, simulate_frame, AxisSpec,
    BinInput, EgoMotion, ImagingGrid, RadarConfig, RawDataCube, Scatterer, Scene, SimMode,
    SnapshotPlan, Window,
};

/// Thirteen point targets on a triangle at 15 m, rows of 5, 4, 3 and 1.
pub fn triangle_scene() -> Scene {
    let rows: [(f64, &[f64]); 4] = [
        (-20.0, &[-40.0, -20.0, 0.0, 20.0, 40.0]),
        (-5.0, &[-30.0, -10.0, 10.0, 30.0]),
        (10.0, &[-20.0, 0.0, 20.0]),
        (25.0, &[0.0]),
    ];
    let pts = rows
        .iter()
        .flat_map(|(el, azs)| {
            azs.iter()
                .map(move |az| Scatterer::at_angles(15.0, *az, *el))
        })
        .collect();
    Scene::new("triangle", pts)
}

pub struct Fixture {
    pub cfg: RadarConfig,
    pub motion: EgoMotion,
    pub cube: RawDataCube,
    pub plan: SnapshotPlan,
    pub grid: ImagingGrid,
}

impl Fixture {
    /// Noisy frame from `num_elev` elements at 15 m/s with `n_ex` extra
    /// snapshots, on a coarse grid out to 20 m.
    pub fn new(num_elev: usize, n_ex: usize) -> Self {
        let cfg = RadarConfig::automotive_77ghz(num_elev);
        let motion = EgoMotion::new(-1.0, 15.0, 2.0);
        let clean = simulate_frame(&triangle_scene(), &cfg, &motion, 0.0, 0, SimMode::Geometric)
            .expect("valid scene");
        let cube = add_noise(&clean, 10.0, 1).expect("signal present");
        let plan = build_plan(&cfg, &motion, 0, n_ex, 4).expect("plan fits");
        let mut grid = ImagingGrid::for_radar(
            &cfg,
            AxisSpec::new(-50.0, 50.0, 2.0),
            AxisSpec::new(-30.0, 30.0, 2.0),
        )
        .expect("valid axes");
        let keep = grid.range_m.iter().take_while(|r| **r <= 20.0).count();
        grid.range_m.truncate(keep);
        Self {
            cfg,
            motion,
            cube,
            plan,
            grid,
        }
    }

    pub fn inputs(&self) -> Vec<BinInput> {
        let spec = range_fft(&self.cube, Window::Hann);
        let mut det = detect_range_bins(&spec, 20.0);
        det.bins.retain(|b| *b < self.grid.range_m.len());
        prepare_inputs(&spec, &det, &self.plan).expect("bins in range")
    }
}
