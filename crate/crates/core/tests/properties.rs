use motionsnap_core::{
    build_plan, compute_snapshot_interval, confusion, form_tensor, image_contrast, range_fft,
    report, resample_uniform, sample_covariance, simulate_frame, stack, steering_vector, voxelise,
    ArrayLayout, ConfusionCounts, ContrastKind, CubeMeta, EgoMotion, ImagingGrid, PowerCube,
    RadarConfig, RawDataCube, Scatterer, Scene, SimMode, StackedMatrix, Window,
};
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, Array3};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn small_radar(num_elev: usize, chirps: usize) -> RadarConfig {
    let mut cfg = RadarConfig::automotive_77ghz(num_elev);
    cfg.sample_rate = 2e6;
    cfg.num_chirps = chirps;
    cfg
}

fn noise(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

fn scatterer() -> impl Strategy<Value = Scatterer> {
    (
        3.0..40.0f64,
        -70.0..70.0f64,
        -40.0..40.0f64,
        0.1..2.0f64,
        -3.0..3.0f64,
    )
        .prop_map(|(r, az, el, mag, ph)| {
            let s = Scatterer::at_angles(r, az, el);
            Scatterer::new(s.position, Complex64::from_polar(mag, ph))
        })
}

fn motion() -> impl Strategy<Value = EgoMotion> {
    (
        -2.0..2.0f64,
        prop_oneof![-25.0..-3.0f64, 3.0..25.0f64],
        -2.0..2.0f64,
    )
        .prop_map(|(x, y, z)| EgoMotion::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn superposition(
        a in prop::collection::vec(scatterer(), 1..4),
        b in prop::collection::vec(scatterer(), 1..4),
        m in motion(),
        geometric in any::<bool>(),
    ) {
        let cfg = small_radar(3, 16);
        let mode = if geometric { SimMode::Geometric } else { SimMode::LiteralEq1 };
        let sim = |s: Vec<Scatterer>| simulate_frame(&Scene::new("s", s), &cfg, &m, 0.0, 0, mode).unwrap().samples;
        let both = sim(a.iter().chain(&b).cloned().collect());
        let parts = sim(a) + sim(b);
        let scale = both.iter().chain(parts.iter()).map(|z| z.norm()).fold(0.0, f64::max);
        let err = (&both - &parts).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10 * scale);
    }

    #[test]
    fn far_field_modes_agree_over_one_interval(
        r in 60.0..400.0f64,
        az in -60.0..60.0f64,
        el in -30.0..30.0f64,
        vy in 5.0..20.0f64,
    ) {
        let cfg = small_radar(4, 64);
        let m = EgoMotion::new(0.0, vy, 0.0);
        let t_ind = compute_snapshot_interval(&cfg, &m).unwrap();
        let scene = Scene::new("p", vec![Scatterer::at_angles(r, az, el)]);
        let geo = simulate_frame(&scene, &cfg, &m, 0.0, 0, SimMode::Geometric).unwrap().samples;
        let lit = simulate_frame(&scene, &cfg, &m, 0.0, 0, SimMode::LiteralEq1).unwrap().samples;
        for q in 0..cfg.num_elev {
            let offset = (geo[[q, 0, 0]] * lit[[q, 0, 0]].conj()).arg();
            for l in 0..=t_ind {
                let diff = (geo[[q, l, 0]] * lit[[q, l, 0]].conj()).arg() - offset;
                let wrapped = (diff + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
                prop_assert!(wrapped.abs() < 1e-2, "q={} l={} diff={}", q, l, wrapped);
            }
        }
    }

    #[test]
    fn covariance_is_hermitian_psd(m in 1usize..10, ls in 1usize..16, loading in 0.0..0.5f64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(m, ls, |_, _| noise(&mut rng));
        let r = sample_covariance(&StackedMatrix { x, channels: m }, loading);
        let herm = (&r.r - r.r.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(herm <= 1e-10);
        let min = SymmetricEigen::new(r.r.clone()).eigenvalues.min();
        prop_assert!(min >= -1e-8 * r.trace());
    }

    #[test]
    fn steering_is_unit_modulus_rank_one(
        m in motion(),
        ne in 1usize..8,
        theta in -1.5..1.5f64,
        phi in -1.5..1.5f64,
        n_ex in 0usize..10,
    ) {
        let cfg = small_radar(ne, 256);
        let t = compute_snapshot_interval(&cfg, &m).unwrap();
        let plan = build_plan(&cfg, &m, 0, n_ex, t).unwrap();
        let sv = steering_vector(theta, phi, &plan, &m, &cfg);
        prop_assert!((sv.values[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        prop_assert!(sv.values.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        if plan.num_snapshots() > 1 && ne > 1 {
            let s = DMatrix::from_fn(plan.num_snapshots(), ne, |n, q| sv.values[n * ne + q]).singular_values();
            prop_assert!(s[1] <= 1e-10 * s[0]);
        }
    }

    #[test]
    fn parseval(channels in 1usize..4, chirps in 1usize..6, seed in any::<u64>()) {
        let cfg = small_radar(channels, chirps);
        let mut cube = RawDataCube::zeros(&cfg, &EgoMotion::new(0.0, 10.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        cube.samples.mapv_inplace(|_| noise(&mut rng));
        let spec = range_fft(&cube, Window::Rect);
        let e_in: f64 = cube.samples.iter().map(|z| z.norm_sqr()).sum();
        let e_out: f64 = spec.bins.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((e_in - e_out).abs() <= 1e-9 * e_in);
    }

    #[test]
    fn plan_invariants(m in motion(), chirps in 64usize..1200, l0 in 0usize..8, want in 0usize..400, az in 1usize..5) {
        let mut cfg = small_radar(2, chirps);
        if az > 1 {
            cfg.layout = ArrayLayout::Planar { azimuth: az };
        }
        let Ok(t) = compute_snapshot_interval(&cfg, &m) else { return Ok(()) };
        let Ok(plan) = build_plan(&cfg, &m, l0, want, t) else { return Ok(()) };
        prop_assert!(plan.t_ind >= 1);
        prop_assert!(plan.n_ex <= plan.n_max);
        prop_assert_eq!(plan.indices.len(), plan.n_ex + 1);
        for (n, l) in plan.indices.iter().enumerate() {
            prop_assert_eq!(*l, l0 + n * plan.t_ind);
            prop_assert!(l + plan.samples <= chirps);
        }
    }

    #[test]
    fn stack_unstack_is_a_bijection(ne in 1usize..6, n_ex in 0usize..6, ls in 1usize..5, seed in any::<u64>()) {
        let cfg = small_radar(ne, 256);
        let m = EgoMotion::new(0.0, 15.0, 0.0);
        let t = compute_snapshot_interval(&cfg, &m).unwrap();
        let plan = build_plan(&cfg, &m, 0, n_ex, ls).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let slice = Array2::from_shape_fn((ne, 256), |_| noise(&mut rng));
        let tensor = form_tensor(&slice, &plan, 0).unwrap();
        let stacked = stack(&tensor);
        prop_assert_eq!(stacked.rows(), (n_ex + 1) * ne);
        prop_assert_eq!(stacked.unstack(), tensor.z.clone());
        for n in 0..=n_ex {
            for q in 0..ne {
                prop_assert_eq!(stacked.x[(n * ne + q, ls - 1)], slice[[q, n * t + ls - 1]]);
            }
        }
    }

    #[test]
    fn confusion_metric_identities(cells in prop::collection::vec((any::<bool>(), any::<bool>()), 1..200)) {
        let n = cells.len();
        let det = Array3::from_shape_fn((n, 1, 1), |(i, _, _)| cells[i].0);
        let truth = Array3::from_shape_fn((n, 1, 1), |(i, _, _)| cells[i].1);
        let c = confusion(&det, &truth).unwrap();
        prop_assert_eq!(c.tp + c.fp + c.tn + c.fn_, n as u64);
        let r = report(&c);
        if let (Some(se), Some(sp), Some(auc)) = (r.sensitivity, r.specificity, r.auc) {
            prop_assert!((auc - (se + sp) / 2.0).abs() < 1e-12);
        }
        if let (Some(p), Some(se), Some(f)) = (r.precision, r.sensitivity, r.f_score) {
            let expect = if p + se > 0.0 { 2.0 * p * se / (p + se) } else { 0.0 };
            prop_assert!((f - expect).abs() < 1e-12);
        }
        for m in [r.accuracy, r.precision, r.sensitivity, r.specificity, r.auc, r.f_score].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&m));
        }
        let swapped = report(&ConfusionCounts { tp: c.tp, fp: c.fn_, tn: c.tn, fn_: c.fp });
        prop_assert_eq!(swapped.accuracy, r.accuracy);
    }

    #[test]
    fn contrast_is_scale_invariant(vals in prop::collection::vec(0.01..10.0f64, 4..64), k in 1e-3..1e3f64) {
        let n = vals.len();
        let a = Array2::from_shape_vec((1, n), vals).unwrap();
        for kind in [ContrastKind::Amplitude, ContrastKind::Power] {
            let c0 = image_contrast(&a, kind).unwrap();
            let c1 = image_contrast(&(&a * k), kind).unwrap();
            prop_assert!(c0 >= 0.0);
            prop_assert!((c0 - c1).abs() <= 1e-9 * c0.max(1.0));
        }
    }

    #[test]
    fn voxelise_is_monotone_in_threshold(vals in prop::collection::vec(0.0..1e3f64, 8..64), lo in -10.0..20.0f64, step in 0.0..20.0f64) {
        let n = vals.len();
        prop_assume!(vals.iter().any(|v| *v > 0.0));
        let grid = ImagingGrid::new(vec![0.0], vec![0.0], (0..n).map(|i| i as f64).collect()).unwrap();
        let cube = PowerCube {
            values: Array3::from_shape_vec((n, 1, 1), vals).unwrap(),
            grid,
            meta: CubeMeta::default(),
        };
        let loose = voxelise(&cube, lo).unwrap();
        let tight = voxelise(&cube, lo + step).unwrap();
        prop_assert!(tight.iter().zip(loose.iter()).all(|(t, l)| !*t || *l));
    }

    #[test]
    fn resample_keeps_count_and_bounds(count in 1usize..600, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..300)
            .map(|_| Scatterer::unit([1.0 + rng.random::<f64>(), rng.random::<f64>(), 2.0 * rng.random::<f64>()]))
            .collect();
        let scene = Scene::new("c", pts);
        let (lo, hi) = scene.bounds().unwrap();
        let out = resample_uniform(&scene, count, seed).unwrap();
        prop_assert_eq!(out.len(), count);
        for s in &out.scatterers {
            for d in 0..3 {
                prop_assert!(s.position[d] >= lo[d] && s.position[d] <= hi[d]);
            }
        }
    }
}

/// Pearson statistic of `points` binned on an 8×8×8 grid over the unit cube.
fn chi_square_8(points: &Scene) -> f64 {
    let mut counts = [0usize; 512];
    for s in &points.scatterers {
        let idx = |v: f64| ((v * 8.0) as usize).min(7);
        let [x, y, z] = s.position;
        counts[idx(x) * 64 + idx(y) * 8 + idx(z)] += 1;
    }
    let expected = points.len() as f64 / 512.0;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}

#[test]
fn resampling_flattens_a_skewed_cloud() {
    // density rises linearly along x, about 3:1 from one face to the other
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let pts: Vec<Scatterer> = (0..40_000)
        .map(|_| {
            let x = ((1.0 + 8.0 * rng.random::<f64>()).sqrt() - 1.0) / 2.0;
            Scatterer::unit([x, rng.random(), rng.random()])
        })
        .collect();
    let mut cloud = Scene::new("cube", pts);
    // pin the bounding box to the unit cube
    cloud.scatterers.push(Scatterer::unit([0.0, 0.0, 0.0]));
    cloud.scatterers.push(Scatterer::unit([1.0, 1.0, 1.0]));

    let limit = ChiSquared::new(511.0).unwrap().inverse_cdf(0.999);
    let raw = chi_square_8(&Scene::new("raw", cloud.scatterers[..1000].to_vec()));
    assert!(
        raw > limit,
        "skewed input should fail uniformity: {raw:.1} vs {limit:.1}"
    );
    let a = resample_uniform(&cloud, 1000, 1).unwrap();
    let b = resample_uniform(&cloud, 1000, 2).unwrap();
    assert_ne!(a, b);
    for s in [&a, &b] {
        let stat = chi_square_8(s);
        assert!(stat < limit, "chi-square {stat:.1} over limit {limit:.1}");
    }
}
