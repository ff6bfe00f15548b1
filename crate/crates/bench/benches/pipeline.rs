use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use motionsnap_bench::{triangle_scene, Fixture};
use motionsnap_core::{image_frame, scan, simulate_frame, Method, SimMode, SteeringContext};

fn simulate(c: &mut Criterion) {
    let f = Fixture::new(16, 63);
    let scene = triangle_scene();
    let mut g = c.benchmark_group("simulate_frame");
    g.sample_size(10);
    for mode in [SimMode::Geometric, SimMode::LiteralEq1] {
        g.bench_function(format!("{mode:?}"), |b| {
            b.iter(|| simulate_frame(black_box(&scene), &f.cfg, &f.motion, 0.0, 0, mode).unwrap())
        });
    }
    g.finish();
}

fn beamscan(c: &mut Criterion) {
    let mut g = c.benchmark_group("scan");
    g.sample_size(10);
    for n_ex in [0, 15, 63] {
        let f = Fixture::new(16, n_ex);
        let inputs = f.inputs();
        let ctx = SteeringContext::new(&f.cfg, &f.motion, &f.plan);
        for method in [
            Method::Dbf,
            Method::Mvdr { loading: 1e-3 },
            Method::Music { sources: 13 },
        ] {
            // covariance methods at 1024 channels take most of a minute per scan
            if n_ex == 63 && method != Method::Dbf {
                continue;
            }
            g.bench_with_input(
                BenchmarkId::new(method.tag(), n_ex),
                &inputs,
                |b, inputs| b.iter(|| scan(black_box(inputs), &f.grid, method, &ctx).unwrap()),
            );
        }
    }
    g.finish();
}

fn end_to_end(c: &mut Criterion) {
    let f = Fixture::new(16, 63);
    let mut g = c.benchmark_group("image_frame");
    g.sample_size(10);
    g.bench_function("dbf", |b| {
        b.iter(|| {
            image_frame(
                black_box(&f.cube),
                &f.plan,
                &f.grid,
                Method::Dbf,
                true,
                20.0,
            )
            .unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, simulate, beamscan, end_to_end);
criterion_main!(benches);
