//! Throughput benchmarks: voxel encoding (target 5M events/s), the
//! recon-mode tracker step at the 160x160 ROI scale (target 8 ms median),
//! and cost-volume construction.

use criterion::{black_box, criterion_group, criterion_main, Criterion, Throughput};
use evpose_bench::{random_events, step_scenario};
use evpose_core::event::TimeWindow;
use evpose_core::recon::{build_cost_volume, estimate_motion, MatchCost, ReconConfig};
use evpose_core::tracker::step;
use evpose_core::Grid2;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;

fn bench_voxelize(c: &mut Criterion) {
    let n = 2_000_000;
    let stream = random_events(n, 640, 480, 1_000_000, 1);
    let window = TimeWindow::new(0, 1_000_000).unwrap();
    let mut group = c.benchmark_group("voxelize");
    group.throughput(Throughput::Elements(n as u64));
    group.sample_size(20);
    group.bench_function("2M_events_5_bins", |b| {
        b.iter(|| black_box(stream.voxelize(window, 5).unwrap()))
    });
    group.finish();
}

fn bench_tracker_step(c: &mut Criterion) {
    let scenario = step_scenario();
    let mut group = c.benchmark_group("tracker");
    group.sample_size(30);
    group.bench_function("recon_step_160px_roi", |b| {
        b.iter(|| {
            let mut state = scenario.state.clone();
            for &t in &scenario.step_times_us {
                let entry = step(
                    &mut state,
                    &scenario.seq.events,
                    t,
                    None,
                    &scenario.k,
                    &scenario.mesh,
                    &scenario.cfg,
                )
                .unwrap();
                black_box(entry);
            }
        })
    });
    group.finish();
}

fn bench_cost_volume(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut make = |seed_off: u64| {
        let _ = seed_off;
        let mut g = Grid2::zeros(64, 64);
        for y in 0..64 {
            for x in 0..64 {
                if rng.gen_bool(0.4) {
                    g.set(x, y, rng.gen_range(-3.0f32..3.0));
                }
            }
        }
        g
    };
    let reference = make(0);
    let current = make(1);
    let mut group = c.benchmark_group("cost_volume");
    group.sample_size(20);
    group.bench_function("direct_64px_r4", |b| {
        b.iter(|| {
            black_box(
                build_cost_volume(&reference, &current, 4, 7, MatchCost::Sad, 4).unwrap(),
            )
        })
    });
    group.finish();

    let stream = random_events(60_000, 160, 160, 33_333, 9);
    let window = TimeWindow::new(0, 33_333).unwrap();
    let cfg = ReconConfig::default();
    let mut group = c.benchmark_group("motion");
    group.sample_size(20);
    group.bench_function("estimate_160px_roi", |b| {
        b.iter(|| black_box(estimate_motion(&stream, window, &cfg)))
    });
    group.finish();
}

criterion_group!(benches, bench_voxelize, bench_tracker_step, bench_cost_volume);
criterion_main!(benches);
