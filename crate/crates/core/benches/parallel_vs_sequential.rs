use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use holo_restore::autoencoder::{self, init_params, TrainConfig};
use holo_restore::optics::{self, ComplexField};
use holo_restore::par::SingleThread;
use holo_restore::pipeline::{simulate_page, ExperimentConfig};
use holo_restore::tiling;
use num_complex::Complex64;

/// Runs `f` once on the default pool and once confined to one thread.
fn both<F, R>(c: &mut Criterion, group: &str, f: F)
where
    F: Fn() -> R + Sync,
    R: Send,
{
    let single = SingleThread::new();
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    g.bench_function(BenchmarkId::from_parameter("parallel"), |b| b.iter(|| black_box(f())));
    g.bench_function(BenchmarkId::from_parameter("single_thread"), |b| {
        b.iter(|| single.install(|| black_box(f())))
    });
    g.finish();
}

fn desk() -> ExperimentConfig {
    ExperimentConfig::default()
}

fn propagate(c: &mut Criterion) {
    let data = (0..256 * 256)
        .map(|i| Complex64::from_polar(1.0, i as f64 * 0.37))
        .collect();
    let field = ComplexField::new(256, 256, 4e-6, 633e-9, data).unwrap();
    both(c, "propagate_256", || optics::propagate(&field, 0.05));
}

fn simulate(c: &mut Criterion) {
    let cfg = desk();
    both(c, "simulate_page_200", || simulate_page(&cfg, 1).unwrap());
}

fn train_epoch(c: &mut Criterion) {
    let cfg = desk();
    let mut pairs = Vec::new();
    for i in 1..=10 {
        let (orig, recon) = simulate_page(&cfg, i).unwrap();
        pairs.extend(tiling::pair_tiles(&recon, &orig, cfg.tile_px).unwrap());
    }
    let train = TrainConfig {
        epochs: 1,
        ..cfg.train_config()
    };
    both(c, "train_epoch_1000", || autoencoder::train(&pairs, &train).unwrap());
}

fn restore(c: &mut Criterion) {
    let cfg = desk();
    let (_, recon) = simulate_page(&cfg, 1).unwrap();
    let n = cfg.tile_px * cfg.tile_px;
    let params = init_params(n, cfg.train.n_hidden, 3).unwrap();
    both(c, "restore_200", || autoencoder::restore(&params, &recon, cfg.tile_px).unwrap());
}

criterion_group!(benches, propagate, simulate, train_epoch, restore);
criterion_main!(benches);
