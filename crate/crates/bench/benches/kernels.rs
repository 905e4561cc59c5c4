use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sparsepipe::clashfree::{count_patterns, CfType};
use sparsepipe::engine::{init_model, TrainConfig};
use sparsepipe::pipesim::{simulate, Mode, PipelineConfig};
use sparsepipe::topology::NetworkConfig;
use sparsepipe_bench::{input, mnist_sized_model};

fn forward_backward(c: &mut Criterion) {
    let m = mnist_sized_model();
    let x = input(800);
    c.bench_function("forward 800-100-10", |b| {
        b.iter(|| m.forward(black_box(&x)).unwrap())
    });
    c.bench_function("forward+backward 800-100-10", |b| {
        b.iter(|| {
            let mut s = m.forward(black_box(&x)).unwrap();
            m.backward(&mut s, 3).unwrap()
        })
    });
}

fn counting(c: &mut Criterion) {
    c.bench_function("count type 3 dither", |b| {
        b.iter(|| count_patterns(black_box(10), 80, 20, 160, CfType::Type3, true))
    });
}

fn simulator(c: &mut Criterion) {
    let net = NetworkConfig::new(vec![64, 32, 10], vec![8, 10])
        .unwrap()
        .with_parallelism(vec![16, 32])
        .unwrap();
    let (cfg, pats) =
        PipelineConfig::generate(net, CfType::Type2, true, vec![], Mode::Pipelined, 3).unwrap();
    let model = init_model(pats, vec![64, 32, 10], 4, 0.1).unwrap();
    let xs: Vec<Vec<f64>> = (0..32)
        .map(|i| {
            input(64)
                .into_iter()
                .map(|v| v * (i + 1) as f64 / 32.0)
                .collect()
        })
        .collect();
    let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let ys: Vec<usize> = (0..32).map(|i| i % 10).collect();
    let train = TrainConfig::default();
    c.bench_function("simulate 32 inputs 64-32-10", |b| {
        b.iter(|| simulate(&model, &cfg, &train, black_box(&refs), &ys).unwrap())
    });
}

criterion_group!(benches, forward_backward, counting, simulator);
criterion_main!(benches);
