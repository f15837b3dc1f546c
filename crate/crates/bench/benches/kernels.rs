use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gsnna_core::data::{gen_bars, gen_eggbox, split, standardize, SamplingScheme};
use gsnna_core::{train, Activation, ArchitectureSpec, CnnArchitecture, ConvLayerSpec, LayerSpec, Network, SplitSpec, Task, TrainConfig};

const ROWS: usize = 64;

fn inputs(len: usize) -> Vec<f64> {
    (0..len).map(|i| ((i * 37 % 101) as f64 / 50.0) - 1.0).collect()
}

fn mlp() -> ArchitectureSpec {
    let hidden = vec![LayerSpec::new(56, Activation::Relu), LayerSpec::new(56, Activation::Tanh)];
    ArchitectureSpec::new(2, 1, hidden, Task::Regression).unwrap()
}

fn cnn() -> CnnArchitecture {
    let layer = |channels, activation| ConvLayerSpec { channels, kernel_size: 3, pooling: 2, dropout_rate: 0.0, activation };
    CnnArchitecture::new((8, 8, 1), vec![layer(8, Activation::Relu), layer(8, Activation::Elu)], 2, Task::Classification).unwrap()
}

fn dense(c: &mut Criterion) {
    let net = mlp();
    let params = net.init_params(1);
    let x = inputs(ROWS * 2);
    let y = inputs(ROWS);
    c.bench_function("mlp forward 64x2-56-56-1", |b| b.iter(|| net.forward_rows(&params, black_box(&x), ROWS, None)));
    c.bench_function("mlp loss+grad 64x2-56-56-1", |b| b.iter(|| net.loss_and_grad(&params, black_box(&x), &y, ROWS, None)));
}

fn conv(c: &mut Criterion) {
    let net = cnn();
    let params = net.init_params(1);
    let x = inputs(ROWS * 64);
    let y: Vec<f64> = (0..ROWS).flat_map(|i| if i % 2 == 0 { [1.0, 0.0] } else { [0.0, 1.0] }).collect();
    c.bench_function("cnn forward 64x8x8 two blocks", |b| b.iter(|| net.forward_rows(&params, black_box(&x), ROWS, None)));
    c.bench_function("cnn loss+grad 64x8x8 two blocks", |b| b.iter(|| net.loss_and_grad(&params, black_box(&x), &y, ROWS, None)));
}

fn training(c: &mut Criterion) {
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    let eggbox = standardize(&split(&gen_eggbox(1000, 0, SamplingScheme::Uniform).unwrap(), &SplitSpec::default()).unwrap(), true, true).0;
    let net = mlp();
    group.bench_function("mlp eggbox 1000 rows 5 epochs", |b| {
        b.iter(|| {
            let cfg = TrainConfig { max_epochs: 5, ..TrainConfig::for_training_set(eggbox.train.rows(), 32, 3) };
            train(&net, &eggbox.train, &eggbox.val, &cfg).unwrap()
        })
    });
    let bars = standardize(&split(&gen_bars(500, 8, 0.3, 0).unwrap(), &SplitSpec::default()).unwrap(), true, false).0;
    let net = cnn();
    group.bench_function("cnn bars 500 rows 2 epochs", |b| {
        b.iter(|| {
            let cfg = TrainConfig { max_epochs: 2, ..TrainConfig::for_training_set(bars.train.rows(), 32, 3) };
            train(&net, &bars.train, &bars.val, &cfg).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, dense, conv, training);
criterion_main!(benches);
