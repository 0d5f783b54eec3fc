use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use digipop::beliefnet::{LossWeights, NetDims};
use digipop::decision::{dawid_skene, glad, EmConfig};
use digipop::population::empirical_w1;
use digipop_bench::{label_fixture, loss_fixture, samples};
use std::hint::black_box;

fn loss_gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("loss_and_gradient");
    for (embed, hidden, d_delta) in [(16, 16, 4), (64, 64, 8)] {
        let dims = NetDims::new(32, 12, 1).with_sizes(embed, hidden, d_delta);
        let (net, examples, noise) = loss_fixture(dims, 32, 10, 1);
        let mut grad = vec![0.0; net.num_params()];
        group.bench_function(
            BenchmarkId::from_parameter(format!("{embed}x{hidden}x{d_delta}")),
            |b| {
                b.iter(|| {
                    net.loss_and_gradient(
                        &examples,
                        &noise,
                        LossWeights::with_lambda(1.0),
                        0.3,
                        Some(&mut grad),
                    )
                    .unwrap()
                })
            },
        );
    }
    group.finish();
}

fn wasserstein(c: &mut Criterion) {
    let mut group = c.benchmark_group("empirical_w1");
    for n in [100, 10_000] {
        let (a, b) = (samples(n, 1), samples(n, 2));
        group.bench_function(BenchmarkId::from_parameter(n), |bch| {
            bch.iter(|| empirical_w1(black_box(&a), black_box(&b)).unwrap())
        });
    }
    group.finish();
}

fn em(c: &mut Criterion) {
    let m = label_fixture(200, 20, 5, 0.7, 3);
    let cfg = EmConfig::default();
    c.bench_function("dawid_skene/200x20x5", |b| {
        b.iter(|| dawid_skene(black_box(&m), &cfg).unwrap())
    });
    c.bench_function("glad/200x20x5", |b| {
        b.iter(|| glad(black_box(&m), &cfg).unwrap())
    });
}

criterion_group!(benches, loss_gradient, wasserstein, em);
criterion_main!(benches);
