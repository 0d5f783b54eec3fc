//! Fixtures shared by the benchmarks.

use digipop::beliefnet::{BeliefNet, Example, ExampleNoise, NetDims};
use digipop::decision::LabelMatrix;
use digipop::rng::rng_from_seed;
use rand::Rng;

/// A randomly initialised net with `batch` random continuous examples and their noise.
pub fn loss_fixture(
    dims: NetDims,
    batch: usize,
    j: usize,
    seed: u64,
) -> (BeliefNet, Vec<Example>, Vec<ExampleNoise>) {
    let net = BeliefNet::new(dims, seed).expect("valid dims");
    let mut rng = rng_from_seed(seed.wrapping_add(1));
    let examples: Vec<Example> = (0..batch)
        .map(|_| Example {
            x: (0..dims.d_x).map(|_| rng.random_range(-1.0..1.0)).collect(),
            z: (0..dims.d_z).map(|_| rng.random_range(-1.0..1.0)).collect(),
            y_ref: vec![rng.random_range(1.0..5.0)],
            y: vec![rng.random_range(1.0..5.0)],
            weight: 1.0,
        })
        .collect();
    let noise = examples
        .iter()
        .map(|_| ExampleNoise::draw(&mut rng, j, dims.d_delta, dims.decision_dim))
        .collect();
    (net, examples, noise)
}

/// `n` uniform draws on `[0, 10)`.
pub fn samples(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| rng.random_range(0.0..10.0)).collect()
}

/// Fully observed labels where each worker reports the truth with probability `accuracy`.
pub fn label_fixture(
    items: usize,
    workers: usize,
    classes: usize,
    accuracy: f64,
    seed: u64,
) -> LabelMatrix {
    let mut rng = rng_from_seed(seed);
    let dense: Vec<Vec<Option<usize>>> = (0..items)
        .map(|_| {
            let truth = rng.random_range(0..classes);
            (0..workers)
                .map(|_| {
                    Some(if rng.random_bool(accuracy) {
                        truth
                    } else {
                        rng.random_range(0..classes)
                    })
                })
                .collect()
        })
        .collect();
    LabelMatrix::from_dense(classes, &dense).expect("non-empty labels")
}
