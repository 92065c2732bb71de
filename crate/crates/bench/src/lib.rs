//! Synthetic inputs shared by the criterion benchmarks under `benches/`.

use genflow_core::Dataset;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `classes` shifted uniform blobs in `d` dimensions; feature `j` carries
/// signal for class `j % classes`.
pub fn blobs(n: usize, d: usize, classes: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let features = Array2::from_shape_fn((n, d), |(i, j)| {
        let shift = if j % classes == labels[i] { 1.5 } else { 0.0 };
        shift + rng.gen_range(-1.0..1.0)
    });
    Dataset::new(
        features,
        labels,
        (0..d).map(|j| format!("x{j}")).collect(),
        (0..classes).map(|c| format!("c{c}")).collect(),
        "bench",
    )
    .expect("well-formed synthetic data")
}
