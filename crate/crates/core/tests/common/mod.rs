#![allow(dead_code)]

use std::path::PathBuf;

use genflow_core::{Dataset, HierarchyLevel, HierarchySpec, LabelColumn, LoadOptions, NaPolicy};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn data_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(file)
}

pub fn load(file: &str, na_policy: NaPolicy) -> Dataset {
    let mut options = LoadOptions::new(LabelColumn::Name("class".into()));
    options.na_policy = na_policy;
    genflow_core::load_dataset(data_path(file), &options).expect("bundled dataset loads")
}

pub fn wisconsin() -> Dataset {
    load("wisconsin.csv", NaPolicy::DropRow)
}

pub fn german() -> Dataset {
    load("german.csv", NaPolicy::Fail)
}

pub fn telescope() -> Dataset {
    load("telescope.csv", NaPolicy::Fail)
}

/// Class shares of the six lesion classes.
pub const LESION_SHARES: [f64; 6] = [0.049, 0.0018, 0.026, 0.69, 0.13, 0.10];

/// Per-class feature means. Column 0 separates classes 0-2 from 3-5, column 1
/// class 0 from 1-2, column 2 class 1 from 2, column 3 class 3 from 4-5 and
/// column 4 class 4 from 5; column 5 is noise.
const LESION_MEANS: [[f64; 6]; 6] = [
    [2.5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.5, 2.0, 2.5, 0.0, 0.0, 0.0],
    [2.5, 2.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.3, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.3, 1.4, 0.0],
];

/// Imbalanced six-class Gaussian fixture with the lesion class shares.
pub fn lesion_fixture(n: usize, seed: u64) -> Dataset {
    let counts: Vec<usize> = LESION_SHARES
        .iter()
        .map(|s| ((s * n as f64).round() as usize).max(6))
        .collect();
    let total: usize = counts.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut features = Array2::zeros((total, 6));
    let mut labels = Vec::with_capacity(total);
    let mut row = 0;
    for (class, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            for (j, mean) in LESION_MEANS[class].iter().enumerate() {
                features[[row, j]] = mean + noise.sample(&mut rng);
            }
            labels.push(class);
            row += 1;
        }
    }
    Dataset::new(
        features,
        labels,
        (0..6).map(|j| format!("f{j}")).collect(),
        (0..6).map(|c| c.to_string()).collect(),
        "lesion-fixture",
    )
    .unwrap()
}

pub fn lesion_hierarchy() -> HierarchySpec {
    let level = |name: &str, positive: &[usize], negative: &[usize]| HierarchyLevel {
        name: name.into(),
        positive: positive.to_vec(),
        negative: negative.to_vec(),
    };
    HierarchySpec {
        levels: vec![
            level("bright vs red", &[0, 1, 2], &[3, 4, 5]),
            level("bright lesion vs non-lesion", &[1, 2], &[0]),
            level("red lesion vs non-lesion", &[4, 5], &[3]),
            level("cotton-wool vs hard exudate", &[2], &[1]),
            level("micro-aneurysm vs hemorrhage", &[5], &[4]),
        ],
    }
}
