//! Randomized decision forest.
//!
//! Each tree sees a bootstrap sample. At every node `split_count` random
//! (feature, threshold) candidates are drawn, thresholds uniform between the
//! node-local minimum and maximum of the feature, and the candidate with the
//! lowest weighted Gini impurity wins. Leaves keep class distributions and
//! the forest averages them.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spec::ForestParams;
use super::FitDiagnostics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestNode {
    /// `usize::MAX` marks a leaf.
    pub feature: usize,
    #[serde(with = "crate::hexfloat")]
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    #[serde(with = "crate::hexfloat::vec")]
    pub distribution: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<ForestNode>,
}

impl DecisionTree {
    pub fn distribution(&self, row: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            if node.feature == usize::MAX {
                return &node.distribution;
            }
            i = if row[node.feature] <= node.threshold {
                node.left
            } else {
                node.right
            };
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[ForestNode], i: usize) -> usize {
            let n = &nodes[i];
            if n.feature == usize::MAX {
                0
            } else {
                1 + walk(nodes, n.left).max(walk(nodes, n.right))
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub classes: usize,
    pub trees: Vec<DecisionTree>,
}

pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Builder<'x, 'a> {
    x: ArrayView2<'x, f64>,
    labels: &'a [usize],
    classes: usize,
    params: &'a ForestParams,
    rng: ChaCha8Rng,
    nodes: Vec<ForestNode>,
}

impl Builder<'_, '_> {
    fn leaf(&mut self, counts: &[usize]) -> usize {
        let n: usize = counts.iter().sum();
        self.nodes.push(ForestNode {
            feature: usize::MAX,
            threshold: 0.0,
            left: 0,
            right: 0,
            distribution: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        });
        self.nodes.len() - 1
    }

    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &r in rows {
            counts[self.labels[r]] += 1;
        }
        counts
    }

    /// Best (feature, threshold, impurity) among random candidates.
    fn choose_split(&mut self, rows: &[usize]) -> Option<(usize, f64, f64)> {
        let d = self.x.ncols();
        let mut by_feature: Vec<Vec<f64>> = vec![Vec::new(); d];
        let mut ranges: Vec<Option<(f64, f64)>> = vec![None; d];
        for _ in 0..self.params.split_count {
            let f = self.rng.gen_range(0..d);
            let (lo, hi) = *ranges[f].get_or_insert_with(|| {
                rows.iter()
                    .map(|&r| self.x[[r, f]])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
            });
            if lo < hi {
                by_feature[f].push(self.rng.gen_range(lo..hi));
            }
        }
        let n = rows.len() as f64;
        let mut best: Option<(usize, f64, f64)> = None;
        for (f, thresholds) in by_feature.iter().enumerate() {
            if thresholds.is_empty() {
                continue;
            }
            let mut sorted: Vec<(f64, usize)> = rows.iter().map(|&r| (self.x[[r, f]], self.labels[r])).collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            // prefix[i] = class counts of the first i sorted rows
            let mut prefix = vec![0usize; (sorted.len() + 1) * self.classes];
            for (i, &(_, l)) in sorted.iter().enumerate() {
                let (done, rest) = prefix.split_at_mut((i + 1) * self.classes);
                rest[..self.classes].copy_from_slice(&done[i * self.classes..]);
                rest[l] += 1;
            }
            let total = &prefix[sorted.len() * self.classes..];
            for &t in thresholds {
                let cut = sorted.partition_point(|&(v, _)| v <= t);
                let left = &prefix[cut * self.classes..(cut + 1) * self.classes];
                let right: Vec<usize> = total.iter().zip(left).map(|(a, b)| a - b).collect();
                let impurity = (cut as f64 * gini(left) + (sorted.len() - cut) as f64 * gini(&right)) / n;
                if !best.is_some_and(|b| impurity >= b.2) {
                    best = Some((f, t, impurity));
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let counts = self.counts(rows);
        let parent = gini(&counts);
        if depth >= self.params.depth || rows.len() < 2 || parent == 0.0 {
            return self.leaf(&counts);
        }
        let Some((feature, threshold, impurity)) = self.choose_split(rows) else {
            return self.leaf(&counts);
        };
        if impurity >= parent {
            return self.leaf(&counts);
        }
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.x[[r, feature]] <= threshold);
        let index = self.nodes.len();
        self.nodes.push(ForestNode {
            feature,
            threshold,
            left: 0,
            right: 0,
            distribution: Vec::new(),
        });
        let left = self.grow(&left_rows, depth + 1);
        let right = self.grow(&right_rows, depth + 1);
        self.nodes[index].left = left;
        self.nodes[index].right = right;
        index
    }
}

impl Forest {
    pub fn fit(
        x: ArrayView2<'_, f64>,
        labels: &[usize],
        classes: usize,
        params: &ForestParams,
        seed: u64,
    ) -> (Self, FitDiagnostics) {
        let n = x.nrows();
        let trees = (0..params.ensemble_count)
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let mut builder = Builder {
                    x,
                    labels,
                    classes,
                    params,
                    rng,
                    nodes: Vec::new(),
                };
                builder.grow(&sample, 0);
                DecisionTree { nodes: builder.nodes }
            })
            .collect();
        (
            Forest { classes, trees },
            FitDiagnostics::iterative(params.ensemble_count, params.ensemble_count, true),
        )
    }

    /// Averaged leaf distributions, one row per sample.
    pub fn scores(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros((x.nrows(), self.classes));
        let weight = 1.0 / self.trees.len() as f64;
        for (row, mut target) in x.rows().into_iter().zip(out.rows_mut()) {
            let row = row.to_vec();
            for tree in &self.trees {
                for (t, p) in target.iter_mut().zip(tree.distribution(&row)) {
                    *t += weight * p;
                }
            }
        }
        out
    }
}
