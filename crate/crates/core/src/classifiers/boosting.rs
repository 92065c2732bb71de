//! Gradient-boosted regression trees for binary logistic loss.
//!
//! Features are bucketed into at most 255 quantile bins. Each tree is grown
//! best-first on the current residuals `y − p` with a least-squares split
//! gain, and each leaf gets a Newton step `Σr / Σp(1−p)` scaled by the
//! learning rate. Leaf steps are halved until the training loss of that leaf
//! does not increase.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::spec::BoostParams;
use super::{sigmoid, FitDiagnostics};

pub const MAX_BINS: usize = 255;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionNode {
    /// `usize::MAX` marks a leaf.
    pub feature: usize,
    #[serde(with = "crate::hexfloat")]
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    #[serde(with = "crate::hexfloat")]
    pub value: f64,
}

impl RegressionNode {
    fn leaf(value: f64) -> Self {
        Self {
            feature: usize::MAX,
            threshold: 0.0,
            left: 0,
            right: 0,
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<RegressionNode>,
}

impl RegressionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            if node.feature == usize::MAX {
                return node.value;
            }
            i = if row[node.feature] <= node.threshold {
                node.left
            } else {
                node.right
            };
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature == usize::MAX).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTrees {
    #[serde(with = "crate::hexfloat")]
    pub initial_score: f64,
    pub trees: Vec<RegressionTree>,
}

/// Upper bin edges per feature: a value `x` falls in bin `#{c : c < x}` and
/// the split "bin ≤ b" is the same as `x ≤ cuts[b]`.
pub fn quantile_cuts(values: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    let mut cuts = if distinct.len() <= max_bins {
        distinct
    } else {
        let n = sorted.len();
        let mut c: Vec<f64> = (1..=max_bins)
            .map(|i| sorted[((i * n) / max_bins).min(n) - 1])
            .collect();
        c.dedup();
        c
    };
    // the top edge never separates anything
    if let Some(&max) = sorted.last() {
        while cuts.last().is_some_and(|&c| c >= max) {
            cuts.pop();
        }
    }
    cuts
}

fn bin_of(cuts: &[f64], x: f64) -> usize {
    cuts.partition_point(|&c| c < x)
}

fn logistic_loss(score: f64, target: f64) -> f64 {
    let softplus = if score > 0.0 {
        score + (-score).exp().ln_1p()
    } else {
        score.exp().ln_1p()
    };
    softplus - target * score
}

struct Candidate {
    gain: f64,
    feature: usize,
    bin: usize,
}

struct Leaf {
    node: usize,
    rows: Vec<usize>,
    split: Option<Candidate>,
}

fn best_split(
    rows: &[usize],
    bins: &[Vec<u8>],
    n_bins: &[usize],
    residual: &[f64],
    min_leaf: usize,
) -> Option<Candidate> {
    let n = rows.len();
    if n < 2 * min_leaf {
        return None;
    }
    let total: f64 = rows.iter().map(|&r| residual[r]).sum();
    let parent = total * total / n as f64;
    let mut best: Option<Candidate> = None;
    for (f, column) in bins.iter().enumerate() {
        let nb = n_bins[f];
        if nb < 2 {
            continue;
        }
        let mut sums = vec![0.0; nb];
        let mut counts = vec![0usize; nb];
        for &r in rows {
            let b = column[r] as usize;
            sums[b] += residual[r];
            counts[b] += 1;
        }
        let (mut sl, mut nl) = (0.0, 0usize);
        for b in 0..nb - 1 {
            sl += sums[b];
            nl += counts[b];
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let sr = total - sl;
            let gain = sl * sl / nl as f64 + sr * sr / nr as f64 - parent;
            if gain > 1e-12 && !best.as_ref().is_some_and(|c| gain <= c.gain) {
                best = Some(Candidate {
                    gain,
                    feature: f,
                    bin: b,
                });
            }
        }
    }
    best
}

impl BoostedTrees {
    /// `labels` are class ids in {0, 1}.
    pub fn fit(x: ArrayView2<'_, f64>, labels: &[usize], params: &BoostParams) -> (Self, FitDiagnostics) {
        let (n, d) = x.dim();
        let targets: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let cuts: Vec<Vec<f64>> = x
            .columns()
            .into_iter()
            .map(|c| quantile_cuts(&c.to_vec(), MAX_BINS))
            .collect();
        let bins: Vec<Vec<u8>> = (0..d)
            .map(|j| x.column(j).iter().map(|&v| bin_of(&cuts[j], v) as u8).collect())
            .collect();
        let n_bins: Vec<usize> = cuts.iter().map(|c| c.len() + 1).collect();

        let prior = (targets.iter().sum::<f64>() / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let initial_score = (prior / (1.0 - prior)).ln();
        let mut scores = vec![initial_score; n];
        let mut trees = Vec::with_capacity(params.trees);
        let mut residual = vec![0.0; n];
        let mut hessian = vec![0.0; n];

        for _ in 0..params.trees {
            for i in 0..n {
                let p = sigmoid(scores[i]);
                residual[i] = targets[i] - p;
                hessian[i] = p * (1.0 - p);
            }
            let mut nodes = vec![RegressionNode::leaf(0.0)];
            let all: Vec<usize> = (0..n).collect();
            let split = best_split(&all, &bins, &n_bins, &residual, params.min_leaf_samples);
            let mut leaves = vec![Leaf {
                node: 0,
                rows: all,
                split,
            }];
            while leaves.len() < params.leaves {
                let pick = leaves
                    .iter()
                    .enumerate()
                    .filter_map(|(i, l)| l.split.as_ref().map(|c| (i, c.gain)))
                    .fold(None, |acc: Option<(usize, f64)>, (i, g)| match acc {
                        Some((_, bg)) if bg >= g => acc,
                        _ => Some((i, g)),
                    });
                let Some((index, _)) = pick else { break };
                let leaf = leaves.swap_remove(index);
                let cand = leaf.split.expect("picked leaf has a split");
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = leaf
                    .rows
                    .iter()
                    .partition(|&&r| bins[cand.feature][r] as usize <= cand.bin);
                let left = nodes.len();
                nodes.push(RegressionNode::leaf(0.0));
                nodes.push(RegressionNode::leaf(0.0));
                nodes[leaf.node] = RegressionNode {
                    feature: cand.feature,
                    threshold: cuts[cand.feature][cand.bin],
                    left,
                    right: left + 1,
                    value: 0.0,
                };
                for (node, rows) in [(left, left_rows), (left + 1, right_rows)] {
                    let split = best_split(&rows, &bins, &n_bins, &residual, params.min_leaf_samples);
                    leaves.push(Leaf { node, rows, split });
                }
            }
            for leaf in &leaves {
                let sr: f64 = leaf.rows.iter().map(|&r| residual[r]).sum();
                let sh: f64 = leaf.rows.iter().map(|&r| hessian[r]).sum();
                let mut step = params.learning_rate * sr / sh.max(1e-12);
                let before: f64 = leaf.rows.iter().map(|&r| logistic_loss(scores[r], targets[r])).sum();
                let mut halvings = 0;
                loop {
                    let after: f64 = leaf
                        .rows
                        .iter()
                        .map(|&r| logistic_loss(scores[r] + step, targets[r]))
                        .sum();
                    if after <= before {
                        break;
                    }
                    halvings += 1;
                    if halvings > MAX_HALVINGS {
                        step = 0.0;
                        break;
                    }
                    step *= 0.5;
                }
                nodes[leaf.node].value = step;
                for &r in &leaf.rows {
                    scores[r] += step;
                }
            }
            trees.push(RegressionTree { nodes });
        }
        let count = trees.len();
        (
            BoostedTrees { initial_score, trees },
            FitDiagnostics::iterative(count, params.trees, true),
        )
    }

    pub fn raw_scores(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|row| {
                let row = row.to_vec();
                self.initial_score + self.trees.iter().map(|t| t.predict(&row)).sum::<f64>()
            })
            .collect()
    }

    pub fn positive_scores(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        self.raw_scores(x).into_iter().map(sigmoid).collect()
    }

    /// Mean training log-loss after each tree, starting from the prior.
    pub fn loss_trace(&self, x: ArrayView2<'_, f64>, labels: &[usize]) -> Vec<f64> {
        let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
        let mut scores = vec![self.initial_score; rows.len()];
        let mean = |s: &[f64]| {
            s.iter()
                .zip(labels)
                .map(|(v, &l)| logistic_loss(*v, l as f64))
                .sum::<f64>()
                / s.len() as f64
        };
        let mut trace = vec![mean(&scores)];
        for tree in &self.trees {
            for (s, r) in scores.iter_mut().zip(&rows) {
                *s += tree.predict(r);
            }
            trace.push(mean(&scores));
        }
        trace
    }
}
