//! Filter-based feature scoring: Fisher score, mutual information,
//! chi-squared and greedy mRMR, plus projection onto top-k subsets.
//!
//! Every scorer reads only the dataset it is given; the flow passes the
//! training split.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_BIN_COUNT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingMethod {
    Fisher,
    MutualInfo,
    ChiSquared,
    Mrmr,
}

impl RankingMethod {
    pub const ALL: [RankingMethod; 4] = [
        RankingMethod::Fisher,
        RankingMethod::MutualInfo,
        RankingMethod::ChiSquared,
        RankingMethod::Mrmr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RankingMethod::Fisher => "fisher",
            RankingMethod::MutualInfo => "mutual_info",
            RankingMethod::ChiSquared => "chi_squared",
            RankingMethod::Mrmr => "mrmr",
        }
    }
}

impl fmt::Display for RankingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RankingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RankingMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown ranking method '{s}'")))
    }
}

/// Per-feature scores under one statistic and the induced order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeatures {
    pub method: RankingMethod,
    pub feature_names: Vec<String>,
    /// Non-finite Fisher scores (zero spread, distinct means) are written as strings.
    #[serde(with = "lenient_floats")]
    pub scores: Vec<f64>,
    pub order: Vec<usize>,
    pub bin_count: Option<usize>,
}

impl RankedFeatures {
    fn from_scores(method: RankingMethod, data: &Dataset, scores: Vec<f64>, bin_count: Option<usize>) -> Self {
        let order = descending_order(&scores);
        Self {
            method,
            feature_names: data.feature_names().to_vec(),
            scores,
            order,
            bin_count,
        }
    }

    pub fn top_k(&self, k: usize) -> &[usize] {
        &self.order[..k.min(self.order.len())]
    }

    /// Two-column delimited export (`feature_name,score`) in rank order.
    pub fn to_delimited(&self) -> String {
        let mut out = String::from("feature_name,score\n");
        for &j in &self.order {
            out.push_str(&format!("{},{}\n", self.feature_names[j], self.scores[j]));
        }
        out
    }
}

/// Descending by score, ties by ascending index; +∞ sorts first.
pub fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

fn require_bins(bin_count: usize) -> Result<()> {
    if bin_count < 2 {
        return Err(Error::InvalidParameter(format!(
            "bin_count must be at least 2, got {bin_count}"
        )));
    }
    Ok(())
}

/// Fisher score of every feature for `positive_class` against all other classes.
pub fn fisher_score(train: &Dataset, positive_class: usize) -> Result<RankedFeatures> {
    let scores = fisher_scores_one_vs_rest(train, positive_class)?;
    Ok(RankedFeatures::from_scores(RankingMethod::Fisher, train, scores, None))
}

fn fisher_scores_one_vs_rest(train: &Dataset, positive_class: usize) -> Result<Vec<f64>> {
    if positive_class >= train.n_classes() {
        return Err(Error::InvalidParameter(format!(
            "positive class {positive_class} out of range"
        )));
    }
    let labels = train.labels();
    let positives = labels.iter().filter(|&&l| l == positive_class).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::InvalidData(format!(
            "Fisher score needs samples on both sides of class {positive_class}"
        )));
    }
    Ok((0..train.n_features())
        .map(|j| {
            let column = train.features().column(j);
            let mut side = [(0.0, 0.0, 0usize); 2];
            for (&x, &l) in column.iter().zip(labels) {
                let s = &mut side[usize::from(l == positive_class)];
                s.0 += x;
                s.2 += 1;
            }
            let means = [side[0].0 / side[0].2 as f64, side[1].0 / side[1].2 as f64];
            for (&x, &l) in column.iter().zip(labels) {
                let k = usize::from(l == positive_class);
                side[k].1 += (x - means[k]).powi(2);
            }
            let spread = side[0].1 / side[0].2 as f64 + side[1].1 / side[1].2 as f64;
            let gap = (means[1] - means[0]).powi(2);
            fisher_ratio(gap, spread)
        })
        .collect())
}

fn fisher_ratio(gap: f64, spread: f64) -> f64 {
    if spread > 0.0 {
        gap / spread
    } else if gap > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Binary data: Fisher score of class 1. More classes: max over one-vs-rest scores.
pub fn fisher_ranking(train: &Dataset) -> Result<RankedFeatures> {
    if train.n_classes() == 2 {
        return fisher_score(train, 1);
    }
    let mut best = vec![0.0f64; train.n_features()];
    for class in 0..train.n_classes() {
        if !train.labels().contains(&class) {
            continue;
        }
        for (b, s) in best.iter_mut().zip(fisher_scores_one_vs_rest(train, class)?) {
            *b = b.max(s);
        }
    }
    Ok(RankedFeatures::from_scores(RankingMethod::Fisher, train, best, None))
}

/// Equal-width bin index of every value of one column, over the column's range.
pub fn discretize(values: &[f64], bin_count: usize) -> Vec<usize> {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let width = hi - lo;
    values
        .iter()
        .map(|&v| {
            if width > 0.0 {
                (((v - lo) / width * bin_count as f64).floor() as usize).min(bin_count - 1)
            } else {
                0
            }
        })
        .collect()
}

/// Mutual information in nats between two discrete variables.
pub fn discrete_mutual_information(a: &[usize], a_levels: usize, b: &[usize], b_levels: usize) -> f64 {
    let n = a.len() as f64;
    let mut joint = vec![0usize; a_levels * b_levels];
    let mut pa = vec![0usize; a_levels];
    let mut pb = vec![0usize; b_levels];
    for (&x, &y) in a.iter().zip(b) {
        joint[x * b_levels + y] += 1;
        pa[x] += 1;
        pb[y] += 1;
    }
    let mut mi = 0.0;
    for x in 0..a_levels {
        for y in 0..b_levels {
            let c = joint[x * b_levels + y];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / n;
            mi += pxy * (c as f64 * n / (pa[x] as f64 * pb[y] as f64)).ln();
        }
    }
    mi.max(0.0)
}

fn binned_columns(train: &Dataset, bin_count: usize) -> Vec<Vec<usize>> {
    (0..train.n_features())
        .map(|j| discretize(&train.column(j), bin_count))
        .collect()
}

pub fn mutual_information(train: &Dataset, bin_count: usize) -> Result<RankedFeatures> {
    require_bins(bin_count)?;
    let c = train.n_classes();
    let scores = binned_columns(train, bin_count)
        .iter()
        .map(|bins| discrete_mutual_information(bins, bin_count, train.labels(), c))
        .collect();
    Ok(RankedFeatures::from_scores(
        RankingMethod::MutualInfo,
        train,
        scores,
        Some(bin_count),
    ))
}

/// Summed per-value 2×2 chi-squared statistic of one binned column against a binary target.
fn chi_squared_binary(bins: &[usize], bin_count: usize, positive: &[bool]) -> f64 {
    let n = bins.len() as f64;
    let mut at_value = vec![[0usize; 2]; bin_count];
    let mut totals = [0usize; 2];
    for (&b, &p) in bins.iter().zip(positive) {
        at_value[b][usize::from(p)] += 1;
        totals[usize::from(p)] += 1;
    }
    let p1 = totals[1] as f64 / n;
    let p0 = totals[0] as f64 / n;
    at_value
        .iter()
        .filter(|counts| counts[0] + counts[1] > 0)
        .map(|counts| {
            let px = (counts[0] + counts[1]) as f64 / n;
            let denom = px * (1.0 - px) * p1 * p0;
            if denom <= 0.0 {
                return 0.0;
            }
            let x1 = counts[1] as f64 / n;
            let x0 = counts[0] as f64 / n;
            let not_x1 = (totals[1] - counts[1]) as f64 / n;
            let not_x0 = (totals[0] - counts[0]) as f64 / n;
            n * (x1 * not_x0 - x0 * not_x1).powi(2) / denom
        })
        .sum()
}

pub fn chi_squared(train: &Dataset, bin_count: usize) -> Result<RankedFeatures> {
    require_bins(bin_count)?;
    let targets: Vec<Vec<bool>> = if train.n_classes() == 2 {
        vec![train.labels().iter().map(|&l| l == 1).collect()]
    } else {
        (0..train.n_classes())
            .map(|c| train.labels().iter().map(|&l| l == c).collect())
            .collect()
    };
    let scores = binned_columns(train, bin_count)
        .iter()
        .map(|bins| targets.iter().map(|t| chi_squared_binary(bins, bin_count, t)).sum())
        .collect();
    Ok(RankedFeatures::from_scores(
        RankingMethod::ChiSquared,
        train,
        scores,
        Some(bin_count),
    ))
}

/// Greedy mRMR (difference form) selecting `k` features.
pub fn mrmr_rank(train: &Dataset, bin_count: usize, k: usize) -> Result<RankedFeatures> {
    mrmr_rank_weighted(train, bin_count, k, 1.0)
}

/// Greedy selection maximizing `relevance − weight · mean redundancy`.
///
/// `order` starts with the `k` selected features in selection order; the
/// remaining features follow, ranked by their criterion value against the
/// final selected set. `scores` holds the criterion value at which each
/// feature was picked (or, for unselected ones, its final value).
pub fn mrmr_rank_weighted(
    train: &Dataset,
    bin_count: usize,
    k: usize,
    redundancy_weight: f64,
) -> Result<RankedFeatures> {
    require_bins(bin_count)?;
    let d = train.n_features();
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!("mRMR k must lie in 1..={d}, got {k}")));
    }
    let bins = binned_columns(train, bin_count);
    let c = train.n_classes();
    let relevance: Vec<f64> = bins
        .iter()
        .map(|b| discrete_mutual_information(b, bin_count, train.labels(), c))
        .collect();
    let mut redundancy_sum = vec![0.0; d];
    let mut selected: Vec<usize> = Vec::with_capacity(d);
    let mut scores = vec![0.0; d];
    let mut is_selected = vec![false; d];
    let criterion = |j: usize, sum: &[f64], picked: usize| {
        if picked == 0 {
            relevance[j]
        } else {
            relevance[j] - redundancy_weight * sum[j] / picked as f64
        }
    };
    while selected.len() < k {
        let picked = selected.len();
        let best = (0..d)
            .filter(|&j| !is_selected[j])
            .max_by(|&a, &b| {
                criterion(a, &redundancy_sum, picked)
                    .total_cmp(&criterion(b, &redundancy_sum, picked))
                    .then(b.cmp(&a))
            })
            .expect("k <= d");
        scores[best] = criterion(best, &redundancy_sum, picked);
        is_selected[best] = true;
        selected.push(best);
        for j in (0..d).filter(|&j| !is_selected[j]) {
            redundancy_sum[j] += discrete_mutual_information(&bins[j], bin_count, &bins[best], bin_count);
        }
    }
    let mut rest: Vec<usize> = (0..d).filter(|&j| !is_selected[j]).collect();
    for &j in &rest {
        scores[j] = criterion(j, &redundancy_sum, selected.len());
    }
    rest.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    selected.extend(rest);
    Ok(RankedFeatures {
        method: RankingMethod::Mrmr,
        feature_names: train.feature_names().to_vec(),
        scores,
        order: selected,
        bin_count: Some(bin_count),
    })
}

pub fn rank_features(train: &Dataset, method: RankingMethod, bin_count: usize) -> Result<RankedFeatures> {
    match method {
        RankingMethod::Fisher => fisher_ranking(train),
        RankingMethod::MutualInfo => mutual_information(train, bin_count),
        RankingMethod::ChiSquared => chi_squared(train, bin_count),
        RankingMethod::Mrmr => mrmr_rank(train, bin_count, train.n_features()),
    }
}

/// The first `k` features of `ranking.order`, rows and labels unchanged.
pub fn project_top_k(data: &Dataset, ranking: &RankedFeatures, k: usize) -> Result<Dataset> {
    if data.feature_names() != ranking.feature_names.as_slice() {
        return Err(Error::SchemaMismatch(format!(
            "ranking computed on {:?}, dataset has {:?}",
            ranking.feature_names,
            data.feature_names()
        )));
    }
    if k == 0 || k > data.n_features() {
        return Err(Error::InvalidParameter(format!(
            "k must lie in 1..={}, got {k}",
            data.n_features()
        )));
    }
    Ok(data.select_columns(ranking.top_k(k)))
}

mod lenient_floats {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Value {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<Value> = values
            .iter()
            .map(|&v| {
                if v.is_finite() {
                    Value::Number(v)
                } else {
                    Value::Text(crate::hexfloat::format(v))
                }
            })
            .collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Value>::deserialize(d)?
            .into_iter()
            .map(|v| match v {
                Value::Number(x) => Ok(x),
                Value::Text(t) => crate::hexfloat::parse(&t).map_err(serde::de::Error::custom),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    fn dataset(columns: &[Vec<f64>], labels: Vec<usize>) -> Dataset {
        let n = labels.len();
        let d = columns.len();
        let features = Array2::from_shape_fn((n, d), |(i, j)| columns[j][i]);
        let c = labels.iter().max().unwrap() + 1;
        Dataset::new(
            features,
            labels,
            (0..d).map(|j| format!("f{j}")).collect(),
            (0..c).map(|c| c.to_string()).collect(),
            "test",
        )
        .unwrap()
    }

    #[test]
    fn fisher_hand_value() {
        let data = dataset(
            &[vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]],
            vec![0, 0, 0, 0, 1, 1, 1, 1],
        );
        let r = fisher_score(&data, 1).unwrap();
        assert!((r.scores[0] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn fisher_equal_means_scores_zero_and_zero_spread_ranks_first() {
        let data = dataset(
            &[
                vec![1.0, 3.0, 1.0, 3.0],
                vec![0.5, 0.5, 4.0, 4.0],
                vec![0.0, 1.0, 5.0, 7.0],
            ],
            vec![0, 0, 1, 1],
        );
        let r = fisher_score(&data, 1).unwrap();
        assert_eq!(r.scores[0], 0.0);
        assert!(r.scores[1].is_infinite());
        assert_eq!(r.order, vec![1, 2, 0]);
    }

    #[test]
    fn fisher_requires_both_sides() {
        let data = dataset(&[vec![1.0, 2.0, 3.0]], vec![0, 1, 0]);
        let sub = data.select_rows(&[0, 2]);
        assert!(fisher_score(&sub, 1).is_err());
    }

    #[test]
    fn mutual_information_identity_is_ln2() {
        let labels = vec![0, 1, 0, 1, 0, 1];
        let col: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let r = mutual_information(&dataset(&[col], labels), 10).unwrap();
        assert!((r.scores[0] - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_independent_is_zero() {
        // joint table with all four cells 0.25
        let r = mutual_information(&dataset(&[vec![0.0, 0.0, 1.0, 1.0]], vec![0, 1, 0, 1]), 2).unwrap();
        assert!(r.scores[0].abs() < 1e-15);
    }

    #[test]
    fn constant_feature_scores_zero() {
        let data = dataset(&[vec![2.0; 4], vec![0.0, 1.0, 2.0, 3.0]], vec![0, 1, 0, 1]);
        assert_eq!(mutual_information(&data, 4).unwrap().scores[0], 0.0);
        assert_eq!(chi_squared(&data, 4).unwrap().scores[0], 0.0);
    }

    #[test]
    fn chi_squared_perfect_two_bin_feature() {
        let labels = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let col: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let r = chi_squared(&dataset(&[col], labels), 10).unwrap();
        assert!((r.scores[0] - 16.0).abs() < 1e-12);
    }

    #[test]
    fn chi_squared_independent_is_zero() {
        let r = chi_squared(&dataset(&[vec![0.0, 0.0, 1.0, 1.0]], vec![0, 1, 0, 1]), 2).unwrap();
        assert!(r.scores[0].abs() < 1e-15);
    }

    #[test]
    fn chi_squared_matches_pearson_table_oracle() {
        // Per-bin 2×2 table (X = x_j vs X != x_j) x (Y), Pearson's sum of (O-E)^2/E.
        let col = vec![0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 0.0, 2.0, 1.0];
        let labels = vec![0, 1, 1, 1, 0, 0, 0, 1, 1, 1];
        let data = dataset(std::slice::from_ref(&col), labels.clone());
        let got = chi_squared(&data, 3).unwrap().scores[0];
        let bins = discretize(&col, 3);
        let n = labels.len() as f64;
        let mut expected = 0.0;
        for value in 0..3 {
            let mut table = [[0.0f64; 2]; 2];
            for (&b, &l) in bins.iter().zip(&labels) {
                table[usize::from(b == value)][l] += 1.0;
            }
            let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
            let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
            for r in 0..2 {
                for c in 0..2 {
                    let e = rows[r] * cols[c] / n;
                    expected += (table[r][c] - e).powi(2) / e;
                }
            }
        }
        assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn mrmr_first_pick_matches_mutual_information() {
        let data = dataset(
            &[
                vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0],
                vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
            ],
            vec![0, 0, 0, 1, 1, 1],
        );
        let mi = mutual_information(&data, 2).unwrap();
        let mrmr = mrmr_rank(&data, 2, 1).unwrap();
        assert_eq!(mrmr.order[0], mi.order[0]);
        assert_eq!(mrmr.order.len(), 3);
    }

    #[test]
    fn mrmr_skips_duplicate_of_top_feature() {
        // f0: strongest feature, f1: exact copy of f0, f2/f3: weaker, less redundant
        let labels = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let f0 = vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let f2 = vec![0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let f3 = vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let data = dataset(&[f0.clone(), f0, f2, f3], labels);
        let bins = binned_columns(&data, 2);
        // brute-force over all ordered pairs starting with the best-relevance feature
        let rel: Vec<f64> = bins
            .iter()
            .map(|b| discrete_mutual_information(b, 2, data.labels(), 2))
            .collect();
        let first = descending_order(&rel)[0];
        let second = (0..4)
            .filter(|&j| j != first)
            .max_by(|&a, &b| {
                let ca = rel[a] - discrete_mutual_information(&bins[a], 2, &bins[first], 2);
                let cb = rel[b] - discrete_mutual_information(&bins[b], 2, &bins[first], 2);
                ca.total_cmp(&cb).then(b.cmp(&a))
            })
            .unwrap();
        let r = mrmr_rank(&data, 2, 2).unwrap();
        assert_eq!(&r.order[..2], &[first, second]);
        assert_eq!(first, 0);
        assert_ne!(r.order[1], 1);
    }

    #[test]
    fn mrmr_without_redundancy_follows_relevance() {
        let labels = vec![0, 0, 0, 1, 1, 1, 0, 1, 1, 0];
        let cols = vec![
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
            labels.iter().map(|&l| l as f64 * 2.0).collect(),
            vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0],
        ];
        let data = dataset(&cols, labels);
        let mi = mutual_information(&data, 3).unwrap();
        let r = mrmr_rank_weighted(&data, 3, 3, 0.0).unwrap();
        assert_eq!(r.order, mi.order);
    }

    #[test]
    fn projection() {
        let data = dataset(
            &[vec![1.0, 2.0, 3.0], vec![0.0, 5.0, 9.0], vec![7.0, 7.0, 8.0]],
            vec![0, 1, 1],
        );
        let ranking = RankedFeatures {
            method: RankingMethod::Fisher,
            feature_names: data.feature_names().to_vec(),
            scores: vec![0.1, 0.9, 0.5],
            order: vec![1, 2, 0],
            bin_count: None,
        };
        let top1 = project_top_k(&data, &ranking, 1).unwrap();
        assert_eq!(top1.feature_names(), &["f1".to_string()]);
        assert_eq!(top1.column(0), vec![0.0, 5.0, 9.0]);
        let all = project_top_k(&data, &ranking, 3).unwrap();
        assert_eq!(all.n_features(), 3);
        assert_eq!(all.labels(), data.labels());
        let other = data.select_columns(&[0, 1]);
        assert!(matches!(
            project_top_k(&other, &ranking, 1),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn scores_serialize_with_infinity() {
        let r = RankedFeatures {
            method: RankingMethod::Fisher,
            feature_names: vec!["a".into(), "b".into()],
            scores: vec![f64::INFINITY, 0.25],
            order: vec![0, 1],
            bin_count: None,
        };
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"inf\""));
        let back: RankedFeatures = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    /// Brute-force MI straight from the joint probability table.
    fn joint_table_mi(x: &[usize], y: &[usize]) -> f64 {
        let n = x.len() as f64;
        let xs: std::collections::BTreeSet<_> = x.iter().copied().collect();
        let ys: std::collections::BTreeSet<_> = y.iter().copied().collect();
        let mut total = 0.0;
        for &a in &xs {
            for &b in &ys {
                let pxy = x.iter().zip(y).filter(|(&p, &q)| p == a && q == b).count() as f64 / n;
                let px = x.iter().filter(|&&p| p == a).count() as f64 / n;
                let py = y.iter().filter(|&&q| q == b).count() as f64 / n;
                if pxy > 0.0 {
                    total += pxy * (pxy / (px * py)).ln();
                }
            }
        }
        total
    }

    proptest! {
        #[test]
        fn fisher_affine_invariance(
            col in prop::collection::vec(-50.0f64..50.0, 12),
            a in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
            b in -100.0f64..100.0,
        ) {
            let labels: Vec<usize> = (0..12).map(|i| usize::from(i >= 6)).collect();
            let other: Vec<f64> = (0..12).map(|i| (i % 3) as f64).collect();
            let base = dataset(&[col.clone(), other.clone()], labels.clone());
            let mapped: Vec<f64> = col.iter().map(|x| a * x + b).collect();
            let moved = dataset(&[mapped, other], labels);
            let r1 = fisher_score(&base, 1).unwrap();
            let r2 = fisher_score(&moved, 1).unwrap();
            prop_assert!((r1.scores[0] - r2.scores[0]).abs() <= 1e-8 * r1.scores[0].max(1.0));
        }

        #[test]
        fn mutual_information_matches_joint_table(
            rows in prop::collection::vec((0usize..4, 0usize..3), 4..200),
        ) {
            let x: Vec<usize> = rows.iter().map(|r| r.0).collect();
            let y: Vec<usize> = rows.iter().map(|r| r.1).collect();
            let got = discrete_mutual_information(&x, 4, &y, 3);
            prop_assert!((got - joint_table_mi(&x, &y)).abs() < 1e-10);
        }

        #[test]
        fn mi_and_chi_invariant_under_bin_relabeling(
            rows in prop::collection::vec((0usize..4, 0usize..2), 8..100),
            perm in Just([2usize, 0, 3, 1]),
        ) {
            let x: Vec<usize> = rows.iter().map(|r| r.0).collect();
            let y: Vec<usize> = rows.iter().map(|r| r.1).collect();
            let px: Vec<usize> = x.iter().map(|&v| perm[v]).collect();
            let yb: Vec<bool> = y.iter().map(|&v| v == 1).collect();
            let mi = discrete_mutual_information(&x, 4, &y, 2);
            let mi_p = discrete_mutual_information(&px, 4, &y, 2);
            prop_assert!((mi - mi_p).abs() < 1e-12);
            let chi = chi_squared_binary(&x, 4, &yb);
            let chi_p = chi_squared_binary(&px, 4, &yb);
            prop_assert!((chi - chi_p).abs() < 1e-9 * chi.max(1.0));
            prop_assert!(mi >= 0.0 && chi >= 0.0);
        }

        #[test]
        fn orders_are_permutations(cols in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 10), 1..5)) {
            let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
            let data = dataset(&cols, labels);
            for method in RankingMethod::ALL {
                let r = rank_features(&data, method, 4).unwrap();
                let mut o = r.order.clone();
                o.sort_unstable();
                prop_assert_eq!(o, (0..cols.len()).collect::<Vec<_>>());
                if method != RankingMethod::Mrmr {
                    for w in r.order.windows(2) {
                        prop_assert!(r.scores[w[0]] >= r.scores[w[1]]);
                    }
                }
            }
        }
    }
}
