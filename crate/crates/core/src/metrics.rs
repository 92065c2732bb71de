//! Confusion counts, per-class / micro / macro metrics, ROC curves and the
//! majority-class baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `matrix[i][j]` counts samples of true class `i` predicted as `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub matrix: Vec<Vec<u64>>,
}

impl ConfusionCounts {
    pub fn classes(&self) -> usize {
        self.matrix.len()
    }

    pub fn total(&self) -> u64 {
        self.matrix.iter().flatten().sum()
    }

    pub fn true_count(&self, class: usize) -> u64 {
        self.matrix[class].iter().sum()
    }

    pub fn tp(&self, class: usize) -> u64 {
        self.matrix[class][class]
    }

    pub fn fp(&self, class: usize) -> u64 {
        (0..self.classes())
            .filter(|&i| i != class)
            .map(|i| self.matrix[i][class])
            .sum()
    }

    pub fn fn_(&self, class: usize) -> u64 {
        self.true_count(class) - self.tp(class)
    }

    pub fn tn(&self, class: usize) -> u64 {
        self.total() - self.tp(class) - self.fp(class) - self.fn_(class)
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.matrix[i][i]).sum()
    }
}

pub fn confusion_counts(truth: &[usize], predicted: &[usize], classes: usize) -> Result<ConfusionCounts> {
    if truth.len() != predicted.len() {
        return Err(Error::InvalidData(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let mut matrix = vec![vec![0u64; classes]; classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= classes || p >= classes {
            return Err(Error::InvalidData(format!(
                "label out of range 0..{classes}: ({t}, {p})"
            )));
        }
        matrix[t][p] += 1;
    }
    Ok(ConfusionCounts { matrix })
}

fn is_false(v: &bool) -> bool {
    !*v
}

/// Precision, recall and accuracy of one class (or an average of classes).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    /// Set when `tp + fp = 0`; precision is then reported as 0.
    #[serde(default, skip_serializing_if = "is_false")]
    pub precision_undefined: bool,
    /// Set when `tp + fn = 0`; recall is then reported as 0.
    #[serde(default, skip_serializing_if = "is_false")]
    pub recall_undefined: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn one_vs_rest(counts: &ConfusionCounts, class: usize) -> ClassMetrics {
    let (tp, fp, fn_, tn) = (counts.tp(class), counts.fp(class), counts.fn_(class), counts.tn(class));
    let (precision, precision_undefined) = ratio(tp, tp + fp);
    let (recall, recall_undefined) = ratio(tp, tp + fn_);
    let (accuracy, _) = ratio(tp + tn, counts.total());
    ClassMetrics {
        precision,
        recall,
        accuracy,
        precision_undefined,
        recall_undefined,
    }
}

/// Metrics of class 1 as the positive class.
pub fn binary_metrics(counts: &ConfusionCounts) -> Result<ClassMetrics> {
    if counts.classes() != 2 {
        return Err(Error::InvalidParameter(format!(
            "binary metrics need 2 classes, got {}",
            counts.classes()
        )));
    }
    Ok(one_vs_rest(counts, 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// `None` for the appended (0,0) and (1,1) endpoints.
    pub threshold: Option<f64>,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    /// Absent when only one class is present.
    pub auc: Option<f64>,
}

impl RocCurve {
    pub fn to_delimited(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            let t = p.threshold.map_or_else(String::new, |t| t.to_string());
            out.push_str(&format!("{t},{},{}\n", p.fpr, p.tpr));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub confusion: ConfusionCounts,
    /// One-vs-rest metrics per class.
    pub per_class: Vec<ClassMetrics>,
    /// Weighted by true-class counts.
    pub micro: ClassMetrics,
    /// Unweighted mean over classes.
    #[serde(rename = "macro")]
    pub macro_: ClassMetrics,
    /// `trace / total`.
    pub overall_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub roc: Option<RocCurve>,
}

impl EvalMetrics {
    pub fn auc(&self) -> Option<f64> {
        self.roc.as_ref().and_then(|r| r.auc)
    }
}

pub fn averaged_metrics(counts: &ConfusionCounts) -> EvalMetrics {
    let c = counts.classes();
    let total = counts.total() as f64;
    let per_class: Vec<ClassMetrics> = (0..c).map(|i| one_vs_rest(counts, i)).collect();
    let mut micro = ClassMetrics::default();
    let mut macro_ = ClassMetrics::default();
    for (i, m) in per_class.iter().enumerate() {
        let w = if total > 0.0 {
            counts.true_count(i) as f64 / total
        } else {
            0.0
        };
        micro.precision += w * m.precision;
        micro.recall += w * m.recall;
        micro.accuracy += w * m.accuracy;
        macro_.precision += m.precision / c as f64;
        macro_.recall += m.recall / c as f64;
        macro_.accuracy += m.accuracy / c as f64;
    }
    let undefined_p = per_class.iter().any(|m| m.precision_undefined);
    let undefined_r = per_class.iter().any(|m| m.recall_undefined);
    for m in [&mut micro, &mut macro_] {
        m.precision_undefined = undefined_p;
        m.recall_undefined = undefined_r;
    }
    let (overall_accuracy, _) = ratio(counts.trace(), counts.total());
    EvalMetrics {
        confusion: counts.clone(),
        per_class,
        micro,
        macro_,
        overall_accuracy,
        roc: None,
    }
}

pub const ROC_GRID_POINTS: usize = 101;

/// ROC over the 101-point grid on [0, 1] refined with every distinct score;
/// a sample is positive when `score ≥ t`.
pub fn roc_and_auc(scores: &[f64], truth: &[usize]) -> Result<RocCurve> {
    if scores.len() != truth.len() {
        return Err(Error::InvalidData(format!(
            "{} scores but {} labels",
            scores.len(),
            truth.len()
        )));
    }
    if truth.iter().any(|&l| l > 1) {
        return Err(Error::InvalidData("ROC needs binary labels".into()));
    }
    let mut thresholds: Vec<f64> = (0..ROC_GRID_POINTS)
        .map(|i| i as f64 / (ROC_GRID_POINTS - 1) as f64)
        .chain(scores.iter().copied())
        .collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();

    let mut ranked: Vec<(f64, usize)> = scores.iter().copied().zip(truth.iter().copied()).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let positives = truth.iter().filter(|&&l| l == 1).count();
    let negatives = truth.len() - positives;
    let rate = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };

    let mut points = vec![RocPoint {
        threshold: None,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp, mut cursor) = (0, 0, 0);
    for t in thresholds {
        while cursor < ranked.len() && ranked[cursor].0 >= t {
            if ranked[cursor].1 == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            cursor += 1;
        }
        points.push(RocPoint {
            threshold: Some(t),
            fpr: rate(fp, negatives),
            tpr: rate(tp, positives),
        });
    }
    points.push(RocPoint {
        threshold: None,
        fpr: 1.0,
        tpr: 1.0,
    });
    let auc = (positives > 0 && negatives > 0).then(|| {
        points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    });
    Ok(RocCurve { points, auc })
}

/// Recall of labelling everything as the most frequent class.
pub fn randomized_recall(class_counts: &[usize]) -> Result<f64> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidData("class counts are empty or all zero".into()));
    }
    Ok(*class_counts.iter().max().expect("nonempty") as f64 / total as f64)
}

/// Full evaluation of predictions; binary tasks also get a ROC curve from
/// the positive-class scores.
pub fn evaluate(
    truth: &[usize],
    predicted: &[usize],
    classes: usize,
    positive_scores: Option<&[f64]>,
) -> Result<EvalMetrics> {
    let counts = confusion_counts(truth, predicted, classes)?;
    let mut metrics = averaged_metrics(&counts);
    if let (2, Some(scores)) = (classes, positive_scores) {
        metrics.roc = Some(roc_and_auc(scores, truth)?);
    }
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binary_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> ConfusionCounts {
        ConfusionCounts {
            matrix: vec![vec![tn, fp], vec![fn_, tp]],
        }
    }

    #[test]
    fn enumerated_counts() {
        let c = confusion_counts(&[1, 1, 1, 0, 0], &[1, 1, 0, 0, 1], 2).unwrap();
        assert_eq!((c.tp(1), c.fn_(1), c.tn(1), c.fp(1)), (2, 1, 1, 1));
        assert!(confusion_counts(&[0], &[0, 1], 2).is_err());
    }

    #[test]
    fn all_predicted_zero_fills_one_column() {
        let truth = [0, 1, 2, 3, 3, 3, 4, 5];
        let c = confusion_counts(&truth, &[0; 8], 6).unwrap();
        for row in &c.matrix {
            assert!(row[1..].iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn binary_arithmetic() {
        let m = binary_metrics(&binary_counts(3, 1, 2, 4)).unwrap();
        assert_eq!((m.precision, m.recall, m.accuracy), (0.75, 0.6, 0.7));
        let d = binary_metrics(&binary_counts(0, 0, 3, 2)).unwrap();
        assert_eq!(d.precision, 0.0);
        assert!(d.precision_undefined);
    }

    #[test]
    fn perfect_multiclass_is_all_ones() {
        let truth = [0, 1, 2, 2, 1, 0, 3];
        let m = averaged_metrics(&confusion_counts(&truth, &truth, 4).unwrap());
        for v in [m.micro, m.macro_] {
            assert_eq!((v.precision, v.recall, v.accuracy), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn roc_extremes() {
        let labels = [0, 1, 1, 0, 1];
        let perfect: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        assert_eq!(roc_and_auc(&perfect, &labels).unwrap().auc, Some(1.0));
        assert_eq!(roc_and_auc(&[0.3; 5], &labels).unwrap().auc, Some(0.5));
        assert_eq!(roc_and_auc(&[0.3, 0.4], &[1, 1]).unwrap().auc, None);
    }

    #[test]
    fn baseline_values() {
        assert!((randomized_recall(&[4978, 10967]).unwrap() - 0.68780).abs() < 5e-5);
        assert_eq!(randomized_recall(&[5, 3, 2]).unwrap(), 0.5);
        assert_eq!(randomized_recall(&[4, 4, 4, 4]).unwrap(), 0.25);
        assert!(randomized_recall(&[0, 0]).is_err());
    }

    proptest! {
        #[test]
        fn binary_matches_class_one(tp in 0u64..50, fp in 0u64..50, fn_ in 0u64..50, tn in 0u64..50) {
            let c = binary_counts(tp, fp, fn_, tn);
            prop_assume!(c.total() > 0);
            prop_assert_eq!(binary_metrics(&c).unwrap(), averaged_metrics(&c).per_class[1]);
        }

        #[test]
        fn averages_invariant_under_relabeling(entries in prop::collection::vec(0u64..20, 9), perm in Just([2usize, 0, 1])) {
            let m: Vec<Vec<u64>> = entries.chunks(3).map(|r| r.to_vec()).collect();
            let c = ConfusionCounts { matrix: m.clone() };
            prop_assume!(c.total() > 0);
            let mut p = vec![vec![0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    p[perm[i]][perm[j]] = m[i][j];
                }
            }
            let a = averaged_metrics(&c);
            let b = averaged_metrics(&ConfusionCounts { matrix: p });
            for (x, y) in [(a.micro, b.micro), (a.macro_, b.macro_)] {
                prop_assert!((x.precision - y.precision).abs() < 1e-12);
                prop_assert!((x.recall - y.recall).abs() < 1e-12);
                prop_assert!((x.accuracy - y.accuracy).abs() < 1e-12);
            }
        }

        #[test]
        fn roc_is_monotone_and_auc_bounded(data in prop::collection::vec((0u32..=1000, 0usize..2), 2..60)) {
            let scores: Vec<f64> = data.iter().map(|(s, _)| *s as f64 / 1000.0).collect();
            let labels: Vec<usize> = data.iter().map(|(_, l)| *l).collect();
            let roc = roc_and_auc(&scores, &labels).unwrap();
            for w in roc.points.windows(2) {
                prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
            }
            if let Some(auc) = roc.auc {
                prop_assert!((0.0..=1.0).contains(&auc));
            }
        }

        #[test]
        fn reversed_scores_complement_auc(data in prop::collection::vec((0u32..=1000, 0usize..2), 2..60)) {
            let scores: Vec<f64> = data.iter().map(|(s, _)| *s as f64 / 1000.0).collect();
            let labels: Vec<usize> = data.iter().map(|(_, l)| *l).collect();
            let flipped_labels: Vec<usize> = labels.iter().map(|l| 1 - l).collect();
            let reversed: Vec<f64> = data.iter().map(|(s, _)| (1000 - s) as f64 / 1000.0).collect();
            if let Some(auc) = roc_and_auc(&scores, &labels).unwrap().auc {
                let r = roc_and_auc(&reversed, &labels).unwrap().auc.unwrap();
                let f = roc_and_auc(&scores, &flipped_labels).unwrap().auc.unwrap();
                let both = roc_and_auc(&reversed, &flipped_labels).unwrap().auc.unwrap();
                prop_assert!((auc + r - 1.0).abs() < 1e-9);
                prop_assert!((auc + f - 1.0).abs() < 1e-9);
                prop_assert!((auc - both).abs() < 1e-9);
            }
        }

        #[test]
        fn auc_invariant_under_increasing_transform(data in prop::collection::vec((0u32..=1000, 0usize..2), 2..60)) {
            let scores: Vec<f64> = data.iter().map(|(s, _)| *s as f64 / 1000.0).collect();
            let squared: Vec<f64> = scores.iter().map(|s| s * s).collect();
            let labels: Vec<usize> = data.iter().map(|(_, l)| *l).collect();
            let a = roc_and_auc(&scores, &labels).unwrap().auc;
            let b = roc_and_auc(&squared, &labels).unwrap().auc;
            match (a, b) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }
}
