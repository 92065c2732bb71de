//! End-to-end acceptance checks. Prints one line per criterion.
//!
//! Benchmark criteria (1-4) depend on real datasets and report their outcome
//! without failing the run;
//! every other criterion is a hard check and a failure exits non-zero.

mod common;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use genflow_core::classifiers::logistic::{logistic_objective, multinomial_objective};
use genflow_core::classifiers::lssvm::{rbf, LsSvm};
use genflow_core::classifiers::mlp::{mlp_objective, Layout};
use genflow_core::classifiers::spec::LsSvmParams;
use genflow_core::dataset::stratum_train_count;
use genflow_core::flow::{combine_levels, run_flow_on_split};
use genflow_core::metrics::{evaluate, randomized_recall};
use genflow_core::ranking::mutual_information;
use genflow_core::report::report_body;
use genflow_core::selection::make_interleaved_folds;
use genflow_core::{
    stratified_split, ClassMetrics, Dataset, Family, FinalRoute, FlowConfig, FlowReport, GridProfile, Stage,
};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Line {
    id: &'static str,
    title: &'static str,
    pass: bool,
    strict: bool,
    detail: String,
}

fn line(id: &'static str, title: &'static str, strict: bool, pass: bool, detail: String) -> Line {
    let l = Line {
        id,
        title,
        pass,
        strict,
        detail,
    };
    println!(
        "[{}] {:>2} {}: {}{}",
        if l.pass { "PASS" } else { "FAIL" },
        l.id,
        l.title,
        l.detail,
        if l.strict { "" } else { " (benchmark)" }
    );
    l
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn timed_runs(data: &Dataset, config: &FlowConfig) -> (Vec<FlowReport>, Duration) {
    let mut slowest = Duration::ZERO;
    let reports = SEEDS
        .iter()
        .map(|&seed| {
            let started = Instant::now();
            let mut c = config.clone();
            c.seed = seed;
            let report = genflow_core::run_flow(data, &c).expect("flow runs");
            slowest = slowest.max(started.elapsed());
            report
        })
        .collect();
    (reports, slowest)
}

fn accuracies(reports: &[FlowReport]) -> Vec<f64> {
    reports.iter().map(|r| r.primary.test_accuracy()).collect()
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" ")
}

fn wisconsin(out: &mut Vec<Line>) {
    let data = common::wisconsin();
    let (reports, slowest) = timed_runs(&data, &FlowConfig::default());
    let acc = accuracies(&reports);
    let m = mean(&acc);
    out.push(line(
        "1",
        "wisconsin end-to-end",
        false,
        m >= 0.955 && slowest <= Duration::from_secs(120),
        format!(
            "mean test accuracy {m:.4} (>= 0.955) over seeds [{}], slowest run {:.1}s (<= 120s)",
            fmt_list(&acc),
            slowest.as_secs_f64()
        ),
    ));

    let d = data.n_features();
    let mut shapes_ok = true;
    let mut gains = Vec::new();
    for r in &reports {
        let curves = &r.primary.dimensionality.curves;
        shapes_ok &= curves.len() == 3 && curves.iter().all(|c| c.accuracies.len() == d);
        let exists = curves.iter().any(|c| {
            let all = c.accuracies[d - 1];
            c.accuracies[..d - 1].iter().any(|&a| a >= all)
        });
        shapes_ok &= exists;
        let best_below = curves
            .iter()
            .flat_map(|c| c.accuracies[..d - 1].iter().map(move |a| a - c.accuracies[d - 1]))
            .fold(f64::NEG_INFINITY, f64::max);
        gains.push(best_below);
    }
    out.push(line(
        "4",
        "dimensionality curve shape",
        false,
        shapes_ok,
        format!(
            "every seed has 3 curves of {d} points and some k < {d} with CV >= all-features CV; best margin per seed [{}]",
            fmt_list(&gains)
        ),
    ));
}

fn german(out: &mut Vec<Line>) {
    let data = common::german();
    let (reports, slowest) = timed_runs(&data, &FlowConfig::default());
    let acc = accuracies(&reports);
    let m = mean(&acc);
    out.push(line(
        "2",
        "german credit end-to-end",
        false,
        m >= 0.74 && slowest <= Duration::from_secs(300),
        format!(
            "mean test accuracy {m:.4} (>= 0.74) over seeds [{}], slowest run {:.1}s (<= 300s)",
            fmt_list(&acc),
            slowest.as_secs_f64()
        ),
    ));
}

fn telescope(out: &mut Vec<Line>) {
    let data = common::telescope();
    let config = FlowConfig {
        seed: 1,
        grid_profile: GridProfile::Thin,
        ..FlowConfig::default()
    };
    let started = Instant::now();
    let report = genflow_core::run_flow(&data, &config).expect("flow runs");
    let elapsed = started.elapsed();
    let acc = report.primary.test_accuracy();
    let auc = report.primary.test_metrics.auc().unwrap_or(f64::NAN);
    out.push(line(
        "3",
        "telescope end-to-end (thin grids)",
        false,
        acc >= 0.84 && auc >= 0.90 && elapsed <= Duration::from_secs(1800),
        format!(
            "seed 1: test accuracy {acc:.4} (>= 0.84), AUC {auc:.4} (>= 0.90), {:.1}s (<= 1800s), model {}",
            elapsed.as_secs_f64(),
            report.primary.final_spec
        ),
    ));
}

fn baseline(out: &mut Vec<Line>) {
    let r = randomized_recall(&[4978, 10967]).unwrap();
    out.push(line(
        "5",
        "randomized baseline",
        true,
        (r - 0.68780).abs() <= 5e-5,
        format!("{r:.6} (0.68780 +/- 5e-5)"),
    ));
}

fn table_iv(out: &mut Vec<Line>) {
    let rows = [
        (0.994, 0.995, 0.998),
        (0.957, 0.975, 0.905),
        (0.853, 0.727, 0.656),
        (0.971, 0.976, 0.993),
        (0.717, 0.727, 0.562),
    ];
    let levels: Vec<ClassMetrics> = rows
        .iter()
        .map(|&(accuracy, precision, recall)| ClassMetrics {
            precision,
            recall,
            accuracy,
            ..ClassMetrics::default()
        })
        .collect();
    let c = combine_levels(&levels);
    let pass = (c.precision - 0.880).abs() <= 1e-3
        && (c.recall - 0.823).abs() <= 1e-3
        && (100.0 * c.accuracy - 89.84).abs() <= 0.2;
    out.push(line(
        "6",
        "hierarchy combination",
        true,
        pass,
        format!(
            "precision {:.4} (0.880 +/- 0.001), recall {:.4} (0.823 +/- 0.001), accuracy {:.2}% (89.84 +/- 0.2; printed 89.72)",
            c.precision,
            c.recall,
            100.0 * c.accuracy
        ),
    ));
}

fn lesion_config(seed: u64) -> FlowConfig {
    FlowConfig {
        seed,
        grid_profile: GridProfile::Thin,
        hierarchy: Some(common::lesion_hierarchy()),
        families: Some(vec![Family::MultinomialLogReg, Family::DecisionForest]),
        ..FlowConfig::default()
    }
}

fn decision_three(out: &mut Vec<Line>) {
    let data = common::lesion_fixture(3000, 11);
    let report = genflow_core::run_flow(&data, &lesion_config(3)).expect("flow runs");
    let d3 = report.decision3.clone().expect("multi-class run decides");
    let flat = report.primary.test_metrics.macro_.recall;
    let combined = report.hierarchy.as_ref().map(|h| h.combined.recall);
    let pass =
        flat < d3.baseline && report.route == FinalRoute::MulticlassHierarchical && combined.is_some_and(|c| c > flat);
    out.push(line(
        "7",
        "decision 3 on six-class fixture",
        true,
        pass,
        format!(
            "flat macro recall {flat:.4} < baseline {:.4}; route {:?}; hierarchical recall {}",
            d3.baseline,
            report.route,
            combined.map_or("none".into(), |c| format!("{c:.4}"))
        ),
    ));
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn equal_width_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|&v| {
            if hi > lo {
                let mut b = 0;
                while b + 1 < bins && v >= lo + (b + 1) as f64 * (hi - lo) / bins as f64 {
                    b += 1;
                }
                b
            } else {
                0
            }
        })
        .collect()
}

fn oracles(out: &mut Vec<Line>) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_mi: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(20..=200);
        let d = rng.gen_range(1..=4);
        let classes = rng.gen_range(2..=4);
        let bins = rng.gen_range(2..=4);
        let levels = rng.gen_range(2..=6);
        let features = Array2::from_shape_fn((n, d), |_| rng.gen_range(0..levels) as f64);
        let mut labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
        labels.shuffle(&mut rng);
        let data = Dataset::new(
            features.clone(),
            labels.clone(),
            (0..d).map(|j| format!("x{j}")).collect(),
            (0..classes).map(|c| c.to_string()).collect(),
            "mi",
        )
        .unwrap();
        let ranked = mutual_information(&data, bins).unwrap();
        for j in 0..d {
            let column: Vec<f64> = features.column(j).to_vec();
            let binned = equal_width_bins(&column, bins);
            let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
            let mut fx: HashMap<usize, usize> = HashMap::new();
            let mut fy: HashMap<usize, usize> = HashMap::new();
            for (&b, &l) in binned.iter().zip(&labels) {
                *joint.entry((b, l)).or_default() += 1;
                *fx.entry(b).or_default() += 1;
                *fy.entry(l).or_default() += 1;
            }
            let nf = n as f64;
            let oracle =
                entropy(fx.into_values(), nf) + entropy(fy.into_values(), nf) - entropy(joint.into_values(), nf);
            worst_mi = worst_mi.max((ranked.scores[j] - oracle.max(0.0)).abs());
        }
    }

    let mut worst_metric: f64 = 0.0;
    for _ in 0..100 {
        let c = rng.gen_range(2..=6);
        let mut truth = Vec::new();
        let mut pred = Vec::new();
        for t in 0..c {
            for p in 0..c {
                let count = if rng.gen_bool(0.2) { 0 } else { rng.gen_range(0..25) };
                truth.extend(vec![t; count]);
                pred.extend(vec![p; count]);
            }
        }
        if truth.is_empty() {
            truth.push(0);
            pred.push(0);
        }
        let m = evaluate(&truth, &pred, c, None).unwrap();
        let n = truth.len() as f64;
        let safe = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
        let mut micro = [0.0; 3];
        let mut macro_ = [0.0; 3];
        for k in 0..c {
            let pairs = truth.iter().zip(&pred);
            let tp = pairs.clone().filter(|&(&t, &p)| t == k && p == k).count() as f64;
            let fp = pairs.clone().filter(|&(&t, &p)| t != k && p == k).count() as f64;
            let fn_ = pairs.clone().filter(|&(&t, &p)| t == k && p != k).count() as f64;
            let tn = n - tp - fp - fn_;
            let own = [safe(tp, tp + fp), safe(tp, tp + fn_), (tp + tn) / n];
            let got = [m.per_class[k].precision, m.per_class[k].recall, m.per_class[k].accuracy];
            for i in 0..3 {
                worst_metric = worst_metric.max((own[i] - got[i]).abs());
                micro[i] += own[i] * (tp + fn_) / n;
                macro_[i] += own[i] / c as f64;
            }
        }
        let got_micro = [m.micro.precision, m.micro.recall, m.micro.accuracy];
        let got_macro = [m.macro_.precision, m.macro_.recall, m.macro_.accuracy];
        for i in 0..3 {
            worst_metric = worst_metric.max((micro[i] - got_micro[i]).abs());
            worst_metric = worst_metric.max((macro_[i] - got_macro[i]).abs());
        }
        let trace = truth.iter().zip(&pred).filter(|(t, p)| t == p).count() as f64;
        worst_metric = worst_metric.max((trace / n - m.overall_accuracy).abs());
    }
    out.push(line(
        "8",
        "oracle equivalences",
        true,
        worst_mi <= 1e-10 && worst_metric <= 1e-12,
        format!("mutual information max error {worst_mi:.2e} (<= 1e-10); metric recount max error {worst_metric:.2e} (<= 1e-12)"),
    ));
}

fn central_difference(f: impl Fn(&[f64]) -> f64, at: &[f64], h: f64) -> Vec<f64> {
    let mut probe = at.to_vec();
    (0..at.len())
        .map(|i| {
            probe[i] = at[i] + h;
            let up = f(&probe);
            probe[i] = at[i] - h;
            let down = f(&probe);
            probe[i] = at[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn random_instance(rng: &mut ChaCha8Rng, classes: usize) -> (Array2<f64>, Vec<usize>) {
    let n = rng.gen_range(5..=20);
    let d = rng.gen_range(1..=5);
    let x = Array2::from_shape_fn((n, d), |_| rng.gen_range(-2.0..2.0));
    let y = (0..n).map(|_| rng.gen_range(0..classes)).collect();
    (x, y)
}

/// Normwise backward error of `[0 1ᵀ; 1 K+λI] [b; c] = [0; y]`.
fn bordered_residual(model: &LsSvm) -> f64 {
    let n = model.n_support;
    let d = model.support.len() / n;
    let rows: Vec<&[f64]> = model.support.chunks(d).collect();
    let coef: Vec<f64> = model.alpha.iter().zip(&model.targets).map(|(a, y)| a * y).collect();
    let mut res = vec![coef.iter().sum::<f64>()];
    let mut frob = 2.0 * n as f64;
    for i in 0..n {
        let mut acc = model.bias;
        for j in 0..n {
            let mut k = rbf(rows[i], rows[j], model.kernel_gamma);
            if i == j {
                k += model.lambda;
            }
            frob += k * k;
            acc += k * coef[j];
        }
        res.push(acc - model.targets[i]);
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let x_norm = (norm(&coef).powi(2) + model.bias * model.bias).sqrt();
    norm(&res) / (frob.sqrt() * x_norm + norm(&model.targets))
}

fn numerics(out: &mut Vec<Line>) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut logistic, mut multinomial, mut mlp) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let (x, y) = random_instance(&mut rng, 2);
        let l2 = rng.gen_range(0.0..0.1);
        let theta: Vec<f64> = (0..=x.ncols()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, g) = logistic_objective(&theta, x.view(), &y, l2);
        let fd = central_difference(|t| logistic_objective(t, x.view(), &y, l2).0, &theta, 1e-5);
        logistic = logistic.max(relative_gap(&g, &fd));

        let classes = rng.gen_range(2..=4);
        let (x, y) = random_instance(&mut rng, classes);
        let params: Vec<f64> = (0..classes * (x.ncols() + 1))
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let (_, g) = multinomial_objective(&params, classes, x.view(), &y, l2);
        let fd = central_difference(|p| multinomial_objective(p, classes, x.view(), &y, l2).0, &params, 1e-5);
        multinomial = multinomial.max(relative_gap(&g, &fd));

        let (x, y) = random_instance(&mut rng, classes);
        let layout = Layout::for_classes(x.ncols(), rng.gen_range(1..=6), classes);
        let w: Vec<f64> = (0..layout.len()).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let (_, g) = mlp_objective(&layout, &w, x.view(), &y);
        let fd = central_difference(|p| mlp_objective(&layout, p, x.view(), &y).0, &w, 1e-5);
        mlp = mlp.max(relative_gap(&g, &fd));
    }

    let mut residual: f64 = 0.0;
    for lambda in [1e-6, 1e-4, 1e-2] {
        let data = common::wisconsin();
        let split = stratified_split(&data, 0.3, 4).unwrap();
        let fit = LsSvm::fit(
            split.train.features().view(),
            split.train.labels(),
            &LsSvmParams {
                lambda,
                kernel_gamma: None,
            },
        )
        .unwrap();
        residual = residual.max(bordered_residual(&fit.model));
    }
    out.push(line(
        "9",
        "numerical checks",
        true,
        logistic <= 1e-5 && multinomial <= 1e-5 && mlp <= 1e-4 && residual <= 1e-8,
        format!(
            "gradient gaps logistic {logistic:.1e} multinomial {multinomial:.1e} (<= 1e-5), network {mlp:.1e} (<= 1e-4); LS-SVM residual {residual:.1e} (<= 1e-8)"
        ),
    ));
}

fn trail_prefix(report: &FlowReport) -> String {
    let cut = report
        .trail
        .iter()
        .position(|e| e.stage == Stage::FinalScoring)
        .unwrap_or(report.trail.len());
    serde_json::to_string(&report.trail[..cut]).unwrap()
}

fn structure(out: &mut Vec<Line>) {
    let mut problems = Vec::new();
    let sets = [common::wisconsin(), common::german(), common::lesion_fixture(1500, 2)];
    for data in &sets {
        for seed in 0..5 {
            let split = stratified_split(data, 0.3, seed).unwrap();
            let mut seen = vec![0u8; data.n_samples()];
            for &r in split.train_rows.iter().chain(&split.test_rows) {
                seen[r] += 1;
            }
            if seen.iter().any(|&s| s != 1) {
                problems.push(format!("{} seed {seed}: split is not a partition", data.source_id()));
            }
            for (class, &n) in data.class_counts().iter().enumerate() {
                let got = split.train_rows.iter().filter(|&&r| data.labels()[r] == class).count();
                if got != stratum_train_count(n, 0.3) {
                    problems.push(format!(
                        "{} seed {seed}: class {class} has {got} training rows",
                        data.source_id()
                    ));
                }
            }
            let folds = make_interleaved_folds(&split.train, 5, seed).unwrap();
            let mut hits = vec![0u8; split.train.n_samples()];
            for f in 0..5 {
                for r in folds.validation_rows(f) {
                    hits[r] += 1;
                }
            }
            if hits.iter().any(|&h| h != 1) {
                problems.push(format!("{} seed {seed}: folds are not a partition", data.source_id()));
            }
        }
    }

    let data = common::german();
    let config = FlowConfig {
        seed: 6,
        grid_profile: GridProfile::Thin,
        families: Some(vec![Family::LogReg, Family::DecisionForest]),
        ..FlowConfig::default()
    };
    let split = stratified_split(&data, config.train_fraction, config.seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let noise = Array2::from_shape_fn(split.test.features().dim(), |_| rng.gen_range(-1e3..1e3));
    let mut noisy = split.clone();
    noisy.test = Dataset::new(
        noise,
        split.test.labels().to_vec(),
        split.test.feature_names().to_vec(),
        split.test.class_names().to_vec(),
        split.test.source_id(),
    )
    .unwrap();
    let clean = run_flow_on_split(&data, &split, &config).unwrap();
    let scrambled = run_flow_on_split(&data, &noisy, &config).unwrap();
    if trail_prefix(&clean) != trail_prefix(&scrambled) {
        problems.push("trail before final scoring changed when test features were replaced".into());
    }
    if clean.trail.iter().all(|e| e.stage != Stage::FinalScoring) {
        problems.push("trail has no final scoring entry".into());
    }

    let lesions = common::lesion_fixture(1500, 5);
    let first = report_body(&genflow_core::run_flow(&lesions, &lesion_config(7)).unwrap()).unwrap();
    let second = report_body(&genflow_core::run_flow(&lesions, &lesion_config(7)).unwrap()).unwrap();
    if first != second {
        problems.push("two runs with one seed produced different report bodies".into());
    }
    out.push(line(
        "10",
        "structural properties",
        true,
        problems.is_empty(),
        if problems.is_empty() {
            "split and fold partitions, stratified counts, no-leakage trail prefix, deterministic report body".into()
        } else {
            problems.join("; ")
        },
    ));
}

type Criterion = (&'static str, fn(&mut Vec<Line>));

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |name: &str| filter.is_empty() || filter.iter().any(|f| name.contains(f.as_str()));
    let mut lines = Vec::new();
    let criteria: [Criterion; 9] = [
        ("wisconsin", wisconsin),
        ("german", german),
        ("telescope", telescope),
        ("baseline", baseline),
        ("combination", table_iv),
        ("decision3", decision_three),
        ("oracles", oracles),
        ("numerics", numerics),
        ("structure", structure),
    ];
    for (name, run) in criteria {
        if wanted(name) {
            run(&mut lines);
        }
    }
    lines.sort_by_key(|l| l.id.parse::<u32>().unwrap_or(0));
    println!("\nacceptance summary");
    for l in &lines {
        println!("[{}] {:>2} {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.title);
    }
    let hard_failures = lines.iter().filter(|l| l.strict && !l.pass).count();
    if hard_failures > 0 {
        eprintln!("{hard_failures} hard acceptance criteria failed");
        std::process::exit(1);
    }
}
