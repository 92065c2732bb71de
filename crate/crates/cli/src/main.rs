use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Parser, ValueEnum};
use genflow_core::config::DEFAULT_TRAIN_FRACTION;
use genflow_core::error::ResultExt;
use genflow_core::{
    emit_report, load_dataset, run_flow, Decision3Metric, Error, ErrorClass, Family, FinalRoute, FlowConfig, Grid,
    GridProfile, HierarchySpec, LabelColumn, LoadOptions, NaPolicy, RankingMethod, ReportHeader, Stage,
};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NaArg {
    Fail,
    DropRow,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Recall,
    Accuracy,
}

/// Runs the generalized classification flow on a labeled table and writes
/// a report bundle.
#[derive(Debug, Parser)]
#[command(name = "genflow", version, about)]
struct Cli {
    /// Delimited input file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Label column, by header name or zero-based index.
    #[arg(long = "label-col")]
    label_col: String,
    /// Field delimiter; "tab" for tab-separated files.
    #[arg(long, default_value = ",")]
    delimiter: String,
    /// What to do with rows holding missing values.
    #[arg(long = "na-policy", value_enum, default_value = "fail")]
    na_policy: NaArg,
    #[arg(long = "train-fraction", default_value_t = DEFAULT_TRAIN_FRACTION)]
    train_fraction: f64,
    /// Number of cross-validation folds.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, env = "GENFLOW_SEED", default_value_t = 0)]
    seed: u64,
    /// Comma-separated candidate families (default: all for the route).
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<String>>,
    /// Comma-separated ranking methods.
    #[arg(long, value_delimiter = ',', default_value = "fisher,mutual_info,chi_squared")]
    rankers: Vec<String>,
    /// Equal-width bins for mutual information and chi-squared.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// JSON list of hierarchy levels `{name, positive, negative}`.
    #[arg(long)]
    hierarchy: Option<PathBuf>,
    #[arg(long = "decision3-metric", value_enum, default_value = "recall")]
    decision3_metric: MetricArg,
    /// Output directory for the report bundle.
    #[arg(long, default_value = "genflow-out")]
    out: PathBuf,
    /// Assign folds by stored row order instead of after a seeded shuffle.
    #[arg(long = "folds-positional")]
    folds_positional: bool,
    /// Use the reduced default grids.
    #[arg(long = "thin-grids")]
    thin_grids: bool,
    /// JSON object mapping family names to grids `[{name, values}, ...]`.
    #[arg(long)]
    grids: Option<PathBuf>,
    /// More log output (repeat for debug).
    #[arg(short, long, action = ArgAction::Count)]
    verbose: u8,
}

fn usage(message: String) -> Error {
    Error::InvalidParameter(message)
}

fn parse_delimiter(text: &str) -> Result<u8, Error> {
    match text {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        s if s.len() == 1 => Ok(s.as_bytes()[0]),
        s => Err(usage(format!("delimiter must be one byte or 'tab', got '{s}'"))),
    }
}

fn build_config(cli: &Cli) -> Result<FlowConfig, Error> {
    let load = LoadOptions {
        label_column: LabelColumn::parse(&cli.label_col),
        delimiter: parse_delimiter(&cli.delimiter)?,
        na_policy: match cli.na_policy {
            NaArg::Fail => NaPolicy::Fail,
            NaArg::DropRow => NaPolicy::DropRow,
        },
    };
    let families = cli
        .families
        .as_ref()
        .map(|list| {
            list.iter()
                .map(|f| f.trim().parse::<Family>())
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    let rankers = cli
        .rankers
        .iter()
        .map(|r| r.trim().parse::<RankingMethod>())
        .collect::<Result<Vec<_>, _>>()?;
    let grids: BTreeMap<String, Grid> = match &cli.grids {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let raw: BTreeMap<String, Grid> =
                serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            raw.into_iter()
                .map(|(k, v)| k.parse::<Family>().map(|f| (f.name(), v)))
                .collect::<Result<_, _>>()?
        }
        None => BTreeMap::new(),
    };
    let hierarchy = cli.hierarchy.as_ref().map(HierarchySpec::load).transpose()?;
    let config = FlowConfig {
        data_path: Some(cli.data.clone()),
        load: Some(load),
        train_fraction: cli.train_fraction,
        fold_count: cli.folds,
        seed: cli.seed,
        families,
        grids,
        grid_profile: if cli.thin_grids {
            GridProfile::Thin
        } else {
            GridProfile::Full
        },
        rankers,
        bin_count: cli.bins,
        hierarchy,
        decision3_metric: match cli.decision3_metric {
            MetricArg::Recall => Decision3Metric::Recall,
            MetricArg::Accuracy => Decision3Metric::Accuracy,
        },
        out_dir: Some(cli.out.clone()),
        folds_positional: cli.folds_positional,
    };
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let started = Instant::now();
    let config = build_config(cli)?;
    let load = config.load.clone().expect("set by build_config");
    let data = load_dataset(&cli.data, &load).at(Stage::Load)?;
    let report = run_flow(&data, &config)?;
    let header = ReportHeader::now(started.elapsed().as_secs_f64());
    let files = emit_report(&report, &cli.out, &header)?;

    let primary = &report.primary;
    println!(
        "{}: {} samples, {} features, {} classes",
        report.source_id,
        report.n_samples,
        report.n_features,
        report.class_names.len()
    );
    println!(
        "route: {}",
        match report.route {
            FinalRoute::Binary => "binary",
            FinalRoute::MulticlassFlat => "multi-class (flat)",
            FinalRoute::MulticlassHierarchical => "multi-class (hierarchical)",
        }
    );
    println!(
        "model: {} on top {} features by {}",
        primary.final_spec,
        primary.selected_features.len(),
        primary.selected_method
    );
    print!("test accuracy {:.4}", primary.test_accuracy());
    if let Some(auc) = primary.test_metrics.auc() {
        print!(", AUC {auc:.4}");
    }
    println!();
    if let Some(d) = &report.decision3 {
        println!(
            "decision 3 ({:?}): flat {:.4}, baseline {:.4}{}",
            d.metric,
            d.flat,
            d.baseline,
            d.hierarchical
                .map_or(String::new(), |h| format!(", hierarchical {h:.4}"))
        );
        if let Some(a) = &d.advisory {
            println!("advisory: {a}");
        }
    }
    println!("wrote {} files to {}", files.len(), cli.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Data => 2,
                ErrorClass::Internal => 3,
            })
        }
    }
}
