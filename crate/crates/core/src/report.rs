//! Report bundle: `report.json`, delimited curve files under `curves/`,
//! SVG plots under `plots/` and serialized models under `models/`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result, ResultExt, Stage};
use crate::flow::{FlowReport, TaskReport};
use crate::metrics::RocCurve;
use crate::selection::DimSweepResult;

pub const REPORT_FILE: &str = "report.json";
pub const CURVES_DIR: &str = "curves";
pub const PLOTS_DIR: &str = "plots";
pub const MODELS_DIR: &str = "models";

/// Run metadata kept outside the deterministic report body.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ReportHeader {
    pub generated_at_unix: u64,
    pub elapsed_seconds: f64,
    pub tool_version: String,
}

impl ReportHeader {
    pub fn now(elapsed_seconds: f64) -> Self {
        let generated_at_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            generated_at_unix,
            elapsed_seconds,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Serialize)]
struct Document<'a> {
    header: &'a ReportHeader,
    files: &'a [String],
    notes: &'a [String],
    report: &'a FlowReport,
}

/// File-system friendly task name.
pub fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() {
        "task".into()
    } else {
        s
    }
}

fn write(out_dir: &Path, relative: &str, contents: &str, files: &mut Vec<String>) -> Result<()> {
    let path = out_dir.join(relative);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    files.push(relative.to_string());
    Ok(())
}

fn make_dirs(out_dir: &Path) -> Result<()> {
    for sub in [PathBuf::new(), CURVES_DIR.into(), PLOTS_DIR.into(), MODELS_DIR.into()] {
        let dir = out_dir.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    Ok(())
}

fn tasks(report: &FlowReport) -> Vec<&TaskReport> {
    let mut out = vec![&report.primary];
    if let Some(h) = &report.hierarchy {
        out.extend(h.levels.iter().map(|l| &l.task));
    }
    out
}

/// Report body alone, as written under the `report` key.
pub fn report_body(report: &FlowReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// Writes curves, plots and models, then `report.json` listing them.
pub fn emit_report(report: &FlowReport, out_dir: &Path, header: &ReportHeader) -> Result<Vec<String>> {
    emit(report, out_dir, header).at(Stage::Report)
}

fn emit(report: &FlowReport, out_dir: &Path, header: &ReportHeader) -> Result<Vec<String>> {
    make_dirs(out_dir)?;
    let mut files = Vec::new();
    let mut notes = Vec::new();
    for task in tasks(report) {
        let name = slug(&task.name);
        write(
            out_dir,
            &format!("{CURVES_DIR}/dimensionality_{name}.csv"),
            &task.dimensionality.to_delimited(),
            &mut files,
        )?;
        for entry in &task.leaderboard.entries {
            if let Some(sweep) = &entry.sweep {
                write(
                    out_dir,
                    &format!("{CURVES_DIR}/sweep_{name}_{}.csv", entry.family),
                    &sweep.to_delimited(),
                    &mut files,
                )?;
            }
        }
        for ranking in &task.rankings {
            write(
                out_dir,
                &format!("{CURVES_DIR}/ranking_{name}_{}.csv", ranking.method),
                &ranking.to_delimited(),
                &mut files,
            )?;
        }
        if let Some(roc) = &task.test_metrics.roc {
            write(
                out_dir,
                &format!("{CURVES_DIR}/roc_{name}.csv"),
                &roc.to_delimited(),
                &mut files,
            )?;
        }
        write(
            out_dir,
            &format!("{MODELS_DIR}/{name}.json"),
            &task.model.to_json()?,
            &mut files,
        )?;
    }
    emit_plots_into(report, out_dir, &mut files, &mut notes)?;
    let document = Document {
        header,
        files: &files,
        notes: &notes,
        report,
    };
    let path = out_dir.join(REPORT_FILE);
    let text = serde_json::to_string_pretty(&document)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    files.push(REPORT_FILE.into());
    Ok(files)
}

/// Writes only the SVG plots; returns the files written and any notes
/// about skipped plots.
pub fn emit_plots(report: &FlowReport, out_dir: &Path) -> Result<(Vec<String>, Vec<String>)> {
    make_dirs(out_dir).at(Stage::Report)?;
    let mut files = Vec::new();
    let mut notes = Vec::new();
    emit_plots_into(report, out_dir, &mut files, &mut notes).at(Stage::Report)?;
    Ok((files, notes))
}

fn emit_plots_into(
    report: &FlowReport,
    out_dir: &Path,
    files: &mut Vec<String>,
    notes: &mut Vec<String>,
) -> Result<()> {
    for task in tasks(report) {
        let name = slug(&task.name);
        write(
            out_dir,
            &format!("{PLOTS_DIR}/dimensionality_{name}.svg"),
            &dimensionality_svg(&task.name, &task.dimensionality),
            files,
        )?;
        match &task.test_metrics.roc {
            Some(roc) if roc.auc.is_some() => {
                write(
                    out_dir,
                    &format!("{PLOTS_DIR}/roc_{name}.svg"),
                    &roc_svg(&task.name, roc),
                    files,
                )?;
            }
            Some(_) => notes.push(format!(
                "ROC plot for '{}' skipped: the test set holds a single class",
                task.name
            )),
            None => {}
        }
    }
    Ok(())
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::EPSILON);
        LEFT + (x - self.x_min) / span * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(f64::EPSILON);
        HEIGHT - BOTTOM - (y - self.y_min) / span * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open_svg(title: &str, x_label: &str, y_label: &str, frame: &Frame, x_ticks: &[f64], y_ticks: &[f64]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        s,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#
    );
    for &t in x_ticks {
        let x = frame.px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{t}</text>"#,
            y0 + 5.0,
            y0 + 18.0
        );
    }
    for &t in y_ticks {
        let y = frame.py(t);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{t:.2}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
    s
}

fn legend(s: &mut String, index: usize, label: &str) {
    let x = WIDTH - RIGHT + 15.0;
    let y = TOP + 10.0 + index as f64 * 20.0;
    let color = COLORS[index % COLORS.len()];
    let _ = writeln!(
        s,
        r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
        x + 25.0,
        x + 32.0,
        y + 4.0,
        escape(label)
    );
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=5).map(|i| lo + (hi - lo) * i as f64 / 5.0).collect()
}

/// Accuracy against `k`, one polyline per ranking method.
pub fn dimensionality_svg(task: &str, sweep: &DimSweepResult) -> String {
    let d = sweep.curves.first().map_or(1, |c| c.accuracies.len());
    let values = sweep.curves.iter().flat_map(|c| c.accuracies.iter().copied());
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let y_min = ((lo - 0.02).max(0.0) * 50.0).floor() / 50.0;
    let y_max = ((hi + 0.02).min(1.0) * 50.0).ceil() / 50.0;
    let frame = Frame {
        x_min: 1.0,
        x_max: d.max(2) as f64,
        y_min,
        y_max: y_max.max(y_min + 0.02),
    };
    let step = (d / 10).max(1);
    let x_ticks: Vec<f64> = (1..=d).step_by(step).map(|k| k as f64).collect();
    let mut s = open_svg(
        &format!("{task}: accuracy vs number of top features"),
        "number of top-ranked features k",
        "mean cross-validation accuracy",
        &frame,
        &x_ticks,
        &nice_ticks(frame.y_min, frame.y_max),
    );
    for (i, curve) in sweep.curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = curve
            .accuracies
            .iter()
            .enumerate()
            .map(|(k, a)| format!("{:.2},{:.2}", frame.px((k + 1) as f64), frame.py(*a)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="curve" data-method="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            curve.method,
            points.join(" ")
        );
        for (k, a) in curve.accuracies.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"><title>{} k={} accuracy={}</title></circle>"#,
                frame.px((k + 1) as f64),
                frame.py(*a),
                curve.method,
                k + 1,
                a
            );
        }
        legend(&mut s, i, curve.method.name());
    }
    s.push_str("</svg>\n");
    s
}

/// ROC curve with the chance diagonal.
pub fn roc_svg(task: &str, roc: &RocCurve) -> String {
    let frame = Frame {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max: 1.0,
    };
    let ticks = nice_ticks(0.0, 1.0);
    let title = match roc.auc {
        Some(auc) => format!("{task}: ROC (AUC = {auc:.4})"),
        None => format!("{task}: ROC"),
    };
    let mut s = open_svg(
        &title,
        "false positive rate",
        "true positive rate",
        &frame,
        &ticks,
        &ticks,
    );
    let _ = writeln!(
        s,
        r#"<line class="diagonal" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 4"/>"#,
        frame.px(0.0),
        frame.py(0.0),
        frame.px(1.0),
        frame.py(1.0)
    );
    let points: Vec<String> = roc
        .points
        .iter()
        .map(|p| format!("{:.2},{:.2}", frame.px(p.fpr), frame.py(p.tpr)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline class="curve" fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
        COLORS[0],
        points.join(" ")
    );
    legend(&mut s, 0, "model");
    s.push_str("</svg>\n");
    s
}
