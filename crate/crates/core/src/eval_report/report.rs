use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{ClassScores, ConfusionMatrix};
use super::run::{EvalOutcome, FoldResult, UserPrediction};
use super::tsne::Projection2D;
use crate::corpus::PartyLabel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Echo of the run configuration as flat key/value pairs.
    pub config: BTreeMap<String, String>,
    pub tier: String,
    pub mode: String,
    pub folds: Vec<FoldResult>,
    pub macro_f1: f64,
    pub per_class: BTreeMap<String, ClassScores>,
    pub classes: Vec<PartyLabel>,
    pub confusion: Vec<Vec<u64>>,
    pub predictions: Vec<UserPrediction>,
    pub skipped_users: Vec<String>,
    pub seed: u64,
    /// Omitted (null) in single-threaded runs so the file is byte-reproducible.
    pub runtime_s: Option<f64>,
}

impl EvalReport {
    pub fn new(outcome: EvalOutcome, tier: &str, mode: &str, config: BTreeMap<String, String>, seed: u64) -> Self {
        let per_class = outcome
            .confusion
            .classes
            .iter()
            .zip(outcome.confusion.per_class())
            .map(|(c, s)| (c.to_string(), s))
            .collect();
        EvalReport {
            config,
            tier: tier.to_string(),
            mode: mode.to_string(),
            folds: outcome.folds,
            macro_f1: outcome.macro_f1,
            per_class,
            classes: outcome.confusion.classes.clone(),
            confusion: outcome.confusion.counts,
            predictions: outcome.predictions,
            skipped_users: Vec::new(),
            seed,
            runtime_s: None,
        }
    }

    pub fn confusion_matrix(&self) -> Result<ConfusionMatrix> {
        ConfusionMatrix::from_counts(self.classes.clone(), self.confusion.clone())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("report.json", e.line(), e.to_string()))
    }
}

pub fn confusion_csv(cm: &ConfusionMatrix) -> String {
    let mut out = String::from("true\\predicted");
    for c in &cm.classes {
        out.push(',');
        out.push_str(c.as_str());
    }
    out.push('\n');
    for (c, row) in cm.classes.iter().zip(&cm.counts) {
        out.push_str(c.as_str());
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub report: PathBuf,
    pub confusion: PathBuf,
}

impl ReportPaths {
    pub fn in_dir(dir: &Path) -> Self {
        ReportPaths {
            report: dir.join("report.json"),
            confusion: dir.join("confusion.csv"),
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn emit_report(report: &EvalReport, paths: &ReportPaths) -> Result<()> {
    write(&paths.report, &report.to_json())?;
    write(&paths.confusion, &confusion_csv(&report.confusion_matrix()?))
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Scatter plot with one circle per projected user, filled by party.
pub fn projection_svg(projection: &Projection2D, parties: &BTreeMap<String, PartyLabel>) -> String {
    let (size, pad, legend_w) = (600.0, 20.0, 160.0);
    let mut classes: Vec<&PartyLabel> = parties.values().collect();
    classes.sort();
    classes.dedup();
    let colour = |label: Option<&PartyLabel>| match label.and_then(|l| classes.binary_search(&l).ok()) {
        Some(i) => PALETTE[i % PALETTE.len()],
        None => "#000000",
    };
    let (mut min, mut max) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &projection.coords {
        for a in 0..2 {
            min[a] = min[a].min(p[a]);
            max[a] = max[a].max(p[a]);
        }
    }
    let span = |a: usize| if max[a] > min[a] { max[a] - min[a] } else { 1.0 };
    let scale = (size - 2.0 * pad) / span(0).max(span(1));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{size}" viewBox="0 0 {w} {size}">"#,
        w = size + legend_w
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{}" height="{size}" fill="white"/>"#, size + legend_w);
    for (id, p) in projection.ids.iter().zip(&projection.coords) {
        let x = pad + (p[0] - min[0]) * scale;
        let y = size - pad - (p[1] - min[1]) * scale;
        let _ = writeln!(
            svg,
            r#"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="{}"><title>{}</title></circle>"#,
            colour(parties.get(id)),
            escape(id)
        );
    }
    for (i, c) in classes.iter().enumerate() {
        let y = pad + 20.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{y}" width="12" height="12" fill="{}"/><text x="{}" y="{}" font-size="12" font-family="sans-serif">{}</text>"#,
            size + 10.0,
            colour(Some(c)),
            size + 28.0,
            y + 10.0,
            escape(c.as_str())
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_projection_svg(path: &Path, projection: &Projection2D, parties: &BTreeMap<String, PartyLabel>) -> Result<()> {
    write(path, &projection_svg(projection, parties))
}
