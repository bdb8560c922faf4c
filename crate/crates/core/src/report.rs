//! Rendering of alignment results as a table, CSV, or JSON.
//!
//! Human formats print numbers with six decimals; JSON keeps full
//! precision. Every rendering carries the tool version, horizon, weighting
//! and norm order.

use std::fmt::Write as _;

use serde::Serialize;

use crate::alignment::{AlignmentMatrix, AlignmentReport, RelativeAlignment, Weighting};
use crate::paths::PathSet;
use crate::preferences::ValueId;

pub const TOOL: &str = "normalign";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

/// Common header of every structured output.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub horizon: usize,
    pub weighting: Weighting,
    pub norm_order: Vec<String>,
    pub result: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(
        command: &'static str,
        horizon: usize,
        weighting: Weighting,
        norm_order: Vec<String>,
        result: T,
    ) -> Self {
        Envelope { tool: TOOL, version: VERSION, command, horizon, weighting, norm_order, result }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

fn header(out: &mut String, command: &str, horizon: usize, weighting: Weighting, norms: &[String]) {
    let norms = if norms.is_empty() { "(none)".to_string() } else { norms.join(" -> ") };
    writeln!(out, "{TOOL} {VERSION} {command}").unwrap();
    writeln!(out, "horizon: {horizon}  weighting: {weighting}  norm order: {norms}").unwrap();
}

const CSV_HEADER: &str = "version,command,norms,agents,values,horizon,weighting,record,path,mean,weight";

fn csv_row(
    out: &mut String,
    command: &str,
    r: &AlignmentReport,
    record: &str,
    path: &str,
    mean: f64,
    weight: Option<f64>,
) {
    writeln!(
        out,
        "{VERSION},{command},{},{},{},{},{},{record},{},{},{}",
        csv_field(&join(&r.norms)),
        csv_field(&join(&r.agents)),
        csv_field(&join(&r.values)),
        r.horizon,
        r.weighting,
        csv_field(path),
        fixed(mean),
        weight.map(fixed).unwrap_or_default(),
    )
    .unwrap();
}

pub fn render_alignment(r: &AlignmentReport, format: Format) -> String {
    match format {
        Format::Json => Envelope::new("align", r.horizon, r.weighting, r.norms.clone(), r).to_json(),
        Format::Csv => {
            let mut out = format!("{CSV_HEADER}\n");
            csv_row(&mut out, "align", r, "degree", "", r.degree, None);
            for (i, p) in r.paths.iter().enumerate() {
                csv_row(&mut out, "align", r, &format!("path{}", i + 1), &p.path.to_string(), p.mean, Some(p.weight));
            }
            out
        }
        Format::Table => {
            let mut out = String::new();
            header(&mut out, "align", r.horizon, r.weighting, &r.norms);
            writeln!(out, "agents: {}  values: {}", r.agents.join(", "), join(&r.values).replace(';', ", ")).unwrap();
            writeln!(out, "degree: {}", fixed(r.degree)).unwrap();
            writeln!(out, "paths: {}  mean length: {}", r.path_count, fixed(r.mean_path_length)).unwrap();
            writeln!(
                out,
                "normative world: {} state(s) added, {} transition(s) forbidden, {} rewritten",
                r.summary.states_added.len(),
                r.summary.transitions_forbidden,
                r.summary.transitions_rewritten
            )
            .unwrap();
            writeln!(out).unwrap();
            writeln!(out, "{:>4}  {:>10}  {:>10}  path", "#", "mean", "weight").unwrap();
            for (i, p) in r.paths.iter().enumerate() {
                writeln!(out, "{:>4}  {:>10}  {:>10}  {}", i + 1, fixed(p.mean), fixed(p.weight), p.path).unwrap();
            }
            out
        }
    }
}

pub fn render_relative(r: &RelativeAlignment, format: Format) -> String {
    let norms = vec![join(&r.first.norms), join(&r.second.norms)];
    match format {
        Format::Json => Envelope::new("compare", r.first.horizon, r.first.weighting, norms, r).to_json(),
        Format::Csv => {
            let mut out = format!("{CSV_HEADER}\n");
            csv_row(&mut out, "compare", &r.first, "first", "", r.first.degree, None);
            csv_row(&mut out, "compare", &r.second, "second", "", r.second.degree, None);
            let mut both = r.first.clone();
            both.norms = norms;
            csv_row(&mut out, "compare", &both, "difference", "", r.difference, None);
            out
        }
        Format::Table => {
            let mut out = String::new();
            header(&mut out, "compare", r.first.horizon, r.first.weighting, &norms);
            writeln!(
                out,
                "agents: {}  values: {}",
                r.first.agents.join(", "),
                join(&r.first.values).replace(';', ", ")
            )
            .unwrap();
            writeln!(out, "{:<24}  {:>10}  {:>6}", "norm", "degree", "paths").unwrap();
            for side in [&r.first, &r.second] {
                writeln!(out, "{:<24}  {:>10}  {:>6}", join(&side.norms), fixed(side.degree), side.path_count).unwrap();
            }
            writeln!(out, "difference: {} (positive favors {})", fixed(r.difference), norms[0]).unwrap();
            out
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixCell {
    pub norm: String,
    pub value: ValueId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

pub fn matrix_cells(m: &AlignmentMatrix) -> Vec<MatrixCell> {
    let mut cells = Vec::new();
    for (i, norm) in m.norms.iter().enumerate() {
        for (j, value) in m.values.iter().enumerate() {
            let (degree, path_count, error, message) = match m.cell(i, j) {
                Ok(r) => (Some(r.degree), Some(r.path_count), None, None),
                Err(e) => (None, None, Some(e.kind().to_string()), Some(e.to_string())),
            };
            cells.push(MatrixCell { norm: norm.clone(), value: value.clone(), degree, path_count, error, message });
        }
    }
    cells
}

pub fn render_matrix(
    m: &AlignmentMatrix,
    agents: &[String],
    horizon: usize,
    weighting: Weighting,
    format: Format,
) -> String {
    let cells = matrix_cells(m);
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                agents: &'a [String],
                norms: &'a [String],
                values: &'a [ValueId],
                cells: Vec<MatrixCell>,
            }
            let body = Body { agents, norms: &m.norms, values: &m.values, cells };
            Envelope::new("matrix", horizon, weighting, m.norms.clone(), body).to_json()
        }
        Format::Csv => {
            let mut out = String::from("version,command,norm,value,agents,horizon,weighting,degree,paths,error\n");
            for c in cells {
                writeln!(
                    out,
                    "{VERSION},matrix,{},{},{},{horizon},{weighting},{},{},{}",
                    csv_field(&c.norm),
                    csv_field(c.value.as_str()),
                    csv_field(&agents.join(";")),
                    c.degree.map(fixed).unwrap_or_default(),
                    c.path_count.map(|n| n.to_string()).unwrap_or_default(),
                    c.error.unwrap_or_default(),
                )
                .unwrap();
            }
            out
        }
        Format::Table => {
            let mut out = String::new();
            header(&mut out, "matrix", horizon, weighting, &m.norms);
            writeln!(out, "agents: {}", agents.join(", ")).unwrap();
            let width = m.values.iter().map(|v| v.as_str().len()).max().unwrap_or(0).max(22);
            let nwidth = m.norms.iter().map(String::len).max().unwrap_or(0).max(4);
            write!(out, "{:<nwidth$}", "norm").unwrap();
            for v in &m.values {
                write!(out, "  {:>width$}", v.as_str()).unwrap();
            }
            writeln!(out).unwrap();
            for (i, norm) in m.norms.iter().enumerate() {
                write!(out, "{norm:<nwidth$}").unwrap();
                for j in 0..m.values.len() {
                    let text = match m.cell(i, j) {
                        Ok(r) => fixed(r.degree),
                        Err(e) => format!("ERR({})", e.kind()),
                    };
                    write!(out, "  {text:>width$}").unwrap();
                }
                writeln!(out).unwrap();
            }
            out
        }
    }
}

/// A path listing, optionally scored against a value scope.
#[derive(Debug, Clone, Serialize)]
pub struct PathListing {
    pub norms: Vec<String>,
    pub path_count: usize,
    pub paths: Vec<ListedPath>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ListedPath {
    pub path: crate::paths::Path,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

impl PathListing {
    pub fn plain(norms: Vec<String>, set: &PathSet) -> Self {
        PathListing {
            norms,
            path_count: set.len(),
            paths: set.iter().map(|p| ListedPath { path: p.clone(), deltas: None, mean: None, weight: None }).collect(),
        }
    }

    pub fn scored(report: &AlignmentReport) -> Self {
        PathListing {
            norms: report.norms.clone(),
            path_count: report.path_count,
            paths: report
                .paths
                .iter()
                .map(|p| ListedPath {
                    path: p.path.clone(),
                    deltas: Some(p.deltas.clone()),
                    mean: Some(p.mean),
                    weight: Some(p.weight),
                })
                .collect(),
        }
    }
}

pub fn render_paths(listing: &PathListing, horizon: usize, weighting: Weighting, format: Format) -> String {
    match format {
        Format::Json => Envelope::new("paths", horizon, weighting, listing.norms.clone(), listing).to_json(),
        Format::Csv => {
            let mut out =
                String::from("version,command,norms,horizon,weighting,index,length,path,deltas,mean,weight\n");
            for (i, p) in listing.paths.iter().enumerate() {
                let deltas = p.deltas.as_ref().map(|d| d.iter().map(|x| fixed(*x)).collect::<Vec<_>>().join(";"));
                writeln!(
                    out,
                    "{VERSION},paths,{},{horizon},{weighting},{},{},{},{},{},{}",
                    csv_field(&listing.norms.join(";")),
                    i + 1,
                    p.path.len(),
                    csv_field(&p.path.to_string()),
                    deltas.unwrap_or_default(),
                    p.mean.map(fixed).unwrap_or_default(),
                    p.weight.map(fixed).unwrap_or_default(),
                )
                .unwrap();
            }
            out
        }
        Format::Table => {
            let mut out = String::new();
            header(&mut out, "paths", horizon, weighting, &listing.norms);
            writeln!(out, "paths: {}", listing.path_count).unwrap();
            for (i, p) in listing.paths.iter().enumerate() {
                write!(out, "{:>4}  {}", i + 1, p.path).unwrap();
                if let (Some(d), Some(m), Some(w)) = (&p.deltas, p.mean, p.weight) {
                    let d: Vec<String> = d.iter().map(|x| fixed(*x)).collect();
                    write!(out, "  deltas [{}] mean {} weight {}", d.join(", "), fixed(m), fixed(w)).unwrap();
                }
                writeln!(out).unwrap();
            }
            out
        }
    }
}
