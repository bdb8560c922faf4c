//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 on a domain error (reported as a JSON object
//! on stderr), 2 on usage, parse, or I/O errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::alignment::{aggregated_alignment, alignment_matrix, AlignOptions, Scope, Weighting};
use crate::io::{Document, LoadError};
use crate::norms::{apply_norm_set, Norm};
use crate::paths::{enumerate_paths, DEFAULT_HORIZON};
use crate::preferences::{Agent, ValueId};
use crate::report::{self, Format, PathListing};

#[derive(Debug, Parser)]
#[command(name = "normalign", version, about = "Measure how well norms align with values over a finite world")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a world file and report every problem found.
    Validate {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Degree of alignment of an ordered norm set.
    Align {
        file: PathBuf,
        /// Norm id; repeat or comma-separate to apply several in order.
        #[arg(long = "norm", value_delimiter = ',')]
        norms: Vec<String>,
        /// Value id(s) to average over.
        #[arg(long = "value", alias = "values", value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Relative alignment of two norms: D(first) - D(second).
    Compare {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        norms: Vec<String>,
        #[arg(long = "value", alias = "values", value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Norm-by-value grid of degrees.
    Matrix {
        file: PathBuf,
        /// Norm ids, or "all".
        #[arg(long, value_delimiter = ',', default_value = "all")]
        norms: Vec<String>,
        /// Value ids, or "all".
        #[arg(long, value_delimiter = ',', default_value = "all")]
        values: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// List the bounded paths of a (normative) world.
    Paths {
        file: PathBuf,
        #[arg(long = "norm", value_delimiter = ',')]
        norms: Vec<String>,
        /// Score each transition against these values.
        #[arg(long = "value", alias = "values", value_delimiter = ',')]
        values: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Write the normative world as a new world file.
    ApplyNorm {
        file: PathBuf,
        #[arg(long = "norm", value_delimiter = ',', required = true)]
        norms: Vec<String>,
        /// Destination file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Agent id(s); all agents when omitted.
    #[arg(long = "agent", alias = "agents", value_delimiter = ',')]
    agents: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_HORIZON, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    horizon: usize,
    #[arg(long, value_enum, default_value_t = Weighting::Uniform)]
    weighting: Weighting,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn options(&self) -> AlignOptions {
        AlignOptions::horizon(self.horizon).weighted(self.weighting)
    }
}

/// Failure of a command, mapped to an exit code.
enum Failure {
    /// Exit 2 with a plain message.
    Usage(String),
    /// Exit 1 with a JSON error object.
    Domain(serde_json::Value),
}

impl Failure {
    fn domain(kind: &str, message: impl std::fmt::Display) -> Self {
        Failure::Domain(json!({ "error": kind, "message": message.to_string() }))
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Invalid(diags) => Failure::Domain(json!({
                "error": "InvalidWorld",
                "message": format!("{} validation error(s)", diags.len()),
                "diagnostics": diags,
            })),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<crate::alignment::AlignError> for Failure {
    fn from(e: crate::alignment::AlignError) -> Self {
        Failure::domain(e.kind(), &e)
    }
}

impl From<crate::norms::NormError> for Failure {
    fn from(e: crate::norms::NormError) -> Self {
        Failure::domain(e.kind(), &e)
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    2
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Domain(obj)) => {
            let _ = writeln!(err, "{obj}");
            1
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Validate { file, format } => validate(&file, format, out),
        Command::Align { file, norms, values, common } => {
            let doc = Document::load(&file)?;
            let norms = select_norms(&doc, &norms)?;
            let agents = select_agents(&doc, &common.agents)?;
            let values = select_values(&doc, &values)?;
            let report = aggregated_alignment(&doc.world, &norms, &Scope::new(agents, values), common.options())?;
            emit(&common.out, &report::render_alignment(&report, common.format), out)?;
            Ok(0)
        }
        Command::Compare { file, norms, values, common } => {
            if norms.len() != 2 {
                return Err(Failure::Usage(format!("--norms takes exactly two norm ids, got {}", norms.len())));
            }
            let doc = Document::load(&file)?;
            let norms = select_norms(&doc, &norms)?;
            let agents = select_agents(&doc, &common.agents)?;
            let values = select_values(&doc, &values)?;
            let scope = Scope::new(agents, values);
            let rel = crate::alignment::relative_alignment(&doc.world, &norms[0], &norms[1], &scope, common.options())?;
            emit(&common.out, &report::render_relative(&rel, common.format), out)?;
            Ok(0)
        }
        Command::Matrix { file, norms, values, common } => {
            let doc = Document::load(&file)?;
            let norms = if is_all(&norms) { doc.norms.clone() } else { select_norms(&doc, &norms)? };
            if norms.is_empty() {
                return Err(Failure::domain("EmptyScope", "the document declares no norms"));
            }
            let values = if is_all(&values) { doc.catalog.value_ids() } else { select_values(&doc, &values)? };
            let agents = select_agents(&doc, &common.agents)?;
            let agent_ids: Vec<String> = agents.iter().map(|a| a.id.clone()).collect();
            let opts = common.options();
            let matrix = alignment_matrix(&doc.world, &norms, &agents, &values, opts);
            let text = report::render_matrix(&matrix, &agent_ids, opts.horizon, opts.weighting, common.format);
            emit(&common.out, &text, out)?;
            Ok(if matrix.any_ok() { 0 } else { 1 })
        }
        Command::Paths { file, norms, values, common } => {
            let doc = Document::load(&file)?;
            let norms = select_norms(&doc, &norms)?;
            let listing = if values.is_empty() {
                let nw = apply_norm_set(&doc.world, &norms)?;
                let set = enumerate_paths(&nw.world, common.horizon).map_err(crate::alignment::AlignError::from)?;
                PathListing::plain(nw.norms_applied, &set)
            } else {
                let agents = select_agents(&doc, &common.agents)?;
                let values = select_values(&doc, &values)?;
                let report = aggregated_alignment(&doc.world, &norms, &Scope::new(agents, values), common.options())?;
                PathListing::scored(&report)
            };
            emit(&common.out, &report::render_paths(&listing, common.horizon, common.weighting, common.format), out)?;
            Ok(0)
        }
        Command::ApplyNorm { file, norms, out: dest } => {
            let doc = Document::load(&file)?;
            let norms = select_norms(&doc, &norms)?;
            let nw = apply_norm_set(&doc.world, &norms)?;
            let text = doc.with_world(nw.world).to_json();
            emit(&dest, &text, out)?;
            Ok(0)
        }
    }
}

fn validate(file: &std::path::Path, format: Format, out: &mut dyn Write) -> Result<i32, Failure> {
    let (ok, diagnostics, summary) = match Document::load(file) {
        Ok(doc) => {
            let summary = json!({
                "states": doc.world.state_count(),
                "actions": doc.world.actions().len(),
                "transitions": doc.world.transitions().len(),
                "initial_states": doc.world.initial_states().len(),
                "values": doc.catalog.values.len(),
                "agents": doc.catalog.agents.len(),
                "norms": doc.norms.len(),
            });
            (true, Vec::new(), summary)
        }
        Err(LoadError::Invalid(diags)) => (false, diags, serde_json::Value::Null),
        Err(e) => return Err(e.into()),
    };
    let text = match format {
        Format::Json => {
            let body = json!({
                "tool": report::TOOL,
                "version": report::VERSION,
                "command": "validate",
                "valid": ok,
                "summary": summary,
                "diagnostics": diagnostics,
            });
            format!("{}\n", serde_json::to_string_pretty(&body).expect("serializes"))
        }
        Format::Csv => {
            let mut s = String::from("section,entity,kind,message\n");
            for d in &diagnostics {
                s.push_str(&format!("{},{},{},\"{}\"\n", d.section, d.entity, d.kind, d.message.replace('"', "\"\"")));
            }
            s
        }
        Format::Table => {
            if ok {
                let s = &summary;
                format!(
                    "valid: {} states, {} actions, {} transitions, {} initial, {} values, {} agents, {} norms\n",
                    s["states"],
                    s["actions"],
                    s["transitions"],
                    s["initial_states"],
                    s["values"],
                    s["agents"],
                    s["norms"]
                )
            } else {
                let mut s = format!("invalid: {} problem(s)\n", diagnostics.len());
                for d in &diagnostics {
                    s.push_str(&format!("  {d}\n"));
                }
                s
            }
        }
    };
    emit(&None, &text, out)?;
    Ok(if ok { 0 } else { 1 })
}

fn emit(dest: &Option<PathBuf>, text: &str, out: &mut dyn Write) -> Result<(), Failure> {
    match dest {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
        }
        None => out.write_all(text.as_bytes()).map_err(|e| Failure::Usage(format!("cannot write output: {e}"))),
    }
}

fn is_all(ids: &[String]) -> bool {
    ids.len() == 1 && ids[0] == "all"
}

fn select_norms(doc: &Document, ids: &[String]) -> Result<Vec<Norm>, Failure> {
    ids.iter()
        .map(|id| doc.norm(id).cloned().ok_or_else(|| Failure::domain("UnknownNorm", format!("no norm named '{id}'"))))
        .collect()
}

fn select_agents<'a>(doc: &'a Document, ids: &[String]) -> Result<Vec<&'a Agent>, Failure> {
    if ids.is_empty() {
        return Ok(doc.catalog.all_agents());
    }
    ids.iter()
        .map(|id| {
            doc.catalog.agent(id).ok_or_else(|| Failure::domain("UnknownAgent", format!("no agent named '{id}'")))
        })
        .collect()
}

fn select_values(doc: &Document, ids: &[String]) -> Result<Vec<ValueId>, Failure> {
    ids.iter()
        .map(|id| {
            let id = ValueId::from(id.as_str());
            if doc.catalog.values.contains_key(&id) {
                Ok(id)
            } else {
                Err(Failure::domain("UnknownValue", format!("no value named '{id}'")))
            }
        })
        .collect()
}
