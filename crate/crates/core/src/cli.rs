//! Command-line front end. `main_with` returns the process exit code.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{MethodAnalysis, ProgramAnalysis};
use crate::error::AnalysisError;
use crate::eval::{self, EvalReport, GroundTruth, MatchConfig, MethodCounts, StmtClasses};
use crate::extract::{self, ExtractError};
use crate::interp;
use crate::lang::{self, StmtId};
use crate::metrics::{self, CohesionMode};
use crate::outputs::{self, Origin};
use crate::rules::RuleVerdict;
use crate::slicer::ExtractCandidate;
use crate::suggest::{self, SuggestConfig, Suggestion};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_REJECTED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "emslice", version, about = "Slice-based extract-method refactoring for MIMPL")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Rule 6 threshold on output slice overlap.
    #[arg(long, global = true, default_value_t = 0.75)]
    pub max_overlap: f64,
    /// Smallest number of moved statements worth reporting.
    #[arg(long, global = true, default_value_t = 3)]
    pub min_extract_size: usize,
    /// Largest duplicated share of a candidate slice.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub allow_duplication: f64,
    /// Seed for generated inputs.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Algorithm {
    Output,
    Complete,
    Object,
}

impl Algorithm {
    fn origin(self) -> Origin {
        match self {
            Algorithm::Output => Origin::OutputBased,
            Algorithm::Complete => Origin::CompleteComputation,
            Algorithm::Object => Origin::ObjectState,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List extract-method candidates with rule verdicts.
    Suggest {
        /// `.mj` files or directories.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long, value_delimiter = ',', default_values = ["output", "complete", "object"])]
        algorithms: Vec<Algorithm>,
    },
    /// Apply one candidate and print the rewritten program.
    Apply {
        file: PathBuf,
        #[arg(long)]
        method: String,
        /// Index from `suggest`.
        #[arg(long)]
        candidate: usize,
        /// Apply even when a rule rejects the candidate.
        #[arg(long)]
        force: bool,
        #[arg(long, value_delimiter = ',', default_values = ["output", "complete", "object"])]
        algorithms: Vec<Algorithm>,
        /// Compare traces on this many generated inputs.
        #[arg(long)]
        verify: Option<usize>,
    },
    /// Cohesion and complexity per method, or before/after deltas with
    /// `--candidate`.
    Metrics {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long, value_enum, default_value_t = CohesionMode::Output)]
        mode: CohesionMode,
        #[arg(long)]
        csv: bool,
        /// Candidate index of `--method` to measure before and after.
        #[arg(long, requires = "method")]
        candidate: Option<usize>,
    },
    /// Interpret a method and print its trace as JSON lines.
    Run {
        file: PathBuf,
        #[arg(long)]
        method: String,
        /// Comma-separated JSON values, one per parameter.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        args: String,
        #[arg(long, default_value_t = 1_000_000)]
        fuel: u64,
    },
    /// Score suggestions against ground truth.
    Eval {
        /// JSON ground truth: one object or a list of
        /// `{"method", "occurrences"}`.
        #[arg(long, required_unless_present = "counts")]
        truth: Option<PathBuf>,
        /// Same shape as the truth, or the JSON output of `suggest`.
        #[arg(long, requires = "truth")]
        suggestions: Option<PathBuf>,
        /// Per-method counts `[{"method", "tp", "fp", "fn"}]` instead of sets.
        #[arg(long, conflicts_with_all = ["truth", "suggestions"])]
        counts: Option<PathBuf>,
        /// Programs the statement ids refer to; enables relaxed matching.
        #[arg(long)]
        source: Vec<PathBuf>,
        #[arg(long, default_value_t = 2)]
        max_diff: usize,
    },
    /// CFG, PDG and CDG (DOT, or JSON with `--format json`).
    DumpGraphs {
        file: PathBuf,
        #[arg(long)]
        method: Option<String>,
    },
    /// Reach, dominance, boundary and region tables.
    DumpRegions {
        file: PathBuf,
        #[arg(long)]
        method: Option<String>,
    },
    /// Output instructions and slicing criteria.
    DumpCriteria {
        file: PathBuf,
        #[arg(long)]
        method: Option<String>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Parse { path: String, source: AnalysisError },
    #[error("{0}")]
    Rejected(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Parse { .. } => EXIT_PARSE,
            CliError::Rejected(_) => EXIT_REJECTED,
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Output goes to stdout or `--out`, diagnostics to stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(text) => match &cli.global.out {
            Some(p) => match std::fs::write(p, text) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("error: {}: {e}", p.display());
                    EXIT_USAGE
                }
            },
            None => {
                print!("{text}");
                EXIT_OK
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command and returns what it prints.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Suggest {
            paths,
            method,
            algorithms,
        } => cmd_suggest(g, paths, method.as_deref(), algorithms),
        Command::Apply {
            file,
            method,
            candidate,
            force,
            algorithms,
            verify,
        } => cmd_apply(g, file, method, *candidate, *force, algorithms, *verify),
        Command::Metrics {
            paths,
            method,
            mode,
            csv,
            candidate,
        } => cmd_metrics(g, paths, method.as_deref(), *mode, *csv, *candidate),
        Command::Run {
            file,
            method,
            args,
            fuel,
        } => cmd_run(file, method, args, *fuel),
        Command::Eval {
            truth,
            suggestions,
            counts,
            source,
            max_diff,
        } => cmd_eval(g, truth.as_deref(), suggestions.as_deref(), counts.as_deref(), source, *max_diff),
        Command::DumpGraphs { file, method } => cmd_dump(g, file, method.as_deref(), Dump::Graphs),
        Command::DumpRegions { file, method } => cmd_dump(g, file, method.as_deref(), Dump::Regions),
        Command::DumpCriteria { file, method } => cmd_dump(g, file, method.as_deref(), Dump::Criteria),
    }
}

/// `.mj` files under `paths`, sorted.
fn collect_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
        for entry in std::fs::read_dir(dir)? {
            let p = entry?.path();
            if p.is_dir() {
                walk(&p, out)?;
            } else if p.extension().is_some_and(|e| e == "mj") {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            walk(p, &mut out)?;
        } else if p.exists() {
            out.push(p.clone());
        } else {
            return Err(usage(format!("{}: no such file or directory", p.display())));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn load(path: &Path) -> Result<ProgramAnalysis, CliError> {
    let src = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    ProgramAnalysis::parse(&src).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })
}

fn method_names(pa: &ProgramAnalysis, method: Option<&str>) -> Result<Vec<String>, CliError> {
    match method {
        Some(m) if pa.program.method(m).is_some() => Ok(vec![m.to_string()]),
        Some(m) => Err(usage(format!("unknown method '{m}'"))),
        None => Ok(pa.program.methods.iter().map(|m| m.name.clone()).collect()),
    }
}

fn analysis<'a>(pa: &'a ProgramAnalysis, name: &str) -> Result<MethodAnalysis<'a>, CliError> {
    pa.method(name).map_err(usage)
}

fn suggest_config(g: &GlobalOpts, algorithms: &[Algorithm]) -> SuggestConfig {
    SuggestConfig {
        max_overlap: g.max_overlap,
        min_extract_size: g.min_extract_size,
        allow_duplication: g.allow_duplication,
        algorithms: algorithms.iter().map(|a| a.origin()).collect(),
    }
}

fn ids(s: &BTreeSet<StmtId>) -> String {
    let v: Vec<String> = s.iter().map(u32::to_string).collect();
    format!("{{{}}}", v.join(","))
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
pub struct CandidateSummary {
    pub index: usize,
    pub algorithm: Origin,
    pub variable: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_stmt: Option<StmtId>,
    pub stmts: BTreeSet<StmtId>,
    pub extracted: BTreeSet<StmtId>,
    pub duplicated: BTreeSet<StmtId>,
    pub new_method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signature: Option<extract::Signature>,
    pub accepted: bool,
    pub verdicts: Vec<RuleVerdict>,
}

impl From<&Suggestion> for CandidateSummary {
    fn from(s: &Suggestion) -> Self {
        let c = &s.candidate;
        CandidateSummary {
            index: s.index,
            algorithm: c.algorithm,
            variable: c.variable.clone(),
            output_stmt: c.output_stmt,
            stmts: c.stmts.clone(),
            extracted: c.extracted.clone(),
            duplicated: c.duplicated.clone(),
            new_method: s.new_method.clone(),
            signature: s.signature.clone(),
            accepted: s.accepted,
            verdicts: s.verdicts.clone(),
        }
    }
}

#[derive(Serialize)]
pub struct SuggestionDocument {
    pub tool_version: &'static str,
    pub file: String,
    pub method: String,
    pub candidates: Vec<CandidateSummary>,
}

fn origin_label(o: Origin) -> &'static str {
    match o {
        Origin::OutputBased => "output",
        Origin::CompleteComputation => "complete",
        Origin::ObjectState => "object",
    }
}

fn suggestion_table(doc: &SuggestionDocument) -> String {
    let mut out = format!("== {} :: {}\n", doc.file, doc.method);
    if doc.candidates.is_empty() {
        out.push_str("  (no candidates)\n");
        return out;
    }
    let _ = writeln!(
        out,
        "  {:<9} {:>3} {:<12} {:>4} {:<24} {:<16} {:<5} failed rules",
        "algorithm", "#", "variable", "out", "extracted", "duplicated", "ok"
    );
    for c in &doc.candidates {
        let failed: Vec<String> = c
            .verdicts
            .iter()
            .filter(|v| !v.passed)
            .map(|v| format!("R{}: {}", v.rule, v.reason.as_deref().unwrap_or("")))
            .collect();
        let _ = writeln!(
            out,
            "  {:<9} {:>3} {:<12} {:>4} {:<24} {:<16} {:<5} {}",
            origin_label(c.algorithm),
            c.index,
            c.variable,
            c.output_stmt.map_or("-".to_string(), |s| s.to_string()),
            ids(&c.extracted),
            ids(&c.duplicated),
            if c.accepted { "yes" } else { "no" },
            failed.join("; ")
        );
    }
    out
}

pub fn cmd_suggest(
    g: &GlobalOpts,
    paths: &[PathBuf],
    method: Option<&str>,
    algorithms: &[Algorithm],
) -> Result<String, CliError> {
    let cfg = suggest_config(g, algorithms);
    let mut docs = Vec::new();
    for file in collect_files(paths)? {
        let pa = load(&file)?;
        for name in method_names(&pa, method)? {
            let ms = suggest::suggest_method(&analysis(&pa, &name)?, &cfg);
            docs.push(SuggestionDocument {
                tool_version: env!("CARGO_PKG_VERSION"),
                file: file.display().to_string(),
                method: name,
                candidates: ms.suggestions.iter().map(CandidateSummary::from).collect(),
            });
        }
    }
    Ok(match g.format {
        Format::Json => to_json(&docs),
        Format::Table => docs.iter().map(suggestion_table).collect(),
    })
}

/// Re-runs suggestion for `method` and returns candidate `index`.
fn pick(
    g: &GlobalOpts,
    ma: &MethodAnalysis<'_>,
    index: usize,
    algorithms: &[Algorithm],
) -> Result<Suggestion, CliError> {
    let ms = suggest::suggest_method(ma, &suggest_config(g, algorithms));
    let n = ms.suggestions.len();
    ms.suggestions
        .into_iter()
        .nth(index)
        .ok_or_else(|| usage(format!("candidate {index} out of range ({n} candidates)")))
}

fn apply_candidate(ma: &MethodAnalysis<'_>, c: &ExtractCandidate) -> Result<extract::RefactoredProgram, CliError> {
    extract::apply(ma, c).map_err(|e| match e {
        ExtractError::WrongMethod(_) => usage(e),
        _ => CliError::Rejected(format!("extraction failed: {e}")),
    })
}

fn rejection(s: &Suggestion) -> Option<String> {
    let failed: Vec<String> = s
        .verdicts
        .iter()
        .filter(|v| !v.passed)
        .map(|v| format!("Rule {}: {}", v.rule, v.reason.as_deref().unwrap_or("")))
        .collect();
    (!failed.is_empty()).then(|| format!("candidate {} is rejected ({}); use --force", s.index, failed.join("; ")))
}

pub fn cmd_apply(
    g: &GlobalOpts,
    file: &Path,
    method: &str,
    index: usize,
    force: bool,
    algorithms: &[Algorithm],
    verify: Option<usize>,
) -> Result<String, CliError> {
    let pa = load(file)?;
    let ma = analysis(&pa, method)?;
    let s = pick(g, &ma, index, algorithms)?;
    if let Some(msg) = rejection(&s) {
        if !force {
            return Err(CliError::Rejected(msg));
        }
        eprintln!("warning: {msg}");
    }
    let r = apply_candidate(&ma, &s.candidate)?;
    if let Some(n) = verify {
        let inputs = interp::random_inputs(&pa.program, method, n, g.seed).map_err(usage)?;
        let eq = interp::equivalent(&pa.program, &r.program, method, &inputs, 1_000_000).map_err(usage)?;
        match &eq.divergence {
            None => eprintln!("verified: identical traces on {n} inputs"),
            Some(d) => eprintln!(
                "warning: traces differ on input {} ({}) at event {}",
                d.input_index,
                d.args.join(", "),
                d.event_index
            ),
        }
    }
    Ok(match g.format {
        Format::Table => lang::unparse(&r.program),
        Format::Json => to_json(&serde_json::json!({
            "method": r.method,
            "new_method": r.new_method,
            "call_site": r.call_site,
            "signature": r.signature,
            "mapping": r.mapping,
            "program": lang::unparse(&r.program),
        })),
    })
}

fn metrics_table(rows: &[metrics::MethodMetrics]) -> String {
    let f = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.3}"));
    let mut out = format!(
        "{:<28} {:>9} {:>8} {:>8} {:>5} {:>4} {:>8}\n",
        "method", "tightness", "overlap", "coverage", "loc", "cc", "nesting"
    );
    for m in rows {
        let _ = writeln!(
            out,
            "{:<28} {:>9} {:>8} {:>8} {:>5} {:>4} {:>8}",
            m.method,
            f(m.cohesion.tightness),
            f(m.cohesion.overlap),
            f(m.cohesion.coverage),
            m.complexity.loc,
            m.complexity.cyclomatic,
            m.complexity.max_nesting
        );
    }
    out
}

fn delta_table(rows: &[metrics::DeltaRow]) -> String {
    let f = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.3}"));
    let mut out = format!(
        "{:<20} {:<12} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
        "method", "metric", "original", "remaining", "extracted", "rem-orig", "mean-orig"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<20} {:<12} {:>9} {:>9} {:>9} {:>9} {:>9}",
            r.method,
            r.metric,
            f(r.original),
            f(r.remaining),
            f(r.extracted),
            f(r.remain_delta),
            f(r.combined_delta)
        );
    }
    out
}

pub fn cmd_metrics(
    g: &GlobalOpts,
    paths: &[PathBuf],
    method: Option<&str>,
    mode: CohesionMode,
    csv: bool,
    candidate: Option<usize>,
) -> Result<String, CliError> {
    let files = collect_files(paths)?;
    if let (Some(index), Some(method)) = (candidate, method) {
        let [file] = files.as_slice() else {
            return Err(usage("--candidate needs exactly one file"));
        };
        let pa = load(file)?;
        let ma = analysis(&pa, method)?;
        let all = [Algorithm::Output, Algorithm::Complete, Algorithm::Object];
        let s = pick(g, &ma, index, &all)?;
        let r = apply_candidate(&ma, &s.candidate)?;
        let after = ProgramAnalysis::new(r.program.clone());
        let before = metrics::method_metrics(&ma, mode);
        let remaining = metrics::method_metrics(&analysis(&after, &r.method)?, mode);
        let extracted = metrics::method_metrics(&analysis(&after, &r.new_method)?, mode);
        let rows = metrics::delta_report(&before, &remaining, &extracted).map_err(usage)?;
        return Ok(if csv {
            metrics::delta_csv(&rows)
        } else {
            match g.format {
                Format::Json => to_json(&rows),
                Format::Table => delta_table(&rows),
            }
        });
    }
    let mut rows = Vec::new();
    for file in &files {
        let pa = load(file)?;
        for name in method_names(&pa, method)? {
            rows.push(metrics::method_metrics(&analysis(&pa, &name)?, mode));
        }
    }
    Ok(if csv {
        metrics::metrics_csv(&rows)
    } else {
        match g.format {
            Format::Json => to_json(&rows),
            Format::Table => metrics_table(&rows),
        }
    })
}

pub fn cmd_run(file: &Path, method: &str, args: &str, fuel: u64) -> Result<String, CliError> {
    let pa = load(file)?;
    let m = pa
        .program
        .method(method)
        .ok_or_else(|| usage(format!("unknown method '{method}'")))?;
    let values: Vec<serde_json::Value> = serde_json::from_str(&format!("[{args}]"))
        .map_err(|e| usage(format!("--args is not a list of JSON values: {e}")))?;
    if values.len() != m.params.len() {
        return Err(usage(format!(
            "'{method}' takes {} arguments, got {}",
            m.params.len(),
            values.len()
        )));
    }
    let inputs = m
        .params
        .iter()
        .zip(&values)
        .map(|(p, v)| {
            interp::input_from_json(&pa.program, &p.ty, v)
                .ok_or_else(|| usage(format!("argument {v} does not fit parameter '{}'", p.name)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let trace = interp::run(&pa.program, method, &inputs, fuel).map_err(usage)?;
    Ok(trace
        .events
        .iter()
        .map(|e| serde_json::to_string(e).expect("serializable") + "\n")
        .collect())
}

fn read_json(path: &Path) -> Result<serde_json::Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn as_list(v: serde_json::Value) -> Vec<serde_json::Value> {
    match v {
        serde_json::Value::Array(xs) => xs,
        other => vec![other],
    }
}

/// Reads truth-shaped entries, or `suggest` documents (accepted candidates).
fn read_suggestions(path: &Path) -> Result<BTreeMap<String, Vec<BTreeSet<StmtId>>>, CliError> {
    let bad = |e: serde_json::Error| usage(format!("{}: {e}", path.display()));
    let mut out: BTreeMap<String, Vec<BTreeSet<StmtId>>> = BTreeMap::new();
    for entry in as_list(read_json(path)?) {
        if entry.get("candidates").is_some() {
            #[derive(serde::Deserialize)]
            struct Doc {
                method: String,
                candidates: Vec<Cand>,
            }
            #[derive(serde::Deserialize)]
            struct Cand {
                stmts: BTreeSet<StmtId>,
                accepted: bool,
            }
            let d: Doc = serde_json::from_value(entry).map_err(bad)?;
            out.entry(d.method)
                .or_default()
                .extend(d.candidates.into_iter().filter(|c| c.accepted).map(|c| c.stmts));
        } else {
            let t: GroundTruth = serde_json::from_value(entry).map_err(bad)?;
            out.entry(t.method).or_default().extend(t.occurrences);
        }
    }
    Ok(out)
}

pub fn cmd_eval(
    g: &GlobalOpts,
    truth: Option<&Path>,
    suggestions: Option<&Path>,
    counts: Option<&Path>,
    sources: &[PathBuf],
    max_diff: usize,
) -> Result<String, CliError> {
    let report = if let Some(path) = counts {
        let rows: Vec<MethodCounts> = serde_json::from_value(read_json(path)?)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
        EvalReport::from_counts(rows)
    } else {
        let truth = truth.ok_or_else(|| usage("--truth or --counts is required"))?;
        let truths: Vec<GroundTruth> = as_list(read_json(truth)?)
            .into_iter()
            .map(serde_json::from_value)
            .collect::<Result<_, _>>()
            .map_err(|e| usage(format!("{}: {e}", truth.display())))?;
        let sugg = match suggestions {
            Some(p) => read_suggestions(p)?,
            None => BTreeMap::new(),
        };
        let mut classes = BTreeMap::new();
        for file in collect_files(sources)? {
            let pa = load(&file)?;
            for m in &pa.program.methods {
                classes.insert(m.name.clone(), StmtClasses::of(m));
            }
        }
        eval::score(&sugg, &truths, &classes, MatchConfig { max_diff }).map_err(usage)?
    };
    Ok(match g.format {
        Format::Json => to_json(&report),
        Format::Table => report.table(),
    })
}

#[derive(Clone, Copy)]
enum Dump {
    Graphs,
    Regions,
    Criteria,
}

fn regions_table(ma: &MethodAnalysis<'_>) -> String {
    let r = &ma.regions;
    let blocks = |s: &BTreeSet<crate::graphs::BlockId>| {
        let v: Vec<String> = s.iter().map(|b| format!("B{b}")).collect();
        format!("{{{}}}", v.join(","))
    };
    let mut out = String::new();
    for (b, reach) in &r.reach {
        let _ = writeln!(
            out,
            "B{b}: reach={} dom={} region={}",
            blocks(reach),
            blocks(&r.dom[b]),
            ids(&r.region[b])
        );
    }
    for (s, bd) in &r.boundary {
        let _ = writeln!(out, "stmt {s}: boundary={}", blocks(bd));
    }
    out
}

#[derive(Serialize)]
struct CriteriaDump {
    outputs: Vec<outputs::OutputInstruction>,
    output_criteria: Vec<outputs::SlicingCriterion>,
    node_criteria: Vec<outputs::OutputSliceComputation>,
    other_criteria: Vec<outputs::SlicingCriterion>,
}

fn criteria(ma: &MethodAnalysis<'_>) -> CriteriaDump {
    let outs = outputs::classify_outputs(ma);
    CriteriaDump {
        output_criteria: outputs::output_criteria(&outs),
        node_criteria: outputs::output_variables(&outs)
            .iter()
            .map(|v| outputs::node_criteria(ma, v, &outs))
            .collect(),
        other_criteria: outputs::other_criteria(ma),
        outputs: outs,
    }
}

fn criteria_table(d: &CriteriaDump) -> String {
    let mut out = String::new();
    for o in &d.outputs {
        let _ = writeln!(out, "output {} {:?} reads [{}]", o.stmt, o.category, o.variables.join(", "));
    }
    for n in &d.node_criteria {
        for (i, o) in n.outputs.iter().enumerate() {
            let blocks: Vec<String> = n.boundary_intersection[i].iter().map(|b| format!("B{b}")).collect();
            let _ = writeln!(
                out,
                "node criteria {} @ {}: {} boundary {{{}}}",
                n.variable,
                o,
                ids(&n.node_criteria[i]),
                blocks.join(",")
            );
        }
    }
    for c in &d.other_criteria {
        let _ = writeln!(out, "{} <{}, {}>", origin_label(c.origin), c.stmt, c.variable);
    }
    out
}

fn cmd_dump(g: &GlobalOpts, file: &Path, method: Option<&str>, what: Dump) -> Result<String, CliError> {
    let pa = load(file)?;
    let mut out = String::new();
    let mut json = Vec::new();
    for name in method_names(&pa, method)? {
        let ma = analysis(&pa, &name)?;
        match (what, g.format) {
            (Dump::Graphs, Format::Table) => out.push_str(&ma.graphs.to_dot(&name)),
            (Dump::Graphs, Format::Json) => json.push(serde_json::json!({"method": name, "graphs": ma.graphs})),
            (Dump::Regions, Format::Table) => {
                let _ = writeln!(out, "== {name}");
                out.push_str(&regions_table(&ma));
            }
            (Dump::Regions, Format::Json) => json.push(serde_json::json!({"method": name, "regions": ma.regions})),
            (Dump::Criteria, Format::Table) => {
                let _ = writeln!(out, "== {name}");
                out.push_str(&criteria_table(&criteria(&ma)));
            }
            (Dump::Criteria, Format::Json) => {
                json.push(serde_json::json!({"method": name, "criteria": criteria(&ma)}))
            }
        }
    }
    Ok(match g.format {
        Format::Json => to_json(&json),
        Format::Table => out,
    })
}
