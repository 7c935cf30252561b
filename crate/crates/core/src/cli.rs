//! Command-line front end. `run` turns parsed arguments into rendered output
//! and an exit code; `main` only parses, prints and exits.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{self, ClassReport, ClassifyError, Congruence, CoprimeTerm};
use crate::closedform::{self, FormulaError, Tag};
use crate::lensgraph::{adjacency_by_enumeration, GraphError, WeightSystem};
use crate::slp::{self, Route, SlpError};
use crate::verify::{self, SuiteReport, VerifyError};
use crate::IntMatrix;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Slp(#[from] SlpError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("cannot render output: {0}")]
    Render(String),
}

impl CliError {
    /// Failed checks exit 1; everything else is bad input and exits 2.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            _ => 2,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Render(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Render(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Plain,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Count paths in the skew product graph.
    Enum,
    /// Evaluate the closed-form expressions.
    Formula,
    /// Both, followed by MATCH or MISMATCH.
    Both,
}

#[derive(Debug, Parser)]
#[command(
    name = "qlens",
    version,
    about = "Adjacency matrices, invariants and equivalence certificates for quantum lens spaces"
)]
pub struct Cli {
    /// Output format.
    #[arg(
        long,
        global = true,
        value_enum,
        env = "QLENS_FORMAT",
        default_value = "plain"
    )]
    pub format: Format,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the adjacency matrix of one weight system.
    Matrix(MatrixArgs),
    /// Decide isomorphism of two weight systems from the invariants.
    Isomorphic(PairArgs),
    /// Enumerate isomorphism classes for one gcd pattern.
    Classes(ClassesArgs),
    /// Find U, V with U B V = B' for an isomorphic pair.
    Certificate(CertificateArgs),
    /// Run the oracle sweeps up to an order bound.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[arg(long)]
    pub r: u64,
    /// Comma-separated weights, 2 to 4 of them.
    #[arg(long, value_delimiter = ',', required = true)]
    pub weights: Vec<u64>,
    #[arg(long, value_enum, default_value = "enum")]
    pub method: Method,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long)]
    pub r: u64,
    #[arg(long, value_delimiter = ',', required = true)]
    pub lhs: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub rhs: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct ClassesArgs {
    #[arg(long)]
    pub r: u64,
    /// gcd of the non-unit weight with r.
    #[arg(long, conflicts_with = "coprime")]
    pub n: Option<u64>,
    /// Lens space dimension: 3, 5 or 7.
    #[arg(long)]
    pub dim: usize,
    /// 0-based position of the non-unit weight.
    #[arg(long, conflicts_with = "coprime")]
    pub position: Option<usize>,
    /// All weights coprime to r.
    #[arg(long)]
    pub coprime: bool,
}

#[derive(Debug, Args)]
pub struct CertificateArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Entry bound for the fallback search.
    #[arg(long, default_value_t = 3)]
    pub bound: u32,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub r_max: u64,
    /// Run a single suite and show per-order counts.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(verify::SUITES))]
    pub only: Option<String>,
}

/// Rendered output and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub text: String,
    pub code: u8,
}

impl Outcome {
    fn new(text: String, code: u8) -> Self {
        Outcome { text, code }
    }
}

/// The matrix schema shared by every format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub r: u64,
    pub weights: Vec<u64>,
    pub size: usize,
    pub order: String,
    pub entries: Vec<Vec<i128>>,
    pub tags: Vec<Vec<Tag>>,
}

impl MatrixDoc {
    fn new(ws: &WeightSystem, entries: &IntMatrix, tags: Vec<Vec<Tag>>) -> Self {
        MatrixDoc {
            r: ws.order(),
            weights: ws.weights().to_vec(),
            size: entries.nrows(),
            order: "level-major".into(),
            entries: rows(entries),
            tags,
        }
    }

    pub fn matrix(&self) -> IntMatrix {
        IntMatrix::from_fn(self.size, self.size, |i, j| self.entries[i][j])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchDoc {
    pub row: usize,
    pub col: usize,
    pub formula: i128,
    pub tag: Tag,
    pub oracle: i128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonDoc {
    pub enumeration: MatrixDoc,
    pub formula: MatrixDoc,
    pub verdict: String,
    pub mismatches: Vec<MismatchDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictDoc {
    pub r: u64,
    pub lhs: Vec<u64>,
    pub rhs: Vec<u64>,
    pub isomorphic: bool,
    pub coprime_term: Option<CoprimeTerm>,
    pub congruences: Vec<Congruence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub r: u64,
    pub lhs: Vec<u64>,
    pub rhs: Vec<u64>,
    pub result: String,
    pub route: Option<Route>,
    pub u: Option<Vec<Vec<i128>>>,
    pub v: Option<Vec<Vec<i128>>>,
}

fn rows(m: &IntMatrix) -> Vec<Vec<i128>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn weights(r: u64, w: &[u64]) -> Result<WeightSystem, CliError> {
    Ok(WeightSystem::new(r, w)?)
}

fn tuple(w: &[u64]) -> String {
    format!("({})", w.iter().join(","))
}

fn grid(out: &mut String, cells: &[Vec<String>]) {
    let width = cells.iter().flatten().map(String::len).max().unwrap_or(1);
    for row in cells {
        let line = row.iter().map(|c| format!("{c:>width$}")).join(" ");
        let _ = writeln!(out, "{line}");
    }
}

fn matrix_plain(out: &mut String, title: &str, doc: &MatrixDoc) {
    let _ = writeln!(
        out,
        "{title}: r={} weights={} size={} order={}",
        doc.r,
        tuple(&doc.weights),
        doc.size,
        doc.order
    );
    let cells: Vec<Vec<String>> = doc
        .entries
        .iter()
        .map(|row| row.iter().map(i128::to_string).collect())
        .collect();
    grid(out, &cells);
    if doc.tags.iter().flatten().any(|&t| t == Tag::ModR) {
        let _ = writeln!(out, "tags (E = EXACT, M = MOD_R):");
        let cells: Vec<Vec<String>> = doc
            .tags
            .iter()
            .map(|row| {
                row.iter()
                    .map(|t| if *t == Tag::Exact { "E" } else { "M" }.to_string())
                    .collect()
            })
            .collect();
        grid(out, &cells);
    }
}

fn csv_text<F>(fill: F) -> Result<String, CliError>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<(), csv::Error>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    fill(&mut w)?;
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Render(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Render(e.to_string()))
}

fn matrix_csv(
    w: &mut csv::Writer<Vec<u8>>,
    source: &str,
    doc: &MatrixDoc,
) -> Result<(), csv::Error> {
    for (i, row) in doc.entries.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            w.write_record([
                source.to_string(),
                i.to_string(),
                j.to_string(),
                v.to_string(),
                doc.tags[i][j].to_string(),
            ])?;
        }
    }
    Ok(())
}

fn json(value: &impl Serialize) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn cmd_matrix(args: &MatrixArgs, format: Format) -> Result<Outcome, CliError> {
    let ws = weights(args.r, &args.weights)?;
    let enumerated = || {
        let m = adjacency_by_enumeration(&ws).a;
        let s = m.nrows();
        MatrixDoc::new(&ws, &m, vec![vec![Tag::Exact; s]; s])
    };
    let formula = || -> Result<(MatrixDoc, closedform::FormulaMatrix), CliError> {
        let f = closedform::closed_form(&ws)?;
        Ok((MatrixDoc::new(&ws, &f.values(), f.tags()), f))
    };
    match args.method {
        Method::Enum | Method::Formula => {
            let (title, doc) = if args.method == Method::Enum {
                ("enumeration", enumerated())
            } else {
                ("formula", formula()?.0)
            };
            let text = match format {
                Format::Json => json(&doc)?,
                Format::Plain => {
                    let mut s = String::new();
                    matrix_plain(&mut s, title, &doc);
                    s
                }
                Format::Csv => csv_text(|w| {
                    w.write_record(["source", "row", "col", "value", "tag"])?;
                    matrix_csv(w, title, &doc)
                })?,
            };
            Ok(Outcome::new(text, 0))
        }
        Method::Both => {
            let oracle = enumerated();
            let (fdoc, f) = formula()?;
            let mismatches: Vec<MismatchDoc> = f
                .mismatches(&oracle.matrix())
                .into_iter()
                .map(|m| MismatchDoc {
                    row: m.row,
                    col: m.col,
                    formula: m.formula.value,
                    tag: m.formula.tag,
                    oracle: m.oracle,
                })
                .collect();
            let verdict = if mismatches.is_empty() {
                "MATCH"
            } else {
                "MISMATCH"
            };
            let code = u8::from(!mismatches.is_empty());
            let doc = ComparisonDoc {
                enumeration: oracle,
                formula: fdoc,
                verdict: verdict.into(),
                mismatches,
            };
            let text = match format {
                Format::Json => json(&doc)?,
                Format::Plain => {
                    let mut s = String::new();
                    matrix_plain(&mut s, "enumeration", &doc.enumeration);
                    matrix_plain(&mut s, "formula", &doc.formula);
                    for m in &doc.mismatches {
                        let _ = writeln!(
                            s,
                            "entry ({}, {}): formula {} [{}], oracle {}",
                            m.row, m.col, m.formula, m.tag, m.oracle
                        );
                    }
                    let _ = writeln!(s, "{verdict}");
                    s
                }
                Format::Csv => csv_text(|w| {
                    w.write_record(["source", "row", "col", "value", "tag"])?;
                    matrix_csv(w, "enumeration", &doc.enumeration)?;
                    matrix_csv(w, "formula", &doc.formula)
                })?,
            };
            Ok(Outcome::new(text, code))
        }
    }
}

pub fn cmd_isomorphic(args: &PairArgs, format: Format) -> Result<Outcome, CliError> {
    let a = weights(args.r, &args.lhs)?;
    let b = weights(args.r, &args.rhs)?;
    let verdict = classify::isomorphic(&a, &b)?;
    let code = u8::from(!verdict.isomorphic);
    let doc = VerdictDoc {
        r: args.r,
        lhs: args.lhs.clone(),
        rhs: args.rhs.clone(),
        isomorphic: verdict.isomorphic,
        coprime_term: verdict.coprime_term,
        congruences: verdict.congruences,
    };
    let text = match format {
        Format::Json => json(&doc)?,
        Format::Plain => {
            let mut s = String::new();
            let _ = writeln!(s, "r={} {} vs {}", doc.r, tuple(&doc.lhs), tuple(&doc.rhs));
            if let Some(t) = &doc.coprime_term {
                let _ = writeln!(
                    s,
                    "mod-3 term: ratios {} and {}, value {} (mod r) {}",
                    t.ratio_lhs,
                    t.ratio_rhs,
                    t.value,
                    if t.holds { "ok" } else { "differs" }
                );
            }
            for c in &doc.congruences {
                let _ = writeln!(
                    s,
                    "weight {}: {} vs {} (mod {}) {}",
                    c.index,
                    c.lhs,
                    c.rhs,
                    c.modulus,
                    if c.holds { "ok" } else { "differs" }
                );
            }
            let _ = writeln!(
                s,
                "{}",
                if doc.isomorphic {
                    "ISOMORPHIC"
                } else {
                    "NOT_ISOMORPHIC"
                }
            );
            s
        }
        Format::Csv => csv_text(|w| {
            w.write_record(["term", "index", "lhs", "rhs", "modulus", "holds"])?;
            if let Some(t) = &doc.coprime_term {
                w.write_record([
                    "mod3".to_string(),
                    String::new(),
                    t.ratio_lhs.to_string(),
                    t.ratio_rhs.to_string(),
                    args.r.to_string(),
                    t.holds.to_string(),
                ])?;
            }
            for c in &doc.congruences {
                w.write_record([
                    "congruence".to_string(),
                    c.index.to_string(),
                    c.lhs.to_string(),
                    c.rhs.to_string(),
                    c.modulus.to_string(),
                    c.holds.to_string(),
                ])?;
            }
            w.write_record([
                "isomorphic".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                doc.isomorphic.to_string(),
            ])
        })?,
    };
    Ok(Outcome::new(text, code))
}

pub fn cmd_classes(args: &ClassesArgs, format: Format) -> Result<Outcome, CliError> {
    let (n, position) = if args.coprime {
        (1, None)
    } else {
        match (args.n, args.position) {
            (Some(n), Some(p)) => (n, Some(p)),
            _ => {
                return Err(CliError::Invalid(
                    "give --n and --position, or --coprime".into(),
                ))
            }
        }
    };
    let report = match classify::enumerate_classes(args.r, n, args.dim, position) {
        Ok(rep) => rep,
        Err(
            e @ (ClassifyError::CountMismatch { .. } | ClassifyError::InconsistentCanonical(..)),
        ) => return Err(CliError::Check(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let text = match format {
        Format::Json => json(&report)?,
        Format::Plain => classes_plain(&report),
        Format::Csv => csv_text(|w| {
            w.write_record([
                "r",
                "n",
                "dim",
                "position",
                "class_index",
                "representative",
                "members",
            ])?;
            for (i, c) in report.classes.iter().enumerate() {
                w.write_record([
                    report.r.to_string(),
                    report.n.to_string(),
                    report.dim.to_string(),
                    report
                        .position
                        .map_or_else(|| "coprime".into(), |p| p.to_string()),
                    i.to_string(),
                    tuple(&c.representative),
                    c.members.len().to_string(),
                ])?;
            }
            Ok(())
        })?,
    };
    Ok(Outcome::new(text, 0))
}

fn classes_plain(report: &ClassReport) -> String {
    let mut s = String::new();
    let position = report
        .position
        .map_or_else(|| "coprime".into(), |p| format!("position {p}"));
    let _ = writeln!(
        s,
        "r={} n={} dim={} {}: classes {} (predicted {})",
        report.r,
        report.n,
        report.dim,
        position,
        report.classes.len(),
        report.predicted_count
    );
    for (i, c) in report.classes.iter().enumerate() {
        let _ = writeln!(
            s,
            "{i}: {} ({} tuples)",
            tuple(&c.representative),
            c.members.len()
        );
    }
    s
}

pub fn cmd_certificate(args: &CertificateArgs, format: Format) -> Result<Outcome, CliError> {
    let p = &args.pair;
    let a = weights(p.r, &p.lhs)?;
    let b = weights(p.r, &p.rhs)?;
    let verdict = classify::isomorphic(&a, &b)?;
    let mut doc = CertificateDoc {
        r: p.r,
        lhs: p.lhs.clone(),
        rhs: p.rhs.clone(),
        result: "NOT_ISOMORPHIC".into(),
        route: None,
        u: None,
        v: None,
    };
    let mut code = 1;
    if verdict.isomorphic {
        let ba = adjacency_by_enumeration(&a).b();
        let bb = adjacency_by_enumeration(&b).b();
        match slp::find_certificate(&ba, &bb, &a, &b, args.bound)? {
            Some((cert, route)) => {
                doc.result = "FOUND".into();
                doc.route = Some(route);
                doc.u = Some(rows(&cert.u));
                doc.v = Some(rows(&cert.v));
                code = 0;
            }
            None => doc.result = "NOT_FOUND".into(),
        }
    }
    let text = match format {
        Format::Json => json(&doc)?,
        Format::Plain => {
            let mut s = String::new();
            let _ = writeln!(s, "r={} {} -> {}", doc.r, tuple(&doc.lhs), tuple(&doc.rhs));
            if let (Some(u), Some(v), Some(route)) = (&doc.u, &doc.v, doc.route) {
                for (name, m) in [("U", u), ("V", v)] {
                    let _ = writeln!(s, "{name} =");
                    let cells: Vec<Vec<String>> = m
                        .iter()
                        .map(|r| r.iter().map(i128::to_string).collect())
                        .collect();
                    grid(&mut s, &cells);
                }
                let route = match route {
                    Route::Constructive => "constructive",
                    Route::BoundedSearch => "bounded search",
                };
                let _ = writeln!(s, "verified U B V = B' ({route})");
            } else {
                let _ = writeln!(s, "{}", doc.result);
            }
            s
        }
        Format::Csv => csv_text(|w| {
            w.write_record(["matrix", "row", "col", "value"])?;
            for (name, m) in [("U", &doc.u), ("V", &doc.v)] {
                for (i, row) in m.iter().flatten().enumerate() {
                    for (j, x) in row.iter().enumerate() {
                        w.write_record([
                            name.to_string(),
                            i.to_string(),
                            j.to_string(),
                            x.to_string(),
                        ])?;
                    }
                }
            }
            Ok(())
        })?,
    };
    Ok(Outcome::new(text, code))
}

pub fn cmd_verify(args: &VerifyArgs, format: Format) -> Result<Outcome, CliError> {
    if args.r_max < 2 {
        return Err(CliError::Invalid(format!(
            "empty sweep: --r-max must be at least 2, got {}",
            args.r_max
        )));
    }
    let suites: Vec<&str> = match &args.only {
        Some(s) => vec![s.as_str()],
        None => verify::SUITES.to_vec(),
    };
    let reports: Vec<SuiteReport> = suites
        .iter()
        .map(|s| verify::run_suite(s, args.r_max))
        .collect::<Result<_, _>>()?;
    let code = u8::from(!reports.iter().all(SuiteReport::passed));
    let text = match format {
        Format::Json => json(&reports)?,
        Format::Plain => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "{:<16} {:>10} {:>9}  status",
                "suite", "cases", "failures"
            );
            for rep in &reports {
                let status = if rep.passed() { "PASS" } else { "FAIL" };
                let _ = writeln!(
                    s,
                    "{:<16} {:>10} {:>9}  {status}",
                    rep.suite, rep.cases, rep.failures
                );
                if let Some(f) = &rep.first_failure {
                    let _ = writeln!(s, "  first failure: {f}");
                }
            }
            if args.only.is_some() {
                for rep in &reports {
                    for t in &rep.by_order {
                        let _ = writeln!(
                            s,
                            "  r={:<4} cases {:>8} failures {:>6}",
                            t.r, t.cases, t.failures
                        );
                    }
                }
            }
            s
        }
        Format::Csv => csv_text(|w| {
            w.write_record(["suite", "r", "cases", "failures"])?;
            for rep in &reports {
                for t in &rep.by_order {
                    w.write_record([
                        rep.suite.clone(),
                        t.r.to_string(),
                        t.cases.to_string(),
                        t.failures.to_string(),
                    ])?;
                }
            }
            Ok(())
        })?,
    };
    Ok(Outcome::new(text, code))
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Matrix(a) => cmd_matrix(a, cli.format),
        Command::Isomorphic(a) => cmd_isomorphic(a, cli.format),
        Command::Classes(a) => cmd_classes(a, cli.format),
        Command::Certificate(a) => cmd_certificate(a, cli.format),
        Command::Verify(a) => cmd_verify(a, cli.format),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("qlens").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn matrix_json_round_trips() {
        let cli = parse(&[
            "--format",
            "json",
            "matrix",
            "--r",
            "6",
            "--weights",
            "1,1,1,3",
        ]);
        let out = run(&cli).unwrap();
        let doc: MatrixDoc = serde_json::from_str(&out.text).unwrap();
        let ws = WeightSystem::new(6, &[1, 1, 1, 3]).unwrap();
        assert_eq!(doc.matrix(), adjacency_by_enumeration(&ws).a);
        assert_eq!(doc.order, "level-major");
    }

    #[test]
    fn classes_csv_header() {
        let cli = parse(&[
            "--format",
            "csv",
            "classes",
            "--r",
            "8",
            "--n",
            "4",
            "--dim",
            "5",
            "--position",
            "0",
        ]);
        let out = run(&cli).unwrap();
        let mut lines = out.text.lines();
        assert_eq!(
            lines.next(),
            Some("r,n,dim,position,class_index,representative,members")
        );
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn missing_pattern_is_invalid() {
        let cli = parse(&["classes", "--r", "8", "--dim", "5"]);
        assert_eq!(run(&cli).unwrap_err().exit_code(), 2);
    }
}
