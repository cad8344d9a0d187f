//! The `supsat` command line.
//!
//! `supsat check FILE` analyzes one scheme file and prints the verdict —
//! the first stdout line is exactly `UNBOUNDED`, `BOUNDED`, or `UNKNOWN` —
//! followed by a short report (or a single JSON object with `--json`).
//! `supsat bench DIR` runs every `.hors` file in a directory across all
//! eight combinations of the optimization flags and prints a grid of
//! verdicts and wall times.
//!
//! Exit codes: 0 completed analysis, 3 input error, 4 timeout, 5 verdict
//! mismatch under `--expect`.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use supsat_core::oracle::{oracle_unbounded_evidence, Evidence};
use supsat_core::report::{
    derivation_dump, dot_graph, flow_dump, oracle_csv, run_report,
};
use supsat_core::saturation::Options;
use supsat_core::types::Letters;
use supsat_core::verdict::Analysis;
use supsat_core::{analyze, letters_for, parse_scheme, Outcome, Scheme};

#[derive(Parser)]
#[command(
    name = "supsat",
    about = "Simultaneous-unboundedness checker for higher-order recursion schemes"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analyze one scheme file.
    Check(CheckArgs),
    /// Run every .hors file in a directory across the 8-flag grid.
    Bench(BenchArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Scheme file to analyze.
    file: PathBuf,
    /// Comma-separated important letters, overriding the file's own list.
    #[arg(long, value_delimiter = ',')]
    letters: Option<Vec<String>>,
    /// Disable the new-pair retyping constraint (also accepted as -noftty).
    #[arg(long)]
    noftty: bool,
    /// Disable the new-binding retyping constraint (also -nofntty).
    #[arg(long)]
    nofntty: bool,
    /// Disable demand-mode typing of head-variable-free rules (also -nohvo).
    #[arg(long)]
    nohvo: bool,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 600)]
    timeout: u64,
    /// Also expand the scheme's tree and hunt for confirming branches.
    #[arg(long)]
    oracle: bool,
    /// Depth budget for the expansion oracle.
    #[arg(long, default_value_t = 200)]
    oracle_depth: u32,
    /// Min-letter count at which the oracle calls a branch confirming.
    #[arg(long, default_value_t = 5)]
    oracle_threshold: u32,
    /// Print one JSON object instead of the human report.
    #[arg(long)]
    json: bool,
    /// Exit 5 unless the verdict matches.
    #[arg(long, value_enum)]
    expect: Option<ExpectArg>,
    /// Print every derivation record.
    #[arg(long)]
    dump_derivations: bool,
    /// Print the derivation graph in DOT form.
    #[arg(long)]
    dump_graph: bool,
    /// Print the flow table (which terms reach which parameters).
    #[arg(long)]
    dump_flows: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory holding .hors files (with optional .expect sidecars).
    dir: PathBuf,
    /// Wall-clock limit in seconds, per run.
    #[arg(long, default_value_t = 600)]
    timeout: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExpectArg {
    Unbounded,
    Bounded,
    Unknown,
}

impl ExpectArg {
    fn outcome(self) -> Outcome {
        match self {
            ExpectArg::Unbounded => Outcome::Unbounded,
            ExpectArg::Bounded => Outcome::Bounded,
            ExpectArg::Unknown => Outcome::Unknown,
        }
    }
}

/// Accept the single-dash spellings -noftty, -nofntty, -nohvo.
fn preprocess(args: Vec<String>) -> Vec<String> {
    args.into_iter()
        .map(|a| match a.as_str() {
            "-noftty" | "-nofntty" | "-nohvo" => format!("-{a}"),
            _ => a,
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse_from(preprocess(std::env::args().collect()));
    let code = match cli.cmd {
        Cmd::Check(a) => cmd_check(&a),
        Cmd::Bench(a) => cmd_bench(&a),
    };
    ExitCode::from(code)
}

fn load(
    file: &PathBuf,
    letter_override: Option<&[String]>,
) -> Result<(Scheme, Letters), String> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| format!("{}: {e}", file.display()))?;
    let scheme = parse_scheme(&text)
        .map_err(|e| format!("{}:{e}", file.display()))?;
    let letters = letters_for(&scheme, letter_override)?;
    Ok((scheme, letters))
}

fn options_for(noftty: bool, nofntty: bool, nohvo: bool, timeout: u64) -> Options {
    Options {
        ftty: !noftty,
        fntty: !nofntty,
        hvo: !nohvo,
        deadline: Some(Instant::now() + Duration::from_secs(timeout)),
        ..Options::default()
    }
}

/// Write the finished output. A reader that hung up early (e.g. `| head`)
/// is not an error worth dying over; the exit code still stands.
fn write_stdout(s: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(s.as_bytes());
    let _ = out.flush();
}

fn cmd_check(a: &CheckArgs) -> u8 {
    let (scheme, letters) = match load(&a.file, a.letters.as_deref()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{e}");
            return 3;
        }
    };
    let options = options_for(a.noftty, a.nofntty, a.nohvo, a.timeout);
    let an = match analyze(&scheme, &letters, &options) {
        Ok(an) => an,
        Err(e) => {
            eprintln!("{e}");
            return 4;
        }
    };
    let evidence = a.oracle.then(|| {
        oracle_unbounded_evidence(&scheme, &letters, a.oracle_depth, a.oracle_threshold)
    });

    if a.json {
        write_stdout(&json_output(&scheme, &letters, &an, evidence.as_ref(), a));
    } else {
        write_stdout(&human_output(&scheme, &letters, &an, evidence.as_ref(), a));
    }

    if let Some(expect) = a.expect {
        if expect.outcome() != an.verdict.outcome {
            eprintln!(
                "expected {}, got {}",
                expect.outcome(),
                an.verdict.outcome
            );
            return 5;
        }
    }
    0
}

fn human_output(
    scheme: &Scheme,
    letters: &Letters,
    an: &Analysis,
    evidence: Option<&Evidence>,
    a: &CheckArgs,
) -> String {
    let report = run_report(scheme, letters, an, evidence);
    let mut out = String::new();
    let _ = writeln!(out, "{}", an.verdict.outcome);
    let _ = writeln!(out, "safe: {}", if report.safe { "yes" } else { "no" });
    let _ = writeln!(
        out,
        "homogeneous: {}",
        if report.homogeneous { "yes" } else { "no" }
    );
    let _ = writeln!(out, "letters: {}", report.letters.join(", "));
    let st = &report.stats;
    let _ = writeln!(
        out,
        "bindings: {}  edges: {}  productive edges: {}  iterations: {}  time: {} ms",
        st.bindings, st.edges, st.productive_edges, st.iterations, st.ms
    );
    if let Some(w) = &report.witness {
        let _ = writeln!(out, "witness path:");
        for line in &w.path {
            let _ = writeln!(out, "  {line}");
        }
        let _ = writeln!(out, "witness cycle:");
        for line in &w.cycle {
            let _ = writeln!(out, "  {line}");
        }
    }
    if let Some(ev) = evidence {
        let _ = writeln!(
            out,
            "oracle: {} (best min-letter count {} at depth {})",
            if ev.confirmed { "confirmed" } else { "not confirmed" },
            ev.max_f,
            ev.depth
        );
        out.push_str(&oracle_csv(ev));
    }
    if a.dump_flows {
        let _ = writeln!(out, "flows:");
        for line in flow_dump(scheme, an) {
            let _ = writeln!(out, "  {line}");
        }
    }
    if a.dump_derivations {
        let _ = writeln!(out, "derivations:");
        for line in derivation_dump(scheme, letters, an) {
            let _ = writeln!(out, "  {line}");
        }
    }
    if a.dump_graph {
        out.push_str(&dot_graph(scheme, letters, an));
    }
    out
}

/// JSON mode keeps stdout to exactly one object; dumps go to stderr.
fn json_output(
    scheme: &Scheme,
    letters: &Letters,
    an: &Analysis,
    evidence: Option<&Evidence>,
    a: &CheckArgs,
) -> String {
    let report = run_report(scheme, letters, an, evidence);
    let mut out =
        serde_json::to_string(&report).expect("report serializes");
    out.push('\n');
    if a.dump_flows {
        for line in flow_dump(scheme, an) {
            eprintln!("{line}");
        }
    }
    if a.dump_derivations {
        for line in derivation_dump(scheme, letters, an) {
            eprintln!("{line}");
        }
    }
    if a.dump_graph {
        eprint!("{}", dot_graph(scheme, letters, an));
    }
    out
}

/// One cell of the benchmark grid.
enum Cell {
    Done(Outcome, u64),
    Timeout,
    Error,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Done(outcome, ms) => {
                let letter = match outcome {
                    Outcome::Unbounded => "U",
                    Outcome::Bounded => "B",
                    Outcome::Unknown => "?",
                };
                format!("{letter} {ms}ms")
            }
            Cell::Timeout => "TO".into(),
            Cell::Error => "ERR".into(),
        }
    }
}

/// The eight flag combinations, labeled by which flags are switched off:
/// f = -noftty, n = -nofntty, h = -nohvo.
const COMBOS: [(&str, bool, bool, bool); 8] = [
    ("base", false, false, false),
    ("f", true, false, false),
    ("n", false, true, false),
    ("h", false, false, true),
    ("fn", true, true, false),
    ("fh", true, false, true),
    ("nh", false, true, true),
    ("fnh", true, true, true),
];

fn cmd_bench(a: &BenchArgs) -> u8 {
    let mut files: Vec<PathBuf> = match std::fs::read_dir(&a.dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "hors"))
            .collect(),
        Err(e) => {
            eprintln!("{}: {e}", a.dir.display());
            return 3;
        }
    };
    files.sort();

    let mut out = String::from(
        "columns disable optimization flags: f = -noftty, n = -nofntty, h = -nohvo\n",
    );
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header: Vec<String> = vec!["scheme".into()];
    header.extend(COMBOS.iter().map(|c| c.0.to_string()));
    header.push("expect".into());
    rows.push(header);

    for file in &files {
        let stem = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| file.display().to_string());
        let mut row = vec![stem];
        let mut verdicts: Vec<Outcome> = Vec::new();
        for &(_, noftty, nofntty, nohvo) in &COMBOS {
            let cell = match load(file, None) {
                Err(_) => Cell::Error,
                Ok((scheme, letters)) => {
                    let options =
                        options_for(noftty, nofntty, nohvo, a.timeout);
                    let started = Instant::now();
                    match analyze(&scheme, &letters, &options) {
                        Ok(an) => {
                            verdicts.push(an.verdict.outcome);
                            Cell::Done(
                                an.verdict.outcome,
                                started.elapsed().as_millis() as u64,
                            )
                        }
                        Err(_) => Cell::Timeout,
                    }
                }
            };
            row.push(cell.render());
        }
        let sidecar = file.with_extension("expect");
        row.push(match std::fs::read_to_string(&sidecar) {
            Err(_) => "-".into(),
            Ok(text) => {
                let want = text.trim().to_string();
                let ok = verdicts
                    .iter()
                    .all(|v| v.as_str() == want);
                if ok && !verdicts.is_empty() {
                    format!("{want} ok")
                } else {
                    format!("{want} MISMATCH")
                }
            }
        });
        rows.push(row);
    }

    out.push_str(&render_grid(&rows));
    write_stdout(&out);
    0
}

fn render_grid(rows: &[Vec<String>]) -> String {
    let columns = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; columns];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, cell)| format!("{cell:<width$}", width = widths[i]))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}
