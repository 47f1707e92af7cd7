use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use treeword::delta::{density_sweep, write_sweep_csv};
use treeword::dsl::{parse_instance, InstanceSpec};
use treeword::search::ThresholdOutcome;
use treeword::semigroup::{verify_minimal_lift_exhaustive, verify_minimal_lift_table, FiniteSemigroup, LiftVerificationReport};
use treeword::tree::{enumerate_regressive_homs, Node, RootedTree, DEFAULT_HOM_LIMIT};
use treeword::witness::{run_instance, verify_witness, Outcome, VerifyReport, WitnessFile, WitnessKind};

#[derive(Parser)]
#[command(name = "treeword", version, about = "Block-sequence search, thresholds and certificates over tree-indexed words")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Recorded in witness files; the engines themselves are deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(clap::Args)]
struct Overrides {
    /// Instance file.
    instance: PathBuf,
    #[arg(long)]
    bound: Option<u64>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    colors: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// List the regressive homomorphisms of a tree.
    EnumerateHoms {
        /// Parent list of nodes 1.., e.g. "[0,1]" or "0 1".
        #[arg(long)]
        tree: String,
    },
    /// Search for a block sequence with monochromatic combinations.
    Search(Overrides),
    /// Check a witness file from scratch.
    Verify { witness: PathBuf },
    /// Least bound at which every coloring admits a witness.
    Threshold(Overrides),
    /// Search for blocks whose combination sums land in A - A.
    DeltaScan {
        #[command(flatten)]
        overrides: Overrides,
        /// Also write the per-box density sweep as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check the minimal idempotent lift on every triple of small semigroups.
    SemigroupVerify {
        /// Largest table order scanned exhaustively.
        #[arg(long)]
        bound: Option<usize>,
        /// A single Cayley table to check instead (grid or JSON rows).
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

/// Success, nothing found, or failure; mapped to exit codes 0, 2 and 1.
enum Status {
    Ok,
    NotFound,
    Failed,
}

struct Output {
    json: String,
    text: String,
    status: Status,
}

fn output<T: Serialize>(value: &T, text: String, status: Status) -> Result<Output, String> {
    let json = serde_json::to_string_pretty(value).map_err(|e| e.to_string())? + "\n";
    Ok(Output { json, text, status })
}

fn parse_parents(text: &str) -> Result<Vec<Node>, String> {
    let inner = text.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("bad parent '{s}'")))
        .collect()
}

#[derive(Serialize)]
struct HomListing {
    tree: Vec<Node>,
    count: usize,
    homs: Vec<HomEntry>,
}

#[derive(Serialize)]
struct HomEntry {
    image: Vec<Node>,
    order_preserving: bool,
}

fn enumerate_homs(tree: &str) -> Result<Output, String> {
    let parents = parse_parents(tree)?;
    let t = Arc::new(RootedTree::from_parents(&parents).map_err(|e| e.to_string())?);
    let homs = enumerate_regressive_homs(&t, DEFAULT_HOM_LIMIT).map_err(|e| e.to_string())?;
    let listing = HomListing {
        tree: parents,
        count: homs.len(),
        homs: homs
            .iter()
            .map(|h| HomEntry { image: h.image().to_vec(), order_preserving: h.is_order_preserving() })
            .collect(),
    };
    let mut text = format!("{} regressive homomorphisms\n", listing.count);
    for h in &listing.homs {
        let _ = writeln!(text, "{:?}{}", h.image, if h.order_preserving { "" } else { "  (not order-preserving)" });
    }
    output(&listing, text, Status::Ok)
}

fn load_instance(o: &Overrides) -> Result<(InstanceSpec, PathBuf), String> {
    let text = fs::read_to_string(&o.instance).map_err(|e| format!("{}: {e}", o.instance.display()))?;
    let mut spec = parse_instance(&text).map_err(|e| format!("{}: {e}", o.instance.display()))?;
    if let Some(b) = o.bound {
        spec.bound = b;
    }
    if let Some(b) = o.blocks {
        spec.blocks = b;
    }
    if let Some(c) = o.colors {
        if c == 0 {
            return Err("--colors must be positive".into());
        }
        spec.colors = c;
    }
    let base = o.instance.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    Ok((spec, base))
}

/// The serialized name of a unit enum variant.
fn tag<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_value(value).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

fn witness_text(w: &WitnessFile) -> String {
    let mut text = format!("{} {}\ninstance digest {}\n", tag(&w.kind), tag(&w.verdict), w.instance_digest);
    if let Some(blocks) = &w.blocks {
        for (f, steps) in blocks.iter().enumerate() {
            for (n, row) in steps.iter().enumerate() {
                let _ = writeln!(text, "factor {f} block {n}: {}", row[1..].join("  "));
            }
        }
    }
    if let Some(c) = &w.coverage {
        let _ = writeln!(text, "{} combinations in {} groups, coverage hash {}", c.combinations, c.groups.len(), c.hash);
    }
    if let Some(n) = w.nodes {
        let _ = writeln!(text, "nothing within the bound after {n} nodes");
    }
    if let Some(t) = &w.threshold {
        for c in t.certificates() {
            let _ = writeln!(
                text,
                "bound {}: universe {}, {} patterns, {}",
                c.bound,
                c.universe,
                c.patterns,
                match &c.avoiding {
                    Some(col) => format!("avoided by {col:?}"),
                    None => "every coloring has a witness".into(),
                }
            );
        }
        match t {
            ThresholdOutcome::Certified { bound, .. } => {
                let _ = writeln!(text, "threshold {bound}");
            }
            ThresholdOutcome::Unknown { max_bound, .. } => {
                let _ = writeln!(text, "threshold above {max_bound}");
            }
        }
    }
    if let Some(d) = &w.delta {
        let _ = writeln!(text, "window density {}", d.window_density);
        if let Some(s) = &d.sweep {
            let _ = writeln!(text, "best box of side {:?}: density {} at {:?}", s.side, s.best.density, s.best.lo);
        }
        if let Some(r) = &d.report {
            let _ = writeln!(text, "{} of {} combinations in A - A", r.passed, r.combinations);
        }
        for warning in &d.warnings {
            let _ = writeln!(text, "warning: {warning}");
        }
    }
    text
}

fn run(o: &Overrides, kind: WitnessKind, seed: u64, csv: Option<&Path>) -> Result<Output, String> {
    let (spec, base) = load_instance(o)?;
    let w = run_instance(&spec, kind, seed, &base).map_err(|e| e.to_string())?;
    if let Some(path) = csv {
        let built = spec.inline_files(&base).and_then(|s| s.build(&base)).map_err(|e| e.to_string())?;
        let setup = built.delta.ok_or("no [delta] section")?;
        if setup.sweep.is_empty() {
            return Err("--csv needs a sweep side in the [delta] section".into());
        }
        let sweep = density_sweep(&setup.scene, &setup.sweep).map_err(|e| e.to_string())?;
        let mut file = io::BufWriter::new(fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?);
        write_sweep_csv(&sweep, &mut file).and_then(|()| file.flush()).map_err(|e| e.to_string())?;
    }
    let status = match w.verdict {
        Outcome::Found | Outcome::Certified => Status::Ok,
        Outcome::Exhausted | Outcome::Unknown => Status::NotFound,
    };
    output(&w, witness_text(&w), status)
}

fn verify(path: &Path) -> Result<Output, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let file: WitnessFile = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let report: VerifyReport = verify_witness(&file).map_err(|e| e.to_string())?;
    let mut out = String::new();
    match &report.failure {
        None => {
            let _ = writeln!(out, "verified: {}", report.checks.join(", "));
        }
        Some(reason) => {
            let _ = writeln!(out, "FAILED: {reason}");
            for line in &report.violation {
                let _ = writeln!(out, "  {line}");
                eprintln!("violating combination: {line}");
            }
        }
    }
    let status = if report.ok { Status::Ok } else { Status::Failed };
    output(&report, out, status)
}

fn semigroup_verify(bound: Option<usize>, table: Option<&Path>) -> Result<Output, String> {
    let report: LiftVerificationReport = match (table, bound) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let s = FiniteSemigroup::parse_table(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            verify_minimal_lift_table(&s)
        }
        (None, Some(n)) if n > 3 => return Err(format!("order {n} is too large to scan every table; use --table")),
        (None, bound) => verify_minimal_lift_exhaustive(bound.unwrap_or(3)),
    };
    let mut text = format!(
        "{} tables, {} associative, {} triples, {} counterexamples\n",
        report.tables_scanned,
        report.associative_tables,
        report.triples_checked,
        report.counterexamples.len()
    );
    for c in &report.counterexamples {
        let _ = writeln!(text, "  table {:?} A {:?} B {:?} b {}: {}", c.table, c.a, c.b_set, c.b, c.reason);
    }
    let status = if report.verified { Status::Ok } else { Status::Failed };
    output(&report, text, status)
}

fn dispatch(cli: &Cli) -> Result<Output, String> {
    match &cli.command {
        Command::EnumerateHoms { tree } => enumerate_homs(tree),
        Command::Search(o) => run(o, WitnessKind::Search, cli.seed, None),
        Command::Threshold(o) => run(o, WitnessKind::Threshold, cli.seed, None),
        Command::DeltaScan { overrides, csv } => run(overrides, WitnessKind::DeltaScan, cli.seed, csv.as_deref()),
        Command::Verify { witness } => verify(witness),
        Command::SemigroupVerify { bound, table } => semigroup_verify(*bound, table.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let out = match dispatch(&cli) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let body = match cli.format {
        Format::Json => &out.json,
        Format::Text => &out.text,
    };
    let written = match &cli.out {
        Some(path) => fs::write(path, body).map_err(|e| format!("{}: {e}", path.display())),
        None => io::stdout().write_all(body.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match out.status {
        Status::Ok => ExitCode::SUCCESS,
        Status::NotFound => ExitCode::from(2),
        Status::Failed => ExitCode::from(1),
    }
}
