mod scenario;
mod suite;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use towerlab::checker::CheckReport;
use towerlab::trace::{compare_golden, Comparison, RunRecord, TraceHeader};

use scenario::{load_file, Construction, Overrides, Scenario, ScenarioError, ScenarioFile};

#[derive(Parser)]
#[command(name = "towerlab", version, about = "Stage-driven simulator for effective towers and families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a construction and its checks.
    Run(RunArgs),
    /// Re-check the family recorded in a trace.
    Check(CheckArgs),
    /// Print the exact true path of a pattern universe.
    Oracle(OracleArgs),
    /// Compare a trace with a golden trace record by record.
    Compare(CompareArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario file; flags below take precedence over it.
    scenario: Option<PathBuf>,
    #[arg(long)]
    construction: Option<Construction>,
    #[arg(long)]
    universe: Option<PathBuf>,
    #[arg(long)]
    stages: Option<u64>,
    #[arg(long)]
    depth: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    witness: Option<u64>,
    /// Generate a random universe instead of reading one.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Write the JSONL trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the JSON check report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Compare the trace with this golden file.
    #[arg(long)]
    golden: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Scenario file naming the universe.
    scenario: Option<PathBuf>,
    #[arg(long)]
    universe: Option<PathBuf>,
    /// Path length; defaults to one less than the scenario depth.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 256)]
    horizon: u64,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    golden: PathBuf,
}

enum Failure {
    Usage(String),
    Checks,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Check(a) => check(a),
        Command::Oracle(a) => oracle(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn resolve(c: Common, defaults: Option<&TraceHeader>) -> Result<Scenario, ScenarioError> {
    let mut file = match &c.scenario {
        Some(p) => load_file(p)?,
        None => ScenarioFile::default(),
    };
    let mut construction = None;
    if let Some(h) = defaults {
        construction = h.construction.parse().ok();
        file.stages = file.stages.or(Some(h.stages));
        if construction != Some(Construction::MadCe) {
            file.depth = file.depth.or(Some(h.depth));
        }
        file.window = file.window.or(Some(h.window));
    }
    Scenario::resolve(
        file,
        Overrides {
            construction: c.construction.or(construction),
            universe: c.universe,
            stages: c.stages,
            depth: c.depth,
            horizon: c.horizon,
            witness: c.witness,
            seed: c.seed,
        },
    )
}

/// Writes through a sibling temporary file so readers never see a partial file.
fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)
}

fn finish(
    s: &Scenario,
    reports: &[CheckReport],
    report_path: Option<&Path>,
    golden: Option<Comparison>,
) -> Result<(), Failure> {
    for r in reports {
        println!("{}", suite::summary_line(r));
    }
    let verdict = suite::overall(reports);
    let doc = json!({
        "construction": s.construction,
        "universe": s.universe_path,
        "seed": s.seed,
        "params": s.params,
        "verdict": verdict,
        "checks": reports,
        "golden": golden,
    });
    if let Some(p) = report_path {
        write_atomic(p, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    }
    let mut failed = !reports.iter().all(CheckReport::passed);
    if let Some(Comparison::FirstDivergence { index }) = golden {
        println!("golden: diverges at record {index}");
        failed = true;
    }
    if !failed {
        return Ok(());
    }
    for (i, r) in reports.iter().enumerate().filter(|(_, r)| !r.passed()) {
        let j = r.first_failure.unwrap_or(0);
        let at = report_path.map_or("(no report written)".to_string(), |p| {
            format!("{} at /checks/{i}/witnesses/{j}", p.display())
        });
        match r.witnesses.get(j) {
            Some(w) => eprintln!("{} failed: {} {:?} {:?}; see {at}", r.check, w.kind, w.indices, w.elements),
            None => eprintln!("{} failed; see {at}", r.check),
        }
    }
    Err(Failure::Checks)
}

fn run(a: RunArgs) -> Result<(), Failure> {
    let s = resolve(a.common, None)?;
    let u = s.universe()?;
    let out = suite::run(s.construction, &u, &s.params)?;
    let text = out.trace.to_jsonl();
    if let Some(p) = &a.trace {
        write_atomic(p, &text)?;
        if let Some(o) = &out.oracle {
            write_atomic(&p.with_extension("oracle.json"), &(serde_json::to_string_pretty(o)? + "\n"))?;
        }
    }
    let golden = match &a.golden {
        Some(g) => Some(compare_golden(&text, &scenario::read(g)?)),
        None => None,
    };
    finish(&s, &out.reports, a.report.as_deref(), golden)
}

fn check(a: CheckArgs) -> Result<(), Failure> {
    let text = scenario::read(&a.trace)?;
    let trace = RunRecord::from_jsonl(&text)?;
    let s = resolve(a.common, Some(&trace.header))?;
    let u = s.universe()?;
    let reports = suite::check_trace(&trace, &u, &s.params)?;
    finish(&s, &reports, a.report.as_deref(), None)
}

fn oracle(a: OracleArgs) -> Result<(), Failure> {
    let (universe, depth) = match &a.scenario {
        Some(p) => {
            let file = load_file(p)?;
            (a.universe.or(file.universe), file.depth.map(|d| d.saturating_sub(1) as usize))
        }
        None => (a.universe, None),
    };
    let path = universe.ok_or("no universe given (use --universe or a scenario file)")?;
    let text = scenario::read(&path)?;
    let u = towerlab::universe::Universe::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let r = suite::oracle(&u, a.depth.or(depth).unwrap_or(6), a.horizon)?;
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(())
}

fn compare(a: CompareArgs) -> Result<(), Failure> {
    let c = compare_golden(&scenario::read(&a.trace)?, &scenario::read(&a.golden)?);
    println!("{}", serde_json::to_string(&c)?);
    match c {
        Comparison::Pass => Ok(()),
        Comparison::FirstDivergence { .. } => Err(Failure::Checks),
    }
}
