//! `qsim`: searches for infinite qualitative simulations described by a
//! specification file and emits the found trace as text, JSON, or DOT.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use qsim_cli::emit::{self, TraceDocument};
use qsim_cli::spec;
use qsim_core::csp::SplitStrategy;
use qsim_core::engine::{simulate, verify_trace, Heuristic, Problem, SimError, Translation};

/// Exit statuses: 0 success, 1 unsatisfiable up to k_max (or failed
/// verification), 2 specification/usage errors, 3 budget exceeded.
#[derive(Parser)]
#[command(name = "qsim", version, about)]
struct Args {
    /// Problem specification file.
    #[arg(long)]
    spec: PathBuf,

    /// Smallest path bound to try (default 1, or the spec's `k_min`).
    #[arg(long)]
    k_min: Option<usize>,

    /// Largest path bound to try (default 30, or the spec's `k_max`).
    #[arg(long)]
    k_max: Option<usize>,

    /// Temporal translation variant.
    #[arg(long, value_parser = ["unravel", "array"])]
    translation: Option<String>,

    /// Branching heuristic: `first-fail`, or `subclass:FILE` where FILE
    /// lists one relation set per line (relation names, whitespace-split).
    #[arg(long, default_value = "first-fail")]
    heuristic: String,

    /// Accept paths without a loop (the simulation then terminates).
    #[arg(long)]
    allow_finite_path: bool,

    /// Output format for the found trace.
    #[arg(long, value_parser = ["text", "json", "dot"], default_value = "text")]
    format: String,

    /// Write the trace here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for randomized orderings.  The bundled strategies are
    /// deterministic, so this is accepted but has no effect on them.
    #[arg(long)]
    seed: Option<u64>,

    /// Verify a stored JSON trace against the spec instead of solving.
    #[arg(long, value_name = "TRACE")]
    verify_only: Option<PathBuf>,

    /// Abort the search after this many search nodes.
    #[arg(long)]
    max_nodes: Option<u64>,

    /// Time budget per path bound, in milliseconds.
    #[arg(long)]
    per_k_budget_ms: Option<u64>,

    /// Total time budget, in milliseconds.
    #[arg(long)]
    global_budget_ms: Option<u64>,
}

fn fail(code: u8, prefix: &str, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {prefix}: {message}");
    ExitCode::from(code)
}

fn load_problem(args: &Args) -> Result<Problem, ExitCode> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| fail(2, "io", format!("{}: {e}", args.spec.display())))?;
    let doc = spec::parse(&text)
        .map_err(|e| fail(2, "spec", format!("{}: {e}", args.spec.display())))?;
    let mut problem = doc.problem;
    doc.options.apply(&mut problem.options);

    let o = &mut problem.options;
    if let Some(v) = args.k_min {
        o.k_min = v;
    }
    if let Some(v) = args.k_max {
        o.k_max = v;
    }
    match args.translation.as_deref() {
        Some("unravel") => o.translation = Translation::Unravel,
        Some("array") => o.translation = Translation::Array,
        _ => {}
    }
    if args.allow_finite_path {
        o.allow_finite_path = true;
    }
    if let Some(v) = args.max_nodes {
        o.max_nodes = Some(v);
    }
    if let Some(v) = args.per_k_budget_ms {
        o.per_k_time_budget = Some(Duration::from_millis(v));
    }
    if let Some(v) = args.global_budget_ms {
        o.global_time_budget = Some(Duration::from_millis(v));
    }
    problem.options.heuristic = parse_heuristic(&args.heuristic, &problem)?;
    Ok(problem)
}

fn parse_heuristic(value: &str, problem: &Problem) -> Result<Heuristic, ExitCode> {
    if value == "first-fail" {
        return Ok(Heuristic::FirstFail);
    }
    let Some(path) = value.strip_prefix("subclass:") else {
        return Err(fail(
            2,
            "usage",
            format!("bad --heuristic '{value}' (want 'first-fail' or 'subclass:FILE')"),
        ));
    };
    let text = std::fs::read_to_string(path).map_err(|e| fail(2, "io", format!("{path}: {e}")))?;
    // Relation names are resolved against the first declared calculus that
    // knows all of them.
    let mut last_err = "no aspects declared".to_string();
    for (_, cal) in problem.vocab.aspects() {
        match SplitStrategy::subclass_from_file(&text, |name| cal.relation_id(name)) {
            Ok(SplitStrategy::Subclass { family }) => return Ok(Heuristic::Subclass { family }),
            Ok(_) => unreachable!("subclass_from_file returns Subclass"),
            Err(e) => last_err = e,
        }
    }
    Err(fail(2, "spec", format!("{path}: {last_err}")))
}

fn emit(args: &Args, trace: &qsim_core::engine::SimulationTrace) -> Result<(), ExitCode> {
    let rendered = match args.format.as_str() {
        "json" => emit::json(trace),
        "dot" => emit::dot(trace),
        _ => emit::text(trace),
    };
    match &args.out {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| fail(2, "io", format!("{}: {e}", path.display()))),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

fn verify_only(args: &Args, path: &PathBuf) -> ExitCode {
    let problem = match load_problem(args) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(2, "io", format!("{}: {e}", path.display())),
    };
    let doc: TraceDocument = match serde_json::from_str(&text) {
        Ok(d) => d,
        Err(e) => return fail(2, "trace", format!("{}: {e}", path.display())),
    };
    if doc.version != "v1" {
        return fail(2, "trace", format!("unsupported version '{}'", doc.version));
    }
    let report = verify_trace(&problem, &doc.trace);
    if report.passed() {
        println!("verdict: pass");
        ExitCode::SUCCESS
    } else {
        println!("verdict: fail");
        print!("{report}");
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(path) = args.verify_only.clone() {
        return verify_only(&args, &path);
    }
    let problem = match load_problem(&args) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match simulate(&problem) {
        Ok(trace) => {
            eprintln!(
                "found simulation: k = {}, loop start = {}",
                trace.k,
                trace
                    .loop_start
                    .map_or("none".to_string(), |l| l.to_string())
            );
            match emit(&args, &trace) {
                Ok(()) => ExitCode::SUCCESS,
                Err(code) => code,
            }
        }
        Err(e @ SimError::Invalid(_)) => fail(2, "spec", e),
        Err(e @ SimError::UnsatUpTo { .. }) => fail(1, "unsat", e),
        Err(e @ SimError::BudgetExceeded { .. }) => fail(3, "budget", e),
        Err(e @ SimError::VerificationFailed(_)) => fail(1, "verify", e),
    }
}
