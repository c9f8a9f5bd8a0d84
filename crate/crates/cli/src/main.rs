//! Command line front end for the model checker.
//!
//! Verdict lines are stable: one line per query, starting with
//! `SATISFIED` or `NOT SATISFIED`, followed by the query and the search
//! statistics. Everything else on standard output is prefixed with `#`.
//! Exit codes: 0 when every query is satisfied, 1 when at least one is
//! not, 2 on any error (unreadable files, parse errors, exhausted state
//! budget, bad flags).

use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tamc::verify::{check, simulate, Options};
use tamc::{
    load_model, model_text, parse_queries, queries_text, Network, Query, MODEL_NAMES,
};

#[derive(Parser)]
#[command(
    name = "tamc",
    version,
    about = "Zone-based model checker for networks of timed automata"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check every query in a .tq file against a model.
    Check(CheckArgs),
    /// Run one seeded concrete simulation, printing the trace as JSON.
    Simulate(SimulateArgs),
    /// Print the arrival-time table (closed form vs. simulation) as CSV.
    Timing(TimingArgs),
    /// List the built-in models or write one to disk.
    Models {
        #[command(subcommand)]
        cmd: ModelsCmd,
    },
}

#[derive(Args)]
struct CheckArgs {
    /// Model file (.tam).
    model: PathBuf,
    /// Query file (.tq), one query per line.
    queries: PathBuf,
    /// Write the verdicts, including witness traces, as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Maximum number of symbolic states to store.
    #[arg(long, default_value_t = tamc::DEFAULT_BUDGET)]
    budget: usize,
    /// Worker threads for successor computation. Verdicts do not depend
    /// on this.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct SimulateArgs {
    /// Model file (.tam).
    model: PathBuf,
    /// Random seed; equal seeds give byte-identical traces.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of transitions to attempt.
    #[arg(long, default_value_t = 50)]
    steps: usize,
}

#[derive(Args)]
struct TimingArgs {
    /// Per-hop transfer time.
    #[arg(long)]
    zeta: i64,
    /// Hold time at an occupied entry buffer.
    #[arg(long)]
    theta: i64,
    /// Inclusive iteration range `a..b`; an empty range gives a
    /// header-only table.
    #[arg(long)]
    alphas: String,
}

#[derive(Subcommand)]
enum ModelsCmd {
    /// Print the model names, one per line.
    List,
    /// Write <name>.tam and <name>.tq into a directory.
    Emit { name: String, dir: PathBuf },
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Check(args) => cmd_check(&args),
        Cmd::Simulate(args) => cmd_simulate(&args),
        Cmd::Timing(args) => cmd_timing(&args),
        Cmd::Models { cmd } => cmd_models(&cmd),
    }
}

fn read(path: &Path) -> Result<String, ExitCode> {
    fs::read_to_string(path).map_err(|e| {
        eprintln!("{}: {}", path.display(), e);
        ExitCode::from(2)
    })
}

fn load(path: &Path) -> Result<Network, ExitCode> {
    let text = read(path)?;
    load_model(&text).map_err(|diags| {
        for d in diags {
            eprintln!("{}:{}", path.display(), d);
        }
        ExitCode::from(2)
    })
}

fn cmd_check(args: &CheckArgs) -> ExitCode {
    let net = match load(&args.model) {
        Ok(n) => n,
        Err(code) => return code,
    };
    let qtext = match read(&args.queries) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let queries = match parse_queries(&qtext, &net.system) {
        Ok(qs) => qs,
        Err(diags) => {
            for d in diags {
                eprintln!("{}:{}", args.queries.display(), d);
            }
            return ExitCode::from(2);
        }
    };
    let opts = Options {
        budget: args.budget,
        jobs: args.jobs.max(1),
    };
    let mut verdicts = Vec::with_capacity(queries.len());
    for q in &queries {
        match check(&net, q, &opts) {
            Ok(v) => verdicts.push(v),
            Err(e) => {
                eprintln!("{}: {}", args.model.display(), e);
                return ExitCode::from(2);
            }
        }
    }
    for v in &verdicts {
        let verdict = if v.satisfied { "SATISFIED" } else { "NOT SATISFIED" };
        let mut stats = format!(
            "explored={}, stored={}",
            v.stats.explored, v.stats.stored
        );
        if let Some(t) = &v.min_time {
            stats.push_str(&format!(", min_time={}", t));
        }
        println!("{}  {}  ({})", verdict, v.query, stats);
    }
    if queries.iter().any(|q| matches!(q, Query::LeadsTo(_, _))) {
        println!("# leads-to is judged over all runs, zeno runs included");
    }
    if let Some(path) = &args.trace {
        let json = serde_json::to_string_pretty(&verdicts).expect("verdicts serialize");
        if let Err(e) = fs::write(path, json + "\n") {
            eprintln!("{}: {}", path.display(), e);
            return ExitCode::from(2);
        }
    }
    if verdicts.iter().all(|v| v.satisfied) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_simulate(args: &SimulateArgs) -> ExitCode {
    let net = match load(&args.model) {
        Ok(n) => n,
        Err(code) => return code,
    };
    match simulate(&net, args.seed, args.steps) {
        Ok(report) => {
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            println!("{}", json);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}: {}", args.model.display(), e);
            ExitCode::from(2)
        }
    }
}

fn cmd_timing(args: &TimingArgs) -> ExitCode {
    if args.zeta < 0 || args.theta < 0 {
        eprintln!("timing parameters must be non-negative");
        return ExitCode::from(2);
    }
    let alphas = match parse_alpha_range(&args.alphas) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("--alphas {}: {}", args.alphas, msg);
            return ExitCode::from(2);
        }
    };
    print!("{}", tamc::timing_table(args.zeta, args.theta, &alphas));
    ExitCode::SUCCESS
}

/// Inclusive `a..b`. An empty string, or a start past the end, is the
/// empty range.
fn parse_alpha_range(text: &str) -> Result<Vec<i64>, String> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| "expected a..b".to_string())?;
    let lo: i64 = a.trim().parse().map_err(|_| format!("bad start '{}'", a))?;
    let hi: i64 = b.trim().parse().map_err(|_| format!("bad end '{}'", b))?;
    if lo < 0 || hi < 0 {
        return Err("iteration indices must be non-negative".to_string());
    }
    Ok((lo..=hi).collect())
}

fn cmd_models(cmd: &ModelsCmd) -> ExitCode {
    match cmd {
        ModelsCmd::List => {
            for name in MODEL_NAMES {
                println!("{}", name);
            }
            ExitCode::SUCCESS
        }
        ModelsCmd::Emit { name, dir } => {
            let (model, queries) = match (model_text(name), queries_text(name)) {
                (Some(m), Some(q)) => (m, q),
                _ => {
                    eprintln!("unknown model '{}'; see 'tamc models list'", name);
                    return ExitCode::from(2);
                }
            };
            if let Err(e) = fs::create_dir_all(dir) {
                eprintln!("{}: {}", dir.display(), e);
                return ExitCode::from(2);
            }
            let tam = dir.join(format!("{}.tam", name));
            let tq = dir.join(format!("{}.tq", name));
            for (path, content) in [(&tam, model.as_str()), (&tq, queries)] {
                if let Err(e) = fs::write(path, content) {
                    eprintln!("{}: {}", path.display(), e);
                    return ExitCode::from(2);
                }
            }
            println!("{}", tam.display());
            println!("{}", tq.display());
            ExitCode::SUCCESS
        }
    }
}
