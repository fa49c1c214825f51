//! `clslab`: solve, reduce, follow and verify instances from the command line.
//!
//! Exit status: 0 success, 1 verification failure, 2 degeneracy, 3 internal
//! invariant violation, 4 usage or parse error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use clslab::gen::{p_lcp_batch, DEFAULT_SEED};
use clslab::harness::{
    load_lcp_or_line, run_pipeline_plcp, run_reduce, run_verify, Failure, Loaded, ReduceKind, ReduceOutput, Status,
};
use clslab::lcp::{default_budget, is_p_matrix, lemke_solve_with, LcpInstance, LemkeOptions, PMatrixCheck, TieBreak};
use clslab::line::{enumerate_solutions, follow_line_with, LineInstance, MAX_TABLE_WIDTH};
use clslab::reduce::{eopl_sol_to_plcp, plcp_to_eopl, Reduced};

#[derive(Parser)]
#[command(name = "clslab", version, about = "Lemke paths, line problems, contraction problems and reductions")]
struct Cli {
    /// Read LCP files as `M` with the opposite sign (w = M z - q style).
    #[arg(long, global = true)]
    paper_sign: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Lemke's method on an LCP file.
    SolveLcp {
        file: PathBuf,
        /// Break ratio-test ties lexicographically instead of failing.
        #[arg(long)]
        lexicographic: bool,
        #[arg(long)]
        max_steps: Option<u64>,
        /// Print every visited vertex.
        #[arg(long)]
        trace: bool,
    },
    /// Check all principal minors of an LCP file's matrix.
    CheckPmatrix { file: PathBuf },
    /// Reduce an instance and write the target instance.
    Reduce {
        kind: String,
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write line targets as full tables whenever they fit the table limit.
        #[arg(long)]
        table: bool,
    },
    /// Follow the line from 0^n. LCP files are reduced first and the end of
    /// the line is mapped back.
    Follow {
        file: PathBuf,
        #[arg(long)]
        max_steps: Option<u64>,
        /// Stream `step config potential` lines while following.
        #[arg(long)]
        trace: bool,
    },
    /// Check a solution file against an instance file.
    Verify {
        /// lcp, eopl, eoml, clo, contraction, mmc or gc
        problem: String,
        instance: PathBuf,
        solution: PathBuf,
    },
    /// Solve an LCP directly and through the line reduction, and compare.
    Pipeline {
        #[arg(value_enum)]
        route: Route,
        /// Instance file; omit together with `--random`.
        file: Option<PathBuf>,
        /// Run this many seeded random P-matrix instances instead of a file.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Largest dimension of the random instances.
        #[arg(long, default_value_t = 4)]
        max_dim: usize,
    },
    /// List every solution of a line instance (reducing LCP files first).
    Enumerate {
        file: PathBuf,
        #[arg(long, default_value_t = MAX_TABLE_WIDTH)]
        limit: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    Plcp,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_lcp(path: &Path, paper_sign: bool) -> Result<LcpInstance, Failure> {
    Ok(LcpInstance::parse(&read(path)?, paper_sign)?)
}

fn solve_lcp(path: &Path, paper_sign: bool, lexicographic: bool, max_steps: Option<u64>, trace: bool) -> Result<Status, Failure> {
    let inst = load_lcp(path, paper_sign)?;
    let tie_break = if lexicographic { TieBreak::Lexicographic } else { TieBreak::Strict };
    let run = lemke_solve_with(&inst, LemkeOptions { tie_break, step_budget: max_steps })?;
    if trace {
        for (k, v) in run.trace.iter().enumerate() {
            println!("vertex {k} {v}");
        }
    }
    println!("outcome {}", run.outcome);
    println!("termination {:?}", run.termination);
    println!("pivots {}", run.pivots.len());
    Ok(Status::Ok)
}

fn check_pmatrix(path: &Path, paper_sign: bool) -> Result<Status, Failure> {
    let inst = load_lcp(path, paper_sign)?;
    match is_p_matrix(inst.m())? {
        PMatrixCheck::PMatrix => {
            println!("P-matrix: all {} principal minors are positive", (1u64 << inst.dim()) - 1);
            Ok(Status::Ok)
        }
        PMatrixCheck::Witness { set, minor } => {
            let ids: Vec<String> = set.iter().map(|i| (i + 1).to_string()).collect();
            println!("not a P-matrix: S={{{}}} minor={minor}", ids.join(","));
            Ok(Status::VerificationFailed)
        }
    }
}

fn reduce(kind: &str, path: &Path, output: Option<&Path>, paper_sign: bool, table: bool) -> Result<Status, Failure> {
    let kind: ReduceKind = kind.parse()?;
    let text = read(path)?;
    let out = match run_reduce(kind, &text, path.parent(), paper_sign, table)? {
        ReduceOutput::Immediate(sol) => {
            println!("immediate {sol}");
            return Ok(Status::Ok);
        }
        ReduceOutput::Instance(out) => out,
    };
    match output {
        Some(p) => fs::write(p, out).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
        None => print!("{out}"),
    }
    Ok(Status::Ok)
}

fn follow_on(inst: &LineInstance, max_steps: u64, trace: bool) -> Result<clslab::line::FollowResult, Failure> {
    let res = follow_line_with(inst, max_steps, |step| {
        if trace {
            println!("{step}");
        }
    });
    match res {
        Err(clslab::line::LineError::BudgetExceeded { max_steps, .. }) => {
            Err(Failure::new(Status::VerificationFailed, format!("no solution within {max_steps} steps")))
        }
        other => Ok(other?),
    }
}

fn follow(path: &Path, paper_sign: bool, max_steps: Option<u64>, trace: bool) -> Result<Status, Failure> {
    match load_lcp_or_line(&read(path)?, paper_sign)? {
        Loaded::Line(inst) => {
            let budget = max_steps.unwrap_or_else(|| 1u64.checked_shl(inst.n()).unwrap_or(u64::MAX));
            let res = follow_on(&inst, budget, trace)?;
            println!("solution {} after {} steps", res.solution, res.steps);
        }
        Loaded::Lcp(lcp) => {
            let red = match plcp_to_eopl(&lcp)? {
                Reduced::Immediate(sol) => {
                    println!("immediate {sol}");
                    return Ok(Status::Ok);
                }
                Reduced::Instance(red) => red,
            };
            let res = follow_on(&red.target, max_steps.unwrap_or_else(|| default_budget(lcp.dim())), trace)?;
            println!("solution {} after {} steps", res.solution, res.steps);
            println!("lcp {}", eopl_sol_to_plcp(&red, res.solution.config())?);
        }
    }
    Ok(Status::Ok)
}

fn verify(problem: &str, inst: &Path, sol: &Path, paper_sign: bool) -> Result<Status, Failure> {
    let (status, report) = run_verify(problem, &read(inst)?, &read(sol)?, inst.parent(), paper_sign)?;
    println!("{report}");
    Ok(status)
}

fn pipeline(file: Option<&Path>, random: Option<usize>, seed: u64, max_dim: usize, paper_sign: bool) -> Result<Status, Failure> {
    let instances = match (file, random) {
        (Some(p), None) => vec![load_lcp(p, paper_sign)?],
        (None, Some(n)) if max_dim > 0 => p_lcp_batch(seed, n, max_dim),
        (None, Some(_)) => return Err(Failure::usage("--max-dim must be positive")),
        _ => return Err(Failure::usage("give either an instance file or --random N")),
    };
    let mut worst = Status::Ok;
    for (i, inst) in instances.iter().enumerate() {
        let report = run_pipeline_plcp(inst);
        if instances.len() > 1 {
            println!("instance {i} d={}", inst.dim());
        }
        print!("{report}");
        if report.status.code() > worst.code() {
            worst = report.status;
        }
    }
    Ok(worst)
}

fn enumerate(path: &Path, limit: u32, paper_sign: bool) -> Result<Status, Failure> {
    let inst = match load_lcp_or_line(&read(path)?, paper_sign)? {
        Loaded::Line(inst) => inst,
        Loaded::Lcp(lcp) => match plcp_to_eopl(&lcp)? {
            Reduced::Immediate(sol) => {
                println!("immediate {sol}");
                return Ok(Status::Ok);
            }
            Reduced::Instance(red) => red.target,
        },
    };
    let sols = enumerate_solutions(&inst, limit)?;
    for s in &sols {
        println!("{s}");
    }
    println!("{} solutions", sols.len());
    Ok(Status::Ok)
}

fn run(cli: Cli) -> Result<Status, Failure> {
    let ps = cli.paper_sign;
    match cli.command {
        Command::SolveLcp { file, lexicographic, max_steps, trace } => solve_lcp(&file, ps, lexicographic, max_steps, trace),
        Command::CheckPmatrix { file } => check_pmatrix(&file, ps),
        Command::Reduce { kind, file, output, table } => reduce(&kind, &file, output.as_deref(), ps, table),
        Command::Follow { file, max_steps, trace } => follow(&file, ps, max_steps, trace),
        Command::Verify { problem, instance, solution } => verify(&problem, &instance, &solution, ps),
        Command::Pipeline { route: Route::Plcp, file, random, seed, max_dim } => {
            pipeline(file.as_deref(), random, seed, max_dim, ps)
        }
        Command::Enumerate { file, limit } => enumerate(&file, limit, ps),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::Usage.code() as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.status.code() as u8)
        }
    }
}
