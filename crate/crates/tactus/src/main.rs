//! Command-line front end over the library pipeline.
//!
//! Three subcommands cover the workflow: `compile` turns a source program
//! into a task-set file (plus optional analysis dumps), `simulate` runs
//! the earliest-deadline-first schedule of a task set or source program
//! and reports deadline misses and semantic mismatches, and `check` runs
//! every property suite on one or more source files.
//!
//! Exit codes are a stable contract: 0 success, 1 compile rejection,
//! 2 scheduling or semantics failure, 3 usage/input-format error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tactus::diag::{Error, ErrorKind};
use tactus::pipeline::{check_compiled, compile_source, simulate_compiled, CompileOptions};
use tactus::sim::{simulate, Event, Policy, SimConfig, SimTrace};
use tactus::taskset;

const EXIT_OK: u8 = 0;
const EXIT_REJECTED: u8 = 1;
const EXIT_UNSCHEDULABLE: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "tactus",
    version,
    about = "Compiler and EDF schedule simulator for a multi-periodic synchronous dataflow language"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Frontend knobs shared by every subcommand that reads a source file.
#[derive(Args, Clone)]
struct FrontendArgs {
    /// Entry node (defaults to the last node defined in the file).
    #[arg(long, value_name = "NODE")]
    main: Option<String>,
    /// Execution-time budget of each sensor task, in source time units.
    #[arg(long, default_value_t = 0, value_name = "TIME")]
    sensor_wcet: i64,
    /// Execution-time budget of each actuator task, in source time units.
    #[arg(long, default_value_t = 0, value_name = "TIME")]
    actuator_wcet: i64,
    /// Reject programs whose base tick splits the hyperperiod into more
    /// slices than this.
    #[arg(long, default_value_t = 10_000_000, value_name = "N")]
    tick_limit: i64,
}

impl FrontendArgs {
    fn options(&self) -> CompileOptions {
        CompileOptions {
            main: self.main.clone(),
            sensor_wcet: self.sensor_wcet,
            actuator_wcet: self.actuator_wcet,
            tick_limit: self.tick_limit,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    /// Per-instance deadlines from each task's deadline word.
    EdfDword,
    /// One fixed relative deadline per task (its word's minimum).
    EdfUniform,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Policy {
        match p {
            PolicyArg::EdfDword => Policy::EdfDword,
            PolicyArg::EdfUniform => Policy::EdfUniform,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a source program into a task-set file.
    Compile {
        /// Source program.
        file: PathBuf,
        /// Output path (defaults to `<name>.taskset.json` in the current
        /// directory).
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
        /// Print the type signature of every node.
        #[arg(long)]
        dump_types: bool,
        /// Print the clock signature of every node.
        #[arg(long)]
        dump_clocks: bool,
        /// Print the deadline word of every task.
        #[arg(long)]
        dump_dwords: bool,
        /// Print the task graph in DOT form.
        #[arg(long)]
        dump_graph: bool,
        #[command(flatten)]
        frontend: FrontendArgs,
    },
    /// Simulate the EDF schedule of a task-set file or source program.
    Simulate {
        /// Task-set file (`.json`) or source program. Source programs are
        /// compiled first and their schedules checked against the
        /// reference interpreter; task-set files skip the semantics check.
        file: PathBuf,
        /// Simulation length in ticks (defaults to max release + twice
        /// the hyperperiod).
        #[arg(long, value_name = "TICKS")]
        horizon: Option<i64>,
        /// Deadline assignment driving the scheduler.
        #[arg(long, value_enum, default_value_t = PolicyArg::EdfDword)]
        policy: PolicyArg,
        /// Write the event trace as JSON lines.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
        /// Write an ASCII Gantt chart ('#' running, '.' ready, ' ' absent,
        /// '!' missed).
        #[arg(long, value_name = "PATH")]
        gantt: Option<PathBuf>,
        /// Print the values of these flows (comma-separated) as
        /// `(tag, value)` rows. Needs a source program.
        #[arg(long, value_name = "VARS", value_delimiter = ',')]
        trace_flows: Vec<String>,
        /// Not supported: execution times are taken as exact.
        #[arg(long, value_name = "SPEC")]
        jitter: Option<String>,
        #[command(flatten)]
        frontend: FrontendArgs,
    },
    /// Compile one or more source programs and run every property suite
    /// on each: deadline-word periodicity, precedence soundness, a
    /// schedulability scan, a semantics check, and the task-set file
    /// round-trip.
    Check {
        /// Source programs.
        files: Vec<PathBuf>,
        /// Also check every `.mps` file in this directory.
        #[arg(long, value_name = "DIR")]
        all: Option<PathBuf>,
        #[command(flatten)]
        frontend: FrontendArgs,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            let code = match e.kind() {
                K::DisplayHelp | K::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.cmd {
        Cmd::Compile {
            file,
            output,
            dump_types,
            dump_clocks,
            dump_dwords,
            dump_graph,
            frontend,
        } => cmd_compile(
            &file,
            output,
            [dump_types, dump_clocks, dump_dwords, dump_graph],
            &frontend,
        ),
        Cmd::Simulate {
            file,
            horizon,
            policy,
            trace,
            gantt,
            trace_flows,
            jitter,
            frontend,
        } => cmd_simulate(
            &file,
            horizon,
            policy,
            trace.as_deref(),
            gantt.as_deref(),
            &trace_flows,
            jitter,
            &frontend,
        ),
        Cmd::Check {
            files,
            all,
            frontend,
        } => cmd_check(&files, all.as_deref(), &frontend),
    };
    ExitCode::from(code)
}

/// Prints a rejection prefixed with its source path and picks the exit
/// code for its kind.
fn report(path: &Path, err: &Error) -> u8 {
    if err.span.is_some() {
        eprintln!("{}:{}", path.display(), err);
    } else {
        eprintln!("{}: {}", path.display(), err);
    }
    match err.kind {
        ErrorKind::Usage => EXIT_USAGE,
        _ => EXIT_REJECTED,
    }
}

fn io_fail(path: &Path, what: &str, e: &std::io::Error) -> u8 {
    eprintln!("{}: error[usage]: {what}: {e}", path.display());
    EXIT_USAGE
}

fn cmd_compile(
    file: &Path,
    output: Option<PathBuf>,
    dumps: [bool; 4],
    frontend: &FrontendArgs,
) -> u8 {
    let src = match std::fs::read_to_string(file) {
        Ok(s) => s,
        Err(e) => return io_fail(file, "cannot read", &e),
    };
    let compiled = match compile_source(&src, &frontend.options()) {
        Ok(c) => c,
        Err(e) => return report(file, &e),
    };
    let [types, clocks, dwords, graph] = dumps;
    if types {
        print!("{}", compiled.render_types());
    }
    if clocks {
        print!("{}", compiled.render_clocks());
    }
    if dwords {
        print!("{}", compiled.render_dwords());
    }
    if graph {
        print!("{}", compiled.render_graph_dot());
    }
    let out = output.unwrap_or_else(|| {
        let stem = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into());
        PathBuf::from(format!("{stem}.taskset.json"))
    });
    let doc = taskset::to_file(&compiled.sim_set(), compiled.graph.tick);
    if let Err(e) = std::fs::write(&out, taskset::render(&doc)) {
        return io_fail(&out, "cannot write", &e);
    }
    println!(
        "wrote {} ({} tasks, {} buffers)",
        out.display(),
        doc.tasks.len(),
        doc.buffers.len()
    );
    EXIT_OK
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    file: &Path,
    horizon: Option<i64>,
    policy: PolicyArg,
    trace_out: Option<&Path>,
    gantt_out: Option<&Path>,
    trace_flows: &[String],
    jitter: Option<String>,
    frontend: &FrontendArgs,
) -> u8 {
    if let Some(j) = jitter {
        eprintln!(
            "{}: error[usage]: --jitter {j}: execution-time variation below \
             the stated budget is not supported",
            file.display()
        );
        return EXIT_USAGE;
    }
    let is_taskset = file.extension().is_some_and(|e| e == "json");
    if is_taskset && !trace_flows.is_empty() {
        eprintln!(
            "{}: error[usage]: --trace-flows needs a source program; \
             a task-set file carries no flow definitions",
            file.display()
        );
        return EXIT_USAGE;
    }
    let text = match std::fs::read_to_string(file) {
        Ok(s) => s,
        Err(e) => return io_fail(file, "cannot read", &e),
    };

    if is_taskset {
        let doc = match taskset::parse_file(&text) {
            Ok(d) => d,
            Err(e) => return report(file, &e),
        };
        let set = match taskset::to_sim_set(&doc) {
            Ok((s, _tick)) => s,
            Err(e) => return report(file, &e),
        };
        let horizon = match horizon.map(Ok).unwrap_or_else(|| set.default_horizon()) {
            Ok(h) => h,
            Err(e) => return report(file, &e),
        };
        let config = SimConfig {
            horizon,
            policy: policy.into(),
        };
        let trace = match simulate(&set, &config) {
            Ok(t) => t,
            Err(e) => return report(file, &e),
        };
        if let Some(code) = write_outputs(&trace, trace_out, gantt_out) {
            return code;
        }
        print_misses(&trace);
        println!(
            "{} misses over [0,{}); semantics check skipped (no source)",
            trace.misses, trace.horizon
        );
        return if trace.misses == 0 {
            EXIT_OK
        } else {
            EXIT_UNSCHEDULABLE
        };
    }

    let compiled = match compile_source(&text, &frontend.options()) {
        Ok(c) => c,
        Err(e) => return report(file, &e),
    };
    let outcome = match simulate_compiled(&compiled, horizon, policy.into()) {
        Ok(o) => o,
        Err(e) => return report(file, &e),
    };
    let trace = &outcome.trace;
    if let Some(code) = write_outputs(trace, trace_out, gantt_out) {
        return code;
    }
    if !trace_flows.is_empty() {
        let mut interp = match compiled.interp() {
            Ok(i) => i,
            Err(e) => return report(file, &e),
        };
        for var in trace_flows {
            let flow = match interp.flow(var, trace.horizon) {
                Ok(f) => f,
                Err(e) => return report(file, &e),
            };
            println!("{var}:");
            for (tag, value) in &flow.rows {
                println!("({tag}, {value})");
            }
        }
    }
    print_misses(trace);
    match &outcome.mismatches {
        Some(mismatches) => {
            for m in mismatches.iter().take(10) {
                eprintln!(
                    "mismatch: {}[{}] read {} from {}, expected {}",
                    m.task, m.n, m.got, m.buffer, m.expected
                );
            }
            if mismatches.len() > 10 {
                eprintln!("... and {} more mismatches", mismatches.len() - 10);
            }
            println!(
                "{} misses, {} mismatches over [0,{})",
                trace.misses,
                mismatches.len(),
                trace.horizon
            );
            if outcome.ok() {
                EXIT_OK
            } else {
                EXIT_UNSCHEDULABLE
            }
        }
        None => {
            println!(
                "{} misses over [0,{}); semantics not checked on a missed schedule",
                trace.misses, trace.horizon
            );
            EXIT_UNSCHEDULABLE
        }
    }
}

/// Prints up to ten deadline misses to standard error.
fn print_misses(trace: &SimTrace) {
    let misses: Vec<_> = trace
        .events
        .iter()
        .filter_map(|(t, e)| match e {
            Event::DeadlineMiss { task, n } => Some((*t, *task, *n)),
            _ => None,
        })
        .collect();
    for (t, task, n) in misses.iter().take(10) {
        eprintln!("miss: {}[{}] at t={}", trace.task_names[*task], n, t);
    }
    if misses.len() > 10 {
        eprintln!("... and {} more misses", misses.len() - 10);
    }
}

/// Writes the JSONL trace and the Gantt chart when requested; `Some`
/// carries the exit code of a write failure.
fn write_outputs(
    trace: &SimTrace,
    trace_out: Option<&Path>,
    gantt_out: Option<&Path>,
) -> Option<u8> {
    if let Some(p) = trace_out {
        if let Err(e) = std::fs::write(p, trace.to_jsonl()) {
            return Some(io_fail(p, "cannot write", &e));
        }
    }
    if let Some(p) = gantt_out {
        if let Err(e) = std::fs::write(p, trace.gantt()) {
            return Some(io_fail(p, "cannot write", &e));
        }
    }
    None
}

fn cmd_check(files: &[PathBuf], all: Option<&Path>, frontend: &FrontendArgs) -> u8 {
    let mut files = files.to_vec();
    if let Some(dir) = all {
        let entries = match std::fs::read_dir(dir) {
            Ok(es) => es,
            Err(e) => return io_fail(dir, "cannot read directory", &e),
        };
        let mut found: Vec<PathBuf> = entries
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "mps"))
            .collect();
        found.sort();
        files.extend(found);
    }
    if files.is_empty() {
        eprintln!("error[usage]: no input files; pass sources or --all <dir>");
        return EXIT_USAGE;
    }
    let mut worst = EXIT_OK;
    for file in &files {
        worst = worst.max(check_one(file, frontend));
    }
    worst
}

fn check_one(file: &Path, frontend: &FrontendArgs) -> u8 {
    let src = match std::fs::read_to_string(file) {
        Ok(s) => s,
        Err(e) => return io_fail(file, "cannot read", &e),
    };
    let compiled = match compile_source(&src, &frontend.options()) {
        Ok(c) => c,
        Err(e) => return report(file, &e),
    };
    let rep = match check_compiled(&compiled) {
        Ok(r) => r,
        Err(e) => return report(file, &e),
    };
    if rep.ok() {
        println!(
            "{}: ok ({} tasks; 0 misses, 0 mismatches over [0,{}))",
            file.display(),
            compiled.graph.tasks.len(),
            rep.horizon
        );
        return EXIT_OK;
    }
    let mut why = Vec::new();
    if !rep.word_lengths_ok {
        why.push("deadline words do not repeat within the hyperperiod".to_string());
    }
    if rep.soundness_violations > 0 {
        why.push(format!(
            "{} precedence deadline violations",
            rep.soundness_violations
        ));
    }
    if rep.misses > 0 {
        why.push(format!("{} deadline misses", rep.misses));
    }
    if rep.mismatches > 0 {
        why.push(format!("{} semantic mismatches", rep.mismatches));
    }
    if !rep.roundtrip_ok {
        why.push("task-set file round-trip is not canonical".to_string());
    }
    println!(
        "{}: fail over [0,{}): {}",
        file.display(),
        rep.horizon,
        why.join("; ")
    );
    EXIT_UNSCHEDULABLE
}
