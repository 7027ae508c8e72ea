//! Command-line front end: `schedule`, `compare`, `validate` and `gen`.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 timeout, 3 memory limit,
//! 4 invalid schedule.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::ao::{Heuristics, ProcSelect, ReadyCondition};
use crate::generator::{generate, GenSpec};
use crate::graph::{parse_graph, serialize_graph, StructureTag, TaskGraph};
use crate::schedule::{Schedule, Violation};
use crate::search::{Clock, Outcome};
use crate::solver::{solve, Model, Pruning, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_TIMEOUT: i32 = 2;
pub const EXIT_MEMORY: i32 = 3;
pub const EXIT_INVALID: i32 = 4;

/// Expansions counted as one second under `--clock expansions`.
pub const EXPANSIONS_PER_SECOND: u64 = 100_000;

#[derive(Parser, Debug)]
#[command(name = "aosched", version, about = "Optimal task scheduling with communication delays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one graph and write its schedule.
    Schedule(ScheduleArgs),
    /// Run models and heuristic profiles over a corpus directory.
    Compare(CompareArgs),
    /// Check a schedule file against a graph.
    Validate(ValidateArgs),
    /// Generate graphs.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ClockArg {
    Wall,
    Expansions,
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    #[arg(long, default_value = "2")]
    procs: usize,
    /// Seconds, or `none`.
    #[arg(long, default_value = "120", value_parser = parse_timeout)]
    timeout: Timeout,
    #[arg(long, default_value = "all")]
    pruning: Pruning,
    #[arg(long = "ready-condition", default_value = "lookahead")]
    ready: ReadyCondition,
    #[arg(long, default_value = "in-order")]
    select: ProcSelect,
    #[arg(long = "reverse-joins", value_enum, default_value = "on")]
    reverse_joins: OnOff,
    /// `expansions` measures time as expansions / 100000, making timeouts
    /// reproducible.
    #[arg(long, value_enum, default_value = "wall")]
    clock: ClockArg,
    /// Search memory cap in MiB.
    #[arg(long = "memory-mb", default_value = "1024")]
    memory_mb: usize,
    /// ELS only.
    #[arg(long = "duplicate-detection", value_enum, default_value = "on")]
    duplicate_detection: OnOff,
}

#[derive(Clone, Copy, Debug)]
struct Timeout(Option<Duration>);

fn parse_timeout(s: &str) -> Result<Timeout, String> {
    if s == "none" {
        return Ok(Timeout(None));
    }
    let secs: f64 = s.parse().map_err(|_| format!("bad timeout `{s}`"))?;
    if !(secs > 0.0 && secs.is_finite()) {
        return Err(format!("timeout must be positive, got `{s}`"));
    }
    Ok(Timeout(Some(Duration::from_secs_f64(secs))))
}

impl SearchArgs {
    fn config(&self, model: Model, heuristics: Heuristics) -> SolverConfig {
        SolverConfig {
            model,
            num_procs: self.procs,
            heuristics,
            pruning: self.pruning,
            ready: self.ready,
            select: self.select,
            reverse_joins: self.reverse_joins == OnOff::On,
            timeout: self.timeout.0,
            clock: match self.clock {
                ClockArg::Wall => Clock::Wall,
                ClockArg::Expansions => Clock::Expansions { per_second: EXPANSIONS_PER_SECOND },
            },
            memory_limit: Some(self.memory_mb << 20),
            duplicate_detection: self.duplicate_detection == OnOff::On,
        }
    }
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    graph: PathBuf,
    #[arg(long, default_value = "ao")]
    model: Model,
    #[arg(long, default_value = "baseline")]
    heuristics: Heuristics,
    #[command(flatten)]
    search: SearchArgs,
    /// Directory for `<graph>.<model>.sched`; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON stats file.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    corpus: PathBuf,
    /// Comma list of models.
    #[arg(long, default_value = "ao,els", value_delimiter = ',')]
    models: Vec<Model>,
    /// Comma list of heuristic profiles, applied to AO runs.
    #[arg(long, default_value = "baseline", value_delimiter = ',')]
    profiles: Vec<Heuristics>,
    /// Comma list of processor counts; overrides `--procs`.
    #[arg(long = "proc-counts", value_delimiter = ',')]
    proc_counts: Vec<usize>,
    #[command(flatten)]
    search: SearchArgs,
    /// CSV output; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Cumulative solved-versus-time table; stderr when absent.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Worker threads; each runs one search at a time.
    #[arg(long, default_value = "1")]
    jobs: usize,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    graph: PathBuf,
    schedule: PathBuf,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Comma list of structures, or `all`.
    #[arg(long, default_value = "all")]
    structure: String,
    /// Comma list of task counts.
    #[arg(long, default_value = "10", value_delimiter = ',')]
    tasks: Vec<usize>,
    /// Comma list of target CCRs.
    #[arg(long, default_value = "1", value_delimiter = ',')]
    ccr: Vec<f64>,
    /// Seed, comma list, or half-open range `a..b`.
    #[arg(long, default_value = "0")]
    seed: String,
    /// Task weight range `lo..hi`, inclusive.
    #[arg(long, default_value = "1..10")]
    weights: String,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// One row of `compare` output. Column order is part of the format.
#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct BenchRecord {
    pub graph_file: String,
    pub structure: String,
    pub num_tasks: usize,
    pub ccr: f64,
    pub num_procs: usize,
    pub model: String,
    pub heuristic_profile: String,
    /// `solved`, `timeout`, `memory` or `error`.
    pub outcome: String,
    pub elapsed: f64,
    pub states_created: u64,
    pub states_expanded: u64,
    pub duplicates_discarded: u64,
    pub optimal_length: Option<u32>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let r = match cli.command {
        Command::Schedule(a) => cmd_schedule(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::Gen(a) => cmd_gen(&a),
    };
    r.unwrap_or_else(|msg| {
        eprintln!("error: {msg}");
        EXIT_USAGE
    })
}

fn read_graph(path: &Path) -> Result<TaskGraph, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_graph(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, data: &str) -> Result<(), String> {
    fs::write(path, data).map_err(|e| format!("{}: {e}", path.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "graph".into(), |s| s.to_string_lossy().into_owned())
}

fn cmd_schedule(a: &ScheduleArgs) -> Result<i32, String> {
    let g = read_graph(&a.graph)?;
    let cfg = a.search.config(a.model, a.heuristics);
    let sol = solve(&g, &cfg).map_err(|e| e.to_string())?;
    if let Some(path) = &a.stats {
        let json = serde_json::to_string_pretty(&sol.stats).expect("stats serialise");
        write_file(path, &(json + "\n"))?;
    }
    let Some(s) = sol.schedule else {
        eprintln!("{}: {} after {} states", a.graph.display(), sol.stats.outcome.as_str(), sol.stats.states_created);
        return Ok(match sol.stats.outcome {
            Outcome::Memory => EXIT_MEMORY,
            _ => EXIT_TIMEOUT,
        });
    };
    let text = s.to_text(&g);
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            write_file(&dir.join(format!("{}.{}.sched", stem(&a.graph), a.model)), &text)?;
        }
        None => print!("{text}"),
    }
    eprintln!("length {} ({} states)", s.length(&g), sol.stats.states_created);
    Ok(EXIT_OK)
}

fn cmd_validate(a: &ValidateArgs) -> Result<i32, String> {
    let g = read_graph(&a.graph)?;
    let text = fs::read_to_string(&a.schedule).map_err(|e| format!("{}: {e}", a.schedule.display()))?;
    let s = Schedule::from_text(&text).map_err(|e| format!("{}: {e}", a.schedule.display()))?;
    let violations = s.validate(&g);
    if violations.is_empty() {
        println!("valid, length {}", s.length(&g));
        return Ok(EXIT_OK);
    }
    for v in &violations {
        println!("{v}");
    }
    let malformed = violations.iter().any(|v| matches!(v, Violation::Coverage { .. } | Violation::ProcessorRange { .. }));
    Ok(if malformed { EXIT_USAGE } else { EXIT_INVALID })
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let bad = || format!("bad seed list `{s}`");
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        return Ok((a..b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

fn cmd_gen(a: &GenArgs) -> Result<i32, String> {
    let structures: Vec<StructureTag> = if a.structure == "all" {
        StructureTag::ALL.to_vec()
    } else {
        a.structure.split(',').map(|s| s.trim().parse()).collect::<Result<_, _>>()?
    };
    let seeds = parse_seeds(&a.seed)?;
    let weights = a
        .weights
        .split_once("..")
        .and_then(|(lo, hi)| Some((lo.parse().ok()?, hi.parse().ok()?)))
        .ok_or_else(|| format!("bad weight range `{}`", a.weights))?;
    let mut specs = Vec::new();
    for &structure in &structures {
        for &n in &a.tasks {
            for &ccr in &a.ccr {
                for &seed in &seeds {
                    specs.push(GenSpec { structure, num_tasks: n, target_ccr: ccr, seed, weight_range: weights });
                }
            }
        }
    }
    // validate everything before writing anything
    let graphs = specs
        .iter()
        .map(|s| generate(s).map(|g| (s.file_name(), g)).map_err(|e| format!("{}: {e}", s.stem())))
        .collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(&a.out).map_err(|e| format!("{}: {e}", a.out.display()))?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for (name, g) in graphs {
        write_file(&a.out.join(&name), &serialize_graph(&g))?;
        let _ = writeln!(out, "{name}");
    }
    Ok(EXIT_OK)
}

/// Graph files (`*.dot`) in `dir`, sorted by name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, String> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "dot"))
        .collect();
    files.sort();
    Ok(files)
}

struct Job {
    file: PathBuf,
    model: Model,
    profile: Heuristics,
    procs: usize,
}

fn run_job(job: &Job, search: &SearchArgs) -> BenchRecord {
    let name = job.file.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let mut rec = BenchRecord {
        graph_file: name,
        structure: String::new(),
        num_tasks: 0,
        ccr: 0.0,
        num_procs: job.procs,
        model: job.model.to_string(),
        heuristic_profile: job.profile.as_str().into(),
        outcome: "error".into(),
        elapsed: 0.0,
        states_created: 0,
        states_expanded: 0,
        duplicates_discarded: 0,
        optimal_length: None,
    };
    let g = match read_graph(&job.file) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("{e}");
            return rec;
        }
    };
    rec.structure = g.classify().as_str().into();
    rec.num_tasks = g.num_tasks();
    rec.ccr = (g.ccr() * 1000.0).round() / 1000.0;
    let mut cfg = search.config(job.model, job.profile);
    cfg.num_procs = job.procs;
    match solve(&g, &cfg) {
        Ok(sol) => {
            rec.outcome = sol.stats.outcome.as_str().into();
            rec.elapsed = sol.stats.elapsed;
            rec.states_created = sol.stats.states_created;
            rec.states_expanded = sol.stats.states_expanded;
            rec.duplicates_discarded = sol.stats.duplicates_discarded;
            rec.optimal_length = sol.length;
        }
        Err(e) => eprintln!("{}: {e}", job.file.display()),
    }
    rec
}

/// Runs every job and returns records in corpus order.
fn run_jobs(jobs: &[Job], search: &SearchArgs, threads: usize) -> Result<Vec<BenchRecord>, String> {
    if threads <= 1 {
        return Ok(jobs.iter().map(|j| run_job(j, search)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
    Ok(pool.install(|| jobs.par_iter().map(|j| run_job(j, search)).collect()))
}

/// Series label used in the cumulative table.
fn series(r: &BenchRecord) -> String {
    format!("{}/{}/p{}", r.model, r.heuristic_profile, r.num_procs)
}

/// Cumulative number of solved runs per series at every distinct solve
/// time, as CSV with a leading `time` column.
pub fn cumulative_table(records: &[BenchRecord]) -> String {
    let mut names: Vec<String> = records.iter().map(series).collect();
    names.sort();
    names.dedup();
    let mut times: Vec<f64> = records.iter().filter(|r| r.outcome == "solved").map(|r| r.elapsed).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut out = String::from("time");
    for n in &names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for t in times {
        out.push_str(&format!("{t}"));
        for n in &names {
            let c = records.iter().filter(|r| r.outcome == "solved" && r.elapsed <= t && series(r) == *n).count();
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
    }
    out
}

pub fn records_to_csv(records: &[BenchRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).expect("records serialise");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

fn cmd_compare(a: &CompareArgs) -> Result<i32, String> {
    let files = corpus_files(&a.corpus)?;
    if files.is_empty() {
        return Err(format!("{}: no .dot files", a.corpus.display()));
    }
    let procs = if a.proc_counts.is_empty() { vec![a.search.procs] } else { a.proc_counts.clone() };
    let mut jobs = Vec::new();
    for file in &files {
        for &p in &procs {
            for &model in &a.models {
                let profiles: &[Heuristics] = match model {
                    Model::Ao => &a.profiles,
                    Model::Els => &[Heuristics::BASELINE],
                };
                for &profile in profiles {
                    jobs.push(Job { file: file.clone(), model, profile, procs: p });
                }
            }
        }
    }
    let records = run_jobs(&jobs, &a.search, a.jobs)?;
    let csv = records_to_csv(&records);
    match &a.csv {
        Some(p) => write_file(p, &csv)?,
        None => print!("{csv}"),
    }
    let table = cumulative_table(&records);
    match &a.table {
        Some(p) => write_file(p, &table)?,
        None => eprint!("{table}"),
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(model: &str, outcome: &str, elapsed: f64) -> BenchRecord {
        BenchRecord {
            graph_file: "g.dot".into(),
            structure: "fork".into(),
            num_tasks: 3,
            ccr: 1.0,
            num_procs: 2,
            model: model.into(),
            heuristic_profile: "baseline".into(),
            outcome: outcome.into(),
            elapsed,
            states_created: 1,
            states_expanded: 1,
            duplicates_discarded: 0,
            optimal_length: (outcome == "solved").then_some(6),
        }
    }

    #[test]
    fn csv_header_order() {
        let csv = records_to_csv(&[rec("ao", "solved", 0.5)]);
        let header = csv.lines().next().unwrap();
        assert_eq!(
            header,
            "graphFile,structure,numTasks,ccr,numProcs,model,heuristicProfile,outcome,elapsed,\
             statesCreated,statesExpanded,duplicatesDiscarded,optimalLength"
        );
        let csv = records_to_csv(&[rec("els", "timeout", 2.0)]);
        assert!(csv.lines().nth(1).unwrap().ends_with(",timeout,2.0,1,1,0,"));
    }

    #[test]
    fn cumulative_counts() {
        let recs = [rec("ao", "solved", 0.5), rec("ao", "solved", 1.5), rec("els", "solved", 1.0), rec("els", "timeout", 9.0)];
        let t = cumulative_table(&recs);
        assert_eq!(t, "time,ao/baseline/p2,els/baseline/p2\n0.5,1,0\n1,1,1\n1.5,2,1\n");
    }

    #[test]
    fn seeds_and_timeouts() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("4,9").unwrap(), vec![4, 9]);
        assert!(parse_seeds("x").is_err());
        assert!(parse_timeout("none").unwrap().0.is_none());
        assert!(parse_timeout("0").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["aosched", "schedule"]), EXIT_USAGE);
        assert_eq!(run(["aosched", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["aosched", "schedule", "--model", "ilp", "x.dot"]), EXIT_USAGE);
        assert_eq!(run(["aosched", "gen", "--structure", "fork", "--tasks", "1", "--out", "/nonexistent/x"]), EXIT_USAGE);
    }
}
