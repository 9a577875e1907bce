//! Batch front end: `run`, `exact`, `sweep` and `gap` subcommands writing CSV.
//!
//! Output files (all in the `--out` directory, floats in shortest
//! round-trip form):
//!
//! * `run`: `stats.csv` with `iter,N_w,S,spawned,died,annihilated,obs_1..obs_m`
//!   and `report.csv` with `observable,mean,error,blocks,status`.
//! * `exact`: `exact.csv` with `t,obs_1..obs_m` at every time point and
//!   `spectrum.csv` with `lambda0,gap,overlap,dimension`.
//! * `sweep`: `sweep.csv` with
//!   `target_walkers,replica,seed,mean_walkers,observable,mean,error,exact,status`.
//! * `gap`: `gap.csv` with `T,gap` rows and a final `slope,<value>` row.
//!
//! `--shards N` splits the time axis over `N` workers. `--transport`
//! selects threads joined by channels (default) or socket pairs, or one
//! process per shard joined by Unix domain sockets; the last re-runs this
//! executable with a hidden `shard` subcommand.
//!
//! Exit codes: 0 success, 2 configuration error, 3 extinction, 4 size limit,
//! 1 any other failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::circuit::{parse_circuit, BasisState};
use crate::clock::ClockOracle;
use crate::exact::{self, ExactError};
use crate::fciqmc::{FciqmcError, RunResult, RunStatus, SimParams};
use crate::observable::ObservableSpec;
use crate::paratime::{self, ParatimeError, Transport};
use crate::problem::ClockProblem;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_EXTINCT: i32 = 3;
pub const EXIT_SIZE_LIMIT: i32 = 4;
pub const MAX_GAP_TIME_POINTS: usize = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("size limit: {0}")]
    SizeLimit(String),
    #[error("population died out at iteration {iteration}")]
    Extinct { iteration: u64 },
    #[error("{0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::SizeLimit(_) => EXIT_SIZE_LIMIT,
            CliError::Extinct { .. } => EXIT_EXTINCT,
            _ => EXIT_FAILURE,
        }
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::SizeLimit { .. } => CliError::SizeLimit(e.to_string()),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<FciqmcError> for CliError {
    fn from(e: FciqmcError) -> Self {
        match e {
            FciqmcError::InvalidParams(_) => CliError::Config(e.to_string()),
            FciqmcError::Extinct { iteration } => CliError::Extinct { iteration },
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ParatimeError> for CliError {
    fn from(e: ParatimeError) -> Self {
        match e {
            ParatimeError::Fciqmc(f) => f.into(),
            ParatimeError::TooManyShards { .. } | ParatimeError::NoShards => CliError::Config(e.to_string()),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "clockqmc", version, about = "Clock-Hamiltonian projector Monte Carlo for quantum circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One stochastic run: per-iteration statistics and blocked estimates.
    Run(RunArgs),
    /// Statevector observables and dense clock spectrum.
    Exact(ExactArgs),
    /// Replicated runs over a list of walker targets.
    Sweep(SweepArgs),
    /// Clock gap of the one-qubit identity circuit against T.
    Gap(GapArgs),
    /// One shard of a multi-process run (started by `--transport processes`).
    #[command(hide = true)]
    Shard(ShardArgs),
}

#[derive(Clone, Debug, Args)]
pub struct ProblemArgs {
    /// Circuit file, one gate per line.
    #[arg(long)]
    pub circuit: PathBuf,
    #[arg(long)]
    pub qubits: usize,
    /// e.g. `Z 0 @ final`, `X 1 Z 2 @ 3`. Repeatable.
    #[arg(long = "observable", required = true)]
    pub observables: Vec<String>,
    /// Initial computational basis state as an integer (qubit q is bit q).
    #[arg(long, default_value_t = 0)]
    pub psi0: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    /// Threads linked by in-memory channels.
    Channels,
    /// Threads linked by socket pairs speaking the wire format.
    Sockets,
    /// One process per shard, linked by Unix domain sockets.
    Processes,
}

#[derive(Clone, Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 0.01)]
    pub dtau: f64,
    /// Averaged iterations after equilibration.
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    /// Iterations discarded after the shift switches on.
    #[arg(long, default_value_t = 1000)]
    pub equil: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub shift_damping: f64,
    #[arg(long, default_value_t = 10)]
    pub shift_interval: usize,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub initial_shift: f64,
    #[arg(long, default_value_t = 10)]
    pub initial_walkers: i64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_growth: u64,
    #[arg(long)]
    pub rotate_basis: bool,
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
    #[arg(long, value_enum, default_value_t = TransportArg::Channels)]
    pub transport: TransportArg,
}

#[derive(Clone, Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Target walker count; accepts `1e5`.
    #[arg(long, value_parser = parse_count)]
    pub walkers: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Comma-separated walker targets, e.g. `1e1,1e2,1e3`.
    #[arg(long, value_delimiter = ',', value_parser = parse_count, required = true)]
    pub targets: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    pub replicas: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct ShardArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_parser = parse_count)]
    pub walkers: u64,
    #[arg(long)]
    pub shard_id: usize,
    /// Rendezvous directory for the link sockets.
    #[arg(long)]
    pub socket_dir: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct GapArgs {
    /// Largest number of time points (powers of two from `--tmin`).
    #[arg(long, default_value_t = 32)]
    pub tmax: usize,
    #[arg(long, default_value_t = 4)]
    pub tmin: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Non-negative integer, also in float notation such as `1e5`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(format!("`{s}` is not a non-negative integer"))
    }
}

/// A validated `run` configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub circuit_path: PathBuf,
    pub problem: ClockProblem,
    pub params: SimParams,
    pub engine: Engine,
    pub out: PathBuf,
}

/// Where the shards of a run execute.
#[derive(Clone, Debug)]
pub enum Engine {
    Serial,
    Threads { shards: usize, transport: Transport },
    /// Child processes of the current executable; `source` is passed on so
    /// each child can load the same problem.
    #[cfg(unix)]
    Processes { shards: usize, source: ProblemArgs },
}

impl Engine {
    pub fn from_args(problem: &ProblemArgs, sim: &SimArgs) -> Self {
        let shards = sim.shards;
        if shards <= 1 {
            return Engine::Serial;
        }
        match sim.transport {
            TransportArg::Channels => Engine::Threads { shards, transport: Transport::Channels },
            #[cfg(unix)]
            TransportArg::Sockets => Engine::Threads { shards, transport: Transport::UnixSockets },
            #[cfg(unix)]
            TransportArg::Processes => Engine::Processes { shards, source: problem.clone() },
            #[cfg(not(unix))]
            _ => Engine::Threads { shards, transport: Transport::Channels },
        }
    }

    pub fn shards(&self) -> usize {
        match self {
            Engine::Serial => 1,
            Engine::Threads { shards, .. } => *shards,
            #[cfg(unix)]
            Engine::Processes { shards, .. } => *shards,
        }
    }
}

pub fn load_problem(args: &ProblemArgs, rotate_basis: bool) -> Result<ClockProblem, CliError> {
    let text = fs::read_to_string(&args.circuit)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.circuit.display())))?;
    let circuit = parse_circuit(&text, args.qubits).map_err(|e| CliError::Config(e.to_string()))?;
    if args.qubits < 64 && args.psi0 >> args.qubits != 0 {
        return Err(CliError::Config(format!("psi0 {} needs more than {} qubits", args.psi0, args.qubits)));
    }
    let specs = args
        .observables
        .iter()
        .map(|s| s.parse::<ObservableSpec>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Config(e.to_string()))?;
    ClockProblem::new(circuit, BasisState(args.psi0), specs, rotate_basis).map_err(|e| CliError::Config(e.to_string()))
}

fn sim_params(sim: &SimArgs, target_walkers: u64, seed: u64) -> Result<SimParams, CliError> {
    let p = SimParams {
        dtau: sim.dtau,
        target_walkers,
        shift_damping: sim.shift_damping,
        shift_interval: sim.shift_interval,
        initial_shift: sim.initial_shift,
        equil_iters: sim.equil,
        total_iters: sim.iters,
        max_growth_iters: sim.max_growth,
        seed,
        initial_walkers: sim.initial_walkers,
        rotate_basis: sim.rotate_basis,
    };
    p.validate()?;
    if sim.shards == 0 {
        return Err(CliError::Config("--shards must be at least 1".into()));
    }
    Ok(p)
}

impl RunConfig {
    pub fn from_args(a: &RunArgs) -> Result<Self, CliError> {
        let params = sim_params(&a.sim, a.walkers, a.sim.seed)?;
        let problem = load_problem(&a.problem, a.sim.rotate_basis)?;
        if a.sim.shards > problem.oracle().time_points() {
            return Err(CliError::Config(format!("{} shards for {} time points", a.sim.shards, problem.oracle().time_points())));
        }
        Ok(RunConfig {
            circuit_path: a.problem.circuit.clone(),
            problem,
            params,
            engine: Engine::from_args(&a.problem, &a.sim),
            out: a.out.clone(),
        })
    }
}

pub fn execute(problem: &ClockProblem, params: &SimParams, engine: &Engine) -> Result<RunResult, CliError> {
    let par = match engine {
        Engine::Serial => return Ok(problem.run(params)?),
        Engine::Threads { shards, transport } => {
            paratime::run_parallel(params, problem.oracle(), problem.observables(), *shards, *transport)?
        }
        #[cfg(unix)]
        Engine::Processes { shards, source } => run_in_processes(problem, params, *shards, source)?,
    };
    if par.exchange.non_adjacent != 0 {
        return Err(CliError::Runtime(format!("{} envelopes between non-adjacent shards", par.exchange.non_adjacent)));
    }
    Ok(par.result)
}

/// Removes the socket directory when dropped.
#[cfg(unix)]
struct ScratchDir(PathBuf);

#[cfg(unix)]
impl ScratchDir {
    fn new() -> std::io::Result<Self> {
        use std::sync::atomic::{AtomicUsize, Ordering};
        static NEXT: AtomicUsize = AtomicUsize::new(0);
        let n = NEXT.fetch_add(1, Ordering::Relaxed);
        let dir = std::env::temp_dir().join(format!("clockqmc-{}-{n}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir)?;
        Ok(ScratchDir(dir))
    }
}

#[cfg(unix)]
impl Drop for ScratchDir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

#[cfg(unix)]
fn run_in_processes(problem: &ClockProblem, p: &SimParams, shards: usize, source: &ProblemArgs) -> Result<paratime::ParallelRun, CliError> {
    let exe = std::env::current_exe()?;
    let dir = ScratchDir::new()?;
    let launch = |id: usize| {
        let mut c = std::process::Command::new(&exe);
        c.arg("shard").arg("--shard-id").arg(id.to_string()).arg("--socket-dir").arg(&dir.0);
        c.arg("--circuit").arg(&source.circuit);
        c.arg(format!("--qubits={}", source.qubits)).arg(format!("--psi0={}", source.psi0));
        for o in &source.observables {
            c.arg(format!("--observable={o}"));
        }
        // `{}` prints floats in shortest round-trip form
        c.args([
            format!("--walkers={}", p.target_walkers),
            format!("--dtau={}", p.dtau),
            format!("--iters={}", p.total_iters),
            format!("--equil={}", p.equil_iters),
            format!("--seed={}", p.seed),
            format!("--shift-damping={}", p.shift_damping),
            format!("--shift-interval={}", p.shift_interval),
            format!("--initial-shift={}", p.initial_shift),
            format!("--initial-walkers={}", p.initial_walkers),
            format!("--max-growth={}", p.max_growth_iters),
            format!("--shards={shards}"),
        ]);
        if p.rotate_basis {
            c.arg("--rotate-basis");
        }
        c
    };
    Ok(paratime::process::run_processes(p, problem.oracle(), problem.observables(), shards, &dir.0, launch)?)
}

#[cfg(unix)]
pub fn cmd_shard(a: &ShardArgs) -> Result<(), CliError> {
    use paratime::process::{connect_chain, encode_summary, CONNECT_TIMEOUT};
    let params = sim_params(&a.sim, a.walkers, a.sim.seed)?;
    let problem = load_problem(&a.problem, a.sim.rotate_basis)?;
    let plan = paratime::partition_times(problem.oracle().time_points(), a.sim.shards)?;
    if a.shard_id >= plan.n_shards() {
        return Err(CliError::Config(format!("shard {} of {}", a.shard_id, plan.n_shards())));
    }
    let (left, right) = connect_chain(&a.socket_dir, a.shard_id, plan.n_shards(), CONNECT_TIMEOUT)?;
    let report = paratime::run_shard(&params, problem.oracle(), problem.observables(), &plan, a.shard_id, left, right)?;
    print!("{}", encode_summary(&report));
    Ok(())
}

#[cfg(not(unix))]
pub fn cmd_shard(_: &ShardArgs) -> Result<(), CliError> {
    Err(CliError::Config("process shards need Unix domain sockets".into()))
}

fn status_label(s: RunStatus) -> String {
    match s {
        RunStatus::Completed => "completed".into(),
        RunStatus::Extinct { iteration } => format!("extinct@{iteration}"),
    }
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<fs::File>, CliError> {
    fs::create_dir_all(dir)?;
    Ok(csv::Writer::from_path(dir.join(name))?)
}

pub fn write_stats(dir: &Path, r: &RunResult, n_obs: usize) -> Result<(), CliError> {
    let mut w = writer(dir, "stats.csv")?;
    let mut header: Vec<String> = ["iter", "N_w", "S", "spawned", "died", "annihilated"].map(String::from).to_vec();
    header.extend((1..=n_obs).map(|k| format!("obs_{k}")));
    w.write_record(&header)?;
    for s in &r.stats {
        let mut row = vec![
            s.iteration.to_string(),
            s.walkers.to_string(),
            s.shift.to_string(),
            s.spawned.to_string(),
            s.died.to_string(),
            s.annihilated.to_string(),
        ];
        row.extend(s.estimates.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report(dir: &Path, r: &RunResult) -> Result<(), CliError> {
    let mut w = writer(dir, "report.csv")?;
    w.write_record(["observable", "mean", "error", "blocks", "status"])?;
    let status = status_label(r.status);
    for rep in &r.reports {
        let blocks = rep.samples / rep.block_size.max(1);
        w.write_record([rep.label.clone(), rep.mean.to_string(), rep.error.to_string(), blocks.to_string(), status.clone()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_run(cfg: &RunConfig) -> Result<RunResult, CliError> {
    let started = Instant::now();
    let r = execute(&cfg.problem, &cfg.params, &cfg.engine)?;
    write_stats(&cfg.out, &r, cfg.problem.observables().len())?;
    write_report(&cfg.out, &r)?;
    eprintln!(
        "{} iterations, mean N_w {:.1}, {} shard(s), {:.3} s",
        r.stats.len(),
        r.mean_walkers(),
        cfg.engine.shards(),
        started.elapsed().as_secs_f64()
    );
    match r.status {
        RunStatus::Completed => Ok(r),
        RunStatus::Extinct { iteration } => Err(CliError::Extinct { iteration }),
    }
}

/// Exact observables at every time point plus ground energy, gap and
/// ground-state overlap with the history state.
#[derive(Clone, Debug)]
pub struct ExactSummary {
    /// `values[t][k]`: observable `k` at time point `t`.
    pub values: Vec<Vec<f64>>,
    pub lambda0: f64,
    pub gap: f64,
    pub overlap: f64,
    pub dimension: usize,
}

pub fn exact_summary(problem: &ClockProblem) -> Result<ExactSummary, CliError> {
    let circuit = problem.circuit();
    let oracle = ClockOracle::new(circuit, problem.psi0());
    if oracle.dimension() > exact::DENSE_CLOCK_LIMIT {
        return Err(ExactError::SizeLimit { dim: oracle.dimension(), limit: exact::DENSE_CLOCK_LIMIT }.into());
    }
    let states = exact::evolve(circuit, problem.psi0())?;
    let ops: Vec<_> = problem.specs().iter().map(ObservableSpec::local_op).collect();
    let values = states.iter().map(|psi| ops.iter().map(|o| exact::exact_observable(psi, o)).collect()).collect();
    let spectrum = exact::ground_state(&exact::dense_clock(&oracle)?)?;
    let history = exact::history_state(circuit, problem.psi0())?;
    Ok(ExactSummary {
        values,
        lambda0: spectrum.eigenvalues[0],
        gap: spectrum.gap(),
        overlap: exact::overlap(&spectrum.ground, &history),
        dimension: oracle.dimension(),
    })
}

pub fn cmd_exact(a: &ExactArgs) -> Result<ExactSummary, CliError> {
    let problem = load_problem(&a.problem, false)?;
    let s = exact_summary(&problem)?;
    let mut w = writer(&a.out, "exact.csv")?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=problem.specs().len()).map(|k| format!("obs_{k}")));
    w.write_record(&header)?;
    for (t, row) in s.values.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    let mut w = writer(&a.out, "spectrum.csv")?;
    w.write_record(["lambda0", "gap", "overlap", "dimension"])?;
    w.write_record([s.lambda0.to_string(), s.gap.to_string(), s.overlap.to_string(), s.dimension.to_string()])?;
    w.flush()?;
    Ok(s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub target_walkers: u64,
    pub replica: u64,
    pub seed: u64,
    pub mean_walkers: f64,
    pub observable: String,
    pub mean: f64,
    pub error: f64,
    pub exact: f64,
    pub status: RunStatus,
}

/// Replicas use `seed = base_seed + replica`.
pub fn sweep(
    problem: &ClockProblem,
    engine: &Engine,
    sim: &SimArgs,
    targets: &[u64],
    replicas: u64,
) -> Result<Vec<SweepRow>, CliError> {
    if targets.len() < 2 {
        return Err(CliError::Config("a sweep needs at least two targets".into()));
    }
    if replicas == 0 {
        return Err(CliError::Config("--replicas must be at least 1".into()));
    }
    let exact_values = problem.exact_values()?;
    let mut rows = Vec::new();
    for &target in targets {
        for replica in 0..replicas {
            let seed = sim.seed.wrapping_add(replica);
            let params = sim_params(sim, target, seed)?;
            let r = execute(problem, &params, engine)?;
            for (rep, &exact) in r.reports.iter().zip(&exact_values) {
                rows.push(SweepRow {
                    target_walkers: target,
                    replica,
                    seed,
                    mean_walkers: r.mean_walkers(),
                    observable: rep.label.clone(),
                    mean: rep.mean,
                    error: rep.error,
                    exact,
                    status: r.status,
                });
            }
        }
    }
    Ok(rows)
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<Vec<SweepRow>, CliError> {
    let problem = load_problem(&a.problem, a.sim.rotate_basis)?;
    if a.sim.shards > problem.oracle().time_points() {
        return Err(CliError::Config(format!("{} shards for {} time points", a.sim.shards, problem.oracle().time_points())));
    }
    let rows = sweep(&problem, &Engine::from_args(&a.problem, &a.sim), &a.sim, &a.targets, a.replicas)?;
    let mut w = writer(&a.out, "sweep.csv")?;
    w.write_record(["target_walkers", "replica", "seed", "mean_walkers", "observable", "mean", "error", "exact", "status"])?;
    for r in &rows {
        w.write_record([
            r.target_walkers.to_string(),
            r.replica.to_string(),
            r.seed.to_string(),
            r.mean_walkers.to_string(),
            r.observable.clone(),
            r.mean.to_string(),
            r.error.to_string(),
            r.exact.to_string(),
            status_label(r.status),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}

/// `(T, gap)` for `T = tmin, 2·tmin, …, ≤ tmax` and the log-log slope.
pub fn gap_scan(tmin: usize, tmax: usize) -> Result<(Vec<(usize, f64)>, f64), CliError> {
    if tmax > MAX_GAP_TIME_POINTS {
        return Err(CliError::SizeLimit(format!("tmax {tmax} exceeds {MAX_GAP_TIME_POINTS}")));
    }
    if tmin < 2 || tmax < 2 {
        return Err(CliError::Config("need at least two time points".into()));
    }
    let mut rows = Vec::new();
    let mut t = tmin.min(tmax);
    while t <= tmax {
        rows.push((t, exact::clock_gap(&exact::identity_circuit(t), BasisState(0))?));
        t *= 2;
    }
    let slope = if rows.len() >= 2 {
        let xs: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
        exact::loglog_slope(&xs, &ys)
    } else {
        f64::NAN
    };
    Ok((rows, slope))
}

pub fn cmd_gap(a: &GapArgs) -> Result<(Vec<(usize, f64)>, f64), CliError> {
    let (rows, slope) = gap_scan(a.tmin, a.tmax)?;
    let mut w = writer(&a.out, "gap.csv")?;
    w.write_record(["T", "gap"])?;
    for (t, g) in &rows {
        w.write_record([t.to_string(), g.to_string()])?;
    }
    w.write_record(["slope".to_string(), slope.to_string()])?;
    w.flush()?;
    Ok((rows, slope))
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(a) => cmd_run(&RunConfig::from_args(a)?).map(drop),
        Command::Exact(a) => cmd_exact(a).map(drop),
        Command::Sweep(a) => cmd_sweep(a).map(drop),
        Command::Gap(a) => cmd_gap(a).map(drop),
        Command::Shard(a) => cmd_shard(a),
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("clockqmc: {e}");
            e.exit_code()
        }
    }
}
