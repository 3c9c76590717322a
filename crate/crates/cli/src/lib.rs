//! The `hedac` command line: maze generation, single runs with traces,
//! experiment plans, and SVG rendering.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid input, 3 run timeout or
//! solver non-convergence.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hedac_core::experiment::{write_plan_output, ExperimentError, ExperimentPlan};
use hedac_core::render::{export_frames, render_step, Palette, RenderError, RenderMode};
use hedac_core::sim::{sample_starts, Algorithm, Outcome, RunConfig, RunError, Scenario, Simulation};
use hedac_core::trace::{TraceDocument, TraceError, TraceHeader, TraceWriter};
use hedac_core::{
    decode_maze, encode_maze, generate_tree_maze, knock_down_walls, place_exit, BaselineConfig, HedacConfig, MazeGrid,
    Parallelism, SolveMethod, SolverSettings, TieBreak, UpdatePolicy,
};
use serde::Serialize;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INCOMPLETE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hedac", version, about = "Multi-agent maze exploration with a heat-equation potential field")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random maze document.
    Gen(GenArgs),
    /// Run one simulation and print a summary.
    Run(Box<RunArgs>),
    /// Run an experiment plan and write per-run and aggregate CSVs.
    Bench(BenchArgs),
    /// Render a trace as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 10)]
    pub width: usize,
    #[arg(long, default_value_t = 10)]
    pub height: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Target obstacle share; walls are knocked down from a tree maze.
    #[arg(long)]
    pub share: Option<f64>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Hedac,
    Kc,
    Alian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Exit,
    Map,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UpdateArg {
    PerAgent,
    PerStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TieBreakArg {
    Fixed,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Sor,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParallelArg {
    Off,
    Auto,
    Always,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Division,
    Heatmap,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let w: usize = w.trim().parse().map_err(|_| format!("bad width in {s:?}"))?;
    let h: usize = h.trim().parse().map_err(|_| format!("bad height in {s:?}"))?;
    if w == 0 || h == 0 {
        return Err("dimensions must be positive".into());
    }
    Ok((w, h))
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Maze document to explore.
    #[arg(long, conflicts_with = "random")]
    pub maze: Option<PathBuf>,
    /// Generate a tree maze of this size instead (default 10x10).
    #[arg(long, value_parser = parse_dims)]
    pub random: Option<(usize, usize)>,
    /// Obstacle share for --random mazes.
    #[arg(long, requires = "random")]
    pub share: Option<f64>,
    #[arg(long, value_enum, default_value_t = AlgoArg::Hedac)]
    pub algo: AlgoArg,
    #[arg(long, value_enum, default_value_t = ScenarioArg::Exit)]
    pub scenario: ScenarioArg,
    #[arg(long, default_value_t = 1)]
    pub agents: usize,
    #[arg(long, value_enum, default_value_t = OnOff::On)]
    pub ac: OnOff,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = UpdateArg::PerAgent)]
    pub update: UpdateArg,
    #[arg(long, value_enum, default_value_t = TieBreakArg::Fixed)]
    pub tie_break: TieBreakArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Sor)]
    pub method: MethodArg,
    /// Skip the extra sweeps that confirm each HEDAC move.
    #[arg(long)]
    pub no_certify: bool,
    #[arg(long)]
    pub known_maze: bool,
    /// Count the exit as found once it is seen from a visited neighbor.
    #[arg(long)]
    pub exit_on_sense: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Defaults to 50 times the node count.
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Parallel solver sweeps.
    #[arg(long, value_enum, default_value_t = ParallelArg::Auto)]
    pub parallel: ParallelArg,
    /// Worker threads for parallel sweeps (rayon default when omitted).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON experiment plan.
    #[arg(long)]
    pub plan: PathBuf,
    /// Per-run CSV; aggregates go next to it as `<stem>.agg.csv`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Division)]
    pub mode: ModeArg,
    /// Time step to render (last step when omitted).
    #[arg(long)]
    pub step: Option<usize>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write every time step as a numbered SVG into this directory.
    #[arg(long)]
    pub frames: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Incomplete(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Incomplete(_) => EXIT_INCOMPLETE,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn from_run_error(e: RunError) -> CliError {
    match e {
        RunError::NonConvergence { .. } => CliError::Incomplete(e.to_string()),
        RunError::TooManyAgents { .. } | RunError::Solver(_) => CliError::Usage(e.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

fn from_trace_error(path: &Path, e: TraceError) -> CliError {
    match e {
        TraceError::StepOutOfRange { .. } => CliError::Usage(e.to_string()),
        other => io_err(path, other),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn cli_main<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(&a, stdout),
        Command::Run(a) => with_threads(a.threads, stdout, |out| cmd_run(&a, out)),
        Command::Bench(a) => with_threads(a.threads, stdout, |out| cmd_bench(&a, out)),
        Command::Render(a) => cmd_render(&a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code()
        }
    }
}

/// Runs `f` inside a dedicated rayon pool when a thread count is given.
/// Output is buffered so the closure can move between threads.
fn with_threads<F>(threads: Option<usize>, stdout: &mut dyn Write, f: F) -> Result<i32, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> Result<i32, CliError> + Send,
{
    let mut buf = Vec::new();
    let result = match threads {
        None => f(&mut buf),
        Some(0) => Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
            pool.install(|| f(&mut buf))
        }
    };
    stdout.write_all(&buf).map_err(|e| CliError::Input(format!("stdout: {e}")))?;
    result
}

fn write_output(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_err(path, e)),
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::Input(format!("stdout: {e}"))),
    }
}

fn check_share(share: Option<f64>) -> Result<(), CliError> {
    match share {
        Some(f) if !(0.0..=1.0).contains(&f) => Err(CliError::Usage(format!("--share must lie in [0, 1], got {f}"))),
        _ => Ok(()),
    }
}

fn random_maze(width: usize, height: usize, share: Option<f64>, seed: u64) -> Result<MazeGrid, CliError> {
    check_share(share)?;
    let tree = generate_tree_maze(width, height, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let maze = match share {
        Some(f) => knock_down_walls(&tree, f, seed).map_err(|e| CliError::Usage(e.to_string()))?,
        None => tree,
    };
    Ok(place_exit(&maze, seed))
}

fn cmd_gen(a: &GenArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let maze = random_maze(a.width, a.height, a.share, a.seed)?;
    write_output(a.out.as_deref(), &format!("{}\n", encode_maze(&maze)), stdout)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct RunSummary {
    algo: &'static str,
    scenario: &'static str,
    width: usize,
    height: usize,
    n_agents: usize,
    seed: u64,
    outcome: &'static str,
    time_steps: u64,
    total_agent_steps: u64,
    percent_visited: f64,
}

fn load_maze(path: &Path) -> Result<MazeGrid, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    decode_maze(&text).map_err(|e| io_err(path, e))
}

fn run_config(a: &RunArgs, maze: &MazeGrid, scenario: Scenario) -> Result<RunConfig, CliError> {
    let max_steps = a.max_steps.unwrap_or(50 * maze.node_count() as u64);
    if a.algo != AlgoArg::Hedac {
        if a.known_maze {
            return Err(CliError::Usage("--known-maze applies to hedac only".into()));
        }
        let cfg = BaselineConfig { scenario, max_steps, exit_on_sense: a.exit_on_sense };
        return Ok(if a.algo == AlgoArg::Kc { RunConfig::Kc(cfg) } else { RunConfig::Alian(cfg) });
    }
    let defaults = SolverSettings::default();
    let solver = SolverSettings {
        alpha: a.alpha.unwrap_or(defaults.alpha),
        omega: a.omega.unwrap_or(defaults.omega),
        tol: a.tol.unwrap_or(defaults.tol),
        method: match a.method {
            MethodArg::Sor => SolveMethod::Sor,
            MethodArg::Jacobi => SolveMethod::Jacobi,
        },
        parallelism: match a.parallel {
            ParallelArg::Off => Parallelism::Off,
            ParallelArg::Auto => Parallelism::Auto,
            ParallelArg::Always => Parallelism::Always,
        },
        ..defaults
    };
    solver.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(RunConfig::Hedac(HedacConfig {
        anti_collision: a.ac == OnOff::On,
        update_policy: match a.update {
            UpdateArg::PerAgent => UpdatePolicy::PerAgent,
            UpdateArg::PerStep => UpdatePolicy::PerTimeStep,
        },
        tie_break: match a.tie_break {
            TieBreakArg::Fixed => TieBreak::FixedOrder,
            TieBreakArg::Random => TieBreak::SeededRandom,
        },
        max_steps,
        scenario,
        known_maze: a.known_maze,
        exit_on_sense: a.exit_on_sense,
        certify_moves: !a.no_certify,
        solver,
    }))
}

fn cmd_run(a: &RunArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let scenario = match a.scenario {
        ScenarioArg::Exit => Scenario::FindExit,
        ScenarioArg::Map => Scenario::MapAll,
    };
    let mut maze = match (&a.maze, a.random) {
        (Some(path), _) => load_maze(path)?,
        (None, dims) => {
            let (w, h) = dims.unwrap_or((10, 10));
            random_maze(w, h, a.share, a.seed)?
        }
    };
    if scenario == Scenario::FindExit && maze.exit().is_none() {
        maze = place_exit(&maze, a.seed);
    }
    if a.agents == 0 {
        return Err(CliError::Usage("--agents must be positive".into()));
    }
    let config = run_config(a, &maze, scenario)?;
    let starts = sample_starts(&maze, a.agents, a.seed).map_err(from_run_error)?;
    let mut sim = match &config {
        RunConfig::Hedac(c) => Simulation::hedac(&maze, &starts, *c, a.seed),
        RunConfig::Kc(c) => Simulation::baseline(Algorithm::Kc, &maze, &starts, *c, a.seed),
        RunConfig::Alian(c) => Simulation::baseline(Algorithm::Alian, &maze, &starts, *c, a.seed),
    }
    .map_err(from_run_error)?;

    let mut writer = match &a.trace {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_err(path, e))?;
            let header = TraceHeader { maze: maze.to_json_value(), config: config.clone(), seed: a.seed, starts: starts.clone() };
            let mut w = TraceWriter::new(BufWriter::new(file), &header).map_err(|e| io_err(path, e))?;
            w.step(&sim.steps()[0]).map_err(|e| io_err(path, e))?;
            Some((path.as_path(), w))
        }
        None => None,
    };
    while sim.outcome().is_none() && config.max_steps() > 0 {
        let stepped = sim.advance_time_step();
        if let (Ok(_), Some((path, w))) = (&stepped, writer.as_mut()) {
            let last = sim.steps().last().expect("at least one step");
            w.step(last).map_err(|e| io_err(path, e))?;
        }
        stepped.map_err(from_run_error)?;
    }
    let record = sim.into_record();
    if let Some((path, w)) = writer {
        let footer = hedac_core::trace::TraceFooter { outcome: record.outcome, time_steps: record.time_steps };
        w.finish(footer).map_err(|e| io_err(path, e))?;
    }

    let summary = RunSummary {
        algo: record.algorithm().name(),
        scenario: match scenario {
            Scenario::FindExit => "exit",
            Scenario::MapAll => "map",
        },
        width: maze.width(),
        height: maze.height(),
        n_agents: record.n_agents(),
        seed: a.seed,
        outcome: record.outcome.name(),
        time_steps: record.time_steps,
        total_agent_steps: record.total_agent_steps(),
        percent_visited: record.steps.last().map_or(0.0, |s| s.percent_visited),
    };
    let line = serde_json::to_string(&summary).expect("summary serializes");
    writeln!(stdout, "{line}").map_err(|e| CliError::Input(format!("stdout: {e}")))?;
    Ok(if record.outcome == Outcome::Timeout { EXIT_INCOMPLETE } else { EXIT_OK })
}

fn cmd_bench(a: &BenchArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let file = File::open(&a.plan).map_err(|e| io_err(&a.plan, e))?;
    let plan: ExperimentPlan = serde_json::from_reader(BufReader::new(file)).map_err(|e| io_err(&a.plan, e))?;
    let output = hedac_core::experiment::run_plan(&plan).map_err(|e| match e {
        ExperimentError::Run { source: RunError::NonConvergence { .. }, .. } => CliError::Incomplete(e.to_string()),
        other => CliError::Input(other.to_string()),
    })?;
    write_plan_output(&output, &a.out).map_err(|e| CliError::Input(e.to_string()))?;
    let mut text = String::from("algo,n_agents,runs,timeouts,mean_time_steps,mean_total_agent_steps\n");
    for g in &output.aggregates {
        text.push_str(&format!(
            "{},{},{},{},{:.3},{:.3}\n",
            g.algo.name(),
            g.n_agents,
            g.runs,
            g.timeouts,
            g.mean_time_steps,
            g.mean_total_agent_steps
        ));
    }
    stdout.write_all(text.as_bytes()).map_err(|e| CliError::Input(format!("stdout: {e}")))?;
    Ok(EXIT_OK)
}

fn cmd_render(a: &RenderArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let file = File::open(&a.trace).map_err(|e| io_err(&a.trace, e))?;
    let doc = TraceDocument::read(BufReader::new(file)).map_err(|e| from_trace_error(&a.trace, e))?;
    let mode = match a.mode {
        ModeArg::Division => RenderMode::Division,
        ModeArg::Heatmap => RenderMode::Heatmap,
    };
    let palette = Palette::default();
    let render_err = |e: RenderError| match e {
        RenderError::Trace(t) => from_trace_error(&a.trace, t),
        RenderError::Io { path, source } => CliError::Input(format!("{}: {source}", path.display())),
    };
    if let Some(dir) = &a.frames {
        let frames = export_frames(&doc, dir, mode, &palette).map_err(render_err)?;
        writeln!(stdout, "wrote {} frames to {}", frames.len(), dir.display())
            .map_err(|e| CliError::Input(format!("stdout: {e}")))?;
        if a.out.is_none() && a.step.is_none() {
            return Ok(EXIT_OK);
        }
    }
    let step = a.step.unwrap_or(doc.last_step());
    let svg = render_step(&doc, step, mode, &palette).map_err(render_err)?;
    write_output(a.out.as_deref(), &svg, stdout)?;
    Ok(EXIT_OK)
}
