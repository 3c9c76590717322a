//! Benchmark plans and the metrics reported for them.
//!
//! A plan is a grid of `repetitions x agent_counts x algorithms` runs. For
//! repetition `r` the maze seed and the start seed are both `base_seed + r`
//! (the maze seed stays at `base_seed` when `fixed_maze` is set), so every
//! algorithm in a cell sees the same maze, exit and starts.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{run_baseline, BaselineConfig};
use crate::controller::{run_scenario, HedacConfig, TieBreak, UpdatePolicy};
use crate::maze::{generate_tree_maze, knock_down_walls, obstacle_share, place_exit, MazeError, MazeGrid};
use crate::sim::{sample_starts, Algorithm, Outcome, RunError, RunRecord, Scenario};
use crate::solver::SolverSettings;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MazeKind {
    /// Perfect maze straight from the generator.
    Tree,
    /// Perfect maze with walls knocked down to this obstacle share.
    Share(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub width: usize,
    pub height: usize,
    pub maze: MazeKind,
    #[serde(default)]
    pub known_maze: bool,
    /// Reuse one maze (seed `base_seed`) for every repetition.
    #[serde(default)]
    pub fixed_maze: bool,
    pub agent_counts: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub scenario: Scenario,
    #[serde(default = "default_true")]
    pub anti_collision: bool,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default = "default_update")]
    pub update_policy: UpdatePolicy,
    #[serde(default = "default_tie_break")]
    pub tie_break: TieBreak,
    #[serde(default)]
    pub exit_on_sense: bool,
    #[serde(default = "default_true")]
    pub certify_moves: bool,
    /// Defaults to 50 time steps per maze node.
    #[serde(default)]
    pub max_steps: Option<u64>,
}

fn default_true() -> bool {
    true
}

fn default_update() -> UpdatePolicy {
    UpdatePolicy::PerAgent
}

fn default_tie_break() -> TieBreak {
    TieBreak::FixedOrder
}

impl ExperimentPlan {
    /// A plan with default solver and controller settings.
    pub fn new(width: usize, height: usize, maze: MazeKind, scenario: Scenario) -> Self {
        ExperimentPlan {
            width,
            height,
            maze,
            known_maze: false,
            fixed_maze: false,
            agent_counts: vec![1],
            algorithms: vec![Algorithm::Hedac],
            repetitions: 1,
            base_seed: 0,
            scenario,
            anti_collision: true,
            solver: SolverSettings::default(),
            update_policy: UpdatePolicy::PerAgent,
            tie_break: TieBreak::FixedOrder,
            exit_on_sense: false,
            certify_moves: true,
            max_steps: None,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::InvalidPlan(m.to_string()));
        if self.width == 0 || self.height == 0 {
            return bad("maze dimensions must be positive");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.agent_counts.is_empty() || self.algorithms.is_empty() {
            return bad("agent_counts and algorithms must not be empty");
        }
        if let MazeKind::Share(f) = self.maze {
            if !(0.0..=1.0).contains(&f) {
                return bad("obstacle share must lie in [0, 1]");
            }
        }
        if let Some(&n) = self.agent_counts.iter().find(|&&n| n > self.width * self.height) {
            return Err(ExperimentError::InvalidPlan(format!("{n} agents do not fit on {} nodes", self.width * self.height)));
        }
        self.solver.validate().map_err(|e| ExperimentError::InvalidPlan(e.to_string()))
    }

    pub fn run_count(&self) -> usize {
        self.repetitions * self.agent_counts.len() * self.algorithms.len()
    }

    pub fn maze_seed(&self, repetition: usize) -> u64 {
        if self.fixed_maze {
            self.base_seed
        } else {
            self.base_seed + repetition as u64
        }
    }

    pub fn start_seed(&self, repetition: usize) -> u64 {
        self.base_seed + repetition as u64
    }

    /// The maze (with exit for the exit scenario) used by `repetition`.
    pub fn build_maze(&self, repetition: usize) -> Result<MazeGrid, MazeError> {
        let seed = self.maze_seed(repetition);
        let tree = generate_tree_maze(self.width, self.height, seed)?;
        let maze = match self.maze {
            MazeKind::Tree => tree,
            MazeKind::Share(f) => knock_down_walls(&tree, f, seed)?,
        };
        Ok(match self.scenario {
            Scenario::FindExit => place_exit(&maze, seed),
            Scenario::MapAll => maze,
        })
    }

    fn max_steps_for(&self, maze: &MazeGrid) -> u64 {
        self.max_steps.unwrap_or(50 * maze.node_count() as u64)
    }

    pub fn hedac_config(&self, maze: &MazeGrid) -> HedacConfig {
        HedacConfig {
            anti_collision: self.anti_collision,
            update_policy: self.update_policy,
            tie_break: self.tie_break,
            max_steps: self.max_steps_for(maze),
            scenario: self.scenario,
            known_maze: self.known_maze,
            exit_on_sense: self.exit_on_sense,
            certify_moves: self.certify_moves,
            solver: self.solver,
        }
    }

    pub fn baseline_config(&self, maze: &MazeGrid) -> BaselineConfig {
        BaselineConfig { scenario: self.scenario, max_steps: self.max_steps_for(maze), exit_on_sense: self.exit_on_sense }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("maze generation failed for repetition {repetition}: {source}")]
    Maze { repetition: usize, source: MazeError },
    #[error("run {run_id} (repetition {repetition}, {n_agents} agents, {algo}) failed: {source}", algo = .algo.name())]
    Run { run_id: usize, repetition: usize, n_agents: usize, algo: Algorithm, source: RunError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run_id: usize,
    pub algo: Algorithm,
    pub scenario: String,
    pub width: usize,
    pub height: usize,
    pub share: f64,
    pub tree: bool,
    pub known: bool,
    pub ac: bool,
    pub n_agents: usize,
    pub maze_seed: u64,
    pub start_seed: u64,
    pub outcome: String,
    pub time_steps: u64,
    pub total_agent_steps: u64,
}

/// Per-cell means, one line per (algorithm, agent count).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algo: Algorithm,
    pub scenario: String,
    pub width: usize,
    pub height: usize,
    pub share: f64,
    pub tree: bool,
    pub known: bool,
    pub ac: bool,
    pub n_agents: usize,
    pub runs: usize,
    pub timeouts: usize,
    pub mean_time_steps: f64,
    pub mean_total_agent_steps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutput {
    pub rows: Vec<RunRow>,
    pub aggregates: Vec<AggregateRow>,
}

pub fn scenario_label(s: Scenario) -> &'static str {
    match s {
        Scenario::FindExit => "exit",
        Scenario::MapAll => "map",
    }
}

struct Cell<'a> {
    plan: &'a ExperimentPlan,
    maze: &'a MazeGrid,
    repetition: usize,
    n_agents: usize,
    algo: Algorithm,
    run_id: usize,
}

fn run_cell(cell: &Cell<'_>) -> Result<RunRecord, ExperimentError> {
    let plan = cell.plan;
    let seed = plan.start_seed(cell.repetition);
    let wrap = |source| ExperimentError::Run {
        run_id: cell.run_id,
        repetition: cell.repetition,
        n_agents: cell.n_agents,
        algo: cell.algo,
        source,
    };
    let starts = sample_starts(cell.maze, cell.n_agents, seed).map_err(wrap)?;
    match cell.algo {
        Algorithm::Hedac => run_scenario(cell.maze, &starts, plan.hedac_config(cell.maze), seed),
        algo => run_baseline(algo, cell.maze, &starts, plan.baseline_config(cell.maze), seed),
    }
    .map_err(wrap)
}

fn row_for(plan: &ExperimentPlan, maze: &MazeGrid, repetition: usize, run_id: usize, rec: &RunRecord) -> RunRow {
    RunRow {
        run_id,
        algo: rec.algorithm(),
        scenario: scenario_label(plan.scenario).to_string(),
        width: plan.width,
        height: plan.height,
        share: obstacle_share(maze),
        tree: maze.is_tree(),
        known: plan.known_maze,
        ac: rec.config.anti_collision(),
        n_agents: rec.n_agents(),
        maze_seed: plan.maze_seed(repetition),
        start_seed: plan.start_seed(repetition),
        outcome: rec.outcome.name().to_string(),
        time_steps: rec.time_steps,
        total_agent_steps: rec.total_agent_steps(),
    }
}

/// Runs every cell of the plan and hands each record to `keep`. Repetitions
/// run in parallel; the result is in canonical run order.
pub fn run_plan_with<T, F>(plan: &ExperimentPlan, keep: F) -> Result<Vec<(RunRow, T)>, ExperimentError>
where
    T: Send,
    F: Fn(RunRecord) -> T + Sync,
{
    plan.validate()?;
    let per_rep = plan.agent_counts.len() * plan.algorithms.len();
    let chunks: Vec<Result<Vec<(RunRow, T)>, ExperimentError>> = (0..plan.repetitions)
        .into_par_iter()
        .map(|r| {
            let maze = plan.build_maze(r).map_err(|source| ExperimentError::Maze { repetition: r, source })?;
            let mut out = Vec::with_capacity(per_rep);
            for (ni, &n_agents) in plan.agent_counts.iter().enumerate() {
                for (ai, &algo) in plan.algorithms.iter().enumerate() {
                    let run_id = r * per_rep + ni * plan.algorithms.len() + ai;
                    let cell = Cell { plan, maze: &maze, repetition: r, n_agents, algo, run_id };
                    let rec = run_cell(&cell)?;
                    out.push((row_for(plan, &maze, r, run_id, &rec), keep(rec)));
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(plan.run_count());
    for chunk in chunks {
        all.extend(chunk?);
    }
    Ok(all)
}

/// Runs the plan and keeps the full records.
pub fn run_plan_records(plan: &ExperimentPlan) -> Result<Vec<(RunRow, RunRecord)>, ExperimentError> {
    run_plan_with(plan, |rec| rec)
}

pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanOutput, ExperimentError> {
    let rows: Vec<RunRow> = run_plan_with(plan, |_| ())?.into_iter().map(|(row, ())| row).collect();
    let aggregates = aggregate(&rows);
    Ok(PlanOutput { rows, aggregates })
}

/// Per-(algorithm, agent count) means, ordered by algorithm then agent count.
pub fn aggregate(rows: &[RunRow]) -> Vec<AggregateRow> {
    let mut cells: BTreeMap<(Algorithm, usize), Vec<&RunRow>> = BTreeMap::new();
    for row in rows {
        cells.entry((row.algo, row.n_agents)).or_default().push(row);
    }
    cells
        .into_iter()
        .map(|((algo, n_agents), group)| {
            let runs = group.len();
            let first = group[0];
            AggregateRow {
                algo,
                scenario: first.scenario.clone(),
                width: first.width,
                height: first.height,
                share: group.iter().map(|r| r.share).sum::<f64>() / runs as f64,
                tree: group.iter().all(|r| r.tree),
                known: first.known,
                ac: first.ac,
                n_agents,
                runs,
                timeouts: group.iter().filter(|r| r.outcome == Outcome::Timeout.name()).count(),
                mean_time_steps: group.iter().map(|r| r.time_steps as f64).sum::<f64>() / runs as f64,
                mean_total_agent_steps: group.iter().map(|r| r.total_agent_steps as f64).sum::<f64>() / runs as f64,
            }
        })
        .collect()
}

pub fn write_rows<W: Write, S: Serialize>(out: W, rows: &[S]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|source| ExperimentError::Io { path: "<csv>".into(), source })?;
    Ok(())
}

pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<RunRow>, ExperimentError> {
    csv::Reader::from_reader(input).deserialize().collect::<Result<_, _>>().map_err(Into::into)
}

/// Writes `path` (per-run rows) and its `.agg.csv` sibling (per-cell means).
pub fn write_plan_output(output: &PlanOutput, path: &Path) -> Result<(), ExperimentError> {
    let file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
    write_rows(std::io::BufWriter::new(file), &output.rows)?;
    let agg = aggregate_path(path);
    let file = std::fs::File::create(&agg).map_err(|e| io_error(&agg, e))?;
    write_rows(std::io::BufWriter::new(file), &output.aggregates)
}

fn io_error(path: &Path, source: std::io::Error) -> ExperimentError {
    ExperimentError::Io { path: path.display().to_string(), source }
}

pub fn aggregate_path(path: &Path) -> std::path::PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.agg.csv"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityRow {
    pub n_agents: usize,
    pub runs: usize,
    pub mean_time_steps: f64,
    pub mean_total_agent_steps: f64,
}

/// Mean time steps and mean total agent steps per agent count.
pub fn scalability_metrics<'a, I>(records: I) -> Vec<ScalabilityRow>
where
    I: IntoIterator<Item = &'a RunRecord>,
{
    let mut by_n: BTreeMap<usize, (usize, u64, u64)> = BTreeMap::new();
    for rec in records {
        let e = by_n.entry(rec.n_agents()).or_default();
        e.0 += 1;
        e.1 += rec.time_steps;
        e.2 += rec.total_agent_steps();
    }
    by_n.into_iter()
        .map(|(n_agents, (runs, t, a))| ScalabilityRow {
            n_agents,
            runs,
            mean_time_steps: t as f64 / runs as f64,
            mean_total_agent_steps: a as f64 / runs as f64,
        })
        .collect()
}

/// (time step, percent of all maze nodes visited) for every recorded step.
pub fn coverage_curve(record: &RunRecord) -> Vec<(u64, f64)> {
    record.steps.iter().map(|s| (s.clock, s.percent_visited)).collect()
}

/// Pointwise mean of coverage curves; shorter curves hold their final value.
pub fn mean_coverage_curve<'a, I>(records: I) -> Vec<f64>
where
    I: IntoIterator<Item = &'a RunRecord>,
{
    let curves: Vec<Vec<f64>> = records.into_iter().map(|r| r.steps.iter().map(|s| s.percent_visited).collect()).collect();
    let len = curves.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|t| {
            let sum: f64 = curves.iter().map(|c| c.get(t).or(c.last()).copied().unwrap_or(0.0)).sum();
            sum / curves.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares y = slope * x + intercept. Needs two distinct x.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept, r_squared })
}
