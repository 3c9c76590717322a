//! Multi-agent maze exploration driven by a discrete heat-equation
//! potential field, with baseline explorers, an experiment harness, run
//! traces and SVG rendering.

pub mod baselines;
pub mod controller;
pub mod experiment;
pub mod knowledge;
pub mod maze;
pub mod render;
pub mod rng;
pub mod sim;
pub mod solver;
pub mod stats;
pub mod trace;

pub use baselines::{run_baseline, BaselineConfig};
pub use controller::{run_scenario, HedacConfig, TieBreak, UpdatePolicy};
pub use experiment::{run_plan, ExperimentError, ExperimentPlan, MazeKind, PlanOutput, RunRow};
pub use knowledge::{EdgeKnowledge, KnowledgeError, KnowledgeState};
pub use maze::{
    decode_maze, encode_maze, generate_tree_maze, knock_down_walls, obstacle_share, place_exit, Coord, Direction,
    MazeError, MazeGrid,
};
pub use render::{export_frames, render_state, render_step, Palette, RenderError, RenderMode};
pub use sim::{sample_starts, Algorithm, Outcome, RunConfig, RunError, RunRecord, Scenario, Simulation, StepRecord};
pub use solver::{direct_solve_oracle, Parallelism, PotentialField, SolveMethod, SolveReport, SolverError, SolverSettings};
pub use stats::{paired_t_test, PairedTestResult};
pub use trace::{TraceDocument, TraceError, TraceWriter};
