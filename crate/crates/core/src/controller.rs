//! HEDAC motion control: agents climb the potential field toward unvisited
//! nodes.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::knowledge::{AgentId, KnowledgeState};
use crate::maze::{Coord, MazeGrid};
use crate::sim::{AgentState, Policy, RunConfig, RunError, RunRecord, Scenario, Simulation, SolveStats, View};
use crate::solver::{PotentialField, SolveReport, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdatePolicy {
    /// Re-solve before every agent's decision.
    PerAgent,
    /// Solve once per time step, before the agent loop.
    PerTimeStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// First maximum in N, E, S, W order.
    FixedOrder,
    /// Uniform among exact ties, one draw per tied decision.
    SeededRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HedacConfig {
    pub anti_collision: bool,
    pub update_policy: UpdatePolicy,
    pub tie_break: TieBreak,
    pub max_steps: u64,
    pub scenario: Scenario,
    pub known_maze: bool,
    pub exit_on_sense: bool,
    /// Under per-agent updates, keep sweeping with tighter tolerances until
    /// the chosen neighbor is provably above the agent's node in the exact
    /// field (or the tolerance floor is reached).
    #[serde(default = "default_certify")]
    pub certify_moves: bool,
    pub solver: SolverSettings,
}

fn default_certify() -> bool {
    true
}

/// Tightest relative tolerance tried while certifying a move.
pub const CERTIFY_TOL_FLOOR: f64 = 1e-13;

impl HedacConfig {
    /// Defaults with `max_steps = 50 * nodes`.
    pub fn for_maze(maze: &MazeGrid, scenario: Scenario) -> Self {
        HedacConfig { max_steps: 50 * maze.node_count() as u64, scenario, ..Self::default() }
    }
}

impl Default for HedacConfig {
    fn default() -> Self {
        HedacConfig {
            anti_collision: true,
            update_policy: UpdatePolicy::PerAgent,
            tie_break: TieBreak::FixedOrder,
            max_steps: 10_000,
            scenario: Scenario::FindExit,
            known_maze: false,
            exit_on_sense: false,
            certify_moves: true,
            solver: SolverSettings::default(),
        }
    }
}

/// The known-open neighbor with the largest potential, skipping occupied
/// neighbors under anti-collision. Returns the current position when no
/// candidate remains (the agent waits).
pub fn choose_move(
    agent: &AgentState,
    field: &PotentialField,
    ks: &KnowledgeState,
    cfg: &HedacConfig,
    rng: &mut ChaCha8Rng,
) -> Coord {
    pick_max(agent.position, field, ks, cfg.anti_collision, cfg.tie_break, rng)
}

fn candidates(position: Coord, ks: &KnowledgeState, anti_collision: bool) -> Vec<Coord> {
    ks.known_open_neighbors(position)
        .into_iter()
        .filter(|&c| !(anti_collision && ks.is_occupied(c)))
        .collect()
}

fn pick_max(
    position: Coord,
    field: &PotentialField,
    ks: &KnowledgeState,
    anti_collision: bool,
    tie_break: TieBreak,
    rng: &mut ChaCha8Rng,
) -> Coord {
    let candidates = candidates(position, ks, anti_collision);
    let Some(best) = candidates.iter().map(|&c| field.value(c)).reduce(f64::max) else {
        return position;
    };
    let tied: Vec<Coord> = candidates.into_iter().filter(|&c| field.value(c) == best).collect();
    match tie_break {
        TieBreak::FixedOrder => tied[0],
        TieBreak::SeededRandom if tied.len() == 1 => tied[0],
        TieBreak::SeededRandom => tied[rng.random_range(0..tied.len())],
    }
}

pub(crate) struct HedacPolicy {
    field: PotentialField,
    cfg: HedacConfig,
}

impl HedacPolicy {
    /// Tightens the solve until the best candidate beats the agent's own node
    /// by more than twice the error bound, so the move climbs the exact field.
    fn certify(&mut self, position: Coord, ks: &KnowledgeState, mut residual: f64, stats: &mut SolveStats) {
        let cand = candidates(position, ks, self.cfg.anti_collision);
        let mut tol = self.cfg.solver.tol;
        loop {
            let Some(best) = cand.iter().map(|&c| self.field.value(c)).reduce(f64::max) else { return };
            let gap = best - self.field.value(position);
            if gap > 2.0 * self.field.error_bound(residual) || tol <= CERTIFY_TOL_FLOOR {
                return;
            }
            tol = (tol * 1e-2).max(CERTIFY_TOL_FLOOR);
            let report = self.field.solve_to(ks, tol);
            stats.sweeps += report.sweeps;
            residual = report.final_residual;
            if !report.converged {
                return;
            }
        }
    }

    fn solve(&mut self, ks: &KnowledgeState, stats: &mut SolveStats) -> Result<SolveReport, RunError> {
        let report = self.field.solve(ks);
        stats.solves += 1;
        stats.sweeps += report.sweeps;
        if !report.converged {
            return Err(RunError::NonConvergence {
                clock: ks.clock(),
                agent: None,
                residual: report.final_residual,
                sweeps: report.sweeps,
            });
        }
        Ok(report)
    }
}

impl Policy for HedacPolicy {
    fn begin_step(&mut self, view: &View<'_>, stats: &mut SolveStats) -> Result<(), RunError> {
        if self.cfg.update_policy == UpdatePolicy::PerTimeStep {
            self.solve(view.knowledge, stats)?;
        }
        Ok(())
    }

    fn choose(&mut self, agent: AgentId, view: &View<'_>, rng: &mut ChaCha8Rng, stats: &mut SolveStats) -> Result<Coord, RunError> {
        if self.cfg.update_policy == UpdatePolicy::PerAgent {
            let report = self.solve(view.knowledge, stats)?;
            if self.cfg.certify_moves {
                self.certify(view.positions[agent], view.knowledge, report.final_residual, stats);
            }
        }
        Ok(pick_max(
            view.positions[agent],
            &self.field,
            view.knowledge,
            self.cfg.anti_collision,
            self.cfg.tie_break,
            rng,
        ))
    }

    fn field(&self) -> Option<&PotentialField> {
        Some(&self.field)
    }
}

impl<'m> Simulation<'m> {
    /// A HEDAC simulation ready to step. `seed` drives the seeded tie-break.
    pub fn hedac(maze: &'m MazeGrid, starts: &[Coord], cfg: HedacConfig, seed: u64) -> Result<Self, RunError> {
        let field = PotentialField::new(maze.width(), maze.height(), cfg.solver)?;
        Simulation::new(maze, starts, RunConfig::Hedac(cfg), seed, Box::new(HedacPolicy { field, cfg }))
    }
}

/// Runs HEDAC until the exit is found, the maze is fully mapped, or
/// `max_steps` elapse. Deterministic per inputs.
pub fn run_scenario(maze: &MazeGrid, starts: &[Coord], cfg: HedacConfig, seed: u64) -> Result<RunRecord, RunError> {
    Simulation::hedac(maze, starts, cfg, seed)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::{decode_maze, generate_tree_maze, place_exit};
    use crate::rng::{stream, Stream};
    use crate::sim::{sample_starts, Outcome};

    fn cfg(scenario: Scenario) -> HedacConfig {
        HedacConfig { scenario, max_steps: 1000, ..HedacConfig::default() }
    }

    #[test]
    fn single_forced_move_finds_exit() {
        let m = MazeGrid::open(2, 1).unwrap().with_exit(Some(Coord::new(1, 0))).unwrap();
        let rec = run_scenario(&m, &[Coord::new(0, 0)], cfg(Scenario::FindExit), 0).unwrap();
        assert_eq!(rec.outcome, Outcome::ExitFound);
        assert_eq!(rec.time_steps, 1);
    }

    #[test]
    fn exit_under_a_start_is_found_at_time_zero() {
        let m = MazeGrid::open(3, 1).unwrap().with_exit(Some(Coord::new(1, 0))).unwrap();
        let rec = run_scenario(&m, &[Coord::new(1, 0)], cfg(Scenario::FindExit), 0).unwrap();
        assert_eq!((rec.outcome, rec.time_steps), (Outcome::ExitFound, 0));
    }

    #[test]
    fn exit_on_sense_stops_one_step_earlier() {
        let m = MazeGrid::open(3, 1).unwrap().with_exit(Some(Coord::new(2, 0))).unwrap();
        let on_visit = run_scenario(&m, &[Coord::new(0, 0)], cfg(Scenario::FindExit), 0).unwrap();
        let on_sense =
            run_scenario(&m, &[Coord::new(0, 0)], HedacConfig { exit_on_sense: true, ..cfg(Scenario::FindExit) }, 0).unwrap();
        assert_eq!(on_visit.time_steps, 2);
        assert_eq!(on_sense.time_steps, 1);
    }

    #[test]
    fn missing_exit_is_rejected() {
        let m = MazeGrid::open(2, 1).unwrap();
        assert_eq!(run_scenario(&m, &[Coord::new(0, 0)], cfg(Scenario::FindExit), 0), Err(RunError::MissingExit));
    }

    #[test]
    fn single_open_neighbor_is_taken() {
        let m = MazeGrid::open(4, 1).unwrap();
        let mut sim = Simulation::hedac(&m, &[Coord::new(0, 0)], cfg(Scenario::MapAll), 0).unwrap();
        sim.advance_time_step().unwrap();
        assert_eq!(sim.agents()[0].position, Coord::new(1, 0));
    }

    #[test]
    fn corridor_centre_moves_toward_unvisited_end() {
        // 1x3 corridor, fully known, left end visited, right end not.
        let m = MazeGrid::open(3, 1).unwrap();
        let c = HedacConfig { known_maze: true, ..cfg(Scenario::MapAll) };
        let mut sim = Simulation::hedac(&m, &[Coord::new(1, 0)], c, 0).unwrap();
        // Pre-visit the left end.
        sim.knowledge_mut().record_visit(Coord::new(0, 0), 0, Some(Coord::new(1, 0))).unwrap();
        sim.knowledge_mut().record_visit(Coord::new(1, 0), 0, Some(Coord::new(0, 0))).unwrap();
        sim.advance_time_step().unwrap();
        assert_eq!(sim.agents()[0].position, Coord::new(2, 0));
        let u = sim.field().unwrap();
        assert!(u.value(Coord::new(2, 0)) > u.value(Coord::new(1, 0)));
        assert!(u.value(Coord::new(1, 0)) > u.value(Coord::new(0, 0)));
    }

    #[test]
    fn blocked_agent_waits_under_anti_collision() {
        // 1x3 corridor: agent 0 at the left end, agent 1 at the right end,
        // centre unvisited. Agent 0 takes the centre; agent 1's only
        // neighbor is then occupied, so it waits.
        let m = MazeGrid::open(3, 1).unwrap();
        let mut sim = Simulation::hedac(&m, &[Coord::new(0, 0), Coord::new(2, 0)], cfg(Scenario::MapAll), 0).unwrap();
        sim.advance_time_step().unwrap();
        assert_eq!(sim.agents()[0].position, Coord::new(1, 0));
        assert_eq!(sim.agents()[1].position, Coord::new(2, 0));
        assert_eq!(sim.steps()[1].solves, 2);
    }

    #[test]
    fn all_neighbors_occupied_means_wait() {
        let m = MazeGrid::open(2, 1).unwrap();
        let ks = KnowledgeState::init(&m, &[Coord::new(0, 0), Coord::new(1, 0)], false, true).unwrap();
        let field = PotentialField::for_knowledge(&ks, SolverSettings::default()).unwrap();
        let agent = AgentState { id: 0, position: Coord::new(0, 0), trajectory: vec![Coord::new(0, 0)] };
        let mut rng = stream(0, Stream::Run);
        assert_eq!(choose_move(&agent, &field, &ks, &cfg(Scenario::MapAll), &mut rng), Coord::new(0, 0));
    }

    #[test]
    fn zero_agents_only_advance_the_clock() {
        let m = generate_tree_maze(4, 4, 1).unwrap();
        let mut sim = Simulation::hedac(&m, &[], cfg(Scenario::MapAll), 0).unwrap();
        let before = sim.knowledge().clone();
        sim.advance_time_step().unwrap();
        assert_eq!(sim.clock(), 1);
        assert_eq!(sim.knowledge().discovered_count(), before.discovered_count());
    }

    #[test]
    fn per_agent_policy_solves_once_per_agent() {
        let m = generate_tree_maze(8, 8, 2).unwrap();
        let starts = sample_starts(&m, 4, 2).unwrap();
        let mut sim = Simulation::hedac(&m, &starts, cfg(Scenario::MapAll), 0).unwrap();
        sim.advance_time_step().unwrap();
        assert_eq!(sim.steps()[1].solves, 4);

        let per_step = HedacConfig { update_policy: UpdatePolicy::PerTimeStep, ..cfg(Scenario::MapAll) };
        let mut sim = Simulation::hedac(&m, &starts, per_step, 0).unwrap();
        sim.advance_time_step().unwrap();
        assert_eq!(sim.steps()[1].solves, 1);
    }

    #[test]
    fn repeated_runs_are_identical() {
        let m = place_exit(&generate_tree_maze(10, 10, 4).unwrap(), 4);
        let starts = sample_starts(&m, 5, 4).unwrap();
        let c = HedacConfig { tie_break: TieBreak::SeededRandom, ..cfg(Scenario::FindExit) };
        let a = run_scenario(&m, &starts, c, 9).unwrap();
        let b = run_scenario(&m, &starts, c, 9).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn maps_a_small_maze() {
        let m = decode_maze(r#"{"width":2,"height":2,"walls":"c797"}"#).unwrap();
        let rec = run_scenario(&m, &[Coord::new(1, 0)], cfg(Scenario::MapAll), 0).unwrap();
        assert_eq!(rec.outcome, Outcome::FullyMapped);
        // (1,0) -> (0,0) -> (0,1) -> (1,1)
        assert_eq!(rec.time_steps, 3);
        assert_eq!(rec.steps.last().unwrap().percent_visited, 100.0);
    }
}
