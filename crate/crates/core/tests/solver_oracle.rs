mod common;

use common::{discovered, has_unvisited, random_instance, reference_field, rel_max_diff};
use hedac_core::solver::{direct_solve_oracle, PotentialField, SolveMethod, SolverSettings, SourceScale};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn settings(alpha: f64, method: SolveMethod) -> SolverSettings {
    SolverSettings { alpha, tol: 1e-11, method, ..SolverSettings::default() }
}

#[test]
fn fixture_discovery_matches_the_knowledge_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let inst = random_instance(&mut rng, 8, 8);
        for k in 0..inst.maze.node_count() {
            let c = inst.maze.coord(k);
            assert_eq!(discovered(&inst, c), inst.ks.is_discovered(c), "{c}");
        }
    }
}

#[test]
fn sweeps_and_library_oracle_match_the_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    while checked < 150 {
        let inst = random_instance(&mut rng, 8, 8);
        if !has_unvisited(&inst) {
            continue;
        }
        checked += 1;
        for alpha in [0.1, 0.5, 1.0, 4.0] {
            let exact = reference_field(&inst, alpha);
            for method in [SolveMethod::Jacobi, SolveMethod::Sor] {
                let mut f = PotentialField::for_knowledge(&inst.ks, settings(alpha, method)).unwrap();
                let rep = f.solve(&inst.ks);
                assert!(rep.converged);
                let err = rel_max_diff(f.values(), &exact);
                assert!(err < 1e-8, "{method:?} alpha={alpha}: {err}");
            }
            let mut lib = vec![0.0; inst.maze.node_count()];
            for (c, v) in direct_solve_oracle(&inst.ks, alpha, SourceScale::Discovered).unwrap() {
                lib[inst.maze.index(c)] = v;
            }
            assert!(rel_max_diff(&lib, &exact) < 1e-10);
        }
    }
}

#[test]
fn everything_visited_gives_a_zero_field() {
    let m = hedac_core::generate_tree_maze(4, 3, 2).unwrap();
    let all: Vec<_> = (0..m.node_count()).map(|k| m.coord(k)).collect();
    let ks = hedac_core::KnowledgeState::init(&m, &all, false, false).unwrap();
    let mut f = PotentialField::for_knowledge(&ks, SolverSettings::default()).unwrap();
    f.set_value(all[3], 5.0);
    let rep = f.solve(&ks);
    assert_eq!(rep.sweeps, 0);
    assert!(f.values().iter().all(|&v| v == 0.0));
}
