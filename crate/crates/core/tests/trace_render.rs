use std::path::PathBuf;

use hedac_core::controller::{run_scenario, HedacConfig};
use hedac_core::maze::{decode_maze, generate_tree_maze, Coord};
use hedac_core::render::{export_frames, render_state, render_step, Palette, RenderMode};
use hedac_core::sim::{sample_starts, Scenario};
use hedac_core::trace::TraceDocument;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// 2x2 maze, open everywhere except the wall between (0,0) and (1,0),
/// exit at (1,0); agents start at (0,0) and (0,1).
fn fixture_doc() -> TraceDocument {
    let maze = decode_maze(r#"{"width":2,"height":2,"exit":[1,0],"walls":"ee93"}"#).unwrap();
    let starts = [Coord::new(0, 0), Coord::new(0, 1)];
    let rec = run_scenario(&maze, &starts, HedacConfig::for_maze(&maze, Scenario::FindExit), 0).unwrap();
    TraceDocument::from_record(&maze, &rec)
}

fn check_golden(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{} differs", path.display());
}

#[test]
fn fixture_trace_matches_golden() {
    check_golden("fixture_2x2.jsonl", &fixture_doc().to_jsonl());
}

#[test]
fn fixture_svgs_match_golden() {
    let doc = fixture_doc();
    let p = Palette::default();
    check_golden("fixture_2x2_division.svg", &render_step(&doc, doc.last_step(), RenderMode::Division, &p).unwrap());
    check_golden("fixture_2x2_heatmap.svg", &render_step(&doc, doc.last_step(), RenderMode::Heatmap, &p).unwrap());
}

#[test]
fn replay_reproduces_final_knowledge() {
    for (seed, scenario, n) in [(1, Scenario::MapAll, 1), (2, Scenario::MapAll, 4), (3, Scenario::FindExit, 3)] {
        let maze = hedac_core::place_exit(&generate_tree_maze(9, 7, seed).unwrap(), seed);
        let starts = sample_starts(&maze, n, seed).unwrap();
        let cfg = HedacConfig { anti_collision: seed % 2 == 0, ..HedacConfig::for_maze(&maze, scenario) };
        let mut sim = hedac_core::Simulation::hedac(&maze, &starts, cfg, seed).unwrap();
        while sim.outcome().is_none() {
            sim.advance_time_step().unwrap();
        }
        let final_ks = sim.knowledge().clone();
        let rec = sim.into_record();
        let text = TraceDocument::from_record(&maze, &rec).to_jsonl();
        let doc = TraceDocument::read(text.as_bytes()).unwrap();
        assert_eq!(doc.replay(doc.last_step()).unwrap(), final_ks);
    }
}

#[test]
fn frames_equal_rendered_steps() {
    let maze = generate_tree_maze(5, 4, 6).unwrap();
    let starts = sample_starts(&maze, 2, 6).unwrap();
    let rec = run_scenario(&maze, &starts, HedacConfig::for_maze(&maze, Scenario::MapAll), 6).unwrap();
    let doc = TraceDocument::from_record(&maze, &rec);
    let dir = tempfile::tempdir().unwrap();
    let p = Palette::default();
    let frames = export_frames(&doc, dir.path(), RenderMode::Heatmap, &p).unwrap();
    assert_eq!(frames.len() as u64, rec.time_steps + 1);
    for (k, path) in frames.iter().enumerate() {
        assert_eq!(path.file_name().unwrap().to_str().unwrap(), format!("frame_{k:04}.svg"));
        let ks = doc.replay(k).unwrap();
        assert_eq!(std::fs::read_to_string(path).unwrap(), render_state(&maze, &ks, RenderMode::Heatmap, &p));
    }
}

#[test]
fn one_step_run_gives_two_frames() {
    let maze = hedac_core::MazeGrid::open(2, 1).unwrap();
    let rec = run_scenario(&maze, &[Coord::new(0, 0)], HedacConfig::for_maze(&maze, Scenario::MapAll), 0).unwrap();
    assert_eq!(rec.time_steps, 1);
    let dir = tempfile::tempdir().unwrap();
    let frames = export_frames(&TraceDocument::from_record(&maze, &rec), dir.path(), RenderMode::Division, &Palette::default()).unwrap();
    assert_eq!(frames.len(), 2);
}

#[test]
fn frame_export_reports_the_failing_path() {
    let maze = hedac_core::MazeGrid::open(2, 1).unwrap();
    let rec = run_scenario(&maze, &[Coord::new(0, 0)], HedacConfig::for_maze(&maze, Scenario::MapAll), 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let err = export_frames(&TraceDocument::from_record(&maze, &rec), &blocker, RenderMode::Division, &Palette::default())
        .unwrap_err();
    assert!(err.to_string().contains("file"), "{err}");
}
