use std::path::Path;
use std::process::Command;

use hedac_cli::{cli_main, EXIT_INCOMPLETE, EXIT_INPUT, EXIT_OK, EXIT_USAGE};

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Out {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("hedac").chain(args.iter().copied());
    let code = cli_main(argv, &mut out, &mut err);
    Out { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn no_arguments_is_a_usage_error() {
    let o = run(&[]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("Usage"), "{}", o.stderr);
}

#[test]
fn unknown_flags_and_subcommands() {
    assert_eq!(run(&["fly"]).code, EXIT_USAGE);
    assert_eq!(run(&["run", "--warp"]).code, EXIT_USAGE);
    assert_eq!(run(&["run", "--random", "3by3"]).code, EXIT_USAGE);
    assert_eq!(run(&["run", "--alpha", "-1"]).code, EXIT_USAGE);
    assert_eq!(run(&["run", "--agents", "0"]).code, EXIT_USAGE);
    assert_eq!(run(&["run", "--random", "2x2", "--agents", "5"]).code, EXIT_USAGE);
    assert_eq!(run(&["run", "--algo", "kc", "--known-maze"]).code, EXIT_USAGE);
    assert_eq!(run(&["gen", "--share", "1.5"]).code, EXIT_USAGE);
    let help = run(&["--help"]);
    assert_eq!(help.code, EXIT_OK);
    assert!(help.stdout.contains("render"));
}

#[test]
fn gen_then_run_then_render() {
    let dir = tempfile::tempdir().unwrap();
    let maze = dir.path().join("maze.json");
    let trace = dir.path().join("run.jsonl");
    let svg = dir.path().join("final.svg");
    assert_eq!(run(&["gen", "--width", "7", "--height", "5", "--seed", "4", "--out", p(&maze)]).code, EXIT_OK);

    let o = run(&["run", "--maze", p(&maze), "--agents", "3", "--scenario", "map", "--trace", p(&trace)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let summary: serde_json::Value = serde_json::from_str(o.stdout.trim()).unwrap();
    assert_eq!(summary["outcome"], "fully_mapped");
    assert_eq!(summary["n_agents"], 3);
    let steps = summary["time_steps"].as_u64().unwrap();
    let lines = std::fs::read_to_string(&trace).unwrap().lines().count() as u64;
    assert_eq!(lines, steps + 3);

    assert_eq!(run(&["render", "--trace", p(&trace), "--mode", "division", "--out", p(&svg)]).code, EXIT_OK);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && !text.contains(r##"fill="#000000"/>"##));

    let frames = dir.path().join("frames");
    let o = run(&["render", "--trace", p(&trace), "--mode", "heatmap", "--frames", p(&frames)]);
    assert_eq!(o.code, EXIT_OK);
    assert_eq!(std::fs::read_dir(&frames).unwrap().count() as u64, steps + 1);

    let o = run(&["render", "--trace", p(&trace), "--step", "100000"]);
    assert_eq!(o.code, EXIT_USAGE);
    let o = run(&["render", "--trace", p(&trace), "--step", "0"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.starts_with("<svg"));
}

#[test]
fn invalid_input_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    // (0,0) claims its east side is open while (1,0) claims a wall.
    std::fs::write(&bad, r#"{"width":2,"height":1,"walls":"ce"}"#).unwrap();
    let o = run(&["run", "--maze", p(&bad)]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.stderr.contains("bad.json"), "{}", o.stderr);
    assert_eq!(run(&["run", "--maze", p(&dir.path().join("absent.json"))]).code, EXIT_INPUT);
    let junk = dir.path().join("junk.jsonl");
    std::fs::write(&junk, "not json\n").unwrap();
    assert_eq!(run(&["render", "--trace", p(&junk)]).code, EXIT_INPUT);
    assert_eq!(run(&["bench", "--plan", p(&junk), "--out", p(&dir.path().join("o.csv"))]).code, EXIT_INPUT);
}

#[test]
fn kc_needs_a_tree() {
    let o = run(&["run", "--random", "8x8", "--share", "0.3", "--algo", "kc", "--agents", "2"]);
    assert_eq!(o.code, EXIT_INPUT);
    let o = run(&["run", "--random", "8x8", "--algo", "kc", "--agents", "2", "--ac", "off"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
}

#[test]
fn timeout_exit_code() {
    let o = run(&["run", "--random", "9x9", "--max-steps", "3"]);
    assert_eq!(o.code, EXIT_INCOMPLETE);
    assert!(o.stdout.contains(r#""outcome":"timeout""#));
}

#[test]
fn maze_without_exit_gets_one_for_exit_runs() {
    let dir = tempfile::tempdir().unwrap();
    let maze = dir.path().join("open.json");
    std::fs::write(&maze, r#"{"width":3,"height":1,"walls":"d57"}"#).unwrap();
    let o = run(&["run", "--maze", p(&maze), "--scenario", "exit"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(o.stdout.contains("exit_found"));
}

#[test]
fn bench_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    std::fs::write(
        &plan,
        r#"{"width":6,"height":6,"maze":"tree","agent_counts":[1,2],"algorithms":["hedac","alian"],"repetitions":3,"scenario":"map_all"}"#,
    )
    .unwrap();
    let out = dir.path().join("runs.csv");
    let o = run(&["bench", "--plan", p(&plan), "--out", p(&out), "--threads", "2"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 1 + 3 * 2 * 2);
    assert!(dir.path().join("runs.agg.csv").exists());
    assert_eq!(o.stdout.lines().count(), 1 + 4);
}

#[test]
fn seeded_runs_repeat_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let args = |t: &Path| {
        vec!["run", "--random", "8x8", "--share", "0.2", "--agents", "4", "--seed", "9", "--trace"]
            .into_iter()
            .map(String::from)
            .chain([p(t).to_string()])
            .collect::<Vec<_>>()
    };
    let ra = run(&args(&a).iter().map(String::as_str).collect::<Vec<_>>());
    let rb = run(&args(&b).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(ra.stdout, rb.stdout);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_hedac");
    let status = Command::new(bin).output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_USAGE));
    let out = Command::new(bin).args(["gen", "--width", "3", "--height", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8(out.stdout).unwrap().contains(r#""width":3"#));
}
