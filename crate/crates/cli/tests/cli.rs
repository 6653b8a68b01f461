//! Black-box tests of the `symtrace` binary.

use std::path::Path;
use std::process::{Command, Output};

fn symtrace<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_symtrace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

#[test]
fn extract_graph_prints_the_adjacency_json() {
    let output = symtrace(["extract-graph", "builtin:ant_maze_p4"]);
    assert!(output.status.success(), "{}", stderr(&output));
    let adjacency: std::collections::BTreeMap<u32, Vec<u32>> =
        serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(adjacency.len(), 23);
    assert_eq!(adjacency[&4], vec![3]);
}

#[test]
fn verify_accepts_the_published_adjacency() {
    let dir = tempfile::tempdir().unwrap();
    let declared = dir.path().join("declared.json");
    std::fs::write(&declared, symtrace::assets::ANT_FALL_P4_ADJACENCY).unwrap();

    let output = symtrace([
        "verify".as_ref(),
        "builtin:ant_fall_p4".as_ref(),
        declared.as_os_str(),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert_eq!(stdout(&output), "adjacency verified: 25 regions match\n");
}

#[test]
fn verify_rejects_a_wrong_adjacency_with_the_diff() {
    let dir = tempfile::tempdir().unwrap();
    let declared = dir.path().join("declared.json");
    // Claim an extra neighbor for region 4 and drop a real edge.
    let mut adjacency: std::collections::BTreeMap<u32, Vec<u32>> =
        serde_json::from_str(symtrace::assets::ANT_MAZE_P4_ADJACENCY).unwrap();
    adjacency.insert(4, vec![3, 9]);
    std::fs::write(&declared, serde_json::to_string(&adjacency).unwrap()).unwrap();

    let output = symtrace([
        "verify".as_ref(),
        "builtin:ant_maze_p4".as_ref(),
        declared.as_os_str(),
    ]);
    assert!(!output.status.success(), "tampered adjacency must fail");
    let report = stdout(&output);
    assert!(report.contains('4') && report.contains('9'), "diff missing: {report}");
}

#[test]
fn simulate_prints_the_canonical_trace() {
    let output = symtrace([
        "simulate",
        "builtin:ant_maze_p4",
        "builtin:ant-maze-canonical",
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert_eq!(
        stdout(&output),
        "5 -> 6 -> 1 -> 18 -> 15 -> 20 -> 19 -> 3 -> 4\n"
    );
}

#[test]
fn prompt_renders_all_four_sections() {
    let output = symtrace(["prompt", "builtin:ant_fall_p4", "ant-fall-03"]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    let needles = [
        "Data:",
        "- Adjacency list:",
        "- Explanation:",
        "- Instruction:",
        "- Thinking Process:",
        "- Final output form:",
    ];
    for needle in needles {
        assert!(text.contains(needle), "prompt lacks {needle:?}:\n{text}");
    }
}

#[test]
fn evaluate_replay_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let config_path = dir.path().join("config.json");
    let config = serde_json::json!({
        "scenarios": ["builtin:ant_maze_p4"],
        "queries_per_pair": 2,
        "base_seed": 5,
        "backend": { "kind": "echo" },
        "output_dir": run_dir,
    });
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let output = symtrace(["evaluate".as_ref(), "--config".as_ref(), config_path.as_os_str()]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(
        text.contains("evaluated 24 completions over 12 pairs with backend echo (offline)"),
        "unexpected evaluate output:\n{text}"
    );
    assert!(text.contains("ant-maze/IV/whole: mean 1.0000"));
    assert!(run_dir.join("scores.csv").is_file());

    let output = symtrace(["replay".as_ref(), "--run".as_ref(), run_dir.as_os_str()]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(stdout(&output).contains("scores.csv reproduces byte for byte"));

    let output = symtrace([
        "report".as_ref(),
        run_dir.as_os_str(),
        "--format".as_ref(),
        "csv".as_ref(),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let report_path = run_dir.join("report.csv");
    assert!(report_path.is_file());
    let report = std::fs::read_to_string(report_path).unwrap();
    assert_eq!(
        report,
        "backend,model,ant-maze/IV/whole\necho,offline,1\n"
    );
}

#[test]
fn svg_report_is_written_next_to_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let config_path = dir.path().join("config.json");
    let config = serde_json::json!({
        "scenarios": ["builtin:ant_fall_p4"],
        "queries_per_pair": 1,
        "base_seed": 1,
        "backend": { "kind": "planner" },
        "output_dir": run_dir,
    });
    std::fs::write(&config_path, serde_json::to_string(&config).unwrap()).unwrap();
    let output = symtrace(["evaluate".as_ref(), "--config".as_ref(), config_path.as_os_str()]);
    assert!(output.status.success(), "{}", stderr(&output));

    let output = symtrace([
        "report".as_ref(),
        run_dir.as_os_str(),
        "--format".as_ref(),
        "svg".as_ref(),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let svg = std::fs::read_to_string(run_dir.join("report.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("class=\"box\""));
}

#[test]
fn unknown_builtin_fails_with_a_clear_error() {
    let output = symtrace(["extract-graph", "builtin:no_such_grid"]);
    assert!(!output.status.success());
    let text = stderr(&output);
    assert!(text.starts_with("error:"), "unexpected stderr: {text}");
    assert!(text.contains("no_such_grid"), "unexpected stderr: {text}");
}

#[test]
fn unknown_instruction_id_fails_cleanly() {
    let output = symtrace(["prompt", "builtin:ant_maze_p4", "no-such-id"]);
    assert!(!output.status.success());
    assert!(stderr(&output).contains("no-such-id"));
}

#[test]
fn missing_config_file_reports_the_path() {
    let path = Path::new("/definitely/not/here.json");
    let output = symtrace(["evaluate".as_ref(), "--config".as_ref(), path.as_os_str()]);
    assert!(!output.status.success());
    assert!(stderr(&output).contains("here.json"), "{}", stderr(&output));
}
