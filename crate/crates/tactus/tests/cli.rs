//! End-to-end tests of the command-line interface: exit codes, pinned
//! output strings, file products, and diagnostics.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tactus"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited")
}

#[test]
fn compile_writes_a_parseable_taskset_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args(["compile", fixture("fcs.mps").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("wrote fcs.taskset.json (12 tasks, 11 buffers)"));
    let text = std::fs::read_to_string(dir.path().join("fcs.taskset.json")).unwrap();
    let doc = tactus::taskset::parse_file(&text).unwrap();
    assert_eq!(doc.tasks.len(), 12);
    // Recompiling produces the identical bytes: the format is canonical.
    let out2 = bin()
        .current_dir(dir.path())
        .args(["compile", fixture("fcs.mps").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out2), 0);
    let text2 = std::fs::read_to_string(dir.path().join("fcs.taskset.json")).unwrap();
    assert_eq!(text, text2);
}

#[test]
fn compile_honors_the_output_flag() {
    let dir = tempfile::tempdir().unwrap();
    let custom = dir.path().join("custom.json");
    let out = bin()
        .args([
            "compile",
            fixture("dw.mps").to_str().unwrap(),
            "-o",
            custom.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(custom.exists());
}

#[test]
fn dumps_print_signatures_words_and_dot() {
    let out = bin()
        .args([
            "compile",
            fixture("fcs.mps").to_str().unwrap(),
            "-o",
            tempfile::NamedTempFile::new()
                .unwrap()
                .path()
                .to_str()
                .unwrap(),
            "--dump-types",
            "--dump-clocks",
            "--dump-dwords",
            "--dump-graph",
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("FCS: (int*int*int*int)->int"), "{text}");
    assert!(
        text.contains("FCS: ((120,0)*(10,0)*(10,0)*(10,0))->(40,0)"),
        "{text}"
    );
    assert!(text.contains("AA: (5.10.10.10)^w"), "{text}");
    assert!(text.contains("digraph tasks"), "{text}");
    assert!(text.contains("style=dashed"), "{text}");
}

#[test]
fn a_causality_cycle_is_rejected_with_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mps");
    std::fs::write(
        &bad,
        "node loop(i: int rate(10,0)) returns (x)\nlet\n  x = x + 1;\ntel\n",
    )
    .unwrap();
    let out = bin()
        .args(["compile", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("causality cycle: x"), "{err}");
    assert!(err.contains("bad.mps:3:3"), "{err}");
}

#[test]
fn a_file_without_nodes_has_no_main() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty-main.mps");
    std::fs::write(
        &empty,
        "imported node N(i: int) returns (o: int) wcet 1;\n",
    )
    .unwrap();
    let out = bin()
        .args(["compile", empty.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("main node not found"), "{}", stderr(&out));
}

#[test]
fn simulating_the_flight_controller_is_clean() {
    let out = bin()
        .args(["simulate", fixture("fcs.mps").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(stdout(&out), "0 misses, 0 mismatches over [0,240)\n");
}

#[test]
fn uniform_deadlines_miss_on_the_two_stage_chain() {
    let out = bin()
        .args([
            "simulate",
            fixture("dw.mps").to_str().unwrap(),
            "--policy",
            "edf-uniform",
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("miss:"), "{}", stderr(&out));
    assert!(stdout(&out).contains("misses over [0,16)"), "{}", stdout(&out));
}

#[test]
fn a_taskset_file_simulates_without_a_semantics_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args(["compile", fixture("fcs.mps").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let gantt = dir.path().join("g.txt");
    let out = bin()
        .current_dir(dir.path())
        .args([
            "simulate",
            "fcs.taskset.json",
            "--gantt",
            gantt.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(
        stdout(&out).contains("semantics check skipped (no source)"),
        "{}",
        stdout(&out)
    );
    let chart = std::fs::read_to_string(&gantt).unwrap();
    assert_eq!(chart.lines().count(), 12, "one row per task:\n{chart}");
    assert!(chart.contains('#'), "some task runs:\n{chart}");
}

#[test]
fn the_event_trace_is_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    let out = bin()
        .args([
            "simulate",
            fixture("dw.mps").to_str().unwrap(),
            "--trace",
            trace.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(!text.is_empty());
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("t").is_some() && v.get("ev").is_some(), "{line}");
    }
}

#[test]
fn traced_flows_print_tag_value_rows() {
    let out = bin()
        .args([
            "simulate",
            fixture("dw.mps").to_str().unwrap(),
            "--trace-flows",
            "o,x",
            "--horizon",
            "16",
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("o:\n"), "{text}");
    assert!(text.contains("x:\n"), "{text}");
    // x = A(i) at period 4: instance 1 carries tag 4 and A applied to
    // the second sensor sample.
    assert!(text.contains("(4, A<1>(i<1>()))"), "{text}");
    // o = B(x /^ 2) at period 8: instance 1 reads x's instance 2.
    assert!(text.contains("(8, B<1>(A<2>(i<2>())))"), "{text}");
}

#[test]
fn jitter_is_rejected() {
    let out = bin()
        .args([
            "simulate",
            fixture("dw.mps").to_str().unwrap(),
            "--jitter",
            "0.1",
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("not supported"), "{}", stderr(&out));
}

#[test]
fn unreadable_input_is_a_usage_error() {
    let out = bin()
        .args(["simulate", "does-not-exist.mps"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
}

#[test]
fn malformed_taskset_json_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.taskset.json");
    std::fs::write(&bad, "{\"version\": 1").unwrap();
    let out = bin()
        .args(["simulate", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
}

#[test]
fn unknown_flags_exit_with_the_usage_code() {
    let out = bin()
        .args(["simulate", "--frobnicate"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    let out = bin().args(["--help"]).output().unwrap();
    assert_eq!(code(&out), 0);
}

#[test]
fn check_reports_every_file_and_keeps_the_worst_exit() {
    let out = bin()
        .args([
            "check",
            fixture("fcs.mps").to_str().unwrap(),
            fixture("dw.mps").to_str().unwrap(),
            fixture("msu.mps").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.matches(": ok (").count(), 3, "{text}");

    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("dw.mps"), dir.path().join("dw.mps")).unwrap();
    std::fs::write(
        dir.path().join("bad.mps"),
        "node loop(i: int rate(10,0)) returns (x)\nlet x = x + 1; tel\n",
    )
    .unwrap();
    let out = bin()
        .args(["check", "--all", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains(": ok ("));
    assert!(stderr(&out).contains("causality cycle"));
}

#[test]
fn check_without_inputs_is_a_usage_error() {
    let out = bin().args(["check"]).output().unwrap();
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("no input files"), "{}", stderr(&out));
}
