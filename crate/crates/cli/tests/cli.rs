//! End-to-end tests of the `supsat` binary: output shape, exit codes,
//! flag spellings, and the bench grid.

use std::path::Path;
use std::process::{Command, Output};

const PUMP: &str = "\
// branches c, a c, a a c, ...
%BEGING
S -> br c (a S).
%ENDG
%BEGINT
a -> 1. b -> 1. br -> 2. c -> 0.
%ENDT
%BEGINI
a.
%ENDI
";

const FINITE: &str = "\
%BEGING
S -> a c.
%ENDG
%BEGINT
a -> 1. c -> 0.
%ENDT
%BEGINI
a.
%ENDI
";

/// An order-4 tower; big enough that a zero-second deadline always fires.
const TOWER: &str = "\
%BEGING
S -> Q W D A c.
Q w g f x -> br (g f x) (Q w (w g) f x).
W g f y -> g (g f) y.
D f y -> f (f y).
A y -> a y.
%ENDG
%BEGINT
a -> 1. br -> 2. c -> 0.
%ENDT
%BEGINI
a.
%ENDI
";

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn supsat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supsat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn verdict_is_the_first_stdout_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "pump.hors", PUMP);

    let out = supsat(&["check", &file]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("UNBOUNDED"), "{text}");
    assert!(text.contains("witness cycle:"), "{text}");

    let out = supsat(&["check", &write(dir.path(), "fin.hors", FINITE)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().next(), Some("BOUNDED"));
}

#[test]
fn expect_gates_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "pump.hors", PUMP);

    let out = supsat(&["check", &file, "--expect", "unbounded"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let out = supsat(&["check", &file, "--expect", "bounded"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(stderr(&out).contains("expected BOUNDED, got UNBOUNDED"));
}

#[test]
fn input_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();

    let out = supsat(&["check", &dir.path().join("no.hors").to_string_lossy()]);
    assert_eq!(out.status.code(), Some(3));

    let bad = write(dir.path(), "bad.hors", "%BEGING\nS -> a c\n%ENDG\n");
    let out = supsat(&["check", &bad]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("3:1"), "{}", stderr(&out));

    let unlettered = write(
        dir.path(),
        "nolet.hors",
        "%BEGING\nS -> a c.\n%ENDG\n%BEGINT\na -> 1. c -> 0.\n%ENDT\n",
    );
    let out = supsat(&["check", &unlettered]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        stderr(&out).contains("no important letters declared"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn timeout_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "tower.hors", TOWER);
    let out = supsat(&["check", &file, "--timeout", "0"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).contains("time limit"), "{}", stderr(&out));
}

#[test]
fn json_is_a_single_object_with_the_contract_keys() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "pump.hors", PUMP);
    let out = supsat(&["check", &file, "--json", "--oracle"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1, "{text}");
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(v["verdict"], "UNBOUNDED");
    assert_eq!(v["safe"], true);
    assert_eq!(v["homogeneous"], true);
    assert_eq!(v["letters"], serde_json::json!(["a"]));
    assert!(v["stats"]["bindings"].as_u64().unwrap() >= 1);
    assert!(v["witness"]["cycle"].as_array().unwrap().len() >= 1);
    assert_eq!(v["oracle"]["confirmed"], true);
}

#[test]
fn letters_override_changes_the_question() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "pump.hors", PUMP);
    // b is declared but never occurs: the b-question is bounded.
    let out = supsat(&["check", &file, "--letters", "b"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().next(), Some("BOUNDED"));

    let out = supsat(&["check", &file, "--letters", "zz"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn single_dash_flag_spellings_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "pump.hors", PUMP);
    let out = supsat(&["check", &file, "-noftty", "-nofntty", "-nohvo"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().next(), Some("UNBOUNDED"));
}

#[test]
fn dumps_render_graph_derivations_and_flows() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "arg.hors",
        "%BEGING\nS -> F c.\nF x -> br x (a (F (a x))).\n%ENDG\n\
         %BEGINT\na -> 1. br -> 2. c -> 0.\n%ENDT\n%BEGINI\na.\n%ENDI\n",
    );
    let out = supsat(&[
        "check",
        &file,
        "--dump-graph",
        "--dump-derivations",
        "--dump-flows",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("digraph derivations {"), "{text}");
    assert!(text.contains("derivations:"), "{text}");
    assert!(text.contains(" value="), "{text}");
    assert!(text.contains("flows:"), "{text}");
    assert!(text.contains("(F, 0) <- {"), "{text}");
}

#[test]
fn oracle_prints_its_csv_profile() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "pump.hors", PUMP);
    let out = supsat(&["check", &file, "--oracle", "--oracle-depth", "40"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("oracle: confirmed"), "{text}");
    assert!(text.contains("depth,f\n"), "{text}");
}

#[test]
fn bench_grids_every_combo_and_checks_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "pump.hors", PUMP);
    std::fs::write(dir.path().join("pump.expect"), "UNBOUNDED\n").unwrap();
    write(dir.path(), "fin.hors", FINITE);

    let out = supsat(&["bench", &dir.path().to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let header = text
        .lines()
        .find(|l| l.starts_with("scheme"))
        .expect("header row");
    for combo in ["base", "f", "n", "h", "fn", "fh", "nh", "fnh"] {
        assert!(
            header.split_whitespace().any(|c| c == combo),
            "{header}"
        );
    }
    let pump_row = text.lines().find(|l| l.starts_with("pump")).unwrap();
    assert_eq!(pump_row.matches("U ").count(), 8, "{pump_row}");
    assert!(pump_row.contains("UNBOUNDED ok"), "{pump_row}");
    let fin_row = text.lines().find(|l| l.starts_with("fin")).unwrap();
    assert_eq!(fin_row.matches("B ").count(), 8, "{fin_row}");
    assert!(fin_row.trim_end().ends_with('-'), "{fin_row}");
}

#[test]
fn bench_of_an_empty_directory_is_fine() {
    let dir = tempfile::tempdir().unwrap();
    let out = supsat(&["bench", &dir.path().to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0));
}
