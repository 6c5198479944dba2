use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bqo_core::arrays::is_bad;
use bqo_core::format::load_array;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn bqo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bqo"))
        .args(args)
        .env_remove("BQO_ENUM_CAP")
        .output()
        .expect("the binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn valid_block_reports_barrier_status() {
    let o = bqo(&["check-block", p(&data("block_valid.toml"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("block: valid, barrier: no\n"), "{}", stdout(&o));
}

#[test]
fn invalid_block_fails_with_status_one() {
    let o = bqo(&["check-block", p(&data("block_invalid.toml"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("block: invalid"));
}

#[test]
fn non_increasing_element_is_an_input_error_with_its_line() {
    let o = bqo(&["check-block", p(&data("block_nonmonotone.toml"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("block_nonmonotone.toml:5:3:"), "{}", stderr(&o));
}

#[test]
fn missing_reflexive_pair_is_named() {
    let o = bqo(&["check-relation", p(&data("missing_reflexive.toml"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("missing pair (b, b)"));
    let o = bqo(&["check-relation", "--partial-order", p(&data("chain3.toml"))]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn ranking_violation_prints_the_first_triple() {
    let o = bqo(&[
        "check-ranking",
        p(&data("antichain2.toml")),
        p(&data("bad_ranking.toml")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("(x, x, y)"), "{}", stdout(&o));
    let o = bqo(&[
        "check-ranking",
        p(&data("doubled.toml")),
        p(&data("doubled_ranking.toml")),
    ]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn singleton_target_has_no_bad_array() {
    let o = bqo(&[
        "bad-array",
        "--relation",
        p(&data("antichain1.toml")),
        "--window",
        "0..3",
        "--rank",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("none:"));
}

#[test]
fn budget_exhaustion_exits_with_three_and_reports_progress() {
    let o = bqo(&[
        "--budget",
        "10",
        "--json",
        "bad-array",
        "--relation",
        p(&data("antichain2.toml")),
        "--window",
        "0..4",
        "--rank",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("\"explored\""), "{}", stdout(&o));
}

#[test]
fn environment_cap_bounds_the_budget() {
    let o = Command::new(env!("CARGO_BIN_EXE_bqo"))
        .args([
            "bad-array",
            "--relation",
            p(&data("antichain2.toml")),
            "--window",
            "0..4",
            "--rank",
            "3",
        ])
        .env("BQO_ENUM_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    let o = Command::new(env!("CARGO_BIN_EXE_bqo"))
        .args(["demo", "rado", "--n", "3"])
        .env("BQO_ENUM_CAP", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn found_arrays_round_trip_in_both_encodings() {
    for json in [false, true] {
        let (relation, ranking) = (data("doubled.toml"), data("doubled_ranking.toml"));
        let mut args = vec!["bad-array", "--relation", p(&relation)];
        args.extend(["--ranking", p(&ranking), "--window", "0..4", "--rank", "2"]);
        if json {
            args.push("--json");
        }
        let o = bqo(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let file = scratch(if json { "found.json" } else { "found.toml" });
        std::fs::write(&file, stdout(&o)).unwrap();
        let loaded = load_array(&file, 1000).unwrap();
        assert!(is_bad(&loaded.array).unwrap().bad_in_window);
        assert!(!loaded.array.target().ranking().is_identity());
        // The emitted document feeds the next command unchanged.
        let again = bqo(&["min-bad", "--mode", "laver", p(&file), "--json"]);
        let min_doc = stdout(&again);
        let echoed = min_doc.find("\"array\"").expect("input echoed");
        assert!(min_doc[echoed..].contains("\"window\""));
    }
}

#[test]
fn laver_minimality_with_identity_ranking_echoes_a_minimal_input() {
    let o = bqo(&[
        "bad-array",
        "--relation",
        p(&data("antichain2.toml")),
        "--window",
        "0..1",
        "--rank",
        "1",
    ]);
    let file = scratch("antichain_rank1.toml");
    std::fs::write(&file, stdout(&o)).unwrap();
    let o = bqo(&["min-bad", "--mode", "laver", "--rank", "1", p(&file)]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).starts_with("# laver minimal at rank 1: yes"));
}

#[test]
fn rado_demo_reports_all_artifacts() {
    let o = bqo(&["demo", "rado", "--n", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("partial order: yes"));
    assert!(out.contains("bad sequence of length 7"));
    assert!(out.contains("bad in window: yes"));
    let small = bqo(&["demo", "rado", "--n", "2"]);
    assert_eq!(small.status.code(), Some(0));
    assert!(stdout(&small).contains("too small"));
    assert_eq!(bqo(&["demo", "rado", "--n", "11"]).status.code(), Some(2));
}

fn canonical(window: &str, name: &str) -> PathBuf {
    let file = scratch(name);
    let o = bqo(&[
        "gadget",
        "build",
        p(&data("family.toml")),
        "--window",
        window,
        "--write-canonical",
        p(&file),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    file
}

#[test]
fn gadget_canonical_descent_passes_its_checks() {
    let f0 = canonical("0..4", "canonical04.toml");
    for extra in [None, Some("--fixed-window")] {
        let mut args = vec!["descend", p(&f0), "--rank", "3", "--json"];
        args.extend(extra);
        let o = bqo(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let out = stdout(&o);
        assert!(out.contains("\"p_non_decreasing\": true"));
        assert!(out.contains("\"departure_preserved\": true"));
    }
}

#[test]
fn step_limit_is_recorded() {
    let f0 = canonical("0..4", "canonical04_limit.toml");
    let o = bqo(&["descend", p(&f0), "--rank", "3", "--max-steps", "0", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\"status\": \"step-limit\""));
}

#[test]
fn decode_and_substitute_on_the_gadget() {
    let f = canonical("0..4", "canonical04_sub.toml");
    let o = bqo(&["gadget", "decode", p(&f), "--coord", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("decode yes"));
    let h = scratch("member1_bad.toml");
    let o = bqo(&[
        "bad-array",
        "--relation",
        p(&data("rado3.toml")),
        "--window",
        "1,2,3",
        "--rank",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    std::fs::write(&h, stdout(&o)).unwrap();
    let o = bqo(&["gadget", "substitute", p(&f), "--coord", "1", "--with", p(&h)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("bad: yes, strictly below the input: yes"));
}

#[test]
fn machine_output_is_deterministic_across_runs_and_jobs() {
    let f0 = canonical("0..4", "canonical04_det.toml");
    let doubled = data("doubled.toml");
    let runs: Vec<Vec<&str>> = vec![
        vec!["demo", "rado", "--n", "8", "--json"],
        vec![
            "bad-array",
            "--relation",
            p(&doubled),
            "--window",
            "0..4",
            "--rank",
            "3",
            "--json",
        ],
        vec!["descend", p(&f0), "--rank", "3", "--json"],
        vec!["gadget", "build", "--random", "--seed", "7", "--json"],
    ];
    for args in runs {
        let first = stdout(&bqo(&args));
        assert!(!first.is_empty());
        assert_eq!(first, stdout(&bqo(&args)), "{args:?}");
        let mut parallel = args.clone();
        parallel.extend(["--jobs", "4"]);
        assert_eq!(first, stdout(&bqo(&parallel)), "{args:?} with --jobs 4");
    }
}
