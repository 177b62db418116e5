use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use multirent::document::{SolutionDocument, SolveStatus};
use multirent::model::PriceMatrix;
use multirent::money::money;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multirent"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn solve_nef_maximin_writes_ledger_from_even_witness() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solution.json");
    let input = fixture("example-five.json");
    let result = run(&[
        "solve",
        "--notion",
        "nef",
        "--objective",
        "maximin",
        "--in",
        path(&input),
        "--out",
        path(&out),
    ]);
    assert_eq!(
        result.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );
    let doc = SolutionDocument::parse(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc.status, SolveStatus::Solved);
    assert_eq!(doc.chosen, Some(0));
    assert_eq!(doc.instance.players, vec!["Ana", "Ben"]);
    let ledger = doc.ledger.unwrap();
    assert_eq!(ledger.start, PriceMatrix::from_ints(&[vec![50, 50], vec![50, 50]]));
    assert_eq!(Some(ledger.end), doc.prices);

    // The written document re-checks to the same verdict.
    let check = run(&[
        "check",
        "--notion",
        "nef",
        "--in",
        path(&input),
        "--solution",
        path(&out),
    ]);
    assert_eq!(check.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&check.stdout).unwrap();
    assert_eq!(report["outcome"], "holds");
}

#[test]
fn solve_uef_on_example_one_reports_none() {
    let input = fixture("example-one.json");
    let result = run(&["solve", "--notion", "uef", "--in", path(&input)]);
    assert_eq!(result.status.code(), Some(2));
    let doc = SolutionDocument::parse(&String::from_utf8(result.stdout).unwrap()).unwrap();
    assert_eq!(doc.status, SolveStatus::NoneExists);
}

#[test]
fn malformed_input_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"players\": [\"a\"],\n  \"apartments\": 3\n}\n").unwrap();
    let result = run(&["solve", "--notion", "nef", "--in", path(&bad)]);
    assert_eq!(result.status.code(), Some(1));
    let err = String::from_utf8(result.stderr).unwrap();
    assert!(err.contains("line 3") && err.contains("apartments"), "{err}");
    let missing = run(&["solve", "--notion", "nef", "--in", path(&dir.path().join("nope.json"))]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn strong_nef_checks_on_the_example_five_family() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("example-five.json");
    let zero = dir.path().join("zero.json");
    let solved = run(&[
        "solve",
        "--notion",
        "strong-nef",
        "--in",
        path(&input),
        "--out",
        path(&zero),
    ]);
    assert_eq!(solved.status.code(), Some(0));
    let mut doc = SolutionDocument::parse(&fs::read_to_string(&zero).unwrap()).unwrap();
    assert_eq!(doc.prices, Some(PriceMatrix::from_ints(&[vec![99, 1], vec![1, 99]])));
    let check = run(&[
        "check",
        "--notion",
        "strong-nef",
        "--in",
        path(&input),
        "--solution",
        path(&zero),
    ]);
    assert_eq!(check.status.code(), Some(0));

    let one = dir.path().join("one.json");
    doc.prices = Some(PriceMatrix::from_ints(&[vec![100, 0], vec![0, 100]]));
    fs::write(&one, serde_json::to_string(&doc).unwrap()).unwrap();
    let check = run(&[
        "check",
        "--notion",
        "strong-nef",
        "--in",
        path(&input),
        "--solution",
        path(&one),
    ]);
    assert_eq!(check.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&check.stdout).unwrap();
    assert_eq!(report["outcome"], "fails");
}

#[test]
fn check_rejects_mismatched_player_counts() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    let solved = run(&[
        "solve",
        "--notion",
        "nef",
        "--in",
        path(&fixture("example-five.json")),
        "--out",
        path(&sol),
    ]);
    assert_eq!(solved.status.code(), Some(0));
    let check = run(&[
        "check",
        "--notion",
        "nef",
        "--in",
        path(&fixture("monotonicity.json")),
        "--solution",
        path(&sol),
    ]);
    assert_eq!(check.status.code(), Some(1));
}

#[test]
fn solve_outputs_are_deterministic() {
    let input = fixture("monotonicity.json");
    let a = run(&[
        "solve",
        "--notion",
        "strong-nef",
        "--objective",
        "maximin",
        "--in",
        path(&input),
    ]);
    let b = run(&[
        "solve",
        "--notion",
        "strong-nef",
        "--objective",
        "maximin",
        "--in",
        path(&input),
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let doc = SolutionDocument::parse(&String::from_utf8(a.stdout).unwrap()).unwrap();
    let check_file = tempfile::NamedTempFile::new().unwrap();
    fs::write(check_file.path(), serde_json::to_string(&doc).unwrap()).unwrap();
    let check = run(&[
        "check",
        "--notion",
        "strong-nef",
        "--in",
        path(&input),
        "--solution",
        path(check_file.path()),
    ]);
    assert_eq!(check.status.code(), Some(0));
}

#[test]
fn monotonicity_values_through_the_cli() {
    let value = |name: &str| {
        let out = run(&[
            "solve",
            "--notion",
            "nef",
            "--objective",
            "maximin",
            "--in",
            path(&fixture(name)),
        ]);
        assert_eq!(out.status.code(), Some(0));
        SolutionDocument::parse(&String::from_utf8(out.stdout).unwrap())
            .unwrap()
            .objective_value
            .unwrap()
    };
    assert_eq!(value("monotonicity-single.json"), money(50));
    assert!(value("monotonicity.json") < money(50));
    assert_eq!(value("monotonicity-alternative.json"), money(200));
}

#[test]
fn def_solves_and_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("def.json");
    let input = fixture("example-one.json");
    assert_eq!(
        run(&["solve", "--notion", "def", "--in", path(&input), "--out", path(&out)])
            .status
            .code(),
        Some(0)
    );
    let check = run(&[
        "check",
        "--notion",
        "def",
        "--in",
        path(&input),
        "--solution",
        path(&out),
    ]);
    assert_eq!(check.status.code(), Some(0));
    let e5 = run(&["solve", "--notion", "def", "--in", path(&fixture("example-five.json"))]);
    assert_eq!(e5.status.code(), Some(2));
    let free = run(&[
        "solve",
        "--notion",
        "def",
        "--free-prices",
        "--in",
        path(&fixture("example-five.json")),
    ]);
    assert_eq!(free.status.code(), Some(0));
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        [
            "n",
            "m",
            "spec",
            "trials",
            "successes",
            "estimate",
            "ci_low",
            "ci_high",
            "seed"
        ]
    );
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn simulate_closed_form_grid_dips() {
    let out = run(&["simulate", "--mode", "closed-form", "--m", "10", "--r-steps", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 21);
    let values: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    let least = values.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(least < values[0] && least < values[20]);
    assert_eq!(rows[20][2], "corr-bernoulli:1");
}

#[test]
fn simulate_event_f_two_players() {
    let args = [
        "simulate", "--mode", "event-f", "--n", "2", "--m", "3", "--trials", "4000", "--seed", "5",
    ];
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out);
    let estimate: f64 = rows[0][5].parse().unwrap();
    assert!((estimate - 0.5).abs() < 3.0 * (0.25f64 / 4000.0).sqrt(), "{estimate}");
    assert_eq!(out.stdout, run(&args).stdout);
}

#[test]
fn simulate_estimate_and_stopping() {
    let out = run(&[
        "simulate",
        "--mode",
        "estimate",
        "--m",
        "1..3",
        "--spec",
        "discrete:0,1@0.5,0.5",
        "--trials",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv_rows(&out).len(), 3);
    let out = run(&["simulate", "--mode", "stopping", "--trials", "5", "--cap", "40"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv_rows(&out)[0][1], "40");
}

#[test]
fn simulate_rejects_bad_parameters() {
    assert_eq!(
        run(&["simulate", "--mode", "estimate", "--trials", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["simulate", "--mode", "estimate", "--spec", "normal"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["simulate", "--mode", "estimate", "--m", "0"]).status.code(),
        Some(1)
    );
}
