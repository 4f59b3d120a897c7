use std::fs;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use evoport::report::read_report;

fn evoport(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evoport"))
        .args(args)
        .current_dir(cwd)
        .stdin(Stdio::null())
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn onemax_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("PortParameters.txt"),
        "problemType = 10\nstringSize = 50\n",
    )
    .unwrap();
    let out = evoport(
        &[
            "run",
            "PortParameters.txt",
            "--target",
            "50",
            "--out",
            "out",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let files: Vec<_> = fs::read_dir(dir.path().join("out")).unwrap().collect();
    assert_eq!(files.len(), 1);
    let path = dir.path().join("out/PORTFOLIO_10_0.txt");
    let contents = fs::read_to_string(&path).unwrap();
    let last = contents.lines().last().unwrap();
    assert!(last.contains("bestFitness=50\t"), "{last}");
    assert_eq!(read_report(&path).unwrap().best_fitness, Some(50.0));
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("# evoport v1"));
    assert!(stdout.trim_end().ends_with("bestFitness=50"));
}

#[test]
fn list_problems_prints_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let out = evoport(&["list-problems"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 16);
    for entry in ["0 ZeroMax", "10 OneMax", "21 HierarchicalTrapOne"] {
        assert!(lines.contains(&entry), "{entry}");
    }
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = evoport(&["run", "missing.txt"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("missing.txt"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["frobnicate"][..], &["run", "x.txt", "--bogus"], &["run"]] {
        let out = evoport(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(text(&out.stderr).contains("Usage:"), "{args:?}");
    }
    let out = evoport(&["run", "x", "--time-mode", "cpu"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("--time-mode"));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "stringSize = ten\n").unwrap();
    let out = evoport(&["run", "a.txt", "--max-sweeps", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("stringSize"));

    fs::write(
        dir.path().join("b.txt"),
        "problemType = 21\nstringSize = 30\n",
    )
    .unwrap();
    let out = evoport(&["run", "b.txt", "--max-sweeps", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    // No stop condition and no terminal.
    fs::write(dir.path().join("c.txt"), "problemType = 10\n").unwrap();
    let out = evoport(&["run", "c.txt"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn several_runs_write_separate_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("PortParameters.txt"),
        "problemType = 15\nstringSize = 20\nmaxSweeps = 4\n",
    )
    .unwrap();
    let out = evoport(
        &["run", "PortParameters.txt", "--runs", "4", "--seed", "7"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let mut seeds = Vec::new();
    for run in 0..4 {
        let parsed = read_report(&dir.path().join(format!("PORTFOLIO_15_{run}.txt"))).unwrap();
        let field = |k: &str| {
            parsed
                .header
                .iter()
                .find(|(key, _)| key == k)
                .unwrap()
                .1
                .clone()
        };
        assert_eq!(field("run"), run.to_string());
        assert_eq!(field("baseSeed"), "7");
        seeds.push(field("seed"));
        assert_eq!(parsed.history.len(), 4);
    }
    seeds.sort();
    seeds.dedup();
    assert_eq!(seeds.len(), 4);

    // A second invocation must not overwrite the first.
    let out = evoport(
        &["run", "PortParameters.txt", "--runs", "1", "--seed", "7"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let first = fs::read(dir.path().join("PORTFOLIO_15_0.txt")).unwrap();
    let again = fs::read(dir.path().join("PORTFOLIO_15_0.1.txt")).unwrap();
    assert_eq!(first, again);
}

#[test]
fn algorithm_files_are_read_next_to_the_portfolio_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("cfg")).unwrap();
    fs::write(
        dir.path().join("cfg/PortParameters.txt"),
        "problemType = 10\nstringSize = 16\nmaxSweeps = 2\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("cfg/ParParameters.txt"),
        "initialPopSize = 32\n",
    )
    .unwrap();
    let out = evoport(&["run", "cfg/PortParameters.txt", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let parsed = read_report(&dir.path().join("o/PORTFOLIO_10_0.txt")).unwrap();
    let sizes = &parsed.history[0].engines[0].population_sizes;
    assert!(sizes.iter().all(|s| s % 32 == 0), "{sizes:?}");

    fs::write(dir.path().join("cfg/ParParameters.txt"), "popSize = 32\n").unwrap();
    let out = evoport(&["run", "cfg/PortParameters.txt", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("initialPopSize"));
}
