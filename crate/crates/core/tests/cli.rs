use std::path::{Path, PathBuf};
use std::process::Command;

use hfvar::cli::{read_path_csv, run};
use hfvar::Error;

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn hfvar(args: &[&str], out: &Path) -> Vec<PathBuf> {
    let mut full = vec!["hfvar"];
    full.extend_from_slice(args);
    let out = out.display().to_string();
    full.extend_from_slice(&["--out", &out]);
    run(full, &[]).unwrap()
}

fn mask_last_column(text: &str) -> String {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            if i == 0 {
                line.to_string()
            } else {
                let (head, _) = line.rsplit_once(',').unwrap();
                format!("{head},ELAPSED")
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

#[test]
fn linear_path_estimate_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let input = golden("linear_path.csv").display().to_string();
    hfvar(&["estimate", "--input", &input, "--k", "3", "--set", "est.estimators=v_hat"], dir.path());
    let text = read(&dir.path().join("estimates.csv"));
    assert_eq!(mask_last_column(&text), read(&golden("estimate_linear.csv")));
    let value: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - 0.048).abs() < 1e-15);
}

#[test]
fn simulation_output_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    hfvar(
        &["simulate", "--n", "8", "--seed", "42", "--set", "model.jumps=poisson", "--set", "model.lambda=3"],
        dir.path(),
    );
    assert_eq!(read(&dir.path().join("path.csv")), read(&golden("simulate_poisson_path.csv")));
    assert_eq!(read(&dir.path().join("jumps.csv")), read(&golden("simulate_poisson_jumps.csv")));
}

#[test]
fn csv_schemas_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    hfvar(&["simulate", "--n", "8", "--seed", "42", "--set", "model.jumps=poisson", "--set", "model.lambda=3"], &d.join("s"));
    let input = golden("linear_path.csv").display().to_string();
    hfvar(&["estimate", "--input", &input, "--k", "3", "--set", "est.estimators=v_hat"], &d.join("e"));
    hfvar(&["mc", "--n", "64", "--reps", "3", "--set", "mc.outputs=summary,replications,standardized"], &d.join("m"));
    hfvar(&["failure-demo", "--reps", "2", "--set", "mc.n_grid=64", "--set", "model.lambda=1"], &d.join("f"));
    let files = [
        ("path", "s/path.csv"),
        ("jumps", "s/jumps.csv"),
        ("estimates", "e/estimates.csv"),
        ("summary", "m/summary.csv"),
        ("replications", "m/replications.csv"),
        ("standardized", "m/standardized.csv"),
        ("failure", "f/failure.csv"),
    ];
    let actual: String = files
        .iter()
        .map(|(stem, file)| format!("{stem}: {}\n", read(&d.join(file)).lines().next().unwrap()))
        .collect();
    assert_eq!(actual, read(&golden("schemas.txt")));
}

#[test]
fn minimal_simulation_has_one_row_per_observation() {
    let dir = tempfile::tempdir().unwrap();
    hfvar(&["simulate", "--n", "100"], dir.path());
    let path = read(&dir.path().join("path.csv"));
    assert_eq!(path.lines().count(), 102);
    assert_eq!(read(&dir.path().join("jumps.csv")), "jump_time,jump_size\n");
    assert!(dir.path().join("resolved_config.toml").exists());
}

#[test]
fn jump_side_file_lists_every_jump() {
    let dir = tempfile::tempdir().unwrap();
    for seed in ["1", "2", "3"] {
        let sub = dir.path().join(seed);
        hfvar(
            &["simulate", "--n", "200", "--seed", seed, "--set", "model.jumps=poisson", "--set", "model.lambda=4", "--set", "run.truth=true"],
            &sub,
        );
        let model = hfvar::simulate::ModelSpec::brownian_plus_poisson(1.0, 4.0, 200);
        let path = hfvar::simulate::simulate_path(&model, seed.parse().unwrap()).unwrap();
        let rows = read(&sub.join("jumps.csv")).lines().count() - 1;
        assert_eq!(rows, path.jump_count());
        assert_eq!(read(&sub.join("truth.csv")).lines().count(), 202);
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["simulate", "--n", "500", "--seed", "9", "--set", "model.jumps=poisson", "--set", "model.lambda=2"];
    hfvar(&args, a.path());
    hfvar(&args, b.path());
    for f in ["path.csv", "jumps.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn json_lines_output() {
    let dir = tempfile::tempdir().unwrap();
    hfvar(&["simulate", "--n", "4", "--format", "jsonl"], dir.path());
    let text = read(&dir.path().join("path.jsonl"));
    assert_eq!(text.lines().count(), 5);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["t"], 0.0);
}

#[test]
fn resolved_config_can_be_replayed() {
    let dir = tempfile::tempdir().unwrap();
    hfvar(&["simulate", "--n", "16", "--seed", "5", "--set", "model.vol=geometric_ou", "--set", "model.vol_of_vol=0.4"], &dir.path().join("a"));
    let snapshot = dir.path().join("a/resolved_config.toml").display().to_string();
    hfvar(&["simulate", "--config", &snapshot], &dir.path().join("b"));
    assert_eq!(read(&dir.path().join("a/path.csv")), read(&dir.path().join("b/path.csv")));
}

#[test]
fn flags_override_the_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "[model]\nn = 50\n[run]\nseed = 3\n").unwrap();
    let out = dir.path().join("o").display().to_string();
    let cfg = config.display().to_string();
    let env = vec![("HFVAR_MODEL__N".to_string(), "60".to_string())];
    run(["hfvar", "simulate", "--config", &cfg, "--out", &out], &env).unwrap();
    assert_eq!(read(&dir.path().join("o/path.csv")).lines().count(), 62);
    run(["hfvar", "simulate", "--config", &cfg, "--out", &out, "--n", "70"], &env).unwrap();
    assert_eq!(read(&dir.path().join("o/path.csv")).lines().count(), 72);
    let snapshot = read(&dir.path().join("o/resolved_config.toml"));
    assert!(snapshot.contains("n = 70"));
}

#[test]
fn malformed_input_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.csv");
    std::fs::write(&file, "t,x\n0,0\n0.25,0.1\n0.5,oops\n1,1\n").unwrap();
    match read_path_csv(&file) {
        Err(Error::Parse { line: 4, message }) => assert!(message.contains("oops")),
        other => panic!("unexpected {other:?}"),
    }
    std::fs::write(&file, "time,value\n0,0\n").unwrap();
    assert!(matches!(read_path_csv(&file), Err(Error::Parse { line: 1, .. })));
    std::fs::write(&file, "t,x\n0,0\n0.5,1,2\n1,1\n").unwrap();
    assert!(matches!(read_path_csv(&file), Err(Error::Parse { line: 3, .. })));
}

fn exit_code(args: &[&str]) -> (i32, String) {
    let output = Command::new(env!("CARGO_BIN_EXE_hfvar")).args(args).output().unwrap();
    (output.status.code().unwrap(), String::from_utf8_lossy(&output.stderr).into_owned())
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    assert_eq!(exit_code(&["simulate", "--n", "10", "--out", &out]).0, 0);
    assert_eq!(exit_code(&["simulate", "--n", "1", "--out", &out]).0, 1);
    assert_eq!(exit_code(&["simulate", "--set", "model.sigma0=-1", "--out", &out]).0, 1);
    assert_eq!(exit_code(&["mc", "--unknown-flag"]).0, 1);
    let (code, stderr) = exit_code(&["simulate", "--set", "model.nn=3", "--out", &out]);
    assert_eq!(code, 1);
    assert!(stderr.contains("model.nn"));

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let unwritable = blocker.join("sub").display().to_string();
    assert_eq!(exit_code(&["simulate", "--out", &unwritable]).0, 2);
    let missing = dir.path().join("missing.csv").display().to_string();
    assert_eq!(exit_code(&["estimate", "--input", &missing, "--out", &out]).0, 2);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "t,x\n0,0\n1,x\n").unwrap();
    let (code, stderr) = exit_code(&["estimate", "--input", &bad.display().to_string(), "--out", &out]);
    assert_eq!(code, 1);
    assert!(stderr.contains("line 3"), "{stderr}");

    let (code, stderr) = exit_code(&["simulate", "--n", "10", "--set", "model.sigma0=1e200", "--set", "model.vol=geometric_ou", "--set", "model.vol_of_vol=1e200", "--out", &out]);
    assert_eq!(code, 3, "{stderr}");
}
