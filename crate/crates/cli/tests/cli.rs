use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fujita-lab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn exponent_table_lists_lepin_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["exponents", "--N", "12", "--csv", "e.csv"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("pL  = 4\n"), "{stdout}");
    let csv = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert_eq!(column(&csv, "pL"), vec![4.0]);
    assert_eq!(column(&csv, "pS"), vec![1.4]);
}

#[test]
fn energy_ratio_column_is_strictly_decreasing() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(
        &[
            "energy-ratio",
            "--N",
            "12",
            "--p-min",
            "3.8",
            "--p-max",
            "12",
            "--steps",
            "50",
            "--out",
            "f.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let f = column(
        &std::fs::read_to_string(dir.path().join("f.csv")).unwrap(),
        "F_gamma",
    );
    assert_eq!(f.len(), 50);
    assert!(f.windows(2).all(|w| w[1] < w[0]));
    assert!(f.iter().all(|&x| x > 1.0));
}

#[test]
fn missing_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["evolve", "--config", "missing.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "N = 6\np = 5\nfoo = 1\n").unwrap();
    assert_eq!(
        lab(&["evolve", "--config", "bad.cfg"], dir.path())
            .status
            .code(),
        Some(2)
    );
    std::fs::write(dir.path().join("sub.cfg"), "N = 6\np = 0.9\n").unwrap();
    assert_eq!(
        lab(&["evolve", "--config", "sub.cfg"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lab(&["exponents", "--N", "2"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        lab(&["spectrum", "--N", "12", "--p", "3"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lab(
            &[
                "energy-ratio",
                "--N",
                "12",
                "--p-min",
                "1.2",
                "--p-max",
                "3"
            ],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fujita-lab"))
        .args(["exponents", "--N", "12"])
        .env("FUJITA_LAB_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_fujita-lab"))
        .args(["exponents", "--N", "12"])
        .env("FUJITA_LAB_THREADS", "2")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn evolve_writes_run_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("flat.cfg"),
        "# flat data\nN = 12\np = 5\ninitial = flat\nt0 = -2\nt_end = 1\npoints = 200\n\
         boundary = noflux\nout = out/flat.csv\nsnapshots = 0, 1\n",
    )
    .unwrap();
    std::fs::create_dir(dir.path().join("out")).unwrap();
    let out = lab(&["evolve", "--config", "flat.cfg"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = std::fs::read_to_string(dir.path().join("out/flat.csv")).unwrap();
    let sup = column(&run, "sup_norm");
    assert!(sup.windows(2).all(|w| w[1] <= w[0]));
    assert!(dir.path().join("out/flat.snap0.csv").exists());
    assert!(dir.path().join("out/flat.snap1.csv").exists());
}

#[test]
fn steady_sweep_and_search() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(
        &[
            "steady",
            "--N",
            "6",
            "--p",
            "5",
            "--steps",
            "4",
            "--alpha-min",
            "1",
            "--alpha-max",
            "20",
            "--find-k",
            "2",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("atlas.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.contains(",bounded_positive,2,"), "{last}");
}
