use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_strichartz-lab"));
    c.env_remove("SOURCE_DATE_EPOCH").env_remove("STRICHARTZ_LAB_THREADS");
    c
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn strichartz-lab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exponents_prints_worked_values() {
    let o = run(bin().args(["exponents", "--n", "3", "--p", "3"]));
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("a(p)           = 2"), "{s}");
    assert!(s.contains("(3, 4)"), "{s}");
    let o = run(bin().args(["exponents", "--n", "3", "--l", "6", "--sigma", "2"]));
    assert!(stdout(&o).contains("admissible: true"));
    let o = run(bin().args(["exponents", "--n", "3", "--p", "inf"]));
    assert!(stdout(&o).contains("a(p)           = 1"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(bin().args(["exponents", "--n", "3", "--p", "3/x"])).status.code(), Some(2));
    assert_eq!(run(bin().args(["exponents", "--n", "3"])).status.code(), Some(2));
    assert_eq!(run(bin().args(["classify", "--n", "3", "--gamma", "one"])).status.code(), Some(2));
    assert_eq!(run(bin().arg("verify")).status.code(), Some(2));
    assert_eq!(run(bin().arg("frobnicate")).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let analysis = scenario("analysis");
    let o = run(bin()
        .arg("verify")
        .arg("--config")
        .arg(&analysis)
        .arg("--out")
        .arg(&out)
        .args(["--suite", "nope"]));
    assert_eq!(o.status.code(), Some(2));
    let o = run(bin()
        .arg("verify")
        .arg("--config")
        .arg(&analysis)
        .arg("--out")
        .arg(&out)
        .args(["--tolerance-scale", "-1"]));
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"name": "x", "colour": 3}"#).unwrap();
    assert_eq!(run(bin().arg("verify").arg("--config").arg(&bad)).status.code(), Some(2));
    assert_eq!(
        run(bin().arg("simulate").arg("--config").arg(dir.path().join("missing.json")))
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn classify_reports_threshold_side() {
    let o = run(bin().args(["classify", "--n", "3", "--gamma", "1.4"]));
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("feasible       : true"));
    let o = run(bin().args(["classify", "--n", "3", "--gamma", "8/5"]));
    assert!(stdout(&o).contains("feasible       : false"));
}

fn verify_into(out: &Path, epoch: Option<&str>, threads: Option<&str>) -> Output {
    let mut c = bin();
    c.arg("verify")
        .arg("--config")
        .arg(scenario("analysis"))
        .arg("--out")
        .arg(out)
        .args(["--suite", "exponents", "--suite", "bounds"]);
    if let Some(e) = epoch {
        c.env("SOURCE_DATE_EPOCH", e);
    }
    if let Some(t) = threads {
        c.env("STRICHARTZ_LAB_THREADS", t);
    }
    run(&mut c)
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn verify_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_eq!(verify_into(&a, Some("1700000000"), None).status.code(), Some(0));
    assert_eq!(verify_into(&b, Some("1700000000"), Some("1")).status.code(), Some(0));
    assert_eq!(verify_into(&c, None, None).status.code(), Some(0));
    let (ta, tb, tc) = (tree(&a), tree(&b), tree(&c));
    assert!(ta.iter().any(|(p, _)| p.ends_with("report.json")));
    assert!(ta.iter().any(|(p, _)| p.ends_with("report.txt")));
    assert_eq!(ta, tb);
    // without a pinned epoch only the timestamp line may differ
    assert_eq!(ta.len(), tc.len());
    for ((pa, xa), (pc, xc)) in ta.iter().zip(&tc) {
        assert_eq!(pa, pc);
        let strip = |x: &[u8]| -> Vec<String> {
            String::from_utf8_lossy(x)
                .lines()
                .filter(|l| !l.contains("generated_at"))
                .map(str::to_string)
                .collect()
        };
        assert_eq!(strip(xa), strip(xc), "{}", pa.display());
    }
    let json: serde_json::Value = serde_json::from_slice(&fs::read(a.join("analysis/report.json")).unwrap()).unwrap();
    assert_eq!(json["generated_at"], 1700000000);
    assert_eq!(json["pass"], true);
}

#[test]
fn simulate_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let o = run(bin()
        .arg("simulate")
        .arg("--config")
        .arg(scenario("harmonic"))
        .arg("--out")
        .arg(&out)
        .env("SOURCE_DATE_EPOCH", "0"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let base = out.join("harmonic");
    for f in [
        "summary.json",
        "norms.csv",
        "norm.dat",
        "variance.dat",
        "state_0000.bin",
        "state_0008.bin",
    ] {
        assert!(base.join(f).is_file(), "missing {f}");
    }
    let norms = fs::read_to_string(base.join("norms.csv")).unwrap();
    assert_eq!(norms.lines().count(), 10);
    assert!(fs::read_to_string(base.join("norm.dat")).unwrap().starts_with('#'));
}

#[test]
fn zero_duration_echoes_initial_state() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(scenario("harmonic")).unwrap()).unwrap();
    cfg["interval"] = serde_json::json!([0.5, 0.5]);
    let path = dir.path().join("zero.json");
    fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = dir.path().join("o");
    let o = run(bin().arg("simulate").arg("--config").arg(&path).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let base = out.join("harmonic");
    assert!(base.join("state_0000.bin").is_file());
    assert!(!base.join("state_0001.bin").exists());
    let initial = strichartz_lab::state::StateVector::read_binary(&base.join("state_0000.bin")).unwrap();
    let cfg = strichartz_lab::config::ScenarioConfig::load(&path).unwrap();
    let grid = cfg.grid().unwrap();
    let expected = cfg.initial_state(&grid).unwrap();
    assert!(initial.distance(&expected).unwrap() < 1e-15);
}

#[test]
fn catalog_directory_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cat = dir.path().join("cat");
    fs::create_dir(&cat).unwrap();
    fs::copy(scenario("analysis"), cat.join("a.json")).unwrap();
    fs::copy(scenario("control_over_singular"), cat.join("b.json")).unwrap();
    let o = run(bin().arg("verify").arg("--config").arg(&cat).arg("--out").arg(dir.path().join("o")));
    assert_eq!(o.status.code(), Some(1));
    assert!(dir.path().join("o/analysis/report.json").is_file());
    assert!(dir.path().join("o/control_over_singular/report.txt").is_file());
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(run(bin().arg("verify").arg("--config").arg(&empty)).status.code(), Some(2));
}
