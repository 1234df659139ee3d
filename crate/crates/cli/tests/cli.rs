use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn verify(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_verify"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// report.json with the wall-clock field removed.
fn stable_report(dir: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    for item in v.as_array_mut().unwrap() {
        item.as_object_mut().unwrap().remove("runtime_ms");
    }
    v
}

#[test]
fn laplace_suite_passes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = verify(&["laplace", "--seed", "7", "--n", "100000"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = stable_report(dir.path());
    assert_eq!(report.as_array().unwrap().len(), 3);
    let config = fs::read_to_string(dir.path().join("config.txt")).unwrap();
    assert!(config.contains("seed=7") && config.contains("n=100000"));
    assert!(dir.path().join("laplace_verdicts.csv").exists());
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&verify(&["nonexistent"], dir.path())), 2);
    assert_eq!(code(&verify(&["laplace", "--n", "0"], dir.path())), 2);
    assert_eq!(code(&verify(&["laplace", "--dim", "5"], dir.path())), 2);
    assert_eq!(code(&verify(&["laplace", "--coeff", "s4"], dir.path())), 2);
    assert_eq!(code(&verify(&["laplace", "--config", "/no/such/file"], dir.path())), 2);
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "colour=blue\n").unwrap();
    assert_eq!(code(&verify(&["laplace", "--config", cfg.to_str().unwrap()], dir.path())), 2);
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# invalid on its own\nsuite=moments\nn=0\nseed=3\n").unwrap();
    let o = verify(&["--config", cfg.to_str().unwrap(), "--n", "20000"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let config = fs::read_to_string(dir.path().join("config.txt")).unwrap();
    assert!(config.contains("suite=moments") && config.contains("n=20000") && config.contains("seed=3"));
}

#[test]
fn rerun_is_identical_apart_from_runtime() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--suite", "fock,moments", "--seed", "11", "--n", "5000", "--shards", "3"];
    assert_eq!(code(&verify(&args, a.path())), 0);
    assert_eq!(code(&verify(&args, b.path())), 0);
    assert_eq!(stable_report(a.path()), stable_report(b.path()));
    let c = tempfile::tempdir().unwrap();
    verify(
        &["--suite", "fock,moments", "--seed", "12", "--n", "5000", "--shards", "3"],
        c.path(),
    );
    assert_ne!(stable_report(a.path()), stable_report(c.path()));
}

#[test]
fn one_particle_tables_have_monotone_spacing() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&verify(&["one-particle"], dir.path())), 0);
    let csv = fs::read_to_string(dir.path().join("one_particle_refinement.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "nodes,spacing,index,value,exact,order");
    let spacing: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(spacing.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn besq_sweep_table_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = verify(&["besq", "--n", "4000", "--em-n", "400", "--absorption-n", "40000"], dir.path());
    assert!(matches!(code(&o), 0 | 1));
    for variant in ["double", "unit"] {
        let csv = fs::read_to_string(dir.path().join(format!("besq_sweep_{variant}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,mc,se,closed_form_a,closed_form_b");
        assert_eq!(lines.count(), 8);
    }
}
