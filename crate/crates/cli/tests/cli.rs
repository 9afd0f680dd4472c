use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(format!("{name}.cfg"))
}

fn chanspec(args: &[&str], out: &Path, env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_chanspec"));
    c.args(args).arg("--out").arg(out);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    fs::write(&p, body).unwrap();
    p
}

const SMALL_BOX: &str = "schema = chanspec-config/1
model.omega = 1
model.lambda = 1.4331521777639865
eigen.count = 4
ladder.box_x = 2,3
ladder.box_y = 2,2
";

#[test]
fn classify_free_fixture() {
    let d = tempfile::tempdir().unwrap();
    let o = chanspec(&["classify", "--config", fixture("free").to_str().unwrap()], d.path(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json = fs::read_to_string(d.path().join("classify.json")).unwrap();
    assert!(json.contains("\"regime\": \"subcritical\""), "{json}");
    assert!(json.contains("\"config_hash\""));
}

#[test]
fn classify_at_critical_coupling() {
    let d = tempfile::tempdir().unwrap();
    let o = chanspec(&["classify", "--config", fixture("critical-ref").to_str().unwrap()], d.path(), &[]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("regime critical"));
}

#[test]
fn env_overrides_config_value() {
    let d = tempfile::tempdir().unwrap();
    let o = chanspec(
        &["classify", "--config", fixture("free").to_str().unwrap()],
        d.path(),
        &[("CHANSPEC_MODEL_LAMBDA", "2.866304355527973")],
    );
    assert_eq!(code(&o), 0);
    let json = fs::read_to_string(d.path().join("classify.json")).unwrap();
    assert!(json.contains("\"regime\": \"critical\""), "{json}");
    assert!(json.contains("\"model.lambda\": \"2.866304355527973\""));
}

#[test]
fn usage_and_config_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let cases = [
        "model.omega = 1\n",
        "schema = chanspec-config/1\nmodel.omgea = 1\n",
        "schema = chanspec-config/1\nmodel.omega = -1\n",
        "schema = chanspec-config/1\nmoment.sigma_list = 0.5\n",
        "schema = chanspec-config/2\n",
    ];
    for body in cases {
        let out = d.path().join("out");
        let cfg = write_config(d.path(), body);
        let o = chanspec(&["spectrum2d", "--config", cfg.to_str().unwrap()], &out, &[]);
        assert_eq!(code(&o), 2, "config {body:?}: {}", String::from_utf8_lossy(&o.stderr));
        // rejected before any output is produced
        assert!(!out.exists() || fs::read_dir(&out).unwrap().next().is_none(), "{body:?}");
    }
    let o = chanspec(&["classify"], &d.path().join("out"), &[]);
    assert_eq!(code(&o), 2);
    let o = chanspec(&["no-such-command"], &d.path().join("out"), &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn free_moment_bound_has_zero_left_side() {
    let d = tempfile::tempdir().unwrap();
    let o = chanspec(&["moment-bound", "--config", fixture("free").to_str().unwrap()], d.path(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(d.path().join("moment_bound.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let lhs = header.iter().position(|&h| h == "lhs").unwrap();
    let sat = header.iter().position(|&h| h == "satisfied").unwrap();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r[lhs].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[sat], "true");
    }
}

#[test]
fn critical_residual_plots_have_one_row_per_index() {
    let d = tempfile::tempdir().unwrap();
    let o = chanspec(&["quasimode", "--config", fixture("critical-ref").to_str().unwrap()], d.path(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for mu in ["0", "0.5", "1", "2"] {
        let dat = fs::read_to_string(d.path().join(format!("residual_vs_n_mu{mu}.dat"))).unwrap();
        let rows = dat.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).count();
        assert_eq!(rows, 4, "mu = {mu}");
    }
    let csv = fs::read_to_string(d.path().join("quasimode.csv")).unwrap();
    assert!(csv.starts_with("regime,mu,index,norm,structural_residual,total_residual\n"));
    assert_eq!(csv.lines().count(), 1 + 16);
}

#[test]
fn same_config_and_seed_give_identical_csv() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL_BOX);
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    for out in [&a, &b] {
        let o = chanspec(&["spectrum2d", "--config", cfg.to_str().unwrap(), "--seed", "7", "--dump-matrix"], out, &[]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["spectrum2d.csv", "eigenvalue_vs_box.dat", "matrix_H.txt"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn trial_form_requires_subcritical_regime() {
    let d = tempfile::tempdir().unwrap();
    let o = chanspec(&["trial-form", "--config", fixture("critical-ref").to_str().unwrap()], d.path(), &[]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("subcritical"));
    let o = chanspec(&["trial-form", "--config", fixture("subcritical-ref").to_str().unwrap()], d.path(), &[]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(d.path().join("trial_form.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 7);
}
