use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use ttinv_core::kron::io::OperatorFile;
use ttinv_core::kron::KroneckerSumOperator;
use ttinv_core::linalg::identity;
use ttinv_core::tt::io::read_tt_matrix;
use ttinv_core::C64;

struct Run {
    dir: TempDir,
    out: PathBuf,
}

impl Run {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let out = dir.path().join("out");
        Run { dir, out }
    }

    fn config(&self, body: &str) -> PathBuf {
        let p = self.dir.path().join("run.toml");
        fs::write(&p, body).unwrap();
        p
    }

    fn exec(&self, args: &[&str], config: &Path) -> Output {
        self.exec_env(args, config, None)
    }

    fn exec_env(&self, args: &[&str], config: &Path, threads: Option<&str>) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ttinv"));
        cmd.args(args).arg("--config").arg(config).arg("--out").arg(&self.out);
        cmd.env_remove("TTINV_THREADS");
        if let Some(t) = threads {
            cmd.env("TTINV_THREADS", t);
        }
        cmd.output().unwrap()
    }

    fn report(&self) -> Value {
        serde_json::from_str(&fs::read_to_string(self.out.join("report.json")).unwrap()).unwrap()
    }

    fn csv(&self, name: &str) -> (Vec<String>, Vec<Vec<f64>>) {
        let text = fs::read_to_string(self.out.join(name)).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines
            .map(|l| l.split(',').map(|c| if c.is_empty() { f64::NAN } else { c.parse().unwrap() }).collect())
            .collect();
        (header, rows)
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

const POISSON_8: &str = "problem = \"poisson\"\nd = 3\nn = 8\n";

#[test]
fn invert_poisson_writes_verified_inverse() {
    let r = Run::new();
    let o = r.exec(&["invert"], &r.config(POISSON_8));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = r.report();
    assert!(f(&rep["metrics"]["dense_residual"]) <= 1e-6);
    assert_eq!(rep["settings"]["tol"], 1e-6);
    assert_eq!(rep["settings"]["round_eps"], 1e-8);
    let m = read_tt_matrix(&r.out.join("inverse.ttj")).unwrap();
    assert_eq!(m.row_sizes(), vec![8, 8, 8]);
}

#[test]
fn invert_trivial_operator_is_exact() {
    let r = Run::new();
    let s = identity(3).mapv(|z| z * 2.0);
    let op = KroneckerSumOperator::from_dense(vec![(s, identity(3))]).unwrap();
    let path = r.dir.path().join("op.json");
    OperatorFile::from_operator(&op).write(&path).unwrap();
    let cfg = r.config(&format!("problem = \"file\"\noperator = {:?}\n", path.to_str().unwrap()));
    let o = r.exec(&["invert"], &cfg);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let x = read_tt_matrix(&r.out.join("inverse.ttj")).unwrap().to_dense_matrix().unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { C64::new(0.5, 0.0) } else { C64::new(0.0, 0.0) };
            assert!((x[[i, j]] - want).norm() < 1e-14);
        }
    }
}

#[test]
fn usage_errors_exit_2() {
    let r = Run::new();
    let bad = r.config("problem = \"poisson\"\nd = 3\nn = 8\nsmoothing = 2\n");
    let o = r.exec(&["invert"], &bad);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("smoothing"));

    let o = Command::new(env!("CARGO_BIN_EXE_ttinv")).arg("invert").output().unwrap();
    assert_eq!(code(&o), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_ttinv")).arg("explode").output().unwrap();
    assert_eq!(code(&o), 2);

    let o = r.exec(&["certify"], &r.config("problem = \"poisson\"\nd = 3\nn = 4\nk = [3]\n"));
    assert_eq!(code(&o), 2);
    let o = r.exec(&["solve"], &r.config("problem = \"bgk\"\nd = 3\nn = 4\n"));
    assert_eq!(code(&o), 2);
    let o = r.exec(&["solve"], &r.config("problem = \"poisson\"\nd = 2\nn = 4\ndomain = [1.0, 0.0]\n"));
    assert_eq!(code(&o), 2);
}

#[test]
fn resource_caps_exit_4() {
    let r = Run::new();
    let o = r.exec(&["svd-decay", "--dense-cap", "1000"], &r.config("problem = \"poisson\"\nd = 3\nn = 12\n"));
    assert_eq!(code(&o), 4);
    let o = r.exec(&["certify"], &r.config("problem = \"poisson\"\nd = 3\nn = 12\nbudget = 100\n"));
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
    // The failure is still recorded.
    assert!(r.report()["metrics"]["error"].as_str().unwrap().contains("budget"));
}

#[test]
fn numeric_failure_exits_3() {
    let r = Run::new();
    // A singular operator: the eigenvalue tensor has a zero entry.
    let op = KroneckerSumOperator::from_dense(vec![(identity(2).mapv(|z| z * 0.0), identity(2))]).unwrap();
    let path = r.dir.path().join("op.json");
    OperatorFile::from_operator(&op).write(&path).unwrap();
    let cfg = r.config(&format!("problem = \"file\"\noperator = {:?}\n", path.to_str().unwrap()));
    assert_eq!(code(&r.exec(&["invert"], &cfg)), 3);
}

#[test]
fn certify_poisson_matches_closed_form() {
    let r = Run::new();
    let o = r.exec(&["certify"], &r.config("problem = \"poisson\"\nd = 3\nn = 16\n"));
    assert_eq!(code(&o), 0);
    let rep = r.report();
    let certs = rep["certificates"].as_array().unwrap();
    let theorem = rep["metrics"]["theorem_q"].as_array().unwrap();
    assert_eq!(certs.len(), 2);
    for (c, q) in certs.iter().zip(theorem) {
        assert_eq!(c["uncertified"], false);
        assert_eq!(c["sound"], true);
        assert!((f(&c["decay_q"]) - f(q)).abs() <= 1e-10);
        assert!(c["rank_bound"].as_u64().unwrap() >= 1);
    }
    assert!(r.out.join("certificates.json").exists());
}

#[test]
fn certify_bgk_flags_large_steps() {
    let r = Run::new();
    let o = r.exec(&["certify"], &r.config("problem = \"bgk\"\nd = 2\nn = 8\ndt_over_h = 10.0\n"));
    assert_eq!(code(&o), 0);
    assert_eq!(r.report()["certificates"][0]["uncertified"], true);
    let o = r.exec(&["certify"], &r.config("problem = \"bgk\"\nd = 2\nn = 8\ndt_over_h = 0.01\n"));
    assert_eq!(code(&o), 0);
    assert_eq!(r.report()["certificates"][0]["uncertified"], false);
}

#[test]
fn svd_decay_under_envelope() {
    let r = Run::new();
    assert_eq!(code(&r.exec(&["svd-decay"], &r.config(POISSON_8))), 0);
    let (header, rows) = r.csv("svd_decay.csv");
    assert_eq!(header, ["j", "sigma", "ratio", "envelope"]);
    assert_eq!(rows.len(), 8);
    for row in &rows {
        assert!(row[2] <= row[3] + 1e-12);
    }
    assert!(rows.windows(2).all(|w| w[0][1] > w[1][1]));
}

#[test]
fn solve_poisson_sweep() {
    let r = Run::new();
    assert_eq!(code(&r.exec(&["solve"], &r.config("problem = \"poisson\"\nd = 3\nns = [8, 16]\n"))), 0);
    let (header, rows) = r.csv("poisson.csv");
    assert_eq!(header, ["n", "relative_error", "averaged_rank", "newton_iterations"]);
    assert_eq!(rows.len(), 2);
    let ratio = rows[0][1] / rows[1][1];
    assert!((3.4..=4.6).contains(&ratio), "{ratio}");
}

#[test]
fn solve_poisson_n256() {
    let r = Run::new();
    assert_eq!(code(&r.exec(&["solve"], &r.config("problem = \"poisson\"\nd = 3\nn = 256\n"))), 0);
    let err = f(&r.report()["metrics"]["relative_error"]);
    assert!((err - 1.50e-4).abs() < 0.05e-4, "{err}");
}

#[test]
fn solve_fp_error_does_not_accumulate() {
    let r = Run::new();
    let cfg = r.config("problem = \"fp\"\nd = 3\nn = 32\ndt = 0.0025\nt_end = 1.0\nrecord_every = 40\n");
    assert_eq!(code(&r.exec(&["solve"], &cfg)), 0);
    let rep = r.report();
    assert_eq!(rep["settings"]["tol"], 1e-10);
    assert_eq!(rep["settings"]["round_eps"], 1e-12);
    let (_, rows) = r.csv("fp.csv");
    assert_eq!(rows.len(), 10);
    let last = rows.last().unwrap();
    assert!((last[0] - 1.0).abs() < 1e-9);
    assert!(last[1] <= 1.5 * f(&rep["metrics"]["max_relative_error"]));
}

#[test]
fn solve_bgk_without_time_step_is_constant() {
    let r = Run::new();
    assert_eq!(code(&r.exec(&["solve"], &r.config("problem = \"bgk\"\nd = 1\nn = 8\ndt = 0.0\n"))), 0);
    let (header, rows) = r.csv("bgk.csv");
    assert_eq!(header[1], "relative_change");
    assert!(rows.iter().all(|row| row[1] < 1e-12));
}

#[test]
fn csv_bodies_are_deterministic() {
    let a = Run::new();
    let b = Run::new();
    let body = "problem = \"bgk\"\nd = 1\nn = 8\ndt = 0.01\nt_end = 0.05\n";
    assert_eq!(code(&a.exec(&["solve", "--seed", "5"], &a.config(body))), 0);
    assert_eq!(code(&b.exec(&["solve", "--seed", "5"], &b.config(body))), 0);
    let read = |r: &Run| fs::read(r.out.join("bgk.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn thread_setting_precedence() {
    let r = Run::new();
    let cfg = r.config(POISSON_8);
    assert_eq!(code(&r.exec(&["roundtrip", "--threads", "2"], &cfg)), 0);
    assert_eq!(r.report()["settings"]["threads"], 2);
    assert_eq!(code(&r.exec_env(&["roundtrip", "--threads", "2"], &cfg, Some("3"))), 0);
    let rep = r.report();
    assert_eq!(rep["settings"]["threads"], 3);
    assert_eq!(rep["settings"]["threads_source"], "TTINV_THREADS");
    assert_eq!(code(&r.exec_env(&["roundtrip"], &cfg, Some("many"))), 2);
}

#[test]
fn flags_override_config_tolerances() {
    let r = Run::new();
    let cfg = r.config("problem = \"poisson\"\nd = 2\nn = 6\n[tolerances]\ntol = 1e-4\nround_eps = 1e-9\n");
    assert_eq!(code(&r.exec(&["invert", "--tol", "1e-7"], &cfg)), 0);
    let rep = r.report();
    assert_eq!(rep["settings"]["tol"], 1e-7);
    assert_eq!(rep["settings"]["round_eps"], 1e-9);
}

#[test]
fn roundtrip_is_lossless() {
    let r = Run::new();
    assert_eq!(code(&r.exec(&["roundtrip", "--seed", "11"], &r.config(POISSON_8))), 0);
    let rep = r.report();
    assert_eq!(rep["metrics"]["file_roundtrip_identical"], true);
    assert!(f(&rep["metrics"]["dense_roundtrip_relative_error"]) < 1e-12);
    assert_eq!(rep["metrics"]["mode_sizes"], serde_json::json!([8, 8, 8]));
}
