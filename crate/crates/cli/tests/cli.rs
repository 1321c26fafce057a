use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cgnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgnet")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in {report}"))
        .to_string()
}

#[test]
fn count_reports_builtin_circuits() {
    for (name, two, one) in [("fig2_network", "13", Some("21")), ("fig4_hadamard", "64", Some("82")), ("rodeo_cycle_reversal", "4", None), ("rodeo_cycle_naive", "20", None)] {
        let o = cgnet(&["count", name]);
        assert!(o.status.success(), "{name}: {o:?}");
        let r = stdout(&o);
        assert_eq!(field(&r, "basis"), "ibm");
        assert_eq!(field(&r, "source"), name);
        assert_eq!(field(&r, "two_qubit"), two, "{name}");
        if let Some(one) = one {
            assert_eq!(field(&r, "one_qubit"), one, "{name}");
        }
    }
}

#[test]
fn chain_count_shows_predictions() {
    let r = stdout(&cgnet(&["count", "chain(6, 6, 0.2)"]));
    assert_eq!(field(&r, "exponentials"), "183");
    assert_eq!(field(&r, "predicted_reversal"), "192");
    assert_eq!(field(&r, "predicted_naive"), (20 * 6 * 30 + 60).to_string());
}

#[test]
fn transpile_writes_native_circuit() {
    let dir = TempDir::new().unwrap();
    let src = dir.path().join("c.txt");
    fs::write(&src, "qubits 2\nh 0\nry 1 ctrl 0:0 param 0.3\nrzz 0 1 param 0.7\nmeasure 0\n").unwrap();
    let out = dir.path().join("o");
    let o = cgnet(&["transpile", "--circuit", src.to_str().unwrap(), "--basis", "qtm", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let text = fs::read_to_string(out.join("transpiled.txt")).unwrap();
    assert!(text.starts_with("qubits 2\n"));
    assert!(text.lines().skip(1).all(|l| ["rx ", "ry ", "rz ", "rzz ", "measure "].iter().any(|p| l.starts_with(p))), "{text}");
    assert_eq!(field(&fs::read_to_string(out.join("count.txt")).unwrap(), "source"), "file");
}

fn read_all(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn scan_is_reproducible_from_effective_config() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = cgnet(&["scan", "--cycles", "3", "--seed", "7", "--out", a.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let pass1 = fs::read_to_string(a.join("pass1.csv")).unwrap();
    assert_eq!(pass1.lines().next().unwrap(), "energy,successes,trials,p_hat,epsilon");
    let peaks: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("peaks.json")).unwrap()).unwrap();
    assert_eq!(peaks.as_array().unwrap().len(), 4);

    let cfg = a.join("effective-config.toml");
    let o2 = cgnet(&["scan", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert!(o2.status.success());
    assert_eq!(stdout(&o), stdout(&o2));
    assert_eq!(read_all(&a), read_all(&b));
}

#[test]
fn varsub_writes_complex_pairs() {
    let dir = TempDir::new().unwrap();
    let o = cgnet(&["varsub", "--mode", "exact", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("subspace.json")).unwrap()).unwrap();
    let s00 = &m["s"][0][0];
    assert!((s00[0].as_f64().unwrap() - 1.0).abs() < 1e-12 && s00[1].as_f64().unwrap() == 0.0);
    let e: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("eigen.json")).unwrap()).unwrap();
    assert!((e["energies"][0].as_f64().unwrap() + 3.0).abs() < 1e-9);
}

#[test]
fn sampled_runs_repeat_under_a_seed() {
    let a = stdout(&cgnet(&["varsub", "--seed", "5", "--method", "hadamard"]));
    let b = stdout(&cgnet(&["varsub", "--seed", "5", "--method", "hadamard"]));
    let c = stdout(&cgnet(&["varsub", "--seed", "6", "--method", "hadamard"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn noise_sweep_tables() {
    let dir = TempDir::new().unwrap();
    let o = cgnet(&["noise-sweep", "--cycles", "3", "--jitter-eps", "0.05", "--jitter-mode", "per-shot", "--sigmas", "4", "--noise-p2q", "0.01", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let jitter = fs::read_to_string(dir.path().join("jitter.csv")).unwrap();
    assert_eq!(jitter.lines().next().unwrap(), "sigma,epsilon,mode,energy,p_clean,p_jitter,suppression");
    assert_eq!(jitter.lines().count(), 1 + 4);
    assert!(jitter.contains("per-shot"));
    let dep = fs::read_to_string(dir.path().join("depolarizing.csv")).unwrap();
    assert_eq!(dep.lines().count(), 1 + 4);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(cgnet(&["count", "nonsense"]).status.code(), Some(3));
    assert_eq!(cgnet(&["scan", "--mode", "fast"]).status.code(), Some(3));
    assert_eq!(cgnet(&["scan", "--mode", "exact", "--noise-p2q", "0.01"]).status.code(), Some(3));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "seed = 1\ncycels = 3\n").unwrap();
    assert_eq!(cgnet(&["scan", "--config", bad.to_str().unwrap()]).status.code(), Some(3));

    let strict = dir.path().join("strict.toml");
    fs::write(&strict, "cycles = 3\n[protocol]\ndetect_k = 1000.0\n").unwrap();
    assert_eq!(cgnet(&["scan", "--config", strict.to_str().unwrap()]).status.code(), Some(2));

    let singular = dir.path().join("singular.toml");
    fs::write(&singular, "mode = \"exact\"\n[varsub]\noverlap_threshold = 2.0\n").unwrap();
    assert_eq!(cgnet(&["varsub", "--config", singular.to_str().unwrap()]).status.code(), Some(4));

    assert_eq!(cgnet(&["--help"]).status.code(), Some(0));
}
