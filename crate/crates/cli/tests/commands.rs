use progmeas_core::dataset::sidecar_path;
use progmeas_core::discriminator::success_prob_theory;
use progmeas_core::Dataset;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn progmeas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_progmeas"))
        .args(args)
        .output()
        .expect("spawn progmeas")
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (PathBuf, Dataset) {
    let path = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    full.extend(["--out", &p]);
    let out = progmeas(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ds = Dataset::load(&path).unwrap();
    (path, ds)
}

fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("timestamp"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn default_discriminator_grid() {
    let dir = TempDir::new().unwrap();
    let (_, ds) = run_to(dir.path(), "d.csv", &["discriminate", "--pairs", "1000"]);
    assert_eq!(ds.rows.len(), 92);
    let eps = ds.column("epsilon").unwrap();
    for e in [0.0, 12.0, 24.0, 36.0] {
        assert_eq!(eps.iter().filter(|&&x| x == e).count(), 23);
    }
    assert_eq!(ds.metadata.command, "discriminate");
    assert!(ds.metadata.timestamp > 0);
}

#[test]
fn single_point_run() {
    let dir = TempDir::new().unwrap();
    let (_, ds) = run_to(
        dir.path(),
        "one.csv",
        &["discriminate", "--theta-range", "45:45:1", "--epsilon", "0", "--ideal"],
    );
    assert_eq!(ds.rows.len(), 1);
    assert_eq!(ds.column("p_theory").unwrap(), vec![0.5]);
}

#[test]
fn ideal_run_follows_theory() {
    let dir = TempDir::new().unwrap();
    let (_, ds) = run_to(
        dir.path(),
        "ideal.csv",
        &["discriminate", "--ideal", "--epsilon", "0", "--pairs", "1000000"],
    );
    let theta = ds.column("theta").unwrap();
    let p = ds.column("p_estimated").unwrap();
    let se = ds.column("p_estimated_stderr").unwrap();
    for i in 0..theta.len() {
        let want = success_prob_theory(0.0, theta[i]);
        assert!((p[i] - want).abs() <= 3.0 * se[i], "theta {}: {} vs {want}", theta[i], p[i]);
    }
    assert!(ds.column("c_mp").unwrap().iter().all(|&c| c == 0.0));
    assert!(ds.column("c_pm").unwrap().iter().all(|&c| c == 0.0));
}

#[test]
fn multimeter_endpoints() {
    let dir = TempDir::new().unwrap();
    let (_, ds) = run_to(
        dir.path(),
        "m.csv",
        &["multimeter", "--ideal", "--eta", "1,0.5,0", "--pairs", "200000"],
    );
    assert_eq!(ds.rows.len(), 23 * 3);
    let eta = ds.column("eta").unwrap();
    let pi = ds.column("p_inconclusive").unwrap();
    let fid = ds.column("fidelity").unwrap();
    let mean = |k: f64, v: &[f64]| {
        let sel: Vec<f64> = eta.iter().zip(v).filter(|(e, _)| **e == k).map(|(_, x)| *x).collect();
        sel.iter().sum::<f64>() / sel.len() as f64
    };
    assert!((mean(1.0, &pi) - 0.5).abs() < 0.01);
    assert!((mean(1.0, &fid) - 1.0).abs() < 1e-12);
    assert!(mean(0.0, &pi).abs() < 0.01);
    assert!((mean(0.0, &fid) - 0.75).abs() < 0.01);
    assert!((mean(0.5, &fid) - 5.0 / 6.0).abs() < 0.01);
    let theory = ds.column("fidelity_theory").unwrap();
    assert!(eta.iter().zip(&theory).any(|(e, f)| *e == 0.5 && (f - 5.0 / 6.0).abs() < 1e-15));
}

#[test]
fn hom_scan_default_range_dips_at_zero() {
    let dir = TempDir::new().unwrap();
    let (path, ds) = run_to(dir.path(), "hom.csv", &["hom-scan"]);
    assert_eq!(ds.rows.len(), 41);
    let pos = ds.column("position").unwrap();
    let mp = ds.column("c_mp").unwrap();
    let lowest = mp
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    assert!(pos[lowest].abs() <= 10.0);
    let v = ds.metadata.extras["visibility"];
    assert!((v - 0.92).abs() < 0.02, "{v}");
    assert!(std::fs::read_to_string(sidecar_path(&path)).unwrap().contains("visibility"));
}

#[test]
fn hom_shoulder_only() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "detector_efficiency = 1.0\ndark_count_rate = 0.0\nangle_jitter = 0.0\npair_rate = 1e6\n").unwrap();
    let (_, ds) = run_to(
        dir.path(),
        "sh.csv",
        &["hom-scan", "--positions", "150", "--config", cfg.to_str().unwrap()],
    );
    assert_eq!(ds.rows.len(), 1);
    let rate = ds.column("detected_pair_rate").unwrap()[0];
    let t = ds.metadata.config.period * ds.metadata.config.repetitions as f64;
    for col in ["c_pp", "c_pm", "c_mp", "c_mm"] {
        let r = ds.column(col).unwrap()[0];
        let se = (0.25 * rate / t).sqrt();
        assert!((r - 0.25 * rate).abs() < 3.0 * se, "{col}: {r}");
    }
}

#[test]
fn analyze_round_trip_is_identity() {
    let dir = TempDir::new().unwrap();
    let (raw, sim) = run_to(
        dir.path(),
        "raw.csv",
        &["discriminate", "--epsilon", "12,24", "--pairs", "20000", "--seed", "5"],
    );
    let (_, est) = run_to(dir.path(), "est.csv", &["analyze", "--input", raw.to_str().unwrap()]);
    let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
    assert!(same(&sim.column("p_estimated").unwrap(), &est.column("p_succ").unwrap()));
    assert!(same(&sim.column("p_estimated_stderr").unwrap(), &est.column("p_succ_stderr").unwrap()));
    assert!(same(&sim.column("error_rate").unwrap(), &est.column("error_rate").unwrap()));
    assert_eq!(sim.column("theta").unwrap(), est.column("theta").unwrap());

    let (raw, sim) = run_to(dir.path(), "mraw.csv", &["multimeter", "--eta", "0.3", "--pairs", "20000"]);
    let (_, est) = run_to(dir.path(), "mest.csv", &["analyze", "--input", raw.to_str().unwrap()]);
    assert!(same(&sim.column("p_inconclusive").unwrap(), &est.column("p_inconclusive").unwrap()));
    assert!(same(&sim.column("fidelity").unwrap(), &est.column("fidelity").unwrap()));
}

#[test]
fn analyze_hand_written_counts() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("counts.csv");
    std::fs::write(
        &input,
        "c_pp,c_pm,c_mp,c_mm,sh_pp,sh_pm,sh_mp,sh_mm\n400,0,0,380,300,240,200,260\n0,0,0,0,10,10,10,10\n",
    )
    .unwrap();
    let out = progmeas(&["analyze", "--input", input.to_str().unwrap()]);
    assert!(out.status.success());
    let ds = Dataset::read_csv(out.stdout.as_slice(), progmeas_core::dataset::Metadata::new(
        "",
        &Default::default(),
        0,
    ))
    .unwrap();
    assert!((ds.column("p_succ").unwrap()[0] - 0.39).abs() < 1e-15);
    assert_eq!(ds.column("p_inconclusive").unwrap()[1], 1.0);
}

#[test]
fn analyze_reports_missing_column() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("bad.csv");
    std::fs::write(&input, "c_pp,c_pm,c_mp,sh_pp,sh_pm,sh_mp,sh_mm\n1,2,3,4,5,6,7\n").unwrap();
    let out = progmeas(&["analyze", "--input", input.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("c_mm"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let args = ["discriminate", "--epsilon", "24", "--pairs", "50000", "--seed", "9"];
    let (a, _) = run_to(dir.path(), "a.csv", &args);
    let (b, _) = run_to(dir.path(), "b.csv", &args);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let meta = |p: &Path| strip_timestamp(&std::fs::read_to_string(sidecar_path(p)).unwrap());
    // The recorded args differ only in the output path.
    assert_eq!(meta(&a).replace("a.csv", "b.csv"), meta(&b));
}

#[test]
fn recorded_command_reproduces_dataset() {
    let dir = TempDir::new().unwrap();
    let (a, first) = run_to(dir.path(), "a.csv", &["multimeter", "--eta", "0.5", "--pairs", "10000", "--seed", "3"]);
    let mut args: Vec<String> = first.metadata.args.clone();
    let out_at = args.iter().position(|s| s == "--out").unwrap();
    let b = dir.path().join("b.csv");
    args[out_at + 1] = b.to_str().unwrap().into();
    let out = Command::new(env!("CARGO_BIN_EXE_progmeas")).args(&args).output().unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn stdout_matches_file_output() {
    let dir = TempDir::new().unwrap();
    let args = ["discriminate", "--epsilon", "0", "--pairs", "1000"];
    let (path, _) = run_to(dir.path(), "f.csv", &args);
    let out = progmeas(&args);
    assert_eq!(out.stdout, std::fs::read(path).unwrap());
}

#[test]
fn failures_exit_nonzero_with_message() {
    for args in [
        vec!["discriminate", "--theta-range", "0:90"],
        vec!["discriminate", "--epsilon", "90"],
        vec!["discriminate", "--pairs", "lots"],
        vec!["multimeter", "--eta", "1.5"],
        vec!["multimeter", "--program-copies", "2"],
        vec!["discriminate", "--out", "/nonexistent/dir/x.csv"],
        vec!["discriminate", "--config", "/nonexistent/cfg.toml"],
        vec!["frobnicate"],
    ] {
        let out = progmeas(&args);
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn config_with_unknown_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "pair_rate = 1e4\nbogus = 1\n").unwrap();
    let out = progmeas(&["discriminate", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}
