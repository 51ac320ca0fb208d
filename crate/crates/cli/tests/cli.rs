use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn afcsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afcsim")).args(args).output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn small_config(dir: &Path, extra: &[(&str, &str)]) -> PathBuf {
    let mut text = fs::read_to_string(configs().join("single_mode.cfg"))
        .unwrap()
        .replace("before_s = 50.0", "before_s = 1.0")
        .replace("after_s = 1500.0", "after_s = 2.0")
        .replace("write_events = false", "write_events = true")
        .replace("bootstrap_resamples = 1000", "bootstrap_resamples = 20");
    for (from, to) in extra {
        text = text.replace(from, to);
    }
    let p = dir.join("small.cfg");
    fs::write(&p, text).unwrap();
    p
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn bundled_configs_validate_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["single_mode.cfg", "multimode_330.cfg"] {
        let out = dir.path().join(name);
        let o = afcsim(&[
            "simulate",
            "--config",
            configs().join(name).to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--dry-run",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists());
    }
}

#[test]
fn invalid_field_is_named_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), &[("mean_pairs = 0.0371", "mean_pairs = -1.0")]);
    let o = afcsim(&["simulate", "--config", cfg.to_str().unwrap(), "--dry-run"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("source.mean_pairs"));

    let cfg = small_config(dir.path(), &[("bin_ps = 10", "bin_ps = 10\nbins = 3")]);
    let o = afcsim(&["simulate", "--config", cfg.to_str().unwrap(), "--dry-run"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bins"));
}

#[test]
fn outputs_identical_across_workers_and_reanalysis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), &[]);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, workers) in [(&a, "1"), (&b, "4")] {
        let o = afcsim(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"before_events.ev".to_string()));
    for n in &names {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n}");
    }

    let re = dir.path().join("re");
    let o = afcsim(&["analyze", a.to_str().unwrap(), "--out", re.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for n in ["report.json", "histogram_before.csv", "histogram_after.csv"] {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(re.join(n)).unwrap(), "{n}");
    }
}

#[test]
fn seed_changes_streams() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), &[]);
    let run = |seed: &str| {
        let out = dir.path().join(seed);
        let o = afcsim(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed]);
        assert_eq!(code(&o), 0);
        fs::read(out.join("before_idler.ts")).unwrap()
    };
    assert_ne!(run("1"), run("2"));
}

#[test]
fn empty_streams_give_zero_count_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(
        dir.path(),
        &[("efficiency = 0.13", "efficiency = 1e-12"), ("efficiency = 0.17", "efficiency = 1e-12"), ("dark_rate_hz = 70.0", "dark_rate_hz = 0.0")],
    );
    let out = dir.path().join("empty");
    let o = afcsim(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["runs"][0]["cross"]["coincidences"], 0);
    assert!(report["runs"][0]["cross"]["g2"].is_null());
}

#[test]
fn nonwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), &[]);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = afcsim(&["simulate", "--config", cfg.to_str().unwrap(), "--out", blocker.join("sub").to_str().unwrap()]);
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("writing outputs"));
}

#[test]
fn design_afc_reports() {
    let o = afcsim(&["design-afc", "--storage-ns", "200", "--bandwidth-ghz", "4", "--field-gauss", "13000"]);
    assert_eq!(code(&o), 0);
    let d: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(d["n_teeth"], 800);
    assert_eq!(d["spacing_mhz"], 5.0);
    assert_eq!(d["time_bandwidth_product"], 800.0);
    assert_eq!(d["side_holes"][0]["aligned"], false);
    assert_eq!(d["side_holes"][1]["aligned"], true);

    assert_eq!(code(&afcsim(&["design-afc", "--storage-ns", "0"])), 2);
}

#[test]
fn fit_recovers_line_and_flags_singular_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("line.csv");
    let rows: String = (0..10).map(|i| format!("{i},{},0.1\n", 2.0 * i as f64 + 1.0)).collect();
    fs::write(&data, format!("x,y,sigma\n{rows}")).unwrap();
    let o = afcsim(&["fit", "--model", "linear", "--data", data.to_str().unwrap(), "--initial", "1,0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let fit: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((fit["params"][0].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!((fit["params"][1].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let flat = dir.path().join("flat.csv");
    fs::write(&flat, "x,y,sigma\n1,1,0.1\n1,2,0.1\n1,3,0.1\n1,4,0.1\n1,5,0.1\n").unwrap();
    let o = afcsim(&["fit", "--model", "linear", "--data", flat.to_str().unwrap(), "--initial", "1,0"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));

    let o = afcsim(&["fit", "--model", "cubic", "--data", data.to_str().unwrap(), "--initial", "1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = afcsim(&[
        "sweep",
        "--config",
        configs().join("single_mode.cfg").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("storage_sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 9);
    assert!(lines[0].starts_with("storage_time_ns,"));
    assert!(lines[1].starts_with("100,"));
    assert!(lines[8].starts_with("240,"));
}
