use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn flapsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flapsim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn scenario_path(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "scenarios", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = TempDir::new().unwrap();
    let o = flapsim(
        &["run", &scenario_path("ballistic.cfg"), "--out", "b.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert!(text.starts_with("# flapsim run record, schema 1\n"));
    assert_eq!(text.lines().count(), 2 + 201);
    assert!(stdout(&o).contains("status = completed"));
}

#[test]
fn equal_seeds_give_identical_files() {
    let dir = TempDir::new().unwrap();
    let hover = scenario_path("hover.cfg");
    for out in ["a.csv", "b.csv"] {
        let o = flapsim(
            &[
                "run",
                &hover,
                "--seed",
                "5",
                "--duration",
                "0.5",
                "--out",
                out,
            ],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn yaw_compare_writes_both_records() {
    let dir = TempDir::new().unwrap();
    let o = flapsim(
        &["run", &scenario_path("yaw_damp.cfg"), "--out", "y.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("y.comparison.csv").exists());
    assert!(stdout(&o).contains("yaw_decay_time_constant_ratio = 0.70"));
}

#[test]
fn divergence_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let o = flapsim(
        &[
            "run",
            &scenario_path("ballistic.cfg"),
            "--duration",
            "2",
            "--out",
            "d.csv",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("status = diverged"));
}

#[test]
fn validate_reports_config_errors() {
    let dir = TempDir::new().unwrap();
    let ok = flapsim(&["validate", &scenario_path("hover.cfg")], dir.path());
    assert_eq!(ok.status.code(), Some(0));

    let bad = dir.path().join("bad.cfg");
    std::fs::write(
        &bad,
        "format_version = 1\n[scenario]\nname = \"bad\"\nmode = \"yaw-damping-compare\"\n\
         duration_s = 1.0\n[wing]\nflap_amplitude_deg = 100.0\nk_s_n_per_v = 0.0\n",
    )
    .unwrap();
    let o = flapsim(&["validate", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("quadrant") && err.contains("singular"),
        "{err}"
    );

    let missing = flapsim(&["validate", "no-such.cfg"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn compare_prints_ratios() {
    let dir = TempDir::new().unwrap();
    let o = flapsim(
        &[
            "compare",
            &scenario_path("hover.cfg"),
            &scenario_path("robobee.cfg"),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let ratio: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("ratio.wing_loading = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((ratio - 0.659).abs() < 1e-3, "{ratio}");
    assert!(text.contains("note = "));
}

#[test]
fn sweep_writes_one_file_per_value() {
    let dir = TempDir::new().unwrap();
    let o = flapsim(
        &[
            "sweep",
            &scenario_path("position_hold.cfg"),
            "--param",
            "wing.flap_amplitude_deg",
            "--values",
            "55,65",
            "--duration",
            "0.2",
            "--out",
            "s",
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(dir.path().join("s.0.csv").exists() && dir.path().join("s.1.csv").exists());
    assert_eq!(stdout(&o).matches("[[run]]").count(), 2);

    let bad = flapsim(
        &[
            "sweep",
            &scenario_path("hover.cfg"),
            "--param",
            "wing.nope",
            "--values",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(bad.status.code(), Some(1));
}
