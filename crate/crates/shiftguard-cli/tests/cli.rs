//! End-to-end checks of the command-line surface: exit codes, printed
//! summaries, the monitoring loop and rerun determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shiftguard"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn run_monitor(config: &Path, input: &Path, extra: &[&str]) -> Output {
    bin()
        .args(["monitor", "--config"])
        .arg(config)
        .arg("--input")
        .arg(input)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn nonstationary_model_is_rejected_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    write(&config, "ar = [1.2]\nwindow_size = 5\ncritical_value = 3.0\n");
    let out = run_monitor(&config, &config, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("not stationary"), "stderr: {err}");
}

#[test]
fn unknown_grid_is_rejected_with_exit_2() {
    let out = bin()
        .args(["simulate", "--grid", "warehouse"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exhausted_candidate_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cal.toml");
    write(&config, "ar = [0.5]\nwindow_size = 2\n");
    let out = bin()
        .args(["calibrate", "--config"])
        .arg(&config)
        .args(["--n", "50", "--step", "0.0001", "--seed", "1", "--fresh"])
        .args(["--output"])
        .arg(dir.path().join("cal.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn white_noise_single_window_limit_is_printed_as_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cal.toml");
    write(&config, "window_size = 1\nn = 400\n");
    let out = bin()
        .args(["calibrate", "--config"])
        .arg(&config)
        .args(["--seed", "5", "--fresh", "--output"])
        .arg(dir.path().join("cal.csv"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("h_opt = 3.000"), "stdout: {text}");
}

#[test]
fn monitor_flags_an_obvious_level_shift() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    write(
        &config,
        "ar = [0.5]\nwindow_size = 4\ncritical_value = 3.2\n",
    );
    let input = dir.path().join("data.csv");
    let mut lines = String::from("time,value\n");
    let mut x = 0.0f64;
    for t in 1..=60 {
        // AR(1) sample path driven by a fixed small error sequence, with a
        // 6σ level shift from row 41
        let e = [0.3, -0.5, 0.1, 0.6, -0.2][t % 5];
        x = 0.5 * x + e;
        let shift = if t > 40 { 6.0 } else { 0.0 };
        lines.push_str(&format!("{t},{}\n", x + shift));
    }
    write(&input, &lines);
    let out_path = dir.path().join("out.csv");
    let out = run_monitor(&config, &input, &["--output", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("time,e,statistic,signal\n"), "missing header: {text}");
    let alarm = text
        .lines()
        .find(|l| l.starts_with("ALARM,"))
        .unwrap_or_else(|| panic!("no alarm in: {text}"));
    let fields: Vec<&str> = alarm.split(',').collect();
    assert_eq!(fields.len(), 4);
    let signal_row: usize = fields[1].parse().unwrap();
    let change_row: usize = fields[2].parse().unwrap();
    assert!((41..=44).contains(&signal_row), "signal row {signal_row}");
    assert!((39..=42).contains(&change_row), "change row {change_row}");
    let tau: f64 = fields[3].parse().unwrap();
    assert!(tau > 2.0, "estimated shift {tau}");
}

#[test]
fn monitor_skips_malformed_lines_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    write(&config, "window_size = 2\ncritical_value = 4.0\n");
    let input = dir.path().join("data.csv");
    write(&input, "time,value\n1,0.4\n2,oops\n3,-0.2\n4,0.1\n");
    let out_path = dir.path().join("out.csv");
    let out = run_monitor(&config, &input, &["--output", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("1 malformed line(s) skipped"), "stderr: {err}");
    let text = std::fs::read_to_string(&out_path).unwrap();
    // three parsed observations survive: the warm-up row and two scored rows
    assert_eq!(text.lines().count(), 4, "output: {text}");
}

#[test]
fn monitor_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    write(&config, "ar = [0.7]\nwindow_size = 3\ncritical_value = 3.0\n");
    let input = dir.path().join("data.csv");
    let mut lines = String::from("time,value\n");
    let mut x = 0.0f64;
    for t in 1..=80 {
        let e = [0.9, -1.1, 0.2, 1.4, -0.6, 0.0, -1.8, 0.7][t % 8];
        x = 0.7 * x + e;
        lines.push_str(&format!("{t},{x}\n"));
    }
    write(&input, &lines);
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out_path = dir.path().join(format!("out-{run}.csv"));
        let out = run_monitor(
            &config,
            &input,
            &["--on-signal", "reset", "--output", out_path.to_str().unwrap()],
        );
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(&out_path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
