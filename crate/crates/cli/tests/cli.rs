//! End-to-end smoke tests for the `confapprox` binary.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_confapprox"))
}

#[test]
fn missing_seed_is_an_error() {
    let out = bin().args(["capacity", "--ring", "0.25", "0.5"]).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--seed"), "unexpected stderr: {stderr}");
}

#[test]
fn ring_capacity_prints_value() {
    let out = bin()
        .args(["capacity", "--seed", "1", "--ring", "0.25", "0.5", "--grid", "64"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    // 2π/log 2 ≈ 9.06; a 64² lattice lands within ~15%
    let value: f64 = stdout
        .rsplit('=')
        .next()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| panic!("no value in: {stdout}"));
    assert!((value - 9.0647).abs() < 1.5, "{value}");
}

#[test]
fn render_writes_svg() {
    let file = std::env::temp_dir().join("confapprox-cli-test.svg");
    let _ = std::fs::remove_file(&file);
    let out = bin()
        .args(["render", "--seed", "1", "--map", "cardioid", "--m", "2"])
        .args(["--file".as_ref(), file.as_os_str()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(&file).unwrap();
    assert!(svg.starts_with("<?xml") && svg.contains("</svg>"));
}

#[test]
fn bad_map_name_fails_with_message() {
    let out = bin()
        .args(["render", "--seed", "1", "--map", "lemniscate"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error in render"), "unexpected stderr: {stderr}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = std::env::temp_dir().join("confapprox-cli-config-test");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("run.toml");
    std::fs::write(
        &config_path,
        "map = \"identity\"\nfield = \"const:1\"\np = 1.0\nm_list = [3]\n\
         capacity_grid = 0\nverify_samples = 2000\n",
    )
    .unwrap();
    let out = bin()
        .args(["approximate", "--seed", "3"])
        .args(["--config".as_ref(), config_path.as_os_str()])
        .args(["--out".as_ref(), dir.as_os_str()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("pass=true"), "{stdout}");
    assert!(dir.join("summary.json").exists());
    assert!(dir.join("report.csv").exists());
}
