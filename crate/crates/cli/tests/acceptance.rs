//! Black-box checks of the `codesign` binary: determinism/replay, output
//! schemas, exit codes and the compare/report subcommands.

use std::path::Path;
use std::process::Command;

fn codesign() -> Command {
    Command::new(env!("CARGO_BIN_EXE_codesign"))
}

fn report(id: &str, name: &str, ok: bool, detail: &str) {
    println!(
        "[acceptance] {id} {name}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "{id} {name} failed: {detail}");
}

fn run_small(case: &str, out: &Path, extra: &[&str]) {
    let status = codesign()
        .args([case, "--budget", "10", "--seed", "1", "--out"])
        .arg(out)
        .args(extra)
        .status()
        .expect("binary runs");
    assert!(status.success(), "{case} run failed");
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn criterion_08_identical_config_and_seed_replay_byte_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let t0 = std::time::Instant::now();
    run_small("run-cpu", &a, &[]);
    let first_run = t0.elapsed().as_secs_f64();
    run_small("run-cpu", &b, &[]);

    let mut all_identical = true;
    let mut checked = 0;
    for entry in std::fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        if name.to_string_lossy().ends_with(".csv") {
            all_identical &= read(&a, &name.to_string_lossy()) == read(&b, &name.to_string_lossy());
            checked += 1;
        }
    }
    report(
        "C8",
        "byte-identical-replay",
        all_identical && checked == 6 && first_run < 60.0,
        &format!("{checked} CSVs compared, first run {first_run:.1}s"),
    );
}

#[test]
fn pareto_csv_schema_differs_by_case_study() {
    let tmp = tempfile::tempdir().unwrap();
    let (cpu, fpga) = (tmp.path().join("cpu"), tmp.path().join("fpga"));
    run_small("run-cpu", &cpu, &["--algo", "bimads"]);
    run_small("run-fpga", &fpga, &["--algo", "bimads"]);
    let cpu_front = read(&cpu, "front_bimads_seed1.csv");
    let fpga_front = read(&fpga, "front_bimads_seed1.csv");
    assert!(!cpu_front.contains("n_frac"));
    assert!(fpga_front.lines().nth(1).unwrap().contains("n_frac"));
    // Settling times sorted ascending.
    for front in [&cpu_front, &fpga_front] {
        let f1: Vec<f64> = front
            .lines()
            .skip(2)
            .map(|l| l.split(',').rev().nth(1).unwrap().parse().unwrap())
            .collect();
        assert!(f1.windows(2).all(|w| w[0] <= w[1]), "front not sorted: {f1:?}");
    }
    // A smoke run produces the three CSVs plus the manifest.
    for name in ["evals_bimads_seed1.csv", "profile_bimads_seed1.csv", "manifest.json"] {
        assert!(cpu.join(name).exists(), "missing {name}");
    }
}

#[test]
fn exit_codes_distinguish_config_and_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();

    // Malformed config file -> 1.
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "case_study = \"cpu\"\n").unwrap();
    let status = codesign()
        .args(["run-cpu", "--config"])
        .arg(&bad)
        .args(["--out"])
        .arg(tmp.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));

    // Config/subcommand case-study mismatch -> 1.
    let status = codesign()
        .args(["run-fpga", "--budget", "10", "--out"])
        .arg(tmp.path().join("y"))
        .args(["--config", "crates/core/configs/default_cpu.toml"])
        .current_dir(env!("CARGO_MANIFEST_DIR").to_string() + "/../..")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));

    // Budget below the validity floor -> 1.
    let status = codesign()
        .args(["run-cpu", "--budget", "3", "--out"])
        .arg(tmp.path().join("z"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
}

#[test]
fn compare_of_a_run_with_itself_is_a_tie() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    run_small("run-cpu", &run, &[]);
    let csv = tmp.path().join("comparison.csv");
    let output = codesign()
        .arg("compare")
        .arg(&run)
        .arg(&run)
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout).to_string();
    assert!(text.contains("verdict:           tie"), "unexpected: {text}");
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<&str>> = csv_text
        .lines()
        .skip(2)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][1], rows[1][1], "hypervolumes differ");
    assert_eq!(rows[0][3], "0");
    assert_eq!(rows[1][3], "0");

    // Mismatched case studies are refused with exit code 1.
    let fpga = tmp.path().join("fpga");
    run_small("run-fpga", &fpga, &["--algo", "lhs"]);
    let status = codesign().arg("compare").arg(&run).arg(&fpga).output().unwrap();
    assert_eq!(status.status.code(), Some(1));
}

#[test]
fn report_and_optional_artifacts_render() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    run_small(
        "run-fpga",
        &run,
        &["--svg", "--dump-matrices", "--export-trajectories"],
    );
    for name in ["fronts.svg", "profiles.svg", "hessian.csv", "a_discrete.csv"] {
        assert!(run.join(name).exists(), "missing {name}");
    }
    let svg = read(&run, "fronts.svg");
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    // Trajectory files exist for every bank entry and start at t = 0.
    let traj = read(&run, "trajectory_ic1.csv");
    assert!(traj.lines().nth(2).unwrap().starts_with("0,"));

    let output = codesign().arg("report").arg(&run).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout).to_string();
    assert!(text.contains("case study: fpga"));
    assert!(text.contains("Pareto front"));
}
