use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use affine_strand::state::{SeriesManifest, SolutionSeries};

const PURE_STRING: &str = include_str!("../scenarios/pure_string.toml");
const STRAND: &str = include_str!("../scenarios/strand.toml");

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_affine-strand"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn simulate(config: &Path, out: &Path) -> Output {
    run(bin().arg("simulate").arg("--config").arg(config).arg("--out").arg(out))
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

#[test]
fn simulate_t_end_zero_writes_one_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &STRAND.replace("t_end = 6.283185307179586", "t_end = 0.0"));
    let out = dir.path().join("out");
    let o = simulate(&cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (series, _) = SolutionSeries::load(&out).unwrap();
    assert_eq!(series.snapshots.len(), 1);
}

#[test]
fn simulate_rejects_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &STRAND.replace("n = 256", "n = 4"));
    let o = simulate(&cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("grid.n must be ≥ 8"), "{}", stderr(&o));
}

#[test]
fn simulate_names_unknown_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &STRAND.replace("[params]", "[params]\nvelocity = 2.0"));
    let o = simulate(&cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("velocity"), "{}", stderr(&o));
}

#[test]
fn simulate_missing_config_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate(&dir.path().join("nope.toml"), &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.toml"));
}

#[test]
fn manifest_lists_every_file_and_keeps_config() {
    let dir = tempfile::tempdir().unwrap();
    let text = STRAND.replace("n = 256", "n = 32");
    let cfg = write_config(dir.path(), "c.toml", &text);
    let out = dir.path().join("out");
    assert_eq!(simulate(&cfg, &out).status.code(), Some(0));
    let manifest: SeriesManifest =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config.as_deref(), Some(text.as_str()));
    let mut listed = manifest.files.clone();
    listed.sort();
    let mut on_disk: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    on_disk.sort();
    assert_eq!(listed, on_disk);
    let plot = fs::read_to_string(out.join("plot.gp")).unwrap();
    assert!(plot.contains("diagnostics.csv") && plot.contains(&manifest.snapshots.last().unwrap().file));
}

#[test]
fn pure_string_sample_conserves_energy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = simulate(&scenario_dir().join("pure_string.toml"), &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let energies: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    let e0 = energies[0];
    let worst = energies.iter().map(|e| ((e - e0) / e0).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-4, "{worst}");
}

#[test]
fn blow_up_exits_two_and_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
[grid]
n = 8
length = 1.0
[time]
dt = 1.0
t_end = 100.0
[params]
potential = { kind = "polynomial", coefficients = [0.0, 0.0, 0.0, 1e6] }
[initial.rho]
offset = [10.0, 0.0, 0.0]
"#;
    let cfg = write_config(dir.path(), "c.toml", text);
    let out = dir.path().join("out");
    let o = simulate(&cfg, &out);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("blew up"));
    let (series, _) = SolutionSeries::load(&out).unwrap();
    assert!(!series.snapshots.is_empty());
}

#[test]
fn verify_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(bin().args(["verify", "--seed", "42", "--trials", "1000", "--out"]).arg(&out));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["seed"], 42);
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 12);
    assert!(checks.iter().all(|c| c["passed"] == true));
    assert_eq!(serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap(), report);
}

#[test]
fn verify_usage_errors() {
    let o = run(bin().args(["verify", "--trials", "0"]));
    assert_eq!(o.status.code(), Some(1));
    let o = run(bin().args(["verify", "--tol", "not-a-pair"]));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(bin()
        .args(["verify", "--trials", "3", "--tol", "hamiltonian.gradient_rho=0", "--out"])
        .arg(dir.path().join("r.json")));
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("hamiltonian.gradient_rho"));
}

#[test]
fn residual_missing_manifest_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(bin().arg("residual").arg("--in").arg(dir.path()));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("manifest.json"), "{}", stderr(&o));
}

#[test]
fn residual_needs_three_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &STRAND.replace("t_end = 6.283185307179586", "t_end = 0.0"));
    let out = dir.path().join("out");
    assert_eq!(simulate(&cfg, &out).status.code(), Some(0));
    let o = run(bin().arg("residual").arg("--in").arg(&out));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at least 3"), "{}", stderr(&o));
}

#[test]
fn residual_of_zero_solution_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[grid]\nn = 16\nlength = 1.0\n[time]\ncfl_safety = 0.5\nt_end = 0.5\n";
    let cfg = write_config(dir.path(), "zero.toml", text);
    let out = dir.path().join("out");
    assert_eq!(simulate(&cfg, &out).status.code(), Some(0));
    let o = run(bin().arg("residual").arg("--in").arg(&out).args(["--forms", "random:4:1"]));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for f in report["forms"].as_array().unwrap() {
        assert_eq!(f["residuals"][0].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn residual_refinement_on_wave_oracle_series() {
    let dir = tempfile::tempdir().unwrap();
    let mut dirs = Vec::new();
    for n in [64usize, 128, 256] {
        let text = PURE_STRING
            .replace("n = 256", &format!("n = {n}"))
            .replace("snapshot_stride = 16", "snapshot_stride = 2")
            .replace("diagnostics_stride = 4", "diagnostics_stride = 1")
            .replace("cfl_safety = 0.5", "cfl_safety = 0.5\nintegrator = \"wave-oracle\"");
        let cfg = write_config(dir.path(), &format!("w{n}.toml"), &text);
        let out = dir.path().join(format!("w{n}"));
        assert_eq!(simulate(&cfg, &out).status.code(), Some(0));
        dirs.push(out);
    }
    let forms = dir.path().join("forms.json");
    fs::write(
        &forms,
        r#"[{"y_section": {"offset": [1.0, 0.5, -0.2]}}, {"xi": {"offset": [0.0, 1.0, 0.0]}, "y_section": {"offset": [0.3, 0.0, 0.0], "modes": [{"component": 0, "wavenumber": 1, "amplitude": 0.5}]}}]"#,
    )
    .unwrap();
    let report_path = dir.path().join("residual.json");
    // coarse-to-fine order is recovered from the manifests
    let o = run(bin()
        .arg("residual")
        .arg("--in")
        .arg(&dirs[2])
        .arg("--in")
        .arg(&dirs[0])
        .arg("--in")
        .arg(&dirs[1])
        .arg("--forms")
        .arg(&forms)
        .arg("--refine")
        .arg("--out")
        .arg(&report_path));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["resolutions"], serde_json::json!([64, 128, 256]));
    for r in report["convergence"].as_array().unwrap() {
        assert!(r["order"].as_f64().unwrap() >= 1.8, "{r}");
    }
}

#[test]
fn convergence_rejects_two_levels() {
    let o = run(bin()
        .arg("convergence")
        .arg("--config")
        .arg(scenario_dir().join("strand.toml"))
        .args(["--levels", "2"]));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("levels must be ≥ 3"));
}

#[test]
fn convergence_analytic_pure_string() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &PURE_STRING.replace("n = 256", "n = 64"));
    let out = dir.path().join("conv.json");
    let o = run(bin()
        .arg("convergence")
        .arg("--config")
        .arg(&cfg)
        .args(["--levels", "3", "--oracle", "analytic", "--out"])
        .arg(&out));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let p = r["order"].as_f64().unwrap();
    assert!((1.7..=2.3).contains(&p), "{p}");
}

#[test]
fn convergence_self_strand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &STRAND.replace("n = 256", "n = 64"));
    let o = run(bin().arg("convergence").arg("--config").arg(&cfg).args(["--levels", "3"]));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["order"].as_f64().unwrap() >= 1.7, "{r}");
}

#[test]
fn thread_cap_is_honoured_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(bin()
        .env("AFFINE_STRAND_THREADS", "2")
        .args(["verify", "--trials", "5", "--out"])
        .arg(dir.path().join("r.json")));
    assert_eq!(o.status.code(), Some(0));
    let o = run(bin().env("AFFINE_STRAND_THREADS", "many").args(["verify", "--trials", "5"]));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("AFFINE_STRAND_THREADS"));
}
