//! End-to-end pipeline checks: config parsing through file outputs,
//! provenance of metrics records, determinism across thread counts and
//! seeds, and the command-line binary's contract.

use std::path::Path;
use std::process::Command;

use rosesim::cli::config::parse_config_str;
use rosesim::cli::runner::{run_simulate, simulate_scenario};
use rosesim::cli::Scenario;

const QUICK_CONFIG: &str = r#"{
    "medium": {"alpha_l": 1.4, "t2": "55 us"},
    "timeline": {"t2": "10 us", "t3": "30 us"},
    "signal": {"tau": "2 us", "photon_number": 14},
    "simulation": {"detuning_points": 201, "seed": 77}
}"#;

fn first_line(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().next().unwrap().to_string()
}

#[test]
fn simulate_writes_contracted_files() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = parse_config_str(QUICK_CONFIG).unwrap();
    let out = run_simulate(&scenario, dir.path()).unwrap();

    assert_eq!(
        first_line(out.trajectory_csv.as_ref().unwrap()),
        "t,|mean_s|,mean_w,echo_flux"
    );
    assert_eq!(
        first_line(&out.histogram_csv),
        "t_bin_start_s,counts_raw,photons_per_sequence"
    );

    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out.metrics_json).unwrap()).unwrap();
    for key in ["signal_in", "transmitted", "echo", "background", "snr", "efficiency", "seed", "scenario"] {
        assert!(metrics.get(key).is_some(), "metrics record lacks '{key}'");
    }
    let eff = metrics["efficiency"].as_f64().unwrap();
    assert!((0.10..=0.14).contains(&eff), "efficiency {eff} outside the expected band");
    assert_eq!(metrics["seed"].as_u64().unwrap(), 77);

    // Histogram rows: raw counts are whole numbers; the photon column
    // is raw / (sequences * overall efficiency).
    let hist = std::fs::read_to_string(&out.histogram_csv).unwrap();
    let row: Vec<&str> = hist.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.len(), 3);
    let raw: f64 = row[1].parse().unwrap();
    let photons: f64 = row[2].parse().unwrap();
    assert_eq!(raw.fract(), 0.0);
    assert!((photons - raw / (15000.0 * 0.22)).abs() < 1e-12);
}

/// A metrics record embeds the full resolved scenario; feeding the
/// record back as a config reproduces the run bit for bit.
#[test]
fn metrics_record_reproduces_itself() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = parse_config_str(QUICK_CONFIG).unwrap();
    let out = run_simulate(&scenario, dir.path()).unwrap();
    let metrics_text = std::fs::read_to_string(&out.metrics_json).unwrap();

    let replay_scenario = parse_config_str(&metrics_text).unwrap();
    assert_eq!(replay_scenario, scenario);

    let replay = simulate_scenario(&replay_scenario).unwrap();
    let original: serde_json::Value = serde_json::from_str(&metrics_text).unwrap();
    assert_eq!(replay.readings.echo, original["echo"].as_f64().unwrap());
    assert_eq!(replay.readings.background, original["background"].as_f64().unwrap());
    assert_eq!(replay.readings.transmitted, original["transmitted"].as_f64().unwrap());
    assert_eq!(replay.echo.total_photons, original["echo_photons_at_crystal"].as_f64().unwrap());
}

/// The ensemble reduction is ordered, so results do not depend on how
/// many worker threads run the sweep.
#[test]
fn results_are_identical_across_thread_counts() {
    let scenario = parse_config_str(QUICK_CONFIG).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_scenario(&scenario).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.trajectory.mean_s, four.trajectory.mean_s);
    assert_eq!(one.trajectory.mean_w, four.trajectory.mean_w);
    assert_eq!(one.readings.echo, four.readings.echo);
    assert_eq!(one.readings.background, four.readings.background);
}

#[test]
fn counting_depends_on_seed_not_state() {
    let mut a = parse_config_str(QUICK_CONFIG).unwrap();
    let b = a.clone();
    let run_a = simulate_scenario(&a).unwrap();
    let run_b = simulate_scenario(&b).unwrap();
    assert_eq!(run_a.readings.echo, run_b.readings.echo);

    a.simulation.seed = 78;
    let run_c = simulate_scenario(&a).unwrap();
    assert_ne!(run_a.readings.echo, run_c.readings.echo);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rosesim"))
}

#[test]
fn binary_simulate_round_trip_and_seed_flag() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, QUICK_CONFIG).unwrap();

    let run = |out: &str, seed: &str| {
        let out_dir = dir.path().join(out);
        let status = bin()
            .args(["simulate", config_path.to_str().unwrap()])
            .args(["--out-dir", out_dir.to_str().unwrap()])
            .args(["--seed", seed])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read_to_string(out_dir.join("metrics.json")).unwrap()
    };
    let a = run("a", "123");
    let b = run("b", "123");
    let c = run("c", "124");
    assert_eq!(a, b, "same seed must give byte-identical metrics");
    let a_json: serde_json::Value = serde_json::from_str(&a).unwrap();
    let c_json: serde_json::Value = serde_json::from_str(&c).unwrap();
    assert_ne!(a_json["echo"], c_json["echo"]);
    assert_eq!(a_json["seed"].as_u64().unwrap(), 123);
}

#[test]
fn binary_rejects_misordered_timeline_with_module_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.json");
    std::fs::write(
        &config_path,
        r#"{"timeline": {"t2": "30 us", "t3": "10 us"}}"#,
    )
    .unwrap();
    let output = bin()
        .args(["simulate", config_path.to_str().unwrap()])
        .args(["--out-dir", dir.path().join("out").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!output.status.success(), "misordered timeline must fail");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("error["), "stderr lacks module tag: {stderr}");
    assert!(stderr.contains("timeline"), "stderr does not name the offending field: {stderr}");
}

#[test]
fn binary_fig4_reports_plateau_and_lifetime() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["reproduce-fig4", "--variant", "one_chs"])
        .args(["--out-dir", dir.path().to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let metrics: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("fig4_one_chs_metrics.json")).unwrap(),
    )
    .unwrap();
    // The plateau is read 2 us after the pulse, so the anchored 0.2
    // photons/bin carries 0.4% of lifetime decay.
    let plateau = metrics["plateau_photons_per_bin"].as_f64().unwrap();
    assert!((0.19..=0.35).contains(&plateau), "plateau {plateau}");
    let t1 = metrics["fitted_t1_s"].as_f64().unwrap();
    assert!((t1 - 460e-6).abs() <= 60e-6, "fitted T1 {t1}");
    assert_eq!(
        first_line(&dir.path().join("fig4_one_chs_histogram.csv")),
        "t_bin_start_s,counts_raw,photons_per_sequence"
    );
}

#[test]
fn binary_design_pulse_prints_survey() {
    let output = bin().arg("design-pulse").output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("bandwidth_kHz"), "missing header: {stdout}");
    assert!(stdout.contains("yes"), "no passing row: {stdout}");
    assert_eq!(stdout.lines().count(), 17, "header plus 16 survey rows");
}

#[test]
fn binary_phase_match_reports_both_orders() {
    let output = bin().arg("phase-match").output().unwrap();
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&output.stdout)).unwrap();
    assert_eq!(report["first_echo"]["regime"], "silenced");
    assert_eq!(report["revived_echo"]["regime"], "emitted");
}

/// Silencing by geometry: a single rephasing pulse leaves the echo
/// wavevector far from the light cone, so no echo flux is emitted
/// while the spontaneous background persists.
#[test]
fn silenced_run_yields_background_only() {
    let mut scenario = parse_config_str(QUICK_CONFIG).unwrap();
    scenario.rephasing.count = 1;
    let run = simulate_scenario(&scenario).unwrap();
    assert_eq!(run.metrics["efficiency"].as_f64().unwrap(), 0.0);
    assert!(run.echo.flux.iter().all(|&f| f == 0.0));
    assert!(run.readings.background > 0.3, "background {}", run.readings.background);
}
