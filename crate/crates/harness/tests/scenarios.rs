mod common;

use anc_core::estimation::{Leak, StatisticsSnapshot};
use anc_sim::compare::write_comparison;
use anc_sim::output::{write_run, JsonLog, RunReport};
use anc_sim::{
    compare_runs, identify, load_config, parse_scenario, read_csv, run_config, tune_leak, write_csv, Format,
    HarnessError, LogFormat, ScenarioConfig, TuneMethod,
};
use common::*;
use std::path::Path;

fn csv_bytes(cfg: &ScenarioConfig) -> Vec<u8> {
    let run = run_config(cfg, None).unwrap();
    let mut buf = Vec::new();
    write_csv(&run.outcome.log, &mut buf).unwrap();
    buf
}

fn simple(noise: &str, controller: &str) -> ScenarioConfig {
    parse(&format!(
        "num_samples = 4000\nseed = 3\n[noise]\n{noise}\n[paths]\nprimary = [0.0, 0.0, 0.9, 0.4, -0.2]\nsecondary = [0.0, 0.9, 0.3]\n[controller]\n{controller}\n"
    ))
}

#[test]
fn silent_noise_gives_all_zero_series() {
    let cfg = simple("kind = \"white\"\nsigma = 0.0", "algorithm = \"two-grad\"\nrho = 0.5");
    let log = run_config(&cfg, None).unwrap().outcome.log;
    assert_eq!(log.len(), 4000);
    for series in [&log.x, &log.d, &log.y, &log.y_out, &log.e] {
        assert!(series.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn no_control_leaves_the_disturbance() {
    let cfg = simple("kind = \"white\"", "algorithm = \"none\"");
    let log = run_config(&cfg, None).unwrap().outcome.log;
    assert_eq!(log.e, log.d);
    let pe: f64 = log.e.iter().map(|v| v * v).sum();
    let pd: f64 = log.d.iter().map(|v| v * v).sum();
    assert_eq!(pe, pd);
}

#[test]
fn unconstrained_tone_is_cancelled() {
    let cfg = parse(
        "sample_rate = 8000.0\nnum_samples = 40000\n[noise]\nkind = \"sine\"\nfrequency = 1000.0\n[paths]\nprimary = [0.0, 0.0, 0.9, 0.4, -0.2]\nsecondary = [0.0, 0.9, 0.3]\n[controller]\nalgorithm = \"fxlms\"\nlength = 8\nmu = 0.01\n",
    );
    let summary = run_config(&cfg, None).unwrap().summary;
    assert!(summary.nr_db.unwrap() >= 20.0, "{summary:?}");
}

#[test]
fn hard_clip_bounds_the_emitted_signal() {
    for alg in [
        "\"fxlms\"",
        "\"clipping-fxlms\"",
        "\"two-grad\"",
        "\"leaky\"\ngamma = 0.01",
    ] {
        let cfg = simple(
            "kind = \"white\"\nsigma = 3.0",
            &format!("rho = 0.3\nmu = 0.002\nalgorithm = {alg}"),
        );
        let log = run_config(&cfg, None).unwrap().outcome.log;
        assert!(log.y_out.iter().all(|v| v.abs() <= 0.3), "{alg}");
    }
}

fn tune_config(secondary: &[f64], sigma: f64, rho: f64, samples: usize) -> ScenarioConfig {
    let primary: Vec<f64> = [0.0].iter().chain(secondary).copied().collect();
    parse(&format!(
        "num_samples = {samples}\nseed = 12\n[noise]\nkind = \"white\"\nsigma = {sigma:?}\n[paths]\nprimary = {primary:?}\nsecondary = {secondary:?}\n[controller]\nalgorithm = \"olfxlms\"\nlength = 8\nrho = {rho:?}\n"
    ))
}

#[test]
fn weak_disturbance_needs_no_leak() {
    let cfg = tune_config(&[0.6, 0.8], 0.1, 1.0, 20_000);
    let snap = tune_leak(&cfg, TuneMethod::Band).unwrap();
    assert_eq!(snap.eta, Some(1.0));
    assert_eq!(snap.lambda_o, Some(0.0));
    assert_eq!(snap.gamma_o, Some(Leak::Scalar(0.0)));
}

#[test]
fn four_times_the_budget_gives_eta_two() {
    // Unit-energy path and unit-variance reference: sigma_d^2 = 1 = 4 rho^2 G_s.
    let cfg = tune_config(&[0.6, 0.8], 1.0, 0.5, 200_000);
    let snap = tune_leak(&cfg, TuneMethod::Band).unwrap();
    let (g_s, eta, lambda) = (snap.g_s.unwrap(), snap.eta.unwrap(), snap.lambda_o.unwrap());
    assert!((g_s - 1.0).abs() < 1e-9, "{g_s}");
    assert!((eta - 2.0).abs() < 0.01, "{eta}");
    assert!((lambda - 1.0).abs() < 0.01, "{lambda}");
    assert!((lambda - (eta - 1.0)).abs() < 1e-12);
    let Some(Leak::Scalar(gamma)) = snap.gamma_o else {
        panic!("{:?}", snap.gamma_o)
    };
    let sigma_x2 = snap.sigma_x2.unwrap();
    assert!((gamma - g_s * (eta - 1.0) * sigma_x2).abs() < 1e-12);
}

#[test]
fn power_gain_methods_agree_on_a_pure_gain() {
    let cfg = tune_config(&[0.7], 1.0, 0.2, 40_000);
    let band = tune_leak(&cfg, TuneMethod::Band).unwrap().g_s.unwrap();
    let frame = tune_leak(&cfg, TuneMethod::Frame).unwrap().g_s.unwrap();
    assert!((frame / band - 1.0).abs() < 0.05, "{band} vs {frame}");
}

#[test]
fn matrix_leak_shape_is_sized_to_the_filter() {
    let mut cfg = tune_config(&[0.6, 0.8], 1.0, 0.5, 20_000);
    cfg.controller.leak_shape = anc_core::controller::LeakShape::Matrix;
    let snap = tune_leak(&cfg, TuneMethod::Band).unwrap();
    let Some(Leak::Matrix(m)) = snap.gamma_o else { panic!() };
    assert_eq!(m.dim(), 8);
    let run = run_config(&cfg, None).unwrap();
    assert!(!run.summary.diverged);
}

#[test]
fn tuning_needs_enough_samples() {
    let cfg = tune_config(&[0.6, 0.8], 1.0, 0.5, 50);
    let err = tune_leak(&cfg, TuneMethod::Band).unwrap_err();
    assert!(err.to_string().contains("tune-leak (band)"), "{err}");
}

#[test]
fn same_config_twice_gives_identical_rows() {
    let cfg = simple("kind = \"white\"", "algorithm = \"fxlms\"\nmu = 0.005");
    let (cmp, _) = compare_runs(&[("a".into(), cfg.clone()), ("b".into(), cfg)], None).unwrap();
    let (mut a, mut b) = (cmp.rows[0].clone(), cmp.rows[1].clone());
    a.label.clear();
    b.label.clear();
    assert_eq!(a, b);
}

#[test]
fn two_grad_violates_less_than_clipping_under_an_active_constraint() {
    let clip = tonal_eta2(30_000, "algorithm = \"clipping-fxlms\"\nmu = 0.01");
    let two = tonal_eta2(30_000, "algorithm = \"two-grad\"\nmu1 = 0.01\nmu2 = 0.05");
    let (cmp, _) = compare_runs(&[("clip".into(), clip), ("2gd".into(), two)], None).unwrap();
    assert!(cmp.rows[1].violation_ratio <= cmp.rows[0].violation_ratio, "{cmp:?}");
    let text = cmp.render_text();
    assert_eq!(text.lines().count(), 3);
    // The algorithm column starts at the same offset on every line.
    let second_column: Vec<usize> = text
        .lines()
        .map(|l| {
            let gap = l.find(' ').unwrap();
            gap + l[gap..].find(|c: char| c != ' ').unwrap()
        })
        .collect();
    assert!(second_column.windows(2).all(|w| w[0] == w[1]), "{text}");
}

#[test]
fn incomparable_runs_are_refused() {
    let err = compare_runs(&[], None).unwrap_err();
    assert!(matches!(err, HarnessError::Comparability(_)));
    let a = simple("kind = \"white\"", "algorithm = \"fxlms\"");
    let mut b = a.clone();
    b.seed = 4;
    let err = compare_runs(&[("a".into(), a.clone()), ("b".into(), b)], None).unwrap_err();
    assert!(err.to_string().contains("noise"), "{err}");
    let mut c = a.clone();
    c.paths.secondary = vec![0.0, 0.8];
    assert!(matches!(
        compare_runs(&[("a".into(), a), ("c".into(), c)], None),
        Err(HarnessError::Comparability(_))
    ));
}

#[test]
fn comparison_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let a = simple("kind = \"white\"", "algorithm = \"fxlms\"\nmu = 0.005");
    let b = simple("kind = \"white\"", "algorithm = \"none\"");
    let (cmp, runs) = compare_runs(&[("a".into(), a), ("b".into(), b)], None).unwrap();
    let files = write_comparison(dir.path(), &cmp, &runs).unwrap();
    assert_eq!(files.len(), 4);
    let json: anc_sim::Comparison =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("compare.json")).unwrap()).unwrap();
    assert_eq!(json, cmp);
}

#[test]
fn identified_estimate_is_close_and_usable() {
    let text = "num_samples = 20000\n[noise]\nkind = \"white\"\n[paths]\nprimary = [0.0, 0.0, 0.9, 0.4]\nsecondary = [0.0, 0.9, 0.3]\nestimate = { identify = { length = 4, iterations = 30000 } }\n[controller]\nalgorithm = \"fxlms\"\nlength = 8\nmu = 0.005\n";
    let cfg = parse(text);
    let id = identify(&cfg).unwrap();
    assert!(id.misalignment < 0.01, "{}", id.misalignment);
    let run = run_config(&cfg, None).unwrap();
    assert_eq!(run.prepared.identification.unwrap().misalignment, id.misalignment);
    assert!(run.summary.nr_db.unwrap() > 20.0);
}

#[test]
fn perturbed_estimate_is_used_as_given() {
    let cfg = simple("kind = \"white\"", "algorithm = \"fxlms\"\nmu = 0.005");
    let mut perturbed = cfg.clone();
    perturbed.paths.estimate = anc_sim::config::EstimateConfig::Taps(vec![0.0, 0.8, 0.35]);
    let run = run_config(&perturbed, None).unwrap();
    assert_eq!(run.prepared.resolved().secondary_estimate.taps(), &[0.0, 0.8, 0.35]);
    assert_ne!(csv_bytes(&cfg), csv_bytes(&perturbed));
}

#[test]
fn report_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = white_eta2(5000, 21, "algorithm = \"two-grad\"\nmu1 = 0.001\nmu2 = 0.04", "");
    let run = run_config(&cfg, None).unwrap();
    let report = write_run(dir.path(), &cfg, &run, LogFormat::Csv).unwrap();
    assert_eq!(report.generator_id, anc_core::signal::GENERATOR_ID);
    assert_eq!(report.algorithm_id, anc_core::controller::ALGORITHM_ID);

    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let back: RunReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back.config, cfg);
    let echoed = serde_json::to_string(&back.config).unwrap();
    let cfg2 = parse_scenario(&echoed, Format::Json).unwrap();
    let original = std::fs::read(dir.path().join("log.csv")).unwrap();
    assert_eq!(csv_bytes(&cfg2), original);
    let parsed = read_csv(original.as_slice()).unwrap();
    assert_eq!(parsed, run.outcome.log);
}

#[test]
fn json_log_carries_every_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simple("kind = \"white\"", "algorithm = \"two-grad\"\nrho = 0.2");
    let run = run_config(&cfg, None).unwrap();
    write_run(dir.path(), &cfg, &run, LogFormat::Json).unwrap();
    let log: JsonLog = serde_json::from_str(&std::fs::read_to_string(dir.path().join("log.json")).unwrap()).unwrap();
    assert_eq!(log, JsonLog::from(&run.outcome.log));
    assert!(log.mode.iter().all(|&m| m <= 1));
    assert!(log.mode.contains(&1));
}

#[test]
fn divergence_truncates_and_flags() {
    let cfg = simple("kind = \"white\"", "algorithm = \"fxlms\"\nmu = 5.0");
    let run = run_config(&cfg, None).unwrap();
    assert!(run.summary.diverged);
    assert!(run.outcome.log.len() < 4000);
    assert!(matches!(
        run.outcome.divergence,
        Some(anc_core::Error::Divergence { .. })
    ));
}

#[test]
fn snapshot_file_sets_the_leak() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = white_eta2(20_000, 2, "algorithm = \"olfxlms\"\nmu = 0.002", "kind = \"none\"");
    let snap = tune_leak(&cfg, TuneMethod::Band).unwrap();
    std::fs::write(dir.path().join("leak.json"), serde_json::to_string(&snap).unwrap()).unwrap();
    let mut from_file = cfg.clone();
    from_file.controller.leak_snapshot = Some("leak.json".into());
    std::fs::write(dir.path().join("run.toml"), from_file.to_toml()).unwrap();
    let loaded = load_config(&dir.path().join("run.toml")).unwrap();
    let run = run_config(&loaded, Some(dir.path())).unwrap();
    assert_eq!(run.prepared.scenario.controller.gamma, snap.gamma_o.clone().unwrap());
    // Tuning inline on the same measurement gives the same leak and the same run.
    assert_eq!(csv_bytes(&cfg), {
        let mut buf = Vec::new();
        write_csv(&run.outcome.log, &mut buf).unwrap();
        buf
    });
    let stale: StatisticsSnapshot = StatisticsSnapshot::default();
    std::fs::write(dir.path().join("leak.json"), serde_json::to_string(&stale).unwrap()).unwrap();
    let err = run_config(&loaded, Some(dir.path())).unwrap_err();
    assert!(err.to_string().contains("controller.leak_snapshot"), "{err}");
}

#[test]
fn online_leak_settles_near_the_budget() {
    let cfg = white_eta2(
        100_000,
        5,
        "algorithm = \"olfxlms-online\"\nmu = 0.002\nframe_len = 2048",
        "kind = \"none\"",
    );
    let run = run_config(&cfg, None).unwrap();
    let rho2 = white_rho().powi(2);
    let ratio = run.summary.steady_state_output_power / rho2;
    assert!((ratio - 1.0).abs() < 0.25, "{ratio}");
    assert!(run.prepared.inverse.unwrap().squared_error < 1e-3);
}

#[test]
fn reconstructed_disturbance_feed_tracks_the_true_one() {
    let base = "algorithm = \"olfxlms-online\"\nmu = 0.002\nframe_len = 2048";
    let truth = white_eta2(60_000, 5, base, "kind = \"none\"");
    let recon = white_eta2(
        60_000,
        5,
        &format!("{base}\ndisturbance_feed = \"reconstructed\""),
        "kind = \"none\"",
    );
    let a = run_config(&truth, None).unwrap().summary;
    let b = run_config(&recon, None).unwrap().summary;
    let gap = (a.nr_db.unwrap() - b.nr_db.unwrap()).abs();
    assert!(gap < 0.5, "{a:?} vs {b:?}");
}

#[test]
fn bundled_scenarios_parse_and_pair_up() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 5);
    let pair = |a: &str, b: &str| [a, b].map(|f| (f.to_string(), load_config(&dir.join(f)).unwrap()));
    let [a, b] = pair("tonal-two-grad.toml", "tonal-clipping.toml");
    assert!(compare_runs(&[a, b], None).is_ok());
}
