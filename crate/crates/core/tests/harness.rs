use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use bidiopt::algorithms::{expected_counts, Algo, ParamRule, Trace};
use bidiopt::harness::{
    best_of, emit_plot, run_experiment, trace_file_name, ExperimentConfig, ModeKind, PlotSeries, ProblemSource,
    RunStatus,
};

fn quadratic_config(algo: Algo, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(algo, ProblemSource::Quadratic { dim: 12, mu: 0.1, l: 10.0, seed: 3 }, out);
    cfg.n = 4;
    cfg.kw = Some(3);
    cfg.ka = Some(4);
    cfg.rounds = Some(120);
    cfg.seed = 17;
    cfg
}

fn manifest(path: &Path) -> BTreeMap<String, String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[test]
fn gd_unit_grid_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg =
        ExperimentConfig::new(Algo::Gd, ProblemSource::Quadratic { dim: 2, mu: 0.5, l: 2.0, seed: 0 }, dir.path());
    cfg.rounds = Some(50);
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.runs.len(), 1);
    let file = out.runs[0].file.as_ref().unwrap();
    assert_eq!(file.file_name().unwrap(), "gd_2p0.csv");
    let trace = Trace::from_csv(Algo::Gd, &fs::read_to_string(file).unwrap()).unwrap();
    assert_eq!(trace.len(), 51);
    assert!(trace.rows.windows(2).all(|w| w[1].f_gap <= w[0].f_gap));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = quadratic_config(Algo::TwoDirection, a.path());
    cfg.grid_lo = -1;
    cfg.grid_hi = 1;
    run_experiment(&cfg).unwrap();
    cfg.out = b.path().to_path_buf();
    run_experiment(&cfg).unwrap();
    for e in -1..=1 {
        let name = trace_file_name(Algo::TwoDirection, Some(e));
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
    }
    let strip =
        |p: &Path| manifest(&p.join("manifest.txt")).into_iter().filter(|(k, _)| k != "out").collect::<Vec<_>>();
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn eps_met_at_start_gives_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quadratic_config(Algo::Agd, dir.path());
    cfg.rounds = None;
    cfg.eps = Some(1e12);
    let out = run_experiment(&cfg).unwrap();
    let text = fs::read_to_string(out.runs[0].file.as_ref().unwrap()).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn manifest_reproduces_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quadratic_config(Algo::Ef21pDiana, dir.path());
    cfg.grid_lo = -2;
    cfg.grid_hi = 0;
    cfg.rule = ParamRule::Optimistic;
    cfg.eps = Some(1e-3);
    cfg.budget_coords = Some(1e5);
    let out = run_experiment(&cfg).unwrap();
    let text = fs::read_to_string(&out.manifest).unwrap();
    let back = ExperimentConfig::from_manifest(&text).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.hash(), cfg.hash());
    assert_eq!(manifest(&out.manifest)["config_hash"], cfg.hash());
}

/// Recounts every CSV row from the manifest and the coin column.
fn recount(algo: Algo) {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quadratic_config(algo, dir.path());
    cfg.grid_lo = -1;
    cfg.grid_hi = 0;
    let out = run_experiment(&cfg).unwrap();
    let m = manifest(&out.manifest);
    let num = |k: &str| m[k].parse::<u64>().unwrap();
    let (kw, ka, d) = (num("k_omega"), num("k_alpha"), num("d"));
    assert_eq!((kw, ka, d), (3, 4, 12));
    let mut checked = 0;
    for e in -1..=0 {
        let label = format!("2p{e}");
        if m[&format!("run.{label}.status")] != "ok" {
            continue;
        }
        let text = fs::read_to_string(dir.path().join(&m[&format!("run.{label}.file")])).unwrap();
        let trace = Trace::from_csv(algo, &text).unwrap();
        let coins = trace.coins();
        let rounds: u64 = m[&format!("run.{label}.rounds")].parse().unwrap();
        assert_eq!(trace.last().unwrap().round, rounds);
        for row in &trace.rows {
            let (w2s, s2w) = expected_counts(algo, kw, ka, d, &coins[..row.round as usize]);
            assert_eq!((row.w2s_cum, row.s2w_cum), (w2s, s2w), "{algo} {label} round {}", row.round);
            assert_eq!(row.total_r, 0.5 * w2s as f64 + 0.5 * s2w as f64);
        }
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn recount_two_direction() {
    recount(Algo::TwoDirection);
}

#[test]
fn recount_adiana() {
    recount(Algo::Adiana);
}

#[test]
fn recount_ef21p() {
    recount(Algo::Ef21pDiana);
}

#[test]
fn recount_baselines() {
    recount(Algo::Gd);
    recount(Algo::Agd);
}

#[test]
fn theory_mode_writes_one_trace() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quadratic_config(Algo::TwoDirection, dir.path());
    cfg.mode = ModeKind::Theory;
    cfg.constant = 8.0;
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.runs.len(), 1);
    assert!(dir.path().join("2direction_theory.csv").exists());
    let m = manifest(&out.manifest);
    assert!(m["run.theory.lbar"].parse::<f64>().unwrap() > 10.0);
    assert_eq!(m["run.theory.status"], "ok");
}

#[test]
fn inadmissible_grid_points_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quadratic_config(Algo::TwoDirection, dir.path());
    // L̄ = 2^-20·L falls below μ
    cfg.grid_lo = -20;
    cfg.grid_hi = -20;
    let out = run_experiment(&cfg).unwrap();
    assert!(matches!(out.runs[0].point.status, RunStatus::Skipped(_)));
    assert!(out.runs[0].file.is_none());
}

#[test]
fn toy_problem_caches_reference_value() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(Algo::Gd, ProblemSource::Toy, dir.path());
    cfg.n = 10;
    cfg.rounds = Some(3);
    let first = run_experiment(&cfg).unwrap();
    let cached: Vec<_> = fs::read_dir(dir.path().join("cache")).unwrap().collect();
    assert_eq!(cached.len(), 1);
    let second = run_experiment(&cfg).unwrap();
    assert_eq!(first.f_star, second.f_star);
    assert_eq!(first.dim, 60);
    let m = manifest(&first.manifest);
    assert_eq!(m["d"], "60");
}

#[test]
fn best_run_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quadratic_config(Algo::Agd, dir.path());
    cfg.grid_lo = -3;
    cfg.grid_hi = 0;
    cfg.rounds = Some(2000);
    cfg.eps = Some(1e-6);
    let out = run_experiment(&cfg).unwrap();
    let traces: Vec<(i32, &Trace)> =
        out.runs.iter().filter_map(|r| Some((r.point.exponent?, r.point.trace.as_ref()?))).collect();
    assert_eq!(best_of(traces.iter().copied(), 1e-6), Some(0));
    let series: Vec<PlotSeries> =
        traces.iter().map(|(e, t)| PlotSeries { label: format!("agd 2^{e}"), trace: t }).collect();
    let path = dir.path().join("plot.svg");
    let summary = emit_plot(&series, &path).unwrap();
    assert_eq!(summary.polylines, 4);
    let svg = fs::read_to_string(&path).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert_eq!(svg.matches("<polyline").count(), 4);
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quadratic_config(Algo::Gd, dir.path());
    cfg.rounds = None;
    assert!(run_experiment(&cfg).is_err());
    let mut cfg = quadratic_config(Algo::Gd, dir.path());
    cfg.grid_lo = 3;
    cfg.grid_hi = 2;
    assert!(run_experiment(&cfg).is_err());
    let mut cfg = quadratic_config(Algo::Gd, dir.path());
    cfg.problem = ProblemSource::Libsvm(dir.path().join("missing.svm"));
    assert!(run_experiment(&cfg).is_err());
}
