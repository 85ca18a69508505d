use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, ProblemSource};
use crate::accounting::ParamChoice;
use crate::algorithms::{build_method, run, Algo, MethodSetup, StopRule, Trace};
use crate::parallel;
use crate::problems::dataset::hex;
use crate::problems::{
    make_quadratic, parse_libsvm, partition, reference_solve, toy, Dataset, DistributedProblem, Optimum, QuadraticSpec,
};
use crate::schedule::ScheduleParams;
use crate::{Error, Result};

const FSTAR_TOL: f64 = 1e-12;
const FSTAR_MAX_ITERS: usize = 2_000_000;

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn load_dataset(source: &ProblemSource) -> Result<Option<Dataset>> {
    Ok(match source {
        ProblemSource::Quadratic { .. } => None,
        ProblemSource::Toy => Some(toy::bundled_toy()?),
        ProblemSource::Libsvm(path) => {
            let bytes =
                fs::read(path).map_err(|e| Error::invalid(format!("cannot read dataset {}: {e}", path.display())))?;
            Some(parse_libsvm(&bytes)?)
        }
    })
}

fn cache_key(ds: &Dataset, cfg: &ExperimentConfig) -> String {
    let text = format!("{}|{}|{}|{}", ds.content_hash(), cfg.n, cfg.partition, cfg.l2);
    hex(&Sha256::digest(text.as_bytes()))[..32].to_string()
}

fn read_optimum(path: &Path, d: usize) -> Option<Optimum> {
    let text = fs::read_to_string(path).ok()?;
    let mut f_star = None;
    let mut grad_norm = None;
    let mut x_star = None;
    for line in text.lines() {
        let (k, v) = line.split_once('=')?;
        match k {
            "f_star" => f_star = v.parse().ok(),
            "grad_norm" => grad_norm = v.parse().ok(),
            "x_star" => x_star = v.split(',').map(|s| s.parse().ok()).collect::<Option<Vec<f64>>>(),
            _ => {}
        }
    }
    let x_star = x_star.filter(|x| x.len() == d)?;
    Some(Optimum { x_star, f_star: f_star?, grad_norm })
}

fn write_optimum(path: &Path, opt: &Optimum) -> Result<()> {
    let xs: Vec<String> = opt.x_star.iter().map(f64::to_string).collect();
    let text =
        format!("f_star={}\ngrad_norm={}\nx_star={}\n", opt.f_star, opt.grad_norm.unwrap_or(f64::NAN), xs.join(","));
    write_atomic(path, text.as_bytes())
}

/// High-accuracy optimum of a logistic problem, cached under `cache_dir`
/// by dataset hash, worker count, partition and L2 weight.
pub fn reference_optimum(
    problem: &DistributedProblem,
    ds: &Dataset,
    cfg: &ExperimentConfig,
    cache_dir: Option<&Path>,
) -> Result<Optimum> {
    let path = cache_dir.map(|dir| dir.join(format!("fstar-{}.txt", cache_key(ds, cfg))));
    if let Some(opt) = path.as_deref().and_then(|p| read_optimum(p, problem.dim())) {
        return Ok(opt);
    }
    let opt = reference_solve(problem, FSTAR_TOL, FSTAR_MAX_ITERS);
    if let (Some(path), Some(dir)) = (&path, cache_dir) {
        fs::create_dir_all(dir)?;
        write_optimum(path, &opt)?;
    }
    Ok(opt)
}

/// Loads the configured problem and attaches its optimum.
pub fn build_problem(cfg: &ExperimentConfig, cache_dir: Option<&Path>) -> Result<DistributedProblem> {
    match &cfg.problem {
        ProblemSource::Quadratic { dim, mu, l, seed } => {
            make_quadratic(&QuadraticSpec::random(*dim, cfg.n, *mu, *l, *seed))
        }
        source => {
            let ds = load_dataset(source)?.expect("dataset-backed source");
            let shards = partition(&ds, cfg.n, cfg.partition)?;
            let mut problem = DistributedProblem::logistic(shards, cfg.l2)?;
            let opt = reference_optimum(&problem, &ds, cfg, cache_dir)?;
            problem.set_optimum(opt);
            Ok(problem)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Ok,
    /// Objective became non-finite; the partial trace is kept.
    Diverged,
    /// The grid point is not admissible (e.g. `L̄ < μ`).
    Skipped(String),
}

/// Outcome of one grid point.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub exponent: Option<i32>,
    pub status: RunStatus,
    pub trace: Option<Trace>,
    pub choice: Option<ParamChoice>,
    pub schedule: Option<ScheduleParams>,
    pub step: Option<f64>,
}

/// Runs `base` once per exponent (or once in theory mode when `exponents`
/// is `None`), in parallel across grid points.
pub fn sweep(
    problem: &DistributedProblem,
    base: &MethodSetup,
    exponents: Option<&[i32]>,
    theory_constant: f64,
    stop: StopRule,
    threads: usize,
) -> Vec<SweepPoint> {
    let points: Vec<Option<i32>> = match exponents {
        Some(es) => es.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    parallel::map_indexed(points.len(), threads, |j| {
        let exponent = points[j];
        let mut setup = base.clone();
        setup.mode = match exponent {
            Some(e) => crate::algorithms::Mode::Tuned { exponent: e },
            None => crate::algorithms::Mode::Theory { constant: theory_constant },
        };
        let mut built = match build_method(&setup, problem) {
            Ok(b) => b,
            Err(e) => {
                return SweepPoint {
                    exponent,
                    status: RunStatus::Skipped(e.to_string()),
                    trace: None,
                    choice: None,
                    schedule: None,
                    step: None,
                }
            }
        };
        let (status, trace) = match run(built.method.as_mut(), problem, stop) {
            Ok(t) => (RunStatus::Ok, Some(t)),
            Err(Error::NonFiniteObjective { trace, .. }) => (RunStatus::Diverged, Some(*trace)),
            Err(e) => (RunStatus::Skipped(e.to_string()), None),
        };
        SweepPoint { exponent, status, trace, choice: built.choice, schedule: built.schedule, step: built.step }
    })
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub point: SweepPoint,
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub manifest: PathBuf,
    pub runs: Vec<RunRecord>,
    pub f_star: f64,
    pub dim: usize,
}

pub fn trace_file_name(algo: Algo, exponent: Option<i32>) -> String {
    match exponent {
        Some(i) => format!("{algo}_2p{i}.csv"),
        None => format!("{algo}_theory.csv"),
    }
}

/// Runs the configured experiment and writes one CSV per grid point plus
/// `manifest.txt` into `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    let problem = build_problem(cfg, Some(&cfg.out.join("cache")))?;
    let d = problem.dim();
    let (dual, primal) = cfg.compressors(d)?;
    let mut base = MethodSetup::new(cfg.algo, dual.clone(), primal.clone());
    base.rule = cfg.rule;
    base.r = cfg.r;
    base.summed_w2s = cfg.summed_w2s;
    base.seed = cfg.seed;
    let exponents = cfg.exponents();
    let grid = match cfg.mode {
        super::ModeKind::Tuned => Some(exponents.as_slice()),
        super::ModeKind::Theory => None,
    };
    let points = sweep(&problem, &base, grid, cfg.constant, cfg.stop_rule(), parallel::thread_cap());

    let c = problem.constants();
    let f_star = problem.optimum().map(|o| o.f_star).unwrap_or(f64::NAN);
    let mut manifest = String::from("# experiment manifest\n");
    manifest.push_str(&cfg.to_manifest_lines());
    let mut extra = vec![
        ("config_hash".to_string(), cfg.hash()),
        ("d".into(), d.to_string()),
        ("k_omega".into(), dual.expected_density().to_string()),
        ("k_alpha".into(), primal.expected_density().to_string()),
        ("dual".into(), dual.label()),
        ("primal_spec".into(), primal.label()),
        ("f_star".into(), f_star.to_string()),
        ("const_L".into(), c.l.to_string()),
        ("const_L_max".into(), c.l_max.to_string()),
        ("const_Lhat_bound".into(), c.lhat_bound.to_string()),
        ("const_mu".into(), c.mu.to_string()),
    ];
    if let Some(ch) = points.iter().find_map(|p| p.choice) {
        extra.push(("p".into(), ch.p.to_string()));
        extra.push(("tau".into(), ch.tau.to_string()));
        extra.push(("mu_r".into(), ch.mu_r.to_string()));
    }
    let mut runs = Vec::with_capacity(points.len());
    for point in points {
        let label = point.exponent.map_or("theory".to_string(), |e| format!("2p{e}"));
        let file = match &point.trace {
            Some(trace) => {
                let name = trace_file_name(cfg.algo, point.exponent);
                let path = cfg.out.join(&name);
                write_atomic(&path, trace.to_csv().as_bytes())?;
                extra.push((format!("run.{label}.file"), name));
                extra.push((format!("run.{label}.rounds"), trace.last().map_or(0, |r| r.round).to_string()));
                Some(path)
            }
            None => None,
        };
        let status = match &point.status {
            RunStatus::Ok => "ok".to_string(),
            RunStatus::Diverged => "diverged".to_string(),
            RunStatus::Skipped(why) => format!("skipped: {}", why.replace('\n', " ")),
        };
        extra.push((format!("run.{label}.status"), status));
        if let Some(s) = point.schedule {
            extra.push((format!("run.{label}.lbar"), s.lbar.to_string()));
            extra.push((format!("run.{label}.gamma0"), s.gamma0.to_string()));
        }
        if let Some(step) = point.step {
            extra.push((format!("run.{label}.step"), step.to_string()));
        }
        runs.push(RunRecord { point, file });
    }
    for (k, v) in extra {
        manifest.push_str(&format!("{k}={v}\n"));
    }
    let manifest_path = cfg.out.join("manifest.txt");
    write_atomic(&manifest_path, manifest.as_bytes())?;
    Ok(ExperimentOutput { manifest: manifest_path, runs, f_star, dim: d })
}
