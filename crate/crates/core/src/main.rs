use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use bidiopt::algorithms::{Algo, ParamRule};
use bidiopt::harness::{
    best_of, emit_plot, run_experiment, ExperimentConfig, ModeKind, PlotSeries, PrimalKind, ProblemSource,
};
use bidiopt::problems::{toy, PartitionScheme};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProblemArg {
    Quadratic,
    Toy,
    Libsvm,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Theory,
    Tuned,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ParamsArg {
    Realistic,
    Optimistic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PrimalArg {
    Topk,
    ScaledRandk,
}

/// Simulate compressed server/worker optimization and write traces.
#[derive(Debug, Parser)]
#[command(name = "bidiopt", version)]
struct Cli {
    /// 2direction, adiana, ef21p_diana, gd or agd
    #[arg(long, default_value = "2direction")]
    algo: String,
    #[arg(long, value_enum, default_value = "quadratic")]
    problem: ProblemArg,
    /// LIBSVM file, required with --problem libsvm
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Worker RandK budget (omit for uncompressed uplink)
    #[arg(long)]
    kw: Option<usize>,
    /// Server budget (omit for uncompressed downlink)
    #[arg(long)]
    ka: Option<usize>,
    /// Downlink weight in the total communication cost
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    #[arg(long, value_enum, default_value = "tuned")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    grid_lo: i32,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    grid_hi: i32,
    #[arg(long)]
    rounds: Option<u64>,
    #[arg(long)]
    budget_coords: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,

    #[arg(long, default_value = "contiguous")]
    partition: String,
    /// L2 weight added to every worker objective
    #[arg(long, default_value_t = 0.0)]
    l2: f64,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    #[arg(long, default_value_t = 10.0)]
    l: f64,
    #[arg(long, default_value_t = 0)]
    problem_seed: u64,
    /// Constant in front of the theoretical L̄
    #[arg(long)]
    constant: Option<f64>,
    #[arg(long, value_enum, default_value = "realistic")]
    params: ParamsArg,
    #[arg(long, value_enum, default_value = "topk")]
    primal: PrimalArg,
    /// Count uplink as the sum over workers
    #[arg(long)]
    summed_w2s: bool,
    /// Also write plot.svg with every finished trace
    #[arg(long)]
    plot: bool,
    /// Write the bundled toy dataset to this path and exit
    #[arg(long)]
    write_toy: Option<PathBuf>,
}

fn config(cli: &Cli) -> bidiopt::Result<ExperimentConfig> {
    let algo: Algo = cli.algo.parse()?;
    let problem =
        match cli.problem {
            ProblemArg::Quadratic => {
                ProblemSource::Quadratic { dim: cli.dim, mu: cli.mu, l: cli.l, seed: cli.problem_seed }
            }
            ProblemArg::Toy => ProblemSource::Toy,
            ProblemArg::Libsvm => ProblemSource::Libsvm(cli.dataset.clone().ok_or_else(|| {
                bidiopt::Error::InvalidArgument("--dataset is required with --problem libsvm".into())
            })?),
        };
    let mut cfg = ExperimentConfig::new(algo, problem, cli.out.clone());
    cfg.partition = cli.partition.parse::<PartitionScheme>()?;
    cfg.l2 = cli.l2;
    cfg.n = cli.n;
    cfg.kw = cli.kw;
    cfg.ka = cli.ka;
    cfg.primal = match cli.primal {
        PrimalArg::Topk => PrimalKind::TopK,
        PrimalArg::ScaledRandk => PrimalKind::ScaledRandK,
    };
    cfg.r = cli.r;
    cfg.mode = match cli.mode {
        ModeArg::Theory => ModeKind::Theory,
        ModeArg::Tuned => ModeKind::Tuned,
    };
    if let Some(c) = cli.constant {
        cfg.constant = c;
    }
    cfg.rule = match cli.params {
        ParamsArg::Realistic => ParamRule::Realistic,
        ParamsArg::Optimistic => ParamRule::Optimistic,
    };
    cfg.grid_lo = cli.grid_lo;
    cfg.grid_hi = cli.grid_hi;
    cfg.rounds = cli.rounds;
    cfg.budget_coords = cli.budget_coords;
    cfg.eps = cli.eps;
    cfg.seed = cli.seed;
    cfg.summed_w2s = cli.summed_w2s;
    Ok(cfg)
}

fn main_inner(cli: &Cli) -> bidiopt::Result<()> {
    if let Some(path) = &cli.write_toy {
        let ds = toy::toy_dataset(toy::TOY_SEED, 1000, toy::TOY_FEATURES, toy::TOY_CLASSES);
        std::fs::write(path, ds.to_libsvm())?;
        return Ok(());
    }
    let cfg = config(cli)?;
    let out = run_experiment(&cfg)?;
    let finished: Vec<(i32, &bidiopt::algorithms::Trace)> =
        out.runs.iter().filter_map(|r| Some((r.point.exponent.unwrap_or(0), r.point.trace.as_ref()?))).collect();
    for r in &out.runs {
        let label = r.point.exponent.map_or("theory".into(), |e| format!("2^{e}"));
        match (&r.point.trace, &r.file) {
            (Some(t), Some(f)) => {
                let last = t.last().expect("traces have an initial row");
                println!(
                    "{label}: {:?}, {} rounds, f_gap {:e}, total_r {} -> {}",
                    r.point.status,
                    last.round,
                    last.f_gap,
                    last.total_r,
                    f.display()
                );
            }
            _ => println!("{label}: {:?}", r.point.status),
        }
    }
    if let Some(eps) = cfg.eps {
        match best_of(finished.iter().copied(), eps) {
            Some(e) => println!("best exponent to reach {eps:e}: {e}"),
            None => println!("no run reached {eps:e}"),
        }
    }
    if cli.plot && !finished.is_empty() {
        let series: Vec<PlotSeries> =
            finished.iter().map(|(e, t)| PlotSeries { label: format!("{} 2^{e}", cfg.algo), trace: t }).collect();
        emit_plot(&series, &cfg.out.join("plot.svg"))?;
    }
    println!("manifest: {}", out.manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
