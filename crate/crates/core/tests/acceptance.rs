//! End-to-end acceptance checks, one line per criterion.
//!
//! Run with `cargo test --test acceptance`; pass criterion ids such as `ac3`
//! after `--` to run a subset.

mod common;

use std::time::Instant;

use bidiopt::accounting::complexity::{self, Point};
use bidiopt::accounting::{select_params_realistic, CommLedger};
use bidiopt::algorithms::{
    build_method, Adiana, Agd, Algo, CoinSource, Ef21pDiana, Gd, Method, MethodSetup, Mode, TwoDirection,
};
use bidiopt::compressors::{rand_k, top_k, CompressorSpec};
use bidiopt::harness::{build_problem, coords_to_eps, sweep, ExperimentConfig, ProblemSource, RunStatus};
use bidiopt::linalg;
use bidiopt::parallel::thread_cap;
use bidiopt::problems::DistributedProblem;
use bidiopt::schedule::{
    invariants, lbar_with_constant, strongly_convex_q, ScheduleParams, TheoryInputs, THEORY_CONSTANT,
};
use common::{max_abs, quad, schedule_for, start};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- AC1

fn ac1_compressors() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..10_000 {
        let d = rng.random_range(1..=64usize);
        let k = rng.random_range(1..=d);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
        let out = top_k(&x, k).map_err(|e| e.to_string())?;
        let lhs = linalg::dist_sq(&out, &x);
        let rhs = (1.0 - k as f64 / d as f64) * linalg::norm_sq(&x);
        if lhs > rhs {
            return Err(format!("TopK trial {trial}: {lhs} > {rhs} (d={d}, k={k})"));
        }
    }
    let n = 100_000usize;
    let mut worst_z = 0.0f64;
    let mut worst_var = 0.0f64;
    for (d, k) in [(64usize, 8usize), (16, 4), (10, 3), (5, 1)] {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nx = linalg::norm_sq(&x);
        let (mut sum, mut sum_sq) = (vec![0.0; d], vec![0.0; d]);
        let mut err = 0.0;
        for _ in 0..n {
            let c = rand_k(&x, k, &mut rng).map_err(|e| e.to_string())?;
            for j in 0..d {
                sum[j] += c[j];
                sum_sq[j] += c[j] * c[j];
            }
            err += linalg::dist_sq(&c, &x);
        }
        let nf = n as f64;
        for j in 0..d {
            let mean = sum[j] / nf;
            let var = (sum_sq[j] / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
            let se = (var / nf).sqrt();
            if se > 0.0 {
                worst_z = worst_z.max((mean - x[j]).abs() / se);
            }
        }
        let omega = d as f64 / k as f64 - 1.0;
        worst_var = worst_var.max(((err / nf / nx) / omega - 1.0).abs());
    }
    check(
        worst_z <= 4.0 && worst_var <= 0.05,
        format!(
            "TopK 10^4 draws exact; RandK max |z| = {worst_z:.2} (≤ 4), max variance ratio error {:.2}% (≤ 5%)",
            100.0 * worst_var
        ),
    )
}

// ---------------------------------------------------------------- AC2

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

fn ac2_schedule() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..50 {
        let lbar = log_uniform(&mut rng, 1e-2, 1e4);
        let mu = if i % 5 == 0 { 0.0 } else { lbar * log_uniform(&mut rng, 1e-6, 1.0) };
        let params = ScheduleParams {
            lbar,
            mu,
            p: log_uniform(&mut rng, 1e-3, 0.25),
            alpha: log_uniform(&mut rng, 1e-3, 1.0),
            tau: log_uniform(&mut rng, 1e-3, 1.0),
            beta: log_uniform(&mut rng, 1e-3, 1.0),
            gamma0: log_uniform(&mut rng, 1.0, 1e3),
        };
        if let Err(v) = invariants::verify(&params, 10_000, 1e-12) {
            return Err(format!("tuple {i} {params:?}: item {} at t = {}: {}", v.item, v.t, v.detail));
        }
    }
    Ok("50 tuples × 10^4 steps, all six items at 1e-12".into())
}

// ---------------------------------------------------------------- AC3

fn ac3_adiana_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..5u64 {
        let problem = quad(10, 4, 0.1, 10.0, 100 + seed);
        let dual = CompressorSpec::rand_k(10, 3).unwrap();
        let params = schedule_for(&problem, &dual, 1.0, 2.0, 0.3);
        let x0 = start(&problem, seed);
        let ledger = CommLedger::new(4, 0.5);
        let mut two = TwoDirection::new(
            &problem,
            params,
            dual.clone(),
            CompressorSpec::identity(10),
            x0.clone(),
            seed,
            ledger.clone(),
        )
        .map_err(|e| e.to_string())?;
        let mut adi = Adiana::new(&problem, params, dual, x0, seed, ledger).map_err(|e| e.to_string())?;
        for t in 0..100 {
            two.step(&problem).map_err(|e| e.to_string())?;
            adi.step(&problem).map_err(|e| e.to_string())?;
            let mut gap = max_abs(two.x(), adi.x()).max(max_abs(two.z(), adi.z())).max(max_abs(two.u(), adi.u()));
            for i in 0..4 {
                gap = gap.max(max_abs(two.h_worker(i), adi.h_worker(i)));
            }
            worst = worst.max(gap);
            if gap > 1e-10 {
                return Err(format!("seed {seed}, round {t}: max-abs {gap:e}"));
            }
        }
    }
    Ok(format!("5 quadratics × 100 rounds, max-abs over x, z, u, h_i = {worst:.1e} (≤ 1e-10)"))
}

// ---------------------------------------------------------------- AC4

fn ac4_replicas() -> Outcome {
    let problem = quad(16, 6, 0.05, 20.0, 404);
    let dual = CompressorSpec::rand_k(16, 4).unwrap();
    let primal = CompressorSpec::top_k(16, 5).unwrap();
    let params = schedule_for(&problem, &dual, primal.alpha().unwrap(), 4.0, 0.25);
    let mut m = TwoDirection::new(&problem, params, dual, primal, start(&problem, 4), 4, CommLedger::new(6, 0.5))
        .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for t in 0..200 {
        m.step(&problem).map_err(|e| e.to_string())?;
        for i in 0..problem.n() {
            if m.worker_w(i) != m.w() {
                return Err(format!("round {t}: worker {i} w differs from the server"));
            }
        }
        let mean: Vec<f64> =
            (0..16).map(|j| (0..problem.n()).map(|i| m.h_worker(i)[j]).sum::<f64>() / problem.n() as f64).collect();
        worst = worst.max(max_abs(&mean, m.h()));
    }
    check(worst <= 1e-12, format!("200 rounds, w bit-identical on all 6 workers, |h − mean h_i| ≤ {worst:.1e}"))
}

// ---------------------------------------------------------------- AC5

struct RateSetup {
    problem: DistributedProblem,
    params: ScheduleParams,
    dual: CompressorSpec,
    primal: CompressorSpec,
    x0: Vec<f64>,
    q: f64,
    bound0: f64,
}

fn rate_setup(constant: f64) -> RateSetup {
    let problem = quad(20, 5, 0.1, 10.0, 505);
    let dual = CompressorSpec::rand_k(20, 4).unwrap();
    let primal = CompressorSpec::top_k(20, 4).unwrap();
    let mut setup = MethodSetup::new(Algo::TwoDirection, dual.clone(), primal.clone());
    setup.mode = Mode::Theory { constant };
    let params = build_method(&setup, &problem).unwrap().schedule.unwrap();
    let c = problem.constants();
    let omega = dual.omega().unwrap();
    let choice = select_params_realistic(omega, 4.0, 4.0, 20.0, 0.5);
    let inp = TheoryInputs {
        l: c.l,
        l_max: c.l_max,
        omega,
        alpha: primal.alpha().unwrap(),
        tau: choice.tau,
        p: choice.p,
        beta: 1.0 / (omega + 1.0),
        n: 5,
    };
    assert_eq!(params.lbar, lbar_with_constant(constant, &inp));
    let q = strongly_convex_q(constant, &inp, c.mu);
    let x0 = start(&problem, 0);
    let opt = problem.optimum().unwrap();
    let bound0 =
        problem.value(&x0) - opt.f_star + (params.lbar / params.gamma0 + c.mu) * linalg::dist_sq(&x0, &opt.x_star);
    RateSetup { problem, params, dual, primal, x0, q, bound0 }
}

/// Mean of `f(z^T) − f* + μ/2·‖u^T − x*‖²` over `seeds` at each horizon.
fn lyapunov_means(s: &RateSetup, horizons: &[u64], seeds: u64) -> Vec<f64> {
    let opt = s.problem.optimum().unwrap();
    let mu = s.problem.constants().mu;
    let last = *horizons.iter().max().unwrap();
    let mut sums = vec![0.0; horizons.len()];
    for seed in 0..seeds {
        let mut m = TwoDirection::new(
            &s.problem,
            s.params,
            s.dual.clone(),
            s.primal.clone(),
            s.x0.clone(),
            seed,
            CommLedger::new(5, 0.5),
        )
        .unwrap();
        for t in 1..=last {
            m.step(&s.problem).unwrap();
            if let Some(j) = horizons.iter().position(|&h| h == t) {
                sums[j] += s.problem.value(m.z()) - opt.f_star + 0.5 * mu * linalg::dist_sq(m.u(), &opt.x_star);
            }
        }
    }
    sums.into_iter().map(|v| v / seeds as f64).collect()
}

fn ac5_rate() -> Outcome {
    let seeds = 128;
    let s = rate_setup(8.0);
    let horizons = [s.q.ceil() as u64, (2.0 * s.q).ceil() as u64];
    let means = lyapunov_means(&s, &horizons, seeds);
    let mut notes = vec![format!("Q = {:.1}", s.q)];
    let mut ok = true;
    for (&t, &m) in horizons.iter().zip(&means) {
        let bound = 2.0 * (-(t as f64) / s.q).exp() * s.bound0;
        ok &= m <= 1.05 * bound;
        notes.push(format!("T = {t}: mean {m:.3e} vs bound {bound:.3e}"));
    }
    let full = rate_setup(THEORY_CONSTANT);
    let t = (full.q / 10.0).ceil() as u64;
    let mean = lyapunov_means(&full, &[t], seeds)[0];
    let bound = 2.0 * (-(t as f64) / full.q).exp() * full.bound0;
    ok &= mean <= bound;
    notes.push(format!("full constant T = {t}: mean {mean:.3e} vs bound {bound:.3e}"));
    check(ok, format!("{seeds} seeds, constant 8; {}", notes.join("; ")))
}

// ---------------------------------------------------------------- AC6

/// Hand count of `(per-worker w2s, s2w)` for one method after the script.
fn hand_count(algo: Algo, kw: u64, ka: u64, d: u64, coins: &[bool]) -> (u64, u64) {
    let mut w2s = 0;
    let mut s2w = 0;
    if matches!(algo, Algo::TwoDirection | Algo::Adiana | Algo::Ef21pDiana) {
        // dense h_i upload and model broadcast at start
        w2s += d;
        s2w += d;
    }
    for &heads in coins {
        match algo {
            Algo::TwoDirection => {
                w2s += 2 * kw;
                s2w += ka;
                if heads {
                    s2w += 2 * d;
                }
            }
            Algo::Adiana => {
                w2s += 2 * kw;
                s2w += d;
            }
            Algo::Ef21pDiana => {
                w2s += kw;
                s2w += ka;
            }
            Algo::Gd | Algo::Agd => {
                w2s += d;
                s2w += d;
            }
        }
    }
    (w2s, s2w)
}

fn metered(algo: Algo, problem: &DistributedProblem, kw: usize, ka: usize, coins: &[bool]) -> (Vec<u64>, u64, f64) {
    let d = problem.dim();
    let n = problem.n();
    let dual = CompressorSpec::rand_k(d, kw).unwrap();
    let primal = CompressorSpec::top_k(d, ka).unwrap();
    let ledger = CommLedger::new(n, 0.5);
    let x0 = start(problem, 1);
    let params = schedule_for(problem, &dual, primal.alpha().unwrap(), 2.0, 0.3);
    let script = CoinSource::Scripted(coins.to_vec());
    let mut m: Box<dyn Method> = match algo {
        Algo::TwoDirection => {
            Box::new(TwoDirection::new(problem, params, dual, primal, x0, 9, ledger).unwrap().with_coins(script))
        }
        Algo::Adiana => Box::new(Adiana::new(problem, params, dual, x0, 9, ledger).unwrap().with_coins(script)),
        Algo::Ef21pDiana => {
            let beta = 1.0 / (dual.omega().unwrap() + 1.0);
            Box::new(Ef21pDiana::new(problem, 0.01, beta, dual, primal, x0, 9, ledger).unwrap())
        }
        Algo::Gd => Box::new(Gd::new(problem, 0.01, x0, ledger).unwrap()),
        Algo::Agd => Box::new(Agd::new(problem, 10.0, 0.1, x0, ledger).unwrap()),
    };
    for _ in 0..coins.len() {
        m.step(problem).unwrap();
    }
    let l = m.ledger();
    (l.w2s_per_worker().to_vec(), l.s2w(), l.total_r())
}

fn ac6_metering() -> Outcome {
    let problem = quad(40, 3, 0.1, 10.0, 606);
    let mut two_heads = vec![false; 10];
    two_heads[2] = true;
    two_heads[7] = true;
    let examples = [
        (Algo::TwoDirection, vec![false; 10], (140, 110)),
        (Algo::TwoDirection, two_heads.clone(), (140, 270)),
        (Algo::Adiana, two_heads, (140, 440)),
        (Algo::Ef21pDiana, vec![false; 10], (90, 110)),
        (Algo::Gd, vec![false; 10], (400, 400)),
        (Algo::Agd, vec![false; 10], (400, 400)),
    ];
    for (algo, coins, (w2s, s2w)) in &examples {
        let (per_worker, down, _) = metered(*algo, &problem, 5, 7, coins);
        if per_worker.iter().any(|&c| c != *w2s) || down != *s2w {
            return Err(format!("{algo}: got {per_worker:?}/{down}, expected {w2s}/{s2w}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut scripts = 0;
    for algo in Algo::ALL {
        for _ in 0..20 {
            let t = rng.random_range(0..40usize);
            let (kw, ka) = (rng.random_range(1..=40usize), rng.random_range(1..=40usize));
            let coins: Vec<bool> = (0..t).map(|_| rng.random_bool(0.4)).collect();
            let (w2s, s2w) = hand_count(algo, kw as u64, ka as u64, 40, &coins);
            let (per_worker, down, total) = metered(algo, &problem, kw, ka, &coins);
            if per_worker.iter().any(|&c| c != w2s) || down != s2w || total != 0.5 * w2s as f64 + 0.5 * s2w as f64 {
                return Err(format!(
                    "{algo}, K_ω={kw}, K_α={ka}, coins {coins:?}: got {per_worker:?}/{down}, expected {w2s}/{s2w}"
                ));
            }
            scripts += 1;
        }
    }
    Ok(format!("6 worked examples and {scripts} random scripts match hand counts exactly"))
}

// ---------------------------------------------------------------- AC7

const AC7_EPS: f64 = 1e-4;
const AC7_BUDGET: f64 = 1e5;

fn toy_config(algo: Algo, seed: u64, out: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(algo, ProblemSource::Toy, out);
    cfg.n = 10;
    cfg.kw = Some(20);
    cfg.ka = Some(20);
    cfg.grid_lo = -6;
    cfg.grid_hi = 6;
    cfg.eps = Some(AC7_EPS);
    cfg.budget_coords = Some(AC7_BUDGET);
    cfg.seed = seed;
    cfg
}

/// Fewest r-weighted coordinates to `AC7_EPS` over the grid, with its exponent.
fn best_on_grid(problem: &DistributedProblem, cfg: &ExperimentConfig) -> Option<(f64, i32)> {
    let (dual, primal) = cfg.compressors(problem.dim()).unwrap();
    let mut base = MethodSetup::new(cfg.algo, dual, primal);
    base.r = cfg.r;
    base.seed = cfg.seed;
    let exps = cfg.exponents();
    sweep(problem, &base, Some(&exps), cfg.constant, cfg.stop_rule(), thread_cap())
        .into_iter()
        .filter(|p| p.status == RunStatus::Ok)
        .filter_map(|p| Some((coords_to_eps(p.trace.as_ref()?, AC7_EPS)?, p.exponent?)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

fn show(best: Option<(f64, i32)>) -> String {
    match best {
        Some((c, e)) => format!("{c} @2^{e}"),
        None => format!("> {AC7_BUDGET}"),
    }
}

fn ac7_ordering() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let problem = build_problem(&toy_config(Algo::Agd, 0, dir.path()), Some(&dir.path().join("cache")))
        .map_err(|e| e.to_string())?;
    let agd = best_on_grid(&problem, &toy_config(Algo::Agd, 0, dir.path()));
    let cost = |b: Option<(f64, i32)>| b.map_or(f64::INFINITY, |(c, _)| c);
    let mut wins = 0;
    let (mut beat_ef, mut beat_agd) = (0, 0);
    let mut rows = Vec::new();
    for seed in 0..5 {
        let two = best_on_grid(&problem, &toy_config(Algo::TwoDirection, seed, dir.path()));
        let ef = best_on_grid(&problem, &toy_config(Algo::Ef21pDiana, seed, dir.path()));
        let (a, b) = (cost(two) < cost(ef), cost(two) < cost(agd));
        beat_ef += a as u32;
        beat_agd += b as u32;
        wins += (a && b) as u32;
        rows.push(format!("seed {seed}: 2Direction {} | EF21-P+DIANA {}", show(two), show(ef)));
    }
    check(
        wins >= 4,
        format!(
            "{wins}/5 seeds win both (need 4); beats EF21-P+DIANA {beat_ef}/5, beats AGD {beat_agd}/5; AGD {}; {}",
            show(agd),
            rows.join("; ")
        ),
    )
}

// ---------------------------------------------------------------- AC8

const AC8_C: f64 = 2.0;
const AC8_C_AGD: f64 = 4.0;

fn ac8_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tuples = 100_000;
    let (mut worst_ef, mut worst_agd) = (0.0f64, 0.0f64);
    for _ in 0..tuples {
        let d = log_uniform(&mut rng, 1.0, 1e5) as u64;
        let n = log_uniform(&mut rng, 1.0, 1e3) as u64;
        let l = log_uniform(&mut rng, 0.05, 20.0);
        let l_max = rng.random_range(l..=n as f64 * l);
        let mu = l * log_uniform(&mut rng, 1e-8, 1.0);
        let r = match rng.random_range(0..3) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random::<f64>(),
        };
        let point = |kw: u64, ka: u64| Point {
            l,
            l_max,
            mu,
            n: n as f64,
            d: d as f64,
            omega: d as f64 / kw as f64 - 1.0,
            alpha: ka as f64 / d as f64,
            k_omega: kw as f64,
            k_alpha: ka as f64,
            r,
        };
        let free = point(rng.random_range(1..=d), rng.random_range(1..=d));
        worst_ef = worst_ef.max(complexity::two_direction_realistic(&free) / complexity::ef21p_diana(&free));
        let (kw, ka) = complexity::coupled_budgets(rng.random_range(1..=d), d, r);
        let coupled = point(kw, ka);
        worst_agd = worst_agd.max(complexity::two_direction_realistic(&coupled) / complexity::agd(d as f64, l, mu));
    }
    check(
        worst_ef <= AC8_C && worst_agd <= AC8_C_AGD,
        format!(
            "{tuples} tuples; max ratio to EF21-P+DIANA {worst_ef:.4} (C = {AC8_C}), to d√(L/μ) under coupled budgets {worst_agd:.4} (C′ = {AC8_C_AGD})"
        ),
    )
}

// ----------------------------------------------------------------

type Criterion = (&'static str, &'static str, f64, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("ac1", "compressor contracts", 10.0, ac1_compressors),
        ("ac2", "schedule sequence properties", 30.0, ac2_schedule),
        ("ac3", "identity-primal 2Direction reproduces ADIANA", f64::INFINITY, ac3_adiana_equivalence),
        ("ac4", "replica consistency", f64::INFINITY, ac4_replicas),
        ("ac5", "strongly convex rate", 300.0, ac5_rate),
        ("ac6", "communication metering", f64::INFINITY, ac6_metering),
        ("ac7", "toy logistic ordering", 600.0, ac7_ordering),
        ("ac8", "complexity formula dominance", f64::INFINITY, ac8_dominance),
    ];
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        if !wanted.is_empty() && !wanted.iter().any(|w| id.contains(w.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = f();
        let secs = started.elapsed().as_secs_f64();
        let (verdict, detail) = match outcome {
            Ok(d) if secs <= limit => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; took {secs:.1} s, limit {limit} s")),
            Err(d) => ("FAIL", d),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!("{} {verdict} {name} [{secs:.1} s]: {detail}", id.to_uppercase());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
