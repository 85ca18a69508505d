use super::{Adiana, Agd, Algo, Ef21pDiana, Gd, Method, TwoDirection};
use crate::accounting::{select_params_optimistic, select_params_realistic, CommLedger, ParamChoice, Provenance};
use crate::compressors::CompressorSpec;
use crate::problems::DistributedProblem;
use crate::schedule::{default_gamma0, lbar_with_constant, ScheduleParams, TheoryInputs};
use crate::{Error, Result};

/// How step sizes are chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    /// Theoretical `L̄` with the given constant; `1/L` steps for the baselines.
    Theory { constant: f64 },
    /// Grid point `2^i`: `L̄ = 2^i·L` for the accelerated compressed methods,
    /// step `2^i/L` for the others.
    Tuned { exponent: i32 },
}

/// How `(p, τ)` are chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamRule {
    Realistic,
    Optimistic,
    Manual { p: f64, tau: f64 },
}

#[derive(Clone, Debug)]
pub struct MethodSetup {
    pub algo: Algo,
    pub dual: CompressorSpec,
    pub primal: CompressorSpec,
    pub mode: Mode,
    pub rule: ParamRule,
    pub r: f64,
    pub summed_w2s: bool,
    pub seed: u64,
    /// Starting point; zeros when absent.
    pub x0: Option<Vec<f64>>,
    /// Overrides the default `Γ_0`.
    pub gamma0: Option<f64>,
}

impl MethodSetup {
    pub fn new(algo: Algo, dual: CompressorSpec, primal: CompressorSpec) -> Self {
        Self {
            algo,
            dual,
            primal,
            mode: Mode::Tuned { exponent: 0 },
            rule: ParamRule::Realistic,
            r: 0.5,
            summed_w2s: false,
            seed: 0,
            x0: None,
            gamma0: None,
        }
    }
}

/// A ready method and the derived parameters it uses.
pub struct Built {
    pub method: Box<dyn Method>,
    pub choice: Option<ParamChoice>,
    pub schedule: Option<ScheduleParams>,
    /// Step size of the non-accelerated baselines, or `1/L` used by AGD.
    pub step: Option<f64>,
}

fn choose(
    setup: &MethodSetup,
    problem: &DistributedProblem,
    omega: f64,
    alpha: f64,
    k_alpha: f64,
) -> Result<ParamChoice> {
    let c = problem.constants();
    let d = problem.dim() as f64;
    let k_omega = setup.dual.expected_density() as f64;
    Ok(match setup.rule {
        ParamRule::Realistic => select_params_realistic(omega, k_omega, k_alpha, d, setup.r),
        ParamRule::Optimistic => {
            select_params_optimistic(omega, k_omega, k_alpha, d, setup.r, c.l, c.l_max, problem.n(), alpha)?
        }
        ParamRule::Manual { p, tau } => {
            if !(p > 0.0 && p <= 1.0 && tau > 0.0 && tau <= 1.0) {
                return Err(Error::invalid(format!("p = {p}, tau = {tau} must lie in (0, 1]")));
            }
            ParamChoice {
                p,
                tau,
                provenance: Provenance::Manual,
                mu_r: crate::accounting::mu_r(k_omega, k_alpha, d, setup.r),
            }
        }
    })
}

fn accelerated_params(
    setup: &MethodSetup,
    problem: &DistributedProblem,
    alpha: f64,
    k_alpha: f64,
) -> Result<(ScheduleParams, ParamChoice)> {
    let c = problem.constants();
    let omega = setup.dual.omega()?;
    let choice = choose(setup, problem, omega, alpha, k_alpha)?;
    let beta = 1.0 / (omega + 1.0);
    let lbar = match setup.mode {
        Mode::Theory { constant } => lbar_with_constant(
            constant,
            &TheoryInputs { l: c.l, l_max: c.l_max, omega, alpha, tau: choice.tau, p: choice.p, beta, n: problem.n() },
        ),
        Mode::Tuned { exponent } => 2f64.powi(exponent) * c.l,
    };
    let gamma0 = setup.gamma0.unwrap_or_else(|| default_gamma0(lbar, c.mu, c.l));
    let params = ScheduleParams { lbar, mu: c.mu, p: choice.p, alpha, tau: choice.tau, beta, gamma0 };
    params.validate()?;
    Ok((params, choice))
}

fn baseline_step(mode: Mode, l: f64) -> f64 {
    match mode {
        Mode::Theory { .. } => 1.0 / l,
        Mode::Tuned { exponent } => 2f64.powi(exponent) / l,
    }
}

/// Instantiates `setup.algo` on `problem`.
pub fn build_method(setup: &MethodSetup, problem: &DistributedProblem) -> Result<Built> {
    let d = problem.dim();
    let c = problem.constants();
    let x0 = setup.x0.clone().unwrap_or_else(|| vec![0.0; d]);
    let ledger = CommLedger::new(problem.n(), setup.r).with_summed_w2s(setup.summed_w2s);
    let built = match setup.algo {
        Algo::TwoDirection => {
            let alpha = setup.primal.alpha()?;
            let k_alpha = setup.primal.expected_density() as f64;
            let (params, choice) = accelerated_params(setup, problem, alpha, k_alpha)?;
            let m =
                TwoDirection::new(problem, params, setup.dual.clone(), setup.primal.clone(), x0, setup.seed, ledger)?;
            Built { method: Box::new(m), choice: Some(choice), schedule: Some(params), step: None }
        }
        Algo::Adiana => {
            let (params, choice) = accelerated_params(setup, problem, 1.0, d as f64)?;
            let m = Adiana::new(problem, params, setup.dual.clone(), x0, setup.seed, ledger)?;
            Built { method: Box::new(m), choice: Some(choice), schedule: Some(params), step: None }
        }
        Algo::Ef21pDiana => {
            let gamma = baseline_step(setup.mode, c.l);
            let beta = 1.0 / (setup.dual.omega()? + 1.0);
            let m = Ef21pDiana::new(
                problem,
                gamma,
                beta,
                setup.dual.clone(),
                setup.primal.clone(),
                x0,
                setup.seed,
                ledger,
            )?;
            Built { method: Box::new(m), choice: None, schedule: None, step: Some(gamma) }
        }
        Algo::Gd => {
            let gamma = baseline_step(setup.mode, c.l);
            Built {
                method: Box::new(Gd::new(problem, gamma, x0, ledger)?),
                choice: None,
                schedule: None,
                step: Some(gamma),
            }
        }
        Algo::Agd => {
            let step = baseline_step(setup.mode, c.l);
            let l_eff = 1.0 / step;
            if c.mu > l_eff {
                return Err(Error::invalid(format!("step {step} exceeds 1/μ")));
            }
            let m = Agd::new(problem, l_eff, c.mu, x0, ledger)?;
            Built { method: Box::new(m), choice: None, schedule: None, step: Some(step) }
        }
    };
    Ok(built)
}

/// Closed-form `(per-worker w2s, s2w)` after `coins.len()` rounds.
///
/// `k_omega`, `k_alpha` are the expected densities of the worker and server
/// compressors; `coins[t]` is the outcome of round `t` (ignored by methods
/// without a dense coin-triggered broadcast).
pub fn expected_counts(algo: Algo, k_omega: u64, k_alpha: u64, d: u64, coins: &[bool]) -> (u64, u64) {
    let t = coins.len() as u64;
    let heads = coins.iter().filter(|&&c| c).count() as u64;
    match algo {
        Algo::TwoDirection => (2 * k_omega * t + d, k_alpha * t + d + 2 * d * heads),
        Algo::Adiana => (2 * k_omega * t + d, d * t + d),
        Algo::Ef21pDiana => (k_omega * t + d, k_alpha * t + d),
        Algo::Gd | Algo::Agd => (d * t, d * t),
    }
}
