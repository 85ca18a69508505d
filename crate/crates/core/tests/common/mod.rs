#![allow(dead_code)]

use bidiopt::accounting::CommLedger;
use bidiopt::compressors::CompressorSpec;
use bidiopt::problems::{make_quadratic, DistributedProblem, QuadraticSpec};
use bidiopt::schedule::ScheduleParams;

pub fn quad(dim: usize, n: usize, mu: f64, l: f64, seed: u64) -> DistributedProblem {
    make_quadratic(&QuadraticSpec::random(dim, n, mu, l, seed)).unwrap()
}

/// Tuned-style schedule: `L̄ = factor·L`, realistic-looking `p, τ`.
pub fn schedule_for(
    problem: &DistributedProblem,
    dual: &CompressorSpec,
    alpha: f64,
    factor: f64,
    p: f64,
) -> ScheduleParams {
    let c = problem.constants();
    let omega = dual.omega().unwrap();
    let lbar = factor * c.l;
    ScheduleParams {
        lbar,
        mu: c.mu,
        p,
        alpha,
        tau: (p.cbrt() / (omega + 1.0).powf(2.0 / 3.0)).min(1.0),
        beta: 1.0 / (omega + 1.0),
        gamma0: bidiopt::schedule::default_gamma0(lbar, c.mu, c.l),
    }
}

pub fn ledger(problem: &DistributedProblem) -> CommLedger {
    CommLedger::new(problem.n(), 0.5)
}

pub fn start(problem: &DistributedProblem, seed: u64) -> Vec<f64> {
    (0..problem.dim()).map(|i| ((i as f64 + 1.0) * 0.7 + seed as f64).sin()).collect()
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
