use super::{Algo, Method, StepReport};
use crate::accounting::{CommLedger, Direction};
use crate::linalg;
use crate::problems::DistributedProblem;
use crate::{Error, Result};

fn charge_dense(ledger: &mut CommLedger, d: usize) {
    ledger.charge_all_workers(d as u64);
    ledger.charge(Direction::S2w, d as u64);
}

/// Plain gradient descent, uncompressed.
#[derive(Clone, Debug)]
pub struct Gd {
    gamma: f64,
    t: u64,
    x: Vec<f64>,
    ledger: CommLedger,
}

impl Gd {
    pub fn new(problem: &DistributedProblem, gamma: f64, x0: Vec<f64>, ledger: CommLedger) -> Result<Self> {
        problem.check_dim(&x0)?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("step size {gamma} must be positive")));
        }
        Ok(Self { gamma, t: 0, x: x0, ledger })
    }
}

impl Method for Gd {
    fn algo(&self) -> Algo {
        Algo::Gd
    }

    fn round(&self) -> u64 {
        self.t
    }

    fn step(&mut self, problem: &DistributedProblem) -> Result<StepReport> {
        let g = problem.gradient(&self.x);
        linalg::axpy(-self.gamma, &g, &mut self.x);
        charge_dense(&mut self.ledger, problem.dim());
        self.t += 1;
        Ok(StepReport::default())
    }

    fn eval_point(&self) -> &[f64] {
        &self.x
    }

    fn ledger(&self) -> &CommLedger {
        &self.ledger
    }
}

/// Nesterov's accelerated gradient, uncompressed.
///
/// With `μ > 0` the momentum is the constant `(√L − √μ)/(√L + √μ)`;
/// otherwise round `t` uses `t/(t + 3)`. The step is `1/L` in both cases.
#[derive(Clone, Debug)]
pub struct Agd {
    l: f64,
    mu: f64,
    t: u64,
    x: Vec<f64>,
    y: Vec<f64>,
    ledger: CommLedger,
}

impl Agd {
    pub fn new(problem: &DistributedProblem, l: f64, mu: f64, x0: Vec<f64>, ledger: CommLedger) -> Result<Self> {
        problem.check_dim(&x0)?;
        if !(l > 0.0 && l.is_finite()) || !(mu >= 0.0) || mu > l {
            return Err(Error::invalid(format!("need L > 0 and 0 ≤ μ ≤ L, got L={l}, μ={mu}")));
        }
        Ok(Self { l, mu, t: 0, y: x0.clone(), x: x0, ledger })
    }

    fn momentum(&self) -> f64 {
        if self.mu > 0.0 {
            let (sl, sm) = (self.l.sqrt(), self.mu.sqrt());
            (sl - sm) / (sl + sm)
        } else {
            self.t as f64 / (self.t as f64 + 3.0)
        }
    }
}

impl Method for Agd {
    fn algo(&self) -> Algo {
        Algo::Agd
    }

    fn round(&self) -> u64 {
        self.t
    }

    fn step(&mut self, problem: &DistributedProblem) -> Result<StepReport> {
        let g = problem.gradient(&self.y);
        let mut x_next = vec![0.0; self.x.len()];
        linalg::lincomb_into(1.0, &self.y, -1.0 / self.l, &g, &mut x_next);
        let beta = self.momentum();
        for ((y, &xn), &xo) in self.y.iter_mut().zip(&x_next).zip(&self.x) {
            *y = xn + beta * (xn - xo);
        }
        self.x = x_next;
        charge_dense(&mut self.ledger, problem.dim());
        self.t += 1;
        Ok(StepReport::default())
    }

    fn eval_point(&self) -> &[f64] {
        &self.x
    }

    fn ledger(&self) -> &CommLedger {
        &self.ledger
    }
}
