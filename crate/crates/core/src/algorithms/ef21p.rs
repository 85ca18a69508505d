use super::{check_dual, check_primal, mean_message, worker_messages, Algo, Method, StepReport};
use crate::accounting::{CommLedger, Direction};
use crate::compressors::CompressorSpec;
use crate::linalg;
use crate::problems::DistributedProblem;
use crate::rng::{Party, Purpose, RngStream};
use crate::{Error, Result};

/// Non-accelerated bidirectional method: DIANA uplink, error-feedback downlink.
#[derive(Clone, Debug)]
pub struct Ef21pDiana {
    dual: CompressorSpec,
    primal: CompressorSpec,
    gamma: f64,
    beta: f64,
    stream: RngStream,
    t: u64,
    u: Vec<f64>,
    w: Vec<f64>,
    h: Vec<f64>,
    h_workers: Vec<Vec<f64>>,
    replicas: Vec<Vec<f64>>,
    ledger: CommLedger,
}

impl Ef21pDiana {
    /// `h_i = ∇f_i(x0)` and `w = u = x0`; the dense start is charged once.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        problem: &DistributedProblem,
        gamma: f64,
        beta: f64,
        dual: CompressorSpec,
        primal: CompressorSpec,
        x0: Vec<f64>,
        seed: u64,
        mut ledger: CommLedger,
    ) -> Result<Self> {
        let d = problem.dim();
        problem.check_dim(&x0)?;
        check_dual(&dual, d)?;
        check_primal(&primal, d)?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("step size {gamma} must be positive")));
        }
        let omega = dual.omega()?;
        if !(beta > 0.0 && beta <= 1.0 / (omega + 1.0)) {
            return Err(Error::invalid(format!("beta = {beta} must lie in (0, 1/(ω+1)]")));
        }
        let h_workers: Vec<Vec<f64>> = (0..problem.n()).map(|i| problem.worker_gradient(i, &x0)).collect();
        let h = linalg::mean_of(&h_workers);
        ledger.charge_all_workers(d as u64);
        ledger.charge(Direction::S2w, d as u64);
        Ok(Self {
            dual,
            primal,
            gamma,
            beta,
            stream: RngStream::new(seed),
            t: 0,
            u: x0.clone(),
            w: x0.clone(),
            h,
            h_workers,
            replicas: vec![x0; problem.n()],
            ledger,
        })
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn worker_w(&self, i: usize) -> &[f64] {
        &self.replicas[i]
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn h_worker(&self, i: usize) -> &[f64] {
        &self.h_workers[i]
    }
}

impl Method for Ef21pDiana {
    fn algo(&self) -> Algo {
        Algo::Ef21pDiana
    }

    fn round(&self) -> u64 {
        self.t
    }

    fn step(&mut self, problem: &DistributedProblem) -> Result<StepReport> {
        let d = problem.dim();
        let t = self.t;
        let ws: Vec<&[f64]> = self.replicas.iter().map(Vec::as_slice).collect();
        let msgs = worker_messages(problem, &ws, &self.h_workers, &self.dual, &self.stream, t, Purpose::Dual)?;
        self.ledger.charge_all_workers(self.dual.expected_density() as u64);
        for (h_i, m) in self.h_workers.iter_mut().zip(&msgs) {
            m.add_into(self.beta, h_i);
        }
        let m = mean_message(&msgs, d);
        let mut g = self.h.clone();
        linalg::axpy(1.0, &m, &mut g);
        linalg::axpy(self.beta, &m, &mut self.h);
        linalg::axpy(-self.gamma, &g, &mut self.u);

        let diff = linalg::sub(&self.u, &self.w);
        let mut rng = self.stream.draw(Party::Server, t, Purpose::Primal);
        let p_msg = self.primal.compress(&diff, &mut rng)?;
        p_msg.add_into(1.0, &mut self.w);
        self.ledger.charge(Direction::S2w, self.primal.expected_density() as u64);
        for r in &mut self.replicas {
            p_msg.add_into(1.0, r);
        }
        self.t += 1;
        Ok(StepReport::default())
    }

    fn eval_point(&self) -> &[f64] {
        &self.u
    }

    fn ledger(&self) -> &CommLedger {
        &self.ledger
    }
}
