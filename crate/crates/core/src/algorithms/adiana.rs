use super::{check_dual, convex_into, mean_message, prox_into, worker_messages, Algo, CoinSource, Method, StepReport};
use crate::accounting::{CommLedger, Direction};
use crate::compressors::CompressorSpec;
use crate::linalg;
use crate::problems::DistributedProblem;
use crate::rng::{Purpose, RngStream};
use crate::schedule::{Schedule, ScheduleParams};
use crate::Result;

/// Accelerated DIANA: compressed uplink, dense broadcast of `u` every round.
///
/// Uses the same schedule and the same stream labels as [`super::TwoDirection`].
#[derive(Clone, Debug)]
pub struct Adiana {
    dual: CompressorSpec,
    schedule: Schedule,
    stream: RngStream,
    coins: CoinSource,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    u: Vec<f64>,
    h: Vec<f64>,
    h_workers: Vec<Vec<f64>>,
    ledger: CommLedger,
}

impl Adiana {
    pub fn new(
        problem: &DistributedProblem,
        params: ScheduleParams,
        dual: CompressorSpec,
        x0: Vec<f64>,
        seed: u64,
        mut ledger: CommLedger,
    ) -> Result<Self> {
        let d = problem.dim();
        problem.check_dim(&x0)?;
        check_dual(&dual, d)?;
        let schedule = Schedule::new(params)?;
        let h_workers: Vec<Vec<f64>> = (0..problem.n()).map(|i| problem.worker_gradient(i, &x0)).collect();
        let h = linalg::mean_of(&h_workers);
        ledger.charge_all_workers(d as u64);
        ledger.charge(Direction::S2w, d as u64);
        Ok(Self {
            dual,
            schedule,
            stream: RngStream::new(seed),
            coins: CoinSource::Random,
            x: x0.clone(),
            y: x0.clone(),
            z: x0.clone(),
            u: x0,
            h,
            h_workers,
            ledger,
        })
    }

    pub fn with_coins(mut self, coins: CoinSource) -> Self {
        self.coins = coins;
        self
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn h_worker(&self, i: usize) -> &[f64] {
        &self.h_workers[i]
    }
}

impl Method for Adiana {
    fn algo(&self) -> Algo {
        Algo::Adiana
    }

    fn round(&self) -> u64 {
        self.schedule.round()
    }

    fn step(&mut self, problem: &DistributedProblem) -> Result<StepReport> {
        let d = problem.dim();
        let t = self.schedule.round();
        let gamma_prev = self.schedule.gamma_big();
        let rates = self.schedule.advance()?;
        let params = *self.schedule.params();
        let (theta, mu) = (rates.theta, params.mu);
        let a = (params.lbar + gamma_prev * mu) / rates.gamma;
        let k_omega = self.dual.expected_density() as u64;

        convex_into(theta, &self.u, &self.z, &mut self.y);
        let ys = vec![self.y.as_slice(); problem.n()];
        let msgs_y = worker_messages(problem, &ys, &self.h_workers, &self.dual, &self.stream, t, Purpose::DualY)?;
        self.ledger.charge_all_workers(k_omega);
        let mut g = mean_message(&msgs_y, d);
        linalg::axpy(1.0, &self.h, &mut g);
        let mut u_next = vec![0.0; d];
        prox_into(a, &self.u, mu, &self.y, &g, &mut u_next);
        self.u = u_next;
        let heads = self.coins.flip(&self.stream, t, params.p);
        self.ledger.charge(Direction::S2w, d as u64);

        convex_into(theta, &self.u, &self.z, &mut self.x);
        if heads {
            self.z.copy_from_slice(&self.x);
        }
        let zs = vec![self.z.as_slice(); problem.n()];
        let msgs_z = worker_messages(problem, &zs, &self.h_workers, &self.dual, &self.stream, t, Purpose::DualZ)?;
        let beta = params.beta;
        for (h_i, m) in self.h_workers.iter_mut().zip(&msgs_z) {
            m.add_into(beta, h_i);
        }
        self.ledger.charge_all_workers(k_omega);
        let m_z = mean_message(&msgs_z, d);
        linalg::axpy(beta, &m_z, &mut self.h);
        Ok(StepReport { coin: Some(heads) })
    }

    fn eval_point(&self) -> &[f64] {
        &self.z
    }

    fn ledger(&self) -> &CommLedger {
        &self.ledger
    }
}
