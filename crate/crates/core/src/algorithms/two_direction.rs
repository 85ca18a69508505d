use super::{
    check_dual, check_primal, convex_into, mean_message, prox_into, worker_messages, Algo, CoinSource, Method,
    StepReport,
};
use crate::accounting::{CommLedger, Direction};
use crate::compressors::CompressorSpec;
use crate::linalg;
use crate::problems::DistributedProblem;
use crate::rng::{Party, Purpose, RngStream};
use crate::schedule::{Schedule, ScheduleParams};
use crate::Result;

/// What each worker keeps locally between rounds.
#[derive(Clone, Debug, PartialEq)]
struct Replica {
    w: Vec<f64>,
    z: Vec<f64>,
    k: Vec<f64>,
}

/// Accelerated method with compression in both directions.
///
/// The server compresses `u − q` with an error-feedback model `w`; workers
/// track `w` from the compressed corrections alone and receive dense `z`
/// and `k` only on coin heads.
#[derive(Clone, Debug)]
pub struct TwoDirection {
    dual: CompressorSpec,
    primal: CompressorSpec,
    schedule: Schedule,
    stream: RngStream,
    coins: CoinSource,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    u: Vec<f64>,
    w: Vec<f64>,
    q: Vec<f64>,
    g: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    h: Vec<f64>,
    h_workers: Vec<Vec<f64>>,
    replicas: Vec<Replica>,
    ledger: CommLedger,
}

impl TwoDirection {
    /// Starts at `x0` with `h_i = ∇f_i(x0)`, `k = v = ∇f(x0)`, and charges the
    /// dense initial exchange.
    pub fn new(
        problem: &DistributedProblem,
        params: ScheduleParams,
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
        let schedule = Schedule::new(params)?;
        let h_workers: Vec<Vec<f64>> = (0..problem.n()).map(|i| problem.worker_gradient(i, &x0)).collect();
        let h = linalg::mean_of(&h_workers);
        ledger.charge_all_workers(d as u64);
        ledger.charge(Direction::S2w, d as u64);
        let replica = Replica { w: x0.clone(), z: x0.clone(), k: h.clone() };
        Ok(Self {
            dual,
            primal,
            schedule,
            stream: RngStream::new(seed),
            coins: CoinSource::Random,
            x: x0.clone(),
            y: x0.clone(),
            z: x0.clone(),
            u: x0.clone(),
            w: x0.clone(),
            q: x0.clone(),
            g: h.clone(),
            k: h.clone(),
            v: h.clone(),
            replicas: vec![replica; problem.n()],
            h,
            h_workers,
            ledger,
        })
    }

    pub fn with_coins(mut self, coins: CoinSource) -> Self {
        self.coins = coins;
        self
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
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

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// Gradient estimator `g` of the last round.
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn h_worker(&self, i: usize) -> &[f64] {
        &self.h_workers[i]
    }

    /// Worker `i`'s copy of `w`.
    pub fn worker_w(&self, i: usize) -> &[f64] {
        &self.replicas[i].w
    }

    pub fn worker_z(&self, i: usize) -> &[f64] {
        &self.replicas[i].z
    }

    /// `y` and `g = h + (1/n)·Σ_i C_i(∇f_i(y) − h_i)` for momentum `theta`
    /// using the compression streams of `round`, without changing state.
    pub fn sample_estimator(
        &self,
        problem: &DistributedProblem,
        theta: f64,
        round: u64,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = problem.dim();
        let mut y = vec![0.0; d];
        convex_into(theta, &self.w, &self.z, &mut y);
        let ys = vec![y.as_slice(); problem.n()];
        let msgs = worker_messages(problem, &ys, &self.h_workers, &self.dual, &self.stream, round, Purpose::DualY)?;
        let mut g = mean_message(&msgs, d);
        linalg::axpy(1.0, &self.h, &mut g);
        Ok((y, g))
    }
}

impl Method for TwoDirection {
    fn algo(&self) -> Algo {
        Algo::TwoDirection
    }

    fn round(&self) -> u64 {
        self.schedule.round()
    }

    fn step(&mut self, problem: &DistributedProblem) -> Result<StepReport> {
        let d = problem.dim();
        let n = problem.n();
        let t = self.schedule.round();
        let gamma_prev = self.schedule.gamma_big();
        let rates = self.schedule.advance()?;
        let params = *self.schedule.params();
        let (theta, mu) = (rates.theta, params.mu);
        let a = (params.lbar + gamma_prev * mu) / rates.gamma;
        let k_omega = self.dual.expected_density() as u64;

        // workers: y from local w, z; compress shifted gradients at y
        let worker_y: Vec<Vec<f64>> = self
            .replicas
            .iter()
            .map(|r| {
                let mut y = vec![0.0; d];
                convex_into(theta, &r.w, &r.z, &mut y);
                y
            })
            .collect();
        let ys: Vec<&[f64]> = worker_y.iter().map(Vec::as_slice).collect();
        let msgs_y = worker_messages(problem, &ys, &self.h_workers, &self.dual, &self.stream, t, Purpose::DualY)?;
        self.ledger.charge_all_workers(k_omega);

        // server
        convex_into(theta, &self.w, &self.z, &mut self.y);
        let mut g = mean_message(&msgs_y, d);
        linalg::axpy(1.0, &self.h, &mut g);
        self.g = g;
        let mut u_next = vec![0.0; d];
        prox_into(a, &self.u, mu, &self.y, &self.g, &mut u_next);
        prox_into(a, &self.w, mu, &self.y, &self.k, &mut self.q);
        let diff = linalg::sub(&u_next, &self.q);
        let mut rng = self.stream.draw(Party::Server, t, Purpose::Primal);
        let p_msg = self.primal.compress(&diff, &mut rng)?;
        self.w.copy_from_slice(&self.q);
        p_msg.add_into(1.0, &mut self.w);
        self.ledger.charge(Direction::S2w, self.primal.expected_density() as u64);
        self.u = u_next;
        convex_into(theta, &self.u, &self.z, &mut self.x);

        let heads = self.coins.flip(&self.stream, t, params.p);
        let k_old = std::mem::take(&mut self.k);
        if heads {
            self.k = self.v.clone();
            self.z.copy_from_slice(&self.x);
            self.ledger.charge(Direction::S2w, 2 * d as u64);
        } else {
            self.k = k_old.clone();
        }

        // workers: recompute q, w from their own copies, then take z, k on heads
        let mut q_local = vec![0.0; d];
        for (r, y) in self.replicas.iter_mut().zip(&worker_y) {
            prox_into(a, &r.w, mu, y, &r.k, &mut q_local);
            r.w.copy_from_slice(&q_local);
            p_msg.add_into(1.0, &mut r.w);
            if heads {
                r.z.copy_from_slice(&self.x);
                r.k.copy_from_slice(&self.k);
            }
        }

        let zs: Vec<&[f64]> = self.replicas.iter().map(|r| r.z.as_slice()).collect();
        let msgs_z = worker_messages(problem, &zs, &self.h_workers, &self.dual, &self.stream, t, Purpose::DualZ)?;
        let beta = params.beta;
        for (h_i, m) in self.h_workers.iter_mut().zip(&msgs_z) {
            m.add_into(beta, h_i);
        }
        self.ledger.charge_all_workers(k_omega);

        let m_z = mean_message(&msgs_z, d);
        let tau = params.tau;
        for ((v, &h), &m) in self.v.iter_mut().zip(&self.h).zip(&m_z) {
            *v = (1.0 - tau) * *v + tau * (h + m);
        }
        linalg::axpy(beta, &m_z, &mut self.h);
        debug_assert_eq!(self.replicas.len(), n);
        Ok(StepReport { coin: Some(heads) })
    }

    fn eval_point(&self) -> &[f64] {
        &self.z
    }

    fn ledger(&self) -> &CommLedger {
        &self.ledger
    }
}
