//! Optimizer state machines and the run loop.

mod adiana;
mod ef21p;
mod gd;
mod setup;
mod trace;
mod two_direction;

pub use adiana::Adiana;
pub use ef21p::Ef21pDiana;
pub use gd::{Agd, Gd};
pub use setup::{build_method, expected_counts, Built, MethodSetup, Mode, ParamRule};
pub use trace::{Trace, TraceRow, CSV_HEADER};
pub use two_direction::TwoDirection;

use crate::accounting::CommLedger;
use crate::compressors::{CompressorSpec, SparseMessage};
use crate::linalg;
use crate::parallel;
use crate::problems::DistributedProblem;
use crate::rng::{Party, Purpose, RngStream};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algo {
    TwoDirection,
    Adiana,
    Ef21pDiana,
    Gd,
    Agd,
}

impl Algo {
    pub const ALL: [Algo; 5] = [Algo::TwoDirection, Algo::Adiana, Algo::Ef21pDiana, Algo::Gd, Algo::Agd];

    pub fn name(self) -> &'static str {
        match self {
            Algo::TwoDirection => "2direction",
            Algo::Adiana => "adiana",
            Algo::Ef21pDiana => "ef21p_diana",
            Algo::Gd => "gd",
            Algo::Agd => "agd",
        }
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::invalid(format!("unknown algorithm '{s}'")))
    }
}

/// What one round reported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepReport {
    pub coin: Option<bool>,
}

pub trait Method: Send {
    fn algo(&self) -> Algo;

    /// Rounds completed.
    fn round(&self) -> u64;

    fn step(&mut self, problem: &DistributedProblem) -> Result<StepReport>;

    /// Point whose objective gap is reported.
    fn eval_point(&self) -> &[f64];

    fn ledger(&self) -> &CommLedger;
}

/// Where coin flips come from.
#[derive(Clone, Debug, PartialEq)]
pub enum CoinSource {
    /// `Bernoulli(p)` from the server stream.
    Random,
    /// Fixed outcomes by round; rounds past the end are tails.
    Scripted(Vec<bool>),
}

impl CoinSource {
    pub(crate) fn flip(&self, stream: &RngStream, round: u64, p: f64) -> bool {
        match self {
            CoinSource::Random => {
                use rand::Rng;
                stream.draw(Party::Server, round, Purpose::Coin).random::<f64>() < p
            }
            CoinSource::Scripted(script) => script.get(round as usize).copied().unwrap_or(false),
        }
    }
}

/// Compresses `∇f_i(points[i]) − shifts[i]` on every worker with its own stream.
pub(crate) fn worker_messages(
    problem: &DistributedProblem,
    points: &[&[f64]],
    shifts: &[Vec<f64>],
    spec: &CompressorSpec,
    stream: &RngStream,
    round: u64,
    purpose: Purpose,
) -> Result<Vec<SparseMessage>> {
    let msgs = parallel::map_indexed(problem.n(), problem.threads(), |i| {
        let mut diff = problem.worker_gradient(i, points[i]);
        linalg::axpy(-1.0, &shifts[i], &mut diff);
        let mut rng = stream.draw(Party::Worker(i), round, purpose);
        spec.compress(&diff, &mut rng)
    });
    msgs.into_iter().collect()
}

/// `(1/n)·Σ_i m_i`, accumulated in worker order.
pub(crate) fn mean_message(msgs: &[SparseMessage], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for m in msgs {
        m.add_into(1.0, &mut out);
    }
    linalg::scale(1.0 / msgs.len() as f64, &mut out);
    out
}

/// Closed-form `argmin_x ⟨lin, x⟩ + a/2·‖x − center‖² + μ/2·‖x − y‖²`.
pub(crate) fn prox_into(a: f64, center: &[f64], mu: f64, y: &[f64], lin: &[f64], out: &mut [f64]) {
    let denom = a + mu;
    for i in 0..out.len() {
        out[i] = (a * center[i] + mu * y[i] - lin[i]) / denom;
    }
}

/// `θ·a + (1 − θ)·b`
pub(crate) fn convex_into(theta: f64, a: &[f64], b: &[f64], out: &mut [f64]) {
    linalg::lincomb_into(theta, a, 1.0 - theta, b, out);
}

pub(crate) fn check_dual(spec: &CompressorSpec, d: usize) -> Result<()> {
    if spec.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: spec.dim() });
    }
    if !spec.is_unbiased() {
        return Err(Error::Compressor(format!("worker compressor {} must be unbiased", spec.label())));
    }
    Ok(())
}

pub(crate) fn check_primal(spec: &CompressorSpec, d: usize) -> Result<()> {
    if spec.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: spec.dim() });
    }
    if !spec.is_contractive() {
        return Err(Error::Compressor(format!("server compressor {} must be contractive", spec.label())));
    }
    Ok(())
}

/// Stopping rules, combined by OR.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StopRule {
    pub rounds: Option<u64>,
    /// Stop once the r-weighted total reaches this many coordinates.
    pub budget_coords: Option<f64>,
    /// Stop once `f − f* ≤ eps`.
    pub eps: Option<f64>,
}

impl StopRule {
    pub fn rounds(t: u64) -> Self {
        Self { rounds: Some(t), ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.rounds.is_none() && self.budget_coords.is_none() && self.eps.is_none() {
            return Err(Error::invalid("at least one stopping rule is required"));
        }
        Ok(())
    }

    fn done(&self, row: &TraceRow) -> bool {
        self.rounds.is_some_and(|t| row.round >= t)
            || self.budget_coords.is_some_and(|b| row.total_r >= b)
            || self.eps.is_some_and(|e| row.f_gap <= e)
    }
}

fn record(method: &dyn Method, problem: &DistributedProblem, f_star: f64, coin: Option<bool>) -> TraceRow {
    let x = method.eval_point();
    let ledger = method.ledger();
    TraceRow {
        round: method.round(),
        f_gap: problem.value(x) - f_star,
        grad_norm: linalg::norm(&problem.gradient(x)),
        w2s_cum: ledger.w2s(),
        s2w_cum: ledger.s2w(),
        total_r: ledger.total_r(),
        coin,
    }
}

/// Steps `method` until a stopping rule fires.
///
/// Every round appends one row; the initial point is row 0. A non-finite
/// objective aborts with the rows collected so far.
pub fn run(method: &mut dyn Method, problem: &DistributedProblem, stop: StopRule) -> Result<Trace> {
    stop.validate()?;
    let f_star =
        problem.optimum().map(|o| o.f_star).ok_or_else(|| Error::invalid("problem has no reference optimum"))?;
    let mut trace = Trace::new(method.algo());
    let mut row = record(method, problem, f_star, None);
    loop {
        let finite = row.f_gap.is_finite();
        trace.push(row);
        if !finite {
            return Err(Error::NonFiniteObjective { round: row.round, trace: Box::new(trace) });
        }
        if stop.done(&row) {
            return Ok(trace);
        }
        let report = method.step(problem)?;
        row = record(method, problem, f_star, report.coin);
    }
}
