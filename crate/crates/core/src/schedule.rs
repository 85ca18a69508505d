//! Learning-rate schedule of the accelerated methods.
//!
//! Each round solves `p·L̄·Γ_t·θ² + p(L̄ + Γ_t μ)θ − (L̄ + Γ_t μ) = 0` for its
//! largest root `θ̄`, clips it to `θ_min = ¼·min{1, α/p, τ/p, β/p}` and sets
//! `γ = pθΓ_t/(1 − pθ)`, `Γ_{t+1} = Γ_t + γ`.
//!
//! The [`invariants`] submodule exposes the six properties these sequences are
//! known to satisfy as standalone predicates.

use crate::{Error, Result};

/// Constant in front of the theoretical `L̄` and in the strongly convex rate.
pub const THEORY_CONSTANT: f64 = 660508.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleParams {
    pub lbar: f64,
    pub mu: f64,
    pub p: f64,
    pub alpha: f64,
    pub tau: f64,
    pub beta: f64,
    pub gamma0: f64,
}

impl ScheduleParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} = {v} must lie in (0, 1]")))
            }
        };
        if !(self.lbar > 0.0 && self.lbar.is_finite()) {
            return Err(Error::invalid(format!("L̄ = {} must be positive and finite", self.lbar)));
        }
        if !(self.mu >= 0.0) || self.mu > self.lbar {
            return Err(Error::invalid(format!("need 0 ≤ μ ≤ L̄, got μ = {}, L̄ = {}", self.mu, self.lbar)));
        }
        unit("p", self.p)?;
        unit("alpha", self.alpha)?;
        unit("tau", self.tau)?;
        unit("beta", self.beta)?;
        if !(self.gamma0 >= 1.0 && self.gamma0.is_finite()) {
            return Err(Error::invalid(format!("Γ_0 = {} must be ≥ 1", self.gamma0)));
        }
        Ok(())
    }

    pub fn theta_min(&self) -> f64 {
        theta_min(self.p, self.alpha, self.tau, self.beta)
    }
}

/// `θ_min = ¼·min{1, α/p, τ/p, β/p}`
pub fn theta_min(p: f64, alpha: f64, tau: f64, beta: f64) -> f64 {
    0.25 * 1f64.min(alpha / p).min(tau / p).min(beta / p)
}

/// One round's output.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearningRates {
    /// `Γ_{t+1}`
    pub gamma_big: f64,
    /// `γ_{t+1}`
    pub gamma: f64,
    /// `θ_{t+1}`
    pub theta: f64,
    /// Unclipped root `θ̄_{t+1}`.
    pub theta_root: f64,
}

/// Largest root of the schedule quadratic.
///
/// The equation is divided by `Γ_t` first, so coefficients stay bounded as
/// `Γ_t` grows, and the positive root is taken as `c/q` with
/// `q = −½(b + √(b² − 4ac))`, which avoids cancellation.
fn largest_root(gamma_big: f64, lbar: f64, mu: f64, p: f64) -> f64 {
    let s = lbar / gamma_big + mu;
    let a = p * lbar;
    let b = p * s;
    let c = -s;
    let disc = b * b - 4.0 * a * c;
    let q = -0.5 * (b + disc.sqrt());
    c / q
}

/// Computes `(Γ_{t+1}, γ_{t+1}, θ_{t+1})` from `Γ_t`.
pub fn calc_learning_rates(gamma_big: f64, params: &ScheduleParams) -> Result<LearningRates> {
    calc_at(gamma_big, params, 0)
}

fn calc_at(gamma_big: f64, params: &ScheduleParams, round: u64) -> Result<LearningRates> {
    if !(gamma_big > 0.0) {
        return Err(Error::invalid(format!("Γ_t = {gamma_big} must be positive")));
    }
    let theta_root = largest_root(gamma_big, params.lbar, params.mu, params.p);
    if !theta_root.is_finite() {
        return Err(Error::NonFiniteSchedule { round, what: "θ̄" });
    }
    let theta = theta_root.min(params.theta_min());
    let pt = params.p * theta;
    let gamma = pt * gamma_big / (1.0 - pt);
    let next = gamma_big + gamma;
    if !gamma.is_finite() || !next.is_finite() {
        return Err(Error::NonFiniteSchedule { round, what: "Γ" });
    }
    Ok(LearningRates { gamma_big: next, gamma, theta, theta_root })
}

/// Stateful schedule: holds `Γ_t` and the round counter.
#[derive(Clone, Debug)]
pub struct Schedule {
    params: ScheduleParams,
    t: u64,
    gamma_big: f64,
    last: Option<LearningRates>,
}

impl Schedule {
    pub fn new(params: ScheduleParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, t: 0, gamma_big: params.gamma0, last: None })
    }

    pub fn params(&self) -> &ScheduleParams {
        &self.params
    }

    /// Rounds completed so far.
    pub fn round(&self) -> u64 {
        self.t
    }

    /// `Γ_t` for the current round.
    pub fn gamma_big(&self) -> f64 {
        self.gamma_big
    }

    pub fn last(&self) -> Option<LearningRates> {
        self.last
    }

    /// Produces the rates for round `t` and moves to `t + 1`.
    pub fn advance(&mut self) -> Result<LearningRates> {
        let rates = calc_at(self.gamma_big, &self.params, self.t)?;
        self.gamma_big = rates.gamma_big;
        self.t += 1;
        self.last = Some(rates);
        Ok(rates)
    }
}

/// Inputs of the `L̄` and rate formulas.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoryInputs {
    pub l: f64,
    pub l_max: f64,
    pub omega: f64,
    pub alpha: f64,
    pub tau: f64,
    pub p: f64,
    pub beta: f64,
    pub n: usize,
}

/// `L̄` with the published constant 660508.
pub fn lbar_theory(inp: &TheoryInputs) -> f64 {
    lbar_with_constant(THEORY_CONSTANT, inp)
}

/// `c · max{L/α, Lp/(ατ), √(L·L_max)·p·√(ωτ)/(αβ√n), √(L·L_max)·√p·√(ωτ)/(α√β√n),
/// L_max·ω·p²/(β²n), L_max·ω/n}`
pub fn lbar_with_constant(c: f64, inp: &TheoryInputs) -> f64 {
    let TheoryInputs { l, l_max, omega, alpha, tau, p, beta, n } = *inp;
    let n = n as f64;
    let sll = (l * l_max).sqrt();
    let swt = (omega * tau).sqrt();
    let terms = [
        l / alpha,
        l * p / (alpha * tau),
        sll * p * swt / (alpha * beta * n.sqrt()),
        sll * p.sqrt() * swt / (alpha * beta.sqrt() * n.sqrt()),
        l_max * omega * p * p / (beta * beta * n),
        l_max * omega / n,
    ];
    c * terms.into_iter().fold(0.0, f64::max)
}

/// Rate constant `Q` of the strongly convex guarantee
/// `E[f(z^T) − f*] + μ/2·E‖u^T − x*‖² ≤ 2·exp(−T/Q)·(…)`, where `c` is the
/// constant used in `L̄`.
pub fn strongly_convex_q(c: f64, inp: &TheoryInputs, mu: f64) -> f64 {
    let TheoryInputs { l, l_max, omega, alpha, tau, p, n, .. } = *inp;
    let n = n as f64;
    let sll = (l * l_max).sqrt();
    let swt = (omega * tau).sqrt();
    let w1 = omega + 1.0;
    let terms = [
        (l / (alpha * p * mu)).sqrt(),
        (l / (alpha * tau * mu)).sqrt(),
        (sll * w1 * swt / (alpha * n.sqrt() * mu)).sqrt(),
        (sll * w1.sqrt() * swt / (alpha * p.sqrt() * n.sqrt() * mu)).sqrt(),
        (l_max * omega * w1 * w1 * p / (n * mu)).sqrt(),
        (l_max * omega / (n * p * mu)).sqrt(),
        1.0 / alpha,
        1.0 / tau,
        w1,
        1.0 / p,
    ];
    2.0 * c.sqrt() * terms.into_iter().fold(0.0, f64::max)
}

/// Default `Γ_0`: `max(1, L̄/μ)` when strongly convex, otherwise
/// `L̄/L` clamped to at least 1.
pub fn default_gamma0(lbar: f64, mu: f64, l: f64) -> f64 {
    if mu > 0.0 {
        (lbar / mu).max(1.0)
    } else if l > 0.0 {
        (lbar / l).max(1.0)
    } else {
        1.0
    }
}

/// Properties of the generated sequences, as predicates on observed values.
pub mod invariants {
    use super::{LearningRates, ScheduleParams};

    /// Item 1: `θ_{t+1}, γ_{t+1} ≥ 0` and finite.
    pub fn nonnegative(r: &LearningRates) -> bool {
        r.theta >= 0.0 && r.gamma >= 0.0 && r.theta.is_finite() && r.gamma.is_finite()
    }

    /// Item 2: `γ_{t+1} = p·θ_{t+1}·Γ_{t+1}` to relative tolerance `tol`.
    pub fn step_identity(r: &LearningRates, p: f64, tol: f64) -> bool {
        let rhs = p * r.theta * r.gamma_big;
        (r.gamma - rhs).abs() <= tol * r.gamma.abs().max(rhs.abs())
    }

    /// Item 3: `L̄·θ_{t+1}·γ_{t+1} ≤ (L̄ + Γ_t μ)(1 + tol)`.
    pub fn step_bound(r: &LearningRates, gamma_big_prev: f64, params: &ScheduleParams, tol: f64) -> bool {
        params.lbar * r.theta * r.gamma <= (params.lbar + gamma_big_prev * params.mu) * (1.0 + tol)
    }

    /// Item 4 lower bound: `(Γ_0/2)·exp(t·min{√(pμ/(4L̄)), pθ_min})`.
    pub fn exponential_bound(t: u64, params: &ScheduleParams) -> f64 {
        let rate = (params.p * params.mu / (4.0 * params.lbar)).sqrt().min(params.p * params.theta_min());
        0.5 * params.gamma0 * (t as f64 * rate).exp()
    }

    /// `t̄ = max{⌈(1/(pθ_min))·log(1/(2Γ_0pθ_min²))⌉, 0}`
    pub fn t_bar(params: &ScheduleParams) -> u64 {
        let tm = params.theta_min();
        let pt = params.p * tm;
        let v = ((1.0 / (2.0 * params.gamma0 * params.p * tm * tm)).ln() / pt).ceil();
        if v > 0.0 {
            v as u64
        } else {
            0
        }
    }

    /// Item 5 lower bound: `(Γ_0/2)·exp(tpθ_min)` before `t̄`, then
    /// `1/(4pθ_min²) + p(t − t̄)²/16`.
    pub fn piecewise_bound(t: u64, params: &ScheduleParams) -> f64 {
        let tm = params.theta_min();
        let tb = t_bar(params);
        if t < tb {
            0.5 * params.gamma0 * (t as f64 * params.p * tm).exp()
        } else {
            let dt = (t - tb) as f64;
            1.0 / (4.0 * params.p * tm * tm) + params.p * dt * dt / 16.0
        }
    }

    /// `Γ_t ≥ bound` up to relative slack `tol`.
    pub fn lower_bound_holds(gamma_big: f64, bound: f64, tol: f64) -> bool {
        gamma_big >= bound * (1.0 - tol)
    }

    /// Item 6: `θ_{t+1} ≤ θ_t` up to relative tolerance `tol`.
    pub fn nonincreasing(prev: f64, next: f64, tol: f64) -> bool {
        next <= prev * (1.0 + tol)
    }

    /// Which item failed, and where.
    #[derive(Clone, Debug, PartialEq)]
    pub struct Violation {
        pub item: u8,
        pub t: u64,
        pub detail: String,
    }

    /// Runs the schedule for `steps` rounds and checks all six items.
    pub fn verify(params: &ScheduleParams, steps: u64, tol: f64) -> Result<(), Violation> {
        let mut sched =
            super::Schedule::new(*params).map_err(|e| Violation { item: 1, t: 0, detail: e.to_string() })?;
        let fail = |item, t, detail: String| Err(Violation { item, t, detail });
        let mut prev_theta = f64::INFINITY;
        for t in 0..steps {
            let gamma_big = sched.gamma_big();
            for (item, bound) in [(4, exponential_bound(t, params)), (5, piecewise_bound(t, params))] {
                if !lower_bound_holds(gamma_big, bound, tol) {
                    return fail(item, t, format!("Γ_t = {gamma_big:e} < bound {bound:e}"));
                }
            }
            let r = match sched.advance() {
                Ok(r) => r,
                Err(e) => return fail(1, t, e.to_string()),
            };
            if !nonnegative(&r) {
                return fail(1, t, format!("{r:?}"));
            }
            if !step_identity(&r, params.p, tol) {
                return fail(2, t, format!("{r:?}"));
            }
            if !step_bound(&r, gamma_big, params, tol) {
                return fail(3, t, format!("{r:?}"));
            }
            if !nonincreasing(prev_theta, r.theta, tol) {
                return fail(6, t, format!("θ rose from {prev_theta} to {}", r.theta));
            }
            prev_theta = r.theta;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lbar: f64, mu: f64, p: f64, tm_inputs: (f64, f64, f64)) -> ScheduleParams {
        let (alpha, tau, beta) = tm_inputs;
        ScheduleParams { lbar, mu, p, alpha, tau, beta, gamma0: 1.0 }
    }

    #[test]
    fn theta_min_examples() {
        assert_eq!(theta_min(1.0, 1.0, 1.0, 1.0), 0.25);
        assert_eq!(theta_min(1.0, 0.5, 1.0, 0.5), 0.125);
        assert_eq!(theta_min(0.1, 1.0, 1.0, 1.0), 0.25);
    }

    #[test]
    fn first_step_convex() {
        // θ̄ solves θ² + θ − 1 = 0
        let r = calc_learning_rates(1.0, &params(1.0, 0.0, 1.0, (1.0, 1.0, 1.0))).unwrap();
        assert!((r.theta_root - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        assert_eq!(r.theta, 0.25);
        assert!((r.gamma - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.gamma_big - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn large_gamma_root_unclipped() {
        let r = calc_learning_rates(1e6, &params(1.0, 0.0, 1.0, (1.0, 1.0, 1.0))).unwrap();
        // 10⁶θ² + θ − 1 = 0
        let expected = (-1.0 + (1.0f64 + 4e6).sqrt()) / 2e6;
        assert!((r.theta_root - expected).abs() < 1e-15 * expected.max(1.0));
        assert!((r.theta_root - 9.995e-4).abs() < 1e-7);
        assert_eq!(r.theta, r.theta_root);
    }

    #[test]
    fn first_step_strongly_convex() {
        // θ² + 2θ − 2 = 0
        let r = calc_learning_rates(1.0, &params(1.0, 1.0, 1.0, (1.0, 1.0, 1.0))).unwrap();
        assert!((r.theta_root - (3f64.sqrt() - 1.0)).abs() < 1e-15);
        assert_eq!(r.theta, 0.25);
        assert!((r.gamma - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn root_matches_rational_reference() {
        // pL̄Γ θ² + p(L̄ + Γμ)θ − (L̄ + Γμ) with p=1/2, L̄=3, Γ=2, μ=1/4:
        // 3θ² + 1.75θ − 3.5 = 0 → θ = (−1.75 + √(1.75² + 42))/6
        let p = ScheduleParams { lbar: 3.0, mu: 0.25, p: 0.5, alpha: 1.0, tau: 1.0, beta: 1.0, gamma0: 2.0 };
        let r = calc_learning_rates(2.0, &p).unwrap();
        let expected = (-1.75 + (1.75f64 * 1.75 + 42.0).sqrt()) / 6.0;
        assert!((r.theta_root - expected).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = params(1.0, 0.0, 1.0, (1.0, 1.0, 1.0));
        p.gamma0 = 0.5;
        assert!(Schedule::new(p).is_err());
        let mut p = params(1.0, 2.0, 1.0, (1.0, 1.0, 1.0));
        assert!(Schedule::new(p).is_err());
        p.mu = 0.0;
        p.p = 0.0;
        assert!(Schedule::new(p).is_err());
        assert!(calc_learning_rates(0.0, &params(1.0, 0.0, 1.0, (1.0, 1.0, 1.0))).is_err());
    }

    #[test]
    fn lbar_examples() {
        let base = TheoryInputs { l: 2.0, l_max: 2.0, omega: 0.0, alpha: 1.0, tau: 1.0, p: 1.0, beta: 1.0, n: 3 };
        assert_eq!(lbar_theory(&base), THEORY_CONSTANT * 2.0);

        let inp = TheoryInputs { l: 1.0, l_max: 1.0, omega: 1.0, alpha: 1.0, tau: 1.0, p: 1.0, beta: 0.5, n: 1 };
        // terms: 1, 1, 2, √2, 4, 1
        assert_eq!(lbar_theory(&inp), THEORY_CONSTANT * 4.0);
    }

    #[test]
    fn lbar_monotone_in_omega() {
        let mut prev = 0.0;
        for k in 0..50 {
            let omega = k as f64 * 0.37;
            let inp = TheoryInputs { l: 1.3, l_max: 2.9, omega, alpha: 0.3, tau: 0.4, p: 0.2, beta: 0.1, n: 4 };
            let v = lbar_theory(&inp);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn schedule_short_run_obeys_invariants() {
        let p = ScheduleParams { lbar: 50.0, mu: 0.1, p: 0.2, alpha: 0.2, tau: 0.2, beta: 0.2, gamma0: 500.0 };
        invariants::verify(&p, 2000, 1e-12).unwrap();
    }

    #[test]
    fn gamma0_defaults() {
        assert_eq!(default_gamma0(10.0, 0.1, 1.0), 100.0);
        assert_eq!(default_gamma0(10.0, 0.0, 2.0), 5.0);
        assert_eq!(default_gamma0(0.5, 0.0, 2.0), 1.0);
    }
}
