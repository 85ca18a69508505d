//! Communication metering and the `(p, τ)` selection rules.
//!
//! Everything is counted in coordinates. A message from a compressor with
//! expected density `K` is charged `K`, a dense vector is charged `d`.

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Worker `i` to server.
    W2s(usize),
    /// Server to all workers (one broadcast).
    S2w,
}

/// Per-direction coordinate counters.
#[derive(Clone, Debug, PartialEq)]
pub struct CommLedger {
    w2s: Vec<u64>,
    s2w: u64,
    r: f64,
    summed: bool,
}

impl CommLedger {
    pub fn new(n: usize, r: f64) -> Self {
        Self { w2s: vec![0; n], s2w: 0, r: r.clamp(0.0, 1.0), summed: false }
    }

    /// Measures uplink as the sum over workers instead of the per-worker maximum.
    pub fn with_summed_w2s(mut self, summed: bool) -> Self {
        self.summed = summed;
        self
    }

    pub fn n(&self) -> usize {
        self.w2s.len()
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn is_summed(&self) -> bool {
        self.summed
    }

    pub fn charge(&mut self, dir: Direction, coords: u64) {
        match dir {
            Direction::W2s(i) => self.w2s[i] += coords,
            Direction::S2w => self.s2w += coords,
        }
    }

    pub fn charge_all_workers(&mut self, coords: u64) {
        self.w2s.iter_mut().for_each(|c| *c += coords);
    }

    pub fn w2s_worker(&self, i: usize) -> u64 {
        self.w2s[i]
    }

    pub fn w2s_per_worker(&self) -> &[u64] {
        &self.w2s
    }

    /// Uplink count used in totals: max over workers, or the sum in summed mode.
    pub fn w2s(&self) -> u64 {
        if self.summed {
            self.w2s.iter().sum()
        } else {
            self.w2s.iter().copied().max().unwrap_or(0)
        }
    }

    pub fn s2w(&self) -> u64 {
        self.s2w
    }

    /// `(1 − r)·w2s + r·s2w`
    pub fn total_r(&self) -> f64 {
        (1.0 - self.r) * self.w2s() as f64 + self.r * self.s2w as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Realistic,
    Optimistic,
    Manual,
}

/// Coin probability `p` and momentum `τ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamChoice {
    pub p: f64,
    pub tau: f64,
    pub provenance: Provenance,
    pub mu_r: f64,
}

fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        1.0
    } else {
        v.clamp(f64::MIN_POSITIVE, 1.0)
    }
}

/// `μ^r = r·d / ((1 − r)K_ω + r·K_α)`, zero when `r = 0`.
pub fn mu_r(k_omega: f64, k_alpha: f64, d: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    r * d / ((1.0 - r) * k_omega + r * k_alpha)
}

fn recip(v: f64) -> f64 {
    if v == 0.0 {
        f64::INFINITY
    } else {
        1.0 / v
    }
}

/// `p = min{1/(ω+1), 1/μ^r}`, `τ = p^{1/3}/(ω+1)^{2/3}`.
pub fn select_params_realistic(omega: f64, k_omega: f64, k_alpha: f64, d: f64, r: f64) -> ParamChoice {
    let mu_r = mu_r(k_omega, k_alpha, d, r);
    let w1 = omega + 1.0;
    let p = clamp_unit((1.0 / w1).min(recip(mu_r)));
    let tau = clamp_unit(p.cbrt() / w1.powf(2.0 / 3.0));
    ParamChoice { p, tau, provenance: Provenance::Realistic, mu_r }
}

/// Choice that exploits a known ratio `L_max/L`.
#[allow(clippy::too_many_arguments)]
pub fn select_params_optimistic(
    omega: f64,
    k_omega: f64,
    k_alpha: f64,
    d: f64,
    r: f64,
    l: f64,
    l_max: f64,
    n: usize,
    alpha: f64,
) -> Result<ParamChoice> {
    let nf = n as f64;
    let slack = 1e-12;
    if !(l > 0.0) || l_max < l * (1.0 - slack) || l_max > nf * l * (1.0 + slack) {
        return Err(Error::invalid(format!("need 0 < L ≤ L_max ≤ nL, got L={l}, L_max={l_max}, n={n}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    let mu_r = mu_r(k_omega, k_alpha, d, r);
    let w1 = omega + 1.0;
    let ratio = l * nf / l_max;
    let p =
        1f64.min(recip(mu_r)).min(ratio.cbrt() / w1).min((1.0 / w1).max(ratio.sqrt() / (alpha.sqrt() * w1.powf(1.5))));
    let p = clamp_unit(p);
    let tau = 1f64.min(ratio.cbrt() * (1.0 / w1).min(p.cbrt() / w1.powf(2.0 / 3.0)));
    let tau = clamp_unit(tau);
    Ok(ParamChoice { p, tau, provenance: Provenance::Optimistic, mu_r })
}

/// Closed-form total-communication expressions (up to constants and logs).
pub mod complexity {
    use super::mu_r;

    /// Problem and compressor constants shared by the expressions.
    #[derive(Clone, Copy, Debug, PartialEq)]
    pub struct Point {
        pub l: f64,
        pub l_max: f64,
        pub mu: f64,
        pub n: f64,
        pub d: f64,
        pub omega: f64,
        pub alpha: f64,
        pub k_omega: f64,
        pub k_alpha: f64,
        pub r: f64,
    }

    impl Point {
        /// `K^r = (1 − r)K_ω + r·K_α`
        pub fn k_r(&self) -> f64 {
            (1.0 - self.r) * self.k_omega + self.r * self.k_alpha
        }

        pub fn mu_r(&self) -> f64 {
            mu_r(self.k_omega, self.k_alpha, self.d, self.r)
        }
    }

    /// Accelerated method with realistic `(p, τ)`:
    /// `K^r·max{√(L·m/(αμ)), √(L_max·ω·m/(nμ)), 1/α, ω+1, μ^r} + d`
    /// with `m = max{ω+1, μ^r}`.
    pub fn two_direction_realistic(pt: &Point) -> f64 {
        let w1 = pt.omega + 1.0;
        let mr = pt.mu_r();
        let m = w1.max(mr);
        let terms = [
            (pt.l * m / (pt.alpha * pt.mu)).sqrt(),
            (pt.l_max * pt.omega * m / (pt.n * pt.mu)).sqrt(),
            1.0 / pt.alpha,
            w1,
            mr,
        ];
        pt.k_r() * terms.into_iter().fold(0.0, f64::max) + pt.d
    }

    /// Non-accelerated bidirectional baseline:
    /// `K^r·(L/(αμ) + ω·L_max/(nμ) + ω) + d`.
    pub fn ef21p_diana(pt: &Point) -> f64 {
        pt.k_r() * (pt.l / (pt.alpha * pt.mu) + pt.omega * pt.l_max / (pt.n * pt.mu) + pt.omega) + pt.d
    }

    /// Uncompressed accelerated gradient: `d·√(L/μ)`.
    pub fn agd(d: f64, l: f64, mu: f64) -> f64 {
        d * (l / mu).sqrt()
    }

    /// RandK/TopK budgets `(K_ω, K_α)` that balance the two directions for a
    /// given `r` and base budget `K`.
    pub fn coupled_budgets(k: u64, d: u64, r: f64) -> (u64, u64) {
        if r <= 0.5 {
            let ka = if r == 0.0 { d } else { (((1.0 - r) * k as f64 / r).ceil() as u64).min(d) };
            (k, ka.max(1))
        } else {
            let kw = (((r * k as f64) / (1.0 - r)).ceil() as u64).min(d);
            (kw.max(1), k)
        }
    }
}
