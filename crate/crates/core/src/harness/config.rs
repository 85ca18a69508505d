use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::algorithms::{Algo, Mode, ParamRule, StopRule};
use crate::compressors::CompressorSpec;
use crate::problems::PartitionScheme;
use crate::schedule::THEORY_CONSTANT;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSource {
    /// Seeded random quadratic.
    Quadratic { dim: usize, mu: f64, l: f64, seed: u64 },
    /// The bundled 1,000-sample classification set.
    Toy,
    /// A LIBSVM text file.
    Libsvm(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeKind {
    Theory,
    Tuned,
}

/// Server compressor family when `K_α < d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrimalKind {
    TopK,
    /// RandK scaled by `1/(ω + 1)`.
    ScaledRandK,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub algo: Algo,
    pub problem: ProblemSource,
    pub partition: PartitionScheme,
    pub l2: f64,
    pub n: usize,
    /// Worker budget; `None` means uncompressed.
    pub kw: Option<usize>,
    /// Server budget; `None` means uncompressed.
    pub ka: Option<usize>,
    pub primal: PrimalKind,
    pub r: f64,
    pub mode: ModeKind,
    /// Constant in front of the theoretical `L̄`.
    pub constant: f64,
    pub rule: ParamRule,
    pub grid_lo: i32,
    pub grid_hi: i32,
    pub rounds: Option<u64>,
    pub budget_coords: Option<f64>,
    pub eps: Option<f64>,
    pub seed: u64,
    pub summed_w2s: bool,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn new(algo: Algo, problem: ProblemSource, out: impl Into<PathBuf>) -> Self {
        Self {
            algo,
            problem,
            partition: PartitionScheme::Contiguous,
            l2: 0.0,
            n: 1,
            kw: None,
            ka: None,
            primal: PrimalKind::TopK,
            r: 0.5,
            mode: ModeKind::Tuned,
            constant: THEORY_CONSTANT,
            rule: ParamRule::Realistic,
            grid_lo: 0,
            grid_hi: 0,
            rounds: None,
            budget_coords: None,
            eps: None,
            seed: 0,
            summed_w2s: false,
            out: out.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(Error::invalid(format!("r = {} must lie in [0, 1]", self.r)));
        }
        if self.grid_lo > self.grid_hi {
            return Err(Error::invalid("grid-lo must not exceed grid-hi"));
        }
        if self.grid_lo < -20 || self.grid_hi > 20 {
            return Err(Error::invalid("grid exponents must lie in [-20, 20]"));
        }
        if self.rounds == Some(0) && self.budget_coords.is_none() && self.eps.is_none() {
            return Ok(());
        }
        if self.rounds.is_none() && self.budget_coords.is_none() && self.eps.is_none() {
            return Err(Error::invalid("one of rounds, budget-coords or eps is required"));
        }
        if self.budget_coords.is_some_and(|b| !(b > 0.0)) || self.eps.is_some_and(|e| !(e > 0.0)) {
            return Err(Error::invalid("budgets must be positive"));
        }
        if !(self.l2 >= 0.0) || !(self.constant > 0.0) {
            return Err(Error::invalid("l2 must be non-negative and the theory constant positive"));
        }
        Ok(())
    }

    pub fn stop_rule(&self) -> StopRule {
        StopRule { rounds: self.rounds, budget_coords: self.budget_coords, eps: self.eps }
    }

    /// Grid exponents in tuned mode; empty in theory mode.
    pub fn exponents(&self) -> Vec<i32> {
        match self.mode {
            ModeKind::Tuned => (self.grid_lo..=self.grid_hi).collect(),
            ModeKind::Theory => Vec::new(),
        }
    }

    pub fn mode_for(&self, exponent: Option<i32>) -> Mode {
        match exponent {
            Some(e) => Mode::Tuned { exponent: e },
            None => Mode::Theory { constant: self.constant },
        }
    }

    /// Worker and server compressors for model dimension `d`.
    pub fn compressors(&self, d: usize) -> Result<(CompressorSpec, CompressorSpec)> {
        let dual = match self.kw {
            Some(k) if k < d => CompressorSpec::rand_k(d, k)?,
            Some(k) if k > d => return Err(Error::invalid(format!("kw = {k} exceeds d = {d}"))),
            _ => CompressorSpec::identity(d),
        };
        let primal = match (self.ka, self.primal) {
            (Some(k), _) if k > d => return Err(Error::invalid(format!("ka = {k} exceeds d = {d}"))),
            (Some(k), PrimalKind::TopK) if k < d => CompressorSpec::top_k(d, k)?,
            (Some(k), PrimalKind::ScaledRandK) if k < d => CompressorSpec::rand_k(d, k)?.scale_to_biased()?,
            _ => CompressorSpec::identity(d),
        };
        Ok((dual, primal))
    }

    fn entries(&self) -> BTreeMap<&'static str, String> {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        let mut m = BTreeMap::new();
        m.insert("algo", self.algo.to_string());
        match &self.problem {
            ProblemSource::Quadratic { dim, mu, l, seed } => {
                m.insert("problem", "quadratic".into());
                m.insert("quad_dim", dim.to_string());
                m.insert("quad_mu", mu.to_string());
                m.insert("quad_l", l.to_string());
                m.insert("quad_seed", seed.to_string());
            }
            ProblemSource::Toy => {
                m.insert("problem", "toy".into());
            }
            ProblemSource::Libsvm(p) => {
                m.insert("problem", "libsvm".into());
                m.insert("dataset", p.display().to_string());
            }
        }
        m.insert("partition", self.partition.to_string());
        m.insert("l2", self.l2.to_string());
        m.insert("n", self.n.to_string());
        m.insert("kw", opt(self.kw.map(|k| k.to_string())));
        m.insert("ka", opt(self.ka.map(|k| k.to_string())));
        m.insert(
            "primal",
            match self.primal {
                PrimalKind::TopK => "topk",
                PrimalKind::ScaledRandK => "scaled_randk",
            }
            .into(),
        );
        m.insert("r", self.r.to_string());
        m.insert(
            "mode",
            match self.mode {
                ModeKind::Theory => "theory",
                ModeKind::Tuned => "tuned",
            }
            .into(),
        );
        m.insert("constant", self.constant.to_string());
        m.insert(
            "params",
            match self.rule {
                ParamRule::Realistic => "realistic".into(),
                ParamRule::Optimistic => "optimistic".into(),
                ParamRule::Manual { p, tau } => format!("manual:{p}:{tau}"),
            },
        );
        m.insert("grid_lo", self.grid_lo.to_string());
        m.insert("grid_hi", self.grid_hi.to_string());
        m.insert("rounds", opt(self.rounds.map(|v| v.to_string())));
        m.insert("budget_coords", opt(self.budget_coords.map(|v| v.to_string())));
        m.insert("eps", opt(self.eps.map(|v| v.to_string())));
        m.insert("seed", self.seed.to_string());
        m.insert("summed_w2s", self.summed_w2s.to_string());
        m.insert("out", self.out.display().to_string());
        m
    }

    /// Canonical `key=value` lines, sorted by key.
    pub fn to_manifest_lines(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// SHA-256 of the canonical lines except `out`, hex.
    pub fn hash(&self) -> String {
        let mut entries = self.entries();
        entries.remove("out");
        let text: String = entries.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        crate::problems::dataset::hex(&Sha256::digest(text.as_bytes()))
    }

    /// Rebuilds a config from manifest text; unknown keys are ignored.
    pub fn from_manifest(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Manifest(format!("line {}: expected key=value", i + 1)))?;
            kv.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| kv.get(k).map(String::as_str).ok_or_else(|| Error::Manifest(format!("missing key '{k}'")));
        fn parse<T: FromStr>(k: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Manifest(format!("bad value '{v}' for '{k}'")))
        }
        fn opt<T: FromStr>(k: &str, v: &str) -> Result<Option<T>> {
            if v == "none" {
                Ok(None)
            } else {
                parse(k, v).map(Some)
            }
        }
        let problem = match get("problem")? {
            "quadratic" => ProblemSource::Quadratic {
                dim: parse("quad_dim", get("quad_dim")?)?,
                mu: parse("quad_mu", get("quad_mu")?)?,
                l: parse("quad_l", get("quad_l")?)?,
                seed: parse("quad_seed", get("quad_seed")?)?,
            },
            "toy" => ProblemSource::Toy,
            "libsvm" => ProblemSource::Libsvm(PathBuf::from(get("dataset")?)),
            other => return Err(Error::Manifest(format!("unknown problem '{other}'"))),
        };
        let rule = match get("params")? {
            "realistic" => ParamRule::Realistic,
            "optimistic" => ParamRule::Optimistic,
            other => {
                let mut it = other.strip_prefix("manual:").map(|s| s.split(':')).into_iter().flatten();
                match (it.next(), it.next()) {
                    (Some(p), Some(t)) => ParamRule::Manual { p: parse("params", p)?, tau: parse("params", t)? },
                    _ => return Err(Error::Manifest(format!("bad params '{other}'"))),
                }
            }
        };
        Ok(Self {
            algo: get("algo")?.parse().map_err(|e: Error| Error::Manifest(e.to_string()))?,
            problem,
            partition: get("partition")?.parse().map_err(|e: Error| Error::Manifest(e.to_string()))?,
            l2: parse("l2", get("l2")?)?,
            n: parse("n", get("n")?)?,
            kw: opt("kw", get("kw")?)?,
            ka: opt("ka", get("ka")?)?,
            primal: match get("primal")? {
                "topk" => PrimalKind::TopK,
                "scaled_randk" => PrimalKind::ScaledRandK,
                other => return Err(Error::Manifest(format!("unknown primal '{other}'"))),
            },
            r: parse("r", get("r")?)?,
            mode: match get("mode")? {
                "theory" => ModeKind::Theory,
                "tuned" => ModeKind::Tuned,
                other => return Err(Error::Manifest(format!("unknown mode '{other}'"))),
            },
            constant: parse("constant", get("constant")?)?,
            rule,
            grid_lo: parse("grid_lo", get("grid_lo")?)?,
            grid_hi: parse("grid_hi", get("grid_hi")?)?,
            rounds: opt("rounds", get("rounds")?)?,
            budget_coords: opt("budget_coords", get("budget_coords")?)?,
            eps: opt("eps", get("eps")?)?,
            seed: parse("seed", get("seed")?)?,
            summed_w2s: parse("summed_w2s", get("summed_w2s")?)?,
            out: PathBuf::from(get("out")?),
        })
    }
}
