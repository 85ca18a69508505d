//! Sparsifying compressors.
//!
//! Two families are modelled:
//!
//! - unbiased `U(ω)`: `E[C(x)] = x`, `E‖C(x) − x‖² ≤ ω‖x‖²` (RandK, identity);
//! - contractive `B(α)`: `E‖C(x) − x‖² ≤ (1 − α)‖x‖²` (TopK, identity, and any
//!   unbiased compressor scaled by `1/(ω + 1)`).
//!
//! Messages are `(index, value)` lists. The ledger charges the expected
//! density `K_C` per message, independent of how many kept values happen to
//! be zero.

use rand::seq::index;
use rand::Rng;

use crate::{Error, Result};

/// A compressed vector: kept coordinates in ascending index order.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMessage {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseMessage {
    pub fn new(dim: usize, indices: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::Compressor(format!(
                "index/value length mismatch: {} vs {}",
                indices.len(),
                values.len()
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i as usize >= dim) {
            return Err(Error::Compressor(format!("index {bad} out of range for dimension {dim}")));
        }
        Ok(Self { dim, indices, values })
    }

    fn dense(x: &[f64]) -> Self {
        Self { dim: x.len(), indices: (0..x.len() as u32).collect(), values: x.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of transmitted `(index, value)` pairs.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i as usize] = v;
        }
        out
    }

    /// `out += scale * self`
    pub fn add_into(&self, scale: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i as usize] += scale * v;
        }
    }

    fn scale_values(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    /// Little-endian `(u32 index, f64 value)` pairs.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len() * 12);
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out.extend_from_slice(&i.to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(dim: usize, bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(12) {
            return Err(Error::Compressor(format!("encoded message length {} is not a multiple of 12", bytes.len())));
        }
        let (indices, values) = bytes
            .chunks_exact(12)
            .map(|c| {
                let i = u32::from_le_bytes(c[0..4].try_into().unwrap());
                let v = f64::from_le_bytes(c[4..12].try_into().unwrap());
                (i, v)
            })
            .unzip();
        Self::new(dim, indices, values)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CompressorKind {
    RandK,
    TopK,
    Identity,
    /// `1/(ω + 1) · C` for an unbiased `C`; lands in `B(1/(ω + 1))`.
    ScaledUnbiased(Box<CompressorSpec>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompressorSpec {
    kind: CompressorKind,
    k: usize,
    d: usize,
}

impl CompressorSpec {
    pub fn rand_k(d: usize, k: usize) -> Result<Self> {
        check_budget(d, k)?;
        Ok(Self { kind: CompressorKind::RandK, k, d })
    }

    pub fn top_k(d: usize, k: usize) -> Result<Self> {
        check_budget(d, k)?;
        Ok(Self { kind: CompressorKind::TopK, k, d })
    }

    pub fn identity(d: usize) -> Self {
        Self { kind: CompressorKind::Identity, k: d, d }
    }

    pub fn kind(&self) -> &CompressorKind {
        &self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Whether `E[C(x)] = x`.
    pub fn is_unbiased(&self) -> bool {
        matches!(self.kind, CompressorKind::RandK | CompressorKind::Identity)
    }

    /// Whether this compressor has a contraction parameter `α`.
    pub fn is_contractive(&self) -> bool {
        !matches!(self.kind, CompressorKind::RandK)
    }

    /// Variance parameter `ω` of an unbiased compressor.
    pub fn omega(&self) -> Result<f64> {
        match &self.kind {
            CompressorKind::RandK => Ok(self.d as f64 / self.k as f64 - 1.0),
            CompressorKind::Identity => Ok(0.0),
            CompressorKind::TopK | CompressorKind::ScaledUnbiased(_) => {
                Err(Error::Compressor(format!("{} is biased and has no variance parameter ω", self.label())))
            }
        }
    }

    /// Contraction parameter `α` of a biased compressor.
    pub fn alpha(&self) -> Result<f64> {
        match &self.kind {
            CompressorKind::TopK => Ok(self.k as f64 / self.d as f64),
            CompressorKind::Identity => Ok(1.0),
            CompressorKind::ScaledUnbiased(inner) => Ok(1.0 / (inner.omega()? + 1.0)),
            CompressorKind::RandK => {
                Err(Error::Compressor("unscaled RandK is not contractive; scale it to the biased class first".into()))
            }
        }
    }

    /// Expected density `K_C`: coordinates charged per message.
    pub fn expected_density(&self) -> usize {
        match &self.kind {
            CompressorKind::Identity => self.d,
            CompressorKind::RandK | CompressorKind::TopK => self.k,
            CompressorKind::ScaledUnbiased(inner) => inner.expected_density(),
        }
    }

    /// Wraps an unbiased spec as `1/(ω + 1) · C`.
    pub fn scale_to_biased(self) -> Result<Self> {
        let omega = self.omega()?;
        if omega == 0.0 {
            // full-budget RandK is the identity map
            return Ok(Self::identity(self.d));
        }
        let (k, d) = (self.k, self.d);
        Ok(Self { kind: CompressorKind::ScaledUnbiased(Box::new(self)), k, d })
    }

    pub fn label(&self) -> String {
        match &self.kind {
            CompressorKind::RandK => format!("rand{}", self.k),
            CompressorKind::TopK => format!("top{}", self.k),
            CompressorKind::Identity => "identity".to_string(),
            CompressorKind::ScaledUnbiased(inner) => format!("scaled-{}", inner.label()),
        }
    }

    /// Applies the compressor. Deterministic kinds ignore `rng`.
    pub fn compress<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<SparseMessage> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.len() });
        }
        Ok(match &self.kind {
            CompressorKind::Identity => SparseMessage::dense(x),
            CompressorKind::RandK => rand_k_message(x, self.k, rng),
            CompressorKind::TopK => top_k_message(x, self.k),
            CompressorKind::ScaledUnbiased(inner) => {
                let factor = 1.0 / (inner.omega()? + 1.0);
                let mut m = inner.compress(x, rng)?;
                m.scale_values(factor);
                m
            }
        })
    }
}

fn check_budget(d: usize, k: usize) -> Result<()> {
    if d == 0 || k == 0 || k > d {
        return Err(Error::Compressor(format!("coordinate budget k={k} must lie in [1, {d}]")));
    }
    if d > u32::MAX as usize {
        return Err(Error::Compressor(format!("dimension {d} exceeds u32 index range")));
    }
    Ok(())
}

fn rand_k_message<R: Rng + ?Sized>(x: &[f64], k: usize, rng: &mut R) -> SparseMessage {
    let d = x.len();
    let scale = d as f64 / k as f64;
    let mut picked: Vec<u32> = index::sample(rng, d, k).into_iter().map(|i| i as u32).collect();
    picked.sort_unstable();
    let values = picked.iter().map(|&i| scale * x[i as usize]).collect();
    SparseMessage { dim: d, indices: picked, values }
}

fn top_k_message(x: &[f64], k: usize) -> SparseMessage {
    let d = x.len();
    // Larger magnitude first, lower index on ties.
    let order = |a: &usize, b: &usize| x[*b].abs().total_cmp(&x[*a].abs()).then(a.cmp(b));
    let mut idx: Vec<usize> = (0..d).collect();
    if k < d {
        idx.select_nth_unstable_by(k - 1, order);
        idx.truncate(k);
    }
    idx.sort_unstable();
    SparseMessage {
        dim: d,
        values: idx.iter().map(|&i| x[i]).collect(),
        indices: idx.into_iter().map(|i| i as u32).collect(),
    }
}

/// RandK: keep a uniform `k`-subset (without replacement), scaled by `d/k`.
pub fn rand_k<R: Rng + ?Sized>(x: &[f64], k: usize, rng: &mut R) -> Result<Vec<f64>> {
    check_budget(x.len(), k)?;
    Ok(rand_k_message(x, k, rng).to_dense())
}

/// TopK: keep the `k` largest-magnitude entries, lowest index on ties.
pub fn top_k(x: &[f64], k: usize) -> Result<Vec<f64>> {
    check_budget(x.len(), k)?;
    Ok(top_k_message(x, k).to_dense())
}
