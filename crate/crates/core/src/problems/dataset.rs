//! LIBSVM / SVMlight text datasets, partitioning and the binary cache.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// One sparse feature vector, 0-based ascending indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRow {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| v * dense[i as usize]).sum()
    }

    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i as usize] = v;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<SparseRow>,
    labels: Vec<u32>,
    num_features: usize,
    num_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<SparseRow>, labels: Vec<u32>, num_features: usize, num_classes: usize) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if features.len() != labels.len() {
            return Err(Error::invalid(format!("{} feature rows but {} labels", features.len(), labels.len())));
        }
        if num_classes < 2 {
            return Err(Error::invalid(format!("need at least 2 classes, got {num_classes}")));
        }
        if let Some(&y) = labels.iter().find(|&&y| y as usize >= num_classes) {
            return Err(Error::invalid(format!("label {y} out of range [0, {num_classes})")));
        }
        for row in &features {
            if row.indices.len() != row.values.len() {
                return Err(Error::invalid("row index/value length mismatch"));
            }
            if row.indices.iter().any(|&i| i as usize >= num_features) {
                return Err(Error::invalid(format!("feature index out of range [0, {num_features})")));
            }
        }
        Ok(Self { features, labels, num_features, num_classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &[SparseRow] {
        &self.features
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Subset by sample indices; keeps `d_feat` and `c` of the parent.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: idx.iter().map(|&j| self.features[j].clone()).collect(),
            labels: idx.iter().map(|&j| self.labels[j]).collect(),
            num_features: self.num_features,
            num_classes: self.num_classes,
        }
    }

    /// SHA-256 over the binary cache encoding, hex.
    pub fn content_hash(&self) -> String {
        let mut buf = Vec::new();
        write_cache(self, &mut buf).expect("writing to a Vec cannot fail");
        hex(&Sha256::digest(&buf))
    }

    /// Renders back to LIBSVM text with 1-based indices and 0-based labels.
    pub fn to_libsvm(&self) -> String {
        let mut out = String::new();
        for (row, y) in self.features.iter().zip(&self.labels) {
            out.push_str(&y.to_string());
            for (&i, &v) in row.indices.iter().zip(&row.values) {
                out.push_str(&format!(" {}:{}", i + 1, v));
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses `<label> <idx>:<val> ...` lines (1-based, strictly ascending
/// indices). Raw labels are remapped to `0..c` in ascending order.
pub fn parse_libsvm(text: &[u8]) -> Result<Dataset> {
    let text =
        std::str::from_utf8(text).map_err(|e| Error::Parse { line: 0, msg: format!("input is not UTF-8: {e}") })?;
    let mut raw_labels = Vec::new();
    let mut rows = Vec::new();
    let mut d_feat = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok.parse().map_err(|_| err(format!("bad label {label_tok:?}")))?;
        if !label.is_finite() {
            return Err(err(format!("non-finite label {label_tok:?}")));
        }
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut last = 0u64;
        for tok in tokens {
            let (i, v) = tok.split_once(':').ok_or_else(|| err(format!("expected <index>:<value>, got {tok:?}")))?;
            let i: u64 = i.parse().map_err(|_| err(format!("bad index {i:?}")))?;
            let v: f64 = v.parse().map_err(|_| err(format!("bad value {v:?}")))?;
            if i == 0 {
                return Err(err("indices are 1-based; found 0".into()));
            }
            if i <= last {
                return Err(err(format!("indices not ascending: {i} after {last}")));
            }
            if i > u64::from(u32::MAX) {
                return Err(err(format!("index {i} too large")));
            }
            last = i;
            d_feat = d_feat.max(i as usize);
            indices.push((i - 1) as u32);
            values.push(v);
        }
        raw_labels.push(label);
        rows.push(SparseRow { indices, values });
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let distinct: Vec<f64> = {
        let set: BTreeSet<u64> = raw_labels.iter().map(|l| order_key(*l)).collect();
        set.into_iter().map(from_order_key).collect()
    };
    let labels = raw_labels
        .iter()
        .map(|l| distinct.binary_search_by(|p| p.total_cmp(l)).expect("label present") as u32)
        .collect();
    // A single distinct label still describes a (degenerate) 2-class problem.
    let c = distinct.len().max(2);
    Dataset::new(rows, labels, d_feat, c)
}

// Monotone map f64 -> u64 so labels can live in an ordered set.
fn order_key(x: f64) -> u64 {
    let x = if x == 0.0 { 0.0 } else { x };
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn from_order_key(k: u64) -> f64 {
    let b = if k >> 63 == 1 { k & !(1 << 63) } else { !k };
    f64::from_bits(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionScheme {
    Contiguous,
    RoundRobin,
}

impl std::str::FromStr for PartitionScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contiguous" => Ok(Self::Contiguous),
            "round_robin" | "round-robin" => Ok(Self::RoundRobin),
            other => Err(Error::invalid(format!("unknown partition scheme {other:?}"))),
        }
    }
}

impl std::fmt::Display for PartitionScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Contiguous => "contiguous",
            Self::RoundRobin => "round_robin",
        })
    }
}

/// Sample indices per worker; sizes differ by at most one.
pub fn partition_indices(m: usize, n: usize, scheme: PartitionScheme) -> Result<Vec<Vec<usize>>> {
    if n == 0 {
        return Err(Error::invalid("worker count must be at least 1"));
    }
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    if n > m {
        return Err(Error::invalid(format!("{n} workers but only {m} samples")));
    }
    Ok(match scheme {
        PartitionScheme::Contiguous => {
            let (base, extra) = (m / n, m % n);
            let mut start = 0;
            (0..n)
                .map(|i| {
                    let len = base + usize::from(i < extra);
                    let shard = (start..start + len).collect();
                    start += len;
                    shard
                })
                .collect()
        }
        PartitionScheme::RoundRobin => (0..n).map(|i| (i..m).step_by(n).collect()).collect(),
    })
}

pub fn partition(dataset: &Dataset, n: usize, scheme: PartitionScheme) -> Result<Vec<Dataset>> {
    Ok(partition_indices(dataset.len(), n, scheme)?.iter().map(|idx| dataset.select(idx)).collect())
}

const CACHE_MAGIC: &[u8; 4] = b"BDOC";
const CACHE_VERSION: u16 = 1;

/// Binary cache: 16-byte header (magic, u16 version, u16 c, u32 m,
/// u32 d_feat), then per sample u32 label, u32 nnz and nnz × (u32, f64).
/// Little-endian throughout.
pub fn write_cache<W: Write>(ds: &Dataset, mut w: W) -> Result<()> {
    let c = u16::try_from(ds.num_classes).map_err(|_| Error::Cache("too many classes".into()))?;
    let m = u32::try_from(ds.len()).map_err(|_| Error::Cache("too many samples".into()))?;
    let d = u32::try_from(ds.num_features).map_err(|_| Error::Cache("too many features".into()))?;
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&c.to_le_bytes())?;
    w.write_all(&m.to_le_bytes())?;
    w.write_all(&d.to_le_bytes())?;
    for (row, &y) in ds.features.iter().zip(&ds.labels) {
        w.write_all(&y.to_le_bytes())?;
        w.write_all(&(row.indices.len() as u32).to_le_bytes())?;
        for (&i, &v) in row.indices.iter().zip(&row.values) {
            w.write_all(&i.to_le_bytes())?;
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_cache<R: Read>(mut r: R) -> Result<Dataset> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() < 16 || &buf[0..4] != CACHE_MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let u16_at = |o: usize| u16::from_le_bytes(buf[o..o + 2].try_into().unwrap());
    let version = u16_at(4);
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!("unsupported version {version}")));
    }
    let c = u16_at(6) as usize;
    let mut cur = Cursor { buf: &buf, pos: 8 };
    let m = cur.u32()? as usize;
    let d = cur.u32()? as usize;
    let mut features = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        labels.push(cur.u32()?);
        let nnz = cur.u32()? as usize;
        let mut row = SparseRow { indices: Vec::with_capacity(nnz), values: Vec::with_capacity(nnz) };
        for _ in 0..nnz {
            row.indices.push(cur.u32()?);
            row.values.push(cur.f64()?);
        }
        features.push(row);
    }
    if cur.pos != buf.len() {
        return Err(Error::Cache("trailing bytes".into()));
    }
    Dataset::new(features, labels, d, c)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        if end > self.buf.len() {
            return Err(Error::Cache("truncated".into()));
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
