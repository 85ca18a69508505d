use super::Algo;
use crate::{Error, Result};

pub const CSV_HEADER: &str = "round,f_gap,grad_norm,w2s_cum,s2w_cum,total_r,coin";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub round: u64,
    pub f_gap: f64,
    pub grad_norm: f64,
    pub w2s_cum: u64,
    pub s2w_cum: u64,
    pub total_r: f64,
    /// Coin outcome of the round that produced this row, if the method flips one.
    pub coin: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub algo: Algo,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn new(algo: Algo) -> Self {
        Self { algo, rows: Vec::new() }
    }

    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Coin outcomes of rounds `0..T`, tails where no coin was flipped.
    pub fn coins(&self) -> Vec<bool> {
        self.rows.iter().skip(1).map(|r| r.coin.unwrap_or(false)).collect()
    }

    /// First row with `f_gap ≤ eps`.
    pub fn first_below(&self, eps: f64) -> Option<&TraceRow> {
        self.rows.iter().find(|r| r.f_gap <= eps)
    }

    /// CSV text; floats use the shortest decimal that parses back exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let coin = match r.coin {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.round, r.f_gap, r.grad_norm, r.w2s_cum, r.s2w_cum, r.total_r, coin
            ));
        }
        out
    }

    pub fn from_csv(algo: Algo, text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == CSV_HEADER => {}
            _ => return Err(Error::Parse { line: 1, msg: "missing trace header".into() }),
        }
        let mut trace = Trace::new(algo);
        for (i, line) in lines {
            let bad = |msg: String| Error::Parse { line: i + 1, msg };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad(format!("expected 7 fields, found {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("'{s}': {e}")));
            let int = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("'{s}': {e}")));
            let coin = match f[6] {
                "1" => Some(true),
                "0" => Some(false),
                "" => None,
                other => return Err(bad(format!("bad coin '{other}'"))),
            };
            trace.push(TraceRow {
                round: int(f[0])?,
                f_gap: num(f[1])?,
                grad_norm: num(f[2])?,
                w2s_cum: int(f[3])?,
                s2w_cum: int(f[4])?,
                total_r: num(f[5])?,
                coin,
            });
        }
        Ok(trace)
    }
}
