//! Small synthetic classification sets.

use rand::Rng;
use rand_distr::StandardNormal;

use super::dataset::{parse_libsvm, Dataset, SparseRow};
use crate::rng::{Party, Purpose, RngStream};
use crate::Result;

/// The bundled 1,000-sample set, `toy_dataset(TOY_SEED, 1000, TOY_FEATURES, TOY_CLASSES)`.
pub const TOY_LIBSVM: &[u8] = include_bytes!("../../data/toy1000.svm");
pub const TOY_SEED: u64 = 2024;
pub const TOY_FEATURES: usize = 20;
pub const TOY_CLASSES: usize = 3;

pub fn bundled_toy() -> Result<Dataset> {
    parse_libsvm(TOY_LIBSVM)
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Overlapping Gaussian classes with unequal feature scales and about 30%
/// of entries zeroed. Values are rounded to four decimals so the LIBSVM
/// text form round-trips exactly.
pub fn toy_dataset(seed: u64, m: usize, d_feat: usize, c: usize) -> Dataset {
    let mut rng = RngStream::new(seed).draw(Party::Server, 0, Purpose::Aux(7));
    let scales: Vec<f64> = (0..d_feat).map(|j| 2f64.powf(-(j as f64) / 4.0)).collect();
    let centers: Vec<Vec<f64>> =
        (0..c).map(|_| (0..d_feat).map(|_| 0.8 * rng.sample::<f64, _>(StandardNormal)).collect()).collect();
    let mut rows = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for j in 0..m {
        let y = if j < c { j } else { rng.random_range(0..c) };
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for f in 0..d_feat {
            let noise: f64 = rng.sample(StandardNormal);
            let keep = rng.random::<f64>() >= 0.3;
            let v = round4(scales[f] * (centers[y][f] + noise));
            if keep && v != 0.0 {
                indices.push(f as u32);
                values.push(v);
            }
        }
        rows.push(SparseRow { indices, values });
        labels.push(y as u32);
    }
    // keep the widest feature present so d_feat survives a text round trip
    if let Some(r) = rows.iter_mut().find(|r| r.indices.last() != Some(&(d_feat as u32 - 1))) {
        r.indices.push(d_feat as u32 - 1);
        r.values.push(round4(scales[d_feat - 1]));
    }
    Dataset::new(rows, labels, d_feat, c).expect("generator respects dataset invariants")
}
