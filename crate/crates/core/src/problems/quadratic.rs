//! Synthetic distributed quadratics `f_i(x) = ½xᵀA_i x − b_iᵀx`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{DistributedProblem, Objective, Optimum, Structure};
use crate::rng::{Party, Purpose, RngStream};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct QuadraticWorker {
    dim: usize,
    a: Vec<f64>, // row-major
    b: Vec<f64>,
    l_max: f64,
}

impl QuadraticWorker {
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.a)
    }

    pub fn offset(&self) -> &[f64] {
        &self.b
    }
}

impl Objective for QuadraticWorker {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut quad = 0.0;
        for (row, xi) in self.a.chunks_exact(self.dim).zip(x) {
            quad += xi * crate::linalg::dot(row, x);
        }
        0.5 * quad - crate::linalg::dot(&self.b, x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, row), bi) in out.iter_mut().zip(self.a.chunks_exact(self.dim)).zip(&self.b) {
            *o = crate::linalg::dot(row, x) - bi;
        }
    }

    fn smoothness(&self) -> f64 {
        self.l_max
    }
}

/// How to build the quadratic family.
#[derive(Clone, Debug)]
pub enum QuadraticSpec {
    /// Seeded random instance with global spectrum spanning `[mu, l]`.
    Random {
        dim: usize,
        n: usize,
        mu: f64,
        l: f64,
        seed: u64,
        /// Per-worker spectrum spread; 0 gives identical workers.
        heterogeneity: f64,
    },
    /// Explicit symmetric PSD matrices and offsets.
    Explicit { a: Vec<DMatrix<f64>>, b: Vec<Vec<f64>> },
}

impl QuadraticSpec {
    pub fn random(dim: usize, n: usize, mu: f64, l: f64, seed: u64) -> Self {
        QuadraticSpec::Random { dim, n, mu, l, seed, heterogeneity: 1.0 }
    }
}

fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let e = m.clone().symmetric_eigen();
    (e.eigenvalues, e.eigenvectors)
}

fn lambda_max(m: &DMatrix<f64>) -> f64 {
    sym_eigen(m).0.max()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m = (&*m + t) * 0.5;
}

fn random_orthogonal<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix column signs so the draw is Haar-distributed
    let mut q = q;
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Builds the distributed quadratic and its exact constants.
pub fn make_quadratic(spec: &QuadraticSpec) -> Result<DistributedProblem> {
    match spec {
        QuadraticSpec::Random { dim, n, mu, l, seed, heterogeneity } => {
            random_quadratic(*dim, *n, *mu, *l, *seed, *heterogeneity)
        }
        QuadraticSpec::Explicit { a, b } => explicit_quadratic(a.clone(), b.clone(), None),
    }
}

fn random_quadratic(d: usize, n: usize, mu: f64, l: f64, seed: u64, spread: f64) -> Result<DistributedProblem> {
    if d == 0 || n == 0 {
        return Err(Error::invalid("quadratic needs d ≥ 1 and n ≥ 1"));
    }
    if !(mu >= 0.0) || !(l > 0.0) || mu > l {
        return Err(Error::invalid(format!("need 0 ≤ mu ≤ L and L > 0, got mu={mu}, L={l}")));
    }
    if !(spread >= 0.0) {
        return Err(Error::invalid("heterogeneity must be non-negative"));
    }
    let mut rng = RngStream::new(seed).draw(Party::Server, 0, Purpose::Aux(0));

    // global spectrum: geometric between mu and L when mu > 0, linear otherwise
    let spectrum: Vec<f64> = (0..d)
        .map(|k| {
            if d == 1 {
                l
            } else {
                let s = k as f64 / (d - 1) as f64;
                if mu > 0.0 {
                    mu * (l / mu).powf(s)
                } else {
                    l * s
                }
            }
        })
        .collect();
    let q = random_orthogonal(d, &mut rng);
    let sqrt_mean =
        &q * DMatrix::from_diagonal(&DVector::from_iterator(d, spectrum.iter().map(|v| v.sqrt()))) * q.transpose();

    // worker "shapes" M_i, renormalized so that mean_i M_i = I
    let shapes: Vec<DMatrix<f64>> = (0..n)
        .map(|_| {
            let r = random_orthogonal(d, &mut rng);
            let diag = DVector::from_fn(d, |_, _| (spread * (2.0 * rng.random::<f64>() - 1.0)).exp());
            &r * DMatrix::from_diagonal(&diag) * r.transpose()
        })
        .collect();
    let mean_shape = shapes.iter().fold(DMatrix::zeros(d, d), |acc, m| acc + m) / n as f64;
    let (evals, evecs) = sym_eigen(&mean_shape);
    let inv_sqrt = &evecs * DMatrix::from_diagonal(&evals.map(|v| 1.0 / v.sqrt())) * evecs.transpose();
    let a: Vec<DMatrix<f64>> = shapes
        .iter()
        .map(|m| {
            let mut ai = &sqrt_mean * (&inv_sqrt * m * &inv_sqrt) * &sqrt_mean;
            symmetrize(&mut ai);
            ai
        })
        .collect();

    // offsets: b_i = A_i x_t + ξ_i with Σ ξ_i = 0, so the mean offset is Ā x_t
    let target: DVector<f64> = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let noise: Vec<DVector<f64>> =
        (0..n).map(|_| DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))).collect();
    let noise_mean = noise.iter().fold(DVector::zeros(d), |acc, v| acc + v) / n as f64;
    let b: Vec<Vec<f64>> =
        a.iter().zip(&noise).map(|(ai, xi)| (ai * &target + xi - &noise_mean).as_slice().to_vec()).collect();
    let fallback = if mu > 0.0 { None } else { Some(target.as_slice().to_vec()) };
    explicit_quadratic(a, b, fallback)
}

fn explicit_quadratic(
    a: Vec<DMatrix<f64>>,
    b: Vec<Vec<f64>>,
    fallback_opt: Option<Vec<f64>>,
) -> Result<DistributedProblem> {
    let n = a.len();
    if n == 0 || b.len() != n {
        return Err(Error::invalid("need one matrix and one offset per worker"));
    }
    let d = a[0].nrows();
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    for (ai, bi) in a.iter().zip(&b) {
        if ai.nrows() != d || ai.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: ai.ncols() });
        }
        if bi.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: bi.len() });
        }
        let scale = ai.amax().max(1.0);
        if (ai - ai.transpose()).amax() > 1e-12 * scale {
            return Err(Error::invalid("worker matrix is not symmetric"));
        }
        if sym_eigen(ai).0.min() < -1e-10 * scale {
            return Err(Error::invalid("worker matrix is not positive semidefinite"));
        }
    }
    let mean_a = a.iter().fold(DMatrix::zeros(d, d), |acc, m| acc + m) / n as f64;
    let workers: Vec<QuadraticWorker> = a
        .iter()
        .zip(b)
        .map(|(ai, bi)| QuadraticWorker {
            dim: d,
            a: ai.transpose().as_slice().to_vec(), // column-major -> row-major
            b: bi,
            l_max: lambda_max(ai).max(0.0),
        })
        .collect();
    let mean_b = workers.iter().fold(DVector::zeros(d), |acc, w| acc + DVector::from_row_slice(&w.b)) / n as f64;
    let structure = Structure::Quadratic { mean_matrix: mean_a.clone() };
    let boxed: Vec<Box<dyn Objective>> = workers.into_iter().map(|w| Box::new(w) as Box<dyn Objective>).collect();
    let mut problem = DistributedProblem::with_structure(boxed, structure)?;

    let mu = problem.constants().mu;
    let x_star = if mu > 0.0 { mean_a.clone().cholesky().map(|c| c.solve(&mean_b).as_slice().to_vec()) } else { None };
    let x_star = x_star.or(fallback_opt).or_else(|| {
        // least-squares minimizer when Ā is singular
        mean_a.clone().svd(true, true).solve(&mean_b, 1e-12).ok().map(|v| v.as_slice().to_vec())
    });
    if let Some(x) = x_star {
        let f_star = problem.value(&x);
        problem.set_optimum(Optimum { x_star: x, f_star, grad_norm: None });
    }
    Ok(problem)
}
