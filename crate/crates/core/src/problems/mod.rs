//! Distributed objectives `f(x) = (1/n)·Σ_i f_i(x)`.

pub mod dataset;
pub mod logreg;
pub mod quadratic;
pub mod toy;

use nalgebra::DMatrix;

use crate::linalg;
use crate::parallel;
use crate::{Error, Result};

pub use dataset::{parse_libsvm, partition, Dataset, PartitionScheme, SparseRow};
pub use logreg::{logreg_grad, logreg_value, LogRegShard};
pub use quadratic::{make_quadratic, QuadraticSpec};

/// A worker's local objective.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);
    /// Upper bound on the Lipschitz constant of the gradient.
    fn smoothness(&self) -> f64;
}

/// Smoothness and strong-convexity constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    pub l: f64,
    pub l_max: f64,
    /// Upper bound on `L̂`; we use `L_max`.
    pub lhat_bound: f64,
    pub mu: f64,
}

impl Constants {
    /// `mu ≤ L ≤ L̂ ≤ L_max ≤ n·L`, with relative slack `tol`.
    pub fn is_ordered(&self, n: usize, tol: f64) -> bool {
        let le = |a: f64, b: f64| a <= b * (1.0 + tol) + tol * f64::MIN_POSITIVE;
        le(self.mu, self.l)
            && le(self.l, self.lhat_bound)
            && le(self.lhat_bound, self.l_max)
            && le(self.l_max, n as f64 * self.l)
    }
}

/// Known minimizer and optimal value.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    /// `‖∇f(x*)‖` reached by a numerical solve, if one was used.
    pub grad_norm: Option<f64>,
}

/// What the constants can be derived from.
#[derive(Clone, Debug)]
pub enum Structure {
    Quadratic {
        mean_matrix: DMatrix<f64>,
    },
    Logistic {
        l2: f64,
    },
    /// Constants supplied by the caller.
    Opaque(Constants),
}

pub struct DistributedProblem {
    workers: Vec<Box<dyn Objective>>,
    dim: usize,
    structure: Structure,
    constants: Constants,
    optimum: Option<Optimum>,
    threads: usize,
}

impl std::fmt::Debug for DistributedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DistributedProblem")
            .field("n", &self.workers.len())
            .field("dim", &self.dim)
            .field("constants", &self.constants)
            .field("optimum", &self.optimum.as_ref().map(|o| o.f_star))
            .finish()
    }
}

impl DistributedProblem {
    pub fn with_structure(workers: Vec<Box<dyn Objective>>, structure: Structure) -> Result<Self> {
        let dim = workers.first().map(|w| w.dim()).ok_or_else(|| Error::invalid("no workers"))?;
        if let Some(w) = workers.iter().find(|w| w.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: w.dim() });
        }
        let placeholder = Constants { l: 0.0, l_max: 0.0, lhat_bound: 0.0, mu: 0.0 };
        let mut p =
            Self { workers, dim, structure, constants: placeholder, optimum: None, threads: parallel::thread_cap() };
        p.constants = estimate_constants(&p);
        Ok(p)
    }

    /// Logistic regression with one shard per worker.
    pub fn logistic(shards: Vec<Dataset>, l2: f64) -> Result<Self> {
        if !(l2 >= 0.0) {
            return Err(Error::invalid("L2 weight must be non-negative"));
        }
        let workers =
            shards.into_iter().map(|s| Box::new(LogRegShard::new(s).with_l2(l2)) as Box<dyn Objective>).collect();
        Self::with_structure(workers, Structure::Logistic { l2 })
    }

    pub fn n(&self) -> usize {
        self.workers.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constants(&self) -> Constants {
        self.constants
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn optimum(&self) -> Option<&Optimum> {
        self.optimum.as_ref()
    }

    pub fn set_optimum(&mut self, opt: Optimum) {
        self.optimum = Some(opt);
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    pub fn set_threads(&mut self, threads: usize) {
        self.threads = threads.max(1);
    }

    pub fn worker(&self, i: usize) -> &dyn Objective {
        self.workers[i].as_ref()
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// Mean of `f_i(x)` in ascending worker order.
    pub fn value(&self, x: &[f64]) -> f64 {
        let vals = parallel::map_indexed(self.n(), self.threads, |i| self.workers[i].value(x));
        vals.iter().sum::<f64>() / self.n() as f64
    }

    pub fn worker_gradient_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        self.workers[i].gradient_into(x, out);
    }

    pub fn worker_gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.workers[i].gradient_into(x, &mut g);
        g
    }

    /// All `∇f_i(x_i)` for per-worker points, indexed by worker.
    pub fn worker_gradients_at(&self, points: &[&[f64]]) -> Vec<Vec<f64>> {
        parallel::map_indexed(self.n(), self.threads, |i| self.worker_gradient(i, points[i]))
    }

    /// `(1/n)·Σ_i ∇f_i(x)`, reduced in ascending worker order.
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let grads = parallel::map_indexed(self.n(), self.threads, |i| self.worker_gradient(i, x));
        out.iter_mut().for_each(|v| *v = 0.0);
        for g in &grads {
            linalg::axpy(1.0, g, out);
        }
        linalg::scale(1.0 / self.n() as f64, out);
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.gradient_into(x, &mut g);
        g
    }
}

/// Smoothness / strong-convexity constants.
///
/// Quadratics are exact (eigendecomposition of `Ā` and each `A_i`).
/// Logistic regression uses `L_i ≤ (1/(2m_i))·Σ_j ‖a_ij‖²`, `L ≤ (1/n)·Σ_i L_i`
/// and `μ` equal to the L2 weight.
pub fn estimate_constants(problem: &DistributedProblem) -> Constants {
    let per_worker: Vec<f64> = problem.workers.iter().map(|w| w.smoothness()).collect();
    let l_max = per_worker.iter().copied().fold(0.0, f64::max);
    match &problem.structure {
        Structure::Quadratic { mean_matrix } => {
            let eig = mean_matrix.clone().symmetric_eigen().eigenvalues;
            let l = eig.max().max(0.0);
            let mu = eig.min().clamp(0.0, l);
            // Eigen round-off can put L a hair above max_i L_i.
            let l_max = l_max.max(l);
            Constants { l, l_max, lhat_bound: l_max, mu }
        }
        Structure::Logistic { l2 } => {
            let l = per_worker.iter().sum::<f64>() / per_worker.len() as f64;
            Constants { l, l_max, lhat_bound: l_max, mu: *l2 }
        }
        Structure::Opaque(c) => *c,
    }
}

/// High-accuracy minimizer via accelerated gradient descent with
/// gradient-based restarts, stopping at `‖∇f‖ ≤ tol` or after `max_iters`.
pub fn reference_solve(problem: &DistributedProblem, tol: f64, max_iters: usize) -> Optimum {
    let d = problem.dim();
    let l = problem.constants().l.max(f64::MIN_POSITIVE);
    let step = 1.0 / l;
    let mut x = vec![0.0; d];
    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut g = vec![0.0; d];
    let mut k = 0usize;
    let mut best = (f64::INFINITY, x.clone());
    for _ in 0..max_iters {
        problem.gradient_into(&y, &mut g);
        let gn = linalg::norm(&g);
        if gn < best.0 {
            best = (gn, y.clone());
        }
        if gn <= tol {
            break;
        }
        x_prev.copy_from_slice(&x);
        linalg::lincomb_into(1.0, &y, -step, &g, &mut x);
        // restart momentum when it points uphill
        let uphill: f64 = g.iter().zip(x.iter().zip(&x_prev)).map(|(gi, (a, b))| gi * (a - b)).sum();
        if uphill > 0.0 {
            k = 0;
        }
        let beta = k as f64 / (k as f64 + 3.0);
        for i in 0..d {
            y[i] = x[i] + beta * (x[i] - x_prev[i]);
        }
        k += 1;
    }
    let (gn, x_star) = best;
    let f_star = problem.value(&x_star);
    Optimum { x_star, f_star, grad_norm: Some(gn) }
}
