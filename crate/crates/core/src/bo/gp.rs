use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BoError;

/// Rows closer than this (max-norm, unit cube) count as duplicates.
pub const DUPLICATE_TOL: f64 = 1e-12;
pub const DEFAULT_JITTER: f64 = 1e-8;
const MAX_JITTER: f64 = 1e-2;
/// Hyperparameters whose kernel matrix has a larger 1-norm condition
/// number are rejected during fitting.
pub const MAX_CONDITION: f64 = 1e10;
const FIT_STARTS: usize = 8;
const FIT_STEPS: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    /// One per dimension, or a single shared value.
    pub lengthscales: Vec<f64>,
    /// Standardized-y units.
    pub signal_variance: f64,
    /// Standardized-y units.
    pub noise_variance: f64,
}

impl GpHyper {
    pub fn lengthscale(&self, k: usize) -> f64 {
        if self.lengthscales.len() == 1 {
            self.lengthscales[0]
        } else {
            self.lengthscales[k]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperBounds {
    pub lengthscale: (f64, f64),
    pub signal_variance: (f64, f64),
}

impl Default for HyperBounds {
    fn default() -> Self {
        HyperBounds { lengthscale: (1e-3, 10.0), signal_variance: (1e-6, 1e3) }
    }
}

/// Training data in the unit cube with finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self, BoError> {
        if x.is_empty() || x.len() != y.len() {
            return Err(BoError::EmptyDataset);
        }
        let d = x[0].len();
        if x.iter().any(|r| r.len() != d) {
            return Err(BoError::RaggedInput);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(BoError::NonFiniteObjective);
        }
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                if max_dist(&x[i], &x[j]) <= DUPLICATE_TOL {
                    return Err(BoError::SingularKernel { i, j });
                }
            }
        }
        Ok(Dataset { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }
}

pub(crate) fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Squared-exponential kernel without the noise term.
pub fn rbf(h: &GpHyper, a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        let t = (a[k] - b[k]) / h.lengthscale(k);
        s += t * t;
    }
    h.signal_variance * (-0.5 * s).exp()
}

fn kernel_matrix(h: &GpHyper, x: &[Vec<f64>]) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| rbf(h, &x[i], &x[j]))
}

/// Factorizes `K + (noise + jitter) I`, adding jitter only when needed.
fn factor_matrix(k: &DMatrix<f64>, noise: f64) -> Result<(Cholesky<f64, Dyn>, f64), BoError> {
    let mut jitter = 0.0;
    loop {
        let mut m = k.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += noise + jitter;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok((c, jitter));
        }
        jitter = if jitter == 0.0 { DEFAULT_JITTER } else { jitter * 10.0 };
        if jitter > MAX_JITTER {
            return Err(BoError::NotPositiveDefinite);
        }
    }
}

/// Log marginal likelihood of standardized `y` and its gradient with respect
/// to `[log l.., log signal_variance]`.
fn lml_and_grad(h: &GpHyper, x: &[Vec<f64>], y: &DVector<f64>, max_condition: f64) -> Option<(f64, Vec<f64>)> {
    let kf = kernel_matrix(h, x);
    let (chol, jitter) = factor_matrix(&kf, h.noise_variance).ok()?;
    let n = x.len();
    let alpha = chol.solve(y);
    let log_det: f64 = chol.l_dirty().diagonal().iter().take(n).map(|v| v.ln()).sum();
    let lml = -0.5 * y.dot(&alpha) - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    if !lml.is_finite() {
        return None;
    }
    let kinv = chol.inverse();
    let norm1 = |m: &DMatrix<f64>, shift: f64| {
        m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>() + shift).fold(0.0, f64::max)
    };
    if norm1(&kf, h.noise_variance + jitter) * norm1(&kinv, 0.0) > max_condition {
        return None;
    }
    // W = alpha alpha^T - K^-1; dL/dtheta = 0.5 tr(W dK/dtheta)
    let w = &alpha * alpha.transpose() - kinv;
    let nl = h.lengthscales.len();
    let mut grad = vec![0.0; nl + 1];
    for i in 0..n {
        for j in i..n {
            let sym = if i == j { 1.0 } else { 2.0 };
            let wk = sym * w[(i, j)] * kf[(i, j)];
            grad[nl] += 0.5 * wk;
            for (k, g) in grad.iter_mut().take(nl).enumerate() {
                let t = if nl == 1 {
                    (0..x[i].len()).map(|c| (x[i][c] - x[j][c]).powi(2)).sum::<f64>()
                } else {
                    (x[i][k] - x[j][k]).powi(2)
                };
                *g += 0.5 * wk * t / h.lengthscales[k].powi(2);
            }
        }
    }
    Some((lml, grad))
}

fn to_theta(h: &GpHyper) -> Vec<f64> {
    let mut t: Vec<f64> = h.lengthscales.iter().map(|l| l.ln()).collect();
    t.push(h.signal_variance.ln());
    t
}

fn from_theta(t: &[f64], noise: f64) -> GpHyper {
    let nl = t.len() - 1;
    GpHyper {
        lengthscales: t[..nl].iter().map(|v| v.exp()).collect(),
        signal_variance: t[nl].exp(),
        noise_variance: noise,
    }
}

fn project(t: &mut [f64], b: &HyperBounds) {
    let nl = t.len() - 1;
    for v in t.iter_mut().take(nl) {
        *v = v.clamp(b.lengthscale.0.ln(), b.lengthscale.1.ln());
    }
    t[nl] = t[nl].clamp(b.signal_variance.0.ln(), b.signal_variance.1.ln());
}

/// Projected gradient ascent with backtracking, from one start.
fn ascend(
    start: Vec<f64>,
    noise: f64,
    b: &HyperBounds,
    x: &[Vec<f64>],
    y: &DVector<f64>,
    max_condition: f64,
) -> Option<(f64, Vec<f64>)> {
    let mut t = start;
    project(&mut t, b);
    let (mut f, mut g) = lml_and_grad(&from_theta(&t, noise), x, y, max_condition)?;
    let mut step = 0.5;
    for _ in 0..FIT_STEPS {
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < 1e-8 {
            break;
        }
        let mut improved = false;
        while step > 1e-10 {
            let mut cand: Vec<f64> = t.iter().zip(&g).map(|(a, d)| a + step * d / gnorm.max(1.0)).collect();
            project(&mut cand, b);
            if let Some((fc, gc)) = lml_and_grad(&from_theta(&cand, noise), x, y, max_condition) {
                if fc > f {
                    let moved = cand.iter().zip(&t).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                    t = cand;
                    f = fc;
                    g = gc;
                    step *= 2.0;
                    improved = moved > 1e-12;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Some((f, t))
}

/// Options for [`GpModel::fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub noise_variance: f64,
    pub isotropic: bool,
    pub bounds: HyperBounds,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { noise_variance: 1e-6, isotropic: false, bounds: HyperBounds::default(), seed: 0 }
    }
}

/// Trained Gaussian-process regression model.
#[derive(Debug)]
pub struct GpModel {
    data: Dataset,
    hyper: GpHyper,
    jitter: f64,
    y_mean: f64,
    y_scale: f64,
    y_std: DVector<f64>,
    l: DMatrix<f64>,
    alpha: DVector<f64>,
    clamps: AtomicUsize,
    queries: AtomicUsize,
}

impl GpModel {
    /// Fits hyperparameters by maximizing the log marginal likelihood.
    pub fn fit(data: Dataset, opts: &FitOptions) -> Result<Self, BoError> {
        let (_, _, y_std) = standardize(&data.y);
        let nl = if opts.isotropic { 1 } else { data.dim() };
        let prior = prior_hyper(nl, opts.noise_variance);
        if data.len() < 2 {
            return Self::with_hyper(data, prior);
        }
        let b = &opts.bounds;
        let mut best: Option<(f64, Vec<f64>)> = None;
        // Without a well-conditioned candidate (near-duplicate rows) fall back to any.
        for cap in [MAX_CONDITION, f64::INFINITY] {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            for s in 0..FIT_STARTS {
                let start = if s == 0 {
                    to_theta(&prior)
                } else {
                    let mut t: Vec<f64> =
                        (0..nl).map(|_| rng.gen_range(b.lengthscale.0.ln()..=b.lengthscale.1.ln())).collect();
                    t.push(rng.gen_range(b.signal_variance.0.ln()..=b.signal_variance.1.ln()));
                    t
                };
                if let Some((f, t)) = ascend(start, opts.noise_variance, b, &data.x, &y_std, cap) {
                    if best.as_ref().map_or(true, |(bf, _)| f > *bf) {
                        best = Some((f, t));
                    }
                }
            }
            if best.is_some() {
                break;
            }
        }
        let (_, theta) = best.ok_or(BoError::NotPositiveDefinite)?;
        Self::with_hyper(data, from_theta(&theta, opts.noise_variance))
    }

    /// Trains with fixed hyperparameters.
    pub fn with_hyper(data: Dataset, hyper: GpHyper) -> Result<Self, BoError> {
        let (y_mean, y_scale, y_std) = standardize(&data.y);
        let (chol, jitter) = factor_matrix(&kernel_matrix(&hyper, &data.x), hyper.noise_variance)?;
        let alpha = chol.solve(&y_std);
        Ok(GpModel {
            data,
            hyper,
            jitter,
            y_mean,
            y_scale,
            y_std,
            l: chol.l(),
            alpha,
            clamps: AtomicUsize::new(0),
            queries: AtomicUsize::new(0),
        })
    }

    pub fn hyper(&self) -> &GpHyper {
        &self.hyper
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Jitter added to the diagonal on top of the noise (0 if none was needed).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Mean and scale used to standardize observations.
    pub fn normalization(&self) -> (f64, f64) {
        (self.y_mean, self.y_scale)
    }

    /// Prior variance of the latent function in observation units.
    pub fn prior_variance(&self) -> f64 {
        self.hyper.signal_variance * self.y_scale * self.y_scale
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        lml_for(&self.hyper, &self.data, &self.y_std)
    }

    /// `||(K + s I) alpha - y|| / ||y||` on standardized data.
    pub fn residual(&self) -> f64 {
        let mut k = kernel_matrix(&self.hyper, &self.data.x);
        for i in 0..k.nrows() {
            k[(i, i)] += self.hyper.noise_variance + self.jitter;
        }
        let r = (k * &self.alpha - &self.y_std).norm();
        r / self.y_std.norm().max(f64::MIN_POSITIVE)
    }

    /// Predictive mean and latent variance at a unit-cube point.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        self.queries.fetch_add(1, Ordering::Relaxed);
        let ks = DVector::from_iterator(self.data.len(), self.data.x.iter().map(|xi| rbf(&self.hyper, x, xi)));
        let mean = ks.dot(&self.alpha);
        let v = self.l.solve_lower_triangular(&ks).expect("cholesky factor is invertible");
        let mut var = self.hyper.signal_variance - v.norm_squared();
        if var < 0.0 {
            self.clamps.fetch_add(1, Ordering::Relaxed);
            var = 0.0;
        }
        (self.y_mean + self.y_scale * mean, var * self.y_scale * self.y_scale)
    }

    /// (clamped, total) posterior variance queries so far.
    pub fn clamp_events(&self) -> (usize, usize) {
        (self.clamps.load(Ordering::Relaxed), self.queries.load(Ordering::Relaxed))
    }
}

fn standardize(y: &[f64]) -> (f64, f64, DVector<f64>) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    (mean, scale, DVector::from_iterator(y.len(), y.iter().map(|v| (v - mean) / scale)))
}

fn prior_hyper(nl: usize, noise: f64) -> GpHyper {
    GpHyper { lengthscales: vec![0.3; nl], signal_variance: 1.0, noise_variance: noise }
}

fn lml_for(h: &GpHyper, data: &Dataset, y_std: &DVector<f64>) -> f64 {
    lml_and_grad(h, &data.x, y_std, f64::INFINITY).map_or(f64::NEG_INFINITY, |(f, _)| f)
}

/// Log marginal likelihood of `data` (observations standardized as in `fit`)
/// under the given hyperparameters.
pub fn log_marginal_likelihood(h: &GpHyper, data: &Dataset) -> f64 {
    let (_, _, y_std) = standardize(&data.y);
    lml_for(h, data, &y_std)
}
