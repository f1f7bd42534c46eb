//! Gaussian-process surrogate with LCB acquisition and the sequential
//! Bayesian-optimization loop. Minimization throughout.

mod acquisition;
mod gp;
mod history;

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{BoSpec, DesignSpaceSpec};
use crate::sampling::{lhs_maximin, SamplingError};

pub use acquisition::{acquire_lcb, lcb, propose_next, shifted_halton, Proposal, CANDIDATES, MIN_SEPARATION, POLISH_STARTS};
pub use gp::{
    log_marginal_likelihood, rbf, Dataset, FitOptions, GpHyper, GpModel, HyperBounds, DEFAULT_JITTER, DUPLICATE_TOL,
    MAX_CONDITION,
};
pub use history::{BoHistory, BoRecord, Phase};

#[derive(Debug, Error)]
pub enum BoError {
    #[error("dataset is empty or x/y lengths differ")]
    EmptyDataset,
    #[error("input rows have different lengths")]
    RaggedInput,
    #[error("observations must be finite")]
    NonFiniteObjective,
    #[error("rows {i} and {j} coincide within tolerance; kernel matrix is singular")]
    SingularKernel { i: usize, j: usize },
    #[error("kernel matrix not positive definite even with jitter")]
    NotPositiveDefinite,
    #[error("budget {budget} must exceed initial_samples {initial}")]
    InvalidBudget { budget: usize, initial: usize },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("every model-driven evaluation failed ({} records)", .0.records.len())]
    AllEvaluationsFailed(Box<BoHistory>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoOptions {
    pub budget: usize,
    pub initial_samples: usize,
    pub kappa: f64,
    pub noise_variance: f64,
    pub isotropic: bool,
    pub seed: u64,
    /// Swap attempts for the maximin initial design.
    pub lhs_iterations: usize,
}

impl BoOptions {
    pub fn from_spec(spec: &BoSpec, seed: u64) -> Self {
        BoOptions {
            budget: spec.budget,
            initial_samples: spec.initial_samples,
            kappa: spec.kappa,
            noise_variance: spec.noise_variance,
            isotropic: spec.isotropic,
            seed,
            lhs_iterations: 1000,
        }
    }
}

fn to_physical(u: &[f64], space: &DesignSpaceSpec) -> Vec<f64> {
    space.parameters.iter().zip(u).map(|(p, &v)| p.min + v * (p.max - p.min)).collect()
}

/// Runs the initial maximin design, then fit/propose/evaluate until `budget`
/// evaluations. `evaluate` receives physical values in design-space order.
/// Failed evaluations are recorded and kept out of the model.
pub fn bo_loop<F>(space: &DesignSpaceSpec, opts: &BoOptions, mut evaluate: F) -> Result<BoHistory, BoError>
where
    F: FnMut(&[f64]) -> Result<f64, String>,
{
    if opts.budget <= opts.initial_samples || opts.initial_samples == 0 {
        return Err(BoError::InvalidBudget { budget: opts.budget, initial: opts.initial_samples });
    }
    let d = space.dimension();
    let mut history = BoHistory::new(space.names().into_iter().map(String::from).collect());
    let init = lhs_maximin(opts.initial_samples, d, opts.seed, opts.lhs_iterations)?;
    let mut failed: Vec<Vec<f64>> = Vec::new();
    let mut run = |x: Vec<f64>, phase, acq, hyper, history: &mut BoHistory, failed: &mut Vec<Vec<f64>>| {
        let params = to_physical(&x, space);
        let outcome = match evaluate(&params) {
            Ok(y) if y.is_finite() => Ok(y),
            Ok(y) => Err(format!("non-finite objective {y}")),
            Err(e) => Err(e),
        };
        if outcome.is_err() {
            failed.push(x.clone());
        }
        history.push(phase, x, params, outcome, acq, hyper);
    };
    for x in init.points {
        run(x, Phase::Initial, None, None, &mut history, &mut failed);
    }
    for it in opts.initial_samples..opts.budget {
        let seed = opts.seed.wrapping_add(it as u64);
        let (xs, ys) = history.successes();
        let model = if xs.is_empty() {
            None
        } else {
            let fit = FitOptions {
                noise_variance: opts.noise_variance,
                isotropic: opts.isotropic,
                bounds: HyperBounds::default(),
                seed,
            };
            match Dataset::new(xs, ys).and_then(|data| GpModel::fit(data, &fit)) {
                Ok(m) => Some(m),
                Err(e) => {
                    warn!("iteration {}: surrogate fit failed ({e}); sampling at random", it + 1);
                    None
                }
            }
        };
        match model {
            Some(m) => {
                let p = propose_next(&m, opts.kappa, seed, &failed);
                debug!("iteration {}: lcb {} at {:?}", it + 1, p.acquisition, p.x);
                run(p.x, Phase::Bo, Some(p.acquisition), Some(m.hyper().clone()), &mut history, &mut failed);
            }
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let x = (0..d).map(|_| rng.gen::<f64>()).collect();
                run(x, Phase::Bo, None, None, &mut history, &mut failed);
            }
        }
    }
    if history.records.iter().all(|r| r.phase == Phase::Initial || r.drag.is_none()) {
        return Err(BoError::AllEvaluationsFailed(Box::new(history)));
    }
    Ok(history)
}

/// Known argmin of [`drag_proxy`] in the unit cube.
pub const PROXY_ARGMIN: [f64; 7] = [0.62, 0.31, 0.47, 0.73, 0.28, 0.55, 0.66];
const PROXY_WEIGHTS: [f64; 7] = [2.0, 1.5, 1.0, 0.8, 0.6, 1.2, 0.4];

/// Synthetic seven-parameter drag surrogate: a coupled positive-definite
/// quadratic with minimum 1.0 at [`PROXY_ARGMIN`].
pub fn drag_proxy(x: &[f64]) -> f64 {
    let e: Vec<f64> = x.iter().zip(PROXY_ARGMIN).map(|(a, c)| a - c).collect();
    let mut f = 1.0;
    for (ei, w) in e.iter().zip(PROXY_WEIGHTS) {
        f += w * ei * ei;
    }
    f + 0.5 * e[0] * e[1] + 0.3 * e[2] * e[5]
}
