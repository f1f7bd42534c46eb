use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gp::{max_dist, GpModel};

pub const CANDIDATES: usize = 2048;
pub const POLISH_STARTS: usize = 8;
/// Proposals closer than this to an existing row are nudged away.
pub const MIN_SEPARATION: f64 = 1e-9;

const PRIMES: [u32; 20] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71];

/// `mean - kappa * sqrt(variance)`.
pub fn lcb(mean: f64, variance: f64, kappa: f64) -> f64 {
    mean - kappa * variance.max(0.0).sqrt()
}

pub fn acquire_lcb(model: &GpModel, x: &[f64], kappa: f64) -> f64 {
    let (m, v) = model.posterior(x);
    lcb(m, v, kappa)
}

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let (mut f, mut r) = (inv, 0.0);
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Halton points with a random Cranley-Patterson rotation.
pub fn shifted_halton(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    (1..=n as u64)
        .map(|i| (0..d).map(|k| (radical_inverse(i, PRIMES[k]) + shift[k]).fract()).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub x: Vec<f64>,
    pub acquisition: f64,
}

fn polish(model: &GpModel, kappa: f64, mut x: Vec<f64>, mut f: f64) -> (Vec<f64>, f64) {
    let mut h = 0.05;
    let mut sweeps = 0;
    while h >= 1e-4 && sweeps < 200 {
        sweeps += 1;
        let mut moved = false;
        for k in 0..x.len() {
            for dir in [-1.0, 1.0] {
                let old = x[k];
                x[k] = (old + dir * h).clamp(0.0, 1.0);
                let fc = acquire_lcb(model, &x, kappa);
                if fc < f {
                    f = fc;
                    moved = true;
                } else {
                    x[k] = old;
                }
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    (x, f)
}

/// Approximate LCB minimizer over the unit cube, kept away from the
/// training rows and from every point in `avoid`.
pub fn propose_next(model: &GpModel, kappa: f64, seed: u64, avoid: &[Vec<f64>]) -> Proposal {
    let d = model.data().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cands = shifted_halton(CANDIDATES, d, &mut rng);
    let vals: Vec<f64> = cands.par_iter().map(|c| acquire_lcb(model, c, kappa)).collect();
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
    let polished: Vec<(Vec<f64>, f64)> = order[..POLISH_STARTS.min(order.len())]
        .par_iter()
        .map(|&i| polish(model, kappa, cands[i].clone(), vals[i]))
        .collect();
    let (mut x, mut f) = polished
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one candidate");
    let taken = |p: &[f64]| {
        model.data().x.iter().chain(avoid).any(|r| max_dist(r, p) <= MIN_SEPARATION)
    };
    let mut step = 1e-6;
    while taken(&x) {
        for v in x.iter_mut() {
            *v = (*v + step * (rng.gen::<f64>() * 2.0 - 1.0)).clamp(0.0, 1.0);
        }
        step *= 2.0;
        f = acquire_lcb(model, &x, kappa);
    }
    Proposal { x, acquisition: f }
}
