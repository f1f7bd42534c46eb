//! Design-of-experiments plans in the unit hypercube.
//!
//! All generators draw from `ChaCha8Rng::seed_from_u64(seed)`, so a
//! `(method, n, d, seed, iters)` tuple fixes the output on every platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{DesignSpaceSpec, SamplingMethod, MAX_DIMENSION};

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("dimension {0} outside 1..={MAX_DIMENSION}")]
    DimensionLimitExceeded(usize),
    #[error("plan has {got} coordinates per point, design space has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("a plan needs at least one point")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    /// n rows of d coordinates in [0, 1).
    pub points: Vec<Vec<f64>>,
    pub method: SamplingMethod,
    pub seed: u64,
    /// Objective after the initial Latin hypercube and after every accepted
    /// swap: minimum distance for maximin, maximum |correlation| for mincorr.
    pub trace: Vec<f64>,
}

impl SamplePlan {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn d(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

/// Named parameter values in design-space order.
pub type Assignment = Vec<(String, f64)>;

fn check(n: usize, d: usize) -> Result<(), SamplingError> {
    if n == 0 {
        return Err(SamplingError::Empty);
    }
    if d == 0 || d > MAX_DIMENSION {
        return Err(SamplingError::DimensionLimitExceeded(d));
    }
    Ok(())
}

pub fn generate(
    method: SamplingMethod,
    n: usize,
    d: usize,
    seed: u64,
    iters: usize,
) -> Result<SamplePlan, SamplingError> {
    match method {
        SamplingMethod::UniformRandom => uniform_random(n, d, seed),
        SamplingMethod::LhsMaximin => lhs_maximin(n, d, seed, iters),
        SamplingMethod::LhsMincorr => lhs_mincorr(n, d, seed, iters),
    }
}

pub fn uniform_random(n: usize, d: usize, seed: u64) -> Result<SamplePlan, SamplingError> {
    check(n, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect();
    Ok(SamplePlan { points, method: SamplingMethod::UniformRandom, seed, trace: Vec::new() })
}

/// Column-wise stratum indices of a random Latin hypercube.
fn random_strata(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    (0..d)
        .map(|_| {
            let mut col: Vec<usize> = (0..n).collect();
            col.shuffle(rng);
            col
        })
        .collect()
}

fn strata_to_points(cols: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let n = cols[0].len();
    (0..n).map(|i| cols.iter().map(|c| (c[i] as f64 + 0.5) / n as f64).collect()).collect()
}

/// Swap-based improvement of a random Latin hypercube. `score` returns a
/// lexicographic key where larger is better and its first entry is traced.
fn improve_lhs<F>(
    n: usize,
    d: usize,
    seed: u64,
    iters: usize,
    method: SamplingMethod,
    sign: f64,
    score: F,
) -> Result<SamplePlan, SamplingError>
where
    F: Fn(&[Vec<f64>]) -> (f64, f64),
{
    check(n, d)?;
    if iters == 0 {
        return Err(SamplingError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = random_strata(n, d, &mut rng);
    let mut best = score(&strata_to_points(&cols));
    let mut trace = vec![sign * best.0];
    if n >= 2 {
        for _ in 0..iters {
            let c = rng.gen_range(0..d);
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            cols[c].swap(i, j);
            let s = score(&strata_to_points(&cols));
            if s.0 > best.0 || (s.0 == best.0 && s.1 > best.1) {
                best = s;
                trace.push(sign * s.0);
            } else {
                cols[c].swap(i, j);
            }
        }
    }
    Ok(SamplePlan { points: strata_to_points(&cols), method, seed, trace })
}

/// Latin hypercube that maximizes the minimum pairwise distance.
pub fn lhs_maximin(n: usize, d: usize, seed: u64, iters: usize) -> Result<SamplePlan, SamplingError> {
    improve_lhs(n, d, seed, iters, SamplingMethod::LhsMaximin, 1.0, |p| {
        let (dmin, count) = min_distance_with_count(p);
        (dmin, -(count as f64))
    })
}

/// Latin hypercube that minimizes the largest absolute column correlation.
pub fn lhs_mincorr(n: usize, d: usize, seed: u64, iters: usize) -> Result<SamplePlan, SamplingError> {
    improve_lhs(n, d, seed, iters, SamplingMethod::LhsMincorr, -1.0, |p| {
        let (max, sum_sq) = correlation_summary(p);
        (-max, -sum_sq)
    })
}

fn min_distance_with_count(points: &[Vec<f64>]) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut count = 0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d2: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best {
                best = d2;
                count = 1;
            } else if d2 == best {
                count += 1;
            }
        }
    }
    (best.sqrt(), count)
}

/// Smallest Euclidean distance between two points; infinite for n < 2.
pub fn min_distance(points: &[Vec<f64>]) -> f64 {
    min_distance_with_count(points).0
}

fn column_correlation(points: &[Vec<f64>], a: usize, b: usize) -> f64 {
    let n = points.len() as f64;
    let ma = points.iter().map(|p| p[a]).sum::<f64>() / n;
    let mb = points.iter().map(|p| p[b]).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for p in points {
        let (x, y) = (p[a] - ma, p[b] - mb);
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

fn correlation_summary(points: &[Vec<f64>]) -> (f64, f64) {
    let d = points.first().map_or(0, Vec::len);
    let (mut max, mut sum_sq) = (0.0f64, 0.0);
    for a in 0..d {
        for b in a + 1..d {
            let r = column_correlation(points, a, b);
            max = max.max(r.abs());
            sum_sq += r * r;
        }
    }
    (max, sum_sq)
}

/// Largest absolute off-diagonal Pearson correlation between columns.
pub fn max_abs_correlation(points: &[Vec<f64>]) -> f64 {
    correlation_summary(points).0
}

/// True when every column puts exactly one point in each of the n strata.
pub fn is_latin_hypercube(points: &[Vec<f64>]) -> bool {
    let n = points.len();
    let d = points.first().map_or(0, Vec::len);
    (0..d).all(|c| {
        let mut hit = vec![false; n];
        points.iter().all(|p| {
            let x = p[c];
            if !(0.0..1.0).contains(&x) {
                return false;
            }
            let k = ((x * n as f64).floor() as usize).min(n - 1);
            !std::mem::replace(&mut hit[k], true)
        })
    })
}

/// Affine map of each unit coordinate onto `[min, max]` of its parameter.
pub fn scale_to_space(plan: &SamplePlan, space: &DesignSpaceSpec) -> Result<Vec<Assignment>, SamplingError> {
    plan.points.iter().map(|p| scale_point(p, space)).collect()
}

pub fn scale_point(unit: &[f64], space: &DesignSpaceSpec) -> Result<Assignment, SamplingError> {
    if unit.len() != space.dimension() {
        return Err(SamplingError::DimensionMismatch { expected: space.dimension(), got: unit.len() });
    }
    Ok(space
        .parameters
        .iter()
        .zip(unit)
        .map(|(p, &u)| (p.name.clone(), p.min + u * (p.max - p.min)))
        .collect())
}

/// Inverse of [`scale_point`].
pub fn unit_from_physical(values: &[f64], space: &DesignSpaceSpec) -> Result<Vec<f64>, SamplingError> {
    if values.len() != space.dimension() {
        return Err(SamplingError::DimensionMismatch { expected: space.dimension(), got: values.len() });
    }
    Ok(space.parameters.iter().zip(values).map(|(p, &v)| (v - p.min) / (p.max - p.min)).collect())
}
