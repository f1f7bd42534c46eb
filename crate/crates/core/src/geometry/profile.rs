//! Piecewise cubic Hermite radius profile with zero slope at every knot.
//!
//! Between knots the curve is `(1 - s) y_k + s y_{k+1}` with the smoothstep
//! weight `s = 3t^2 - 2t^3`. The weights are non-negative, so the curve is
//! monotone on each interval, never leaves the range of its two knots, and is
//! pointwise non-decreasing in every knot value.

#[derive(Debug, Clone)]
pub struct HermiteProfile {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl HermiteProfile {
    /// `xs` must be strictly increasing with at least two knots.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && xs.len() == ys.len());
        assert!(xs.windows(2).all(|w| w[1] > w[0]), "knots must increase");
        HermiteProfile { xs, ys }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        let k = self.xs.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
        let t = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        let s = t * t * (3.0 - 2.0 * t);
        (1.0 - s) * self.ys[k] + s * self.ys[k + 1]
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interpolates_knots() {
        let p = HermiteProfile::new(vec![0.0, 1.0, 2.0, 4.0], vec![0.0, 2.0, 1.0, 0.0]);
        for (x, y) in [(0.0, 0.0), (1.0, 2.0), (2.0, 1.0), (4.0, 0.0)] {
            assert!((p.eval(x) - y).abs() < 1e-14);
        }
        assert!((p.eval(0.5) - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn stays_within_neighbouring_knots(ys in prop::collection::vec(0.0f64..1.0, 3..9)) {
            let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
            let p = HermiteProfile::new(xs, ys.clone());
            for k in 0..ys.len() - 1 {
                let (lo, hi) = (ys[k].min(ys[k + 1]), ys[k].max(ys[k + 1]));
                for s in 0..=20 {
                    let v = p.eval(k as f64 + s as f64 / 20.0);
                    prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                }
            }
        }

        #[test]
        fn non_decreasing_in_each_knot(
            ys in prop::collection::vec(0.0f64..1.0, 3..9),
            k in 0usize..9,
            bump in 0.0f64..1.0,
            x in 0.0f64..8.0,
        ) {
            let k = k % ys.len();
            let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
            let mut raised = ys.clone();
            raised[k] += bump;
            let a = HermiteProfile::new(xs.clone(), ys).eval(x);
            let b = HermiteProfile::new(xs, raised).eval(x);
            prop_assert!(b >= a);
        }
    }
}
