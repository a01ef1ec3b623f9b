//! Order statistics, the empirical quantile function, and exact integration
//! of it over subintervals of (0, 1).
//!
//! The empirical quantile Q_n is the step function equal to the order
//! statistic X_{i:n} on the cell ((i-1)/n, i/n]. Its integral over any
//! (lo, hi] is therefore a finite weighted sum of order statistics and is
//! computed in closed form, never by quadrature.

use crate::error::{Error, Result};

/// An ascending-sorted loss sample. Negative values are allowed (a negative
/// loss is a gain); immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample {
    values: Vec<f64>,
}

impl SortedSample {
    /// Sort `data` ascending and wrap it. Rejects empty input and non-finite
    /// values.
    pub fn new(mut data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptySample);
        }
        for (index, &value) in data.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteValue { index, value });
            }
        }
        data.sort_by(f64::total_cmp);
        Ok(SortedSample { values: data })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// The sorted values; `values()[i]` is the order statistic X_{i+1:n}.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The order statistic X_{i:n} (1-based).
    pub fn order_statistic(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    /// Empirical quantile Q_n(p) = X_{⌈np⌉:n} for p in (0, 1].
    ///
    /// A `p` exactly on a grid point i/n belongs to the lower cell and maps
    /// to X_{i:n}.
    pub fn empirical_quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                reason: "must lie in (0, 1]",
            });
        }
        let n = self.n();
        let i = (p * n as f64).ceil() as usize;
        Ok(self.values[i.clamp(1, n) - 1])
    }

    /// Exact integral of Q_n over (lo, hi]:
    /// Σ_i X_{i:n} · |((i-1)/n, i/n] ∩ (lo, hi]|.
    ///
    /// Accumulates in ascending index order with compensated summation.
    pub fn partial_integral(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidParameter {
                name: "lo..hi",
                value: lo,
                reason: "need 0 <= lo <= hi <= 1",
            });
        }
        let n = self.n();
        let nf = n as f64;
        // cells fully below lo or above hi contribute nothing; the max/min
        // overlap below makes stray boundary cells contribute exactly 0
        let first = (lo * nf).floor() as usize;
        let last = ((hi * nf).ceil() as usize).min(n);

        let mut sum = 0.0;
        let mut comp = 0.0; // Kahan correction
        for i in first..last {
            let cell_lo = i as f64 / nf;
            let cell_hi = (i + 1) as f64 / nf;
            let width = (cell_hi.min(hi) - cell_lo.max(lo)).max(0.0);
            if width > 0.0 {
                let term = self.values[i] * width - comp;
                let next = sum + term;
                comp = (next - sum) - term;
                sum = next;
            }
        }
        Ok(sum)
    }

    /// Mean of the sample (= partial_integral over (0, 1]).
    pub fn mean(&self) -> f64 {
        let mut sum = 0.0;
        let mut comp = 0.0;
        for &v in &self.values {
            let term = v - comp;
            let next = sum + term;
            comp = (next - sum) - term;
            sum = next;
        }
        sum / self.n() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: &[f64]) -> SortedSample {
        SortedSample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn construction() {
        assert_eq!(s(&[3.0, 1.0, 2.0]).values(), &[1.0, 2.0, 3.0]);
        assert_eq!(s(&[5.0]).values(), &[5.0]);
        assert_eq!(s(&[1.0, 1.0, 2.0]).values(), &[1.0, 1.0, 2.0]);
        assert!(matches!(SortedSample::new(vec![]), Err(Error::EmptySample)));
        assert!(matches!(
            SortedSample::new(vec![1.0, f64::NAN]),
            Err(Error::NonFiniteValue { index: 1, .. })
        ));
        assert!(SortedSample::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn quantile_grid_convention() {
        let q = s(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(q.empirical_quantile(0.5).unwrap(), 2.0); // i/n maps down
        assert_eq!(q.empirical_quantile(0.51).unwrap(), 3.0);
        assert_eq!(q.empirical_quantile(1.0).unwrap(), 4.0);
        assert_eq!(q.empirical_quantile(0.25).unwrap(), 1.0);
        assert!(q.empirical_quantile(0.0).is_err());
        assert!(q.empirical_quantile(1.01).is_err());
    }

    #[test]
    fn partial_integral_hand_values() {
        let q = s(&[1.0, 3.0]);
        assert!((q.partial_integral(0.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((q.partial_integral(0.25, 1.0).unwrap() - 1.75).abs() < 1e-15);
        assert_eq!(q.partial_integral(0.3, 0.3).unwrap(), 0.0);
        assert!(q.partial_integral(0.5, 0.2).is_err());
        assert!(q.partial_integral(-0.1, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn additivity(
            data in proptest::collection::vec(-100.0f64..100.0, 1..60),
            points in proptest::collection::vec(0.0f64..=1.0, 3),
        ) {
            let q = SortedSample::new(data).unwrap();
            let mut p = points.clone();
            p.sort_by(f64::total_cmp);
            let (a, b, c) = (p[0], p[1], p[2]);
            let whole = q.partial_integral(a, c).unwrap();
            let split = q.partial_integral(a, b).unwrap() + q.partial_integral(b, c).unwrap();
            prop_assert!((whole - split).abs() <= 1e-12 * (1.0 + whole.abs()));
        }

        #[test]
        fn integral_of_whole_interval_is_mean(
            data in proptest::collection::vec(-1e6f64..1e6, 1..80),
        ) {
            let q = SortedSample::new(data).unwrap();
            let i = q.partial_integral(0.0, 1.0).unwrap();
            prop_assert!((i - q.mean()).abs() <= 1e-12 * (1.0 + q.mean().abs()));
        }

        #[test]
        fn monotone_bounds(
            data in proptest::collection::vec(0.0f64..100.0, 2..50),
            lo in 0.0f64..0.98,
            width in 0.001f64..0.5,
        ) {
            let q = SortedSample::new(data).unwrap();
            let hi = (lo + width).min(1.0);
            let integral = q.partial_integral(lo, hi).unwrap();
            // Q_n just above lo: the cell containing lo+ is ⌊lo·n⌋+1
            let n = q.n() as f64;
            let lo_cell = ((lo * n).floor() as usize).min(q.n() - 1);
            let q_lo = q.values()[lo_cell];
            let q_hi = q.empirical_quantile(hi).unwrap();
            let w = hi - lo;
            prop_assert!(integral >= w * q_lo - 1e-10 * (1.0 + q_lo.abs()));
            prop_assert!(integral <= w * q_hi + 1e-10 * (1.0 + q_hi.abs()));
        }
    }
}
