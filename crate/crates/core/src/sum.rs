//! Compensated (Kahan-Babuska-Neumaier) summation.

use std::iter::Sum;
use std::ops::AddAssign;

#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
    terms: usize,
    magnitude: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let s = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - s) + x;
        } else {
            self.compensation += (x - s) + self.sum;
        }
        self.sum = s;
        self.terms += 1;
        self.magnitude += x.abs();
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    /// Sum of absolute values of the accumulated terms.
    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    /// Bound on the rounding error of [`value`](Self::value), ignoring the
    /// error already present in the terms themselves.
    pub fn error_bound(&self) -> f64 {
        let u = f64::EPSILON / 2.0;
        2.0 * u * self.value().abs() + 2.0 * (self.terms as f64) * u * u * self.magnitude
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl Sum<f64> for NeumaierSum {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn csum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().sum::<NeumaierSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(v.iter().sum::<f64>(), 0.0);
        assert_eq!(csum(v), 2.0);
    }

    #[test]
    fn many_small_terms() {
        let n = 10_000;
        let s = csum(std::iter::repeat(0.1).take(n));
        assert!((s - 1000.0).abs() < 1e-12);
    }
}
