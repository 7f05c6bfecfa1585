//! Compensated floating point accumulation.

use std::iter::Sum;
use std::ops::{AddAssign, SubAssign};

/// Neumaier's improved Kahan summation.
///
/// Unlike plain Kahan summation the compensation stays correct when the
/// incoming term is larger than the running sum, which matters for sliding
/// windows where a large jump contribution enters and later leaves again.
#[derive(Debug, Default, Clone, Copy, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub const fn new() -> Self {
        Self {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl AddAssign<f64> for NeumaierSum {
    #[inline]
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl SubAssign<f64> for NeumaierSum {
    #[inline]
    fn sub_assign(&mut self, rhs: f64) {
        self.add(-rhs);
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

/// Compensated sum of an iterator of `f64`.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().sum::<NeumaierSum>().value()
}

/// Sum over a window of fixed width that slides one element at a time.
#[derive(Debug, Default, Clone)]
pub struct SlidingSum {
    acc: NeumaierSum,
}

impl SlidingSum {
    pub fn new(initial: &[f64]) -> Self {
        Self {
            acc: initial.iter().copied().sum(),
        }
    }

    #[inline]
    pub fn slide(&mut self, leaving: f64, entering: f64) {
        self.acc -= leaving;
        self.acc += entering;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.acc.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms_next_to_large_ones() {
        let values = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(values), 2.0);
        let naive: f64 = values.iter().sum();
        assert_eq!(naive, 0.0);
    }

    #[test]
    fn sliding_window_survives_large_transient() {
        let xs = [1e-9, 2e-9, 1.0, 3e-9, 4e-9, 5e-9];
        let mut window = SlidingSum::new(&xs[0..3]);
        window.slide(xs[0], xs[3]);
        window.slide(xs[1], xs[4]);
        window.slide(xs[2], xs[5]);
        let direct = 3e-9 + 4e-9 + 5e-9;
        assert!((window.value() - direct).abs() <= 1e-24);
    }
}
