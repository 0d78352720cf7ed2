//! Compensated summation.

/// Neumaier's variant of Kahan summation; stays accurate when an addend
/// is larger in magnitude than the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
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

impl Extend<f64> for KahanSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        s.extend(iter);
        s
    }
}

/// Compensated sum of an iterator.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_addends_next_to_large_ones() {
        let values = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(kahan_sum(values), 2.0);
        assert_eq!(values.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn harmonic_tail() {
        let n = 1_000_000u32;
        let naive: f32 = (1..=n).map(|i| 1.0 / i as f32).sum();
        let exact: f64 = (1..=n).rev().map(|i| 1.0 / i as f64).sum();
        let compensated = kahan_sum((1..=n).map(|i| 1.0 / i as f64));
        assert!((compensated - exact).abs() < 1e-13);
        assert!((naive as f64 - exact).abs() > 1e-6);
    }
}
