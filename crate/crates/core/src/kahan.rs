//! Compensated (Kahan) accumulation.
//!
//! Every sum in this crate that feeds an assertion or a CSV row is
//! accumulated through these types, always in a fixed (ascending) order, so
//! that results do not depend on chunking or thread count.

use num_complex::Complex64;

/// Kahan summation state for `f64`.
#[derive(Clone, Copy, Debug, Default)]
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
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Componentwise Kahan accumulation for complex values.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanComplex {
    re: KahanSum,
    im: KahanSum,
}

impl KahanComplex {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: Complex64) {
        self.re.add(value.re);
        self.im.add(value.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Sum an iterator with compensation, in iteration order.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = KahanSum::new();
    for v in iter {
        acc.add(v);
    }
    acc.value()
}

/// Sum an iterator of complex values with compensation, in iteration order.
pub fn kahan_csum<I: IntoIterator<Item = Complex64>>(iter: I) -> Complex64 {
    let mut acc = KahanComplex::new();
    for v in iter {
        acc.add(v);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_ill_conditioned_series() {
        // 1 + 1e16 * eps-sized terms: naive summation loses them entirely.
        let mut acc = KahanSum::new();
        acc.add(1.0);
        for _ in 0..10_000 {
            acc.add(1e-16);
        }
        assert!((acc.value() - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn order_is_respected() {
        // Two different orders of the same multiset may differ in the last
        // ulp; the accumulator itself must be deterministic for one order.
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 2654435761u64 % 1000) as f64).sin()).collect();
        let a = kahan_sum(xs.iter().copied());
        let b = kahan_sum(xs.iter().copied());
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
