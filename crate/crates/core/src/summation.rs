//! Neumaier compensated summation for real and complex values.

use num_complex::Complex64;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn sum_complex<I: IntoIterator<Item = Complex64>>(iter: I) -> Complex64 {
    let mut acc = ComplexSum::new();
    for z in iter {
        acc.add(z);
    }
    acc.value()
}

pub fn sum_real<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in iter {
        acc.add(v);
    }
    acc.value()
}

/// Chunk length for parallel sums. Fixed, so that the partition and hence
/// the rounding is the same for every thread count.
pub const CHUNK: u64 = 1 << 14;

/// `sum_{n=lo}^{hi} term(n)`, compensated within fixed-size chunks and then
/// across chunk totals in index order.
pub fn par_sum_range<F>(lo: u64, hi: u64, term: F) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync,
{
    if hi < lo {
        return Complex64::new(0.0, 0.0);
    }
    let chunks = (hi - lo) / CHUNK + 1;
    let partials: Vec<Complex64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = lo + c * CHUNK;
            let end = (start + CHUNK - 1).min(hi);
            sum_complex((start..=end).map(&term))
        })
        .collect();
    sum_complex(partials)
}
