//! Square 2-D FFTs on row-major buffers.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft2 {
    n: usize,
    plan: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn forward(n: usize) -> Self {
        Fft2 {
            n,
            plan: FftPlanner::new().plan_fft_forward(n),
        }
    }

    /// Unnormalised inverse: `sum_k c_k exp(+2 pi i k x / n)`.
    pub fn inverse(n: usize) -> Self {
        Fft2 {
            n,
            plan: FftPlanner::new().plan_fft_inverse(n),
        }
    }

    pub fn process(&self, data: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(data.len(), n * n);
        self.rows(data);
        transpose(data, n);
        self.rows(data);
        transpose(data, n);
    }

    fn rows(&self, data: &mut [Complex64]) {
        let len = self.plan.get_inplace_scratch_len();
        data.par_chunks_mut(self.n).for_each_init(
            || vec![Complex64::default(); len],
            |scratch, row| self.plan.process_with_scratch(row, scratch),
        );
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + B).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_scales_by_n_squared() {
        let n = 16;
        let orig: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut d = orig.clone();
        Fft2::forward(n).process(&mut d);
        Fft2::inverse(n).process(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a / (n * n) as f64 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_in_expected_bin() {
        let n = 8;
        let mut d = vec![Complex64::default(); n * n];
        for y in 0..n {
            for x in 0..n {
                let ph = 2.0 * std::f64::consts::PI * (2.0 * x as f64 + 3.0 * y as f64) / n as f64;
                d[y * n + x] = Complex64::from_polar(1.0, ph);
            }
        }
        Fft2::forward(n).process(&mut d);
        for (i, v) in d.iter().enumerate() {
            let expect = if i == 3 * n + 2 { (n * n) as f64 } else { 0.0 };
            assert!((v.norm() - expect).abs() < 1e-9, "bin {i}");
        }
    }
}
