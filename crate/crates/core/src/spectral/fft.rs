//! Cubic-grid 3-d FFTs built from `rustfft` line transforms.
//!
//! Grid layout is `idx = (iz * n + iy) * n + ix` and the physical points are
//! `x = 2π (ix, iy, iz) / n`. With that convention a field `Σ c_k e^{ik·x}`
//! is recovered on the grid by the unnormalised inverse transform, and
//! `forward` returns `c_k` (it divides by `n³`).

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Grid3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid3").field("n", &self.n).finish()
    }
}

impl Grid3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Grid3 { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    /// Smallest 5-smooth size `>= 2 (2N + 1)`; large enough that quadratic
    /// products of `|k| <= N` fields alias nowhere inside the ball.
    pub fn dealiased_size(radius: u32) -> usize {
        let min = 2 * (2 * radius as usize + 1);
        (min..).find(|&m| is_smooth(m)).expect("smooth size exists")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Grid slot of wavenumber component `k` (negative wraps around).
    pub fn wrap(&self, k: i32) -> usize {
        k.rem_euclid(self.n as i32) as usize
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.n + iy) * self.n + ix
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
        let scale = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n);
        // x lines are contiguous
        plan.process(data);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        // y lines
        for iz in 0..n {
            for ix in 0..n {
                for iy in 0..n {
                    line[iy] = data[(iz * n + iy) * n + ix];
                }
                plan.process(&mut line);
                for iy in 0..n {
                    data[(iz * n + iy) * n + ix] = line[iy];
                }
            }
        }
        // z lines
        for iy in 0..n {
            for ix in 0..n {
                for iz in 0..n {
                    line[iz] = data[(iz * n + iy) * n + ix];
                }
                plan.process(&mut line);
                for iz in 0..n {
                    data[(iz * n + iy) * n + ix] = line[iz];
                }
            }
        }
    }
}

fn is_smooth(mut m: usize) -> bool {
    for p in [2, 3, 5] {
        while m % p == 0 {
            m /= p;
        }
    }
    m == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dealiased_sizes_are_smooth_and_large_enough() {
        for r in 1..40u32 {
            let m = Grid3::dealiased_size(r);
            assert!(m >= 4 * r as usize + 2);
            assert!(is_smooth(m));
        }
        assert_eq!(Grid3::dealiased_size(16), 72);
    }

    #[test]
    fn single_mode_round_trip() {
        let g = Grid3::new(8);
        let mut data = vec![Complex64::new(0.0, 0.0); g.len()];
        let slot = g.index(g.wrap(1), g.wrap(-2), g.wrap(3));
        data[slot] = Complex64::new(0.5, -0.25);
        g.inverse_in_place(&mut data);
        // value at x = 0 is the coefficient itself
        assert!((data[0] - Complex64::new(0.5, -0.25)).norm() < 1e-15);
        g.forward_in_place(&mut data);
        for (i, v) in data.iter().enumerate() {
            let expect = if i == slot { Complex64::new(0.5, -0.25) } else { Complex64::new(0.0, 0.0) };
            assert!((v - expect).norm() < 1e-14);
        }
    }
}
