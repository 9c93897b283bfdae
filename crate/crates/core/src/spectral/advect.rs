//! Vector fields and the Galerkin-truncated advection product `u·∇θ`.
//!
//! Two interchangeable algorithms are provided: a direct convolution over the
//! support of `θ`, and a pseudospectral product on a zero-padded grid that is
//! truncated back to `|k| <= N`. Both give `(u·∇θ)_k = i Σ_j (u_{k-j}·j) θ_j`
//! restricted to the lattice.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::fft::Grid3;
use crate::spectral::{ModeTable, Slot, SpectralField, WaveVector};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ZERO3: [Complex64; 3] = [ZERO; 3];

/// A real vector field stored as half-space vector coefficients.
#[derive(Debug, Clone)]
pub struct VectorField {
    table: Arc<ModeTable>,
    coeffs: Vec<[Complex64; 3]>,
}

impl VectorField {
    pub fn zeros(table: &Arc<ModeTable>) -> Self {
        VectorField { table: Arc::clone(table), coeffs: vec![ZERO3; table.len()] }
    }

    pub fn from_fn(table: &Arc<ModeTable>, mut f: impl FnMut(WaveVector) -> [Complex64; 3]) -> Self {
        let coeffs = table.modes().iter().map(|&k| f(k)).collect();
        VectorField { table: Arc::clone(table), coeffs }
    }

    pub fn table(&self) -> &Arc<ModeTable> {
        &self.table
    }

    pub fn coefficients(&self) -> &[[Complex64; 3]] {
        &self.coeffs
    }

    pub fn iter(&self) -> impl Iterator<Item = (WaveVector, [Complex64; 3])> + '_ {
        self.table.modes().iter().copied().zip(self.coeffs.iter().copied())
    }

    /// Coefficient at any `k`; conjugate extension into `-H`, zero outside.
    #[inline]
    pub fn get(&self, k: WaveVector) -> [Complex64; 3] {
        match self.table.slot(k) {
            Some(Slot::Direct(i)) => self.coeffs[i],
            Some(Slot::Conjugate(i)) => {
                let c = self.coeffs[i];
                [c[0].conj(), c[1].conj(), c[2].conj()]
            }
            None => ZERO3,
        }
    }

    pub fn component(&self, axis: usize) -> SpectralField {
        SpectralField::from_coefficients(&self.table, self.coeffs.iter().map(|c| c[axis]).collect())
            .expect("same table")
    }

    /// `max_k |k·u_k| / (|k| |u_k|)` over nonzero modes.
    pub fn max_relative_divergence(&self) -> f64 {
        self.iter()
            .filter_map(|(k, u)| {
                let mag = (u[0].norm_sqr() + u[1].norm_sqr() + u[2].norm_sqr()).sqrt();
                (mag > 0.0).then(|| dot_real(u, k.to_f64()).norm() / (mag * k.norm()))
            })
            .fold(0.0, f64::max)
    }

    /// `(2π)^3 Σ_full |u_k|^2` over `lo <= |k| < hi`.
    pub fn shell_norm_sq(&self, lo: f64, hi: f64) -> f64 {
        (0..3).map(|a| self.component(a).shell_norm_sq(lo, hi)).sum()
    }
}

#[inline]
pub(crate) fn dot_real(u: [Complex64; 3], v: [f64; 3]) -> Complex64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

/// Which algorithm evaluates the product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvectMethod {
    Direct,
    Pseudospectral,
    /// Direct when the convolution is cheap, otherwise pseudospectral.
    Auto,
}

pub fn advect(u: &VectorField, theta: &SpectralField) -> Result<SpectralField> {
    advect_with(u, theta, AdvectMethod::Auto)
}

pub fn advect_with(u: &VectorField, theta: &SpectralField, method: AdvectMethod) -> Result<SpectralField> {
    if !u.table.same_lattice(theta.table()) {
        return Err(Error::LatticeMismatch { left: u.table.radius(), right: theta.table().radius() });
    }
    match method {
        AdvectMethod::Direct => Ok(advect_direct(u, theta)),
        AdvectMethod::Pseudospectral => Ok(advect_pseudospectral(u, theta)),
        AdvectMethod::Auto => {
            let support = theta.coefficients().iter().filter(|c| **c != ZERO).count();
            let grid = Grid3::dealiased_size(theta.table().radius()) as f64;
            let direct_cost = 2.0 * support as f64 * theta.table().len() as f64;
            let fft_cost = 7.0 * grid.powi(3) * (3.0 * grid.log2() + 4.0);
            if direct_cost <= fft_cost {
                Ok(advect_direct(u, theta))
            } else {
                Ok(advect_pseudospectral(u, theta))
            }
        }
    }
}

/// Full-lattice support `(j, θ_j)` of a field, skipping zero coefficients.
pub(crate) fn full_support(theta: &SpectralField) -> Vec<(WaveVector, Complex64)> {
    let mut out = Vec::new();
    for (j, c) in theta.iter() {
        if c != ZERO {
            out.push((j, c));
            out.push((-j, c.conj()));
        }
    }
    out
}

fn advect_direct(u: &VectorField, theta: &SpectralField) -> SpectralField {
    let support = full_support(theta);
    SpectralField::from_fn(theta.table(), |k| {
        let mut acc = ZERO;
        for &(j, c) in &support {
            let m = k - j;
            if m.is_zero() {
                continue;
            }
            let um = u.get(m);
            acc += dot_real(um, j.to_f64()) * c;
        }
        Complex64::new(-acc.im, acc.re)
    })
}

fn advect_pseudospectral(u: &VectorField, theta: &SpectralField) -> SpectralField {
    let table = theta.table();
    let grid = Grid3::new(Grid3::dealiased_size(table.radius()));
    let mut product = vec![0.0f64; grid.len()];
    let grad = theta.gradient();
    let mut buf = vec![ZERO; grid.len()];
    for axis in 0..3 {
        buf.iter_mut().for_each(|v| *v = ZERO);
        u.component(axis).scatter_into(&grid, &mut buf);
        grid.inverse_in_place(&mut buf);
        let ua: Vec<f64> = buf.iter().map(|z| z.re).collect();
        buf.iter_mut().for_each(|v| *v = ZERO);
        grad[axis].scatter_into(&grid, &mut buf);
        grid.inverse_in_place(&mut buf);
        for (p, (a, g)) in product.iter_mut().zip(ua.iter().zip(&buf)) {
            *p += a * g.re;
        }
    }
    for (b, p) in buf.iter_mut().zip(&product) {
        *b = Complex64::new(*p, 0.0);
    }
    grid.forward_in_place(&mut buf);
    SpectralField::gather_from(table, &grid, &buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{craya_basis, Lattice};

    fn table(n: u32) -> Arc<ModeTable> {
        ModeTable::new(Lattice::new(n).unwrap())
    }

    struct XorShift(u64);
    impl XorShift {
        fn next(&mut self) -> f64 {
            self.0 ^= self.0 << 13;
            self.0 ^= self.0 >> 7;
            self.0 ^= self.0 << 17;
            (self.0 >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }
        fn c(&mut self) -> Complex64 {
            Complex64::new(self.next(), self.next())
        }
    }

    fn random_solenoidal(t: &Arc<ModeTable>, seed: u64) -> VectorField {
        let mut rng = XorShift(seed | 1);
        VectorField::from_fn(t, |k| {
            let fr = craya_basis(k).unwrap();
            let (a, b) = (rng.c(), rng.c());
            let s = k.norm().powf(-1.5);
            [
                (a * fr.e[0] + b * fr.f[0]) * s,
                (a * fr.e[1] + b * fr.f[1]) * s,
                (a * fr.e[2] + b * fr.f[2]) * s,
            ]
        })
    }

    fn random_scalar(t: &Arc<ModeTable>, seed: u64) -> SpectralField {
        let mut rng = XorShift(seed | 1);
        SpectralField::from_fn(t, |_| rng.c())
    }

    #[test]
    fn zero_theta_gives_zero() {
        let t = table(4);
        let u = random_solenoidal(&t, 7);
        let out = advect(&u, &SpectralField::zeros(&t)).unwrap();
        assert!(out.coefficients().iter().all(|c| *c == ZERO));
    }

    #[test]
    fn two_pair_interaction_by_hand() {
        let t = table(4);
        let k0 = WaveVector::new(1, 0, 0);
        let j0 = WaveVector::new(0, 2, 1);
        let uk = [Complex64::new(0.0, 0.0), Complex64::new(0.3, -0.2), Complex64::new(0.1, 0.4)];
        let u = VectorField::from_fn(&t, |k| if k == k0 { uk } else { ZERO3 });
        let mut theta = SpectralField::zeros(&t);
        let th = Complex64::new(0.7, 0.5);
        theta.set(j0, th).unwrap();

        let i = Complex64::new(0.0, 1.0);
        let conj3 = |v: [Complex64; 3]| [v[0].conj(), v[1].conj(), v[2].conj()];
        // k = k0 + j0 gets i (u_{k0}·j0) θ_{j0}; k = j0 - k0 gets i (u_{-k0}·j0) θ_{j0}
        let plus = i * dot_real(uk, j0.to_f64()) * th;
        let minus = i * dot_real(conj3(uk), j0.to_f64()) * th;

        for method in [AdvectMethod::Direct, AdvectMethod::Pseudospectral] {
            let out = advect_with(&u, &theta, method).unwrap();
            assert!((out.get(k0 + j0) - plus).norm() < 1e-14);
            assert!((out.get(j0 - k0) - minus).norm() < 1e-14);
            assert!((out.get(-(k0 + j0)) - plus.conj()).norm() < 1e-14);
            for (k, c) in out.iter() {
                if k != k0 + j0 && k != j0 - k0 {
                    assert!(c.norm() < 1e-14, "{method:?} {k} {c}");
                }
            }
        }
    }

    #[test]
    fn direct_and_pseudospectral_agree() {
        let t = table(8);
        let u = random_solenoidal(&t, 3);
        let theta = random_scalar(&t, 5);
        let a = advect_with(&u, &theta, AdvectMethod::Direct).unwrap();
        let b = advect_with(&u, &theta, AdvectMethod::Pseudospectral).unwrap();
        let diff = a.coefficients().iter().zip(b.coefficients()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "max diff {diff}");
    }

    #[test]
    fn mean_mode_of_product_vanishes() {
        let t = table(5);
        let u = random_solenoidal(&t, 21);
        let theta = random_scalar(&t, 22);
        // (u·∇θ)_0 = i Σ_j (u_{-j}·j) θ_j
        let mut acc = ZERO;
        for (j, c) in full_support(&theta) {
            acc += dot_real(u.get(-j), j.to_f64()) * c;
        }
        assert!(acc.norm() < 1e-13);
        assert!(u.max_relative_divergence() < 1e-14);
    }

    #[test]
    fn lattice_mismatch_is_rejected() {
        let u = random_solenoidal(&table(3), 1);
        let theta = random_scalar(&table(4), 1);
        assert!(matches!(advect(&u, &theta), Err(Error::LatticeMismatch { .. })));
    }
}
