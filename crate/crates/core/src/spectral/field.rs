//! Real scalar fields stored as half-space Fourier coefficients.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::spectral::fft::Grid3;
use crate::spectral::{Lattice, ModeTable, ShellBounds, Slot, WaveVector};

/// `(2π)^3`, the volume of the periodic box.
pub const BOX_VOLUME: f64 = 8.0 * PI * PI * PI;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A real, mean-zero field `Σ' f_k e^{ik·x}` truncated to `|k| <= N`.
///
/// Only half-space coefficients are stored; `f_{-k} = conj(f_k)`.
#[derive(Debug, Clone)]
pub struct SpectralField {
    table: Arc<ModeTable>,
    coeffs: Vec<Complex64>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.table.same_lattice(&other.table) && self.coeffs == other.coeffs
    }
}

impl SpectralField {
    pub fn zeros(table: &Arc<ModeTable>) -> Self {
        SpectralField { table: Arc::clone(table), coeffs: vec![ZERO; table.len()] }
    }

    pub fn from_fn(table: &Arc<ModeTable>, mut f: impl FnMut(WaveVector) -> Complex64) -> Self {
        let coeffs = table.modes().iter().map(|&k| f(k)).collect();
        SpectralField { table: Arc::clone(table), coeffs }
    }

    pub fn from_coefficients(table: &Arc<ModeTable>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != table.len() {
            return Err(Error::Domain(format!(
                "expected {} half-space coefficients, got {}",
                table.len(),
                coeffs.len()
            )));
        }
        Ok(SpectralField { table: Arc::clone(table), coeffs })
    }

    pub fn table(&self) -> &Arc<ModeTable> {
        &self.table
    }

    pub fn lattice(&self) -> Lattice {
        self.table.lattice()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Iterate `(k, f_k)` over the stored half-space modes.
    pub fn iter(&self) -> impl Iterator<Item = (WaveVector, Complex64)> + '_ {
        self.table.modes().iter().copied().zip(self.coeffs.iter().copied())
    }

    /// Coefficient at any `k`: zero outside the lattice and at `k = 0`.
    pub fn get(&self, k: WaveVector) -> Complex64 {
        match self.table.slot(k) {
            Some(Slot::Direct(i)) => self.coeffs[i],
            Some(Slot::Conjugate(i)) => self.coeffs[i].conj(),
            None => ZERO,
        }
    }

    /// Set the coefficient at `k`; a `-H` mode stores the conjugate at `-k`.
    pub fn set(&mut self, k: WaveVector, value: Complex64) -> Result<()> {
        match self.table.slot(k) {
            Some(Slot::Direct(i)) => self.coeffs[i] = value,
            Some(Slot::Conjugate(i)) => self.coeffs[i] = value.conj(),
            None => return Err(Error::ModeOutsideLattice(k)),
        }
        Ok(())
    }

    pub fn check_same_lattice(&self, other: &SpectralField) -> Result<()> {
        if !self.table.same_lattice(&other.table) {
            return Err(Error::LatticeMismatch { left: self.table.radius(), right: other.table.radius() });
        }
        Ok(())
    }

    /// Apply a per-mode map to every coefficient.
    pub fn map_modes(&self, mut f: impl FnMut(WaveVector, Complex64) -> Complex64) -> Self {
        let coeffs = self.iter().map(|(k, c)| f(k, c)).collect();
        SpectralField { table: Arc::clone(&self.table), coeffs }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_modes(|_, c| c * s)
    }

    /// `P_{lo,hi}`: keep modes with `lo <= |k| < hi`.
    pub fn project_shell(&self, lo: f64, hi: f64) -> Self {
        let shell = ShellBounds::new(lo, hi);
        self.map_modes(|k, c| if shell.contains(k) { c } else { ZERO })
    }

    /// `(2π)^3 Σ_{full lattice} |f_k|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        2.0 * BOX_VOLUME * compensated_sum(self.coeffs.iter().map(|c| c.norm_sqr()))
    }

    /// `(2π)^3 Σ |k|^{2s} |f_k|^2`.
    pub fn weighted_norm_sq(&self, s: f64) -> f64 {
        2.0 * BOX_VOLUME
            * compensated_sum(self.iter().map(|(k, c)| (k.norm_sq() as f64).powf(s) * c.norm_sqr()))
    }

    /// Squared L² norm restricted to a shell, without materialising the projection.
    pub fn shell_norm_sq(&self, lo: f64, hi: f64) -> f64 {
        let shell = ShellBounds::new(lo, hi);
        2.0 * BOX_VOLUME
            * compensated_sum(self.iter().filter(|(k, _)| shell.contains(*k)).map(|(_, c)| c.norm_sqr()))
    }

    /// `Σ_{full lattice} |f_k|`.
    pub fn abs_sum(&self) -> f64 {
        2.0 * compensated_sum(self.coeffs.iter().map(|c| c.norm()))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn laplacian(&self) -> Self {
        self.map_modes(|k, c| c * -(k.norm_sq() as f64))
    }

    /// `Δ^{-1}`: `f_k -> -f_k / |k|^2` (well defined on mean-zero fields).
    pub fn inverse_laplacian(&self) -> Self {
        self.map_modes(|k, c| c / -(k.norm_sq() as f64))
    }

    /// `∇f` as three component fields with coefficients `i k f_k`.
    pub fn gradient(&self) -> [SpectralField; 3] {
        let comp = |axis: usize| {
            self.map_modes(|k, c| Complex64::new(0.0, k.to_f64()[axis]) * c)
        };
        [comp(0), comp(1), comp(2)]
    }

    /// Values on an `n^3` physical grid; returns `(real part, max |imag|)`.
    pub fn to_physical(&self, grid: &Grid3) -> (Vec<f64>, f64) {
        let mut data = vec![ZERO; grid.len()];
        self.scatter_into(grid, &mut data);
        grid.inverse_in_place(&mut data);
        let max_imag = data.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        (data.iter().map(|z| z.re).collect(), max_imag)
    }

    /// Write the full-lattice spectrum into a grid-sized coefficient array.
    pub(crate) fn scatter_into(&self, grid: &Grid3, data: &mut [Complex64]) {
        for (k, c) in self.iter() {
            data[grid.index(grid.wrap(k.kx), grid.wrap(k.ky), grid.wrap(k.kz))] = c;
            data[grid.index(grid.wrap(-k.kx), grid.wrap(-k.ky), grid.wrap(-k.kz))] = c.conj();
        }
    }

    /// Pick the lattice modes out of forward-transformed grid data.
    pub(crate) fn gather_from(table: &Arc<ModeTable>, grid: &Grid3, data: &[Complex64]) -> Self {
        SpectralField::from_fn(table, |k| data[grid.index(grid.wrap(k.kx), grid.wrap(k.ky), grid.wrap(k.kz))])
    }

    /// CSV with header `kx,ky,kz,re,im`, half-space modes only, in canonical order.
    ///
    /// Floats are written in shortest round-trip form so reading back is bit-exact.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "kx,ky,kz,re,im")?;
        for (k, c) in self.iter() {
            writeln!(w, "{},{},{},{:?},{:?}", k.kx, k.ky, k.kz, c.re, c.im)?;
        }
        Ok(())
    }

    /// Read the CSV format of [`SpectralField::write_csv`]; modes not listed are zero.
    pub fn read_csv<R: BufRead>(table: &Arc<ModeTable>, r: R) -> Result<Self> {
        let mut field = SpectralField::zeros(table);
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if i == 0 {
                if line.trim() != "kx,ky,kz,re,im" {
                    return Err(Error::Parse { line: lineno, message: format!("unexpected header {line:?}") });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 5 {
                return Err(Error::Parse { line: lineno, message: "expected 5 columns".into() });
            }
            let int = |s: &str| {
                s.parse::<i32>().map_err(|e| Error::Parse { line: lineno, message: e.to_string() })
            };
            let float = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse { line: lineno, message: e.to_string() })
            };
            let k = WaveVector::new(int(parts[0])?, int(parts[1])?, int(parts[2])?);
            if !k.in_half_space() {
                return Err(Error::Parse { line: lineno, message: format!("mode {k} is not in the half-space") });
            }
            field.set(k, Complex64::new(float(parts[3])?, float(parts[4])?))?;
        }
        Ok(field)
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        assert!(self.table.same_lattice(&rhs.table), "lattice mismatch");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        SpectralField { table: Arc::clone(&self.table), coeffs }
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        assert!(self.table.same_lattice(&rhs.table), "lattice mismatch");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        SpectralField { table: Arc::clone(&self.table), coeffs }
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, s: f64) -> SpectralField {
        self.scale(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(n: u32) -> Arc<ModeTable> {
        ModeTable::new(Lattice::new(n).unwrap())
    }

    fn pseudo_random_field(table: &Arc<ModeTable>, seed: u64) -> SpectralField {
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        SpectralField::from_fn(table, |_| Complex64::new(next(), next()))
    }

    #[test]
    fn single_mode_parseval() {
        let t = table(3);
        let mut f = SpectralField::zeros(&t);
        f.set(WaveVector::new(0, 1, 1), Complex64::new(0.6, 0.8)).unwrap();
        assert!((f.l2_norm_sq() - 2.0 * BOX_VOLUME).abs() < 1e-12);
        assert_eq!(SpectralField::zeros(&t).l2_norm_sq(), 0.0);
    }

    #[test]
    fn weighted_norm_single_mode() {
        let t = table(3);
        let mut f = SpectralField::zeros(&t);
        f.set(WaveVector::new(2, 0, 0), Complex64::new(1.0, 0.0)).unwrap();
        assert!((f.weighted_norm_sq(-1.0) - BOX_VOLUME * 2.0 * 0.25).abs() < 1e-12);
        assert!((f.weighted_norm_sq(0.0) - f.l2_norm_sq()).abs() < 1e-12);
        assert!((f.abs_sum() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn setting_minus_k_stores_conjugate() {
        let t = table(2);
        let mut f = SpectralField::zeros(&t);
        let k = WaveVector::new(1, 0, 1);
        f.set(-k, Complex64::new(1.0, 2.0)).unwrap();
        assert_eq!(f.get(k), Complex64::new(1.0, -2.0));
        assert!(f.set(WaveVector::new(3, 0, 0), Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn shell_projection() {
        let t = table(4);
        let f = pseudo_random_field(&t, 3);
        let p = f.project_shell(1.0, 2.0);
        for (k, c) in p.iter() {
            if (1..=3).contains(&k.norm_sq()) {
                assert_eq!(c, f.get(k));
            } else {
                assert_eq!(c, ZERO);
            }
        }
        assert_eq!(p.project_shell(1.0, 2.0), p);
        assert_eq!(f.project_shell(1.0, f64::INFINITY), f);
    }

    #[test]
    fn dyads_partition_the_norm() {
        let t = table(8);
        let f = pseudo_random_field(&t, 11);
        let mut total = 0.0;
        for lo in [1.0, 2.0, 4.0, 8.0] {
            total += f.shell_norm_sq(lo, 2.0 * lo);
        }
        assert!((total - f.l2_norm_sq()).abs() <= 1e-12 * f.l2_norm_sq());
    }

    #[test]
    fn laplacian_inverts() {
        let t = table(5);
        let f = pseudo_random_field(&t, 5);
        let g = f.inverse_laplacian().laplacian();
        for (a, b) in f.coefficients().iter().zip(g.coefficients()) {
            assert!((a - b).norm() < 1e-15);
        }
        let grad = f.inverse_laplacian().gradient();
        let grad_norm: f64 = grad.iter().map(|c| c.l2_norm_sq()).sum();
        assert!((grad_norm - f.weighted_norm_sq(-1.0)).abs() <= 1e-12 * grad_norm);
    }

    #[test]
    fn gradient_multiplies_by_ik() {
        let t = table(3);
        let mut f = SpectralField::zeros(&t);
        let k = WaveVector::new(1, 2, 0);
        f.set(k, Complex64::new(0.5, -1.0)).unwrap();
        let g = f.gradient();
        for axis in 0..3 {
            let expect = Complex64::new(0.0, k.to_f64()[axis]) * Complex64::new(0.5, -1.0);
            assert!((g[axis].get(k) - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn parseval_against_grid_quadrature() {
        for n in [4u32, 8, 16] {
            let t = table(n);
            let f = pseudo_random_field(&t, n as u64);
            let grid = Grid3::new(Grid3::dealiased_size(n));
            let (values, max_imag) = f.to_physical(&grid);
            let max_re = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max_imag < 1e-12 * max_re);
            let quad = BOX_VOLUME * compensated_sum(values.iter().map(|v| v * v)) / grid.len() as f64;
            let exact = f.l2_norm_sq();
            assert!(((quad - exact) / exact).abs() < 1e-10, "N={n}: {quad} vs {exact}");
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let t = table(3);
        let f = pseudo_random_field(&t, 99);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = SpectralField::read_csv(&t, buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn csv_rejects_bad_rows() {
        let t = table(2);
        let bad = "kx,ky,kz,re,im\n0,0,-1,1.0,0.0\n";
        assert!(matches!(SpectralField::read_csv(&t, bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let bad_header = "a,b\n";
        assert!(SpectralField::read_csv(&t, bad_header.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn physical_field_is_real(seed in 0u64..1000) {
            let t = table(4);
            let f = pseudo_random_field(&t, seed);
            let grid = Grid3::new(Grid3::dealiased_size(4));
            let (values, max_imag) = f.to_physical(&grid);
            let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(max_imag < 1e-12 * scale);
        }
    }
}
