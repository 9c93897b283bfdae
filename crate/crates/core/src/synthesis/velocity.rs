//! Static random velocity `u = Σ' |k|^β (U_e e_k V_k + U_f f_k W_k) e^{ik·x}`.
//!
//! `V_k, W_k` are drawn on the half-space only; the coefficient `u_k` at
//! `-k` is the conjugate of the stored one, which keeps `u` real.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{craya_basis, ModeTable, VectorField, WaveVector};
use crate::synthesis::law::CircularLaw;
use crate::synthesis::rng::{Component, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityParams {
    pub beta: f64,
    pub ue: f64,
    pub uf: f64,
    pub law: CircularLaw,
}

impl VelocityParams {
    pub fn isotropic(beta: f64, u: f64, law: CircularLaw) -> Self {
        VelocityParams { beta, ue: u, uf: u, law }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() {
            return Err(Error::InvalidParameter("beta must be finite".into()));
        }
        if !(self.ue >= 0.0 && self.uf >= 0.0) {
            return Err(Error::InvalidParameter("Ue and Uf must be non-negative".into()));
        }
        Ok(())
    }

    /// `max(U_e, U_f)`, the amplitude entering contraction estimates.
    pub fn u_max(&self) -> f64 {
        self.ue.max(self.uf)
    }

    /// Velocity coefficient of a half-space mode for given amplitudes.
    #[inline]
    pub fn mode_vector(&self, k: WaveVector, v: Complex64, w: Complex64) -> [Complex64; 3] {
        let fr = craya_basis(k).expect("nonzero mode");
        let s = k.norm().powf(self.beta);
        let a = v * (self.ue * s);
        let b = w * (self.uf * s);
        [a * fr.e[0] + b * fr.f[0], a * fr.e[1] + b * fr.f[1], a * fr.e[2] + b * fr.f[2]]
    }

    /// Draws `(V_k, W_k)` for a half-space mode.
    pub fn draw(&self, key: StreamKey, k: WaveVector) -> (Complex64, Complex64) {
        let v = self.law.sample(&mut key.mode(k, Component::VelocityE));
        let w = self.law.sample(&mut key.mode(k, Component::VelocityF));
        (v, w)
    }
}

/// A velocity realization together with its Craya–Herring amplitudes.
#[derive(Debug, Clone)]
pub struct VelocityModes {
    pub params: VelocityParams,
    pub u: VectorField,
    pub v: Vec<Complex64>,
    pub w: Vec<Complex64>,
}

impl VelocityModes {
    pub fn table(&self) -> &Arc<ModeTable> {
        self.u.table()
    }

    pub fn zero(params: VelocityParams, table: &Arc<ModeTable>) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); table.len()];
        VelocityModes { params, u: VectorField::zeros(table), v: z.clone(), w: z }
    }

    /// Writes `kx,ky,kz,re_x,im_x,re_y,im_y,re_z,im_z` over half-space modes.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "kx,ky,kz,re_x,im_x,re_y,im_y,re_z,im_z")?;
        for (k, c) in self.u.iter() {
            writeln!(
                out,
                "{},{},{},{:?},{:?},{:?},{:?},{:?},{:?}",
                k.kx, k.ky, k.kz, c[0].re, c[0].im, c[1].re, c[1].im, c[2].re, c[2].im
            )?;
        }
        Ok(())
    }
}

pub fn synth_velocity_static(params: &VelocityParams, table: &Arc<ModeTable>, key: StreamKey) -> Result<VelocityModes> {
    params.validate()?;
    let mut vs = Vec::with_capacity(table.len());
    let mut ws = Vec::with_capacity(table.len());
    let u = VectorField::from_fn(table, |k| {
        let (v, w) = params.draw(key, k);
        vs.push(v);
        ws.push(w);
        params.mode_vector(k, v, w)
    });
    Ok(VelocityModes { params: *params, u, v: vs, w: ws })
}
