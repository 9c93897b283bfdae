//! Time correlation of the velocity amplitudes.
//!
//! `E V_k(s) conj V_k(t) = Φ(χ_k |s - t|)` with `χ_k = c_χ |k|^p`.
//! Paths are sampled lazily per mode so any subset of modes can be
//! evaluated at any time without generating the whole lattice.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{ModeTable, Slot, VectorField, WaveVector};
use crate::synthesis::rng::{Component, StreamKey};
use crate::synthesis::velocity::VelocityParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    Frozen,
    GaussianPhaseDrift,
    Telegraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationModel {
    pub kind: CorrelationKind,
    pub chi_coeff: f64,
    pub chi_power: f64,
}

impl CorrelationModel {
    pub fn frozen() -> Self {
        CorrelationModel { kind: CorrelationKind::Frozen, chi_coeff: 0.0, chi_power: 0.0 }
    }

    pub fn new(kind: CorrelationKind, chi_coeff: f64, chi_power: f64) -> Result<Self> {
        let m = CorrelationModel { kind, chi_coeff, chi_power };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chi_coeff >= 0.0) || !self.chi_coeff.is_finite() {
            return Err(Error::InvalidParameter("chi_coeff must be a non-negative number".into()));
        }
        if !(self.chi_power < 2.0) {
            return Err(Error::Hypothesis(format!(
                "χ_k|k|^-2 → 0 requires chi_power < 2, got {}",
                self.chi_power
            )));
        }
        Ok(())
    }

    /// Whether `Φ` is smooth at the origin (needed by the series expansion).
    pub fn is_smooth(&self) -> bool {
        self.kind != CorrelationKind::Telegraph
    }

    /// `χ_k`.
    pub fn rate(&self, k: WaveVector) -> f64 {
        self.rate_at_norm(k.norm())
    }

    pub fn rate_at_norm(&self, norm: f64) -> f64 {
        if self.kind == CorrelationKind::Frozen {
            return 0.0;
        }
        self.chi_coeff * norm.powf(self.chi_power)
    }

    /// `Φ(h)` for the dimensionless lag `h = χ|t|`.
    pub fn phi(&self, h: f64) -> f64 {
        match self.kind {
            CorrelationKind::Frozen => 1.0,
            CorrelationKind::GaussianPhaseDrift => (-0.5 * h * h).exp(),
            CorrelationKind::Telegraph => (-h.abs()).exp(),
        }
    }

    /// `Φ^{(m)}(x)` for `x >= 0` (one-sided at 0 for the telegraph model).
    pub fn derivative(&self, m: u32, x: f64) -> f64 {
        if m == 0 {
            return self.phi(x);
        }
        match self.kind {
            CorrelationKind::Frozen => 0.0,
            CorrelationKind::GaussianPhaseDrift => {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                sign * hermite_he(m, x) * (-0.5 * x * x).exp()
            }
            CorrelationKind::Telegraph => {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                sign * (-x).exp()
            }
        }
    }

    pub fn derivative_at_zero(&self, m: u32) -> f64 {
        self.derivative(m, 0.0)
    }
}

/// Probabilists' Hermite polynomial `He_m(x)`.
pub fn hermite_he(m: u32, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if m == 0 {
        return a;
    }
    for n in 1..m {
        let c = x * b - n as f64 * a;
        a = b;
        b = c;
    }
    b
}

/// One amplitude process `Z_0 · S(t)` where `S` is the model's unit-modulus factor.
#[derive(Debug, Clone)]
struct AmplitudeProcess {
    z0: Complex64,
    omega: f64,
    flips: Vec<f64>,
}

impl AmplitudeProcess {
    fn at(&self, kind: CorrelationKind, chi: f64, t: f64) -> Complex64 {
        match kind {
            CorrelationKind::Frozen => self.z0,
            CorrelationKind::GaussianPhaseDrift => self.z0 * Complex64::from_polar(1.0, chi * self.omega * t),
            CorrelationKind::Telegraph => {
                let n = self.flips.partition_point(|&s| s <= t);
                if n % 2 == 0 {
                    self.z0
                } else {
                    -self.z0
                }
            }
        }
    }
}

/// Both amplitude processes of one half-space mode, valid on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct ModeProcess {
    k: WaveVector,
    kind: CorrelationKind,
    chi: f64,
    v: AmplitudeProcess,
    w: AmplitudeProcess,
    horizon: f64,
}

impl ModeProcess {
    pub fn wave_vector(&self) -> WaveVector {
        self.k
    }

    /// `(V_k(t), W_k(t))`.
    pub fn at(&self, t: f64) -> (Complex64, Complex64) {
        debug_assert!(t <= self.horizon * (1.0 + 1e-12));
        (self.v.at(self.kind, self.chi, t), self.w.at(self.kind, self.chi, t))
    }
}

/// A sampled time-dependent velocity: evaluate any mode at any `t` in `[0, horizon]`.
#[derive(Debug, Clone, Copy)]
pub struct VelocityPath {
    pub params: VelocityParams,
    pub correlation: CorrelationModel,
    pub key: StreamKey,
    pub horizon: f64,
}

impl VelocityPath {
    pub fn new(params: VelocityParams, correlation: CorrelationModel, key: StreamKey, horizon: f64) -> Result<Self> {
        params.validate()?;
        correlation.validate()?;
        if correlation.kind != CorrelationKind::Frozen && !params.law.is_unit() {
            return Err(Error::InvalidParameter(
                "time-dependent correlation models require the unit modulus law".into(),
            ));
        }
        if !(horizon >= 0.0) {
            return Err(Error::InvalidParameter("path horizon must be non-negative".into()));
        }
        Ok(VelocityPath { params, correlation, key, horizon })
    }

    /// The process of a half-space mode. `V_k(0), W_k(0)` coincide with the
    /// static draws for the same key.
    pub fn mode(&self, k: WaveVector) -> ModeProcess {
        debug_assert!(k.in_half_space());
        let chi = self.correlation.rate(k);
        let (z_v, z_w) = self.params.draw(self.key, k);
        let make = |z0: Complex64, drift: Component, tele: Component| {
            let mut p = AmplitudeProcess { z0, omega: 0.0, flips: Vec::new() };
            match self.correlation.kind {
                CorrelationKind::Frozen => {}
                CorrelationKind::GaussianPhaseDrift => {
                    p.omega = self.key.mode(k, drift).sample(StandardNormal);
                }
                CorrelationKind::Telegraph => {
                    // sign flips at rate χ/2 give E S(0)S(t) = e^{-χ|t|}
                    if chi > 0.0 {
                        let exp = Exp::new(0.5 * chi).expect("positive rate");
                        let mut rng = self.key.mode(k, tele);
                        let mut t = 0.0;
                        loop {
                            t += rng.sample::<f64, _>(exp);
                            if t > self.horizon {
                                break;
                            }
                            p.flips.push(t);
                        }
                    }
                }
            }
            p
        };
        ModeProcess {
            k,
            kind: self.correlation.kind,
            chi,
            v: make(z_v, Component::PhaseDriftE, Component::TelegraphE),
            w: make(z_w, Component::PhaseDriftF, Component::TelegraphF),
            horizon: self.horizon,
        }
    }

    /// `u_k(t)` for the half-space mode of `process`.
    pub fn velocity(&self, process: &ModeProcess, t: f64) -> [Complex64; 3] {
        let (v, w) = process.at(t);
        self.params.mode_vector(process.k, v, w)
    }

    /// All half-space processes of a lattice.
    pub fn processes(&self, table: &Arc<ModeTable>) -> Vec<ModeProcess> {
        table.modes().iter().map(|&k| self.mode(k)).collect()
    }

    /// The whole field at time `t` from precomputed processes.
    pub fn field_at(&self, table: &Arc<ModeTable>, processes: &[ModeProcess], t: f64) -> VectorField {
        VectorField::from_fn(table, |k| match table.slot(k) {
            Some(Slot::Direct(i)) => self.velocity(&processes[i], t),
            _ => unreachable!("half-space enumeration"),
        })
    }
}
