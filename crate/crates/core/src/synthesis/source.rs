//! Tracer sources, described through `Δ^{-1}g = Σ' γ_k e^{ik·x}`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectral::{Lattice, ModeTable, SpectralField, WaveVector};
use crate::synthesis::law::CircularLaw;
use crate::synthesis::rng::{mode_hash_unit, Component, StreamKey};

/// `γ_k`: explicit low modes plus an optional power-law tail
/// `|γ_k| = c_g |k|^α` for `|k| >= κ_g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub explicit: Vec<(WaveVector, Complex64)>,
    pub c_g: f64,
    pub alpha: f64,
    pub kappa_g: f64,
    /// Multiply each coefficient by an independent circular `Z_k`.
    pub randomized: bool,
    pub law: CircularLaw,
}

impl SourceSpec {
    /// A band-limited source (`c_g = 0`) with the given modes.
    pub fn finite(explicit: Vec<(WaveVector, Complex64)>, kappa_g: f64) -> Self {
        SourceSpec { explicit, c_g: 0.0, alpha: -10.0, kappa_g, randomized: false, law: CircularLaw::unit() }
    }

    /// Every half-space mode with `|j|² <= max_norm_sq`, with
    /// `γ_j = |j|^exponent e^{2πi h(j)}` and `h` the fixed mode hash.
    pub fn ball(max_norm_sq: i64, exponent: f64, kappa_g: f64) -> Result<Self> {
        let r = (max_norm_sq as f64).sqrt().floor() as u32;
        let lattice = Lattice::new(r.max(1))?;
        let explicit = lattice
            .half_space_modes_in(1, max_norm_sq)
            .map(|j| (j, Complex64::from_polar(j.norm().powf(exponent), 2.0 * PI * mode_hash_unit(j))))
            .collect();
        let spec = SourceSpec::finite(explicit, kappa_g);
        spec.validate()?;
        Ok(spec)
    }

    pub fn is_finite_mode(&self) -> bool {
        self.c_g == 0.0
    }

    /// Structural checks that do not depend on the velocity.
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_g > 1.0) {
            return Err(Error::InvalidParameter(format!("kappa_g = {} must exceed 1", self.kappa_g)));
        }
        if !(self.c_g >= 0.0) {
            return Err(Error::InvalidParameter("c_g must be non-negative".into()));
        }
        if !(self.alpha < 0.0) {
            return Err(Error::InvalidParameter("alpha must be negative".into()));
        }
        for (i, &(k, _)) in self.explicit.iter().enumerate() {
            if k.is_zero() {
                return Err(Error::InvalidParameter("source mode k = 0 is not allowed".into()));
            }
            if k.norm() >= self.kappa_g {
                return Err(Error::InvalidParameter(format!(
                    "explicit source mode {k} has |k| >= kappa_g = {}",
                    self.kappa_g
                )));
            }
            if self.explicit[..i].iter().any(|&(q, _)| q == k || q == -k) {
                return Err(Error::InvalidParameter(format!("source mode {k} listed twice")));
            }
        }
        Ok(())
    }

    /// Decay hypothesis `α < 2 min{β, -3} - 1` for a velocity exponent `β`.
    pub fn check_decay_against(&self, beta: f64) -> Result<()> {
        let bound = 2.0 * beta.min(-3.0) - 1.0;
        if self.alpha < bound {
            Ok(())
        } else {
            Err(Error::Hypothesis(format!(
                "α < 2min{{β,-d}}-1 requires alpha < {bound}, got {}",
                self.alpha
            )))
        }
    }

    /// Deterministic `γ_k` at any nonzero `k` (conjugate-symmetric).
    pub fn gamma(&self, k: WaveVector) -> Complex64 {
        if k.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        for &(q, g) in &self.explicit {
            if q == k {
                return g;
            }
            if q == -k {
                return g.conj();
            }
        }
        if self.c_g > 0.0 && k.norm() >= self.kappa_g {
            let rep = if k.in_half_space() { k } else { -k };
            let z = Complex64::from_polar(self.c_g * k.norm().powf(self.alpha), 2.0 * PI * mode_hash_unit(rep));
            return if k.in_half_space() { z } else { z.conj() };
        }
        Complex64::new(0.0, 0.0)
    }

    /// Nonzero deterministic coefficients over the full lattice (both half-spaces).
    pub fn support(&self, lattice: Lattice) -> Result<Vec<(WaveVector, Complex64)>> {
        let mut out = Vec::new();
        for &(k, g) in &self.explicit {
            if !lattice.contains(k) {
                return Err(Error::ModeOutsideLattice(k));
            }
            if g != Complex64::new(0.0, 0.0) {
                let h = if k.in_half_space() { k } else { -k };
                let gh = self.gamma(h);
                out.push((h, gh));
                out.push((-h, gh.conj()));
            }
        }
        if self.c_g > 0.0 {
            let lo_sq = (self.kappa_g * self.kappa_g).ceil() as i64;
            for k in lattice.half_space_modes_in(lo_sq, lattice.radius_sq()) {
                if k.norm() >= self.kappa_g {
                    let g = self.gamma(k);
                    out.push((k, g));
                    out.push((-k, g.conj()));
                }
            }
        }
        Ok(out)
    }

    /// Rough size of `‖∇^{-1}g‖²` carried by tail modes beyond the lattice.
    pub fn tail_truncation_estimate(&self, lattice: Lattice) -> f64 {
        if self.c_g == 0.0 {
            return 0.0;
        }
        let n = lattice.radius() as f64;
        let p = 2.0 * self.alpha + 5.0;
        if p >= 0.0 {
            return f64::INFINITY;
        }
        8.0 * PI.powi(3) * self.c_g * self.c_g * 4.0 * PI * n.powf(p) / p.abs()
    }

    /// SHA-256 over a canonical text rendering of the spec.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (k, g) in &self.explicit {
            h.update(format!("{},{},{},{:?},{:?};", k.kx, k.ky, k.kz, g.re, g.im));
        }
        h.update(format!(
            "cg={:?};alpha={:?};kappa_g={:?};randomized={};rho={:?}",
            self.c_g,
            self.alpha,
            self.kappa_g,
            self.randomized,
            self.law.fourth_moment()
        ));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The field with coefficients `γ_k` (that is, `Δ^{-1}g`), randomised by
/// independent `Z_k` when the spec asks for it. `g` itself is `-|k|^2 γ_k`.
pub fn synth_source(spec: &SourceSpec, table: &Arc<ModeTable>, key: StreamKey) -> Result<SpectralField> {
    spec.validate()?;
    for &(k, _) in &spec.explicit {
        if !table.lattice().contains(k) {
            return Err(Error::ModeOutsideLattice(k));
        }
    }
    let field = SpectralField::from_fn(table, |k| {
        let g = spec.gamma(k);
        if spec.randomized && g != Complex64::new(0.0, 0.0) {
            g * spec.law.sample(&mut key.mode(k, Component::Source))
        } else {
            g
        }
    });
    Ok(field)
}
