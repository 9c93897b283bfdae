//! Circular bounded random variables `Z = R e^{iζ}` with `ζ ~ U(0, 2π)`,
//! normalised to `E|Z|^2 = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthesis::rng::CounterRng;

/// Law of the modulus `R`, already scaled so that `E R^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModulusLaw {
    /// `R ≡ 1`.
    Unit,
    /// `R = r1` with probability `p`, otherwise `r2`.
    TwoPoint { r1: f64, r2: f64, p: f64 },
    /// Rayleigh(σ) conditioned on `R <= cap`, rescaled.
    TruncatedRayleigh { sigma: f64, cap: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularLaw {
    modulus: ModulusLaw,
    xi: f64,
    fourth_moment: f64,
}

impl CircularLaw {
    pub fn unit() -> Self {
        CircularLaw { modulus: ModulusLaw::Unit, xi: 1.0, fourth_moment: 1.0 }
    }

    /// Two-point modulus from raw parameters; the pair is rescaled to `E R^2 = 1`.
    pub fn two_point(r1: f64, r2: f64, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) || r1 < 0.0 || r2 < 0.0 || !r1.is_finite() || !r2.is_finite() {
            return Err(Error::InvalidParameter(format!("two_point({r1}, {r2}, {p}) is not a valid law")));
        }
        let m2 = p * r1 * r1 + (1.0 - p) * r2 * r2;
        if m2 <= 0.0 {
            return Err(Error::InvalidParameter("two_point law is identically zero".into()));
        }
        let s = m2.sqrt();
        let (r1, r2) = (r1 / s, r2 / s);
        let m4 = p * r1.powi(4) + (1.0 - p) * r2.powi(4);
        let xi = if p == 1.0 { r1 } else if r1 > 0.0 || p < 1.0 { r1.max(r2) } else { r2 };
        Ok(CircularLaw { modulus: ModulusLaw::TwoPoint { r1, r2, p }, xi, fourth_moment: m4 })
    }

    /// Two-point law with a prescribed fourth moment `E|Z|^4 = rho >= 1`.
    ///
    /// `rho <= 2` uses the symmetric pair `R^2 = 1 ± sqrt(rho - 1)`;
    /// larger values use the on/off law `R ∈ {0, sqrt(rho)}`.
    pub fn with_fourth_moment(rho: f64) -> Result<Self> {
        if !(rho >= 1.0) || !rho.is_finite() {
            return Err(Error::InvalidParameter(format!("fourth moment {rho} must be >= 1")));
        }
        if rho == 1.0 {
            return Ok(CircularLaw::unit());
        }
        if rho <= 2.0 {
            let d = (rho - 1.0).sqrt();
            CircularLaw::two_point((1.0 - d).sqrt(), (1.0 + d).sqrt(), 0.5)
        } else {
            CircularLaw::two_point(0.0, rho.sqrt(), 1.0 - 1.0 / rho)
        }
    }

    /// Truncated Rayleigh modulus; only `cap / sigma` matters after normalisation.
    pub fn truncated_rayleigh(sigma: f64, cap: f64) -> Result<Self> {
        if !(sigma > 0.0 && cap > 0.0) {
            return Err(Error::InvalidParameter("truncated_rayleigh needs sigma > 0 and cap > 0".into()));
        }
        let (m1, m2) = truncated_exp_moments(cap * cap / (2.0 * sigma * sigma));
        // R^2 = 2σ² Y with Y ~ Exp(1) | Y <= x; normalise E R^2 = 1
        let scale = 1.0 / (2.0 * sigma * sigma * m1).sqrt();
        Ok(CircularLaw {
            modulus: ModulusLaw::TruncatedRayleigh { sigma, cap, scale },
            xi: cap * scale,
            fourth_moment: m2 / (m1 * m1),
        })
    }

    pub fn modulus(&self) -> ModulusLaw {
        self.modulus
    }

    /// Essential supremum `Ξ` of `|Z|`.
    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// `E|Z|^4` (with `E|Z|^2 = 1`).
    pub fn fourth_moment(&self) -> f64 {
        self.fourth_moment
    }

    pub fn is_unit(&self) -> bool {
        matches!(self.modulus, ModulusLaw::Unit)
    }

    pub fn sample(&self, rng: &mut CounterRng) -> Complex64 {
        let r = self.sample_modulus(rng);
        let phase = 2.0 * PI * rng.uniform();
        Complex64::from_polar(r, phase)
    }

    fn sample_modulus(&self, rng: &mut CounterRng) -> f64 {
        match self.modulus {
            ModulusLaw::Unit => 1.0,
            ModulusLaw::TwoPoint { r1, r2, p } => {
                if rng.uniform() < p {
                    r1
                } else {
                    r2
                }
            }
            ModulusLaw::TruncatedRayleigh { sigma, cap, scale } => {
                let x = cap * cap / (2.0 * sigma * sigma);
                let y = -(-rng.uniform() * (-(-x).exp_m1())).ln_1p();
                (2.0 * sigma * sigma * y).sqrt() * scale
            }
        }
    }
}

/// First two moments of `Exp(1)` conditioned on `[0, x]`.
fn truncated_exp_moments(x: f64) -> (f64, f64) {
    let mass = -(-x).exp_m1();
    let e = (-x).exp();
    let m1 = (mass - x * e) / mass;
    let m2 = (2.0 * mass - e * (x * x + 2.0 * x)) / mass;
    (m1, m2)
}

/// `Z` from a law and a stream: `R e^{iζ}`.
pub fn sample_circular(law: &CircularLaw, rng: &mut CounterRng) -> Complex64 {
    law.sample(rng)
}
