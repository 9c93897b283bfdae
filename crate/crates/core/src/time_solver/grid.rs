//! Uniform time grids and the exponential-trapezoid step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_final: f64,
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    /// `T / dt` must be an integer (to a relative `1e-9`).
    pub fn new(t_final: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::Domain(format!("invalid time grid T = {t_final}, dt = {dt}")));
        }
        let ratio = t_final / dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) || steps < 1.0 {
            return Err(Error::Domain(format!("T / dt = {ratio} is not an integer")));
        }
        Ok(TimeGrid { t_final, dt: t_final / steps, steps: steps as usize })
    }

    /// Grid with `steps` equal steps.
    pub fn with_steps(t_final: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Domain("time grid needs at least one step".into()));
        }
        TimeGrid::new(t_final, t_final / steps as f64)
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.steps {
            self.t_final
        } else {
            i as f64 * self.dt
        }
    }

    /// Checks `dt <= c / (2N²)` and `dt <= c / χ_max`.
    pub fn validate_resolution(&self, radius: u32, chi_max: f64, c: f64) -> Result<()> {
        let diff = c / (2.0 * (radius as f64).powi(2));
        if self.dt > diff * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "dt = {} exceeds the diffusive limit c/(2N^2) = {diff}",
                self.dt
            )));
        }
        if chi_max > 0.0 && self.dt > c / chi_max * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "dt = {} exceeds the correlation limit c/chi_max = {}",
                self.dt,
                c / chi_max
            )));
        }
        Ok(())
    }
}

/// `1 - e^{-x}(1 + x)`, accurate for small `x`.
fn one_minus_exp_poly(x: f64) -> f64 {
    if x < 0.1 {
        // Σ_{n>=2} (-1)^n (n-1) x^n / n!
        let mut term = x * x / 2.0;
        let mut sum = 0.0;
        for n in 2..20 {
            sum += (n as f64 - 1.0) * term;
            term *= -x / (n as f64 + 1.0);
        }
        sum
    } else {
        -(-x).exp_m1() - x * (-x).exp()
    }
}

/// Weights of `∫_0^h e^{-a(h-s)} F(s) ds` with `F` linear between its end values:
/// returns `(e^{-ah}, w0, w1)`.
pub fn exp_trapezoid_weights(a: f64, h: f64) -> (f64, f64, f64) {
    let x = a * h;
    if x == 0.0 {
        return (1.0, 0.5 * h, 0.5 * h);
    }
    let decay = (-x).exp();
    let e1 = -(-x).exp_m1() / a;
    let w0 = one_minus_exp_poly(x) / (a * x);
    (decay, w0, e1 - w0)
}
