//! Exact first and second moments of the velocity shell energy
//! `E_κ = ‖P_{κ,2κ} u‖²` over the truncated lattice.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::spectral::{Lattice, ShellBounds, VectorField};
use crate::synthesis::velocity::VelocityParams;

fn shell_power_sum(lattice: Lattice, kappa: f64, power: f64) -> Result<f64> {
    if !(kappa > 0.0) || 2.0 * kappa > lattice.radius() as f64 {
        return Err(Error::Domain(format!(
            "dyad [{kappa}, {}) does not fit inside |k| <= {}",
            2.0 * kappa,
            lattice.radius()
        )));
    }
    let half = compensated_sum(lattice.shell_half_modes(kappa, 2.0 * kappa).map(|k| k.norm().powf(power)));
    Ok(2.0 * half)
}

/// `E E_κ = 8π³ (U_e² + U_f²) Σ_{κ<=|k|<2κ} |k|^{2β}` (full lattice).
pub fn energy_shell_mean_exact(params: &VelocityParams, lattice: Lattice, kappa: f64) -> Result<f64> {
    let s = shell_power_sum(lattice, kappa, 2.0 * params.beta)?;
    Ok(8.0 * PI.powi(3) * (params.ue.powi(2) + params.uf.powi(2)) * s)
}

/// `Var E_κ = 2 (2π)^6 (ς - 1)(U_e⁴ + U_f⁴) Σ_{κ<=|k|<2κ} |k|^{4β}` (full lattice).
///
/// The factor 2 comes from the pairing `u_{-k} = conj u_k`: each half-space
/// amplitude contributes to two lattice modes.
pub fn energy_shell_var_exact(params: &VelocityParams, lattice: Lattice, kappa: f64) -> Result<f64> {
    let s = shell_power_sum(lattice, kappa, 4.0 * params.beta)?;
    let varsigma = params.law.fourth_moment();
    Ok(2.0 * (2.0 * PI).powi(6) * (varsigma - 1.0) * (params.ue.powi(4) + params.uf.powi(4)) * s)
}

/// Observed `‖P_{κ,2κ} u‖²` of one realization.
pub fn shell_energy(u: &VectorField, kappa: f64) -> f64 {
    let b = ShellBounds::dyad(kappa);
    u.shell_norm_sq(b.lo, b.hi)
}
