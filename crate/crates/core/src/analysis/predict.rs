//! Closed-form predictors evaluated as exact sums over the truncated lattice.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, i2};
use crate::spectral::{craya_basis, dot3, Lattice, ShellBounds, WaveVector, BOX_VOLUME};
use crate::synthesis::VelocityParams;

/// Terms `(k - j, |k-j|^{2β} |γ_j|² (U_e² ξ² + U_f² υ²))` with `ξ = e_{k-j}·j`,
/// `υ = f_{k-j}·j`, over the full-lattice source support with `|k - j| <= N`.
pub fn interaction_terms(
    k: WaveVector,
    params: &VelocityParams,
    support: &[(WaveVector, Complex64)],
    lattice: Lattice,
) -> Vec<(WaveVector, f64)> {
    let (ue2, uf2) = (params.ue * params.ue, params.uf * params.uf);
    support
        .iter()
        .filter_map(|&(j, g)| {
            let m = k - j;
            if m.is_zero() || !lattice.contains(m) || g.norm_sqr() == 0.0 {
                return None;
            }
            let fr = craya_basis(m).ok()?;
            let jf = j.to_f64();
            let xi = dot3(fr.e, jf);
            let up = dot3(fr.f, jf);
            let w = (m.norm_sq() as f64).powf(params.beta) * g.norm_sqr() * (ue2 * xi * xi + uf2 * up * up);
            Some((m, w))
        })
        .collect()
}

/// `E|ϑ_k|² = |k|^{-4} Σ_j |k-j|^{2β} |γ_j|² (U_e² ξ² + U_f² υ²)`.
pub fn expected_first_iterate_mode(
    k: WaveVector,
    params: &VelocityParams,
    support: &[(WaveVector, Complex64)],
    lattice: Lattice,
) -> f64 {
    let s = compensated_sum(interaction_terms(k, params, support, lattice).into_iter().map(|(_, w)| w));
    s / (k.norm_sq() as f64).powi(2)
}

fn check_dyad(kappa: f64, lattice: Lattice) -> Result<()> {
    if !(kappa > 0.0) || 2.0 * kappa > lattice.radius() as f64 {
        return Err(Error::Domain(format!("dyad at kappa = {kappa} needs 2 kappa <= N = {}", lattice.radius())));
    }
    Ok(())
}

/// `(2π)³ Σ_{lo <= |k| < hi} E|ϑ_k|²` over the full lattice.
pub fn expected_shell_spectrum(
    lo: f64,
    hi: f64,
    params: &VelocityParams,
    support: &[(WaveVector, Complex64)],
    lattice: Lattice,
) -> f64 {
    let modes: Vec<WaveVector> = lattice.shell_half_modes(lo, hi).collect();
    let values: Vec<f64> =
        modes.par_iter().map(|&k| expected_first_iterate_mode(k, params, support, lattice)).collect();
    2.0 * BOX_VOLUME * compensated_sum(values)
}

/// `E‖P_{κ,2κ}ϑ‖²`.
pub fn expected_dyadic_spectrum(
    kappa: f64,
    params: &VelocityParams,
    support: &[(WaveVector, Complex64)],
    lattice: Lattice,
) -> Result<f64> {
    check_dyad(kappa, lattice)?;
    let b = ShellBounds::dyad(kappa);
    Ok(expected_shell_spectrum(b.lo, b.hi, params, support, lattice))
}

/// Norms of `∇^{-1}g` derived from the full-lattice support of `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceNorms {
    /// `‖∇^{-1}g‖² = (2π)³ Σ |j|² |γ_j|²`.
    pub grad_inv_sq: f64,
    /// `⟨⟨∇^{-1}g⟩⟩ = Σ |j| |γ_j|`.
    pub grad_inv_abs_sum: f64,
}

impl SourceNorms {
    pub fn new(support: &[(WaveVector, Complex64)]) -> Self {
        SourceNorms {
            grad_inv_sq: BOX_VOLUME * compensated_sum(support.iter().map(|(j, g)| j.norm_sq() as f64 * g.norm_sqr())),
            grad_inv_abs_sum: compensated_sum(support.iter().map(|(j, g)| j.norm() * g.norm())),
        }
    }
}

/// `‖P_{1,r}∇^{-1}g‖²`.
pub fn projected_grad_inv_sq(support: &[(WaveVector, Complex64)], r: f64) -> f64 {
    let b = ShellBounds::new(1.0, r);
    BOX_VOLUME
        * compensated_sum(
            support.iter().filter(|(j, _)| b.contains(*j)).map(|(j, g)| j.norm_sq() as f64 * g.norm_sqr()),
        )
}

/// Which `∇^{-1}g` norm enters the main term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MainTermNorm {
    /// `‖P_{1,κ^{1/2}}∇^{-1}g‖²`, as in the theorem.
    Projected,
    /// The full `‖∇^{-1}g‖²`.
    Full,
}

fn main_support(support: &[(WaveVector, Complex64)], kappa: f64, norm: MainTermNorm) -> Vec<(WaveVector, Complex64)> {
    match norm {
        MainTermNorm::Full => support.to_vec(),
        MainTermNorm::Projected => {
            let b = ShellBounds::new(1.0, kappa.sqrt());
            support.iter().copied().filter(|(j, _)| b.contains(*j)).collect()
        }
    }
}

/// `κ^{2β-1} (8πU²/3) i₂(2β-1) ‖P∇^{-1}g‖²`; requires `U_e = U_f`.
pub fn bht_main_term(
    kappa: f64,
    params: &VelocityParams,
    support: &[(WaveVector, Complex64)],
    norm: MainTermNorm,
) -> Result<f64> {
    if params.ue != params.uf {
        return Err(Error::InvalidParameter(
            "isotropic main term needs Ue = Uf; use bht_main_term_anisotropic".into(),
        ));
    }
    let s = 2.0 * params.beta - 1.0;
    let g2 = SourceNorms::new(&main_support(support, kappa, norm)).grad_inv_sq;
    Ok(kappa.powf(s) * (8.0 * PI * params.ue * params.ue / 3.0) * i2(s) * g2)
}

/// Main term with the per-mode weight
/// `2π|j_h|² U_e² + (2π/3 |j|² + 2π j_z²) U_f²` in place of `(8π/3) U² |j|²`.
pub fn bht_main_term_anisotropic(
    kappa: f64,
    params: &VelocityParams,
    support: &[(WaveVector, Complex64)],
    norm: MainTermNorm,
) -> f64 {
    let s = 2.0 * params.beta - 1.0;
    let (ue2, uf2) = (params.ue * params.ue, params.uf * params.uf);
    let sum = compensated_sum(main_support(support, kappa, norm).iter().map(|(j, g)| {
        let jh2 = j.horizontal_norm_sq() as f64;
        let jz2 = (j.kz as f64).powi(2);
        let j2 = j.norm_sq() as f64;
        g.norm_sqr() * (2.0 * PI * jh2 * ue2 + (2.0 * PI / 3.0 * j2 + 2.0 * PI * jz2) * uf2)
    }));
    kappa.powf(s) * i2(s) * BOX_VOLUME * sum
}

/// Constants left implicit by the remainder bound; both default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c_alpha_beta: f64,
    pub c_beta: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants { c_alpha_beta: 1.0, c_beta: 1.0 }
    }
}

/// Bound on `|E‖P_{κ,2κ}ϑ‖² - main term|`:
/// `c_g² U² c(α,β) κ^α + c(β) U² ‖∇^{-1}g‖² κ^{2β-3/2}`, or
/// `c(β) U² ‖∇^{-1}g‖² κ^{2β-2}` for a band-limited source.
pub fn remainder_bound(
    kappa: f64,
    params: &VelocityParams,
    support: &[(WaveVector, Complex64)],
    c_g: f64,
    alpha: f64,
    constants: BoundConstants,
) -> f64 {
    let u2 = params.u_max().powi(2);
    let g2 = SourceNorms::new(support).grad_inv_sq;
    if c_g == 0.0 {
        constants.c_beta * u2 * g2 * kappa.powf(2.0 * params.beta - 2.0)
    } else {
        c_g * c_g * u2 * constants.c_alpha_beta * kappa.powf(alpha)
            + constants.c_beta * u2 * g2 * kappa.powf(2.0 * params.beta - 1.5)
    }
}

/// `κ^{4β-5} 16π U⁴ i₂(4β-5) ‖∇^{-1}g‖² {⟨⟨∇^{-1}g⟩⟩² + (ς-1)‖∇^{-1}g‖²}`
/// for band-limited sources.
pub fn variance_bound(kappa: f64, params: &VelocityParams, support: &[(WaveVector, Complex64)], c_g: f64) -> Result<f64> {
    if c_g != 0.0 {
        return Err(Error::Hypothesis("the variance bound is stated for band-limited sources (c_g = 0)".into()));
    }
    let n = SourceNorms::new(support);
    let s = 4.0 * params.beta - 5.0;
    let varsigma = params.law.fourth_moment();
    Ok(kappa.powf(s)
        * 16.0
        * PI
        * params.u_max().powi(4)
        * i2(s)
        * n.grad_inv_sq
        * (n.grad_inv_abs_sum.powi(2) + (varsigma - 1.0) * n.grad_inv_sq))
}
