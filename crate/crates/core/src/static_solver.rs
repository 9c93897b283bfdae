//! Stationary problem `u·∇θ = Δθ + g` by Picard iteration
//! `θ^{(n+1)} = Δ^{-1}(u·∇θ^{(n)} - g)`, `θ^{(0)} = -Δ^{-1}g`.
//!
//! Every routine takes `γ = Δ^{-1}g` rather than `g`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::spectral::{advect_with, dot_real, AdvectMethod, Lattice, ModeTable, SpectralField, VectorField, WaveVector};
use crate::synthesis::VelocityModes;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    #[serde(rename = "increments")]
    pub increment_norms: Vec<f64>,
    pub residual: f64,
    #[serde(rename = "ratio")]
    pub estimated_ratio: f64,
    pub converged: bool,
}

impl SolveDiagnostics {
    fn new(increment_norms: Vec<f64>, residual: f64, converged: bool) -> Self {
        SolveDiagnostics {
            iterations: increment_norms.len(),
            estimated_ratio: geometric_ratio(&increment_norms),
            increment_norms,
            residual,
            converged,
        }
    }
}

/// Geometric mean of successive increment ratios, ignoring a final zero.
fn geometric_ratio(incs: &[f64]) -> f64 {
    let positive: Vec<f64> = incs.iter().copied().take_while(|&x| x > 0.0).collect();
    if positive.len() < 2 {
        return 0.0;
    }
    let n = positive.len() - 1;
    (positive[n] / positive[0]).powf(1.0 / n as f64)
}

/// `1e-12 ‖γ‖`, the default stopping tolerance.
pub fn default_tolerance(gamma: &SpectralField) -> f64 {
    1e-12 * gamma.l2_norm_sq().sqrt()
}

pub const DEFAULT_MAX_ITER: usize = 200;

fn check(u: &VectorField, gamma: &SpectralField) -> Result<()> {
    if !u.table().same_lattice(gamma.table()) {
        return Err(Error::LatticeMismatch { left: u.table().radius(), right: gamma.table().radius() });
    }
    Ok(())
}

/// `-Δ^{-1}` applied to `u·∇θ`: coefficients `A_k(θ) / |k|²`.
fn minus_inv_lap_advect(u: &VectorField, theta: &SpectralField, method: AdvectMethod) -> Result<SpectralField> {
    Ok(advect_with(u, theta, method)?.map_modes(|k, c| c / k.norm_sq() as f64))
}

/// `ϑ = -Δ^{-1}(u·∇Δ^{-1}g)` by operator composition.
pub fn first_iterate(u: &VectorField, gamma: &SpectralField) -> Result<SpectralField> {
    check(u, gamma)?;
    minus_inv_lap_advect(u, gamma, AdvectMethod::Auto)
}

/// `ϑ` from the mode formula
/// `ϑ_k = i|k|^{-2} Σ_j |k-j|^β γ_j [U_e (e_{k-j}·j) V_{k-j} + U_f (f_{k-j}·j) W_{k-j}]`,
/// summed over the support of `γ`.
pub fn first_iterate_direct(velocity: &VelocityModes, gamma: &SpectralField) -> Result<SpectralField> {
    check(&velocity.u, gamma)?;
    let table = gamma.table();
    let support = crate::spectral::full_support(gamma);
    let amp = |m: WaveVector| -> Option<[Complex64; 3]> {
        let i = table.index_of(m)?;
        Some(velocity.params.mode_vector(m, velocity.v[i], velocity.w[i]))
    };
    Ok(SpectralField::from_fn(table, |k| {
        first_iterate_mode(k, &support, |m| {
            if let Some(v) = amp(m) {
                v
            } else if let Some(v) = amp(-m) {
                [v[0].conj(), v[1].conj(), v[2].conj()]
            } else {
                [Complex64::new(0.0, 0.0); 3]
            }
        })
    }))
}

/// One coefficient `ϑ_k = i|k|^{-2} Σ_j (u_{k-j}·j) γ_j` given any way to
/// evaluate `u` at a full-lattice mode (zero outside the lattice).
pub fn first_iterate_mode(
    k: WaveVector,
    support: &[(WaveVector, Complex64)],
    mut velocity: impl FnMut(WaveVector) -> [Complex64; 3],
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(j, g) in support {
        let m = k - j;
        if m.is_zero() {
            continue;
        }
        acc += dot_real(velocity(m), j.to_f64()) * g;
    }
    Complex64::new(-acc.im, acc.re) / k.norm_sq() as f64
}

/// `‖Δθ - u·∇θ + g‖_{L²}` with `g_k = -|k|² γ_k`.
pub fn residual(u: &VectorField, gamma: &SpectralField, theta: &SpectralField) -> Result<f64> {
    check(u, gamma)?;
    theta.check_same_lattice(gamma)?;
    let adv = advect_with(u, theta, AdvectMethod::Auto)?;
    let r = SpectralField::from_fn(theta.table(), |k| {
        let k2 = k.norm_sq() as f64;
        -k2 * theta.get(k) - adv.get(k) - k2 * gamma.get(k)
    });
    Ok(r.l2_norm_sq().sqrt())
}

/// Picard iteration until the L² increment drops below `tol`.
///
/// On failure the error carries the full diagnostics.
pub fn fixed_point_solve(
    u: &VectorField,
    gamma: &SpectralField,
    tol: f64,
    max_iter: usize,
) -> Result<(SpectralField, SolveDiagnostics)> {
    check(u, gamma)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let method = AdvectMethod::Auto;
    let mut theta = gamma.scale(-1.0);
    let mut incs = Vec::new();
    let mut converged = false;
    while incs.len() < max_iter {
        // Δ^{-1}(u·∇θ - g) = -A(θ)/|k|² - γ
        let next = &minus_inv_lap_advect(u, &theta, method)?.scale(-1.0) - gamma;
        let inc = (&next - &theta).l2_norm_sq().sqrt();
        theta = next;
        incs.push(inc);
        if inc < tol {
            converged = true;
            break;
        }
        if !inc.is_finite() || inc > 1e150 {
            break;
        }
    }
    let res = residual(u, gamma, &theta)?;
    let diag = SolveDiagnostics::new(incs, res, converged);
    if converged {
        Ok((theta, diag))
    } else {
        Err(Error::NotConverged {
            iterations: diag.iterations,
            last_increment: diag.increment_norms.last().copied().unwrap_or(f64::NAN),
            diagnostics: Box::new(diag),
        })
    }
}

/// Largest lattice handled by the dense oracle (half-space modes).
pub const DENSE_ORACLE_MAX_MODES: usize = 2000;

/// Solves `(Δ - u·∇)θ = -g` as a dense real system over the half-space
/// real and imaginary parts, with LU factorisation.
pub fn dense_oracle_solve(u: &VectorField, gamma: &SpectralField) -> Result<SpectralField> {
    check(u, gamma)?;
    let table = gamma.table();
    let n = table.len();
    if n > DENSE_ORACLE_MAX_MODES {
        return Err(Error::InvalidParameter(format!(
            "dense oracle limited to {DENSE_ORACLE_MAX_MODES} modes, lattice has {n}"
        )));
    }
    let op = dense_operator(u, table)?;
    let mut rhs = DVector::zeros(2 * n);
    for (i, (k, g)) in gamma.iter().enumerate() {
        let k2 = k.norm_sq() as f64;
        rhs[2 * i] = k2 * g.re;
        rhs[2 * i + 1] = k2 * g.im;
    }
    let lu = op.clone().lu();
    let x = match lu.solve(&rhs) {
        Some(x) if x.iter().all(|v| v.is_finite()) => x,
        _ => {
            let sv = op.singular_values();
            return Err(Error::Singular { smallest_singular_value: sv.min() });
        }
    };
    let coeffs = (0..n).map(|i| Complex64::new(x[2 * i], x[2 * i + 1])).collect();
    SpectralField::from_coefficients(table, coeffs)
}

/// Matrix of `θ ↦ Δθ - u·∇θ` on `(Re θ_k, Im θ_k)` pairs.
pub fn dense_operator(u: &VectorField, table: &Arc<ModeTable>) -> Result<DMatrix<f64>> {
    let n = table.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    let mut basis = SpectralField::zeros(table);
    for col in 0..2 * n {
        let unit = if col % 2 == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 1.0) };
        basis.coefficients_mut()[col / 2] = unit;
        let adv = advect_with(u, &basis, AdvectMethod::Direct)?;
        for (row, (k, a)) in adv.iter().enumerate() {
            let mut v = -a;
            if row == col / 2 {
                v -= unit * k.norm_sq() as f64;
            }
            m[(2 * row, col)] = v.re;
            m[(2 * row + 1, col)] = v.im;
        }
        basis.coefficients_mut()[col / 2] = Complex64::new(0.0, 0.0);
    }
    Ok(m)
}

/// `δθ = θ + Δ^{-1}g - ϑ`.
pub fn remainder_field(theta: &SpectralField, vartheta: &SpectralField, gamma: &SpectralField) -> Result<SpectralField> {
    theta.check_same_lattice(vartheta)?;
    theta.check_same_lattice(gamma)?;
    Ok(&(theta + gamma) - vartheta)
}

/// `K_β(r) = min{1, (2κ_g)^{-β} r^β}`.
pub fn k_beta(r: f64, beta: f64, kappa_g: f64) -> f64 {
    (r / (2.0 * kappa_g)).powf(beta).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionEstimate {
    /// `max_k S_k / K_β(|k|)` over the lattice.
    pub varpi: f64,
    /// `4 U Ξ ϖ̂`.
    pub epsilon: f64,
}

/// Exact lattice evaluation of
/// `S_k = Σ'_j |k-j|^β |j|^{-1} K_β(|j|)` and `ε̂ = 4UΞϖ̂` with `U = max(U_e, U_f)`.
///
/// `S_k` is invariant under the 48 signed permutations of the axes, so only
/// `k_x >= k_y >= k_z >= 0` is visited.
pub fn contraction_estimate(beta: f64, u: f64, xi: f64, kappa_g: f64, lattice: Lattice) -> ContractionEstimate {
    let full: Vec<WaveVector> = lattice.half_space_modes().flat_map(|k| [k, -k]).collect();
    let weights: Vec<f64> = full.iter().map(|j| k_beta(j.norm(), beta, kappa_g) / j.norm()).collect();
    let mut varpi: f64 = 0.0;
    for &k in &full {
        if !(k.kx >= k.ky && k.ky >= k.kz && k.kz >= 0) {
            continue;
        }
        let s = compensated_sum(full.iter().zip(&weights).filter_map(|(&j, &w)| {
            let m = k - j;
            (!m.is_zero() && lattice.contains(m)).then(|| m.norm().powf(beta) * w)
        }));
        varpi = varpi.max(s / k_beta(k.norm(), beta, kappa_g));
    }
    ContractionEstimate { varpi, epsilon: 4.0 * u * xi * varpi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::craya_basis;
    use crate::synthesis::{synth_source, synth_velocity_static, CircularLaw, SourceSpec, StreamKey, VelocityParams};

    fn table(n: u32) -> Arc<ModeTable> {
        ModeTable::new(Lattice::new(n).unwrap())
    }

    fn source(t: &Arc<ModeTable>) -> SpectralField {
        let spec = SourceSpec::finite(
            vec![
                (WaveVector::new(1, 0, 0), Complex64::new(0.5, 0.2)),
                (WaveVector::new(0, 1, 1), Complex64::new(-0.3, 0.4)),
                (WaveVector::new(1, -1, 0), Complex64::new(0.1, 0.0)),
            ],
            2.0,
        );
        synth_source(&spec, t, StreamKey::new(0, 0)).unwrap()
    }

    fn velocity(t: &Arc<ModeTable>, u: f64, seed: u64) -> VelocityModes {
        let p = VelocityParams::isotropic(-2.5, u, CircularLaw::with_fourth_moment(2.0).unwrap());
        synth_velocity_static(&p, t, StreamKey::new(seed, 0)).unwrap()
    }

    #[test]
    fn first_iterate_paths_agree() {
        let t = table(6);
        let g = source(&t);
        let vm = velocity(&t, 1.0, 4);
        let a = first_iterate(&vm.u, &g).unwrap();
        let b = first_iterate_direct(&vm, &g).unwrap();
        let d = (&a - &b).max_abs();
        assert!(d < 1e-12 * a.max_abs().max(1e-300), "{d}");
    }

    #[test]
    fn single_pair_hand_convolution() {
        let t = table(4);
        let k0 = WaveVector::new(1, 0, 0);
        let j0 = WaveVector::new(0, 2, 0);
        let p = VelocityParams { beta: -2.0, ue: 1.0, uf: 0.5, law: CircularLaw::unit() };
        let (v0, w0) = (Complex64::new(0.6, 0.8), Complex64::new(0.0, 1.0));
        let mut vm = VelocityModes::zero(p, &t);
        let i0 = t.index_of(k0).unwrap();
        vm.v[i0] = v0;
        vm.w[i0] = w0;
        vm.u = VectorField::from_fn(&t, |k| if k == k0 { p.mode_vector(k0, v0, w0) } else { [Complex64::new(0.0, 0.0); 3] });
        let g0 = Complex64::new(0.25, -0.5);
        let mut g = SpectralField::zeros(&t);
        g.set(j0, g0).unwrap();

        // ±k0 acting on ±j0 lands on k0+j0, j0-k0 and their negatives
        let fr = craya_basis(k0).unwrap();
        let u0: Vec<Complex64> = (0..3).map(|a| v0 * fr.e[a] + w0 * 0.5 * fr.f[a]).collect();
        let i = Complex64::new(0.0, 1.0);
        let dot = |u: &[Complex64], j: WaveVector| u[0] * j.kx as f64 + u[1] * j.ky as f64 + u[2] * j.kz as f64;
        let uc: Vec<Complex64> = u0.iter().map(|c| c.conj()).collect();
        let plus = i * dot(&u0, j0) * g0 / (k0 + j0).norm_sq() as f64;
        let minus = i * dot(&uc, j0) * g0 / (j0 - k0).norm_sq() as f64;

        for out in [first_iterate(&vm.u, &g).unwrap(), first_iterate_direct(&vm, &g).unwrap()] {
            assert!((out.get(k0 + j0) - plus).norm() < 1e-13);
            assert!((out.get(j0 - k0) - minus).norm() < 1e-13);
            let others: f64 = out
                .iter()
                .filter(|(k, _)| *k != k0 + j0 && *k != j0 - k0)
                .map(|(_, c)| c.norm())
                .sum();
            assert!(others < 1e-13);
        }
    }

    #[test]
    fn zero_inputs_give_zero_first_iterate() {
        let t = table(3);
        let vm = velocity(&t, 1.0, 1);
        assert_eq!(first_iterate(&vm.u, &SpectralField::zeros(&t)).unwrap().max_abs(), 0.0);
        assert_eq!(first_iterate(&VectorField::zeros(&t), &source(&t)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn zero_velocity_solves_in_one_step() {
        let t = table(4);
        let g = source(&t);
        let (theta, diag) = fixed_point_solve(&VectorField::zeros(&t), &g, default_tolerance(&g), 10).unwrap();
        assert_eq!(theta, g.scale(-1.0));
        assert_eq!(diag.iterations, 1);
        assert!(diag.residual < 1e-14);
        let oracle = dense_oracle_solve(&VectorField::zeros(&t), &g).unwrap();
        assert!((&oracle + &g).max_abs() < 1e-15);
    }

    #[test]
    fn fixed_point_matches_dense_oracle() {
        let t = table(4);
        let g = source(&t);
        let vm = velocity(&t, 0.05, 9);
        let (theta, diag) = fixed_point_solve(&vm.u, &g, 1e-14, 200).unwrap();
        let oracle = dense_oracle_solve(&vm.u, &g).unwrap();
        assert!((&theta - &oracle).l2_norm_sq().sqrt() < 1e-10);
        assert!(diag.residual < 1e-10);
        assert!(residual(&vm.u, &g, &oracle).unwrap() < 1e-10);
    }

    #[test]
    fn residual_of_leading_term_is_the_advection() {
        let t = table(4);
        let g = source(&t);
        let vm = velocity(&t, 1.0, 2);
        let r = residual(&vm.u, &g, &g.scale(-1.0)).unwrap();
        let adv = advect_with(&vm.u, &g, AdvectMethod::Direct).unwrap().l2_norm_sq().sqrt();
        assert!((r - adv).abs() < 1e-12 * adv);
        let half = residual(&vm.u, &g, &g.scale(-0.5)).unwrap();
        assert!((half - 0.5 * r).abs() > 1e-6 * r);
    }

    #[test]
    fn non_convergence_carries_diagnostics() {
        let t = table(3);
        let g = source(&t);
        let vm = velocity(&t, 200.0, 3);
        match fixed_point_solve(&vm.u, &g, 1e-14, 30) {
            Err(Error::NotConverged { diagnostics, .. }) => {
                assert!(!diagnostics.converged);
                assert!(diagnostics.estimated_ratio > 1.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn remainder_vanishes_at_first_iterate() {
        let t = table(4);
        let g = source(&t);
        let vm = velocity(&t, 0.3, 5);
        let vt = first_iterate(&vm.u, &g).unwrap();
        let theta1 = &vt - &g;
        assert!(remainder_field(&theta1, &vt, &g).unwrap().max_abs() < 1e-16);
    }

    #[test]
    fn k_beta_branches_meet() {
        assert_eq!(k_beta(3.0, -2.5, 4.0), 1.0);
        assert!((k_beta(8.0, -2.5, 4.0) - 1.0).abs() < 1e-15);
        assert!((k_beta(16.0, -2.5, 4.0) - 2f64.powf(-2.5)).abs() < 1e-15);
    }

    #[test]
    fn contraction_estimate_grows_with_lattice() {
        let a = contraction_estimate(-2.5, 1.0, 1.0, 3.0, Lattice::new(3).unwrap());
        let b = contraction_estimate(-2.5, 1.0, 1.0, 3.0, Lattice::new(5).unwrap());
        assert!(b.varpi >= a.varpi && a.varpi > 0.0);
        assert!((a.epsilon - 4.0 * a.varpi).abs() < 1e-12);
    }

    #[test]
    fn contraction_estimate_symmetry_reduction_is_exact() {
        // brute force over every k on a small lattice
        let lat = Lattice::new(3).unwrap();
        let (beta, kg) = (-2.5, 2.0);
        let full: Vec<WaveVector> = lat.half_space_modes().flat_map(|k| [k, -k]).collect();
        let mut best: f64 = 0.0;
        for &k in &full {
            let s: f64 = full
                .iter()
                .filter(|&&j| !(k - j).is_zero() && lat.contains(k - j))
                .map(|&j| (k - j).norm().powf(beta) * k_beta(j.norm(), beta, kg) / j.norm())
                .sum();
            best = best.max(s / k_beta(k.norm(), beta, kg));
        }
        let est = contraction_estimate(beta, 1.0, 1.0, kg, lat);
        assert!((est.varpi - best).abs() < 1e-12 * best);
    }

    #[test]
    fn diagnostics_json_keys() {
        let d = SolveDiagnostics::new(vec![1.0, 0.1, 0.01], 1e-13, true);
        let v = serde_json::to_value(&d).unwrap();
        for key in ["iterations", "increments", "residual", "ratio", "converged"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!((d.estimated_ratio - 0.1).abs() < 1e-12);
    }
}
