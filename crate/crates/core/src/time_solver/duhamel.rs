//! Duhamel iteration
//! `θ^{(n+1)}(t) = -Δ^{-1}g - ∫_0^t e^{(t-s)Δ}[u(s)·∇θ^{(n)}(s)] ds`, `θ^{(0)} = -Δ^{-1}g`,
//! integrated mode by mode with exact diffusion factors and a trapezoidal forcing.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::spectral::{advect_with, AdvectMethod, Lattice, ModeTable, SpectralField, VectorField, WaveVector};
use crate::static_solver::first_iterate_mode;
use crate::synthesis::{ModeProcess, VelocityParams, VelocityPath};
use crate::time_solver::grid::{exp_trapezoid_weights, TimeGrid};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn chi_max(path: &VelocityPath, radius: u32) -> f64 {
    let c = &path.correlation;
    c.rate_at_norm(1.0).max(c.rate_at_norm(radius as f64))
}

fn check_path(path: &VelocityPath, grid: &TimeGrid, table: &ModeTable) -> Result<()> {
    if path.horizon < grid.t_final() {
        return Err(Error::Domain(format!(
            "velocity path horizon {} is shorter than T = {}",
            path.horizon,
            grid.t_final()
        )));
    }
    grid.validate_resolution(table.radius(), chi_max(path, table.radius()), 1.0)
}

struct StepWeights {
    decay: Vec<f64>,
    w0: Vec<f64>,
    w1: Vec<f64>,
}

impl StepWeights {
    fn new(table: &ModeTable, h: f64) -> Self {
        let mut s = StepWeights { decay: Vec::new(), w0: Vec::new(), w1: Vec::new() };
        for k in table.modes() {
            let (d, a, b) = exp_trapezoid_weights(k.norm_sq() as f64, h);
            s.decay.push(d);
            s.w0.push(a);
            s.w1.push(b);
        }
        s
    }

    fn step(&self, y: &mut [Complex64], f0: &[Complex64], f1: &[Complex64]) {
        for i in 0..y.len() {
            y[i] = y[i] * self.decay[i] + f0[i] * self.w0[i] + f1[i] * self.w1[i];
        }
    }
}

fn velocity_fields(path: &VelocityPath, table: &Arc<ModeTable>, grid: &TimeGrid) -> Vec<VectorField> {
    let procs = path.processes(table);
    (0..=grid.steps()).map(|i| path.field_at(table, &procs, grid.node(i))).collect()
}

/// `ϑ(T) = ∫_0^T e^{(T-s)Δ} u(s)·∇Δ^{-1}g ds` on the whole lattice.
pub fn duhamel_first_iterate(path: &VelocityPath, gamma: &SpectralField, grid: &TimeGrid) -> Result<SpectralField> {
    duhamel_first_iterate_observed(path, gamma, grid, |_, _, _| {})
}

/// As [`duhamel_first_iterate`], calling `observe(i, t_i, ϑ(t_i))` at every
/// grid node including `t = 0`.
pub fn duhamel_first_iterate_observed(
    path: &VelocityPath,
    gamma: &SpectralField,
    grid: &TimeGrid,
    mut observe: impl FnMut(usize, f64, &SpectralField),
) -> Result<SpectralField> {
    let table = gamma.table();
    check_path(path, grid, table)?;
    let weights = StepWeights::new(table, grid.dt());
    let procs = path.processes(table);
    let forcing = |t: f64| -> Result<Vec<Complex64>> {
        let u = path.field_at(table, &procs, t);
        Ok(advect_with(&u, gamma, AdvectMethod::Auto)?.coefficients().to_vec())
    };
    let mut y = SpectralField::zeros(table);
    observe(0, 0.0, &y);
    let mut f0 = forcing(0.0)?;
    for i in 0..grid.steps() {
        let f1 = forcing(grid.node(i + 1))?;
        weights.step(y.coefficients_mut(), &f0, &f1);
        observe(i + 1, grid.node(i + 1), &y);
        f0 = f1;
    }
    Ok(y)
}

/// The same integral for a single mode `k`, drawing only the velocity modes
/// `k - j` for `j` in the support of `γ` (restricted to `|k - j| <= N`).
pub fn duhamel_first_iterate_mode(
    path: &VelocityPath,
    k: WaveVector,
    support: &[(WaveVector, Complex64)],
    lattice: Lattice,
    grid: &TimeGrid,
) -> Result<Complex64> {
    if !lattice.contains(k) {
        return Err(Error::ModeOutsideLattice(k));
    }
    grid.validate_resolution(lattice.radius(), chi_max(path, lattice.radius()), 1.0)?;
    if path.horizon < grid.t_final() {
        return Err(Error::Domain("velocity path horizon is shorter than T".into()));
    }
    let mut procs: HashMap<WaveVector, ModeProcess> = HashMap::new();
    for &(j, _) in support {
        let m = k - j;
        if m.is_zero() || !lattice.contains(m) {
            continue;
        }
        let rep = if m.in_half_space() { m } else { -m };
        procs.entry(rep).or_insert_with(|| path.mode(rep));
    }
    let forcing = |t: f64| -> Complex64 {
        // F_k = i Σ_j (u_{k-j}·j) γ_j = |k|² × (first iterate with frozen u(t))
        let v = first_iterate_mode(k, support, |m| {
            if let Some(p) = procs.get(&m) {
                path.velocity(p, t)
            } else if let Some(p) = procs.get(&-m) {
                let v = path.velocity(p, t);
                [v[0].conj(), v[1].conj(), v[2].conj()]
            } else {
                [ZERO; 3]
            }
        });
        v * k.norm_sq() as f64
    };
    let (decay, w0, w1) = exp_trapezoid_weights(k.norm_sq() as f64, grid.dt());
    let mut y = ZERO;
    let mut f0 = forcing(0.0);
    for i in 0..grid.steps() {
        let f1 = forcing(grid.node(i + 1));
        y = y * decay + f0 * w0 + f1 * w1;
        f0 = f1;
    }
    Ok(y)
}

/// `8π³ c₁ U² Ξ² Σ'_k |k|^{2β+1}` over the full lattice, `U = max(U_e, U_f)`.
pub fn time_convergence_criterion(params: &VelocityParams, lattice: Lattice, c1: f64) -> f64 {
    let s = 2.0 * compensated_sum(lattice.half_space_modes().map(|k| k.norm().powf(2.0 * params.beta + 1.0)));
    8.0 * PI.powi(3) * c1 * params.u_max().powi(2) * params.law.xi().powi(2) * s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDiagnostics {
    pub iterations: usize,
    pub increments: Vec<f64>,
    pub criterion: f64,
    pub converged: bool,
}

/// Iterates the Duhamel map over the whole path until the largest nodal L²
/// increment is below `tol`; returns `θ(T)`.
pub fn duhamel_fixed_point(
    path: &VelocityPath,
    gamma: &SpectralField,
    grid: &TimeGrid,
    tol: f64,
    max_iter: usize,
) -> Result<(SpectralField, TimeDiagnostics)> {
    let table = gamma.table();
    check_path(path, grid, table)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let criterion = time_convergence_criterion(&path.params, table.lattice(), 1.0);
    let weights = StepWeights::new(table, grid.dt());
    let us = velocity_fields(path, table, grid);
    let minus_gamma = gamma.scale(-1.0);
    let mut theta: Vec<SpectralField> = vec![minus_gamma.clone(); grid.steps() + 1];
    let mut increments = Vec::new();
    while increments.len() < max_iter {
        let forcing: Vec<SpectralField> =
            us.iter().zip(&theta).map(|(u, th)| advect_with(u, th, AdvectMethod::Auto)).collect::<Result<_>>()?;
        let mut y = vec![ZERO; table.len()];
        let mut next = Vec::with_capacity(theta.len());
        next.push(minus_gamma.clone());
        for i in 0..grid.steps() {
            weights.step(&mut y, forcing[i].coefficients(), forcing[i + 1].coefficients());
            let c: Vec<Complex64> = minus_gamma.coefficients().iter().zip(&y).map(|(g, v)| g - v).collect();
            next.push(SpectralField::from_coefficients(table, c)?);
        }
        let inc = next.iter().zip(&theta).map(|(a, b)| (a - b).l2_norm_sq().sqrt()).fold(0.0, f64::max);
        theta = next;
        increments.push(inc);
        if inc < tol {
            let diag = TimeDiagnostics { iterations: increments.len(), increments, criterion, converged: true };
            return Ok((theta.pop().expect("non-empty"), diag));
        }
        if !inc.is_finite() || inc > 1e150 {
            break;
        }
    }
    Err(Error::TimeNotConverged { iterations: increments.len(), criterion, increments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::static_solver::{first_iterate, fixed_point_solve};
    use crate::synthesis::{
        synth_source, synth_velocity_static, CircularLaw, CorrelationKind, CorrelationModel, SourceSpec, StreamKey,
    };

    fn setup(n: u32) -> (Arc<ModeTable>, SpectralField) {
        let t = ModeTable::new(Lattice::new(n).unwrap());
        let spec = SourceSpec::finite(
            vec![
                (WaveVector::new(1, 0, 0), Complex64::new(0.5, 0.2)),
                (WaveVector::new(0, 1, 1), Complex64::new(-0.3, 0.4)),
            ],
            2.0,
        );
        let g = synth_source(&spec, &t, StreamKey::new(0, 0)).unwrap();
        (t, g)
    }

    fn params(u: f64) -> VelocityParams {
        VelocityParams::isotropic(-2.5, u, CircularLaw::unit())
    }

    #[test]
    fn observer_sees_every_node() {
        let (_, g) = setup(3);
        let grid = TimeGrid::with_steps(0.2, 16).unwrap();
        let path = VelocityPath::new(params(1.0), CorrelationModel::frozen(), StreamKey::new(1, 0), 0.2).unwrap();
        let mut seen = Vec::new();
        let last = duhamel_first_iterate_observed(&path, &g, &grid, |i, t, f| seen.push((i, t, f.l2_norm_sq()))).unwrap();
        assert_eq!(seen.len(), 17);
        assert_eq!(seen[0].2, 0.0);
        assert_eq!(seen[16].2, last.l2_norm_sq());
        assert!(seen.windows(2).all(|w| w[1].1 > w[0].1));
    }

    #[test]
    fn frozen_velocity_has_closed_form() {
        let (t, g) = setup(3);
        let key = StreamKey::new(4, 0);
        let grid = TimeGrid::with_steps(0.7, 200).unwrap();
        let path = VelocityPath::new(params(1.0), CorrelationModel::frozen(), key, 0.7).unwrap();
        let got = duhamel_first_iterate(&path, &g, &grid).unwrap();
        let stat = first_iterate(&synth_velocity_static(&params(1.0), &t, key).unwrap().u, &g).unwrap();
        for ((k, a), b) in got.iter().zip(stat.coefficients()) {
            let want = b * -(-(k.norm_sq() as f64) * 0.7).exp_m1();
            assert!((a - want).norm() < 1e-13 * (1.0 + want.norm()), "{k}");
        }
    }

    #[test]
    fn mode_path_matches_field_path() {
        let (t, g) = setup(4);
        let corr = CorrelationModel::new(CorrelationKind::GaussianPhaseDrift, 3.0, 0.0).unwrap();
        let path = VelocityPath::new(params(1.0), corr, StreamKey::new(2, 5), 0.5).unwrap();
        let grid = TimeGrid::with_steps(0.5, 40).unwrap();
        let field = duhamel_first_iterate(&path, &g, &grid).unwrap();
        let support = crate::spectral::full_support(&g);
        for k in [WaveVector::new(2, 1, 0), WaveVector::new(-1, 0, 3), WaveVector::new(0, 0, 1)] {
            let m = duhamel_first_iterate_mode(&path, k, &support, t.lattice(), &grid).unwrap();
            assert!((m - field.get(k)).norm() < 1e-14, "{k}: {m} vs {}", field.get(k));
        }
    }

    #[test]
    fn second_order_in_dt() {
        let (t, g) = setup(3);
        let corr = CorrelationModel::new(CorrelationKind::GaussianPhaseDrift, 4.0, 0.0).unwrap();
        let path = VelocityPath::new(params(1.0), corr, StreamKey::new(7, 0), 1.0).unwrap();
        let support = crate::spectral::full_support(&g);
        let k = WaveVector::new(1, 1, 0);
        let run = |n| {
            duhamel_first_iterate_mode(&path, k, &support, t.lattice(), &TimeGrid::with_steps(1.0, n).unwrap()).unwrap()
        };
        let (a, b, c) = (run(40), run(80), run(160));
        let order = ((a - b).norm() / (b - c).norm()).log2();
        assert!(order > 1.9, "observed order {order}");
    }

    #[test]
    fn zero_source_stays_zero() {
        let (t, _) = setup(3);
        let path = VelocityPath::new(params(1.0), CorrelationModel::frozen(), StreamKey::new(1, 1), 1.0).unwrap();
        let out = duhamel_first_iterate(&path, &SpectralField::zeros(&t), &TimeGrid::with_steps(1.0, 20).unwrap()).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn grid_violations_are_rejected() {
        let (_, g) = setup(4);
        let path = VelocityPath::new(params(1.0), CorrelationModel::frozen(), StreamKey::new(1, 1), 1.0).unwrap();
        assert!(duhamel_first_iterate(&path, &g, &TimeGrid::with_steps(1.0, 10).unwrap()).is_err());
        let short = VelocityPath::new(params(1.0), CorrelationModel::frozen(), StreamKey::new(1, 1), 0.5).unwrap();
        assert!(duhamel_first_iterate(&short, &g, &TimeGrid::with_steps(1.0, 100).unwrap()).is_err());
    }

    #[test]
    fn zero_velocity_fixed_point_is_the_leading_term() {
        let (_, g) = setup(3);
        let path = VelocityPath::new(params(0.0), CorrelationModel::frozen(), StreamKey::new(1, 1), 1.0).unwrap();
        let (theta, diag) = duhamel_fixed_point(&path, &g, &TimeGrid::with_steps(1.0, 20).unwrap(), 1e-14, 10).unwrap();
        assert_eq!(theta, g.scale(-1.0));
        assert_eq!(diag.iterations, 1);
        assert_eq!(diag.criterion, 0.0);
    }

    #[test]
    fn frozen_long_time_matches_static_solution() {
        let (t, g) = setup(3);
        let key = StreamKey::new(3, 0);
        let p = params(0.2);
        let horizon = 12.0;
        let path = VelocityPath::new(p, CorrelationModel::frozen(), key, horizon).unwrap();
        let grid = TimeGrid::with_steps(horizon, 800).unwrap();
        let (theta, diag) = duhamel_fixed_point(&path, &g, &grid, 1e-12, 100).unwrap();
        assert!(diag.converged);
        let u = synth_velocity_static(&p, &t, key).unwrap().u;
        let (stat, _) = fixed_point_solve(&u, &g, 1e-14, 200).unwrap();
        // slowest mode decays like e^{-T}; trapezoid error is O(dt²) on the transient
        let d = (&theta - &stat).max_abs();
        assert!(d < (-horizon).exp() + 1e-8, "{d}");
    }
}
