//! Subcommand implementations. Each writes its artifacts through [`Outputs`]
//! and returns a one-line summary.

use std::sync::Arc;

use serde::Serialize;

use bhtlab::analysis::{
    delta_theta_check, ensemble_run, expected_first_iterate_mode, slope_fit, BoundConstants, EnsembleConfig,
    SpectrumReport,
};
use bhtlab::spectral::{Lattice, ModeTable, ShellBounds, SpectralField, WaveVector};
use bhtlab::static_solver::{
    contraction_estimate, dense_oracle_solve, first_iterate, fixed_point_solve, remainder_field, ContractionEstimate,
    SolveDiagnostics, DENSE_ORACLE_MAX_MODES,
};
use bhtlab::synthesis::{
    energy_shell_mean_exact, energy_shell_var_exact, shell_energy, synth_source, synth_velocity_static, StreamKey,
    VelocityParams, VelocityPath,
};
use bhtlab::time_solver::{
    duhamel_first_iterate_observed, duhamel_fixed_point, expected_time_spectrum, limit_law_row,
    time_convergence_criterion, LimitLawRow, TimeDiagnostics, TimeGrid, DEFAULT_SERIES_ORDER,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Outputs;

/// Threshold for expectations in `verify`.
pub const MEAN_SIGMAS: f64 = 4.0;

fn field_csv(field: &SpectralField) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    field.write_csv(&mut buf)?;
    Ok(buf)
}

fn table_for(cfg: &RunConfig) -> Result<Arc<ModeTable>, CliError> {
    Ok(ModeTable::new(Lattice::new(cfg.lattice.n)?))
}

fn absolute_tol(cfg: &RunConfig, gamma: &SpectralField) -> f64 {
    let scale = gamma.l2_norm_sq().sqrt();
    cfg.run.tol * if scale > 0.0 { scale } else { 1.0 }
}

#[derive(Serialize)]
struct EnergyRow {
    kappa: f64,
    observed: f64,
    mean_exact: f64,
    var_exact: f64,
}

#[derive(Serialize)]
struct SynthSummary {
    seed: u64,
    modes: usize,
    max_relative_divergence: f64,
    source_digest: String,
    source_norm_sq: f64,
    energy: Vec<EnergyRow>,
}

pub fn synth(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let table = table_for(cfg)?;
    let key = StreamKey::new(cfg.run.seed, 0);
    let params = cfg.velocity_params()?;
    let spec = cfg.source_spec()?;
    let vm = synth_velocity_static(&params, &table, key)?;
    let gamma = synth_source(&spec, &table, key)?;
    let mut energy = Vec::new();
    for kappa in table.lattice().dyads() {
        energy.push(EnergyRow {
            kappa,
            observed: shell_energy(&vm.u, kappa),
            mean_exact: energy_shell_mean_exact(&params, table.lattice(), kappa)?,
            var_exact: energy_shell_var_exact(&params, table.lattice(), kappa)?,
        });
    }
    if cfg.wants("csv") {
        let mut buf = Vec::new();
        vm.write_csv(&mut buf)?;
        out.write("velocity.csv", &buf)?;
        out.write("source.csv", &field_csv(&gamma)?)?;
        let mut text = String::from("kappa,observed,mean_exact,var_exact\n");
        for r in &energy {
            text.push_str(&format!("{:?},{:?},{:?},{:?}\n", r.kappa, r.observed, r.mean_exact, r.var_exact));
        }
        out.write("energy.csv", text.as_bytes())?;
    }
    let summary = SynthSummary {
        seed: cfg.run.seed,
        modes: table.len(),
        max_relative_divergence: vm.u.max_relative_divergence(),
        source_digest: spec.digest(),
        source_norm_sq: gamma.l2_norm_sq(),
        energy,
    };
    if cfg.wants("json") {
        out.write_json("synth.json", &summary)?;
    }
    Ok(format!("synth: {} half-space modes, max |k·u|/(|k||u|) = {:.1e}", table.len(), summary.max_relative_divergence))
}

#[derive(Serialize)]
struct ShellRow {
    kappa: f64,
    theta: f64,
    vartheta: f64,
    delta_theta: f64,
}

#[derive(Serialize)]
struct StaticSummary {
    seed: u64,
    converged: bool,
    tolerance: f64,
    contraction: ContractionEstimate,
    diagnostics: SolveDiagnostics,
    oracle_discrepancy: Option<f64>,
    shells: Vec<ShellRow>,
}

pub fn static_solve(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let table = table_for(cfg)?;
    let key = StreamKey::new(cfg.run.seed, 0);
    let params = cfg.velocity_params()?;
    let spec = cfg.source_spec()?;
    let vm = synth_velocity_static(&params, &table, key)?;
    let gamma = synth_source(&spec, &table, key)?;
    let vartheta = first_iterate(&vm.u, &gamma)?;
    let contraction = contraction_estimate(params.beta, params.u_max(), params.law.xi(), spec.kappa_g, table.lattice());
    let tol = absolute_tol(cfg, &gamma);
    let (theta, diagnostics) = match fixed_point_solve(&vm.u, &gamma, tol, cfg.run.max_iter) {
        Ok(r) => r,
        Err(bhtlab::Error::NotConverged { diagnostics, .. }) => {
            let summary = StaticSummary {
                seed: cfg.run.seed,
                converged: false,
                tolerance: tol,
                contraction,
                diagnostics: (*diagnostics).clone(),
                oracle_discrepancy: None,
                shells: Vec::new(),
            };
            out.write_json("static.json", &summary)?;
            return Err(CliError::NonConvergence(format!(
                "static: Picard iteration did not converge in {} iterations (last increment {:.3e}, estimated ratio {:.3}, ε̂ = {:.3})",
                diagnostics.iterations,
                diagnostics.increment_norms.last().copied().unwrap_or(f64::NAN),
                diagnostics.estimated_ratio,
                contraction.epsilon
            )));
        }
        Err(e) => return Err(e.into()),
    };
    let delta = remainder_field(&theta, &vartheta, &gamma)?;
    let oracle_discrepancy = if table.len() <= DENSE_ORACLE_MAX_MODES {
        let dense = dense_oracle_solve(&vm.u, &gamma)?;
        Some((&theta - &dense).l2_norm_sq().sqrt())
    } else {
        None
    };
    let shells = table
        .lattice()
        .dyads()
        .into_iter()
        .map(|kappa| {
            let b = ShellBounds::dyad(kappa);
            ShellRow {
                kappa,
                theta: theta.shell_norm_sq(b.lo, b.hi),
                vartheta: vartheta.shell_norm_sq(b.lo, b.hi),
                delta_theta: delta.shell_norm_sq(b.lo, b.hi),
            }
        })
        .collect();
    if cfg.wants("csv") {
        out.write("theta.csv", &field_csv(&theta)?)?;
        out.write("vartheta.csv", &field_csv(&vartheta)?)?;
        out.write("delta_theta.csv", &field_csv(&delta)?)?;
    }
    let summary = StaticSummary {
        seed: cfg.run.seed,
        converged: true,
        tolerance: tol,
        contraction,
        diagnostics,
        oracle_discrepancy,
        shells,
    };
    if cfg.wants("json") {
        out.write_json("static.json", &summary)?;
    }
    Ok(format!(
        "static: converged in {} iterations, residual {:.2e}, ratio {:.3}, ε̂ = {:.3}",
        summary.diagnostics.iterations, summary.diagnostics.residual, summary.diagnostics.estimated_ratio, contraction.epsilon
    ))
}

/// `T / dt` steps, or the smallest step count meeting the stability limits when `dt = 0`.
pub fn time_grid(cfg: &RunConfig, chi_max: f64) -> Result<TimeGrid, CliError> {
    let n = cfg.lattice.n as f64;
    if cfg.run.dt > 0.0 {
        return Ok(TimeGrid::new(cfg.run.t, cfg.run.dt)?);
    }
    let mut h = 1.0 / (2.0 * n * n);
    if chi_max > 0.0 {
        h = h.min(1.0 / chi_max);
    }
    let steps = (cfg.run.t / h).ceil().max(1.0) as usize;
    Ok(TimeGrid::with_steps(cfg.run.t, steps)?)
}

#[derive(Serialize)]
struct LimitRow {
    #[serde(flatten)]
    row: LimitLawRow,
    expected_time_spectrum: f64,
    expected_static: f64,
}

#[derive(Serialize)]
struct LimitLaw {
    kind: bhtlab::synthesis::CorrelationKind,
    chi_coeff: f64,
    chi_power: f64,
    series_order: u32,
    rows: Vec<LimitRow>,
}

#[derive(Serialize)]
struct TimeSummary {
    seed: u64,
    t_final: f64,
    dt: f64,
    steps: usize,
    criterion: f64,
    full_solve: Option<TimeDiagnostics>,
}

pub fn time_solve(cfg: &RunConfig, out: &mut Outputs) -> Result<String, CliError> {
    let table = table_for(cfg)?;
    let lattice = table.lattice();
    let key = StreamKey::new(cfg.run.seed, 0);
    let params = cfg.velocity_params()?;
    let spec = cfg.source_spec()?;
    let model = cfg.correlation_model()?;
    let chi_max = model.rate_at_norm(1.0).max(model.rate_at_norm(cfg.lattice.n as f64));
    let grid = time_grid(cfg, chi_max)?;
    let path = VelocityPath::new(params, model, key, grid.t_final())?;
    let gamma = synth_source(&spec, &table, key)?;
    let kappas = lattice.dyads();

    let mut series = String::from("t,shell,kappa,value\n");
    duhamel_first_iterate_observed(&path, &gamma, &grid, |_, t, f| {
        for (s, &kappa) in kappas.iter().enumerate() {
            let b = ShellBounds::dyad(kappa);
            series.push_str(&format!("{:?},{},{:?},{:?}\n", t, s, kappa, f.shell_norm_sq(b.lo, b.hi)));
        }
    })?;

    let support = spec.support(lattice)?;
    let mut rows = Vec::new();
    for &kappa in &kappas {
        let k = WaveVector::new(kappa as i32, 0, 0);
        rows.push(LimitRow {
            row: limit_law_row(k, model.rate(k), &model, DEFAULT_SERIES_ORDER)?,
            expected_time_spectrum: expected_time_spectrum(k, &params, &support, lattice, &model, DEFAULT_SERIES_ORDER)?,
            expected_static: expected_first_iterate_mode(k, &params, &support, lattice),
        });
    }
    let limit = LimitLaw {
        kind: model.kind,
        chi_coeff: model.chi_coeff,
        chi_power: model.chi_power,
        series_order: DEFAULT_SERIES_ORDER,
        rows,
    };

    let mut summary = TimeSummary {
        seed: cfg.run.seed,
        t_final: grid.t_final(),
        dt: grid.dt(),
        steps: grid.steps(),
        criterion: time_convergence_criterion(&params, lattice, 1.0),
        full_solve: None,
    };
    if cfg.wants("csv") {
        out.write("timeseries.csv", series.as_bytes())?;
    }
    if cfg.wants("json") {
        out.write_json("limit_law.json", &limit)?;
    }
    if cfg.run.full_solve {
        match duhamel_fixed_point(&path, &gamma, &grid, absolute_tol(cfg, &gamma), cfg.run.max_iter) {
            Ok((theta, diag)) => {
                if cfg.wants("csv") {
                    out.write("theta_T.csv", &field_csv(&theta)?)?;
                }
                summary.full_solve = Some(diag);
            }
            Err(bhtlab::Error::TimeNotConverged { iterations, criterion, increments }) => {
                summary.full_solve = Some(TimeDiagnostics { iterations, increments, criterion, converged: false });
                out.write_json("time.json", &summary)?;
                return Err(CliError::NonConvergence(format!(
                    "time: Duhamel iteration did not converge in {iterations} iterations (H^1/2 criterion value {criterion:.3e})"
                )));
            }
            Err(e) => return Err(e.into()),
        }
    }
    if cfg.wants("json") {
        out.write_json("time.json", &summary)?;
    }
    Ok(format!(
        "time: {} steps of {:.3e} to T = {}, {} dyads recorded{}",
        grid.steps(),
        grid.dt(),
        grid.t_final(),
        kappas.len(),
        summary.full_solve.as_ref().map(|d| format!(", full solve in {} iterations", d.iterations)).unwrap_or_default()
    ))
}

fn ensemble_config(cfg: &RunConfig, params: VelocityParams) -> Result<EnsembleConfig, CliError> {
    let mut e = EnsembleConfig::new(cfg.lattice.n, params, cfg.source_spec()?, cfg.run.m, cfg.run.seed);
    e.kappas = cfg.run.kappas.clone();
    e.constants = BoundConstants { c_alpha_beta: cfg.bounds.c_alpha_beta, c_beta: cfg.bounds.c_beta };
    e.max_iter = cfg.run.max_iter;
    Ok(e)
}

fn report_csv(report: &SpectrumReport) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    Ok(buf)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub kappa: f64,
    pub quantity: &'static str,
    pub observed: f64,
    pub expected: f64,
    pub sigma: f64,
    pub z: f64,
    pub pass: bool,
}

fn check(kappa: f64, quantity: &'static str, observed: f64, expected: f64, sigma: f64) -> Check {
    let diff = (observed - expected).abs();
    let (z, pass) = if sigma > 0.0 {
        (diff / sigma, diff <= MEAN_SIGMAS * sigma)
    } else {
        // a degenerate ensemble must match to rounding
        (if diff == 0.0 { 0.0 } else { f64::INFINITY }, diff <= 1e-12 * expected.abs())
    };
    Check { kappa, quantity, observed, expected, sigma, z, pass }
}

/// 4σ checks of the dyad spectrum and shell energy against exact expectations.
pub fn verify_checks(report: &SpectrumReport) -> Vec<Check> {
    let m = report.metadata.m as f64;
    let mut out = Vec::new();
    for r in &report.rows {
        out.push(check(r.kappa, "tracer_dyad_mean", r.observed_mean, r.predicted_exact, r.stderr));
        out.push(check(r.kappa, "energy_dyad_mean", r.energy_observed_mean, r.energy_mean, (r.energy_var_exact / m).sqrt()));
    }
    out
}

pub fn verify(cfg: &RunConfig, workers: usize, out: &mut Outputs) -> Result<String, CliError> {
    let mut ecfg = ensemble_config(cfg, cfg.velocity_params()?)?;
    ecfg.solve_full = cfg.run.full_solve;
    let report = ensemble_run(&ecfg, workers)?;
    let checks = verify_checks(&report);
    if cfg.wants("csv") {
        out.write("report.csv", &report_csv(&report)?)?;
    }
    if cfg.wants("json") {
        out.write("report.json", format!("{}\n", report.to_json()?).as_bytes())?;
    }
    out.write_json("checks.json", &checks)?;
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{} at κ = {}: {:.2}σ", c.quantity, c.kappa, c.z))
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Statistical(failed.join("; ")));
    }
    Ok(format!(
        "verify: {} dyads, M = {}, all {} checks within {MEAN_SIGMAS}σ{}",
        report.rows.len(),
        report.metadata.m,
        checks.len(),
        report.ratio_log_slope.map(|s| format!(", ratio slope {s:.3}")).unwrap_or_default()
    ))
}

#[derive(Serialize)]
struct SweepFit {
    delta_theta: Option<bhtlab::analysis::DeltaThetaFit>,
    delta_theta_error: Option<String>,
    /// Slope of log(tracer/energy) against log κ for each amplitude.
    ratio_slopes: Vec<(f64, Option<f64>)>,
}

pub fn sweep(cfg: &RunConfig, workers: usize, out: &mut Outputs) -> Result<String, CliError> {
    let base = cfg.velocity_params()?;
    let mut csv = String::from("U,kappa,vartheta_mean,delta_theta_mean,energy_mean,ratio\n");
    let mut triples = Vec::new();
    let mut ratio_slopes = Vec::new();
    for &s in &cfg.sweep.u_scales {
        let params = VelocityParams { ue: base.ue * s, uf: base.uf * s, ..base };
        let mut ecfg = ensemble_config(cfg, params)?;
        ecfg.solve_full = true;
        let report = ensemble_run(&ecfg, workers)?;
        let u = params.u_max();
        for r in &report.rows {
            let dt = r.delta_theta_mean.unwrap_or(f64::NAN);
            csv.push_str(&format!("{:?},{:?},{:?},{:?},{:?},{:?}\n", u, r.kappa, r.observed_mean, dt, r.energy_mean, r.ratio));
            triples.push((u, r.kappa, dt));
        }
        let pts: Vec<(f64, f64)> = report.rows.iter().map(|r| (r.kappa.ln(), r.ratio.ln())).collect();
        ratio_slopes.push((u, slope_fit(&pts, cfg.run.seed).ok().map(|f| f.slope)));
    }
    let (delta_theta, delta_theta_error) = match delta_theta_check(&triples) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let fit = SweepFit { delta_theta, delta_theta_error, ratio_slopes };
    if cfg.wants("csv") {
        out.write("sweep.csv", csv.as_bytes())?;
    }
    out.write_json("fit.json", &fit)?;
    Ok(match fit.delta_theta {
        Some(f) => format!("sweep: {} amplitudes, U-slope {:.3}, κ-slope {:.3}", cfg.sweep.u_scales.len(), f.u_slope, f.kappa_slope),
        None => format!("sweep: {} amplitudes, no remainder fit ({})", cfg.sweep.u_scales.len(), fit.delta_theta_error.unwrap_or_default()),
    })
}
