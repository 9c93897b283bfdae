//! Monte Carlo ensembles over independent velocity (and source) realizations.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::fit::{sample_variance, slope_fit};
use crate::analysis::predict::{
    bht_main_term_anisotropic, expected_dyadic_spectrum, remainder_bound, variance_bound, BoundConstants, MainTermNorm,
};
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;
use crate::spectral::{Lattice, ModeTable, ShellBounds};
use crate::static_solver::{default_tolerance, first_iterate, fixed_point_solve, remainder_field};
use crate::synthesis::{
    energy_shell_mean_exact, energy_shell_var_exact, shell_energy, synth_source, synth_velocity_static, SourceSpec,
    StreamKey, VelocityParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub radius: u32,
    pub params: VelocityParams,
    pub source: SourceSpec,
    pub samples: usize,
    pub seed: u64,
    /// Dyad lower edges; empty means every dyad of the lattice.
    pub kappas: Vec<f64>,
    pub constants: BoundConstants,
    /// Also run the full fixed-point solve and record `‖P δθ‖²`.
    pub solve_full: bool,
    pub max_iter: usize,
}

impl EnsembleConfig {
    pub fn new(radius: u32, params: VelocityParams, source: SourceSpec, samples: usize, seed: u64) -> Self {
        EnsembleConfig {
            radius,
            params,
            source,
            samples,
            seed,
            kappas: Vec::new(),
            constants: BoundConstants::default(),
            solve_full: false,
            max_iter: crate::static_solver::DEFAULT_MAX_ITER,
        }
    }

    pub fn dyads(&self) -> Result<Vec<f64>> {
        let lattice = Lattice::new(self.radius)?;
        if self.kappas.is_empty() {
            return Ok(lattice.dyads());
        }
        for &k in &self.kappas {
            if !(k > 0.0) || 2.0 * k > self.radius as f64 {
                return Err(Error::Domain(format!("dyad kappa = {k} needs 2 kappa <= N = {}", self.radius)));
            }
        }
        Ok(self.kappas.clone())
    }
}

/// Per-sample dyad observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleObservation {
    pub vartheta: Vec<f64>,
    pub energy: Vec<f64>,
    pub delta_theta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadRow {
    pub kappa: f64,
    pub observed_mean: f64,
    pub observed_var: f64,
    pub stderr: f64,
    /// Main term with the projected source norm.
    pub predicted_main: f64,
    pub remainder_bound: f64,
    pub variance_bound: Option<f64>,
    pub energy_mean: f64,
    /// `observed_mean / energy_mean`.
    pub ratio: f64,
    pub predicted_exact: f64,
    pub predicted_main_projected: f64,
    pub predicted_main_full: f64,
    pub energy_observed_mean: f64,
    pub energy_var_exact: f64,
    pub delta_theta_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: u32,
    pub beta: f64,
    #[serde(rename = "Ue")]
    pub ue: f64,
    #[serde(rename = "Uf")]
    pub uf: f64,
    pub varsigma: f64,
    pub source_digest: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<DyadRow>,
    /// Fitted slope of `log ratio` against `log κ` (when at least 3 dyads).
    pub ratio_log_slope: Option<f64>,
}

pub const REPORT_CSV_HEADER: &str =
    "kappa,observed_mean,observed_var,stderr,predicted_main,remainder_bound,variance_bound,energy_mean,ratio";

impl SpectrumReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{REPORT_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                r.kappa,
                r.observed_mean,
                r.observed_var,
                r.stderr,
                r.predicted_main,
                r.remainder_bound,
                r.variance_bound.unwrap_or(f64::NAN),
                r.energy_mean,
                r.ratio
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Domain(format!("report serialization: {e}")))
    }
}

/// One realization: `u`, `γ` (randomized if requested), `ϑ`, and optionally `θ`.
pub fn observe_sample(cfg: &EnsembleConfig, table: &std::sync::Arc<ModeTable>, kappas: &[f64], sample: u64) -> Result<SampleObservation> {
    let key = StreamKey::new(cfg.seed, sample);
    let vm = synth_velocity_static(&cfg.params, table, key)?;
    let gamma = synth_source(&cfg.source, table, key)?;
    let vt = first_iterate(&vm.u, &gamma)?;
    let vartheta = kappas.iter().map(|&k| {
        let b = ShellBounds::dyad(k);
        vt.shell_norm_sq(b.lo, b.hi)
    });
    let energy = kappas.iter().map(|&k| shell_energy(&vm.u, k)).collect();
    let delta_theta = if cfg.solve_full {
        let (theta, _) = fixed_point_solve(&vm.u, &gamma, default_tolerance(&gamma), cfg.max_iter)?;
        let dt = remainder_field(&theta, &vt, &gamma)?;
        Some(
            kappas
                .iter()
                .map(|&k| {
                    let b = ShellBounds::dyad(k);
                    dt.shell_norm_sq(b.lo, b.hi)
                })
                .collect(),
        )
    } else {
        None
    };
    Ok(SampleObservation { vartheta: vartheta.collect(), energy, delta_theta })
}

/// Runs `M` samples on a pool of `workers` threads. Observations are gathered
/// in sample order and reduced with a fixed pairwise tree, so the report does
/// not depend on the worker count.
pub fn ensemble_observations(cfg: &EnsembleConfig, workers: usize) -> Result<(Vec<f64>, Vec<SampleObservation>)> {
    if cfg.samples < 2 {
        return Err(Error::InvalidParameter("an ensemble needs M >= 2".into()));
    }
    cfg.params.validate()?;
    cfg.source.validate()?;
    let kappas = cfg.dyads()?;
    let table = ModeTable::new(Lattice::new(cfg.radius)?);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("worker pool: {e}")))?;
    let obs = pool.install(|| {
        (0..cfg.samples as u64)
            .into_par_iter()
            .map(|s| {
                observe_sample(cfg, &table, &kappas, s).map_err(|e| Error::Sample {
                    sample: s,
                    seed: cfg.seed,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((kappas, obs))
}

pub fn ensemble_run(cfg: &EnsembleConfig, workers: usize) -> Result<SpectrumReport> {
    let (kappas, obs) = ensemble_observations(cfg, workers)?;
    build_report(cfg, &kappas, &obs)
}

pub fn build_report(cfg: &EnsembleConfig, kappas: &[f64], obs: &[SampleObservation]) -> Result<SpectrumReport> {
    let lattice = Lattice::new(cfg.radius)?;
    let support = cfg.source.support(lattice)?;
    let m = obs.len() as f64;
    let mut rows = Vec::with_capacity(kappas.len());
    for (d, &kappa) in kappas.iter().enumerate() {
        let xs: Vec<f64> = obs.iter().map(|o| o.vartheta[d]).collect();
        let es: Vec<f64> = obs.iter().map(|o| o.energy[d]).collect();
        let mean = pairwise_sum(&xs) / m;
        let var = sample_variance(&xs);
        let energy_mean = energy_shell_mean_exact(&cfg.params, lattice, kappa)?;
        let proj = bht_main_term_anisotropic(kappa, &cfg.params, &support, MainTermNorm::Projected);
        let full = bht_main_term_anisotropic(kappa, &cfg.params, &support, MainTermNorm::Full);
        let delta_theta_mean = obs[0].delta_theta.as_ref().map(|_| {
            let v: Vec<f64> = obs.iter().map(|o| o.delta_theta.as_ref().expect("uniform")[d]).collect();
            pairwise_sum(&v) / m
        });
        rows.push(DyadRow {
            kappa,
            observed_mean: mean,
            observed_var: var,
            stderr: (var / m).sqrt(),
            predicted_main: proj,
            remainder_bound: remainder_bound(kappa, &cfg.params, &support, cfg.source.c_g, cfg.source.alpha, cfg.constants),
            variance_bound: variance_bound(kappa, &cfg.params, &support, cfg.source.c_g).ok(),
            energy_mean,
            ratio: mean / energy_mean,
            predicted_exact: expected_dyadic_spectrum(kappa, &cfg.params, &support, lattice)?,
            predicted_main_projected: proj,
            predicted_main_full: full,
            energy_observed_mean: pairwise_sum(&es) / m,
            energy_var_exact: energy_shell_var_exact(&cfg.params, lattice, kappa)?,
            delta_theta_mean,
        });
    }
    let ratio_log_slope = if rows.len() >= 3 && rows.iter().all(|r| r.ratio > 0.0) {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.kappa.ln(), r.ratio.ln())).collect();
        slope_fit(&pts, cfg.seed).ok().map(|f| f.slope)
    } else {
        None
    };
    Ok(SpectrumReport {
        metadata: ReportMetadata {
            seed: cfg.seed,
            m: obs.len(),
            n: cfg.radius,
            beta: cfg.params.beta,
            ue: cfg.params.ue,
            uf: cfg.params.uf,
            varsigma: cfg.params.law.fourth_moment(),
            source_digest: cfg.source.digest(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        rows,
        ratio_log_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::CircularLaw;
    use num_complex::Complex64;
    use crate::spectral::WaveVector;

    fn cfg(m: usize) -> EnsembleConfig {
        let source = SourceSpec::finite(
            vec![(WaveVector::new(1, 0, 0), Complex64::new(0.5, 0.0)), (WaveVector::new(0, 1, 1), Complex64::new(0.0, 0.3))],
            2.0,
        );
        EnsembleConfig::new(8, VelocityParams::isotropic(-2.5, 1.0, CircularLaw::unit()), source, m, 77)
    }

    #[test]
    fn two_samples_bracket_their_mean() {
        let (_, obs) = ensemble_observations(&cfg(2), 1).unwrap();
        let rep = ensemble_run(&cfg(2), 1).unwrap();
        for (d, row) in rep.rows.iter().enumerate() {
            let (a, b) = (obs[0].vartheta[d], obs[1].vartheta[d]);
            assert_ne!(a, b);
            assert!(row.observed_mean >= a.min(b) && row.observed_mean <= a.max(b));
        }
    }

    #[test]
    fn report_is_independent_of_worker_count() {
        let a = ensemble_run(&cfg(12), 1).unwrap();
        let b = ensemble_run(&cfg(12), 3).unwrap();
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ca).unwrap();
        b.write_csv(&mut cb).unwrap();
        assert_eq!(ca, cb);
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn single_sample_is_rejected() {
        assert!(ensemble_run(&cfg(1), 1).is_err());
    }

    #[test]
    fn csv_header_and_width() {
        let rep = ensemble_run(&cfg(3), 1).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), REPORT_CSV_HEADER);
        assert!(lines.all(|l| l.split(',').count() == 9));
    }
}
