//! Predictors, ensemble statistics, and fits.

pub mod ensemble;
pub mod fit;
pub mod predict;

pub use ensemble::{
    build_report, ensemble_observations, ensemble_run, observe_sample, DyadRow, EnsembleConfig, ReportMetadata,
    SampleObservation, SpectrumReport, REPORT_CSV_HEADER,
};
pub use fit::{bootstrap_variance_stderr, delta_theta_check, sample_variance, slope_fit, DeltaThetaFit, SlopeFit};
pub use predict::{
    bht_main_term, bht_main_term_anisotropic, expected_dyadic_spectrum, expected_first_iterate_mode,
    expected_shell_spectrum, interaction_terms, projected_grad_inv_sq, remainder_bound, variance_bound,
    BoundConstants, MainTermNorm, SourceNorms,
};
