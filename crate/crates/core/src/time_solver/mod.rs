//! Time-dependent problem: Duhamel iteration along sampled velocity paths and
//! the long-time correlation integrals.

pub mod duhamel;
pub mod grid;
pub mod limit;
pub mod quadrature;

pub use duhamel::{
    duhamel_first_iterate, duhamel_first_iterate_mode, duhamel_first_iterate_observed, duhamel_fixed_point,
    time_convergence_criterion, TimeDiagnostics,
};
pub use grid::TimeGrid;
pub use limit::{
    bracket, bracket_quadrature, correlation_series, expected_time_spectrum, limit_law_row, mode_double_integral,
    LimitLawRow, DEFAULT_SERIES_ORDER,
};
pub use quadrature::integrate;
