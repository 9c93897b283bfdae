//! The double time integral
//! `I(t) = ∫_0^t∫_0^t e^{(s+r-2t)a} Φ(χ|s-r|) dr ds`, its `t → ∞` limit, and
//! the Taylor-type expansion of `a² lim I` in `χ/a`.
//!
//! With `w = s - r` the integral reduces to
//! `I(t) = a^{-1} ∫_0^t Φ(χw) e^{-aw} (1 - e^{-2a(t-w)}) dw`,
//! and after `x = aw`, `a² I(t) = ∫_0^{at} Φ(x χ/a) e^{-x} (1 - e^{-2(at-x)}) dx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Lattice, WaveVector};
use crate::synthesis::{CorrelationModel, VelocityParams};
use crate::time_solver::quadrature::integrate;

/// Beyond `x = X_CUT` the integrands are below `e^{-X_CUT}` in absolute value.
const X_CUT: f64 = 40.0;

fn check_rates(a: f64, chi: f64) -> Result<()> {
    if !(a > 0.0) || !(chi >= 0.0) || !a.is_finite() || !chi.is_finite() {
        return Err(Error::InvalidParameter(format!("need a > 0 and chi >= 0, got a = {a}, chi = {chi}")));
    }
    Ok(())
}

/// `I(t)` to absolute tolerance `1e-12`.
pub fn mode_double_integral(a: f64, chi: f64, model: &CorrelationModel, t: f64) -> Result<f64> {
    check_rates(a, chi)?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter("t must be positive".into()));
    }
    let lam = chi / a;
    let at = a * t;
    let upper = at.min(X_CUT);
    let tail = if at > X_CUT { (-X_CUT).exp() } else { 0.0 };
    let tol = 1e-12 * a * a;
    let (v, err) = integrate(|x| model.phi(lam * x) * (-x).exp() * -(-2.0 * (at - x)).exp_m1(), 0.0, upper, 0.5 * tol)?;
    if err + tail > tol {
        return Err(Error::Quadrature { value: v / (a * a), error_estimate: (err + tail) / (a * a) });
    }
    Ok(v / (a * a))
}

/// `a² lim_{t→∞} I(t) = ∫_0^∞ Φ(x χ/a) e^{-x} dx`, with its error estimate.
pub fn bracket_quadrature(a: f64, chi: f64, model: &CorrelationModel) -> Result<(f64, f64)> {
    check_rates(a, chi)?;
    let lam = chi / a;
    let (v, err) = integrate(|x| model.phi(lam * x) * (-x).exp(), 0.0, X_CUT, 1e-14)?;
    Ok((v, err + (-X_CUT).exp()))
}

/// `1 + Σ_{m=1}^{n-1} (χ/a)^m Φ^{(m)}(0) + (χ/a)^{n-1} ∫_0^∞ e^{-(a/χ)s} Φ^{(n)}(s) ds`,
/// which equals [`bracket_quadrature`] for `Φ ∈ C^n`.
pub fn correlation_series(a: f64, chi: f64, model: &CorrelationModel, n: u32) -> Result<f64> {
    check_rates(a, chi)?;
    if n == 0 {
        return Err(Error::InvalidParameter("series order n must be at least 1".into()));
    }
    if !model.is_smooth() && n >= 2 {
        return Err(Error::Hypothesis(format!(
            "Φ ∈ C^n fails: the {:?} correlation is not differentiable at 0",
            model.kind
        )));
    }
    if chi == 0.0 {
        return Ok(1.0);
    }
    let lam = chi / a;
    let mut sum = 1.0;
    for m in 1..n {
        sum += lam.powi(m as i32) * model.derivative_at_zero(m);
    }
    // ∫_0^∞ e^{-s/λ} Φ^{(n)}(s) ds = λ ∫_0^∞ e^{-x} Φ^{(n)}(λx) dx
    let (rem, _) = integrate(|x| (-x).exp() * model.derivative(n, lam * x), 0.0, X_CUT, 1e-14)?;
    Ok(sum + lam.powi(n as i32) * rem)
}

/// Default number of series terms.
pub const DEFAULT_SERIES_ORDER: u32 = 3;

/// Long-time bracket for a pair `(a, χ)`: the series when `Φ` is smooth,
/// otherwise the quadrature limit.
pub fn bracket(a: f64, chi: f64, model: &CorrelationModel, n: u32) -> Result<f64> {
    if model.is_smooth() {
        correlation_series(a, chi, model, n)
    } else {
        Ok(bracket_quadrature(a, chi, model)?.0)
    }
}

/// `lim_{t→∞} E|ϑ_k(t)|² = |k|^{-4} Σ_j w_{kj} · bracket(|k|², χ_{k-j})`.
pub fn expected_time_spectrum(
    k: WaveVector,
    params: &VelocityParams,
    support: &[(WaveVector, num_complex::Complex64)],
    lattice: Lattice,
    model: &CorrelationModel,
    n: u32,
) -> Result<f64> {
    let a = k.norm_sq() as f64;
    let terms = crate::analysis::interaction_terms(k, params, support, lattice);
    let mut total = 0.0;
    for (m, w) in terms {
        total += w * bracket(a, model.rate(m), model, n)?;
    }
    Ok(total / (a * a))
}

/// Row of the limit-law report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLawRow {
    pub k: WaveVector,
    pub a: f64,
    pub chi: f64,
    pub bracket_series: f64,
    pub bracket_quadrature: f64,
    pub abs_diff: f64,
}

pub fn limit_law_row(k: WaveVector, chi: f64, model: &CorrelationModel, n: u32) -> Result<LimitLawRow> {
    let a = k.norm_sq() as f64;
    let q = bracket_quadrature(a, chi, model)?.0;
    let s = bracket(a, chi, model, n)?;
    Ok(LimitLawRow { k, a, chi, bracket_series: s, bracket_quadrature: q, abs_diff: (s - q).abs() })
}
