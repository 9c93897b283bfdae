//! Least-squares power-law fits with bootstrap intervals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthesis::{Component, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% percentile bootstrap interval of the slope.
    pub ci: (f64, f64),
}

fn ls_line(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if !(sxx > 1e-300) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Percentile `q` of sorted data (linear interpolation).
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Fit `y = slope·x + intercept` to `(x, y)` points (typically logarithms).
pub fn slope_fit(points: &[(f64, f64)], seed: u64) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!("slope fit needs at least 3 points, got {}", points.len())));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let (slope, intercept) =
        ls_line(&x, &y).ok_or_else(|| Error::InsufficientData("degenerate abscissae in slope fit".into()))?;
    let key = StreamKey::new(seed, 0);
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for b in 0..BOOTSTRAP_RESAMPLES as u64 {
        let mut rng = key.stream(Component::Bootstrap, b);
        let idx: Vec<usize> = (0..x.len()).map(|_| (rng.uniform() * x.len() as f64) as usize).collect();
        let bx: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
        let by: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        if let Some((s, _)) = ls_line(&bx, &by) {
            slopes.push(s);
        }
    }
    slopes.sort_by(f64::total_cmp);
    let ci = if slopes.is_empty() { (slope, slope) } else { (percentile(&slopes, 0.025), percentile(&slopes, 0.975)) };
    Ok(SlopeFit { slope, intercept, ci })
}

/// Unbiased sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = crate::numeric::pairwise_sum(values) / n;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    crate::numeric::pairwise_sum(&dev) / (n - 1.0)
}

/// Bootstrap standard error of the unbiased sample variance.
pub fn bootstrap_variance_stderr(values: &[f64], resamples: usize, seed: u64) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InsufficientData("variance needs at least 2 values".into()));
    }
    let key = StreamKey::new(seed, 1);
    let mut vars = Vec::with_capacity(resamples);
    let mut buf = vec![0.0; values.len()];
    for b in 0..resamples as u64 {
        let mut rng = key.stream(Component::Bootstrap, b);
        for slot in buf.iter_mut() {
            *slot = values[(rng.uniform() * values.len() as f64) as usize];
        }
        vars.push(sample_variance(&buf));
    }
    Ok(sample_variance(&vars).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaThetaFit {
    pub u_slope: f64,
    pub kappa_slope: f64,
    pub intercept: f64,
}

/// Joint fit `log v = c + a log U + b log κ` over `(U, κ, v)` triples.
pub fn delta_theta_check(samples: &[(f64, f64, f64)]) -> Result<DeltaThetaFit> {
    let distinct = |f: fn(&(f64, f64, f64)) -> f64| {
        let mut v: Vec<f64> = samples.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    };
    if distinct(|s| s.0) < 3 || distinct(|s| s.1) < 3 {
        return Err(Error::InsufficientData("need at least 3 values of U and 3 dyads".into()));
    }
    if samples.iter().any(|s| !(s.2 > 0.0) || !(s.0 > 0.0) || !(s.1 > 0.0)) {
        return Err(Error::InsufficientData("remainder norms and U, kappa must be positive".into()));
    }
    let n = samples.len();
    let a = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => samples[i].0.ln(),
        _ => samples[i].1.ln(),
    });
    let b = DVector::from_iterator(n, samples.iter().map(|s| s.2.ln()));
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::InsufficientData(format!("least squares failed: {e}")))?;
    Ok(DeltaThetaFit { intercept: sol[0], u_slope: sol[1], kappa_slope: sol[2] })
}
