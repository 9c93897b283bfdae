//! Small summation helpers shared by norms and ensemble reductions.

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Pairwise (tree) sum in index order; the association pattern depends only
/// on the slice length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// `(2^s - 1) / s`, continuous at `s = 0` where it equals `ln 2`.
pub fn i2(s: f64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    if s.abs() < 1e-12 {
        return ln2 * (1.0 + 0.5 * s * ln2);
    }
    (s * ln2).exp_m1() / s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i2_values() {
        assert_eq!(i2(1.0), 1.0);
        assert!((i2(-2.0) - 0.375).abs() < 1e-15);
        assert!((i2(1e-9) - std::f64::consts::LN_2).abs() < 1e-9);
        assert!((i2(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 5050.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
