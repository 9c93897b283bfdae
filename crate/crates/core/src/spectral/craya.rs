//! Craya–Herring frames: for each wave vector `k`, the orthonormal triple
//! `d = k/|k|`, `e ∝ k × ẑ`, `f ∝ k × (k × ẑ)`.
//!
//! On the vertical axis (`kx = ky = 0`) the cross products vanish and the
//! frame is taken as the spherical-coordinate limit at azimuth zero:
//! `e = (0, -1, 0)`, `f = (sign kz, 0, 0)`.

use crate::error::{Error, Result};
use crate::spectral::WaveVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrayaFrame {
    pub d: [f64; 3],
    pub e: [f64; 3],
    pub f: [f64; 3],
}

pub fn craya_basis(k: WaveVector) -> Result<CrayaFrame> {
    if k.is_zero() {
        return Err(Error::Domain("Craya-Herring frame undefined at k = 0".into()));
    }
    let [kx, ky, kz] = k.to_f64();
    let norm = k.norm();
    let d = [kx / norm, ky / norm, kz / norm];
    let h2 = k.horizontal_norm_sq();
    if h2 == 0 {
        let s = kz.signum();
        return Ok(CrayaFrame { d, e: [0.0, -1.0, 0.0], f: [s, 0.0, 0.0] });
    }
    let h = (h2 as f64).sqrt();
    let e = [ky / h, -kx / h, 0.0];
    let nh = norm * h;
    let f = [kx * kz / nh, ky * kz / nh, -(h2 as f64) / nh];
    Ok(CrayaFrame { d, e, f })
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: [f64; 3], b: [f64; 3]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-14)
    }

    #[test]
    fn hand_evaluated_frames() {
        let fr = craya_basis(WaveVector::new(1, 0, 0)).unwrap();
        assert!(close(fr.d, [1.0, 0.0, 0.0]));
        assert!(close(fr.e, [0.0, -1.0, 0.0]));
        assert!(close(fr.f, [0.0, 0.0, -1.0]));

        let fr = craya_basis(WaveVector::new(0, 0, 2)).unwrap();
        assert!(close(fr.d, [0.0, 0.0, 1.0]));
        assert!(close(fr.e, [0.0, -1.0, 0.0]));
        assert!(close(fr.f, [1.0, 0.0, 0.0]));

        let fr = craya_basis(WaveVector::new(1, 1, 1)).unwrap();
        let (s2, s3, s6) = (2f64.sqrt(), 3f64.sqrt(), 6f64.sqrt());
        assert!(close(fr.d, [1.0 / s3, 1.0 / s3, 1.0 / s3]));
        assert!(close(fr.e, [1.0 / s2, -1.0 / s2, 0.0]));
        assert!(close(fr.f, [1.0 / s6, 1.0 / s6, -2.0 / s6]));
    }

    #[test]
    fn zero_vector_is_a_domain_error() {
        assert!(matches!(craya_basis(WaveVector::ZERO), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn frames_are_orthonormal(kx in -40i32..40, ky in -40i32..40, kz in -40i32..40) {
            let k = WaveVector::new(kx, ky, kz);
            prop_assume!(!k.is_zero());
            let fr = craya_basis(k).unwrap();
            for v in [fr.d, fr.e, fr.f] {
                prop_assert!((dot3(v, v) - 1.0).abs() < 1e-13);
            }
            prop_assert!(dot3(fr.d, fr.e).abs() < 1e-13);
            prop_assert!(dot3(fr.d, fr.f).abs() < 1e-13);
            prop_assert!(dot3(fr.e, fr.f).abs() < 1e-13);
            prop_assert!(k.dot(fr.e).abs() < 1e-12);
            prop_assert!(k.dot(fr.f).abs() < 1e-12);
        }

        #[test]
        fn reflection_flips_e_and_keeps_f(kx in -20i32..20, ky in -20i32..20, kz in -20i32..20) {
            prop_assume!(kx != 0 || ky != 0);
            let k = WaveVector::new(kx, ky, kz);
            let a = craya_basis(k).unwrap();
            let b = craya_basis(-k).unwrap();
            for i in 0..3 {
                prop_assert!((a.e[i] + b.e[i]).abs() < 1e-15);
                prop_assert!((a.f[i] - b.f[i]).abs() < 1e-15);
            }
        }
    }
}
