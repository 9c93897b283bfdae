use num_complex::Complex64;
use proptest::prelude::*;

use bhtlab::spectral::{advect, advect_with, AdvectMethod, Lattice, ModeTable, SpectralField, WaveVector};
use bhtlab::static_solver::fixed_point_solve;
use bhtlab::synthesis::{synth_source, synth_velocity_static, CircularLaw, SourceSpec, StreamKey, VelocityParams};

fn law(which: u8) -> CircularLaw {
    match which % 3 {
        0 => CircularLaw::unit(),
        1 => CircularLaw::with_fourth_moment(3.0).unwrap(),
        _ => CircularLaw::with_fourth_moment(1.5).unwrap(),
    }
}

fn random_field(table: &std::sync::Arc<ModeTable>, seed: u64) -> SpectralField {
    let mut s = seed;
    SpectralField::from_fn(table, |_| {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let a = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        let b = (s.rotate_left(17) >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        Complex64::new(a, b)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthesized_velocity_is_divergence_free(seed in any::<u64>(), beta in -4.0f64..-2.01, which in 0u8..3) {
        let table = ModeTable::new(Lattice::new(5).unwrap());
        let params = VelocityParams::isotropic(beta, 0.7, law(which));
        let vel = synth_velocity_static(&params, &table, StreamKey::new(seed, 3)).unwrap();
        for (k, c) in vel.u.iter() {
            let [kx, ky, kz] = k.to_f64();
            let div = c[0] * kx + c[1] * ky + c[2] * kz;
            let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max) * k.norm();
            prop_assert!(div.norm() <= 1e-13 * scale.max(1e-300), "k = {:?}: {}", k, div);
        }
    }

    #[test]
    fn same_key_same_velocity(seed in any::<u64>(), sample in 0u64..1000) {
        let table = ModeTable::new(Lattice::new(4).unwrap());
        let params = VelocityParams::isotropic(-2.5, 1.0, CircularLaw::with_fourth_moment(2.0).unwrap());
        let a = synth_velocity_static(&params, &table, StreamKey::new(seed, sample)).unwrap();
        let b = synth_velocity_static(&params, &table, StreamKey::new(seed, sample)).unwrap();
        let c = synth_velocity_static(&params, &table, StreamKey::new(seed, sample + 1)).unwrap();
        prop_assert!(a.u.iter().zip(b.u.iter()).all(|(x, y)| x == y));
        prop_assert!(a.u.iter().zip(c.u.iter()).any(|(x, y)| x != y));
    }

    // ∫ θ u·∇θ = 0 for incompressible u, i.e. Re Σ_k conj(θ_k) (u·∇θ)_k vanishes.
    #[test]
    fn advection_conserves_tracer_variance(seed in any::<u64>(), fseed in any::<u64>()) {
        let table = ModeTable::new(Lattice::new(4).unwrap());
        let params = VelocityParams::isotropic(-2.5, 1.0, CircularLaw::unit());
        let vel = synth_velocity_static(&params, &table, StreamKey::new(seed, 0)).unwrap();
        let theta = random_field(&table, fseed);
        let a = advect(&vel.u, &theta).unwrap();
        let dot: f64 = theta.iter().zip(a.iter()).map(|((_, t), (_, x))| (t.conj() * x).re).sum();
        let scale = theta.l2_norm_sq().sqrt() * a.l2_norm_sq().sqrt();
        prop_assert!(dot.abs() <= 1e-12 * scale, "{} vs {}", dot, scale);
    }

    #[test]
    fn direct_and_pseudospectral_advection_agree(seed in any::<u64>(), fseed in any::<u64>()) {
        let table = ModeTable::new(Lattice::new(4).unwrap());
        let params = VelocityParams::isotropic(-3.0, 1.0, CircularLaw::with_fourth_moment(3.0).unwrap());
        let vel = synth_velocity_static(&params, &table, StreamKey::new(seed, 1)).unwrap();
        let theta = random_field(&table, fseed);
        let d = advect_with(&vel.u, &theta, AdvectMethod::Direct).unwrap();
        let p = advect_with(&vel.u, &theta, AdvectMethod::Pseudospectral).unwrap();
        let err = d.iter().zip(p.iter()).map(|((_, x), (_, y))| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * d.max_abs().max(1.0), "{}", err);
    }

    // The converged θ satisfies |k|²θ_k + (u·∇θ)_k + |k|²γ_k = 0 mode by mode.
    #[test]
    fn static_solution_satisfies_the_equation(seed in any::<u64>(), u in 0.01f64..0.2) {
        let table = ModeTable::new(Lattice::new(4).unwrap());
        let params = VelocityParams::isotropic(-2.5, u, CircularLaw::unit());
        let key = StreamKey::new(seed, 0);
        let vel = synth_velocity_static(&params, &table, key).unwrap();
        let gamma = synth_source(&SourceSpec::ball(2, -3.0, 16.0).unwrap(), &table, key).unwrap();
        let (theta, diag) = fixed_point_solve(&vel.u, &gamma, 1e-14, 400).unwrap();
        prop_assert!(diag.converged);
        let a = advect(&vel.u, &theta).unwrap();
        let worst = theta
            .iter()
            .map(|(k, t)| {
                let n2 = k.norm_sq() as f64;
                (t * n2 + a.get(k) + gamma.get(k) * n2).norm()
            })
            .fold(0.0, f64::max);
        prop_assert!(worst <= 1e-11 * gamma.max_abs().max(1e-300) * 16.0, "{}", worst);
    }
}

#[test]
fn half_space_covers_each_pair_once() {
    let lattice = Lattice::new(6).unwrap();
    let half: Vec<WaveVector> = lattice.half_space_modes().collect();
    assert_eq!(2 * half.len(), lattice.full_mode_count());
    for k in &half {
        assert!(!half.contains(&-*k), "{k:?} and its negative are both stored");
    }
}
