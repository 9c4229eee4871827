//! Property tests over randomized inputs.

use num_complex::Complex64;
use proptest::prelude::*;
use quantum_lighthill::gpe::{evolve, initialize_state, PhysicsParams, PotentialSpec, Preset};
use quantum_lighthill::grid::{
    spectral_gradient, spectral_laplacian, ComplexField, GridSpec, RealField,
};
use quantum_lighthill::hydro::stress_tensor;
use quantum_lighthill::lighthill::{c0_independence_check, lighthill_residual, LighthillConfig};
use quantum_lighthill::linear::{
    evolve_ivp, reverse_leapfrog, Background, LinearConfig, PerturbationState,
};
use quantum_lighthill::scenario::{fit_order, FieldFile};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn line(n: usize) -> GridSpec {
    GridSpec::centered(1, 20.0, n).unwrap()
}

fn gaussian(x0: f64, sigma: f64, k: f64) -> Preset {
    Preset::Gaussian {
        sigma,
        center: vec![x0],
        boost: vec![k],
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn spectral_derivatives_are_linear(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        s in 0.6f64..2.0,
        x0 in -4.0f64..4.0,
    ) {
        let grid = line(128);
        let f = RealField::from_fn(&grid, |p| (-(p[0] - x0).powi(2) / (2.0 * s * s)).exp());
        let g = RealField::from_fn(&grid, |p| (0.3 * std::f64::consts::PI * p[0]).sin());
        let combo = f.zip_map(&g, |u, v| a * u + b * v);
        let lhs = spectral_gradient(&combo, 0);
        let rhs = spectral_gradient(&f, 0).zip_map(&spectral_gradient(&g, 0), |u, v| a * u + b * v);
        prop_assert!(lhs.zip_map(&rhs, |u, v| u - v).max_abs() < 1e-12);
        let lhs = spectral_laplacian(&combo);
        let rhs = spectral_laplacian(&f).zip_map(&spectral_laplacian(&g), |u, v| a * u + b * v);
        prop_assert!(lhs.zip_map(&rhs, |u, v| u - v).max_abs() < 1e-11);
    }

    #[test]
    fn leapfrog_runs_backwards_to_its_start(
        amp in 1e-4f64..1e-2,
        x0 in -3.0f64..3.0,
        w in 0.8f64..2.0,
        steps in 20usize..120,
    ) {
        let grid = line(64);
        let bg = Background::uniform(&grid, 1.0, PhysicsParams::default().with_coupling(1.0)).unwrap();
        let dn = RealField::from_fn(&grid, |p| amp * (-(p[0] - x0).powi(2) / (w * w)).exp());
        let cfg = LinearConfig::default();
        let dt = 0.01;
        let traj = evolve_ivp(&bg, &PerturbationState::at_rest(dn.clone(), 0.0), steps as f64 * dt, dt, &cfg).unwrap();
        let back = reverse_leapfrog(&bg, &traj, &cfg).unwrap();
        prop_assert!(back.zip_map(&dn, |u, v| u - v).max_abs() < 1e-10 * amp);
    }

    #[test]
    fn field_files_round_trip(
        values in prop::collection::vec(-1e6f64..1e6, 32),
        im in prop::collection::vec(-1.0f64..1.0, 32),
        time in -10.0f64..10.0,
    ) {
        let grid = line(32);
        let real = RealField::from_vec(&grid, values.clone());
        let file = FieldFile::real(&real, time);
        let bytes = file.to_bytes();
        let back = FieldFile::read_from(&mut bytes.as_slice()).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.to_real().unwrap(), real);

        let z = ComplexField::from_vec(&grid, values.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect());
        let bytes = FieldFile::complex(&z, time).to_bytes();
        let back = FieldFile::read_from(&mut bytes.as_slice()).unwrap();
        prop_assert_eq!(back.to_complex().unwrap(), z);
    }

    #[test]
    fn stress_is_homogeneous_of_degree_one(
        lambda in 0.05f64..20.0,
        s in 0.7f64..2.0,
        x0 in -3.0f64..3.0,
    ) {
        let grid = line(128);
        let params = PhysicsParams::default();
        let n = RealField::from_fn(&grid, |p| (-(p[0] - x0).powi(2) / (2.0 * s * s)).exp() + 0.1);
        let a = stress_tensor(&n.scaled(lambda), &params).component_field(0, 0);
        let b = stress_tensor(&n, &params).component_field(0, 0).scaled(lambda);
        prop_assert!(a.zip_map(&b, |u, v| u - v).max_abs() < 1e-12 * lambda.max(1.0) * b.max_abs().max(1.0));
    }

    #[test]
    fn split_step_conserves_the_norm(
        g in -1.0f64..2.0,
        k in -2.0f64..2.0,
        s in 0.7f64..1.5,
        omega in 0.0f64..1.0,
    ) {
        let grid = line(128);
        let params = PhysicsParams::default().with_coupling(g);
        let psi = initialize_state(&grid, &gaussian(0.0, s, k), &params).unwrap();
        let pot = if omega > 0.1 { PotentialSpec::harmonic(&[omega]) } else { PotentialSpec::none() };
        let traj = evolve(&psi, &pot, &params, 1.0, 1e-3, 250).unwrap();
        let n0 = traj.diagnostics[0].norm;
        for d in &traj.diagnostics {
            prop_assert!((d.norm - n0).abs() < 1e-12 * n0);
        }
    }

    #[test]
    fn reference_speed_drops_out(
        c_a in 0.2f64..5.0,
        c_b in 0.2f64..5.0,
        k in -1.5f64..1.5,
    ) {
        let grid = line(64);
        let params = PhysicsParams::default();
        let psi = initialize_state(&grid, &gaussian(0.0, 1.0, k), &params).unwrap();
        let traj = evolve(&psi, &PotentialSpec::none(), &params, 0.4, 0.1, 1).unwrap();
        let rep = c0_independence_check(&traj, 2, &[c_a, c_b], &LighthillConfig::default()).unwrap();
        prop_assert!(rep.max_pointwise_diff < 1e-12 * (1.0 + c_a.max(c_b).powi(2)));
    }

    #[test]
    fn density_residual_scales_with_the_squared_amplitude(
        r in 0.3f64..3.0,
        phase in 0.0f64..std::f64::consts::TAU,
    ) {
        let grid = line(64);
        let params = PhysicsParams::default();
        let psi = initialize_state(&grid, &gaussian(0.0, 1.0, 1.0), &params).unwrap();
        let traj = evolve(&psi, &PotentialSpec::none(), &params, 0.6, 0.1, 1).unwrap();
        let w = Complex64::from_polar(r, phase);
        let cfg = LighthillConfig::default();
        let base = lighthill_residual(&traj, 3, &cfg).unwrap();
        let scaled = lighthill_residual(&traj.scaled(w), 3, &cfg).unwrap();
        let scale = base.terms.iter().map(|t| t.l2).fold(0.0, f64::max);
        let diff = scaled.field[0].zip_map(&base.field[0], |a, b| a - r * r * b);
        prop_assert!(diff.l2() / (r * r * scale) < 1e-10);
    }

    #[test]
    fn fitted_order_recovers_power_laws(
        p in -1.0f64..6.0,
        c in 1e-6f64..1e3,
        h0 in 0.01f64..1.0,
    ) {
        let h = [h0, h0 / 2.0, h0 / 4.0, h0 / 8.0];
        let y: Vec<f64> = h.iter().map(|x| c * x.powf(p)).collect();
        prop_assert!((fit_order(&h, &y) - p).abs() < 1e-9);
    }
}
