//! Independent reference values for the solver, the fluid fields and the
//! density equation, each derived in closed form.

use std::f64::consts::{PI, TAU};

use quantum_lighthill::gpe::{
    evolve, initialize_state, preflight_dt, PhysicsParams, PotentialSample, PotentialSpec, Preset,
};
use quantum_lighthill::grid::{ComplexField, GridSpec, RealField, SymTensorField};
use quantum_lighthill::hydro::{momentum_flux_residual, SignConvention};
use quantum_lighthill::lighthill::{
    assemble_source_tensor, integral_solution_many, lighthill_residual, LighthillConfig,
    ManufacturedSource, SourceHistory,
};
use quantum_lighthill::madelung::{density, HydroBundle};
use quantum_lighthill::scenario::fit_order;

fn max_diff(a: &RealField, b: &RealField) -> f64 {
    a.zip_map(b, |x, y| x - y).max_abs()
}

fn harmonic_setup() -> (ComplexField, PhysicsParams, PotentialSpec) {
    let grid = GridSpec::centered(1, 40.0, 256).unwrap();
    let params = PhysicsParams::default();
    let psi = initialize_state(&grid, &Preset::HarmonicGround { omega: 1.0 }, &params).unwrap();
    (psi, params, PotentialSpec::harmonic(&[1.0]))
}

#[test]
fn harmonic_ground_density_is_stationary_over_a_trap_period() {
    let (psi, params, pot) = harmonic_setup();
    let dt = preflight_dt(&psi, &pot, &params).unwrap();
    let steps = (TAU / dt).ceil() as usize;
    let traj = evolve(&psi, &pot, &params, TAU, TAU / steps as f64, steps).unwrap();
    let last = &traj.snapshots[traj.len() - 1];
    assert!((last.t - TAU).abs() < 1e-9);
    let drift = max_diff(&density(&last.psi), &density(&psi));
    assert!(drift < 1e-8, "density drift {drift:e}");
}

#[test]
fn black_soliton_density_is_stationary_over_unit_time() {
    let grid = GridSpec::centered(1, 40.0, 256).unwrap();
    let params = PhysicsParams::default().with_coupling(2.0);
    let preset = Preset::DarkSoliton {
        n_inf: 1.0,
        position: 0.0,
    };
    let psi = initialize_state(&grid, &preset, &params).unwrap();
    let pot = PotentialSpec::none();
    let dt = preflight_dt(&psi, &pot, &params).unwrap();
    let steps = (1.0 / dt).ceil() as usize;
    let traj = evolve(&psi, &pot, &params, 1.0, 1.0 / steps as f64, steps).unwrap();
    let drift = max_diff(&density(&traj.snapshots[1].psi), &density(&psi));
    assert!(drift < 1e-6, "density drift {drift:e}");
}

fn free_gaussian(n: usize) -> (ComplexField, PhysicsParams) {
    let grid = GridSpec::centered(1, 40.0, n).unwrap();
    let params = PhysicsParams::default();
    let preset = Preset::Gaussian {
        sigma: 1.0,
        center: vec![0.0],
        boost: vec![1.0],
    };
    (initialize_state(&grid, &preset, &params).unwrap(), params)
}

#[test]
fn free_gaussian_energy_is_constant() {
    let (psi, params) = free_gaussian(256);
    let pot = PotentialSpec::none();
    let dt = preflight_dt(&psi, &pot, &params).unwrap();
    let traj = evolve(&psi, &pot, &params, 2.0, dt, 200).unwrap();
    let e0 = traj.diagnostics[0].energy;
    // A boosted unit Gaussian carries (k^2 + 1 / (4 sigma^2)) / 2.
    assert!((e0 - 0.625).abs() < 1e-10, "energy {e0}");
    for d in &traj.diagnostics {
        assert!(
            (d.energy - e0).abs() / e0 < 1e-8,
            "t = {}: {}",
            d.t,
            d.energy
        );
    }
}

#[test]
fn harmonic_ground_density_equation_residual() {
    let (psi, params, pot) = harmonic_setup();
    let dt = preflight_dt(&psi, &pot, &params).unwrap();
    let traj = evolve(&psi, &pot, &params, 8.0 * dt, dt, 1).unwrap();
    let rep = lighthill_residual(&traj, traj.len() / 2, &LighthillConfig::default()).unwrap();
    assert!(rep.l2_rel < 1e-6, "residual {:e}", rep.l2_rel);
}

#[test]
fn free_gaussian_momentum_residual_decays_at_fourth_order() {
    // Without interaction or potential the split step is exact, so the
    // residual measures only the five-point time stencil.
    let (psi, params) = free_gaussian(256);
    let pot = PotentialSpec::none();
    let dts = [0.04, 0.02, 0.01];
    let res: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let traj = evolve(&psi, &pot, &params, 4.0 * dt, dt, 1).unwrap();
            momentum_flux_residual(&traj, 2, &SignConvention::AUDITED)
                .unwrap()
                .l2_rel
        })
        .collect();
    let order = fit_order(&dts, &res);
    assert!(res[2] < 1e-7, "residuals {res:?}");
    assert!(order > 3.5, "order {order} from {res:?}");
}

#[test]
fn kink_source_tensor_matches_closed_form() {
    // n = n_inf tanh^2((x - x0) / xi), at rest.
    let grid = GridSpec::centered(1, 32.0, 512).unwrap();
    let params = PhysicsParams::default().with_coupling(2.0);
    let n_inf = 1.0;
    let a = 1.0 / params.healing_length(n_inf);
    let x0 = 0.5 * grid.spacing(0);
    let n = RealField::from_fn(&grid, |p| n_inf * (a * (p[0] - x0)).tanh().powi(2));
    let floor = 1e-8;
    let bundle = HydroBundle::from_density(&n, &params, floor);
    let cfg = LighthillConfig::default();
    let t = assemble_source_tensor(&bundle, &PotentialSample::zero(&grid), &params, &cfg).t;
    let c2 = cfg.c0 * cfg.c0;
    let hb2_4m2 = params.hbar.powi(2) / (4.0 * params.mass.powi(2));
    let exact = RealField::from_fn(&grid, |p| {
        let u = a * (p[0] - x0);
        let (th, sech2) = (u.tanh(), 1.0 / u.cosh().powi(2));
        let n = n_inf * th * th;
        let pi_xx = hb2_4m2 * (-2.0 * n_inf * a * a * sech2 * (1.0 + th * th));
        -c2 * n - pi_xx + params.coupling * n * n / (2.0 * params.mass)
    });
    let txx = t.component_field(0, 0);
    let scale = exact.max_abs();
    let worst = (0..grid.len())
        .filter(|&i| bundle.mask.contains(i))
        .map(|i| (txx.values()[i] - exact.values()[i]).abs())
        .fold(0.0, f64::max);
    assert!(worst / scale < 1e-8, "worst {worst:e} of {scale}");
}

#[test]
fn static_source_gives_the_poisson_solution() {
    // A frozen source reduces the wave equation to -c0^2 lap u = d_i d_j T_ij.
    // Outside a Gaussian of mass M the solution is
    // M (3 n.Q.n - tr Q) / (4 pi c0^2 r^3).
    let grid = GridSpec::centered(3, 8.0, 32).unwrap();
    let src = ManufacturedSource::default();
    let profile: SymTensorField = src.profile(&grid);
    let times: Vec<f64> = (0..=20).map(|k| 0.5 * k as f64).collect();
    let history = SourceHistory::from_fn(&grid, &times, |_, _| profile.clone()).unwrap();
    let cfg = LighthillConfig::default();
    let receivers = [[4.5, 0.0, 0.0], [0.0, 5.0, 0.0], [3.1, 2.7, -3.3]];
    let got = integral_solution_many(&history, &receivers, 9.0, &cfg).unwrap();
    let mass = src.amplitude * (TAU).powf(1.5) * src.width.powi(3);
    let q = src.polarization;
    for (x, u) in receivers.iter().zip(&got) {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let nv = [x[0] / r, x[1] / r, x[2] / r];
        let nqn: f64 = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| nv[i] * q[i][j] * nv[j])
            .sum();
        let tr = q[0][0] + q[1][1] + q[2][2];
        let exact = mass * (3.0 * nqn - tr) / (4.0 * PI * cfg.c0 * cfg.c0 * r.powi(3));
        assert!(
            ((u - exact) / exact).abs() < 0.02,
            "{x:?}: {u:e} vs {exact:e}"
        );
    }
}

#[test]
fn node_on_a_grid_point_leaves_the_residual_smooth() {
    // At N = 512 the node sits exactly on a grid point, where the phase of the
    // evolved wavefunction is round-off.
    let grid = GridSpec::centered(1, 32.0, 512).unwrap();
    let params = PhysicsParams::default().with_coupling(2.0);
    let preset = Preset::DarkSoliton {
        n_inf: 1.0,
        position: -7.9375,
    };
    let psi = initialize_state(&grid, &preset, &params).unwrap();
    let pot = PotentialSpec::none();
    let dt = preflight_dt(&psi, &pot, &params).unwrap();
    let traj = evolve(&psi, &pot, &params, 8.0 * dt, dt, 1).unwrap();
    // Static and free of potential: flipping both signs leaves the balance intact.
    for conv in [SignConvention::AUDITED, SignConvention::PRINTED] {
        let cfg = LighthillConfig::default().with_convention(conv);
        let rep = lighthill_residual(&traj, 4, &cfg).unwrap();
        assert!(rep.l2_rel < 1e-5, "{}: {:e}", conv.name(), rep.l2_rel);
    }
}
