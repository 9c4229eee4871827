//! Density sums of two independent packets do not satisfy the Lighthill
//! equation: the cross terms of the source survive refinement.

use quantum_lighthill::gpe::{
    evolve, initialize_state, preflight_dt, PhysicsParams, PotentialSpec, Preset,
};
use quantum_lighthill::grid::GridSpec;
use quantum_lighthill::lighthill::{lighthill_residual_window, DensityWindow, LighthillConfig};

fn main() -> quantum_lighthill::Result<()> {
    let params = PhysicsParams::default();
    let potential = PotentialSpec::none();
    let cfg = LighthillConfig::default();
    for n in [64, 128, 256] {
        let grid = GridSpec::centered(1, 40.0, n)?;
        let packet = |x0: f64, k: f64| Preset::Gaussian {
            sigma: 1.0,
            center: vec![x0],
            boost: vec![k],
        };
        let a = initialize_state(&grid, &packet(-1.5, 1.0), &params)?;
        let b = initialize_state(&grid, &packet(1.5, -1.0), &params)?;
        let dt = preflight_dt(&a, &potential, &params)?;
        let ta = evolve(&a, &potential, &params, 8.0 * dt, dt, 1)?;
        let tb = evolve(&b, &potential, &params, 8.0 * dt, dt, 1)?;
        let mid = ta.len() / 2;
        let sum = DensityWindow::from_trajectory(&ta, mid)?
            .superpose(&DensityWindow::from_trajectory(&tb, mid)?);
        let rep = lighthill_residual_window(&sum, &params, &potential, &cfg, mid)?;
        println!(
            "N = {n:3}  residual / dominant source term = {:.3}",
            rep.l2_rel
        );
    }
    Ok(())
}
