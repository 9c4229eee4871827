//! Split-step evolution of a boosted free Gaussian with its conserved quantities.

use quantum_lighthill::gpe::{
    evolve, initialize_state, preflight_dt, PhysicsParams, PotentialSpec, Preset,
};
use quantum_lighthill::grid::{GridSpec, RealField};
use quantum_lighthill::madelung::density;

fn main() -> quantum_lighthill::Result<()> {
    let grid = GridSpec::centered(1, 40.0, 256)?;
    let params = PhysicsParams::default();
    let preset = Preset::Gaussian {
        sigma: 1.0,
        center: vec![0.0],
        boost: vec![1.0],
    };
    let psi0 = initialize_state(&grid, &preset, &params)?;
    let potential = PotentialSpec::none();
    let dt = preflight_dt(&psi0, &potential, &params)?;
    let traj = evolve(&psi0, &potential, &params, 2.0, dt, 400)?;
    println!("dt = {dt:.3e}, {} snapshots", traj.len());
    let d0 = traj.diagnostics[0];
    for (snap, d) in traj.snapshots.iter().zip(&traj.diagnostics) {
        let n = density(&snap.psi);
        let centre = centre_of_mass(&n);
        println!(
            "t = {:5.3}  <x> = {centre:+.4}  norm - norm0 = {:+.1e}  energy - energy0 = {:+.1e}",
            snap.t,
            d.norm - d0.norm,
            d.energy - d0.energy
        );
    }
    Ok(())
}

/// Centre of mass along x.
fn centre_of_mass(n: &RealField) -> f64 {
    let xs = n.grid().axis_coords(0);
    let w: f64 = n.values().iter().sum();
    n.values().iter().zip(&xs).map(|(a, x)| a * x).sum::<f64>() / w
}
