//! Madelung fields of a moving bright soliton and the Hamilton-Jacobi residual.

use quantum_lighthill::gpe::{
    evolve, initialize_state, preflight_dt, PhysicsParams, PotentialSpec, Preset,
};
use quantum_lighthill::grid::GridSpec;
use quantum_lighthill::madelung::{density, euler_residual, quantum_potential, velocity};

fn main() -> quantum_lighthill::Result<()> {
    let grid = GridSpec::centered(1, 40.0, 256)?;
    let params = PhysicsParams::default().with_coupling(-1.0);
    let preset = Preset::BrightSoliton {
        amplitude: 1.0,
        position: 0.0,
        velocity: 0.5,
    };
    let psi = initialize_state(&grid, &preset, &params)?;
    let n = density(&psi);
    let v = velocity(&psi, &params);
    let q = quantum_potential(&n, &params);
    let peak = n
        .values()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    println!(
        "peak density {:.4} at x = {:+.4}",
        n.max(),
        grid.coord(0, peak)
    );
    println!(
        "velocity at the peak {:.6} (boost 0.5)",
        v.component(0)[peak]
    );
    println!("quantum potential at the peak {:.6}", q.values()[peak]);

    let potential = PotentialSpec::none();
    let dt = preflight_dt(&psi, &potential, &params)?;
    let traj = evolve(&psi, &potential, &params, 40.0 * dt, dt, 1)?;
    let mid = traj.len() / 2;
    let rep = euler_residual(&traj, mid)?;
    println!(
        "Hamilton-Jacobi residual at t = {:.4}: L2 = {:.2e}, relative {:.2e}",
        rep.t, rep.l2_abs, rep.l2_rel
    );
    for term in &rep.terms {
        println!("  {:<12} {:.3e}", term.name, term.l2);
    }
    Ok(())
}
