//! Recovers a linear density trajectory from its first and last slices.

use quantum_lighthill::gpe::PhysicsParams;
use quantum_lighthill::grid::{GridSpec, RealField};
use quantum_lighthill::linear::{
    evolve_ivp, solve_two_time, stability_bound, Background, BoundaryData, LinearConfig,
    PerturbationState,
};

fn main() -> quantum_lighthill::Result<()> {
    let grid = GridSpec::centered(1, 20.0, 128)?;
    let params = PhysicsParams::default().with_coupling(1.0);
    let bg = Background::uniform(&grid, 1.0, params)?;
    let cfg = LinearConfig::default();
    let dn = RealField::from_fn(&grid, |p| 1e-3 * (-0.5 * p[0] * p[0]).exp());
    let dt = 0.5 * stability_bound(&bg, &cfg)?.dt_max;
    let steps = 255;
    let ivp = evolve_ivp(
        &bg,
        &PerturbationState::at_rest(dn, 0.0),
        dt * steps as f64,
        dt,
        &cfg,
    )?;
    let last = ivp.states.len() - 1;
    let data = BoundaryData {
        t0: 0.0,
        t1: ivp.states[last].t,
        start: ivp.states[0].delta_n.clone(),
        end: ivp.states[last].delta_n.clone(),
    };
    let sol = solve_two_time(&bg, &data, last, &cfg)?;
    let worst = sol
        .trajectory
        .states
        .iter()
        .zip(&ivp.states)
        .map(|(a, b)| a.delta_n.zip_map(&b.delta_n, |x, y| x - y).l2())
        .fold(0.0, f64::max);
    println!(
        "{} slices, dt = {dt:.3e}, solver {} in {} iterations",
        last + 1,
        sol.solver,
        sol.iterations
    );
    println!("largest L2 deviation from the initial-value run: {worst:.2e}");
    Ok(())
}
