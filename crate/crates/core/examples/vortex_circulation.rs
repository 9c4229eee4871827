//! Circulation around trapped vortices of charge 0, 1 and 2.

use quantum_lighthill::gpe::{initialize_state, CoreProfile, PhysicsParams, Preset};
use quantum_lighthill::grid::GridSpec;
use quantum_lighthill::lighthill::{circulation, square_loop};

fn main() -> quantum_lighthill::Result<()> {
    let grid = GridSpec::centered(2, 16.0, 64)?;
    let params = PhysicsParams::default();
    let lp = square_loop(0.0, 0.0, 1.5, 0.0);
    for charge in [0, 1, 2] {
        let preset = Preset::Vortex {
            charge,
            center: [0.0, 0.0],
            core: CoreProfile::Gaussian { width: 1.0 },
        };
        let psi = initialize_state(&grid, &preset, &params)?;
        let rep = circulation(&psi, &lp, &params)?;
        println!(
            "l = {charge}: circulation {:+.12} = {:+} x 2 pi hbar/m + {:+.1e}  (velocity quadrature {:+.6})",
            rep.raw, rep.winding, rep.deviation, rep.velocity_quadrature
        );
    }
    Ok(())
}
