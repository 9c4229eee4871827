//! Linearized density dynamics on a uniform condensate against the
//! Bogoliubov spectrum, then the tangent-line test against full evolutions.

use num_complex::Complex64;
use quantum_lighthill::gpe::{PhysicsParams, PotentialSpec};
use quantum_lighthill::grid::{ComplexField, GridSpec};
use quantum_lighthill::linear::{
    dispersion_scan, Background, DispersionSettings, LinearConfig, TangentLineTest,
};

fn main() -> quantum_lighthill::Result<()> {
    let grid = GridSpec::centered(1, 20.0 * std::f64::consts::PI, 128)?;
    let params = PhysicsParams::default().with_coupling(1.0);
    let bg = Background::uniform(&grid, 1.0, params)?;
    let cfg = LinearConfig::default();
    let ks = [0.1, 0.2, 0.5, 1.0, 1.5, 2.0];
    println!("healing length {}", params.healing_length(1.0));
    for p in dispersion_scan(&bg, &ks, &cfg, &DispersionSettings::default())? {
        println!(
            "k = {:.2}  omega {:.6}  analytic {:.6}  relative error {:.1e}",
            p.k, p.omega_measured, p.omega_analytic, p.rel_error
        );
    }

    let l = grid.extent(0);
    let test = TangentLineTest {
        psi0: ComplexField::from_fn(&grid, |_| Complex64::new(1.0, 0.0)),
        phi: ComplexField::from_fn(&grid, |p| {
            Complex64::new(1.0, 0.5) * (-0.5 * (p[0] / (l / 16.0)).powi(2)).exp()
        }),
        potential: PotentialSpec::none(),
        params,
        t_end: 1.0,
        dt: 0.01,
    };
    let gaps = test.run(&[0.04, 0.02, 0.01], &cfg)?;
    for w in gaps.windows(2) {
        println!(
            "eps {:.2} -> {:.2}: gap ratio {:.3}",
            w[0].eps,
            w[1].eps,
            w[0].gap / w[1].gap
        );
    }
    Ok(())
}
