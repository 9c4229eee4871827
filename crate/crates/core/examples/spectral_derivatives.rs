//! Spectral derivatives on a periodic grid against closed forms.

use quantum_lighthill::grid::{spectral_gradient, spectral_laplacian, GridSpec, RealField};

fn main() -> quantum_lighthill::Result<()> {
    let l = 2.0 * std::f64::consts::PI;
    for n in [16, 32, 64] {
        let grid = GridSpec::centered(2, l, n)?;
        let f = RealField::from_fn(&grid, |p| (2.0 * p[0]).sin() * p[1].cos());
        let dx = spectral_gradient(&f, 0);
        let lap = spectral_laplacian(&f);
        let dx_err = dx
            .zip_map(
                &RealField::from_fn(&grid, |p| 2.0 * (2.0 * p[0]).cos() * p[1].cos()),
                |a, b| a - b,
            )
            .max_abs();
        let lap_err = lap.zip_map(&f.scaled(-5.0), |a, b| a - b).max_abs();
        println!(
            "N = {n:3}  max |d_x f - exact| = {dx_err:.2e}  max |lap f - exact| = {lap_err:.2e}"
        );
    }
    Ok(())
}
