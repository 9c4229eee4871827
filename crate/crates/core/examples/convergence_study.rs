//! Refinement study of every residual check of a bundled scenario.

use quantum_lighthill::scenario::{bundled, convergence_report, FitLabel};

fn main() -> quantum_lighthill::Result<()> {
    let name = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "gaussian_free".into());
    let report = convergence_report(&bundled(&name)?, &[64, 128, 256])?;
    print!("{}", report.to_csv());
    for f in &report.fits {
        match f.label {
            FitLabel::Floor => println!("{}: at round-off on every level", f.check),
            FitLabel::Fit => println!("{}: order {:.2} in h", f.check, f.order_h),
        }
    }
    Ok(())
}
