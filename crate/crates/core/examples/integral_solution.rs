//! Retarded and advanced integral solutions for a compact quadrupole source,
//! compared with a direct leapfrog solve of the wave equation.

use quantum_lighthill::lighthill::ManufacturedIntegralCheck;

fn main() -> quantum_lighthill::Result<()> {
    let check = ManufacturedIntegralCheck::default();
    println!(
        "source {}^3 on L = {}, oracle {}^3 on L = {}, {} receivers",
        check.source_points,
        check.source_extent,
        check.oracle_points,
        check.oracle_extent,
        check.receivers.len()
    );
    let rep = check.run()?;
    println!("retarded: relative L2 {:.3e}", rep.retarded_rel_l2);
    println!("advanced: relative L2 {:.3e}", rep.advanced_rel_l2);
    for s in rep
        .samples
        .iter()
        .filter(|s| s.receiver == [6.0, 0.0, 0.0])
        .take(6)
    {
        println!(
            "  {:?} t = {:.3}  integral {:+.4e}  direct {:+.4e}",
            s.kernel, s.t, s.integral, s.oracle
        );
    }
    Ok(())
}
