//! Decides the signs of the quantum stress and interaction terms in the
//! momentum balance from short runs of four reference states.

use quantum_lighthill::scenario::audit_signs;

fn main() -> quantum_lighthill::Result<()> {
    let (audit, csv) = audit_signs(&[64, 128, 256])?;
    print!("{}", audit.note);
    println!();
    println!("selected convention: {}", audit.convention.name());
    println!("{} table rows", csv.lines().count() - 1);
    Ok(())
}
