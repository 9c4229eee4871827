//! Runs a bundled scenario end to end and writes its artifacts.
//!
//! `cargo run --example run_scenario -- dark_soliton out/dark`

use std::path::PathBuf;

use quantum_lighthill::scenario::{bundled, bundled_names, run_scenario};

fn main() -> quantum_lighthill::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "gaussian_free".into());
    let out = args.next().map(PathBuf::from);
    println!("bundled scenarios: {}", bundled_names().join(", "));
    let config = bundled(&name)?;
    let (result, dir) = run_scenario(&config, out.as_deref())?;
    print!("{}", result.summary.lines());
    println!("artifacts in {}", dir.display());
    Ok(())
}
