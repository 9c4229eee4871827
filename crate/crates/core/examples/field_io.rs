//! Writes a wavefunction to the binary field format and reads it back.

use quantum_lighthill::gpe::{initialize_state, CoreProfile, PhysicsParams, Preset};
use quantum_lighthill::grid::GridSpec;
use quantum_lighthill::scenario::FieldFile;

fn main() -> quantum_lighthill::Result<()> {
    let grid = GridSpec::centered(2, 16.0, 32)?;
    let preset = Preset::Vortex {
        charge: 1,
        center: [0.0, 0.0],
        core: CoreProfile::Gaussian { width: 1.0 },
    };
    let psi = initialize_state(&grid, &preset, &PhysicsParams::default())?;
    let file = FieldFile::complex(&psi, 0.0);
    let path = std::env::temp_dir().join("vortex.qlh");
    file.save(&path)?;
    let back = FieldFile::load(&path)?;
    println!(
        "{}: {} bytes, header {:?}",
        path.display(),
        std::fs::metadata(&path)?.len(),
        back.header
    );
    println!(
        "round trip exact: {}",
        back.to_complex()?.values() == psi.values()
    );
    Ok(())
}
