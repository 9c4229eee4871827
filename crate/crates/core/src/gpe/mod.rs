//! Time integration of the Gross-Pitaevskii equation
//!
//! ```text
//! i hbar dpsi/dt = ( -hbar^2/(2m) lap + V(r, t) + g |psi|^2 ) psi
//! ```
//!
//! with a Strang split-step Fourier scheme, plus analytic preset states.

mod evolve;
mod potential;
mod preset;

pub use evolve::{
    conserved_diagnostics, energy, evolve, preflight_dt, strang_step, Diagnostics, Propagator,
};
pub use potential::{PotentialKind, PotentialSample, PotentialSpec, TimeDependence};
pub use preset::{closed_form, initialize_state, CoreProfile, Preset};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec, VectorField};

/// Physical constants of one run. Units default to hbar = m = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsParams {
    pub hbar: f64,
    pub mass: f64,
    /// Contact coupling g; positive is repulsive.
    pub coupling: f64,
    /// Charge q of the gauge coupling. Fixed at zero for now.
    pub charge: f64,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        PhysicsParams {
            hbar: 1.0,
            mass: 1.0,
            coupling: 0.0,
            charge: 0.0,
        }
    }
}

impl PhysicsParams {
    pub fn new(hbar: f64, mass: f64, coupling: f64) -> Result<Self> {
        let p = PhysicsParams {
            hbar,
            mass,
            coupling,
            charge: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.coupling = g;
        self
    }

    pub fn with_mass(mut self, m: f64) -> Self {
        self.mass = m;
        self
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "hbar must be positive, got {}",
                self.hbar
            )));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        if !self.coupling.is_finite() {
            return Err(Error::InvalidParams("coupling must be finite".into()));
        }
        if self.charge != 0.0 {
            return Err(Error::InvalidParams(
                "non-zero charge is not supported: the wave equation carries no vector-potential term".into(),
            ));
        }
        Ok(())
    }

    /// Healing length hbar / sqrt(m g n) for a background density `n`.
    pub fn healing_length(&self, n: f64) -> f64 {
        self.hbar / (self.mass * self.coupling * n).sqrt()
    }

    /// Circulation quantum 2 pi hbar / m.
    pub fn circulation_quantum(&self) -> f64 {
        std::f64::consts::TAU * self.hbar / self.mass
    }
}

/// Vector potential coupling of the velocity field. Only `A = 0` is accepted.
#[derive(Debug, Clone, Default)]
pub struct GaugeConfig {
    pub vector_potential: Option<VectorField>,
    pub charge: f64,
}

impl GaugeConfig {
    pub fn validate(&self) -> Result<()> {
        let zero_a = self
            .vector_potential
            .as_ref()
            .map_or(true, |a| a.max_abs() == 0.0);
        if !zero_a || self.charge != 0.0 {
            return Err(Error::InvalidParams(
                "gauge coupling requires A = 0 and q = 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub psi: ComplexField,
}

/// Uniformly spaced stack of wavefunction snapshots with the physics that produced them.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: PhysicsParams,
    pub potential: PotentialSpec,
    /// Spacing between stored snapshots.
    pub dt: f64,
    /// Integrator step (snapshot spacing divided by the stride).
    pub step_dt: f64,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    pub fn grid(&self) -> &GridSpec {
        self.snapshots[0].psi.grid()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Snapshots that have two neighbours on each side.
    pub fn interior_slices(&self) -> std::ops::Range<usize> {
        if self.len() < 5 {
            0..0
        } else {
            2..self.len() - 2
        }
    }

    /// The five snapshots centred on `slice`.
    pub fn window(&self, slice: usize) -> Result<&[Snapshot]> {
        if slice < 2 || slice + 2 >= self.len() {
            return Err(Error::InsufficientSnapshots {
                needed: 5,
                available: self.len(),
                slice,
            });
        }
        Ok(&self.snapshots[slice - 2..=slice + 2])
    }

    /// Every snapshot multiplied by a complex constant.
    pub fn scaled(&self, w: num_complex::Complex64) -> Trajectory {
        let mut out = self.clone();
        for s in &mut out.snapshots {
            s.psi = s.psi.scaled(w);
        }
        out.diagnostics = conserved_diagnostics(&out).unwrap_or_default();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(PhysicsParams::new(1.0, 1.0, -2.0).is_ok());
        assert!(PhysicsParams::new(0.0, 1.0, 0.0).is_err());
        assert!(PhysicsParams::new(1.0, -1.0, 0.0).is_err());
        let mut p = PhysicsParams::default();
        p.charge = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn gauge_requires_zero_vector_potential() {
        let g = GridSpec::centered(2, 4.0, 8).unwrap();
        assert!(GaugeConfig::default().validate().is_ok());
        let mut a = VectorField::zeros(&g);
        assert!(GaugeConfig {
            vector_potential: Some(a.clone()),
            charge: 0.0
        }
        .validate()
        .is_ok());
        a.component_mut(0)[3] = 0.1;
        assert!(GaugeConfig {
            vector_potential: Some(a),
            charge: 0.0
        }
        .validate()
        .is_err());
    }
}
