//! Strang split-step Fourier integration.

use std::rc::Rc;

use num_complex::Complex64;

use super::{PhysicsParams, PotentialSpec, Snapshot, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec, RealField, Spectral};

/// Relative norm drift that counts as blow-up.
const NORM_DRIFT_LIMIT: f64 = 1e-8;

/// Conserved quantities of one snapshot.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
}

/// Reusable integrator for a fixed grid, physics and step size.
pub struct Propagator {
    grid: GridSpec,
    spectral: Rc<Spectral>,
    kinetic: Vec<Complex64>,
    params: PhysicsParams,
    potential: PotentialSpec,
    /// Spatial shape of V when only the scale factor varies in time.
    shape: Option<RealField>,
    dt: f64,
}

impl Propagator {
    pub fn new(
        grid: &GridSpec,
        params: &PhysicsParams,
        potential: &PotentialSpec,
        dt: f64,
    ) -> Result<Self> {
        params.validate()?;
        potential.validate(grid)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let spectral = Spectral::cached(grid);
        let c = params.hbar * dt / (2.0 * params.mass);
        let kinetic = (0..grid.len())
            .map(|idx| Complex64::from_polar(1.0, -c * spectral.k_squared(grid.unravel(idx))))
            .collect();
        let shape = if potential.is_none() || potential.shape_depends_on_time() {
            None
        } else {
            Some(potential.shape(grid, params, 0.0)?)
        };
        Ok(Propagator {
            grid: grid.clone(),
            spectral,
            kinetic,
            params: *params,
            potential: potential.clone(),
            shape,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn potential_at(&self, t: f64) -> Result<Option<RealField>> {
        if self.potential.is_none() {
            return Ok(None);
        }
        Ok(Some(match &self.shape {
            Some(s) => {
                let k = self.potential.scale(t);
                if k == 1.0 {
                    s.clone()
                } else {
                    s.scaled(k)
                }
            }
            None => self.potential.sample(&self.grid, &self.params, t)?,
        }))
    }

    /// Exact flow of `i hbar psi_t = (V + g|psi|^2) psi` over `tau`.
    fn phase_rotation(&self, psi: &mut [Complex64], v: Option<&RealField>, tau: f64) {
        let c = tau / self.params.hbar;
        let g = self.params.coupling;
        match v {
            Some(v) => {
                for (z, vv) in psi.iter_mut().zip(v.values()) {
                    *z *= Complex64::from_polar(1.0, -c * (vv + g * z.norm_sqr()));
                }
            }
            None if g != 0.0 => {
                for z in psi.iter_mut() {
                    *z *= Complex64::from_polar(1.0, -c * g * z.norm_sqr());
                }
            }
            None => {}
        }
    }

    /// Advances `psi` from `t` to `t + dt`. Time-dependent potentials are
    /// sampled at the midpoint of each half step.
    pub fn step(&self, psi: &mut ComplexField, t: f64) -> Result<()> {
        let h = 0.5 * self.dt;
        let data = psi.values_mut();
        let v1 = self.potential_at(t + 0.5 * h)?;
        self.phase_rotation(data, v1.as_ref(), h);
        self.spectral.forward(data);
        for (z, k) in data.iter_mut().zip(&self.kinetic) {
            *z *= k;
        }
        self.spectral.inverse(data);
        let v2 = if self.potential.is_static() {
            v1
        } else {
            self.potential_at(t + 1.5 * h)?
        };
        self.phase_rotation(data, v2.as_ref(), h);
        Ok(())
    }
}

/// One Strang step of size `dt` starting at time `t`.
pub fn strang_step(
    psi: &ComplexField,
    potential: &PotentialSpec,
    params: &PhysicsParams,
    t: f64,
    dt: f64,
) -> Result<ComplexField> {
    let prop = Propagator::new(psi.grid(), params, potential, dt)?;
    let mut out = psi.clone();
    prop.step(&mut out, t)?;
    Ok(out)
}

/// `integral |psi|^2`.
fn norm_of(psi: &ComplexField) -> f64 {
    psi.norm_sqr()
}

/// `integral [hbar^2 |grad psi|^2 / 2m + V |psi|^2 + g |psi|^4 / 2]` at time `t`,
/// with the kinetic part evaluated in transform space over the full `|k|^2`.
pub fn energy(
    psi: &ComplexField,
    potential: &PotentialSpec,
    params: &PhysicsParams,
    t: f64,
) -> Result<f64> {
    let grid = psi.grid();
    let spectral = Spectral::cached(grid);
    let mut spec = psi.values().to_vec();
    spectral.forward(&mut spec);
    let kin: f64 = spec
        .iter()
        .enumerate()
        .map(|(idx, z)| spectral.k_squared(grid.unravel(idx)) * z.norm_sqr())
        .sum::<f64>()
        / grid.len() as f64;
    let kinetic = params.hbar * params.hbar / (2.0 * params.mass) * kin * grid.cell_volume();
    let n = psi.modulus_squared();
    let mut pot = 0.5 * params.coupling * n.values().iter().map(|x| x * x).sum::<f64>();
    if !potential.is_none() {
        let v = potential.sample(grid, params, t)?;
        pot += v.dot(&n) / grid.cell_volume();
    }
    Ok(kinetic + pot * grid.cell_volume())
}

/// Norm and energy of every snapshot.
pub fn conserved_diagnostics(traj: &Trajectory) -> Result<Vec<Diagnostics>> {
    traj.snapshots
        .iter()
        .map(|s| {
            Ok(Diagnostics {
                t: s.t,
                norm: norm_of(&s.psi),
                energy: energy(&s.psi, &traj.potential, &traj.params, s.t)?,
            })
        })
        .collect()
}

/// Integrates from `t = 0` to `t_end` with step `dt`, storing every
/// `snapshot_stride`-th state (the initial state included).
pub fn evolve(
    psi0: &ComplexField,
    potential: &PotentialSpec,
    params: &PhysicsParams,
    t_end: f64,
    dt: f64,
    snapshot_stride: usize,
) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    if snapshot_stride == 0 {
        return Err(Error::InvalidArgument(
            "snapshot stride must be at least 1".into(),
        ));
    }
    if !psi0.is_finite() {
        return Err(Error::NumericalAbort {
            t: 0.0,
            reason: "initial state has non-finite values".into(),
        });
    }
    let prop = Propagator::new(psi0.grid(), params, potential, dt)?;
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let norm0 = norm_of(psi0);
    let mut psi = psi0.clone();
    let mut snapshots = vec![Snapshot {
        t: 0.0,
        psi: psi.clone(),
    }];
    for k in 0..steps {
        let t = k as f64 * dt;
        prop.step(&mut psi, t)?;
        let t_next = (k + 1) as f64 * dt;
        let norm = norm_of(&psi);
        if !norm.is_finite() || !psi.is_finite() {
            return Err(Error::NumericalAbort {
                t: t_next,
                reason: "non-finite wavefunction values".into(),
            });
        }
        let drift = (norm - norm0).abs() / norm0.max(f64::MIN_POSITIVE);
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::NumericalAbort {
                t: t_next,
                reason: format!("relative norm drift {drift:e}"),
            });
        }
        if (k + 1) % snapshot_stride == 0 {
            snapshots.push(Snapshot {
                t: t_next,
                psi: psi.clone(),
            });
        }
    }
    let mut traj = Trajectory {
        params: *params,
        potential: potential.clone(),
        dt: dt * snapshot_stride as f64,
        step_dt: dt,
        snapshots,
        diagnostics: Vec::new(),
    };
    traj.diagnostics = conserved_diagnostics(&traj)?;
    Ok(traj)
}

/// Kinetic-limit safety factor of [`preflight_dt`].
pub const PREFLIGHT_KINETIC: f64 = 0.0125;
/// Potential-limit safety factor of [`preflight_dt`].
pub const PREFLIGHT_POTENTIAL: f64 = 0.02;

/// Step size `min(C_k m h^2 / hbar, C_v hbar / max|V + g n|)`.
///
/// The first bound keeps the largest kinetic phase per step small, the second
/// the largest nonlinear/potential phase. Scaling with `h^2` gives the
/// `dt ~ h^2` ladders used by convergence studies.
pub fn preflight_dt(
    psi: &ComplexField,
    potential: &PotentialSpec,
    params: &PhysicsParams,
) -> Result<f64> {
    let grid = psi.grid();
    let h = grid.min_spacing();
    let kinetic = PREFLIGHT_KINETIC * params.mass * h * h / params.hbar;
    let n = psi.modulus_squared();
    let v = potential.sample(grid, params, 0.0)?;
    let scale = v
        .values()
        .iter()
        .zip(n.values())
        .map(|(v, n)| (v + params.coupling * n).abs())
        .fold(0.0, f64::max);
    Ok(if scale > 0.0 {
        kinetic.min(PREFLIGHT_POTENTIAL * params.hbar / scale)
    } else {
        kinetic
    })
}
