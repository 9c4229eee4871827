//! Second-order wave equation for the probability density.
//!
//! Differentiating continuity in time and substituting the momentum balance
//! gives
//!
//! ```text
//! d_t^2 n - c0^2 lap n = d_i d_j T_ij + (1/m) d_i (n d_i V)
//! T_ij = n v_i v_j - c0^2 n delta_ij - s_pi Pi_ij - s_g (g/2m) n^2 delta_ij
//! ```
//!
//! for any reference speed `c0`. With the potential absorbed into the tensor,
//! `-(n V/m) delta_ij` joins `T` and the separate source is dropped.

mod circulation;
mod integral;
mod manufactured;

pub use circulation::{circulation, square_loop, CirculationReport};
pub use integral::{integral_solution, integral_solution_many, SourceHistory, WaveSolver};
pub use manufactured::{
    IntegralCheckReport, IntegralSample, ManufacturedIntegralCheck, ManufacturedSource,
    INTEGRAL_CSV_HEADER,
};

use crate::error::{Error, Result};
use crate::gpe::{PhysicsParams, PotentialSample, PotentialSpec, Trajectory};
use crate::grid::{
    divergence, double_divergence, fd_laplacian, spectral_laplacian, time_stencil_at, ComplexField,
    RealField, SymTensorField, TimeOrder, VectorField,
};
use crate::hydro::{
    reynolds_flux, reynolds_flux_from_psi, stress_tensor, stress_tensor_from_psi, PotentialForm,
    SignConvention,
};
use crate::madelung::{current, density, HydroBundle, DEFAULT_MASK_FLOOR};
use crate::residual::{term, Mask, ResidualReport};

/// Green-function choice for the integral solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Retarded,
    Advanced,
    /// `lambda * retarded + (1 - lambda) * advanced`.
    Mixed(f64),
}

impl Kernel {
    /// Weight of the retarded part.
    pub fn retarded_weight(&self) -> f64 {
        match self {
            Kernel::Retarded => 1.0,
            Kernel::Advanced => 0.0,
            Kernel::Mixed(l) => *l,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LighthillConfig {
    pub c0: f64,
    pub convention: SignConvention,
    /// Mask floor relative to `max n` for reported norms.
    pub density_floor: f64,
    pub kernel: Kernel,
    /// Allows integral evaluation inside the source support (adds the local
    /// `-T_kk / 3 c0^2` term and skips the singular cell).
    pub near_field: bool,
}

impl Default for LighthillConfig {
    fn default() -> Self {
        LighthillConfig {
            c0: 1.0,
            convention: SignConvention::AUDITED,
            density_floor: DEFAULT_MASK_FLOOR,
            kernel: Kernel::Retarded,
            near_field: false,
        }
    }
}

impl LighthillConfig {
    pub fn with_c0(mut self, c0: f64) -> Self {
        self.c0 = c0;
        self
    }

    pub fn with_convention(mut self, conv: SignConvention) -> Self {
        self.convention = conv;
        self
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "c0 must be positive, got {}",
                self.c0
            )));
        }
        if let Kernel::Mixed(l) = self.kernel {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::InvalidArgument(format!(
                    "kernel mixing weight {l} is outside [0, 1]"
                )));
            }
        }
        if !(self.density_floor >= 0.0 && self.density_floor < 1.0) {
            return Err(Error::InvalidArgument(
                "density floor must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SourceTensorField {
    pub t: SymTensorField,
    /// `(1/m) d_i (n d_i V)` when the potential enters as a separate source.
    pub dipole: Option<RealField>,
}

/// Pieces of the source tensor kept apart for norm bookkeeping.
struct SourceParts {
    reynolds: SymTensorField,
    stress: SymTensorField,
    n: RealField,
}

/// Flux pieces from the wavefunction when it is known, otherwise from `n` and `j`.
fn source_parts(
    n: &RealField,
    j: &VectorField,
    psi: Option<&ComplexField>,
    params: &PhysicsParams,
) -> SourceParts {
    let (reynolds, stress) = match psi {
        Some(psi) => (
            reynolds_flux_from_psi(psi, params),
            stress_tensor_from_psi(psi, params),
        ),
        None => (reynolds_flux(n, j), stress_tensor(n, params)),
    };
    SourceParts {
        reynolds,
        stress,
        n: n.clone(),
    }
}

fn dipole_source(n: &RealField, pot: &PotentialSample, mass: f64) -> RealField {
    let grid = n.grid();
    let flux = VectorField::from_components(
        grid,
        (0..grid.dim())
            .map(|a| n.zip_map(&pot.gradient.component_field(a), |x, g| x * g))
            .collect(),
    );
    divergence(&flux).scaled(1.0 / mass)
}

fn assemble(
    parts: &SourceParts,
    pot: &PotentialSample,
    params: &PhysicsParams,
    config: &LighthillConfig,
) -> SourceTensorField {
    let conv = &config.convention;
    let mut t = parts.reynolds.clone();
    t.add_isotropic(-config.c0 * config.c0, &parts.n);
    t.axpy(-conv.s_pi.value(), &parts.stress);
    let n2 = parts.n.map(|x| x * x);
    t.add_isotropic(
        -conv.s_g.value() * params.coupling / (2.0 * params.mass),
        &n2,
    );
    let has_v = pot.value.max_abs() > 0.0;
    let dipole = match conv.potential_form {
        PotentialForm::TensorAbsorbed => {
            if has_v {
                let nv = parts.n.zip_map(&pot.value, |a, b| a * b);
                t.add_isotropic(-1.0 / params.mass, &nv);
            }
            None
        }
        PotentialForm::Dipole => Some(if has_v {
            dipole_source(&parts.n, pot, params.mass)
        } else {
            RealField::zeros(parts.n.grid())
        }),
    };
    SourceTensorField { t, dipole }
}

/// Source tensor of one snapshot under `config.convention`.
pub fn assemble_source_tensor(
    bundle: &HydroBundle,
    potential: &PotentialSample,
    params: &PhysicsParams,
    config: &LighthillConfig,
) -> SourceTensorField {
    let parts = source_parts(&bundle.n, &bundle.j, None, params);
    assemble(&parts, potential, params, config)
}

/// Densities at five uniformly spaced times and the current at the middle one.
/// When the middle wavefunction is known the flux terms are evaluated from it.
#[derive(Debug, Clone)]
pub struct DensityWindow {
    pub times: [f64; 5],
    pub n: [RealField; 5],
    pub j: VectorField,
    pub psi: Option<ComplexField>,
}

impl DensityWindow {
    pub fn from_trajectory(traj: &Trajectory, slice: usize) -> Result<Self> {
        let win = traj.window(slice)?;
        Ok(DensityWindow {
            times: std::array::from_fn(|k| win[k].t),
            n: std::array::from_fn(|k| density(&win[k].psi)),
            j: current(&win[2].psi, &traj.params),
            psi: Some(win[2].psi.clone()),
        })
    }

    /// Pointwise sum of two windows (used to probe superposition).
    pub fn superpose(&self, other: &DensityWindow) -> DensityWindow {
        let j = VectorField::from_components(
            self.j.grid(),
            (0..self.j.grid().dim())
                .map(|a| {
                    self.j
                        .component_field(a)
                        .zip_map(&other.j.component_field(a), |x, y| x + y)
                })
                .collect(),
        );
        DensityWindow {
            times: self.times,
            n: std::array::from_fn(|k| self.n[k].zip_map(&other.n[k], |x, y| x + y)),
            j,
            psi: None,
        }
    }

    pub fn scaled(&self, s: f64) -> DensityWindow {
        DensityWindow {
            times: self.times,
            n: std::array::from_fn(|k| self.n[k].scaled(s)),
            j: self.j.scaled(s),
            psi: match &self.psi {
                Some(p) if s >= 0.0 => Some(p.scaled(s.sqrt().into())),
                _ => None,
            },
        }
    }

    fn mask(&self, floor: f64) -> Mask {
        let mut m = Mask::from_density(&self.n[0], floor);
        for n in &self.n[1..] {
            m = m.intersect(&Mask::from_density(n, floor));
        }
        m
    }
}

/// Discrete Laplacian used on the `c0^2 lap n` side of the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianOp {
    /// Same operator as the double divergence of the source tensor.
    Spectral,
    /// Second-order finite differences; breaks the exact `c0` cancellation.
    FiniteDifference,
}

/// `d_t^2 n - c0^2 lap n - d_i d_j T_ij - dipole` for a density window.
pub fn lighthill_residual_window(
    win: &DensityWindow,
    params: &PhysicsParams,
    potential: &PotentialSpec,
    config: &LighthillConfig,
    slice: usize,
) -> Result<ResidualReport> {
    residual_impl(win, params, potential, config, slice, LaplacianOp::Spectral)
}

fn residual_impl(
    win: &DensityWindow,
    params: &PhysicsParams,
    potential: &PotentialSpec,
    config: &LighthillConfig,
    slice: usize,
    lap_op: LaplacianOp,
) -> Result<ResidualReport> {
    config.validate()?;
    let grid = win.n[2].grid().clone();
    let dt2_n = time_stencil_at(&win.times, &win.n, 2, TimeOrder::Second)?;
    let n = &win.n[2];
    let t = win.times[2];
    let pot = potential.evaluate(&grid, params, t)?;
    let parts = source_parts(n, &win.j, win.psi.as_ref(), params);
    let src = assemble(&parts, &pot, params, config);
    let c2 = config.c0 * config.c0;
    let lap_n = match lap_op {
        LaplacianOp::Spectral => spectral_laplacian(n),
        LaplacianOp::FiniteDifference => fd_laplacian(n),
    };
    let dd_t = double_divergence(&src.t);
    let mut r = dt2_n.clone();
    r.axpy(-c2, &lap_n);
    r.axpy(-1.0, &dd_t);
    if let Some(d) = &src.dipole {
        r.axpy(-1.0, d);
    }

    // c0-free constituents for the relative norm.
    let conv = &config.convention;
    let mask = win.mask(config.density_floor);
    let dv = grid.cell_volume();
    let dd = |t: &SymTensorField, s: f64| double_divergence(t).scaled(s);
    let dd_reynolds = dd(&parts.reynolds, 1.0);
    let dd_stress = dd(&parts.stress, conv.s_pi.value());
    let mut gn2 = SymTensorField::zeros(&grid);
    gn2.add_isotropic(params.coupling / (2.0 * params.mass), &n.map(|x| x * x));
    let dd_inter = dd(&gn2, conv.s_g.value());
    let pot_term = match &src.dipole {
        Some(d) => d.clone(),
        None => spectral_laplacian(&n.zip_map(&pot.value, |a, b| a * b)).scaled(1.0 / params.mass),
    };
    let terms = vec![
        term("dt2_n", &mask, &[dt2_n.values()], dv),
        term("ddiv_nvv", &mask, &[dd_reynolds.values()], dv),
        term("ddiv_Pi", &mask, &[dd_stress.values()], dv),
        term("ddiv_gn2", &mask, &[dd_inter.values()], dv),
        term("potential", &mask, &[pot_term.values()], dv),
    ];
    let dt = win.times[3] - win.times[2];
    Ok(
        ResidualReport::new("lighthill", t, slice, vec![r], mask, terms, dt)
            .with_convention(&conv.name())
            .with_c0(config.c0),
    )
}

/// Residual of the density wave equation at `slice` of a trajectory.
pub fn lighthill_residual(
    traj: &Trajectory,
    slice: usize,
    config: &LighthillConfig,
) -> Result<ResidualReport> {
    let win = DensityWindow::from_trajectory(traj, slice)?;
    lighthill_residual_window(&win, &traj.params, &traj.potential, config, slice)
}

/// Outcome of comparing residual fields across reference speeds.
#[derive(Debug, Clone)]
pub struct C0Report {
    pub c0: Vec<f64>,
    pub l2_abs: Vec<f64>,
    /// Largest pointwise difference between any residual field and the first.
    pub max_pointwise_diff: f64,
    /// `max_pointwise_diff` relative to the largest residual magnitude.
    pub max_relative_diff: f64,
}

/// Evaluates the residual for every `c0` and reports how far the fields differ.
pub fn c0_independence_check(
    traj: &Trajectory,
    slice: usize,
    c0_list: &[f64],
    config: &LighthillConfig,
) -> Result<C0Report> {
    c0_check_with(traj, slice, c0_list, config, LaplacianOp::Spectral)
}

/// As [`c0_independence_check`] with a chosen Laplacian on the left-hand side.
/// A finite-difference left-hand side against spectral source derivatives no
/// longer cancels the `c0^2` pieces, so the fields drift apart.
pub fn c0_check_with(
    traj: &Trajectory,
    slice: usize,
    c0_list: &[f64],
    config: &LighthillConfig,
    lap_op: LaplacianOp,
) -> Result<C0Report> {
    if c0_list.len() < 2 {
        return Err(Error::InvalidArgument(
            "c0 check needs at least two reference speeds".into(),
        ));
    }
    let win = DensityWindow::from_trajectory(traj, slice)?;
    let reports = c0_list
        .iter()
        .map(|&c0| {
            residual_impl(
                &win,
                &traj.params,
                &traj.potential,
                &config.with_c0(c0),
                slice,
                lap_op,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let base = reports[0].field[0].values();
    let mut max_diff: f64 = 0.0;
    let mut max_mag: f64 = 0.0;
    for r in &reports {
        for (x, y) in r.field[0].values().iter().zip(base) {
            max_diff = max_diff.max((x - y).abs());
            max_mag = max_mag.max(x.abs());
        }
    }
    Ok(C0Report {
        c0: c0_list.to_vec(),
        l2_abs: reports.iter().map(|r| r.l2_abs).collect(),
        max_pointwise_diff: max_diff,
        max_relative_diff: if max_mag > 0.0 {
            max_diff / max_mag
        } else {
            0.0
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpe::{evolve, initialize_state, Preset};
    use crate::grid::GridSpec;

    fn p() -> PhysicsParams {
        PhysicsParams::default()
    }

    #[test]
    fn uniform_state_has_isotropic_source() {
        let g = GridSpec::centered(2, 8.0, 16).unwrap();
        let psi = initialize_state(&g, &Preset::Uniform { amplitude: 1.5 }, &p()).unwrap();
        let b = HydroBundle::from_psi(&psi, &p());
        let cfg = LighthillConfig::default().with_c0(2.0);
        let src = assemble_source_tensor(&b, &PotentialSample::zero(&g), &p(), &cfg);
        assert!(src
            .t
            .get(0, 0)
            .iter()
            .all(|x| (x + 4.0 * 2.25).abs() < 1e-12));
        assert!(src.t.get(0, 1).iter().all(|x| x.abs() < 1e-12));
        assert!(double_divergence(&src.t).max_abs() < 1e-12);
    }

    #[test]
    fn gaussian_density_source_closed_form() {
        let g = GridSpec::centered(1, 16.0, 128).unwrap();
        let n = RealField::from_fn(&g, |q| (-q[0] * q[0]).exp());
        let b = HydroBundle::from_density(&n, &p(), DEFAULT_MASK_FLOOR);
        let c0 = 1.5;
        let src = assemble_source_tensor(
            &b,
            &PotentialSample::zero(&g),
            &p(),
            &LighthillConfig::default().with_c0(c0),
        );
        for (k, x) in src.t.get(0, 0).iter().enumerate() {
            let e = (-c0 * c0 + 0.5) * n.values()[k];
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_residual_vanishes() {
        let g = GridSpec::new(1, &[std::f64::consts::TAU], &[32], &[0.0]).unwrap();
        let psi = initialize_state(
            &g,
            &Preset::PlaneWave {
                k: vec![2.0],
                amplitude: 1.0,
            },
            &p(),
        )
        .unwrap();
        let traj = evolve(&psi, &PotentialSpec::none(), &p(), 0.05, 0.01, 1).unwrap();
        for conv in [SignConvention::AUDITED, SignConvention::PRINTED] {
            let r = lighthill_residual(&traj, 2, &LighthillConfig::default().with_convention(conv))
                .unwrap();
            assert!(r.l2_abs < 1e-10, "{}", r.l2_abs);
        }
    }

    #[test]
    fn c0_cancellation_and_mismatch() {
        let g = GridSpec::centered(1, 20.0, 128).unwrap();
        let pre = Preset::Gaussian {
            sigma: 1.0,
            center: vec![0.0],
            boost: vec![0.5],
        };
        let psi = initialize_state(&g, &pre, &p()).unwrap();
        let traj = evolve(&psi, &PotentialSpec::none(), &p(), 0.05, 0.01, 1).unwrap();
        let cfg = LighthillConfig::default();
        let rep = c0_independence_check(&traj, 2, &[0.5, 1.0, 2.0], &cfg).unwrap();
        assert!(rep.max_pointwise_diff < 1e-12, "{}", rep.max_pointwise_diff);
        let fd = c0_check_with(
            &traj,
            2,
            &[0.5, 1.0, 2.0],
            &cfg,
            LaplacianOp::FiniteDifference,
        )
        .unwrap();
        assert!(fd.max_pointwise_diff > 1e-4);
        assert!(c0_independence_check(&traj, 2, &[1.0], &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(LighthillConfig::default().with_c0(0.0).validate().is_err());
        assert!(LighthillConfig::default()
            .with_kernel(Kernel::Mixed(1.5))
            .validate()
            .is_err());
        assert!(LighthillConfig::default()
            .with_kernel(Kernel::Mixed(0.3))
            .validate()
            .is_ok());
    }
}
