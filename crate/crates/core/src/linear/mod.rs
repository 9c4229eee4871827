//! Linearised density wave equation for a perturbation `dn` over a background
//! `n0`, with initial-value and two-time boundary-value drivers.

mod dispersion;
pub mod krylov;
mod two_time;

pub use dispersion::{
    bogoliubov_omega, dispersion_csv, dispersion_scan, measure_frequency, DispersionPoint,
    DispersionSettings, TangentLineTest, DISPERSION_CSV_HEADER,
};
pub use two_time::{solve_two_time, BoundaryData, TwoTimeSolution};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gpe::{PhysicsParams, PotentialSample, PotentialSpec};
use crate::grid::{
    divergence, double_divergence, gradient_vector, spectral_laplacian, spectral_mixed,
    ComplexField, GridSpec, RealField, SymTensorField, VectorField,
};
use crate::hydro::PotentialForm;
use crate::madelung::{density, velocity_masked, DEFAULT_MASK_FLOOR};
use crate::residual::Mask;

/// Which form of the linearised equation to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearMode {
    /// Derived from the flux-form momentum equation; needs a background at rest.
    Audited,
    /// The printed equation taken verbatim, background velocity held fixed.
    FrozenVelocity,
}

impl LinearMode {
    pub fn name(&self) -> &'static str {
        match self {
            LinearMode::Audited => "audited",
            LinearMode::FrozenVelocity => "frozen-velocity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearConfig {
    pub mode: LinearMode,
    /// `Dipole`: `(1/m) d_i (dn d_i V)`. `TensorAbsorbed`: `-(1/m) lap (V dn)`.
    pub potential_form: PotentialForm,
    pub c0: f64,
    /// Relative residual at which the space-time solve stops.
    pub solver_tol: f64,
    pub max_iterations: usize,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            mode: LinearMode::Audited,
            potential_form: PotentialForm::Dipole,
            c0: 1.0,
            solver_tol: 1e-10,
            max_iterations: 20_000,
        }
    }
}

impl LinearConfig {
    pub fn frozen_velocity() -> Self {
        LinearConfig {
            mode: LinearMode::FrozenVelocity,
            potential_form: PotentialForm::TensorAbsorbed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "c0 must be positive, got {}",
                self.c0
            )));
        }
        if !(self.solver_tol > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "solver tolerance and iteration cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Background state the perturbation lives on. The potential must be static.
#[derive(Debug, Clone)]
pub struct Background {
    pub n0: RealField,
    pub v0: VectorField,
    pub potential: PotentialSpec,
    pub params: PhysicsParams,
    /// `grad ln n0` on the mask, zero outside.
    pub ln_grad: VectorField,
    pub mask: Mask,
    sample: PotentialSample,
}

/// Largest background speed still treated as a fluid at rest.
const REST_TOLERANCE: f64 = 1e-10;

impl Background {
    /// Background at rest with density `n0`.
    pub fn from_density(
        n0: RealField,
        potential: PotentialSpec,
        params: PhysicsParams,
    ) -> Result<Self> {
        let v0 = VectorField::zeros(n0.grid());
        Self::assemble(n0, v0, potential, params, DEFAULT_MASK_FLOOR)
    }

    /// Background taken from a wavefunction; `v0` is its Madelung velocity.
    pub fn from_psi(
        psi: &ComplexField,
        potential: PotentialSpec,
        params: PhysicsParams,
    ) -> Result<Self> {
        let (v0, _) = velocity_masked(psi, &params, DEFAULT_MASK_FLOOR);
        Self::assemble(density(psi), v0, potential, params, DEFAULT_MASK_FLOOR)
    }

    /// Uniform density `n0` without an external potential.
    pub fn uniform(grid: &GridSpec, n0: f64, params: PhysicsParams) -> Result<Self> {
        Self::from_density(RealField::constant(grid, n0), PotentialSpec::none(), params)
    }

    fn assemble(
        n0: RealField,
        v0: VectorField,
        potential: PotentialSpec,
        params: PhysicsParams,
        floor: f64,
    ) -> Result<Self> {
        params.validate()?;
        let grid = n0.grid().clone();
        if n0.values().iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "background density must be finite and non-negative".into(),
            ));
        }
        if !potential.is_static() {
            return Err(Error::InvalidArgument(
                "linearisation needs a static potential".into(),
            ));
        }
        let sample = potential.evaluate(&grid, &params, 0.0)?;
        let mask = Mask::from_density(&n0, floor);
        let grad = gradient_vector(&n0);
        let comps = (0..grid.dim())
            .map(|a| {
                let vals = (0..grid.len())
                    .map(|k| {
                        if mask.contains(k) {
                            grad.component(a)[k] / n0.values()[k]
                        } else {
                            0.0
                        }
                    })
                    .collect();
                RealField::from_vec(&grid, vals)
            })
            .collect();
        Ok(Background {
            ln_grad: VectorField::from_components(&grid, comps),
            n0,
            v0,
            potential,
            params,
            mask,
            sample,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.n0.grid()
    }

    pub fn is_at_rest(&self) -> bool {
        self.v0.max_abs() <= REST_TOLERANCE
    }

    pub fn potential_sample(&self) -> &PotentialSample {
        &self.sample
    }

    /// Errors when `dn` has weight outside the background mask beyond the
    /// mask's own relative floor.
    pub fn check_support(&self, dn: &RealField) -> Result<()> {
        let peak = dn.max_abs();
        let outside = (0..dn.values().len())
            .filter(|&k| !self.mask.contains(k))
            .map(|k| dn.values()[k].abs())
            .fold(0.0, f64::max);
        if outside > self.mask.floor * peak {
            return Err(Error::SupportViolation {
                max_outside: outside,
            });
        }
        Ok(())
    }
}

/// Perturbation at one instant.
#[derive(Debug, Clone)]
pub struct PerturbationState {
    pub delta_n: RealField,
    pub delta_n_dot: RealField,
    pub t: f64,
}

impl PerturbationState {
    pub fn new(delta_n: RealField, delta_n_dot: RealField, t: f64) -> Self {
        PerturbationState {
            delta_n,
            delta_n_dot,
            t,
        }
    }

    /// Perturbation released from rest.
    pub fn at_rest(delta_n: RealField, t: f64) -> Self {
        let dot = RealField::zeros(delta_n.grid());
        PerturbationState::new(delta_n, dot, t)
    }
}

/// Stress perturbation
/// `(hbar^2/4m^2)[d_i d_j - L_i d_j - L_j d_i + L_i L_j] dn` with `L = grad ln n0`.
pub fn delta_stress_apply(bg: &Background, dn: &RealField) -> Result<SymTensorField> {
    bg.check_support(dn)?;
    Ok(delta_stress(bg, dn))
}

fn delta_stress(bg: &Background, dn: &RealField) -> SymTensorField {
    let grid = bg.grid();
    let d = grid.dim();
    let p = &bg.params;
    let c = p.hbar * p.hbar / (4.0 * p.mass * p.mass);
    let grad = gradient_vector(dn);
    let mut out = SymTensorField::zeros(grid);
    for i in 0..d {
        for j in i..d {
            let (li, lj) = (bg.ln_grad.component(i), bg.ln_grad.component(j));
            let (gi, gj) = (grad.component(i), grad.component(j));
            let hess = spectral_mixed(dn, i, j);
            let h = hess.values();
            let vals = (0..grid.len())
                .map(|k| {
                    c * (h[k] - li[k] * gj[k] - lj[k] * gi[k] + li[k] * lj[k] * dn.values()[k])
                })
                .collect();
            out.set(i, j, &RealField::from_vec(grid, vals));
        }
    }
    out
}

fn potential_term(bg: &Background, dn: &RealField, form: PotentialForm) -> Option<RealField> {
    if bg.sample.value.max_abs() == 0.0 {
        return None;
    }
    let m = bg.params.mass;
    Some(match form {
        PotentialForm::Dipole => {
            let grid = bg.grid();
            let flux = VectorField::from_components(
                grid,
                (0..grid.dim())
                    .map(|a| dn.zip_map(&bg.sample.gradient.component_field(a), |x, g| x * g))
                    .collect(),
            );
            divergence(&flux).scaled(1.0 / m)
        }
        PotentialForm::TensorAbsorbed => {
            spectral_laplacian(&dn.zip_map(&bg.sample.value, |x, v| x * v)).scaled(-1.0 / m)
        }
    })
}

/// Right-hand side of `d_t^2 dn = rhs`.
///
/// Audited: `-d_i d_j dPi_ij + (g/m) lap(n0 dn) + V-term`.
/// Frozen velocity: `d_i d_j{[v_i v_j - c0^2 delta_ij] dn + dPi_ij} + c0^2 lap dn + V-term`.
pub fn linearized_rhs(bg: &Background, dn: &RealField, config: &LinearConfig) -> Result<RealField> {
    config.validate()?;
    if config.mode == LinearMode::Audited && !bg.is_at_rest() {
        return Err(Error::InvalidArgument(format!(
            "audited linearisation needs a background at rest, max |v0| = {:e}",
            bg.v0.max_abs()
        )));
    }
    bg.check_support(dn)?;
    Ok(apply_operator(bg, dn, config))
}

/// The linear operator without argument checks.
pub(crate) fn apply_operator(bg: &Background, dn: &RealField, config: &LinearConfig) -> RealField {
    let dpi = delta_stress(bg, dn);
    let mut out = match config.mode {
        LinearMode::Audited => {
            let mut r = double_divergence(&dpi).scaled(-1.0);
            if bg.params.coupling != 0.0 {
                let nd = bg.n0.zip_map(dn, |a, b| a * b);
                r.axpy(
                    bg.params.coupling / bg.params.mass,
                    &spectral_laplacian(&nd),
                );
            }
            r
        }
        LinearMode::FrozenVelocity => {
            let grid = bg.grid();
            let d = grid.dim();
            let c2 = config.c0 * config.c0;
            let mut t = dpi;
            for i in 0..d {
                for j in i..d {
                    let (vi, vj) = (bg.v0.component(i), bg.v0.component(j));
                    let add: Vec<f64> = (0..grid.len())
                        .map(|k| vi[k] * vj[k] * dn.values()[k])
                        .collect();
                    let mut cur = t.component_field(i, j);
                    cur.axpy(1.0, &RealField::from_vec(grid, add));
                    t.set(i, j, &cur);
                }
            }
            t.add_isotropic(-c2, dn);
            let mut r = double_divergence(&t);
            r.axpy(c2, &spectral_laplacian(dn));
            r
        }
    };
    if let Some(v) = potential_term(bg, dn, config.potential_form) {
        out.axpy(1.0, &v);
    }
    out
}

/// Spectral radius of the linear operator and the resulting leapfrog step limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityEstimate {
    pub spectral_radius: f64,
    /// `2 / sqrt(rho)` with a safety margin on `rho`.
    pub dt_max: f64,
}

const POWER_ITERATIONS: usize = 80;
const RADIUS_MARGIN: f64 = 1.05;

/// Power-iteration estimate of the largest `|lambda|` of the operator.
pub fn stability_bound(bg: &Background, config: &LinearConfig) -> Result<StabilityEstimate> {
    config.validate()?;
    let grid = bg.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(0x51ab);
    let mut x = RealField::from_vec(
        grid,
        (0..grid.len())
            .map(|k| {
                if bg.mask.contains(k) {
                    rng.gen::<f64>() - 0.5
                } else {
                    0.0
                }
            })
            .collect(),
    );
    let mut rho = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let norm = x.l2();
        if norm == 0.0 {
            break;
        }
        x = x.scaled(1.0 / norm);
        let mut y = apply_operator(bg, &x, config);
        bg.mask.zero_outside(&mut y);
        rho = y.l2();
        x = y;
    }
    let rho = rho * RADIUS_MARGIN;
    Ok(StabilityEstimate {
        spectral_radius: rho,
        dt_max: if rho > 0.0 {
            2.0 / rho.sqrt()
        } else {
            f64::INFINITY
        },
    })
}

/// Leapfrog integration of the linearised equation.
#[derive(Debug, Clone)]
pub struct LinearTrajectory {
    pub dt: f64,
    pub states: Vec<PerturbationState>,
    /// Discrete leapfrog energy `|u'|^2/2 - <u_{k+1}, L u_k>/2` per stored step.
    pub energy: Vec<f64>,
    /// Smallest value of `n0 + dn` seen; negative values are allowed.
    pub min_total_density: f64,
}

impl LinearTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn final_state(&self) -> &PerturbationState {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }
}

/// Growth of `|dn|` over its initial size that counts as a blow-up.
const BLOWUP_FACTOR: f64 = 1e8;

/// One leapfrog update `u_{k+1} = 2 u_k - u_{k-1} + dt^2 L u_k`.
pub(crate) fn leapfrog_next(
    bg: &Background,
    prev: &RealField,
    cur: &RealField,
    dt: f64,
    config: &LinearConfig,
) -> RealField {
    let mut next = apply_operator(bg, cur, config).scaled(dt * dt);
    next.axpy(2.0, cur);
    next.axpy(-1.0, prev);
    next
}

/// Leapfrog start `u_1 = u_0 + dt u'_0 + dt^2/2 L u_0`.
pub(crate) fn leapfrog_start(
    bg: &Background,
    state: &PerturbationState,
    dt: f64,
    config: &LinearConfig,
) -> RealField {
    let mut u1 = apply_operator(bg, &state.delta_n, config).scaled(0.5 * dt * dt);
    u1.axpy(1.0, &state.delta_n);
    u1.axpy(dt, &state.delta_n_dot);
    u1
}

fn leapfrog_energy(
    bg: &Background,
    cur: &RealField,
    next: &RealField,
    dt: f64,
    config: &LinearConfig,
) -> f64 {
    let vel = next.zip_map(cur, |a, b| (a - b) / dt);
    let lu = apply_operator(bg, cur, config);
    0.5 * vel.dot(&vel) - 0.5 * next.dot(&lu)
}

/// Integrates `d_t^2 dn = rhs(dn)` from `state0` to `t_end` with step `dt`.
pub fn evolve_ivp(
    bg: &Background,
    state0: &PerturbationState,
    t_end: f64,
    dt: f64,
    config: &LinearConfig,
) -> Result<LinearTrajectory> {
    config.validate()?;
    if config.mode == LinearMode::Audited && !bg.is_at_rest() {
        return Err(Error::InvalidArgument(
            "audited linearisation needs a background at rest".into(),
        ));
    }
    if !(dt > 0.0) || !(t_end >= state0.t) {
        return Err(Error::InvalidArgument("need dt > 0 and t_end >= t0".into()));
    }
    bg.check_support(&state0.delta_n)?;
    bg.check_support(&state0.delta_n_dot)?;
    let bound = stability_bound(bg, config)?;
    if dt > bound.dt_max {
        return Err(Error::StabilityBound {
            dt,
            bound: bound.dt_max,
        });
    }
    let steps = ((t_end - state0.t) / dt - 1e-9).ceil().max(0.0) as usize;
    let scale = state0
        .delta_n
        .max_abs()
        .max(state0.delta_n_dot.max_abs() * dt)
        .max(f64::MIN_POSITIVE);
    let min_density = |u: &RealField| bg.n0.zip_map(u, |a, b| a + b).min();

    let mut states = vec![state0.clone()];
    let mut energy = Vec::with_capacity(steps + 1);
    let mut min_total = min_density(&state0.delta_n);
    if steps == 0 {
        energy.push(0.0);
        return Ok(LinearTrajectory {
            dt,
            states,
            energy,
            min_total_density: min_total,
        });
    }
    let mut prev = state0.delta_n.clone();
    let mut cur = leapfrog_start(bg, state0, dt, config);
    energy.push(leapfrog_energy(bg, &prev, &cur, dt, config));
    for k in 1..=steps {
        let t = state0.t + k as f64 * dt;
        let next = leapfrog_next(bg, &prev, &cur, dt, config);
        if !next.is_finite() || next.max_abs() > BLOWUP_FACTOR * scale {
            return Err(Error::NumericalAbort {
                t,
                reason: format!(
                    "perturbation grew beyond {BLOWUP_FACTOR:e} times its initial size"
                ),
            });
        }
        let dot = next.zip_map(&prev, |a, b| (a - b) / (2.0 * dt));
        min_total = min_total.min(min_density(&cur));
        energy.push(leapfrog_energy(bg, &cur, &next, dt, config));
        states.push(PerturbationState::new(cur.clone(), dot, t));
        prev = cur;
        cur = next;
    }
    Ok(LinearTrajectory {
        dt,
        states,
        energy,
        min_total_density: min_total,
    })
}

/// Runs the leapfrog recursion backwards from the last two slices of `traj`
/// and returns the reconstructed initial slice.
pub fn reverse_leapfrog(
    bg: &Background,
    traj: &LinearTrajectory,
    config: &LinearConfig,
) -> Result<RealField> {
    let n = traj.states.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "need at least two slices to reverse".into(),
        ));
    }
    let mut later = traj.states[n - 1].delta_n.clone();
    let mut cur = traj.states[n - 2].delta_n.clone();
    for _ in 0..n - 2 {
        let earlier = leapfrog_next(bg, &later, &cur, traj.dt, config);
        later = cur;
        cur = earlier;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use std::f64::consts::TAU;

    fn uniform(g: f64) -> Background {
        let grid = GridSpec::centered(1, 20.0, 64).unwrap();
        Background::uniform(&grid, 1.0, PhysicsParams::default().with_coupling(g)).unwrap()
    }

    #[test]
    fn uniform_background_stress_is_pure_hessian() {
        let bg = uniform(0.0);
        let k = TAU / 20.0 * 3.0;
        let dn = RealField::from_fn(bg.grid(), |p| (k * p[0]).cos());
        let s = delta_stress_apply(&bg, &dn).unwrap();
        let expect = dn.scaled(-0.25 * k * k);
        let diff = s
            .component_field(0, 0)
            .zip_map(&expect, |a, b| a - b)
            .max_abs();
        assert!(diff < 1e-12);
    }

    #[test]
    fn zero_perturbation_gives_zero() {
        let bg = uniform(1.0);
        let z = RealField::zeros(bg.grid());
        assert_eq!(delta_stress_apply(&bg, &z).unwrap().max_abs(), 0.0);
        assert_eq!(
            linearized_rhs(&bg, &z, &LinearConfig::default())
                .unwrap()
                .max_abs(),
            0.0
        );
    }

    #[test]
    fn gaussian_background_stress_matches_expansion() {
        // n0 = dn = exp(-x^2): L = -2x, dn' = -2x e, dn'' = (4x^2 - 2) e.
        let grid = GridSpec::centered(1, 16.0, 256).unwrap();
        let n0 = RealField::from_fn(&grid, |p| (-p[0] * p[0]).exp());
        let bg =
            Background::from_density(n0.clone(), PotentialSpec::none(), PhysicsParams::default())
                .unwrap();
        let s = delta_stress_apply(&bg, &n0).unwrap();
        for k in 0..grid.len() {
            if !bg.mask.contains(k) {
                continue;
            }
            let x = grid.coord(0, k);
            let e = (-x * x).exp();
            let l = -2.0 * x;
            let exact = 0.25 * ((4.0 * x * x - 2.0) * e - 2.0 * l * (-2.0 * x * e) + l * l * e);
            assert!((s.get(0, 0)[k] - exact).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn support_outside_mask_rejected() {
        let grid = GridSpec::centered(1, 40.0, 128).unwrap();
        let n0 = RealField::from_fn(&grid, |p| (-p[0] * p[0]).exp());
        let bg =
            Background::from_density(n0, PotentialSpec::none(), PhysicsParams::default()).unwrap();
        let dn = RealField::from_fn(&grid, |p| (-(p[0] - 15.0).powi(2)).exp());
        assert!(matches!(
            delta_stress_apply(&bg, &dn),
            Err(Error::SupportViolation { .. })
        ));
    }

    #[test]
    fn free_cosine_follows_free_particle_dispersion() {
        let bg = uniform(0.0);
        let k = TAU / 20.0 * 2.0;
        let dn = RealField::from_fn(bg.grid(), |p| (k * p[0]).cos());
        let r = linearized_rhs(&bg, &dn, &LinearConfig::default()).unwrap();
        let expect = dn.scaled(-0.25 * k.powi(4));
        assert!(r.zip_map(&expect, |a, b| a - b).max_abs() < 1e-12);
    }

    #[test]
    fn audited_mode_rejects_moving_background() {
        let grid = GridSpec::centered(1, 20.0, 64).unwrap();
        let k = TAU / 20.0;
        let psi =
            ComplexField::from_fn(&grid, |p| num_complex::Complex64::from_polar(1.0, k * p[0]));
        let bg =
            Background::from_psi(&psi, PotentialSpec::none(), PhysicsParams::default()).unwrap();
        let dn = RealField::from_fn(&grid, |p| (k * p[0]).cos());
        assert!(linearized_rhs(&bg, &dn, &LinearConfig::default()).is_err());
        assert!(linearized_rhs(&bg, &dn, &LinearConfig::frozen_velocity()).is_ok());
    }

    #[test]
    fn frozen_velocity_c0_pieces_cancel() {
        let grid = GridSpec::centered(1, 20.0, 64).unwrap();
        let bg = Background::uniform(&grid, 1.0, PhysicsParams::default()).unwrap();
        let dn = RealField::from_fn(&grid, |p| (-(p[0] * p[0])).exp());
        let a = linearized_rhs(
            &bg,
            &dn,
            &LinearConfig {
                c0: 0.5,
                ..LinearConfig::frozen_velocity()
            },
        )
        .unwrap();
        let b = linearized_rhs(
            &bg,
            &dn,
            &LinearConfig {
                c0: 3.0,
                ..LinearConfig::frozen_velocity()
            },
        )
        .unwrap();
        assert!(a.zip_map(&b, |x, y| x - y).max_abs() < 1e-12 * a.max_abs().max(1.0));
    }

    #[test]
    fn zero_state_stays_zero() {
        let bg = uniform(1.0);
        let z = PerturbationState::at_rest(RealField::zeros(bg.grid()), 0.0);
        let tr = evolve_ivp(&bg, &z, 1.0, 0.01, &LinearConfig::default()).unwrap();
        assert!(tr.states.iter().all(|s| s.delta_n.max_abs() == 0.0));
    }

    #[test]
    fn step_above_bound_rejected() {
        let bg = uniform(1.0);
        let est = stability_bound(&bg, &LinearConfig::default()).unwrap();
        // Exact radius for the uniform audited operator on this grid.
        let kmax = bg.grid().k_max();
        let exact = kmax * kmax + 0.25 * kmax.powi(4);
        assert!(est.spectral_radius >= exact * 0.999 && est.spectral_radius <= exact * 1.06);
        let dn = RealField::from_fn(bg.grid(), |p| (TAU / 20.0 * p[0]).cos());
        let s = PerturbationState::at_rest(dn, 0.0);
        assert!(matches!(
            evolve_ivp(&bg, &s, 1.0, est.dt_max * 1.5, &LinearConfig::default()),
            Err(Error::StabilityBound { .. })
        ));
    }

    #[test]
    fn printed_sign_blows_up() {
        let bg = uniform(0.0);
        let dn = RealField::from_fn(bg.grid(), |p| (TAU / 20.0 * 8.0 * p[0]).cos());
        let s = PerturbationState::at_rest(dn, 0.0);
        let cfg = LinearConfig::frozen_velocity();
        let dt = 0.5 * stability_bound(&bg, &cfg).unwrap().dt_max;
        assert!(matches!(
            evolve_ivp(&bg, &s, 50.0, dt, &cfg),
            Err(Error::NumericalAbort { .. })
        ));
    }

    #[test]
    fn leapfrog_reverses_exactly() {
        let bg = uniform(1.0);
        let dn = RealField::from_fn(bg.grid(), |p| (-(p[0] - 1.0).powi(2)).exp());
        let s = PerturbationState::at_rest(dn.clone(), 0.0);
        let tr = evolve_ivp(&bg, &s, 2.0, 0.01, &LinearConfig::default()).unwrap();
        let back = reverse_leapfrog(&bg, &tr, &LinearConfig::default()).unwrap();
        assert!(back.zip_map(&dn, |a, b| a - b).max_abs() < 1e-11);
    }

    #[test]
    fn leapfrog_energy_is_conserved_for_symmetric_operator() {
        let bg = uniform(1.0);
        let dn = RealField::from_fn(bg.grid(), |p| (-(p[0] * p[0])).exp());
        let s = PerturbationState::at_rest(dn, 0.0);
        let tr = evolve_ivp(&bg, &s, 5.0, 0.01, &LinearConfig::default()).unwrap();
        let e0 = tr.energy[0];
        assert!(tr.energy.iter().all(|e| (e - e0).abs() < 1e-10 * e0.abs()));
    }
}
