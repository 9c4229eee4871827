//! Hydrodynamic fields of a wavefunction `psi = sqrt(n) exp(i S / hbar)`.
//!
//! Velocities and quantum potentials are evaluated from logarithmic
//! derivatives of `psi`, never from an unwrapped phase, so nodes and
//! vortices only cost the masked points around them.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::Result;
use crate::gpe::{PhysicsParams, Trajectory};
use crate::grid::time_stencil_at;
use crate::grid::{
    gradient_vector, spectral_laplacian, ComplexField, GridSpec, RealField, Spectral, TimeOrder,
    VectorField,
};
use crate::residual::{term, Mask, ResidualReport};

/// Default mask floor relative to `max n`.
pub const DEFAULT_MASK_FLOOR: f64 = 1e-8;
/// Relative density below which `x / n` quotients of smooth numerators are set to zero.
pub const DIVISION_FLOOR: f64 = 1e-14;

pub fn density(psi: &ComplexField) -> RealField {
    psi.modulus_squared()
}

/// Spatial derivatives of `psi` up to second order from one forward transform.
pub(crate) struct PsiDerivatives {
    pub d1: Vec<Vec<Complex64>>,
    /// `d_a d_b psi` indexed by `[a][b]`.
    pub d2: Vec<Vec<Vec<Complex64>>>,
    pub lap: Vec<Complex64>,
}

impl PsiDerivatives {
    pub fn new(psi: &ComplexField, second: bool) -> Self {
        let grid = psi.grid();
        let d = grid.dim();
        let sp = Spectral::cached(grid);
        let mut spec = psi.values().to_vec();
        sp.forward(&mut spec);
        let deriv = |orders: [u32; 3]| {
            let mut s = spec.clone();
            sp.differentiate(&mut s, orders);
            sp.inverse(&mut s);
            s
        };
        let unit = |a: usize| {
            let mut o = [0u32; 3];
            o[a] += 1;
            o
        };
        let d1 = (0..d).map(|a| deriv(unit(a))).collect();
        let mut d2 = Vec::new();
        let mut lap = Vec::new();
        if second {
            d2 = vec![vec![Vec::new(); d]; d];
            for a in 0..d {
                for b in a..d {
                    let mut o = unit(a);
                    o[b] += 1;
                    let v = deriv(o);
                    if a != b {
                        d2[b][a] = v.clone();
                    }
                    d2[a][b] = v;
                }
            }
            let mut s = spec.clone();
            sp.laplacian_in_place(&mut s);
            sp.inverse(&mut s);
            lap = s;
        }
        PsiDerivatives { d1, d2, lap }
    }
}

/// Probability current `(hbar/m) Im(conj(psi) grad psi)`; smooth through nodes.
pub fn current(psi: &ComplexField, params: &PhysicsParams) -> VectorField {
    let der = PsiDerivatives::new(psi, false);
    current_from(psi, &der, params)
}

fn current_from(psi: &ComplexField, der: &PsiDerivatives, params: &PhysicsParams) -> VectorField {
    let grid = psi.grid();
    let c = params.hbar / params.mass;
    let comps = der
        .d1
        .iter()
        .map(|da| {
            let v = psi
                .values()
                .iter()
                .zip(da)
                .map(|(p, d)| c * (p.conj() * d).im)
                .collect();
            RealField::from_vec(grid, v)
        })
        .collect();
    VectorField::from_components(grid, comps)
}

fn log_derivative_velocity(
    psi: &ComplexField,
    der: &PsiDerivatives,
    mask: &Mask,
    params: &PhysicsParams,
) -> VectorField {
    let grid = psi.grid();
    let c = params.hbar / params.mass;
    let comps = der
        .d1
        .iter()
        .map(|da| {
            let v = (0..grid.len())
                .map(|i| {
                    if mask.contains(i) {
                        c * (da[i] / psi.values()[i]).im
                    } else {
                        0.0
                    }
                })
                .collect();
            RealField::from_vec(grid, v)
        })
        .collect();
    VectorField::from_components(grid, comps)
}

/// `(hbar/m) Im(grad psi / psi)` on the default mask, zero elsewhere.
pub fn velocity(psi: &ComplexField, params: &PhysicsParams) -> VectorField {
    velocity_masked(psi, params, DEFAULT_MASK_FLOOR).0
}

/// Velocity together with the mask it is valid on.
pub fn velocity_masked(
    psi: &ComplexField,
    params: &PhysicsParams,
    floor: f64,
) -> (VectorField, Mask) {
    let mask = Mask::from_density(&density(psi), floor);
    let der = PsiDerivatives::new(psi, false);
    (log_derivative_velocity(psi, &der, &mask, params), mask)
}

/// `-(hbar^2/2m) lap sqrt(n) / sqrt(n)` with a spectral Laplacian, zero off the mask.
pub fn quantum_potential(n: &RealField, params: &PhysicsParams) -> RealField {
    quantum_potential_masked(n, params, DEFAULT_MASK_FLOOR)
}

pub fn quantum_potential_masked(n: &RealField, params: &PhysicsParams, floor: f64) -> RealField {
    let mask = Mask::from_density(n, floor);
    let root = n.map(|x| x.max(0.0).sqrt());
    let lap = spectral_laplacian(&root);
    let c = -params.hbar * params.hbar / (2.0 * params.mass);
    let v = (0..n.values().len())
        .map(|i| {
            if mask.contains(i) {
                c * lap.values()[i] / root.values()[i]
            } else {
                0.0
            }
        })
        .collect();
    RealField::from_vec(n.grid(), v)
}

/// `-(hbar^2/4m) [lap n / n - |grad n|^2 / (2 n^2)]`, the same potential written
/// without the square root.
pub fn quantum_potential_from_density_derivatives(
    n: &RealField,
    params: &PhysicsParams,
    floor: f64,
) -> RealField {
    let mask = Mask::from_density(n, floor);
    let lap = spectral_laplacian(n);
    let grad = gradient_vector(n);
    let g2 = grad.magnitude();
    let c = -params.hbar * params.hbar / (4.0 * params.mass);
    let v = (0..n.values().len())
        .map(|i| {
            if mask.contains(i) {
                let x = n.values()[i];
                c * (lap.values()[i] / x - 0.5 * g2.values()[i].powi(2) / (x * x))
            } else {
                0.0
            }
        })
        .collect();
    RealField::from_vec(n.grid(), v)
}

/// Quantum potential from `psi` directly: `-(hbar^2/2m) Re(lap psi / psi) - m |v|^2 / 2`.
fn quantum_potential_from_psi(
    psi: &ComplexField,
    der: &PsiDerivatives,
    v: &VectorField,
    mask: &Mask,
    params: &PhysicsParams,
) -> RealField {
    let grid = psi.grid();
    let c = -params.hbar * params.hbar / (2.0 * params.mass);
    let vals = (0..grid.len())
        .map(|i| {
            if !mask.contains(i) {
                return 0.0;
            }
            let v2: f64 = (0..grid.dim()).map(|a| v.component(a)[i].powi(2)).sum();
            c * (der.lap[i] / psi.values()[i]).re - 0.5 * params.mass * v2
        })
        .collect();
    RealField::from_vec(grid, vals)
}

/// A phase vortex found on one grid plaquette.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseVortex {
    /// Lower corner of the plaquette.
    pub index: usize,
    /// Axes spanning the plaquette.
    pub plane: (usize, usize),
    /// Winding number of the phase around it (counter-clockwise in the plane).
    pub winding: i32,
}

/// Unwrapped phase with its region labelling.
///
/// Within each connected masked region the phase is referenced to the first
/// point of the region (scan order), so each region carries its own
/// `2 pi hbar` branch constant.
#[derive(Debug, Clone)]
pub struct PhaseField {
    pub s: RealField,
    pub mask: Mask,
    pub region: Vec<Option<usize>>,
    pub region_count: usize,
    pub vortices: Vec<PhaseVortex>,
}

impl PhaseField {
    /// True when some loop inside the mask encloses a phase singularity, so no
    /// single-valued `S` exists there.
    pub fn is_multivalued(&self) -> bool {
        !self.vortices.is_empty()
    }

    pub fn net_winding(&self) -> i32 {
        self.vortices.iter().map(|v| v.winding).sum()
    }
}

fn wrap_angle(x: f64) -> f64 {
    x - TAU * ((x + PI) / TAU).floor()
}

/// Face neighbours of `idx` inside the box (no periodic wrap).
fn box_neighbours(grid: &GridSpec, idx: usize, out: &mut Vec<usize>) {
    out.clear();
    let ix = grid.unravel(idx);
    for a in 0..grid.dim() {
        for step in [-1i64, 1] {
            let k = ix[a] as i64 + step;
            if k < 0 || k >= grid.points(a) as i64 {
                continue;
            }
            let mut jx = ix;
            jx[a] = k as usize;
            out.push(grid.index(jx));
        }
    }
}

/// `S = hbar arg(psi)` unwrapped by breadth-first search over each connected
/// masked region, plus a plaquette scan for phase singularities.
pub fn phase_extract(psi: &ComplexField, params: &PhysicsParams) -> PhaseField {
    phase_extract_with(psi, params, DEFAULT_MASK_FLOOR)
}

pub fn phase_extract_with(psi: &ComplexField, params: &PhysicsParams, floor: f64) -> PhaseField {
    let grid = psi.grid();
    let mask = Mask::from_density(&density(psi), floor);
    let arg: Vec<f64> = psi.values().iter().map(|z| z.arg()).collect();
    let mut phase = vec![0.0; grid.len()];
    let mut region = vec![None; grid.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    let mut nb = Vec::with_capacity(6);
    for seed in 0..grid.len() {
        if !mask.contains(seed) || region[seed].is_some() {
            continue;
        }
        region[seed] = Some(count);
        phase[seed] = arg[seed];
        queue.push_back(seed);
        while let Some(cur) = queue.pop_front() {
            box_neighbours(grid, cur, &mut nb);
            for &j in &nb {
                if mask.contains(j) && region[j].is_none() {
                    region[j] = Some(count);
                    phase[j] = phase[cur] + wrap_angle(arg[j] - arg[cur]);
                    queue.push_back(j);
                }
            }
        }
        count += 1;
    }
    let mut vortices = Vec::new();
    let d = grid.dim();
    for a in 0..d {
        for b in a + 1..d {
            for idx in 0..grid.len() {
                let ix = grid.unravel(idx);
                if ix[a] + 1 >= grid.points(a) || ix[b] + 1 >= grid.points(b) {
                    continue;
                }
                let mut c1 = ix;
                c1[a] += 1;
                let mut c2 = c1;
                c2[b] += 1;
                let mut c3 = ix;
                c3[b] += 1;
                let corners = [idx, grid.index(c1), grid.index(c2), grid.index(c3)];
                if corners.iter().any(|&c| !mask.contains(c)) {
                    continue;
                }
                let total: f64 = (0..4)
                    .map(|k| wrap_angle(arg[corners[(k + 1) % 4]] - arg[corners[k]]))
                    .sum();
                let w = (total / TAU).round() as i32;
                if w != 0 {
                    vortices.push(PhaseVortex {
                        index: idx,
                        plane: (a, b),
                        winding: w,
                    });
                }
            }
        }
    }
    let s = phase
        .iter()
        .zip(mask.as_slice())
        .map(|(p, &m)| if m { params.hbar * p } else { 0.0 })
        .collect();
    PhaseField {
        s: RealField::from_vec(grid, s),
        mask,
        region,
        region_count: count,
        vortices,
    }
}

/// Madelung fields of one snapshot.
#[derive(Debug, Clone)]
pub struct HydroBundle {
    pub n: RealField,
    /// Probability current `n v`, kept separately because it stays smooth at nodes.
    pub j: VectorField,
    pub v: VectorField,
    pub s: RealField,
    pub q: RealField,
    pub mask: Mask,
}

impl HydroBundle {
    pub fn from_psi(psi: &ComplexField, params: &PhysicsParams) -> Self {
        Self::from_psi_with(psi, params, DEFAULT_MASK_FLOOR)
    }

    pub fn from_psi_with(psi: &ComplexField, params: &PhysicsParams, floor: f64) -> Self {
        let n = density(psi);
        let mask = Mask::from_density(&n, floor);
        let der = PsiDerivatives::new(psi, true);
        let j = current_from(psi, &der, params);
        let v = log_derivative_velocity(psi, &der, &mask, params);
        let q = quantum_potential_from_psi(psi, &der, &v, &mask, params);
        let s = phase_extract_with(psi, params, floor).s;
        HydroBundle {
            n,
            j,
            v,
            s,
            q,
            mask,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.n.grid()
    }

    /// Bundle of a density-only state (zero current).
    pub fn from_density(n: &RealField, params: &PhysicsParams, floor: f64) -> Self {
        let grid = n.grid();
        HydroBundle {
            n: n.clone(),
            j: VectorField::zeros(grid),
            v: VectorField::zeros(grid),
            s: RealField::zeros(grid),
            q: quantum_potential_masked(n, params, floor),
            mask: Mask::from_density(n, floor),
        }
    }
}

/// `grad v` and `grad Q` from `psi` derivatives up to third order.
struct EulerPieces {
    /// `(v . grad) v`
    advect: VectorField,
    grad_q: VectorField,
}

fn euler_pieces(psi: &ComplexField, mask: &Mask, params: &PhysicsParams) -> EulerPieces {
    let grid = psi.grid();
    let d = grid.dim();
    let der = PsiDerivatives::new(psi, true);
    let v = log_derivative_velocity(psi, &der, mask, params);
    let sp = Spectral::cached(grid);
    let mut spec = psi.values().to_vec();
    sp.forward(&mut spec);
    let grad_lap: Vec<Vec<Complex64>> = (0..d)
        .map(|b| {
            let mut s = spec.clone();
            let mut o = [0u32; 3];
            o[b] = 1;
            sp.apply(&mut s, |m| {
                sp.derivative_multiplier(m, o) * (-sp.k_squared(m))
            });
            sp.inverse(&mut s);
            s
        })
        .collect();
    let hm = params.hbar / params.mass;
    let cq = -params.hbar * params.hbar / (2.0 * params.mass);
    let mut advect = vec![vec![0.0; grid.len()]; d];
    let mut grad_q = vec![vec![0.0; grid.len()]; d];
    for i in 0..grid.len() {
        if !mask.contains(i) {
            continue;
        }
        let p = psi.values()[i];
        let p2 = p * p;
        // dv[a][b] = d_b v_a
        let mut dv = [[0.0; 3]; 3];
        for a in 0..d {
            for b in 0..d {
                dv[a][b] = hm * (der.d2[a][b][i] / p - der.d1[a][i] * der.d1[b][i] / p2).im;
            }
        }
        for a in 0..d {
            advect[a][i] = (0..d).map(|b| v.component(b)[i] * dv[a][b]).sum();
        }
        for b in 0..d {
            let dq_psi = cq * (grad_lap[b][i] / p - der.lap[i] * der.d1[b][i] / p2).re;
            let dq_flow: f64 = (0..d)
                .map(|a| params.mass * v.component(a)[i] * dv[a][b])
                .sum();
            grad_q[b][i] = dq_psi - dq_flow;
        }
    }
    let to_vec = |c: Vec<Vec<f64>>| {
        VectorField::from_components(
            grid,
            c.into_iter()
                .map(|x| RealField::from_vec(grid, x))
                .collect(),
        )
    };
    EulerPieces {
        advect: to_vec(advect),
        grad_q: to_vec(grad_q),
    }
}

/// Intersection of the density masks of the five snapshots around `slice`.
pub(crate) fn window_mask(traj: &Trajectory, slice: usize, floor: f64) -> Result<Mask> {
    let win = traj.window(slice)?;
    let mut mask = Mask::from_density(&density(&win[0].psi), floor);
    for s in &win[1..] {
        mask = mask.intersect(&Mask::from_density(&density(&s.psi), floor));
    }
    Ok(mask)
}

/// Gradient-form Hamilton-Jacobi residual
/// `m (d_t v + (v . grad) v) + grad(V + Q + g n)` at `slice`.
pub fn euler_residual(traj: &Trajectory, slice: usize) -> Result<ResidualReport> {
    euler_residual_with(traj, slice, DEFAULT_MASK_FLOOR)
}

pub fn euler_residual_with(traj: &Trajectory, slice: usize, floor: f64) -> Result<ResidualReport> {
    let win = traj.window(slice)?;
    let grid = traj.grid().clone();
    let d = grid.dim();
    let params = traj.params;
    let m = params.mass;
    let mask = window_mask(traj, slice, floor)?;
    let times: Vec<f64> = win.iter().map(|s| s.t).collect();
    let vel: Vec<VectorField> = win
        .iter()
        .map(|s| {
            let der = PsiDerivatives::new(&s.psi, false);
            log_derivative_velocity(&s.psi, &der, &mask, &params)
        })
        .collect();
    let centre = &win[2];
    let pieces = euler_pieces(&centre.psi, &mask, &params);
    let pot = traj.potential.evaluate(&grid, &params, centre.t)?;
    let n = density(&centre.psi);
    let grad_n = gradient_vector(&n);
    let mut field = Vec::with_capacity(d);
    let (mut dt_v, mut adv, mut gv, mut gq, mut gn) = (vec![], vec![], vec![], vec![], vec![]);
    for a in 0..d {
        let stack: Vec<RealField> = vel.iter().map(|v| v.component_field(a)).collect();
        let dv = time_stencil_at(&times, &stack, 2, TimeOrder::First)?.scaled(m);
        let ad = pieces.advect.component_field(a).scaled(m);
        let pv = pot.gradient.component_field(a);
        let pq = pieces.grad_q.component_field(a);
        let pn = grad_n.component_field(a).scaled(params.coupling);
        let mut r = dv.clone();
        for t in [&ad, &pv, &pq, &pn] {
            r.axpy(1.0, t);
        }
        mask.zero_outside(&mut r);
        field.push(r);
        dt_v.push(dv);
        adv.push(ad);
        gv.push(pv);
        gq.push(pq);
        gn.push(pn);
    }
    let dv = grid.cell_volume();
    let norm = |name: &str, fs: &Vec<RealField>| {
        let comps: Vec<&[f64]> = fs.iter().map(|f| f.values()).collect();
        term(name, &mask, &comps, dv)
    };
    let terms = vec![
        norm("m_dt_v", &dt_v),
        norm("m_v_grad_v", &adv),
        norm("grad_V", &gv),
        norm("grad_Q", &gq),
        norm("g_grad_n", &gn),
    ];
    Ok(ResidualReport::new(
        "euler", centre.t, slice, field, mask, terms, traj.dt,
    ))
}
