//! Boundary-value problem in time: `dn` pinned at two instants, interior
//! slices found from one space-time linear system.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::krylov::{gmres, minres_preconditioned, KrylovOutcome};
use super::{
    apply_operator, Background, LinearConfig, LinearMode, LinearTrajectory, PerturbationState,
};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField, Spectral};

/// Densities pinned at `t0` and `t1`.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub t0: f64,
    pub t1: f64,
    pub start: RealField,
    pub end: RealField,
}

#[derive(Debug, Clone)]
pub struct TwoTimeSolution {
    /// All `steps + 1` slices, boundary slices included; the rate at `t0` is
    /// recovered from the discrete start relation.
    pub trajectory: LinearTrajectory,
    pub iterations: usize,
    pub residual: f64,
    pub condition_estimate: f64,
    pub solver: &'static str,
}

const GMRES_RESTART: usize = 60;

/// Solves `u_{k+1} - 2 u_k + u_{k-1} = dt^2 L u_k` for `k = 1..steps-1` with
/// `u_0` and `u_steps` given.
pub fn solve_two_time(
    bg: &Background,
    data: &BoundaryData,
    steps: usize,
    config: &LinearConfig,
) -> Result<TwoTimeSolution> {
    config.validate()?;
    if !(data.t1 > data.t0) {
        return Err(Error::InvalidArgument(
            "two-time solve needs t1 > t0".into(),
        ));
    }
    if steps < 2 {
        return Err(Error::InvalidArgument(
            "two-time solve needs at least two steps".into(),
        ));
    }
    if bg.grid().dim() > 2 {
        return Err(Error::InvalidArgument(
            "the space-time solve is limited to 1D and 2D grids".into(),
        ));
    }
    if config.mode == LinearMode::Audited && !bg.is_at_rest() {
        return Err(Error::InvalidArgument(
            "audited linearisation needs a background at rest".into(),
        ));
    }
    bg.check_support(&data.start)?;
    bg.check_support(&data.end)?;

    let grid = bg.grid().clone();
    let n = grid.len();
    let m = steps - 1;
    let dt = (data.t1 - data.t0) / steps as f64;
    let dt2 = dt * dt;
    let apply = |x: &[f64], y: &mut [f64]| {
        y.par_chunks_mut(n).enumerate().for_each(|(k, yk)| {
            let uk = &x[k * n..(k + 1) * n];
            let lu = apply_operator(bg, &RealField::from_vec(&grid, uk.to_vec()), config);
            for i in 0..n {
                let below = if k > 0 { x[(k - 1) * n + i] } else { 0.0 };
                let above = if k + 1 < m { x[(k + 1) * n + i] } else { 0.0 };
                yk[i] = above - 2.0 * uk[i] + below - dt2 * lu.values()[i];
            }
        });
    };
    let mut rhs = vec![0.0; m * n];
    for i in 0..n {
        rhs[i] -= data.start.values()[i];
        rhs[(m - 1) * n + i] -= data.end.values()[i];
    }

    let pre = Preconditioner::new(bg, config, m, dt);
    let precond = |r: &[f64], z: &mut [f64]| pre.apply(r, z);
    let mut solver = "minres";
    let mut out = minres_preconditioned(
        &apply,
        &precond,
        &rhs,
        config.solver_tol,
        config.max_iterations,
    );
    out.residual = relative_residual(&apply, &out.x, &rhs);
    out.converged = out.residual <= config.solver_tol;
    if !out.converged {
        solver = "gmres";
        let first = out.clone();
        let right = |v: &[f64], y: &mut [f64]| {
            let mut z = vec![0.0; v.len()];
            pre.apply(v, &mut z);
            apply(&z, y);
        };
        out = gmres(
            &right,
            &rhs,
            config.solver_tol,
            GMRES_RESTART,
            config.max_iterations,
        );
        let mut x = vec![0.0; out.x.len()];
        pre.apply(&out.x, &mut x);
        out.x = x;
        if !out.converged {
            return Err(Error::NonConvergence {
                iterations: first.iterations + out.iterations,
                residual: out.residual.min(first.residual),
                condition_estimate: first.condition_estimate.max(out.condition_estimate),
            });
        }
    }
    let KrylovOutcome {
        x,
        iterations,
        residual,
        condition_estimate,
        ..
    } = out;

    let mut slices = Vec::with_capacity(steps + 1);
    slices.push(data.start.clone());
    slices.extend((0..m).map(|k| RealField::from_vec(&grid, x[k * n..(k + 1) * n].to_vec())));
    slices.push(data.end.clone());
    let trajectory = assemble_trajectory(bg, slices, data.t0, dt, config);
    Ok(TwoTimeSolution {
        trajectory,
        iterations,
        residual,
        condition_estimate,
        solver,
    })
}

/// `|A_ref|^-1` for the operator of a uniform reference background, applied
/// with a spatial FFT and a sine transform in time. Exact inverse (up to sign
/// per mode) when the background itself is uniform.
struct Preconditioner {
    grid: GridSpec,
    slices: usize,
    /// Inverse magnitudes indexed `[time mode][spatial mode]`.
    inv: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl Preconditioner {
    fn new(bg: &Background, config: &LinearConfig, slices: usize, dt: f64) -> Self {
        let grid = bg.grid().clone();
        let n = grid.len();
        let p = &bg.params;
        let c = p.hbar * p.hbar / (4.0 * p.mass * p.mass);
        let inside: Vec<f64> = (0..n)
            .filter(|&k| bg.mask.contains(k))
            .map(|k| bg.n0.values()[k])
            .collect();
        let n_ref = inside.iter().sum::<f64>() / inside.len().max(1) as f64;
        let sp = Spectral::cached(&grid);
        let symbol: Vec<f64> = (0..n)
            .map(|idx| {
                let k2 = sp.k_squared(grid.unravel(idx));
                match config.mode {
                    LinearMode::Audited => -(c * k2 * k2 + p.coupling * n_ref / p.mass * k2),
                    LinearMode::FrozenVelocity => c * k2 * k2,
                }
            })
            .collect();
        let s = (slices + 1) as f64;
        let mut eig = Vec::with_capacity(slices * n);
        for j in 1..=slices {
            let mu = -4.0 * (std::f64::consts::PI * j as f64 / (2.0 * s)).sin().powi(2);
            eig.extend(symbol.iter().map(|sig| mu - dt * dt * sig));
        }
        let big = eig.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        let inv = eig.iter().map(|e| 1.0 / e.abs().max(1e-12 * big)).collect();
        let fft = FftPlanner::new().plan_fft_forward(2 * (slices + 1));
        Preconditioner {
            grid,
            slices,
            inv,
            fft,
        }
    }

    /// Sine transform along time for every spatial mode; self-inverse up to `2 / (slices + 1)`.
    fn sine_transform(&self, data: &mut [Complex64]) {
        let n = self.grid.len();
        let m = self.slices;
        let len = 2 * (m + 1);
        let cols: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut buf = vec![Complex64::new(0.0, 0.0); len];
                for k in 0..m {
                    buf[k + 1] = data[k * n + i];
                    buf[len - 1 - k] = -data[k * n + i];
                }
                self.fft.process(&mut buf);
                (1..=m).map(|j| buf[j] * Complex64::new(0.0, 0.5)).collect()
            })
            .collect();
        for (i, col) in cols.iter().enumerate() {
            for (k, v) in col.iter().enumerate() {
                data[k * n + i] = *v;
            }
        }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.grid.len();
        let m = self.slices;
        let mut spec: Vec<Complex64> = r
            .par_chunks(n)
            .flat_map_iter(|slice| Spectral::cached(&self.grid).forward_real(slice))
            .collect();
        self.sine_transform(&mut spec);
        let scale = 2.0 / (m + 1) as f64;
        for (v, w) in spec.iter_mut().zip(&self.inv) {
            *v *= w * scale;
        }
        self.sine_transform(&mut spec);
        z.par_chunks_mut(n)
            .zip(spec.par_chunks(n))
            .for_each(|(out, s)| {
                let vals = Spectral::cached(&self.grid).inverse_real(s.to_vec());
                out.copy_from_slice(&vals);
            });
    }
}

fn relative_residual(apply: &impl Fn(&[f64], &mut [f64]), x: &[f64], b: &[f64]) -> f64 {
    let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bn == 0.0 {
        return 0.0;
    }
    let mut ax = vec![0.0; x.len()];
    apply(x, &mut ax);
    ax.iter()
        .zip(b)
        .map(|(a, c)| (a - c).powi(2))
        .sum::<f64>()
        .sqrt()
        / bn
}

fn assemble_trajectory(
    bg: &Background,
    slices: Vec<RealField>,
    t0: f64,
    dt: f64,
    config: &LinearConfig,
) -> LinearTrajectory {
    let s = slices.len() - 1;
    let lu: Vec<RealField> = slices
        .par_iter()
        .map(|u| apply_operator(bg, u, config))
        .collect();
    let mut states = Vec::with_capacity(s + 1);
    let mut energy = Vec::with_capacity(s + 1);
    let mut min_total = f64::INFINITY;
    for k in 0..=s {
        let dot = if k == 0 {
            let mut v = slices[1].zip_map(&slices[0], |a, b| (a - b) / dt);
            v.axpy(-0.5 * dt, &lu[0]);
            v
        } else if k == s {
            let mut v = slices[s].zip_map(&slices[s - 1], |a, b| (a - b) / dt);
            v.axpy(0.5 * dt, &lu[s]);
            v
        } else {
            slices[k + 1].zip_map(&slices[k - 1], |a, b| (a - b) / (2.0 * dt))
        };
        if k < s {
            let vel = slices[k + 1].zip_map(&slices[k], |a, b| (a - b) / dt);
            energy.push(0.5 * vel.dot(&vel) - 0.5 * slices[k + 1].dot(&lu[k]));
        }
        min_total = min_total.min(bg.n0.zip_map(&slices[k], |a, b| a + b).min());
        states.push(PerturbationState::new(
            slices[k].clone(),
            dot,
            t0 + k as f64 * dt,
        ));
    }
    if let Some(&last) = energy.last() {
        energy.push(last);
    }
    LinearTrajectory {
        dt,
        states,
        energy,
        min_total_density: min_total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpe::PhysicsParams;
    use crate::grid::GridSpec;
    use crate::linear::{evolve_ivp, leapfrog_next};

    fn bg() -> Background {
        let g = GridSpec::centered(1, 20.0, 64).unwrap();
        Background::uniform(&g, 1.0, PhysicsParams::default().with_coupling(1.0)).unwrap()
    }

    #[test]
    fn zero_boundary_data_gives_zero() {
        let b = bg();
        let z = RealField::zeros(b.grid());
        let data = BoundaryData {
            t0: 0.0,
            t1: 1.0,
            start: z.clone(),
            end: z,
        };
        let sol = solve_two_time(&b, &data, 32, &LinearConfig::default()).unwrap();
        assert!(sol
            .trajectory
            .states
            .iter()
            .all(|s| s.delta_n.max_abs() == 0.0));
    }

    #[test]
    fn recovers_ivp_trajectory() {
        let b = bg();
        let dn = RealField::from_fn(b.grid(), |p| (-(p[0] - 1.0).powi(2)).exp() * 0.1);
        let dot = RealField::from_fn(b.grid(), |p| 0.05 * (-(p[0] + 2.0).powi(2)).exp());
        let st = PerturbationState::new(dn, dot.clone(), 0.0);
        let ivp = evolve_ivp(&b, &st, 1.3, 0.01, &LinearConfig::default()).unwrap();
        let last = ivp.states.len() - 1;
        let data = BoundaryData {
            t0: 0.0,
            t1: ivp.states[last].t,
            start: ivp.states[0].delta_n.clone(),
            end: ivp.states[last].delta_n.clone(),
        };
        let sol = solve_two_time(&b, &data, last, &LinearConfig::default()).unwrap();
        for (a, c) in sol.trajectory.states.iter().zip(&ivp.states) {
            assert!(
                a.delta_n.zip_map(&c.delta_n, |x, y| x - y).l2() < 1e-8 * c.delta_n.l2().max(1e-3)
            );
        }
        let rate = &sol.trajectory.states[0].delta_n_dot;
        assert!(rate.zip_map(&dot, |x, y| x - y).max_abs() < 1e-7);
    }

    #[test]
    fn solution_satisfies_leapfrog_relation() {
        let b = bg();
        let start = RealField::from_fn(b.grid(), |p| (-(p[0] * p[0])).exp());
        let end = RealField::from_fn(b.grid(), |p| 0.5 * (-(p[0] - 2.0).powi(2)).exp());
        let data = BoundaryData {
            t0: 0.0,
            t1: 0.77,
            start,
            end,
        };
        let cfg = LinearConfig::default();
        let sol = solve_two_time(&b, &data, 64, &cfg).unwrap();
        let s = &sol.trajectory.states;
        for k in 1..s.len() - 1 {
            let next = leapfrog_next(
                &b,
                &s[k - 1].delta_n,
                &s[k].delta_n,
                sol.trajectory.dt,
                &cfg,
            );
            assert!(next.zip_map(&s[k + 1].delta_n, |x, y| x - y).max_abs() < 1e-8);
        }
    }

    #[test]
    fn mirrored_data_gives_symmetric_solution() {
        let b = bg();
        let f = RealField::from_fn(b.grid(), |p| (-(p[0] * p[0])).exp());
        let data = BoundaryData {
            t0: 0.0,
            t1: 0.9,
            start: f.clone(),
            end: f,
        };
        let sol = solve_two_time(&b, &data, 40, &LinearConfig::default()).unwrap();
        let s = &sol.trajectory.states;
        for k in 0..s.len() {
            let d = s[k]
                .delta_n
                .zip_map(&s[s.len() - 1 - k].delta_n, |x, y| x - y)
                .max_abs();
            assert!(d < 1e-8);
        }
    }

    #[test]
    fn rejects_reversed_interval() {
        let b = bg();
        let z = RealField::zeros(b.grid());
        let data = BoundaryData {
            t0: 1.0,
            t1: 0.0,
            start: z.clone(),
            end: z,
        };
        assert!(solve_two_time(&b, &data, 8, &LinearConfig::default()).is_err());
    }
}
