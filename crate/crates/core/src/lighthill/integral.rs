//! Integral (Green-function) solution of the density wave equation in 3D and
//! a direct leapfrog solver for comparison.
//!
//! Applying `d_i d_j` to the retarded potential `T_ij(y, t - r/c0) / r` on the
//! reception side gives the kernel
//!
//! ```text
//! n_i n_j T''_ij / (c0^2 r) + (3 n_i n_j - delta_ij) T'_ij / (c0 r^2) + (3 n_i n_j - delta_ij) T_ij / r^3
//! ```
//!
//! with `n = (x - y)/r`, all divided by `4 pi c0^2`. The advanced kernel
//! evaluates at `t + r/c0` and flips the sign of the `T'` term. The
//! distributional part of `d_i d_j (1/r)` contributes `-T_kk(x, t) / (3 c0^2)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::LighthillConfig;
use crate::error::{Error, Result};
use crate::grid::{spectral_laplacian, GridSpec, RealField, SymTensorField};

/// Components whose magnitude stays below this fraction of the overall
/// maximum are treated as outside the support.
const SUPPORT_TOL: f64 = 1e-12;
const CHUNK: usize = 512;

/// Source tensor samples over a uniform time axis, restricted to the spatial
/// support of the source.
#[derive(Debug, Clone)]
pub struct SourceHistory {
    grid: GridSpec,
    t0: f64,
    dt: f64,
    len: usize,
    support: Vec<usize>,
    positions: Vec<[f64; 3]>,
    /// `values[k][6 p + c]`: packed component `c` at support point `p`, slice `k`.
    values: Vec<Vec<f64>>,
}

fn check_times(times: &[f64]) -> Result<(f64, f64)> {
    if times.len() < 4 {
        return Err(Error::InsufficientSnapshots {
            needed: 4,
            available: times.len(),
            slice: 0,
        });
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::NonUniformSpacing { index: 0 });
    }
    for (k, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::NonUniformSpacing { index: k });
        }
    }
    Ok((times[0], dt))
}

impl SourceHistory {
    pub fn new(times: &[f64], tensors: &[SymTensorField]) -> Result<Self> {
        if tensors.len() != times.len() || tensors.is_empty() {
            return Err(Error::InvalidArgument(
                "one source tensor per time is required".into(),
            ));
        }
        Self::from_fn(tensors[0].grid(), times, |k, _| tensors[k].clone())
    }

    /// Builds the history from a generator, called twice per slice (once to
    /// find the support, once to store it) so the full field stack is never
    /// held in memory.
    pub fn from_fn(
        grid: &GridSpec,
        times: &[f64],
        f: impl Fn(usize, f64) -> SymTensorField,
    ) -> Result<Self> {
        if grid.dim() != 3 {
            return Err(Error::InvalidArgument(
                "the integral solution uses the 3D Green function; grid must be 3D".into(),
            ));
        }
        let (t0, dt) = check_times(times)?;
        let mut peak = vec![0.0f64; grid.len()];
        for (k, &t) in times.iter().enumerate() {
            let tens = f(k, t);
            for i in 0..3 {
                for j in i..3 {
                    for (p, x) in peak.iter_mut().zip(tens.get(i, j)) {
                        *p = p.max(x.abs());
                    }
                }
            }
        }
        let global = peak.iter().cloned().fold(0.0, f64::max);
        let support: Vec<usize> = (0..grid.len())
            .filter(|&i| peak[i] > SUPPORT_TOL * global)
            .collect();
        let positions = support.iter().map(|&i| grid.position(i)).collect();
        let values = times
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let tens = f(k, t);
                let mut out = Vec::with_capacity(6 * support.len());
                for &idx in &support {
                    for i in 0..3 {
                        for j in i..3 {
                            out.push(tens.get(i, j)[idx]);
                        }
                    }
                }
                out
            })
            .collect();
        Ok(SourceHistory {
            grid: grid.clone(),
            t0,
            dt,
            len: times.len(),
            support,
            positions,
            values,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    pub fn time_range(&self) -> (f64, f64) {
        (self.t0, self.t0 + (self.len - 1) as f64 * self.dt)
    }

    /// Emission times the interpolation can serve (central differences need a
    /// neighbour on each side).
    fn usable_range(&self) -> (f64, f64) {
        (self.t0 + self.dt, self.t0 + (self.len - 2) as f64 * self.dt)
    }

    /// `(T, T', T'')` of support point `p`, component `c`, at time `tau`.
    fn sample(&self, p: usize, tau: f64) -> [[f64; 6]; 3] {
        let s = (tau - self.t0) / self.dt;
        let k = (s.floor() as usize).clamp(1, self.len - 3);
        let theta = s - k as f64;
        let at = |kk: usize, c: usize| self.values[kk][6 * p + c];
        let mut out = [[0.0; 6]; 3];
        for c in 0..6 {
            let node = |kk: usize| {
                let (a, b, d) = (at(kk - 1, c), at(kk, c), at(kk + 1, c));
                [
                    b,
                    (d - a) / (2.0 * self.dt),
                    (d - 2.0 * b + a) / (self.dt * self.dt),
                ]
            };
            let (lo, hi) = (node(k), node(k + 1));
            for q in 0..3 {
                out[q][c] = (1.0 - theta) * lo[q] + theta * hi[q];
            }
        }
        out
    }
}

/// Packed index order (xx, xy, xz, yy, yz, zz).
const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// `sum_ij a_i a_j T_ij` over packed storage.
fn contract(t: &[f64; 6], nv: &[f64; 3]) -> f64 {
    PAIRS
        .iter()
        .enumerate()
        .map(|(c, &(i, j))| {
            let w = if i == j { 1.0 } else { 2.0 };
            w * nv[i] * nv[j] * t[c]
        })
        .sum()
}

fn trace(t: &[f64; 6]) -> f64 {
    t[0] + t[3] + t[5]
}

/// Density perturbation at `(x, t)` from the integral solution.
pub fn integral_solution(
    history: &SourceHistory,
    x: [f64; 3],
    t: f64,
    config: &LighthillConfig,
) -> Result<f64> {
    config.validate()?;
    let c0 = config.c0;
    let h = history.grid.min_spacing();
    let dist: Vec<f64> = history
        .positions
        .iter()
        .map(|y| ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt())
        .collect();
    if dist.is_empty() {
        return Ok(0.0);
    }
    let rmin = dist.iter().cloned().fold(f64::INFINITY, f64::min);
    let rmax = dist.iter().cloned().fold(0.0, f64::max);
    if rmin < h && !config.near_field {
        return Err(Error::InsideSourceSupport);
    }
    let lam = config.kernel.retarded_weight();
    let (have_start, have_end) = history.usable_range();
    let slack = 1e-9 * history.dt;
    for (weight, sign) in [(lam, -1.0), (1.0 - lam, 1.0)] {
        if weight == 0.0 {
            continue;
        }
        let a = t + sign * rmin / c0;
        let b = t + sign * rmax / c0;
        let (need_start, need_end) = (a.min(b), a.max(b));
        if need_start < have_start - slack || need_end > have_end + slack {
            return Err(Error::ConeNotCovered {
                need_start,
                need_end,
                have_start,
                have_end,
            });
        }
    }
    let coincide = 1e-9 * h;
    let partials: Vec<(f64, f64)> = (0..dist.len())
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = 0.0;
            let mut local = 0.0;
            for &p in chunk {
                let r = dist[p];
                if r < coincide {
                    local += trace(&history.sample(p, t)[0]);
                    continue;
                }
                let y = history.positions[p];
                let nv = [(x[0] - y[0]) / r, (x[1] - y[1]) / r, (x[2] - y[2]) / r];
                for (weight, sign) in [(lam, -1.0), (1.0 - lam, 1.0)] {
                    if weight == 0.0 {
                        continue;
                    }
                    let [tv, td, tdd] = history.sample(p, t + sign * r / c0);
                    let far = contract(&tdd, &nv) / (c0 * c0 * r);
                    let mid = -sign * (3.0 * contract(&td, &nv) - trace(&td)) / (c0 * r * r);
                    let near = (3.0 * contract(&tv, &nv) - trace(&tv)) / (r * r * r);
                    acc += weight * (far + mid + near);
                }
            }
            (acc, local)
        })
        .collect();
    let (sum, local) = partials
        .iter()
        .fold((0.0, 0.0), |(a, l), (x, y)| (a + x, l + y));
    let dv = history.grid.cell_volume();
    Ok(sum * dv / (4.0 * PI * c0 * c0) - local / (3.0 * c0 * c0))
}

/// [`integral_solution`] at several reception points, evaluated in parallel.
pub fn integral_solution_many(
    history: &SourceHistory,
    points: &[[f64; 3]],
    t: f64,
    config: &LighthillConfig,
) -> Result<Vec<f64>> {
    points
        .par_iter()
        .map(|&x| integral_solution(history, x, t, config))
        .collect()
}

/// Leapfrog integrator for `u_tt - c0^2 lap u = s(x, t)` with zero initial
/// data on a periodic box, using the spectral Laplacian.
#[derive(Debug, Clone)]
pub struct WaveSolver {
    grid: GridSpec,
    c0: f64,
    dt: f64,
}

impl WaveSolver {
    pub fn new(grid: &GridSpec, c0: f64, dt: f64) -> Result<Self> {
        let s = WaveSolver {
            grid: grid.clone(),
            c0,
            dt,
        };
        let bound = s.stability_bound();
        if !(dt > 0.0) || dt >= bound {
            return Err(Error::StabilityBound { dt, bound });
        }
        Ok(s)
    }

    /// `2 / (c0 |k|_max)` with `|k|_max` over the full Nyquist corner.
    pub fn stability_bound(&self) -> f64 {
        let k2: f64 = (0..self.grid.dim())
            .map(|a| (PI / self.grid.spacing(a)).powi(2))
            .sum();
        2.0 / (self.c0 * k2.sqrt())
    }

    /// Runs `steps` steps; `observe(k, t_k, u_k)` sees every state including `u_0 = 0`.
    pub fn run(
        &self,
        steps: usize,
        mut source: impl FnMut(f64) -> RealField,
        mut observe: impl FnMut(usize, f64, &RealField),
    ) {
        let dt2 = self.dt * self.dt;
        let c2 = self.c0 * self.c0;
        let mut prev = RealField::zeros(&self.grid);
        observe(0, 0.0, &prev);
        if steps == 0 {
            return;
        }
        let mut cur = source(0.0).scaled(0.5 * dt2);
        observe(1, self.dt, &cur);
        for k in 1..steps {
            let t = k as f64 * self.dt;
            let lap = spectral_laplacian(&cur);
            let s = source(t);
            let mut next = cur.scaled(2.0);
            next.axpy(-1.0, &prev);
            next.axpy(dt2 * c2, &lap);
            next.axpy(dt2, &s);
            prev = cur;
            cur = next;
            observe(k + 1, (k + 1) as f64 * self.dt, &cur);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lighthill::Kernel;

    fn box3(n: usize, l: f64) -> GridSpec {
        GridSpec::centered(3, l, n).unwrap()
    }

    #[test]
    fn zero_source_gives_zero() {
        let g = box3(8, 8.0);
        let times: Vec<f64> = (0..6).map(|k| k as f64 * 0.1).collect();
        let h = SourceHistory::from_fn(&g, &times, |_, _| SymTensorField::zeros(&g)).unwrap();
        assert_eq!(
            integral_solution(&h, [3.0, 0.0, 0.0], 0.3, &LighthillConfig::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn requires_3d_and_cone_coverage() {
        let g1 = GridSpec::centered(1, 8.0, 8).unwrap();
        let times: Vec<f64> = (0..6).map(|k| k as f64 * 0.1).collect();
        assert!(SourceHistory::from_fn(&g1, &times, |_, _| SymTensorField::zeros(&g1)).is_err());
        let g = box3(8, 8.0);
        let gauss = RealField::from_fn(&g, |p| (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp());
        let h = SourceHistory::from_fn(&g, &times, |_, _| {
            let mut t = SymTensorField::zeros(&g);
            t.add_isotropic(1.0, &gauss);
            t
        })
        .unwrap();
        assert!(matches!(
            integral_solution(&h, [20.0, 0.0, 0.0], 0.3, &LighthillConfig::default()),
            Err(Error::ConeNotCovered { .. })
        ));
        assert!(matches!(
            integral_solution(&h, [0.0, 0.0, 0.0], 0.3, &LighthillConfig::default()),
            Err(Error::InsideSourceSupport)
        ));
        let adv = LighthillConfig::default().with_kernel(Kernel::Advanced);
        assert!(integral_solution(&h, [20.0, 0.0, 0.0], 0.3, &adv).is_err());
    }

    #[test]
    fn wave_solver_stability_check() {
        let g = box3(16, 8.0);
        let s = WaveSolver::new(&g, 1.0, 0.05).unwrap();
        assert!(WaveSolver::new(&g, 1.0, 2.0 * s.stability_bound()).is_err());
    }

    #[test]
    fn wave_solver_standing_mode() {
        let g = GridSpec::new(1, &[std::f64::consts::TAU], &[16], &[0.0]).unwrap();
        let solver = WaveSolver::new(&g, 1.0, 1e-3).unwrap();
        // u_tt + u = cos(x): u = (1 - cos t) cos(x)
        let src = RealField::from_fn(&g, |p| p[0].cos());
        let mut last = RealField::zeros(&g);
        solver.run(1000, |_| src.clone(), |_, _, u| last = u.clone());
        let exact = src.scaled(1.0 - 1.0f64.cos());
        let err = last.zip_map(&exact, |a, b| (a - b).abs()).max();
        assert!(err < 1e-6, "{err}");
    }
}
