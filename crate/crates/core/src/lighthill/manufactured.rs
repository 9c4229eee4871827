//! Manufactured compact source used to check the integral solution against a
//! direct periodic wave solve on a larger box.

use std::fmt::Write as _;

use super::{integral_solution_many, Kernel, LighthillConfig, SourceHistory, WaveSolver};
use crate::error::{Error, Result};
use crate::grid::{double_divergence, GridSpec, RealField, SymTensorField};

/// `T_ij(x, t) = A Q_ij exp(-|x|^2 / 2 sigma^2) f(t)` with the skewed pulse
/// `f = (1 + skew s) exp(-s^2 / 2)`, `s = (t - t_c) / tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSource {
    pub amplitude: f64,
    pub width: f64,
    pub pulse_center: f64,
    pub pulse_width: f64,
    pub skew: f64,
    pub polarization: [[f64; 3]; 3],
}

impl Default for ManufacturedSource {
    fn default() -> Self {
        ManufacturedSource {
            amplitude: 1.0,
            width: 0.4,
            pulse_center: 2.5,
            pulse_width: 0.35,
            skew: 0.8,
            polarization: [[1.0, 0.5, 0.0], [0.5, -0.3, 0.2], [0.0, 0.2, -0.7]],
        }
    }
}

impl ManufacturedSource {
    pub fn pulse(&self, t: f64) -> f64 {
        let s = (t - self.pulse_center) / self.pulse_width;
        (1.0 + self.skew * s) * (-0.5 * s * s).exp()
    }

    /// Same source played backwards in time about its pulse centre.
    pub fn mirrored(&self) -> Self {
        ManufacturedSource {
            skew: -self.skew,
            ..*self
        }
    }

    /// Spatial profile `A Q_ij G(x)` at unit pulse amplitude.
    pub fn profile(&self, grid: &GridSpec) -> SymTensorField {
        let inv = 0.5 / (self.width * self.width);
        let g = RealField::from_fn(grid, |p| {
            self.amplitude * (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) * inv).exp()
        });
        let mut t = SymTensorField::zeros(grid);
        for i in 0..3 {
            for j in i..3 {
                t.set(i, j, &g.scaled(self.polarization[i][j]));
            }
        }
        t
    }

    /// Radius outside which every component falls below `1e-12` of its peak.
    pub fn support_radius(&self) -> f64 {
        self.width * (2.0 * 1e12f64.ln()).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedIntegralCheck {
    pub source: ManufacturedSource,
    pub c0: f64,
    pub source_points: usize,
    pub source_extent: f64,
    pub oracle_points: usize,
    pub oracle_extent: f64,
    /// Reception points; each must sit on the oracle grid.
    pub receivers: Vec<[f64; 3]>,
    pub history_dt: f64,
    pub oracle_dt: f64,
    /// Observation window half-width in units of the pulse width.
    pub window: f64,
    pub samples: usize,
}

impl Default for ManufacturedIntegralCheck {
    fn default() -> Self {
        ManufacturedIntegralCheck {
            source: ManufacturedSource::default(),
            c0: 1.0,
            source_points: 32,
            source_extent: 8.0,
            oracle_points: 64,
            oracle_extent: 16.0,
            receivers: vec![
                [6.0, 0.0, 0.0],
                [-6.0, 0.0, 0.0],
                [0.0, 6.0, 0.0],
                [0.0, -6.0, 0.0],
                [0.0, 0.0, 6.0],
                [0.0, 0.0, -6.0],
                [4.0, 4.0, 2.0],
                [-4.0, 2.0, 4.0],
                [2.0, -4.0, 4.0],
                [4.0, -2.0, -4.0],
            ],
            history_dt: 0.05,
            oracle_dt: 0.02,
            window: 2.5,
            samples: 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralSample {
    pub kernel: Kernel,
    pub receiver: [f64; 3],
    pub t: f64,
    pub integral: f64,
    pub oracle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralCheckReport {
    /// Retarded integral against the direct solve.
    pub retarded_rel_l2: f64,
    /// Advanced integral at `2 t_c - t` against the direct solve of the
    /// mirrored source at `t`.
    pub advanced_rel_l2: f64,
    pub samples: Vec<IntegralSample>,
}

pub const INTEGRAL_CSV_HEADER: &str = "kernel,x,y,z,t,integral,oracle";

impl IntegralCheckReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(INTEGRAL_CSV_HEADER);
        s.push('\n');
        for p in &self.samples {
            let name = match p.kernel {
                Kernel::Retarded => "retarded",
                Kernel::Advanced => "advanced",
                Kernel::Mixed(_) => "mixed",
            };
            let [x, y, z] = p.receiver;
            let _ = writeln!(
                s,
                "{name},{x},{y},{z},{:.17e},{:.17e},{:.17e}",
                p.t, p.integral, p.oracle
            );
        }
        s
    }
}

fn rel_l2(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in pairs {
        num += (a - b) * (a - b);
        den += b * b;
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

impl ManufacturedIntegralCheck {
    fn oracle_indices(&self, grid: &GridSpec) -> Result<Vec<usize>> {
        self.receivers
            .iter()
            .map(|x| {
                let mut ix = [0usize; 3];
                for a in 0..3 {
                    let f = (x[a] - grid.origin(a)) / grid.spacing(a);
                    if (f - f.round()).abs() > 1e-9
                        || f < 0.0
                        || f.round() as usize >= grid.points(a)
                    {
                        return Err(Error::InvalidArgument(format!(
                            "receiver {x:?} is not an oracle grid point"
                        )));
                    }
                    ix[a] = f.round() as usize;
                }
                Ok(grid.index(ix))
            })
            .collect()
    }

    /// Direct solve of `u_tt - c0^2 lap u = d_i d_j T` sampled at the
    /// receivers for each requested step.
    fn oracle(
        &self,
        grid: &GridSpec,
        source: &ManufacturedSource,
        steps: &[usize],
        idx: &[usize],
    ) -> Result<Vec<Vec<f64>>> {
        let solver = WaveSolver::new(grid, self.c0, self.oracle_dt)?;
        let shape = double_divergence(&source.profile(grid));
        let last = *steps.iter().max().unwrap_or(&0);
        let mut out = vec![Vec::new(); steps.len()];
        solver.run(
            last,
            |t| shape.scaled(source.pulse(t)),
            |k, _, u| {
                for (slot, &s) in out.iter_mut().zip(steps) {
                    if s == k {
                        *slot = idx.iter().map(|&i| u.values()[i]).collect();
                    }
                }
            },
        );
        Ok(out)
    }

    pub fn run(&self) -> Result<IntegralCheckReport> {
        if self.samples < 2
            || !(self.window > 0.0)
            || !(self.history_dt > 0.0)
            || !(self.oracle_dt > 0.0)
        {
            return Err(Error::InvalidArgument(
                "integral check needs >= 2 samples and positive steps".into(),
            ));
        }
        let src_grid = GridSpec::centered(3, self.source_extent, self.source_points)?;
        let or_grid = GridSpec::centered(3, self.oracle_extent, self.oracle_points)?;
        let idx = self.oracle_indices(&or_grid)?;
        let s = self.source;
        let distance = self
            .receivers
            .iter()
            .map(|x| (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())
            .sum::<f64>()
            / self.receivers.len() as f64;
        let half = self.window * s.pulse_width;
        let arrival = s.pulse_center + distance / self.c0;
        let steps: Vec<usize> = (0..self.samples)
            .map(|j| {
                let t = arrival - half + 2.0 * half * j as f64 / (self.samples - 1) as f64;
                (t / self.oracle_dt).round() as usize
            })
            .collect();
        let times: Vec<f64> = steps.iter().map(|&k| k as f64 * self.oracle_dt).collect();

        // Emission times reached by either kernel from any receiver.
        let rs = s.support_radius();
        let (t_min, t_max) = (times[0], times[times.len() - 1]);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in &self.receivers {
            let d = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let (near, far) = ((d - rs).max(0.0) / self.c0, (d + rs) / self.c0);
            lo = lo.min(t_min - far).min(2.0 * s.pulse_center - t_max + near);
            hi = hi.max(t_max - near).max(2.0 * s.pulse_center - t_min + far);
        }
        let t_lo = lo - 2.0 * self.history_dt;
        let count = ((hi - t_lo) / self.history_dt).ceil() as usize + 3;
        let profile = s.profile(&src_grid);
        let hist_times: Vec<f64> = (0..count)
            .map(|k| t_lo + k as f64 * self.history_dt)
            .collect();
        let history =
            SourceHistory::from_fn(&src_grid, &hist_times, |_, t| profile.scaled(s.pulse(t)))?;

        let retarded = LighthillConfig::default().with_c0(self.c0);
        let advanced = retarded.with_kernel(Kernel::Advanced);
        let direct = self.oracle(&or_grid, &s, &steps, &idx)?;
        let mirrored = self.oracle(&or_grid, &s.mirrored(), &steps, &idx)?;

        let mut samples = Vec::new();
        for (j, &t) in times.iter().enumerate() {
            let ret = integral_solution_many(&history, &self.receivers, t, &retarded)?;
            let t_adv = 2.0 * s.pulse_center - t;
            let adv = integral_solution_many(&history, &self.receivers, t_adv, &advanced)?;
            for (r, x) in self.receivers.iter().enumerate() {
                samples.push(IntegralSample {
                    kernel: Kernel::Retarded,
                    receiver: *x,
                    t,
                    integral: ret[r],
                    oracle: direct[j][r],
                });
                samples.push(IntegralSample {
                    kernel: Kernel::Advanced,
                    receiver: *x,
                    t: t_adv,
                    integral: adv[r],
                    oracle: mirrored[j][r],
                });
            }
        }
        let pick = |k: Kernel| {
            rel_l2(
                samples
                    .iter()
                    .filter(|p| p.kernel == k)
                    .map(|p| (p.integral, p.oracle)),
            )
        };
        Ok(IntegralCheckReport {
            retarded_rel_l2: pick(Kernel::Retarded),
            advanced_rel_l2: pick(Kernel::Advanced),
            samples,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirrored_pulse_is_time_reversed() {
        let s = ManufacturedSource::default();
        let m = s.mirrored();
        for t in [1.9, 2.2, 2.5, 3.1] {
            assert!((s.pulse(t) - m.pulse(2.0 * s.pulse_center - t)).abs() < 1e-15);
        }
    }

    #[test]
    fn off_grid_receiver_is_rejected() {
        let check = ManufacturedIntegralCheck {
            receivers: vec![[6.1, 0.0, 0.0]],
            ..Default::default()
        };
        assert!(matches!(check.run(), Err(Error::InvalidArgument(_))));
    }
}
