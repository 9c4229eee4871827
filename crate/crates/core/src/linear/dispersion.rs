//! Frequency measurements on a uniform background and the tangent-line
//! comparison against full nonlinear evolution.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::{evolve_ivp, stability_bound, Background, LinearConfig, PerturbationState};
use crate::error::{Error, Result};
use crate::gpe::{evolve, PhysicsParams, PotentialSpec};
use crate::grid::{divergence, ComplexField, RealField, VectorField};
use crate::madelung::density;
use crate::madelung::PsiDerivatives;

/// `omega^2 = (g n0 / m) k^2 + (hbar k^2 / 2m)^2`.
pub fn bogoliubov_omega(k: f64, n0: f64, params: &PhysicsParams) -> f64 {
    let free = params.hbar * k * k / (2.0 * params.mass);
    (params.coupling * n0 / params.mass * k * k + free * free).sqrt()
}

/// Angular frequency of a sampled single-mode oscillation.
///
/// Fits `x_{j+1} + x_{j-1} = 2 cos(omega dt) x_j` by least squares, which is
/// exact for any sampled sinusoid regardless of phase.
pub fn measure_frequency(series: &[f64], dt: f64) -> Result<f64> {
    if series.len() < 3 || !(dt > 0.0) {
        return Err(Error::InvalidArgument(
            "frequency fit needs three samples and dt > 0".into(),
        ));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for j in 1..series.len() - 1 {
        num += series[j] * (series[j + 1] + series[j - 1]);
        den += 2.0 * series[j] * series[j];
    }
    if den == 0.0 {
        return Err(Error::InvalidArgument("series is identically zero".into()));
    }
    Ok((num / den).clamp(-1.0, 1.0).acos() / dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionPoint {
    pub k: f64,
    pub omega_measured: f64,
    pub omega_analytic: f64,
    pub rel_error: f64,
}

pub const DISPERSION_CSV_HEADER: &str = "k,omega_measured,omega_analytic,rel_error";

pub fn dispersion_csv(points: &[DispersionPoint]) -> String {
    let mut s = String::from(DISPERSION_CSV_HEADER);
    s.push('\n');
    for p in points {
        let _ = writeln!(
            s,
            "{:.17e},{:.17e},{:.17e},{:.17e}",
            p.k, p.omega_measured, p.omega_analytic, p.rel_error
        );
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionSettings {
    /// Length of each run in analytic periods.
    pub periods: f64,
    pub steps_per_period: usize,
    /// Amplitude of the cosine perturbation relative to `n0`.
    pub amplitude: f64,
}

impl Default for DispersionSettings {
    fn default() -> Self {
        DispersionSettings {
            periods: 5.0,
            steps_per_period: 100,
            amplitude: 1e-3,
        }
    }
}

/// Evolves `dn = A cos(k x)` for each `k` on a uniform background and
/// compares the measured frequency with the Bogoliubov relation.
pub fn dispersion_scan(
    bg: &Background,
    ks: &[f64],
    config: &LinearConfig,
    settings: &DispersionSettings,
) -> Result<Vec<DispersionPoint>> {
    let grid = bg.grid();
    let n0 = bg.n0.max();
    if (bg.n0.min() - n0).abs() > 1e-12 * n0 || !bg.potential.is_none() {
        return Err(Error::InvalidArgument(
            "dispersion scans need a uniform background without potential".into(),
        ));
    }
    if settings.steps_per_period < 4 || !(settings.periods > 0.0) {
        return Err(Error::InvalidArgument(
            "dispersion settings need >= 4 steps per period and positive length".into(),
        ));
    }
    let fundamental = TAU / grid.extent(0);
    for &k in ks {
        let q = k / fundamental;
        if !(k > 0.0) || (q - q.round()).abs() > 1e-9 || q.round() as usize > grid.points(0) / 2 {
            return Err(Error::InvalidArgument(format!(
                "k = {k} is not a resolved wavenumber of the box (multiples of {fundamental})"
            )));
        }
    }
    let dt_max = stability_bound(bg, config)?.dt_max;
    ks.par_iter()
        .map(|&k| {
            let omega_a = bogoliubov_omega(k, n0, &bg.params);
            let period = TAU / omega_a;
            let dt = (period / settings.steps_per_period as f64).min(0.9 * dt_max);
            let mode = RealField::from_fn(grid, |p| (k * p[0]).cos());
            let state = PerturbationState::at_rest(mode.scaled(settings.amplitude * n0), 0.0);
            let traj = evolve_ivp(bg, &state, settings.periods * period, dt, config)?;
            let series: Vec<f64> = traj.states.iter().map(|s| s.delta_n.dot(&mode)).collect();
            let omega_m = measure_frequency(&series, dt)?;
            Ok(DispersionPoint {
                k,
                omega_measured: omega_m,
                omega_analytic: omega_a,
                rel_error: (omega_m - omega_a).abs() / omega_a,
            })
        })
        .collect()
}

/// Compares the finite difference `[n(psi0 + eps phi)(t) - n(psi0)(t)] / eps`
/// from two nonlinear runs with the linearised evolution of the matching
/// initial perturbation.
#[derive(Debug, Clone)]
pub struct TangentLineTest {
    pub psi0: ComplexField,
    pub phi: ComplexField,
    pub potential: PotentialSpec,
    pub params: PhysicsParams,
    pub t_end: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentGap {
    pub eps: f64,
    /// L2 distance between the difference quotient and the linear prediction.
    pub gap: f64,
    /// `gap` divided by the L2 size of the linear prediction.
    pub relative_gap: f64,
}

impl TangentLineTest {
    /// First-order density and density rate generated by `phi` at `t = 0`.
    pub fn initial_perturbation(&self) -> PerturbationState {
        let grid = self.psi0.grid();
        let p0 = self.psi0.values();
        let ph = self.phi.values();
        let dn = RealField::from_vec(
            grid,
            p0.iter()
                .zip(ph)
                .map(|(a, b)| 2.0 * (a.conj() * b).re)
                .collect(),
        );
        let d0 = PsiDerivatives::new(&self.psi0, false);
        let d1 = PsiDerivatives::new(&self.phi, false);
        let c = self.params.hbar / self.params.mass;
        let dj = VectorField::from_components(
            grid,
            (0..grid.dim())
                .map(|a| {
                    let vals = (0..grid.len())
                        .map(|k| c * (ph[k].conj() * d0.d1[a][k] + p0[k].conj() * d1.d1[a][k]).im)
                        .collect();
                    RealField::from_vec(grid, vals)
                })
                .collect(),
        );
        PerturbationState::new(dn, divergence(&dj).scaled(-1.0), 0.0)
    }

    /// Gap for each `eps`; the linear run is shared.
    pub fn run(&self, eps: &[f64], config: &LinearConfig) -> Result<Vec<TangentGap>> {
        let bg = Background::from_psi(&self.psi0, self.potential.clone(), self.params)?;
        let steps = (self.t_end / self.dt).round() as usize;
        if steps == 0 || ((steps as f64) * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(Error::InvalidArgument(
                "t_end must be a whole number of steps".into(),
            ));
        }
        let lin = evolve_ivp(
            &bg,
            &self.initial_perturbation(),
            self.t_end,
            self.dt,
            config,
        )?;
        let predicted = &lin.final_state().delta_n;
        let size = predicted.l2();
        let reference = self.nonlinear_density(&self.psi0, steps)?;
        eps.par_iter()
            .map(|&e| {
                let perturbed = self.psi0.add(&self.phi.scaled(e.into()));
                let n = self.nonlinear_density(&perturbed, steps)?;
                let quotient = n.zip_map(&reference, |a, b| (a - b) / e);
                let gap = quotient.zip_map(predicted, |a, b| a - b).l2();
                Ok(TangentGap {
                    eps: e,
                    gap,
                    relative_gap: gap / size,
                })
            })
            .collect()
    }

    fn nonlinear_density(&self, psi: &ComplexField, steps: usize) -> Result<RealField> {
        let traj = evolve(
            psi,
            &self.potential,
            &self.params,
            self.t_end,
            self.dt,
            steps,
        )?;
        Ok(density(
            &traj
                .snapshots
                .last()
                .expect("evolution stores snapshots")
                .psi,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use num_complex::Complex64;

    #[test]
    fn frequency_fit_is_exact_for_sinusoid() {
        let dt = 0.05;
        let s: Vec<f64> = (0..200)
            .map(|j| (1.7 * j as f64 * dt + 0.4).cos())
            .collect();
        assert!((measure_frequency(&s, dt).unwrap() - 1.7).abs() < 1e-10);
    }

    #[test]
    fn bogoliubov_limits() {
        let p = PhysicsParams::default().with_coupling(1.0);
        assert!((bogoliubov_omega(1e-4, 1.0, &p) / 1e-4 - 1.0).abs() < 1e-6);
        let free = PhysicsParams::default();
        assert!((bogoliubov_omega(3.0, 1.0, &free) - 4.5).abs() < 1e-12);
    }

    #[test]
    fn uniform_scan_matches_bogoliubov() {
        let g = GridSpec::centered(1, 20.0 * std::f64::consts::PI, 128).unwrap();
        let bg = Background::uniform(&g, 1.0, PhysicsParams::default().with_coupling(1.0)).unwrap();
        let pts = dispersion_scan(
            &bg,
            &[0.1, 1.0, 2.0],
            &LinearConfig::default(),
            &DispersionSettings::default(),
        )
        .unwrap();
        for p in pts {
            assert!(p.rel_error < 5e-3, "{p:?}");
        }
        assert!(dispersion_scan(
            &bg,
            &[0.123],
            &LinearConfig::default(),
            &DispersionSettings::default()
        )
        .is_err());
    }

    #[test]
    fn free_linear_frequency_matches_nonlinear_beats() {
        // psi = 1 + eps e^{ikx} beats at hbar k^2 / 2m in the density.
        let g = GridSpec::centered(1, 20.0, 64).unwrap();
        let k = TAU / 20.0 * 3.0;
        let p = PhysicsParams::default();
        let psi = ComplexField::from_fn(&g, |x| {
            Complex64::new(1.0, 0.0) + Complex64::from_polar(1e-4, k * x[0])
        });
        let omega = bogoliubov_omega(k, 1.0, &p);
        let dt = TAU / omega / 200.0;
        let tr = evolve(&psi, &PotentialSpec::none(), &p, 3.0 * TAU / omega, dt, 1).unwrap();
        let mode = RealField::from_fn(&g, |x| (k * x[0]).cos());
        let series: Vec<f64> = tr
            .snapshots
            .iter()
            .map(|s| density(&s.psi).dot(&mode))
            .collect();
        assert!((measure_frequency(&series, dt).unwrap() / omega - 1.0).abs() < 1e-6);
    }
}
