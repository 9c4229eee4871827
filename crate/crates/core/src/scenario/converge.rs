//! Refinement studies over a ladder of grid sizes.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::Serialize;

use super::config::{CheckSpec, DtSetting, ScenarioConfig};
use super::run::{
    initial_state, residual_metric, residual_series, resolve_dt, scenario_trajectory,
};
use crate::error::{Error, Result};
use crate::linear::{bogoliubov_omega, dispersion_scan, Background, DispersionSettings};
use crate::madelung::density;

pub const CONVERGENCE_CSV_HEADER: &str = "check,N,h,dt,value,abs_value,floor";
pub const FIT_CSV_HEADER: &str = "check,order_h,order_dt,label";

/// Safety factor over the bare round-off of a five-point second difference.
pub const FLOOR_FACTOR: f64 = 100.0;

/// Relative residual at or below which a level counts as converged to round-off.
pub const REL_FLOOR: f64 = 1e-8;

/// Round-off level of a second time difference of a density bounded by
/// `n_max`, sampled every `delta`, in the L2 norm over `volume`.
pub fn roundoff_floor(n_max: f64, volume: f64, delta: f64) -> f64 {
    FLOOR_FACTOR * f64::EPSILON * n_max * volume.sqrt() / (delta * delta).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub check: String,
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    /// The check's own metric (relative residual, frequency error, ...).
    pub value: f64,
    /// Absolute counterpart used for the floor test.
    pub abs_value: f64,
    /// Round-off level of `abs_value`; zero where no floor applies.
    pub floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitLabel {
    Fit,
    /// Every level sits at its round-off floor; the slopes carry no information.
    Floor,
}

impl FitLabel {
    pub fn name(&self) -> &'static str {
        match self {
            FitLabel::Fit => "fit",
            FitLabel::Floor => "floor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderFit {
    pub check: String,
    /// Least-squares slope of `ln value` against `ln h`.
    pub order_h: f64,
    /// Least-squares slope of `ln value` against `ln dt`.
    pub order_dt: f64,
    pub label: FitLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub fits: Vec<OrderFit>,
}

impl ConvergenceRow {
    pub fn at_floor(&self) -> bool {
        self.abs_value <= self.floor || self.value <= REL_FLOOR
    }
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CONVERGENCE_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:e},{:e},{:e},{:e},{:e}",
                r.check, r.n, r.h, r.dt, r.value, r.abs_value, r.floor
            );
        }
        s
    }

    pub fn fits_csv(&self) -> String {
        let mut s = String::from(FIT_CSV_HEADER);
        s.push('\n');
        for f in &self.fits {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{}",
                f.check,
                f.order_h,
                f.order_dt,
                f.label.name()
            );
        }
        s
    }

    pub fn fit(&self, check: &str) -> Option<&OrderFit> {
        self.fits.iter().find(|f| f.check == check)
    }

    pub fn values(&self, check: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.check == check)
            .map(|r| r.value)
            .collect()
    }
}

/// Least-squares slope of `ln y` against `ln x`. Zero values are clamped to
/// the smallest positive double.
pub fn fit_order(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if var == 0.0 {
        f64::NAN
    } else {
        cov / var
    }
}

fn validate_ladder(ladder: &[usize]) -> Result<()> {
    if ladder.len() < 3 {
        return Err(Error::Config(vec![format!(
            "ladder: needs at least 3 resolutions, got {}",
            ladder.len()
        )]));
    }
    if ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(vec![format!(
            "ladder: resolutions must increase strictly, got {ladder:?}"
        )]));
    }
    Ok(())
}

/// Residual and dispersion checks of `config` at every ladder level. The
/// step follows the pre-flight rule for `dt = "auto"`, otherwise it is
/// scaled with `h^2` from the configured grid; dispersion runs scale their
/// steps per period the same way.
pub fn convergence_report(config: &ScenarioConfig, ladder: &[usize]) -> Result<ConvergenceReport> {
    validate_ladder(ladder)?;
    config.validate()?;
    let base_h = config.grid_spec()?.min_spacing();
    let mut rows = Vec::new();
    for &n in ladder {
        let level = config.with_points(n);
        level.validate()?;
        let grid = level.grid_spec()?;
        let h = grid.min_spacing();
        let refine = (base_h / h).powi(2);
        if level.checks.iter().any(CheckSpec::needs_stencil) {
            let psi0 = initial_state(&level)?;
            let dt = match level.run.as_ref().map(|r| &r.dt) {
                Some(DtSetting::Value(dt0)) => dt0 / refine,
                _ => resolve_dt(&level, &psi0)?,
            };
            let traj = scenario_trajectory(&level, dt)?;
            let stride = level.run.as_ref().map_or(1, |r| r.snapshot_stride);
            let volume: f64 = (0..grid.dim()).map(|a| grid.extent(a)).product();
            let floor = roundoff_floor(density(&psi0).max(), volume, dt * stride as f64);
            if traj.len() < 5 {
                return Err(Error::Config(vec![format!(
                    "N = {n}: run stores {} snapshots, 5 needed",
                    traj.len()
                )]));
            }
            for check in &level.checks {
                if let Some((label, reports)) = residual_series(&level, check, &traj)? {
                    let (value, _) = residual_metric(&reports, check.norm().unwrap_or_default());
                    let abs_value = reports.iter().map(|r| r.l2_abs).fold(0.0, f64::max);
                    rows.push(ConvergenceRow {
                        check: label,
                        n,
                        h,
                        dt,
                        value,
                        abs_value,
                        floor,
                    });
                }
            }
        }
        for check in &level.checks {
            if let CheckSpec::Dispersion {
                k,
                periods,
                steps_per_period,
                amplitude,
                ..
            } = check
            {
                let psi0 = initial_state(&level)?;
                let params = level.physics_params()?;
                let n0 = density(&psi0).max();
                let bg = Background::uniform(&grid, n0, params)?;
                let spp = ((*steps_per_period as f64) * refine).round() as usize;
                let settings = DispersionSettings {
                    periods: *periods,
                    steps_per_period: spp.max(4),
                    amplitude: *amplitude,
                };
                let points = dispersion_scan(&bg, k, &level.linear_config()?, &settings)?;
                let k_top = k.iter().cloned().fold(0.0, f64::max);
                let dt =
                    TAU / bogoliubov_omega(k_top, n0, &params) / settings.steps_per_period as f64;
                let value = points.iter().map(|p| p.rel_error).fold(0.0, f64::max);
                let abs_value = points
                    .iter()
                    .map(|p| (p.omega_measured - p.omega_analytic).abs())
                    .fold(0.0, f64::max);
                rows.push(ConvergenceRow {
                    check: "dispersion".into(),
                    n,
                    h,
                    dt,
                    value,
                    abs_value,
                    floor: 0.0,
                });
            }
        }
    }
    let mut names: Vec<String> = Vec::new();
    for r in &rows {
        if !names.contains(&r.check) {
            names.push(r.check.clone());
        }
    }
    let fits = names
        .into_iter()
        .map(|check| {
            let sel: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.check == check).collect();
            let hs: Vec<f64> = sel.iter().map(|r| r.h).collect();
            let dts: Vec<f64> = sel.iter().map(|r| r.dt).collect();
            let vals: Vec<f64> = sel.iter().map(|r| r.value).collect();
            let floor = sel.iter().all(|r| r.at_floor());
            OrderFit {
                order_h: fit_order(&hs, &vals),
                order_dt: fit_order(&dts, &vals),
                label: if floor {
                    FitLabel::Floor
                } else {
                    FitLabel::Fit
                },
                check,
            }
        })
        .collect();
    Ok(ConvergenceReport { rows, fits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let h = [0.4, 0.2, 0.1];
        let y: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
        assert!((fit_order(&h, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn floor_grows_as_the_stencil_shrinks() {
        let a = roundoff_floor(1.0, 40.0, 1e-3);
        assert!((roundoff_floor(1.0, 40.0, 5e-4) / a - 4.0).abs() < 1e-12);
        assert_eq!(
            roundoff_floor(1.0, 40.0, 2.0),
            roundoff_floor(1.0, 40.0, 1.0)
        );
    }

    #[test]
    fn ladder_rules() {
        assert!(validate_ladder(&[64, 128]).is_err());
        assert!(validate_ladder(&[64, 256, 128]).is_err());
        assert!(validate_ladder(&[64, 64, 128]).is_err());
        assert!(validate_ladder(&[64, 128, 256]).is_ok());
    }
}
