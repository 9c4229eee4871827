//! Executes a scenario: evolution, checks, artifacts.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{CheckSpec, FieldOutput, NormName, ScenarioConfig};
use super::fieldio::FieldFile;
use crate::error::{Error, Result};
use crate::gpe::{evolve, initialize_state, preflight_dt, Trajectory};
use crate::grid::{ComplexField, RealField};
use crate::hydro::{continuity_residual, momentum_flux_residual, SignConvention};
use crate::lighthill::{
    circulation, lighthill_residual, square_loop, LighthillConfig, ManufacturedIntegralCheck,
};
use crate::linear::{
    dispersion_csv, dispersion_scan, evolve_ivp, solve_two_time, stability_bound, Background,
    BoundaryData, DispersionSettings, PerturbationState, TangentLineTest,
};
use crate::madelung::{density, euler_residual_with};
use crate::residual::{residual_csv, ResidualReport};

/// Verdict of one measured quantity against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub kind: String,
    pub label: String,
    pub metric: String,
    pub value: f64,
    pub tolerance: f64,
    /// `value <= tolerance`.
    pub passed: bool,
    pub expect_failure: bool,
    /// Report the value was computed from, relative to the artifact directory.
    pub report: String,
}

impl CheckOutcome {
    pub fn as_expected(&self) -> bool {
        self.passed != self.expect_failure
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    /// `pass` when every check came out as expected.
    pub status: String,
    pub dim: usize,
    pub points: Vec<usize>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub snapshots: Option<usize>,
    pub checks: Vec<CheckOutcome>,
}

impl RunSummary {
    pub fn all_as_expected(&self) -> bool {
        self.checks.iter().all(CheckOutcome::as_expected)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_as_expected() {
            0
        } else {
            1
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("summary serialises")
    }

    /// One `PASS`/`FAIL` line per check.
    pub fn lines(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = match (c.passed, c.expect_failure) {
                (true, false) => "PASS",
                (false, true) => "PASS (expected failure)",
                (true, true) => "FAIL (unexpected pass)",
                (false, false) => "FAIL",
            };
            let _ = writeln!(
                s,
                "{tag:<24} {:<28} {} = {:.3e} (tolerance {:.1e})",
                c.label, c.metric, c.value, c.tolerance
            );
        }
        s
    }
}

/// Everything a run produces, before it is written out.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub summary: RunSummary,
    /// `(relative path, text)` for every CSV report.
    pub reports: Vec<(String, String)>,
    /// `(relative path, field)` for every binary snapshot.
    pub fields: Vec<(String, FieldFile)>,
    pub trajectory: Option<Trajectory>,
}

impl ScenarioResult {
    /// Writes `fields/`, `reports/` and `summary.toml` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir.join("reports"))?;
        std::fs::create_dir_all(dir.join("fields"))?;
        for (name, text) in &self.reports {
            std::fs::write(dir.join(name), text)?;
        }
        for (name, field) in &self.fields {
            field.save(&dir.join(name))?;
        }
        std::fs::write(dir.join("summary.toml"), self.summary.to_toml())?;
        Ok(())
    }
}

/// Process exit status for an error: 2 for configuration problems, 3 for
/// numerical failures.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::NumericalAbort { .. }
        | Error::StabilityBound { .. }
        | Error::NonConvergence { .. }
        | Error::SupportViolation { .. }
        | Error::ConeNotCovered { .. }
        | Error::InsideSourceSupport
        | Error::LoopMasked { .. }
        | Error::AmbiguousAudit(_)
        | Error::InsufficientSnapshots { .. }
        | Error::NonUniformSpacing { .. } => 3,
        _ => 2,
    }
}

/// Initial wavefunction including the seeded noise of `[run]`.
pub fn initial_state(config: &ScenarioConfig) -> Result<ComplexField> {
    let grid = config.grid_spec()?;
    let params = config.physics_params()?;
    let mut psi = initialize_state(&grid, &config.preset()?, &params)?;
    if let Some(run) = &config.run {
        if run.noise_amplitude > 0.0 {
            let scale =
                run.noise_amplitude * psi.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
            let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
            for z in psi.values_mut() {
                *z += Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
            }
        }
    }
    Ok(psi)
}

/// Step size of `[run]`: the fixed value or the pre-flight estimate.
pub fn resolve_dt(config: &ScenarioConfig, psi0: &ComplexField) -> Result<f64> {
    let run = config
        .run
        .as_ref()
        .ok_or_else(|| Error::Config(vec!["run: section is required for this operation".into()]))?;
    match run.dt.fixed() {
        Some(dt) => Ok(dt),
        None => preflight_dt(psi0, &config.potential_spec()?, &config.physics_params()?),
    }
}

/// Evolves the scenario's initial state over `[run]`.
pub fn scenario_trajectory(config: &ScenarioConfig, dt: f64) -> Result<Trajectory> {
    let psi0 = initial_state(config)?;
    let run = config
        .run
        .as_ref()
        .ok_or_else(|| Error::Config(vec!["run: section is required for this operation".into()]))?;
    evolve(
        &psi0,
        &config.potential_spec()?,
        &config.physics_params()?,
        run.t_end,
        dt,
        run.snapshot_stride,
    )
}

/// Up to `limit` interior slices, evenly spread.
pub(crate) fn pick_slices(traj: &Trajectory, limit: Option<usize>) -> Vec<usize> {
    let all: Vec<usize> = traj.interior_slices().collect();
    match limit {
        Some(k) if k < all.len() => {
            if k == 1 {
                return vec![all[all.len() / 2]];
            }
            let mut picked: Vec<usize> = (0..k)
                .map(|i| all[(i as f64 * (all.len() - 1) as f64 / (k - 1) as f64).round() as usize])
                .collect();
            picked.dedup();
            picked
        }
        _ => all,
    }
}

/// Largest selected norm over the slices, with its metric name.
pub(crate) fn residual_metric(reports: &[ResidualReport], norm: NormName) -> (f64, &'static str) {
    match norm {
        NormName::Relative => (
            reports.iter().map(|r| r.l2_rel).fold(0.0, f64::max),
            "max L2_rel",
        ),
        NormName::Absolute => (
            reports.iter().map(|r| r.l2_abs).fold(0.0, f64::max),
            "max L2_abs",
        ),
    }
}

fn convention(name: &Option<String>, base: SignConvention) -> SignConvention {
    name.as_deref()
        .and_then(SignConvention::from_name)
        .unwrap_or(base)
}

/// Lighthill configuration of a lighthill check after its overrides.
pub(crate) fn lighthill_check_config(
    config: &ScenarioConfig,
    conv: &Option<String>,
    c0: Option<f64>,
) -> Result<LighthillConfig> {
    let base = config.lighthill_config()?;
    Ok(LighthillConfig {
        convention: convention(conv, base.convention),
        c0: c0.unwrap_or(base.c0),
        ..base
    })
}

/// Residual reports of a trajectory-based check; `None` for other kinds.
pub(crate) fn residual_series(
    config: &ScenarioConfig,
    check: &CheckSpec,
    traj: &Trajectory,
) -> Result<Option<(String, Vec<ResidualReport>)>> {
    let floor = config.lighthill.density_floor;
    let run = |slices: &Option<usize>, f: &(dyn Fn(usize) -> Result<ResidualReport> + Sync)| {
        pick_slices(traj, *slices)
            .into_par_iter()
            .map(f)
            .collect::<Result<Vec<_>>>()
    };
    Ok(Some(match check {
        CheckSpec::Continuity { slices, .. } => (
            "continuity".into(),
            run(slices, &|s| continuity_residual(traj, s))?,
        ),
        CheckSpec::Euler { slices, .. } => (
            "euler".into(),
            run(slices, &|s| euler_residual_with(traj, s, floor))?,
        ),
        CheckSpec::Momentum {
            slices,
            convention: c,
            ..
        } => {
            let conv = convention(c, config.lighthill_config()?.convention);
            (
                format!("momentum[{}]", conv.name()),
                run(slices, &|s| momentum_flux_residual(traj, s, &conv))?,
            )
        }
        CheckSpec::Lighthill {
            slices,
            convention: c,
            c0,
            ..
        } => {
            let cfg = lighthill_check_config(config, c, *c0)?;
            (
                format!("lighthill[{}]", cfg.convention.name()),
                run(slices, &|s| lighthill_residual(traj, s, &cfg))?,
            )
        }
        _ => return Ok(None),
    }))
}

fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .replace("__", "_")
}

struct Evaluated {
    outcomes: Vec<CheckOutcome>,
    reports: Vec<(String, String)>,
}

fn outcome(
    kind: &str,
    label: &str,
    metric: &str,
    value: f64,
    tolerance: f64,
    expect_failure: bool,
    report: &str,
) -> CheckOutcome {
    CheckOutcome {
        kind: kind.into(),
        label: label.into(),
        metric: metric.into(),
        value,
        tolerance,
        passed: value <= tolerance,
        expect_failure,
        report: report.into(),
    }
}

fn evaluate_check(
    config: &ScenarioConfig,
    index: usize,
    check: &CheckSpec,
    psi0: &ComplexField,
    traj: Option<&Trajectory>,
) -> Result<Evaluated> {
    let kind = check.kind();
    let xf = check.expect_failure();
    let tagged = |label: &str| format!("reports/{index:02}_{}.csv", file_label(label));
    if let Some(traj) = traj {
        if let Some((label, reports)) = residual_series(config, check, traj)? {
            let tol = match check {
                CheckSpec::Continuity { tolerance, .. }
                | CheckSpec::Euler { tolerance, .. }
                | CheckSpec::Momentum { tolerance, .. }
                | CheckSpec::Lighthill { tolerance, .. } => *tolerance,
                _ => unreachable!("residual_series handles residual kinds only"),
            };
            let name = tagged(&label);
            let (value, metric) = residual_metric(&reports, check.norm().unwrap_or_default());
            return Ok(Evaluated {
                outcomes: vec![outcome(kind, &label, metric, value, tol, xf, &name)],
                reports: vec![(name, residual_csv(&reports))],
            });
        }
    }
    let grid = psi0.grid();
    let params = config.physics_params()?;
    let lin = config.linear_config()?;
    match check {
        CheckSpec::Dispersion {
            tolerance,
            k,
            periods,
            steps_per_period,
            amplitude,
            tangent_eps,
            tangent_t_end,
            tangent_dt,
            ratio_tolerance,
            ..
        } => {
            let n0 = density(psi0).max();
            let bg = Background::uniform(grid, n0, params)?;
            let settings = DispersionSettings {
                periods: *periods,
                steps_per_period: *steps_per_period,
                amplitude: *amplitude,
            };
            let points = dispersion_scan(&bg, k, &lin, &settings)?;
            let worst = points.iter().map(|p| p.rel_error).fold(0.0, f64::max);
            let name = tagged("dispersion");
            let mut out = Evaluated {
                outcomes: vec![outcome(
                    kind,
                    "dispersion",
                    "max rel_error",
                    worst,
                    *tolerance,
                    xf,
                    &name,
                )],
                reports: vec![(name, dispersion_csv(&points))],
            };
            if !tangent_eps.is_empty() {
                let (csv, worst_ratio) =
                    tangent_line(psi0, config, tangent_eps, *tangent_t_end, *tangent_dt, &lin)?;
                let name = tagged("tangent_line");
                out.outcomes.push(outcome(
                    kind,
                    "dispersion[tangent_line]",
                    "max |ratio - 2|",
                    worst_ratio,
                    *ratio_tolerance,
                    xf,
                    &name,
                ));
                out.reports.push((name, csv));
            }
            Ok(out)
        }
        CheckSpec::Circulation {
            tolerance,
            charge,
            center,
            half_width,
            ..
        } => {
            let traj = traj.expect("validated: circulation has a trajectory");
            let lp = square_loop(center[0], center[1], *half_width, 0.0);
            let q = params.circulation_quantum();
            let mut csv = String::from("t,raw,winding,deviation,velocity_quadrature\n");
            let mut worst: f64 = 0.0;
            for snap in &traj.snapshots {
                let rep = circulation(&snap.psi, &lp, &params)?;
                let _ = writeln!(
                    csv,
                    "{:e},{:e},{},{:e},{:e}",
                    snap.t, rep.raw, rep.winding, rep.deviation, rep.velocity_quadrature
                );
                let err = if *charge == 0 {
                    rep.raw.abs()
                } else {
                    (rep.raw - *charge as f64 * q).abs() / (charge.unsigned_abs() as f64 * q)
                };
                worst = worst.max(if rep.winding == *charge as i64 {
                    err
                } else {
                    f64::INFINITY
                });
            }
            let metric = if *charge == 0 {
                "max |circulation|"
            } else {
                "max rel deviation"
            };
            let label = format!("circulation[l={charge}]");
            let name = tagged(&label);
            Ok(Evaluated {
                outcomes: vec![outcome(kind, &label, metric, worst, *tolerance, xf, &name)],
                reports: vec![(name, csv)],
            })
        }
        CheckSpec::Integral {
            tolerance,
            source_points,
            oracle_points,
            ..
        } => {
            let base = ManufacturedIntegralCheck::default();
            let h = base.source_extent / base.source_points as f64;
            let check = ManufacturedIntegralCheck {
                c0: config.lighthill.c0,
                source_points: *source_points,
                source_extent: h * *source_points as f64,
                oracle_points: *oracle_points,
                oracle_extent: h * *oracle_points as f64,
                ..base
            };
            let rep = check.run()?;
            let name = tagged("integral");
            Ok(Evaluated {
                outcomes: vec![
                    outcome(
                        kind,
                        "integral[retarded]",
                        "rel L2 vs wave solve",
                        rep.retarded_rel_l2,
                        *tolerance,
                        xf,
                        &name,
                    ),
                    outcome(
                        kind,
                        "integral[advanced]",
                        "rel L2 vs mirrored solve",
                        rep.advanced_rel_l2,
                        *tolerance,
                        xf,
                        &name,
                    ),
                ],
                reports: vec![(name, rep.to_csv())],
            })
        }
        CheckSpec::Conservation {
            norm_tolerance,
            energy_tolerance,
            ..
        } => {
            let traj = traj.expect("validated: conservation has a trajectory");
            let d = &traj.diagnostics;
            let mut csv = String::from("t,norm,energy\n");
            for s in d {
                let _ = writeln!(csv, "{:e},{:e},{:e}", s.t, s.norm, s.energy);
            }
            let steps = ((d.last().map_or(0.0, |s| s.t) / traj.step_dt).round() as usize).max(1);
            let norm_drift = d
                .iter()
                .map(|s| (s.norm - d[0].norm).abs() / d[0].norm)
                .fold(0.0, f64::max);
            let per_1000 = norm_drift * 1000.0 / steps as f64;
            let name = tagged("conservation");
            let mut outcomes = vec![outcome(
                kind,
                "conservation[norm]",
                "norm drift per 1000 steps",
                per_1000,
                *norm_tolerance,
                xf,
                &name,
            )];
            if traj.potential.is_static() {
                let e0 = d[0].energy.abs().max(f64::MIN_POSITIVE);
                let drift = d
                    .iter()
                    .map(|s| (s.energy - d[0].energy).abs() / e0)
                    .fold(0.0, f64::max);
                outcomes.push(outcome(
                    kind,
                    "conservation[energy]",
                    "max rel energy drift",
                    drift,
                    *energy_tolerance,
                    xf,
                    &name,
                ));
            }
            Ok(Evaluated {
                outcomes,
                reports: vec![(name, csv)],
            })
        }
        CheckSpec::TwoTime {
            tolerance,
            slices,
            amplitude,
            width,
            offset,
            courant,
            ..
        } => {
            let bg = Background::from_psi(psi0, config.potential_spec()?, params)?;
            let peak = bg.n0.max();
            let dn = RealField::from_fn(grid, |p| {
                let r2 = (p[0] - offset).powi(2) + p[1] * p[1] + p[2] * p[2];
                amplitude * peak * (-0.5 * r2 / (width * width)).exp()
            });
            let state = PerturbationState::at_rest(dn, 0.0);
            let dt = courant * stability_bound(&bg, &lin)?.dt_max;
            let t_end = dt * *slices as f64;
            let ivp = evolve_ivp(&bg, &state, t_end, dt, &lin)?;
            let last = ivp.states.len() - 1;
            let data = BoundaryData {
                t0: 0.0,
                t1: ivp.states[last].t,
                start: ivp.states[0].delta_n.clone(),
                end: ivp.states[last].delta_n.clone(),
            };
            let sol = solve_two_time(&bg, &data, last, &lin)?;
            let scale = ivp
                .states
                .iter()
                .map(|s| s.delta_n.l2())
                .fold(0.0, f64::max);
            let mut csv = String::from("t,l2_error,l2_ivp\n");
            let mut worst: f64 = 0.0;
            for (a, b) in sol.trajectory.states.iter().zip(&ivp.states) {
                let err = a.delta_n.zip_map(&b.delta_n, |x, y| x - y).l2();
                worst = worst.max(err / scale);
                let _ = writeln!(csv, "{:e},{:e},{:e}", b.t, err, b.delta_n.l2());
            }
            let name = tagged("two_time");
            let label = format!("two_time[{}]", sol.solver);
            Ok(Evaluated {
                outcomes: vec![outcome(
                    kind,
                    &label,
                    "max rel L2 error",
                    worst,
                    *tolerance,
                    xf,
                    &name,
                )],
                reports: vec![(name, csv)],
            })
        }
        _ => Err(Error::Config(vec![format!(
            "checks[{index}] ({kind}): needs a [run] section"
        )])),
    }
}

/// Difference-quotient gaps of the tangent-line test and the worst
/// deviation of consecutive gap ratios from 2.
fn tangent_line(
    psi0: &ComplexField,
    config: &ScenarioConfig,
    eps: &[f64],
    t_end: f64,
    dt: f64,
    lin: &crate::linear::LinearConfig,
) -> Result<(String, f64)> {
    let grid = psi0.grid();
    let width = grid.extent(0) / 16.0;
    let phi = ComplexField::from_fn(grid, |p| {
        let r2: f64 = p.iter().map(|x| x * x).sum();
        Complex64::new(1.0, 0.5)
            * (-0.5 * r2 / (width * width)).exp()
            * (TAU * p[0] / grid.extent(0)).cos()
    });
    let test = TangentLineTest {
        psi0: psi0.clone(),
        phi,
        potential: config.potential_spec()?,
        params: config.physics_params()?,
        t_end,
        dt,
    };
    let mut sorted = eps.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let gaps = test.run(&sorted, lin)?;
    let mut csv = String::from("eps,gap,relative_gap,ratio\n");
    let mut worst: f64 = 0.0;
    for (i, g) in gaps.iter().enumerate() {
        let ratio = if i > 0 {
            gaps[i - 1].gap / g.gap
        } else {
            f64::NAN
        };
        if i > 0 {
            worst = worst.max((ratio - 2.0).abs());
        }
        let _ = writeln!(
            csv,
            "{:e},{:e},{:e},{:e}",
            g.eps, g.gap, g.relative_gap, ratio
        );
    }
    Ok((csv, worst))
}

fn field_files(
    config: &ScenarioConfig,
    psi0: &ComplexField,
    traj: Option<&Trajectory>,
) -> Vec<(String, FieldFile)> {
    let mut out = Vec::new();
    let mut push = |k: usize, t: f64, psi: &ComplexField| {
        out.push((format!("fields/psi_{k:05}.qlh"), FieldFile::complex(psi, t)));
        out.push((
            format!("fields/density_{k:05}.qlh"),
            FieldFile::real(&density(psi), t),
        ));
    };
    match (config.output.fields, traj) {
        (FieldOutput::None, _) => {}
        (_, None) => push(0, 0.0, psi0),
        (FieldOutput::Ends, Some(tr)) => {
            let last = tr.len() - 1;
            push(0, tr.snapshots[0].t, &tr.snapshots[0].psi);
            if last > 0 {
                push(last, tr.snapshots[last].t, &tr.snapshots[last].psi);
            }
        }
        (FieldOutput::All, Some(tr)) => {
            for (k, s) in tr.snapshots.iter().enumerate() {
                push(k, s.t, &s.psi);
            }
        }
    }
    out
}

/// Runs every check of `config` without touching the file system.
pub fn evaluate_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    config.validate()?;
    let grid = config.grid_spec()?;
    let psi0 = initial_state(config)?;
    let needs_traj = config.checks.iter().any(CheckSpec::needs_trajectory);
    let (traj, dt) = if needs_traj {
        let dt = resolve_dt(config, &psi0)?;
        let traj = scenario_trajectory(config, dt)?;
        if config.checks.iter().any(CheckSpec::needs_stencil) && traj.len() < 5 {
            return Err(Error::Config(vec![format!(
                "run: residual checks need at least 5 snapshots, the run stores {}",
                traj.len()
            )]));
        }
        (Some(traj), Some(dt))
    } else {
        (None, None)
    };
    let mut outcomes = Vec::new();
    let mut reports = Vec::new();
    for (i, check) in config.checks.iter().enumerate() {
        let ev = evaluate_check(config, i, check, &psi0, traj.as_ref())?;
        outcomes.extend(ev.outcomes);
        reports.extend(ev.reports);
    }
    let mut summary = RunSummary {
        scenario: config.name.clone(),
        status: String::new(),
        dim: grid.dim(),
        points: (0..grid.dim()).map(|a| grid.points(a)).collect(),
        dt,
        steps: traj
            .as_ref()
            .zip(dt)
            .map(|(t, dt)| (t.snapshots.last().map_or(0.0, |s| s.t) / dt).round() as usize),
        snapshots: traj.as_ref().map(Trajectory::len),
        checks: outcomes,
    };
    summary.status = if summary.all_as_expected() {
        "pass"
    } else {
        "fail"
    }
    .into();
    let fields = field_files(config, &psi0, traj.as_ref());
    Ok(ScenarioResult {
        summary,
        reports,
        fields,
        trajectory: traj,
    })
}

/// Runs the scenario and writes its artifacts to `out` (or the configured
/// directory).
pub fn run_scenario(
    config: &ScenarioConfig,
    out: Option<&Path>,
) -> Result<(ScenarioResult, PathBuf)> {
    let result = evaluate_scenario(config)?;
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output_dir());
    result.write(&dir)?;
    Ok((result, dir))
}
