//! Scenario library shipped with the crate, plus the default sign-audit suite.

use std::fmt::Write as _;

use super::config::{DtSetting, ScenarioConfig};
use super::run::{initial_state, resolve_dt, scenario_trajectory};
use crate::error::{Error, Result};
use crate::hydro::{sign_audit, AuditScenario, SignAudit};

const BUNDLED: &[(&str, &str)] = &[
    (
        "plane_wave",
        include_str!("../../scenarios/plane_wave.toml"),
    ),
    (
        "gaussian_free",
        include_str!("../../scenarios/gaussian_free.toml"),
    ),
    (
        "harmonic_ground",
        include_str!("../../scenarios/harmonic_ground.toml"),
    ),
    (
        "dark_soliton",
        include_str!("../../scenarios/dark_soliton.toml"),
    ),
    (
        "bright_soliton",
        include_str!("../../scenarios/bright_soliton.toml"),
    ),
    ("vortex2d", include_str!("../../scenarios/vortex2d.toml")),
    (
        "bogoliubov_uniform",
        include_str!("../../scenarios/bogoliubov_uniform.toml"),
    ),
    (
        "manufactured_source_3d",
        include_str!("../../scenarios/manufactured_source_3d.toml"),
    ),
    (
        "two_time_demo",
        include_str!("../../scenarios/two_time_demo.toml"),
    ),
    (
        "paper_convention_comparison",
        include_str!("../../scenarios/paper_convention_comparison.toml"),
    ),
];

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

/// TOML text of a bundled scenario.
pub fn bundled_source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn bundled(name: &str) -> Result<ScenarioConfig> {
    let text = bundled_source(name).ok_or_else(|| {
        Error::Config(vec![format!(
            "unknown scenario \"{name}\"; bundled: {}",
            bundled_names().join(", ")
        )])
    })?;
    ScenarioConfig::from_toml(text)
}

/// Scenarios whose momentum balance decides the sign audit.
pub const AUDIT_SCENARIOS: &[&str] = &[
    "gaussian_free",
    "harmonic_ground",
    "dark_soliton",
    "bright_soliton",
];

/// Steps evolved at each audit level; the audit reads the middle slice.
pub const AUDIT_STEPS: usize = 6;

/// Short pre-flight-step runs of each audit scenario at every ladder size.
pub fn audit_suite(ladder: &[usize]) -> Result<Vec<AuditScenario>> {
    if ladder.is_empty() {
        return Err(Error::Config(vec![
            "ladder: needs at least one resolution".into()
        ]));
    }
    AUDIT_SCENARIOS
        .iter()
        .map(|name| {
            let base = bundled(name)?;
            let ladder = ladder
                .iter()
                .map(|&n| {
                    let mut level = base.with_points(n);
                    let dt = resolve_dt(&level, &initial_state(&level)?)?;
                    let run = level
                        .run
                        .as_mut()
                        .expect("audit scenarios have a run section");
                    run.t_end = AUDIT_STEPS as f64 * dt;
                    run.dt = DtSetting::Value(dt);
                    run.snapshot_stride = 1;
                    scenario_trajectory(&level, dt)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(AuditScenario {
                name: name.to_string(),
                ladder,
            })
        })
        .collect()
}

pub const AUDIT_CSV_HEADER: &str = "scenario,s_pi,s_g,N,l2_rel";

/// Runs the default suite and returns the audit with its CSV table.
pub fn audit_signs(ladder: &[usize]) -> Result<(SignAudit, String)> {
    let audit = sign_audit(&audit_suite(ladder)?)?;
    let mut csv = String::from(AUDIT_CSV_HEADER);
    csv.push('\n');
    for row in &audit.rows {
        for (n, v) in ladder.iter().zip(&row.l2_rel) {
            let _ = writeln!(
                csv,
                "{},{},{},{n},{v:e}",
                row.scenario,
                row.s_pi.value(),
                row.s_g.value()
            );
        }
    }
    Ok((audit, csv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_scenario_validates() {
        for name in bundled_names() {
            let c = bundled(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(c.name, name);
            c.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn unknown_name_lists_the_library() {
        let err = bundled("nope").unwrap_err().to_string();
        assert!(err.contains("gaussian_free"));
    }
}
