//! Scenario files: TOML with fixed sections. Unknown keys are rejected by the
//! parser; semantic problems are collected and reported together.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpe::{
    CoreProfile, PhysicsParams, PotentialKind, PotentialSpec, Preset, TimeDependence,
};
use crate::grid::GridSpec;
use crate::hydro::{PotentialForm, SignConvention};
use crate::lighthill::{Kernel, LighthillConfig};
use crate::linear::LinearConfig;

/// A scalar applied to every axis or one value per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAxis<T> {
    One(T),
    Each(Vec<T>),
}

impl<T: Copy> PerAxis<T> {
    /// Expands to `dim` values, or `None` when the list length is wrong.
    pub fn expand(&self, dim: usize) -> Option<Vec<T>> {
        match self {
            PerAxis::One(v) => Some(vec![*v; dim]),
            PerAxis::Each(v) if v.len() == dim => Some(v.clone()),
            PerAxis::Each(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub extent: PerAxis<f64>,
    pub points: PerAxis<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default)]
    pub coupling: f64,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        PhysicsSection {
            hbar: 1.0,
            mass: 1.0,
            coupling: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialName {
    #[default]
    None,
    Harmonic,
    Expression,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(default)]
    pub kind: PotentialName,
    pub omega: Option<PerAxis<f64>>,
    pub expression: Option<String>,
    /// Piecewise-linear `(t, factor)` knots multiplying the shape.
    pub scale: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreName {
    Gaussian,
    Healing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    PlaneWave {
        k: PerAxis<f64>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Gaussian {
        sigma: f64,
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default)]
        boost: Vec<f64>,
    },
    HarmonicGround {
        omega: f64,
    },
    DarkSoliton {
        #[serde(default = "one")]
        n_inf: f64,
        #[serde(default)]
        position: f64,
    },
    BrightSoliton {
        amplitude: f64,
        #[serde(default)]
        position: f64,
        #[serde(default)]
        velocity: f64,
    },
    Vortex {
        charge: i32,
        #[serde(default)]
        center: [f64; 2],
        core: CoreName,
        width: Option<f64>,
        xi: Option<f64>,
        envelope: Option<f64>,
    },
    Uniform {
        #[serde(default = "one")]
        amplitude: f64,
    },
}

/// `dt = "auto"` or a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DtSetting {
    Value(f64),
    Word(String),
}

impl Default for DtSetting {
    fn default() -> Self {
        DtSetting::Word("auto".into())
    }
}

impl DtSetting {
    pub fn fixed(&self) -> Option<f64> {
        match self {
            DtSetting::Value(v) => Some(*v),
            DtSetting::Word(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_end: f64,
    #[serde(default)]
    pub dt: DtSetting,
    #[serde(default = "one_usize")]
    pub snapshot_stride: usize,
    /// Complex noise added to the initial state, relative to `max |psi|`.
    #[serde(default)]
    pub noise_amplitude: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    Retarded,
    Advanced,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LighthillSection {
    #[serde(default = "one")]
    pub c0: f64,
    #[serde(default = "audited")]
    pub convention: String,
    #[serde(default = "mask_floor")]
    pub density_floor: f64,
    #[serde(default = "retarded")]
    pub kernel: KernelName,
    /// Retarded weight of a mixed kernel.
    pub mix: Option<f64>,
}

impl Default for LighthillSection {
    fn default() -> Self {
        LighthillSection {
            c0: 1.0,
            convention: audited(),
            density_floor: mask_floor(),
            kernel: KernelName::Retarded,
            mix: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearModeName {
    Audited,
    FrozenVelocity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialFormName {
    Dipole,
    Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSection {
    #[serde(default = "linear_audited")]
    pub mode: LinearModeName,
    pub potential_form: Option<PotentialFormName>,
    #[serde(default = "solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "max_iterations")]
    pub max_iterations: usize,
}

impl Default for LinearSection {
    fn default() -> Self {
        LinearSection {
            mode: LinearModeName::Audited,
            potential_form: None,
            solver_tol: solver_tol(),
            max_iterations: max_iterations(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldOutput {
    All,
    #[default]
    Ends,
    None,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    #[serde(default)]
    pub fields: FieldOutput,
}

/// Residual norm compared against the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormName {
    /// Masked L2 norm over the largest constituent-term norm.
    #[default]
    Relative,
    /// Masked L2 norm; for states whose terms all vanish identically.
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    /// Largest relative continuity residual over the evaluated slices.
    Continuity {
        tolerance: f64,
        #[serde(default)]
        norm: NormName,
        slices: Option<usize>,
        #[serde(default)]
        expect_failure: bool,
    },
    /// Largest relative Hamilton-Jacobi residual.
    Euler {
        tolerance: f64,
        #[serde(default)]
        norm: NormName,
        slices: Option<usize>,
        #[serde(default)]
        expect_failure: bool,
    },
    Momentum {
        tolerance: f64,
        #[serde(default)]
        norm: NormName,
        convention: Option<String>,
        slices: Option<usize>,
        #[serde(default)]
        expect_failure: bool,
    },
    Lighthill {
        tolerance: f64,
        #[serde(default)]
        norm: NormName,
        convention: Option<String>,
        c0: Option<f64>,
        slices: Option<usize>,
        #[serde(default)]
        expect_failure: bool,
    },
    /// Bogoliubov frequencies on the initial (uniform) state, plus an
    /// optional tangent-line comparison with full evolutions.
    Dispersion {
        tolerance: f64,
        k: Vec<f64>,
        #[serde(default = "periods")]
        periods: f64,
        #[serde(default = "steps_per_period")]
        steps_per_period: usize,
        #[serde(default = "amplitude")]
        amplitude: f64,
        #[serde(default)]
        tangent_eps: Vec<f64>,
        #[serde(default = "one")]
        tangent_t_end: f64,
        #[serde(default = "tangent_dt")]
        tangent_dt: f64,
        /// Allowed deviation of each halving ratio from 2.
        #[serde(default = "ratio_tolerance")]
        ratio_tolerance: f64,
        #[serde(default)]
        expect_failure: bool,
    },
    Circulation {
        tolerance: f64,
        charge: i32,
        #[serde(default)]
        center: [f64; 2],
        half_width: f64,
        #[serde(default)]
        expect_failure: bool,
    },
    /// Manufactured 3D source, integral solution against a direct wave solve.
    Integral {
        #[serde(default = "integral_tolerance")]
        tolerance: f64,
        #[serde(default = "source_points")]
        source_points: usize,
        #[serde(default = "oracle_points")]
        oracle_points: usize,
        #[serde(default)]
        expect_failure: bool,
    },
    /// Norm drift per 1000 steps and energy drift of the trajectory.
    Conservation {
        #[serde(default = "norm_tolerance")]
        norm_tolerance: f64,
        #[serde(default = "energy_tolerance")]
        energy_tolerance: f64,
        #[serde(default)]
        expect_failure: bool,
    },
    /// Recovers a linear trajectory from its end slices.
    TwoTime {
        #[serde(default = "two_time_tolerance")]
        tolerance: f64,
        #[serde(default = "two_time_slices")]
        slices: usize,
        #[serde(default = "amplitude")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        offset: f64,
        /// Step as a fraction of the stability limit.
        #[serde(default = "half")]
        courant: f64,
        #[serde(default)]
        expect_failure: bool,
    },
}

impl CheckSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            CheckSpec::Continuity { .. } => "continuity",
            CheckSpec::Euler { .. } => "euler",
            CheckSpec::Momentum { .. } => "momentum",
            CheckSpec::Lighthill { .. } => "lighthill",
            CheckSpec::Dispersion { .. } => "dispersion",
            CheckSpec::Circulation { .. } => "circulation",
            CheckSpec::Integral { .. } => "integral",
            CheckSpec::Conservation { .. } => "conservation",
            CheckSpec::TwoTime { .. } => "two_time",
        }
    }

    pub fn expect_failure(&self) -> bool {
        match self {
            CheckSpec::Continuity { expect_failure, .. }
            | CheckSpec::Euler { expect_failure, .. }
            | CheckSpec::Momentum { expect_failure, .. }
            | CheckSpec::Lighthill { expect_failure, .. }
            | CheckSpec::Dispersion { expect_failure, .. }
            | CheckSpec::Circulation { expect_failure, .. }
            | CheckSpec::Integral { expect_failure, .. }
            | CheckSpec::Conservation { expect_failure, .. }
            | CheckSpec::TwoTime { expect_failure, .. } => *expect_failure,
        }
    }

    /// True for checks evaluated on the evolved trajectory.
    pub fn needs_trajectory(&self) -> bool {
        matches!(
            self,
            CheckSpec::Continuity { .. }
                | CheckSpec::Euler { .. }
                | CheckSpec::Momentum { .. }
                | CheckSpec::Lighthill { .. }
                | CheckSpec::Circulation { .. }
                | CheckSpec::Conservation { .. }
        )
    }

    /// Norm selector of residual checks.
    pub fn norm(&self) -> Option<NormName> {
        match self {
            CheckSpec::Continuity { norm, .. }
            | CheckSpec::Euler { norm, .. }
            | CheckSpec::Momentum { norm, .. }
            | CheckSpec::Lighthill { norm, .. } => Some(*norm),
            _ => None,
        }
    }

    /// True for residual checks that need five snapshots around each slice.
    pub fn needs_stencil(&self) -> bool {
        matches!(
            self,
            CheckSpec::Continuity { .. }
                | CheckSpec::Euler { .. }
                | CheckSpec::Momentum { .. }
                | CheckSpec::Lighthill { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub grid: GridSection,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub potential: PotentialSection,
    pub initial: InitialSection,
    pub run: Option<RunSection>,
    #[serde(default)]
    pub lighthill: LighthillSection,
    #[serde(default)]
    pub linear: LinearSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn half() -> f64 {
    0.5
}
fn audited() -> String {
    "audited".into()
}
fn mask_floor() -> f64 {
    crate::madelung::DEFAULT_MASK_FLOOR
}
fn retarded() -> KernelName {
    KernelName::Retarded
}
fn linear_audited() -> LinearModeName {
    LinearModeName::Audited
}
fn solver_tol() -> f64 {
    LinearConfig::default().solver_tol
}
fn max_iterations() -> usize {
    LinearConfig::default().max_iterations
}
fn periods() -> f64 {
    5.0
}
fn steps_per_period() -> usize {
    100
}
fn amplitude() -> f64 {
    1e-3
}
fn tangent_dt() -> f64 {
    0.01
}
fn ratio_tolerance() -> f64 {
    0.4
}
fn integral_tolerance() -> f64 {
    0.05
}
fn source_points() -> usize {
    32
}
fn oracle_points() -> usize {
    64
}
fn norm_tolerance() -> f64 {
    1e-12
}
fn energy_tolerance() -> f64 {
    1e-8
}
fn two_time_tolerance() -> f64 {
    1e-6
}
fn two_time_slices() -> usize {
    256
}

fn positive(errors: &mut Vec<String>, field: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errors.push(format!("{field} must be positive, got {v}"));
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serialises")
    }

    /// Every semantic problem in the file, as one `Error::Config`.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let grid = self.grid_spec();
        if let Err(e) = &grid {
            match e {
                Error::InvalidGrid(list) => {
                    errors.extend(list.iter().map(|m| format!("grid: {m}")))
                }
                other => errors.push(format!("grid: {other}")),
            }
        }
        let params = self.physics_params();
        if let Err(e) = &params {
            errors.push(format!("physics: {e}"));
        }
        match self.potential_spec() {
            Ok(p) => {
                if let Ok(g) = &grid {
                    if let Err(e) = p.validate(g) {
                        errors.push(format!("potential: {e}"));
                    }
                }
            }
            Err(e) => errors.push(format!("potential: {e}")),
        }
        match self.preset() {
            Ok(preset) => {
                if let (Ok(g), Ok(p)) = (&grid, &params) {
                    if let Err(e) = preset.validate(g, p) {
                        errors.push(format!("initial: {e}"));
                    }
                }
            }
            Err(e) => errors.push(format!("initial: {e}")),
        }
        if let InitialSection::HarmonicGround { omega } = self.initial {
            let trap = self
                .potential
                .omega
                .as_ref()
                .and_then(|o| o.expand(self.grid.dim));
            let matches = self.potential.kind == PotentialName::Harmonic
                && trap.is_some_and(|w| w.iter().all(|v| (v - omega).abs() <= 1e-12 * omega));
            if !matches {
                errors.push(
                    "initial: harmonic_ground needs a harmonic potential with the same omega"
                        .into(),
                );
            }
        }
        if let Err(e) = self.lighthill_config() {
            errors.push(format!("lighthill: {e}"));
        }
        if let Err(e) = self.linear_config() {
            errors.push(format!("linear: {e}"));
        }
        if let Some(run) = &self.run {
            positive(&mut errors, "run.t_end", run.t_end);
            match &run.dt {
                DtSetting::Value(v) => positive(&mut errors, "run.dt", *v),
                DtSetting::Word(w) if w == "auto" => {}
                DtSetting::Word(w) => {
                    errors.push(format!("run.dt must be a number or \"auto\", got \"{w}\""))
                }
            }
            if run.snapshot_stride == 0 {
                errors.push("run.snapshot_stride must be at least 1".into());
            }
            if !(run.noise_amplitude >= 0.0 && run.noise_amplitude.is_finite()) {
                errors.push("run.noise_amplitude must be non-negative".into());
            }
            if let DtSetting::Value(dt) = run.dt {
                if self.checks.iter().any(CheckSpec::needs_stencil) && dt > 0.0 {
                    let snaps =
                        (run.t_end / (dt * run.snapshot_stride as f64)).floor() as usize + 1;
                    if snaps < 5 {
                        errors.push(format!(
                            "run: residual checks need at least 5 snapshots, t_end / (dt * stride) gives {snaps}"
                        ));
                    }
                }
            }
        }
        if self.checks.is_empty() {
            errors.push("checks: at least one [[checks]] entry is required".into());
        }
        for (i, c) in self.checks.iter().enumerate() {
            let at = format!("checks[{i}] ({})", c.kind());
            if c.needs_trajectory() && self.run.is_none() {
                errors.push(format!("{at}: needs a [run] section"));
            }
            self.validate_check(c, &at, &mut errors);
        }
        if self.name.trim().is_empty() {
            errors.push("name must not be empty".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    fn validate_check(&self, c: &CheckSpec, at: &str, errors: &mut Vec<String>) {
        let conv_ok = |name: &Option<String>, errors: &mut Vec<String>| {
            if let Some(n) = name {
                if SignConvention::from_name(n).is_none() {
                    errors.push(format!(
                        "{at}: unknown convention \"{n}\" (audited, printed, printed_momentum)"
                    ));
                }
            }
        };
        match c {
            CheckSpec::Continuity {
                tolerance, slices, ..
            }
            | CheckSpec::Euler {
                tolerance, slices, ..
            } => {
                positive(errors, &format!("{at} tolerance"), *tolerance);
                if *slices == Some(0) {
                    errors.push(format!("{at}: slices must be at least 1"));
                }
            }
            CheckSpec::Momentum {
                tolerance,
                convention,
                slices,
                ..
            } => {
                positive(errors, &format!("{at} tolerance"), *tolerance);
                conv_ok(convention, errors);
                if *slices == Some(0) {
                    errors.push(format!("{at}: slices must be at least 1"));
                }
            }
            CheckSpec::Lighthill {
                tolerance,
                convention,
                c0,
                slices,
                ..
            } => {
                positive(errors, &format!("{at} tolerance"), *tolerance);
                conv_ok(convention, errors);
                if let Some(c) = c0 {
                    positive(errors, &format!("{at} c0"), *c);
                }
                if *slices == Some(0) {
                    errors.push(format!("{at}: slices must be at least 1"));
                }
            }
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
                positive(errors, &format!("{at} tolerance"), *tolerance);
                if k.is_empty() {
                    errors.push(format!("{at}: k list must not be empty"));
                }
                positive(errors, &format!("{at} periods"), *periods);
                positive(errors, &format!("{at} amplitude"), *amplitude);
                if *steps_per_period < 4 {
                    errors.push(format!("{at}: steps_per_period must be at least 4"));
                }
                if !matches!(self.initial, InitialSection::Uniform { .. }) {
                    errors.push(format!("{at}: needs a uniform initial state"));
                }
                if self.potential.kind != PotentialName::None {
                    errors.push(format!("{at}: needs potential kind = \"none\""));
                }
                if !tangent_eps.is_empty() {
                    if tangent_eps.len() < 2 || tangent_eps.iter().any(|e| !(*e > 0.0)) {
                        errors.push(format!(
                            "{at}: tangent_eps needs two or more positive values"
                        ));
                    }
                    positive(errors, &format!("{at} tangent_t_end"), *tangent_t_end);
                    positive(errors, &format!("{at} tangent_dt"), *tangent_dt);
                    positive(errors, &format!("{at} ratio_tolerance"), *ratio_tolerance);
                }
            }
            CheckSpec::Circulation {
                tolerance,
                half_width,
                ..
            } => {
                positive(errors, &format!("{at} tolerance"), *tolerance);
                positive(errors, &format!("{at} half_width"), *half_width);
                if self.grid.dim < 2 {
                    errors.push(format!("{at}: needs a 2D or 3D grid"));
                }
            }
            CheckSpec::Integral {
                tolerance,
                source_points,
                oracle_points,
                ..
            } => {
                positive(errors, &format!("{at} tolerance"), *tolerance);
                if *source_points < 8
                    || source_points % 2 != 0
                    || oracle_points < source_points
                    || oracle_points % 2 != 0
                {
                    errors.push(format!("{at}: needs even source_points >= 8 and even oracle_points >= source_points"));
                }
            }
            CheckSpec::Conservation {
                norm_tolerance,
                energy_tolerance,
                ..
            } => {
                positive(errors, &format!("{at} norm_tolerance"), *norm_tolerance);
                positive(errors, &format!("{at} energy_tolerance"), *energy_tolerance);
            }
            CheckSpec::TwoTime {
                tolerance,
                slices,
                width,
                courant,
                ..
            } => {
                positive(errors, &format!("{at} tolerance"), *tolerance);
                positive(errors, &format!("{at} width"), *width);
                if *slices < 2 {
                    errors.push(format!("{at}: slices must be at least 2"));
                }
                if !(*courant > 0.0 && *courant < 1.0) {
                    errors.push(format!("{at}: courant must lie in (0, 1)"));
                }
                if self.grid.dim > 2 {
                    errors.push(format!("{at}: needs a 1D or 2D grid"));
                }
            }
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let d = self.grid.dim;
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidGrid(vec![format!(
                "dim must be 1, 2 or 3, got {d}"
            )]));
        }
        let mut errors = Vec::new();
        let extents = self.grid.extent.expand(d);
        let points = self.grid.points.expand(d);
        if extents.is_none() {
            errors.push(format!("extent needs 1 or {d} values"));
        }
        if points.is_none() {
            errors.push(format!("points needs 1 or {d} values"));
        }
        if !errors.is_empty() {
            return Err(Error::InvalidGrid(errors));
        }
        let (extents, points) = (extents.unwrap(), points.unwrap());
        let origin: Vec<f64> = extents.iter().map(|l| -0.5 * l).collect();
        GridSpec::new(d, &extents, &points, &origin)
    }

    pub fn physics_params(&self) -> Result<PhysicsParams> {
        PhysicsParams::new(self.physics.hbar, self.physics.mass, self.physics.coupling)
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        let p = &self.potential;
        let kind = match p.kind {
            PotentialName::None => {
                if p.omega.is_some() || p.expression.is_some() {
                    return Err(Error::InvalidArgument(
                        "kind = \"none\" takes no omega or expression".into(),
                    ));
                }
                PotentialKind::None
            }
            PotentialName::Harmonic => {
                let omega = match &p.omega {
                    Some(PerAxis::One(w)) => vec![*w],
                    Some(PerAxis::Each(w)) => w.clone(),
                    None => {
                        return Err(Error::InvalidArgument(
                            "harmonic potential needs omega".into(),
                        ))
                    }
                };
                PotentialKind::Harmonic { omega }
            }
            PotentialName::Expression => match &p.expression {
                Some(e) => PotentialKind::Expression(e.clone()),
                None => {
                    return Err(Error::InvalidArgument(
                        "expression potential needs expression".into(),
                    ))
                }
            },
        };
        let time = match &p.scale {
            None => TimeDependence::Static,
            Some(knots) => {
                if knots.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::InvalidArgument(
                        "scale knots must have increasing times".into(),
                    ));
                }
                TimeDependence::Scaled(knots.iter().map(|k| (k[0], k[1])).collect())
            }
        };
        Ok(PotentialSpec { kind, time })
    }

    pub fn preset(&self) -> Result<Preset> {
        let d = self.grid.dim;
        Ok(match &self.initial {
            InitialSection::PlaneWave { k, amplitude } => Preset::PlaneWave {
                k: k.expand(d)
                    .ok_or_else(|| Error::InvalidPreset(format!("k needs 1 or {d} values")))?,
                amplitude: *amplitude,
            },
            InitialSection::Gaussian {
                sigma,
                center,
                boost,
            } => Preset::Gaussian {
                sigma: *sigma,
                center: center.clone(),
                boost: boost.clone(),
            },
            InitialSection::HarmonicGround { omega } => Preset::HarmonicGround { omega: *omega },
            InitialSection::DarkSoliton { n_inf, position } => Preset::DarkSoliton {
                n_inf: *n_inf,
                position: *position,
            },
            InitialSection::BrightSoliton {
                amplitude,
                position,
                velocity,
            } => Preset::BrightSoliton {
                amplitude: *amplitude,
                position: *position,
                velocity: *velocity,
            },
            InitialSection::Vortex {
                charge,
                center,
                core,
                width,
                xi,
                envelope,
            } => {
                let core = match core {
                    CoreName::Gaussian => CoreProfile::Gaussian {
                        width: width.ok_or_else(|| {
                            Error::InvalidPreset("gaussian core needs width".into())
                        })?,
                    },
                    CoreName::Healing => CoreProfile::Healing {
                        xi: xi
                            .ok_or_else(|| Error::InvalidPreset("healing core needs xi".into()))?,
                        envelope: envelope.ok_or_else(|| {
                            Error::InvalidPreset("healing core needs envelope".into())
                        })?,
                    },
                };
                Preset::Vortex {
                    charge: *charge,
                    center: *center,
                    core,
                }
            }
            InitialSection::Uniform { amplitude } => Preset::Uniform {
                amplitude: *amplitude,
            },
        })
    }

    pub fn lighthill_config(&self) -> Result<LighthillConfig> {
        let s = &self.lighthill;
        let convention = SignConvention::from_name(&s.convention).ok_or_else(|| {
            Error::InvalidArgument(format!("unknown convention \"{}\"", s.convention))
        })?;
        let kernel = match (s.kernel, s.mix) {
            (KernelName::Retarded, None) => Kernel::Retarded,
            (KernelName::Advanced, None) => Kernel::Advanced,
            (KernelName::Mixed, Some(l)) => Kernel::Mixed(l),
            (KernelName::Mixed, None) => {
                return Err(Error::InvalidArgument("mixed kernel needs mix".into()))
            }
            (_, Some(_)) => {
                return Err(Error::InvalidArgument(
                    "mix applies only to kernel = \"mixed\"".into(),
                ))
            }
        };
        if !(s.density_floor > 0.0 && s.density_floor < 1.0) {
            return Err(Error::InvalidArgument(
                "density_floor must lie in (0, 1)".into(),
            ));
        }
        let cfg = LighthillConfig {
            c0: s.c0,
            convention,
            density_floor: s.density_floor,
            kernel,
            near_field: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn linear_config(&self) -> Result<LinearConfig> {
        let s = &self.linear;
        let mut cfg = match s.mode {
            LinearModeName::Audited => LinearConfig::default(),
            LinearModeName::FrozenVelocity => LinearConfig::frozen_velocity(),
        };
        if let Some(form) = s.potential_form {
            cfg.potential_form = match form {
                PotentialFormName::Dipole => PotentialForm::Dipole,
                PotentialFormName::Tensor => PotentialForm::TensorAbsorbed,
            };
        }
        cfg.c0 = self.lighthill.c0;
        cfg.solver_tol = s.solver_tol;
        cfg.max_iterations = s.max_iterations;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Output directory, defaulting to `out/<name>`.
    pub fn output_dir(&self) -> PathBuf {
        self.output
            .directory
            .clone()
            .unwrap_or_else(|| PathBuf::from("out").join(&self.name))
    }

    /// Copy with `points` on every axis.
    pub fn with_points(&self, points: usize) -> Self {
        let mut c = self.clone();
        c.grid.points = PerAxis::One(points);
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
[grid]
dim = 1
extent = 40.0
points = 64
[initial]
preset = "gaussian"
sigma = 1.0
[run]
t_end = 0.01
dt = 0.001
[[checks]]
kind = "continuity"
tolerance = 1e-6
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.physics, PhysicsSection::default());
        assert_eq!(c.output.fields, FieldOutput::Ends);
        assert_eq!(c.output_dir(), PathBuf::from("out/t"));
        assert_eq!(c.lighthill_config().unwrap(), LighthillConfig::default());
        assert_eq!(c.run.as_ref().unwrap().dt.fixed(), Some(0.001));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = MINIMAL.replace("sigma = 1.0", "sigma = 1.0\nsigam = 2.0");
        let err = ScenarioConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("sigam"), "{err}");
    }

    #[test]
    fn odd_grid_names_the_field() {
        let text = MINIMAL.replace("points = 64", "points = 63");
        let Error::Config(list) = ScenarioConfig::from_toml(&text).unwrap_err() else {
            panic!("expected config error");
        };
        assert!(
            list.iter()
                .any(|m| m.starts_with("grid:") && m.contains("63")),
            "{list:?}"
        );
    }

    #[test]
    fn all_problems_are_listed() {
        let text = MINIMAL
            .replace("points = 64", "points = 63")
            .replace("t_end = 0.01", "t_end = -1.0")
            .replace("tolerance = 1e-6", "tolerance = 0.0");
        let Error::Config(list) = ScenarioConfig::from_toml(&text).unwrap_err() else {
            panic!("expected config error");
        };
        assert!(list.len() >= 3, "{list:?}");
    }

    #[test]
    fn too_few_snapshots_for_residuals() {
        let text = MINIMAL.replace("t_end = 0.01", "t_end = 0.002");
        assert!(matches!(
            ScenarioConfig::from_toml(&text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn harmonic_ground_requires_matching_trap() {
        let text = MINIMAL.replace(
            "preset = \"gaussian\"\nsigma = 1.0",
            "preset = \"harmonic_ground\"\nomega = 1.0",
        );
        assert!(ScenarioConfig::from_toml(&text).is_err());
        let ok = text.replace(
            "[run]",
            "[potential]\nkind = \"harmonic\"\nomega = 1.0\n[run]",
        );
        ScenarioConfig::from_toml(&ok).unwrap();
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
