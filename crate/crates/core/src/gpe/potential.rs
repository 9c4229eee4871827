//! External potentials `V(r, t)`.

use evalexpr::{ContextWithMutableVariables, HashMapContext, Node, Value};

use super::PhysicsParams;
use crate::error::{Error, Result};
use crate::grid::{gradient_vector, GridSpec, RealField, VectorField};

/// Spatial shape of the potential.
#[derive(Debug, Clone)]
pub enum PotentialKind {
    None,
    /// `V = m/2 sum_a omega_a^2 x_a^2`, centred on the coordinate origin.
    Harmonic {
        omega: Vec<f64>,
    },
    /// Samples on the trajectory grid.
    Tabulated(RealField),
    /// Expression in `x`, `y`, `z` and `t` (evalexpr syntax, e.g. `0.5 * x^2`).
    Expression(String),
}

/// Time modulation of the spatial shape.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeDependence {
    Static,
    /// Piecewise-linear scale factor through `(t, s)` knots, held constant
    /// outside the knot range.
    Scaled(Vec<(f64, f64)>),
}

#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub time: TimeDependence,
}

/// Potential values and gradient at one instant.
#[derive(Debug, Clone)]
pub struct PotentialSample {
    pub value: RealField,
    pub gradient: VectorField,
}

impl PotentialSample {
    pub fn zero(grid: &GridSpec) -> Self {
        PotentialSample {
            value: RealField::zeros(grid),
            gradient: VectorField::zeros(grid),
        }
    }
}

fn compile(expr: &str) -> Result<Node> {
    evalexpr::build_operator_tree(expr)
        .map_err(|e| Error::InvalidArgument(format!("potential expression `{expr}`: {e}")))
}

fn eval_expression(node: &Node, grid: &GridSpec, t: f64) -> Result<RealField> {
    let mut ctx = HashMapContext::new();
    let mut out = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let p = grid.position(idx);
        for (name, v) in [("x", p[0]), ("y", p[1]), ("z", p[2]), ("t", t)] {
            ctx.set_value(name.into(), Value::Float(v))
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        }
        let v = node
            .eval_number_with_context(&ctx)
            .map_err(|e| Error::InvalidArgument(format!("potential expression: {e}")))?;
        out.push(v);
    }
    Ok(RealField::from_vec(grid, out))
}

impl PotentialSpec {
    pub fn none() -> Self {
        PotentialSpec {
            kind: PotentialKind::None,
            time: TimeDependence::Static,
        }
    }

    pub fn harmonic(omega: &[f64]) -> Self {
        PotentialSpec {
            kind: PotentialKind::Harmonic {
                omega: omega.to_vec(),
            },
            time: TimeDependence::Static,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self.kind, PotentialKind::None)
    }

    pub fn is_static(&self) -> bool {
        self.time == TimeDependence::Static && !self.shape_depends_on_time()
    }

    /// True when the spatial shape itself changes with `t` (an expression using `t`).
    pub(crate) fn shape_depends_on_time(&self) -> bool {
        match &self.kind {
            PotentialKind::Expression(e) => compile(e)
                .map(|n| n.iter_variable_identifiers().any(|v| v == "t"))
                .unwrap_or(false),
            _ => false,
        }
    }

    /// Scale factor applied to the spatial shape at time `t`.
    pub fn scale(&self, t: f64) -> f64 {
        match &self.time {
            TimeDependence::Static => 1.0,
            TimeDependence::Scaled(knots) => {
                if knots.is_empty() {
                    return 1.0;
                }
                if t <= knots[0].0 {
                    return knots[0].1;
                }
                for w in knots.windows(2) {
                    let (t0, s0) = w[0];
                    let (t1, s1) = w[1];
                    if t <= t1 {
                        return s0 + (s1 - s0) * (t - t0) / (t1 - t0);
                    }
                }
                knots[knots.len() - 1].1
            }
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        match &self.kind {
            PotentialKind::Harmonic { omega } => {
                if omega.len() != grid.dim() && omega.len() != 1 {
                    return Err(Error::InvalidArgument(format!(
                        "harmonic potential needs 1 or {} frequencies, got {}",
                        grid.dim(),
                        omega.len()
                    )));
                }
                if omega.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::InvalidArgument(
                        "trap frequencies must be finite and non-negative".into(),
                    ));
                }
            }
            PotentialKind::Tabulated(f) => {
                if !f.grid().same_shape(grid) {
                    return Err(Error::InvalidArgument(
                        "tabulated potential lives on a different grid".into(),
                    ));
                }
                if !f.is_finite() {
                    return Err(Error::InvalidArgument(
                        "tabulated potential has non-finite values".into(),
                    ));
                }
            }
            PotentialKind::Expression(e) => {
                compile(e)?;
            }
            PotentialKind::None => {}
        }
        if let TimeDependence::Scaled(knots) = &self.time {
            if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::InvalidArgument(
                    "scale knots must have increasing times".into(),
                ));
            }
        }
        Ok(())
    }

    fn omega_axis(omega: &[f64], a: usize) -> f64 {
        if omega.len() == 1 {
            omega[0]
        } else {
            omega[a]
        }
    }

    /// Spatial shape at scale 1 (time only enters expressions through `t`).
    pub(crate) fn shape(
        &self,
        grid: &GridSpec,
        params: &PhysicsParams,
        t: f64,
    ) -> Result<RealField> {
        Ok(match &self.kind {
            PotentialKind::None => RealField::zeros(grid),
            PotentialKind::Harmonic { omega } => RealField::from_fn(grid, |p| {
                (0..grid.dim())
                    .map(|a| 0.5 * params.mass * Self::omega_axis(omega, a).powi(2) * p[a] * p[a])
                    .sum()
            }),
            PotentialKind::Tabulated(f) => f.clone(),
            PotentialKind::Expression(e) => eval_expression(&compile(e)?, grid, t)?,
        })
    }

    /// `V(r, t)` sampled on `grid`.
    pub fn sample(&self, grid: &GridSpec, params: &PhysicsParams, t: f64) -> Result<RealField> {
        let s = self.scale(t);
        let f = self.shape(grid, params, t)?;
        Ok(if s == 1.0 { f } else { f.scaled(s) })
    }

    /// Value and gradient. The harmonic gradient is analytic (the periodic
    /// extension of the trap has a kink at the box edge); other kinds are
    /// differentiated spectrally.
    pub fn evaluate(
        &self,
        grid: &GridSpec,
        params: &PhysicsParams,
        t: f64,
    ) -> Result<PotentialSample> {
        let s = self.scale(t);
        let value = self.sample(grid, params, t)?;
        let gradient = match &self.kind {
            PotentialKind::None => VectorField::zeros(grid),
            PotentialKind::Harmonic { omega } => {
                let comps = (0..grid.dim())
                    .map(|a| {
                        let w2 = Self::omega_axis(omega, a).powi(2);
                        RealField::from_fn(grid, |p| s * params.mass * w2 * p[a])
                    })
                    .collect();
                VectorField::from_components(grid, comps)
            }
            _ => gradient_vector(&value),
        };
        Ok(PotentialSample { value, gradient })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_value_and_gradient() {
        let g = GridSpec::centered(2, 8.0, 16).unwrap();
        let params = PhysicsParams::default().with_mass(2.0);
        let v = PotentialSpec::harmonic(&[1.0, 3.0])
            .evaluate(&g, &params, 0.0)
            .unwrap();
        let idx = g.index([3, 5, 0]);
        let p = g.position(idx);
        let expect = 0.5 * 2.0 * (p[0] * p[0] + 9.0 * p[1] * p[1]);
        assert!((v.value.values()[idx] - expect).abs() < 1e-12);
        assert!((v.gradient.component(1)[idx] - 2.0 * 9.0 * p[1]).abs() < 1e-12);
    }

    #[test]
    fn expression_matches_harmonic() {
        let g = GridSpec::centered(1, 6.0, 16).unwrap();
        let params = PhysicsParams::default();
        let e = PotentialSpec {
            kind: PotentialKind::Expression("0.5 * x^2".into()),
            time: TimeDependence::Static,
        };
        assert!(e.is_static());
        let a = e.sample(&g, &params, 0.0).unwrap();
        let b = PotentialSpec::harmonic(&[1.0])
            .sample(&g, &params, 0.0)
            .unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        let timed = PotentialSpec {
            kind: PotentialKind::Expression("x * t".into()),
            time: TimeDependence::Static,
        };
        assert!(!timed.is_static());
    }

    #[test]
    fn scale_interpolates_knots() {
        let p = PotentialSpec {
            kind: PotentialKind::None,
            time: TimeDependence::Scaled(vec![(0.0, 1.0), (2.0, 3.0)]),
        };
        assert_eq!(p.scale(-1.0), 1.0);
        assert_eq!(p.scale(1.0), 2.0);
        assert_eq!(p.scale(5.0), 3.0);
        assert!(!p.is_static());
    }

    #[test]
    fn rejects_bad_expression_and_grid_mismatch() {
        let g = GridSpec::centered(1, 6.0, 16).unwrap();
        let bad = PotentialSpec {
            kind: PotentialKind::Expression("x + (2".into()),
            time: TimeDependence::Static,
        };
        assert!(bad.validate(&g).is_err());
        let other = GridSpec::centered(1, 6.0, 32).unwrap();
        let tab = PotentialSpec {
            kind: PotentialKind::Tabulated(RealField::zeros(&other)),
            time: TimeDependence::Static,
        };
        assert!(tab.validate(&g).is_err());
    }
}
