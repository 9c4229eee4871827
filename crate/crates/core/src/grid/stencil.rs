//! Fourth-order central differences in time over stored snapshot stacks.

use super::RealField;
use crate::error::{Error, Result};

/// Temporal derivative order of a stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeOrder {
    First,
    Second,
}

const FIRST: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const SECOND: [f64; 5] = [
    -1.0 / 12.0,
    16.0 / 12.0,
    -30.0 / 12.0,
    16.0 / 12.0,
    -1.0 / 12.0,
];

/// Relative tolerance on snapshot spacing uniformity.
const SPACING_TOL: f64 = 1e-9;

fn weights(order: TimeOrder, dt: f64) -> [f64; 5] {
    match order {
        TimeOrder::First => FIRST.map(|w| w / dt),
        TimeOrder::Second => SECOND.map(|w| w / (dt * dt)),
    }
}

/// Checks uniform spacing of `times[center-2..=center+2]` and returns the step.
pub(crate) fn uniform_step(times: &[f64], center: usize) -> Result<f64> {
    if center < 2 || center + 2 >= times.len() {
        return Err(Error::InsufficientSnapshots {
            needed: 5,
            available: times.len(),
            slice: center,
        });
    }
    let dt = times[center + 1] - times[center];
    if !(dt > 0.0) {
        return Err(Error::NonUniformSpacing { index: center });
    }
    for k in center - 2..center + 2 {
        let step = times[k + 1] - times[k];
        if (step - dt).abs() > SPACING_TOL * dt.abs().max(1.0) {
            return Err(Error::NonUniformSpacing { index: k });
        }
    }
    Ok(dt)
}

/// Derivative of the requested order at the central slice of `stack`.
///
/// Uses the five slices around `stack.len() / 2`; exact for polynomials of
/// degree four or less.
pub fn time_stencil(times: &[f64], stack: &[RealField], order: TimeOrder) -> Result<RealField> {
    if stack.len() < 5 || times.len() != stack.len() {
        return Err(Error::InsufficientSnapshots {
            needed: 5,
            available: stack.len().min(times.len()),
            slice: stack.len() / 2,
        });
    }
    time_stencil_at(times, stack, stack.len() / 2, order)
}

/// Like [`time_stencil`] but centred on an arbitrary slice index.
pub fn time_stencil_at(
    times: &[f64],
    stack: &[RealField],
    center: usize,
    order: TimeOrder,
) -> Result<RealField> {
    let dt = uniform_step(times, center)?;
    let w = weights(order, dt);
    let mut out = RealField::zeros(stack[center].grid());
    for (k, wk) in w.iter().enumerate() {
        if *wk != 0.0 {
            out.axpy(*wk, &stack[center + k - 2]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn samples(f: impl Fn(f64) -> f64, t0: f64, dt: f64) -> (Vec<f64>, Vec<RealField>) {
        let g = GridSpec::new(1, &[1.0], &[8], &[0.0]).unwrap();
        let times: Vec<f64> = (0..5).map(|k| t0 + (k as f64 - 2.0) * dt).collect();
        let stack = times
            .iter()
            .map(|&t| RealField::constant(&g, f(t)))
            .collect();
        (times, stack)
    }

    #[test]
    fn quadratic_second_derivative_is_exact() {
        let (t, s) = samples(|t| t * t, 0.7, 0.1);
        let d2 = time_stencil(&t, &s, TimeOrder::Second).unwrap();
        assert!((d2.values()[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn quartic_first_derivative_is_exact() {
        let (t, s) = samples(|t| t.powi(4) - t, 0.5, 0.25);
        let d1 = time_stencil(&t, &s, TimeOrder::First).unwrap();
        assert!((d1.values()[0] - (4.0 * 0.125 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn constant_has_zero_rate() {
        let (t, s) = samples(|_| 4.2, 0.0, 0.3);
        assert!(time_stencil(&t, &s, TimeOrder::First).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn sine_second_derivative_within_taylor_bound() {
        let omega = 3.0;
        let dt = 0.01 / omega;
        let t0 = 0.4;
        let (t, s) = samples(|t| (omega * t).sin(), t0, dt);
        let d2 = time_stencil(&t, &s, TimeOrder::Second).unwrap().values()[0];
        let exact = -omega * omega * (omega * t0).sin();
        assert!(((d2 - exact) / exact).abs() < 1e-8);
    }

    #[test]
    fn rejects_short_and_uneven_stacks() {
        let (t, s) = samples(|t| t, 0.0, 0.1);
        assert!(matches!(
            time_stencil(&t[..4], &s[..4], TimeOrder::First),
            Err(Error::InsufficientSnapshots { .. })
        ));
        let mut bad = t.clone();
        bad[4] += 0.05;
        assert!(matches!(
            time_stencil(&bad, &s, TimeOrder::Second),
            Err(Error::NonUniformSpacing { .. })
        ));
    }
}
