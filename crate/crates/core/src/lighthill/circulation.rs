//! Line integral of the velocity around closed loops.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gpe::PhysicsParams;
use crate::grid::{ComplexField, GridSpec};
use crate::madelung::{density, velocity_masked, DEFAULT_MASK_FLOOR};
use crate::residual::Mask;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirculationReport {
    /// `(hbar/m)` times the continuous phase increment of the interpolated
    /// wavefunction along the loop.
    pub raw: f64,
    /// `2 pi hbar / m`
    pub quantum: f64,
    pub winding: i64,
    /// `raw - winding * quantum`
    pub deviation: f64,
    /// Midpoint quadrature of the multilinearly interpolated velocity field.
    pub velocity_quadrature: f64,
}

/// Lower cell corner and fractional offsets of `p` on the periodic grid.
fn locate(grid: &GridSpec, p: &[f64; 3]) -> ([usize; 3], [f64; 3]) {
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..grid.dim() {
        let s = (p[a] - grid.origin(a)) / grid.spacing(a);
        let f = s.floor();
        let n = grid.points(a) as i64;
        base[a] = (f as i64).rem_euclid(n) as usize;
        frac[a] = s - f;
    }
    (base, frac)
}

fn shifted(grid: &GridSpec, base: [usize; 3], off: [i64; 3]) -> usize {
    let mut ix = [0usize; 3];
    for a in 0..3 {
        if a < grid.dim() {
            ix[a] = (base[a] as i64 + off[a]).rem_euclid(grid.points(a) as i64) as usize;
        }
    }
    grid.index(ix)
}

/// Multilinear interpolation of per-point values `f`.
fn interpolate<T>(grid: &GridSpec, p: &[f64; 3], f: impl Fn(usize) -> T) -> T
where
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
{
    let (base, frac) = locate(grid, p);
    let d = grid.dim();
    let mut acc = T::default();
    for corner in 0..(1usize << d) {
        let mut off = [0i64; 3];
        let mut w = 1.0;
        for a in 0..d {
            if corner >> a & 1 == 1 {
                off[a] = 1;
                w *= frac[a];
            } else {
                w *= 1.0 - frac[a];
            }
        }
        acc = acc + f(shifted(grid, base, off)) * w;
    }
    acc
}

/// True when the interpolation cell of `p` and a one-cell margin lie in the mask.
fn cell_clear(grid: &GridSpec, mask: &Mask, p: &[f64; 3]) -> bool {
    let (base, _) = locate(grid, p);
    let d = grid.dim();
    let span = 4usize.pow(d as u32);
    (0..span).all(|code| {
        let mut off = [0i64; 3];
        let mut c = code;
        for o in off.iter_mut().take(d) {
            *o = (c % 4) as i64 - 1;
            c /= 4;
        }
        mask.contains(shifted(grid, base, off))
    })
}

fn wrap_angle(x: f64) -> f64 {
    x - TAU * ((x + PI) / TAU).floor()
}

/// Circulation of `psi` around the closed polyline `loop_pts` (the last vertex
/// connects back to the first). Segments are sampled at a quarter of the grid
/// spacing.
pub fn circulation(
    psi: &ComplexField,
    loop_pts: &[[f64; 3]],
    params: &PhysicsParams,
) -> Result<CirculationReport> {
    let grid = psi.grid();
    if grid.dim() < 2 {
        return Err(Error::InvalidArgument(
            "circulation needs a grid of dimension 2 or 3".into(),
        ));
    }
    if loop_pts.len() < 3 {
        return Err(Error::InvalidArgument(
            "a loop needs at least three vertices".into(),
        ));
    }
    let mask = Mask::from_density(&density(psi), DEFAULT_MASK_FLOOR);
    let (vel, _) = velocity_masked(psi, params, DEFAULT_MASK_FLOOR);
    let step = 0.25 * grid.min_spacing();
    let vals = psi.values();
    let psi_at = |p: &[f64; 3]| interpolate(grid, p, |i| Wrapper(vals[i])).0;
    let mut phase = 0.0;
    let mut quad = 0.0;
    let m = loop_pts.len();
    for seg in 0..m {
        let a = loop_pts[seg];
        let b = loop_pts[(seg + 1) % m];
        let delta = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let len = (delta[0].powi(2) + delta[1].powi(2) + delta[2].powi(2)).sqrt();
        if len == 0.0 {
            continue;
        }
        let pieces = (len / step).ceil().max(1.0) as usize;
        let point = |s: f64| {
            [
                a[0] + s * delta[0],
                a[1] + s * delta[1],
                a[2] + s * delta[2],
            ]
        };
        let mut prev = psi_at(&a);
        for k in 0..pieces {
            let p1 = point((k + 1) as f64 / pieces as f64);
            let mid = point((k as f64 + 0.5) / pieces as f64);
            if !cell_clear(grid, &mask, &p1) || !cell_clear(grid, &mask, &mid) {
                return Err(Error::LoopMasked { segment: seg });
            }
            let next = psi_at(&p1);
            phase += wrap_angle(next.arg() - prev.arg());
            prev = next;
            for ax in 0..grid.dim() {
                let v = interpolate(grid, &mid, |i| vel.component(ax)[i]);
                quad += v * delta[ax] / pieces as f64;
            }
        }
    }
    let raw = params.hbar / params.mass * phase;
    let quantum = params.circulation_quantum();
    let winding = (raw / quantum).round() as i64;
    Ok(CirculationReport {
        raw,
        quantum,
        winding,
        deviation: raw - winding as f64 * quantum,
        velocity_quadrature: quad,
    })
}

/// Complex value usable with the generic interpolator.
#[derive(Clone, Copy, Default)]
struct Wrapper(Complex64);

impl std::ops::Add for Wrapper {
    type Output = Wrapper;
    fn add(self, o: Wrapper) -> Wrapper {
        Wrapper(self.0 + o.0)
    }
}

impl std::ops::Mul<f64> for Wrapper {
    type Output = Wrapper;
    fn mul(self, s: f64) -> Wrapper {
        Wrapper(self.0 * s)
    }
}

/// Square loop of half-width `r` around `(cx, cy)` in the plane `z`.
pub fn square_loop(cx: f64, cy: f64, r: f64, z: f64) -> Vec<[f64; 3]> {
    vec![
        [cx - r, cy - r, z],
        [cx + r, cy - r, z],
        [cx + r, cy + r, z],
        [cx - r, cy + r, z],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpe::{initialize_state, CoreProfile, Preset};

    fn p() -> PhysicsParams {
        PhysicsParams::default()
    }

    #[test]
    fn vortex_charges_quantise() {
        let g = GridSpec::centered(2, 16.0, 64).unwrap();
        for charge in [-1, 1, 2] {
            let pre = Preset::Vortex {
                charge,
                center: [0.1, 0.05],
                core: CoreProfile::Gaussian { width: 1.5 },
            };
            let psi = initialize_state(&g, &pre, &p()).unwrap();
            let c = circulation(&psi, &square_loop(0.0, 0.0, 2.0, 0.0), &p()).unwrap();
            assert_eq!(c.winding, charge as i64);
            assert!(c.deviation.abs() < 1e-9 * c.quantum);
            assert!((c.velocity_quadrature - c.raw).abs() < 0.05 * c.quantum);
        }
    }

    #[test]
    fn loop_missing_the_core_has_no_circulation() {
        let g = GridSpec::centered(2, 16.0, 64).unwrap();
        let pre = Preset::Vortex {
            charge: 1,
            center: [0.0, 0.0],
            core: CoreProfile::Gaussian { width: 1.5 },
        };
        let psi = initialize_state(&g, &pre, &p()).unwrap();
        let c = circulation(&psi, &square_loop(2.5, 2.5, 1.0, 0.0), &p()).unwrap();
        assert!(c.raw.abs() < 1e-10);
    }

    #[test]
    fn loop_through_masked_region_rejected() {
        let g = GridSpec::centered(2, 16.0, 64).unwrap();
        let pre = Preset::Gaussian {
            sigma: 0.5,
            center: vec![0.0],
            boost: vec![0.0],
        };
        let psi = initialize_state(&g, &pre, &p()).unwrap();
        assert!(matches!(
            circulation(&psi, &square_loop(0.0, 0.0, 7.0, 0.0), &p()),
            Err(Error::LoopMasked { .. })
        ));
    }
}
