//! Analytic initial states.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::{PhysicsParams, PotentialKind, PotentialSpec};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec};

/// Radial profile of a vortex core.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreProfile {
    /// `(r/w)^|l| exp(-r^2 / 2w^2)`: a harmonic-oscillator vortex eigenstate
    /// when the trap frequency is `hbar / (m w^2)`.
    Gaussian { width: f64 },
    /// `tanh(r/xi)^|l|` inside a super-Gaussian envelope of radius `envelope`.
    Healing { xi: f64, envelope: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// `A exp(i k.x)`; every `k_a` must be commensurate with the box.
    PlaneWave {
        k: Vec<f64>,
        amplitude: f64,
    },
    /// Normalised Gaussian whose density has standard deviation `sigma`
    /// per axis, with momentum `hbar * boost`.
    Gaussian {
        sigma: f64,
        center: Vec<f64>,
        boost: Vec<f64>,
    },
    /// Ground state of the isotropic trap of frequency `omega`.
    HarmonicGround {
        omega: f64,
    },
    /// Black soliton of background density `n_inf` at `position` on the x axis.
    /// The periodic box forces a partner soliton at `position + L/2`.
    DarkSoliton {
        n_inf: f64,
        position: f64,
    },
    /// `A sech(x/w)` with `w = hbar / (A sqrt(m |g|))`, moving at `velocity` along x.
    BrightSoliton {
        amplitude: f64,
        position: f64,
        velocity: f64,
    },
    /// Vortex of integer `charge` along z centred at `center` in the xy plane.
    Vortex {
        charge: i32,
        center: [f64; 2],
        core: CoreProfile,
    },
    Uniform {
        amplitude: f64,
    },
}

fn axis_value(v: &[f64], a: usize) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        _ => v[a],
    }
}

fn check_axes(name: &str, v: &[f64], dim: usize) -> Result<()> {
    if v.len() > 1 && v.len() != dim {
        return Err(Error::InvalidPreset(format!(
            "{name} needs 1 or {dim} components, got {}",
            v.len()
        )));
    }
    Ok(())
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::PlaneWave { .. } => "plane_wave",
            Preset::Gaussian { .. } => "gaussian",
            Preset::HarmonicGround { .. } => "harmonic_ground",
            Preset::DarkSoliton { .. } => "dark_soliton",
            Preset::BrightSoliton { .. } => "bright_soliton",
            Preset::Vortex { .. } => "vortex",
            Preset::Uniform { .. } => "uniform",
        }
    }

    pub fn validate(&self, grid: &GridSpec, params: &PhysicsParams) -> Result<()> {
        let d = grid.dim();
        match self {
            Preset::PlaneWave { k, .. } => {
                check_axes("k", k, d)?;
                for a in 0..d {
                    let m = axis_value(k, a) * grid.extent(a) / TAU;
                    if (m - m.round()).abs() > 1e-9 {
                        return Err(Error::InvalidPreset(format!(
                            "plane wave k = {} is not commensurate with the box on axis {a}",
                            axis_value(k, a)
                        )));
                    }
                }
            }
            Preset::Gaussian {
                sigma,
                center,
                boost,
            } => {
                if !(*sigma > 0.0) {
                    return Err(Error::InvalidPreset(
                        "gaussian width must be positive".into(),
                    ));
                }
                check_axes("center", center, d)?;
                check_axes("boost", boost, d)?;
            }
            Preset::HarmonicGround { omega } => {
                if !(*omega > 0.0) {
                    return Err(Error::InvalidPreset(
                        "trap frequency must be positive".into(),
                    ));
                }
            }
            Preset::DarkSoliton { n_inf, .. } => {
                if !(params.coupling > 0.0) {
                    return Err(Error::InvalidPreset(
                        "dark soliton requires repulsive coupling g > 0".into(),
                    ));
                }
                if !(*n_inf > 0.0) {
                    return Err(Error::InvalidPreset(
                        "background density must be positive".into(),
                    ));
                }
            }
            Preset::BrightSoliton { amplitude, .. } => {
                if !(params.coupling < 0.0) {
                    return Err(Error::InvalidPreset(
                        "bright soliton requires attractive coupling g < 0".into(),
                    ));
                }
                if !(*amplitude > 0.0) {
                    return Err(Error::InvalidPreset(
                        "soliton amplitude must be positive".into(),
                    ));
                }
            }
            Preset::Vortex { core, .. } => {
                if d < 2 {
                    return Err(Error::InvalidPreset(
                        "vortex needs a grid of dimension 2 or 3".into(),
                    ));
                }
                let ok = match core {
                    CoreProfile::Gaussian { width } => *width > 0.0,
                    CoreProfile::Healing { xi, envelope } => *xi > 0.0 && *envelope > 0.0,
                };
                if !ok {
                    return Err(Error::InvalidPreset(
                        "vortex core scales must be positive".into(),
                    ));
                }
            }
            Preset::Uniform { .. } => {}
        }
        Ok(())
    }
}

fn gaussian_axis(grid: &GridSpec, a: usize, x: f64, sigma: f64, center: f64, k: f64) -> Complex64 {
    let d = grid.periodic_offset(a, x, center);
    let amp = (TAU * sigma * sigma).powf(-0.25) * (-d * d / (4.0 * sigma * sigma)).exp();
    Complex64::from_polar(amp, k * d)
}

/// Samples `preset` on `grid`.
pub fn initialize_state(
    grid: &GridSpec,
    preset: &Preset,
    params: &PhysicsParams,
) -> Result<ComplexField> {
    params.validate()?;
    preset.validate(grid, params)?;
    let dim = grid.dim();
    Ok(match preset {
        Preset::PlaneWave { k, amplitude } => ComplexField::from_fn(grid, |p| {
            let phase: f64 = (0..dim).map(|a| axis_value(k, a) * p[a]).sum();
            Complex64::from_polar(*amplitude, phase)
        }),
        Preset::Gaussian {
            sigma,
            center,
            boost,
        } => ComplexField::from_fn(grid, |p| {
            (0..dim)
                .map(|a| {
                    gaussian_axis(
                        grid,
                        a,
                        p[a],
                        *sigma,
                        axis_value(center, a),
                        axis_value(boost, a),
                    )
                })
                .product()
        }),
        Preset::HarmonicGround { omega } => {
            let s = params.mass * omega / params.hbar;
            let norm = (s / PI).powf(0.25 * dim as f64);
            ComplexField::from_fn(grid, |p| {
                let r2: f64 = (0..dim).map(|a| p[a] * p[a]).sum();
                Complex64::new(norm * (-0.5 * s * r2).exp(), 0.0)
            })
        }
        Preset::DarkSoliton { n_inf, position } => {
            let a = 1.0 / params.healing_length(*n_inf);
            let l = grid.extent(0);
            let mid = position + 0.25 * l;
            ComplexField::from_fn(grid, |p| {
                let u = grid.periodic_offset(0, p[0], mid);
                let v = n_inf.sqrt() * (a * (u + 0.25 * l)).tanh() * (a * (u - 0.25 * l)).tanh();
                Complex64::new(v, 0.0)
            })
        }
        Preset::BrightSoliton {
            amplitude,
            position,
            velocity,
        } => {
            let w = params.hbar / (amplitude * (params.mass * params.coupling.abs()).sqrt());
            let kv = params.mass * velocity / params.hbar;
            ComplexField::from_fn(grid, |p| {
                let d = grid.periodic_offset(0, p[0], *position);
                Complex64::from_polar(amplitude / (d / w).cosh(), kv * d)
            })
        }
        Preset::Vortex {
            charge,
            center,
            core,
        } => {
            let l = charge.unsigned_abs() as i32;
            let sgn = if *charge < 0 { -1.0 } else { 1.0 };
            ComplexField::from_fn(grid, |p| {
                let x = grid.periodic_offset(0, p[0], center[0]);
                let y = grid.periodic_offset(1, p[1], center[1]);
                let r2 = x * x + y * y;
                let winding = Complex64::new(x, sgn * y).powi(l);
                match core {
                    CoreProfile::Gaussian { width } => {
                        winding / width.powi(l) * (-r2 / (2.0 * width * width)).exp()
                    }
                    CoreProfile::Healing { xi, envelope } => {
                        let r = r2.sqrt();
                        // tanh(r/xi)/r is even and smooth through r = 0.
                        let ratio = if r < 1e-12 {
                            1.0 / xi
                        } else {
                            (r / xi).tanh() / r
                        };
                        let env = (-(r / envelope).powi(8)).exp();
                        winding * ratio.powi(l) * env
                    }
                }
            })
        }
        Preset::Uniform { amplitude } => {
            ComplexField::from_fn(grid, |_| Complex64::new(*amplitude, 0.0))
        }
    })
}

/// Closed-form state at time `t` for presets whose evolution is known
/// exactly under the given potential and coupling; `None` otherwise.
pub fn closed_form(
    grid: &GridSpec,
    preset: &Preset,
    params: &PhysicsParams,
    potential: &PotentialSpec,
    t: f64,
) -> Result<Option<ComplexField>> {
    let psi0 = initialize_state(grid, preset, params)?;
    let hbar = params.hbar;
    let m = params.mass;
    let g = params.coupling;
    let dim = grid.dim();
    let free = potential.is_none();
    let rotate =
        |psi: ComplexField, energy: f64| psi.scaled(Complex64::from_polar(1.0, -energy * t / hbar));
    Ok(match preset {
        Preset::Uniform { amplitude } if free => Some(rotate(psi0, g * amplitude * amplitude)),
        Preset::PlaneWave { k, amplitude } if free => {
            let k2: f64 = (0..dim).map(|a| axis_value(k, a).powi(2)).sum();
            Some(rotate(
                psi0,
                hbar * hbar * k2 / (2.0 * m) + g * amplitude * amplitude,
            ))
        }
        Preset::Gaussian {
            sigma,
            center,
            boost,
        } if free && g == 0.0 => {
            let tau = hbar * t / (2.0 * m * sigma * sigma);
            let field = ComplexField::from_fn(grid, |p| {
                (0..dim)
                    .map(|a| {
                        let k = axis_value(boost, a);
                        let c = axis_value(center, a) + hbar * k * t / m;
                        let d = grid.periodic_offset(a, p[a], c);
                        let denom = Complex64::new(1.0, tau);
                        let pref = (TAU * sigma * sigma).powf(-0.25) / denom.sqrt();
                        let gauss = (-(d * d) / (4.0 * sigma * sigma) / denom).exp();
                        let phase = k * d + 0.5 * hbar * k * k * t / m;
                        pref * gauss * Complex64::from_polar(1.0, phase)
                    })
                    .product()
            });
            Some(field)
        }
        Preset::HarmonicGround { omega } if g == 0.0 => match &potential.kind {
            PotentialKind::Harmonic { omega: w }
                if potential.is_static() && w.iter().all(|x| (x - omega).abs() < 1e-14) =>
            {
                Some(rotate(psi0, 0.5 * dim as f64 * hbar * omega))
            }
            _ => None,
        },
        Preset::BrightSoliton {
            amplitude,
            position,
            velocity,
        } if free => {
            let w = hbar / (amplitude * (m * g.abs()).sqrt());
            let mu = -0.5 * g.abs() * amplitude * amplitude;
            let kv = m * velocity / hbar;
            let field = ComplexField::from_fn(grid, |p| {
                let d = grid.periodic_offset(0, p[0], position + velocity * t);
                let phase = kv * d + (0.5 * m * velocity * velocity - mu) * t / hbar;
                Complex64::from_polar(amplitude / (d / w).cosh(), phase)
            });
            Some(field)
        }
        Preset::Vortex {
            charge,
            core: CoreProfile::Gaussian { width },
            ..
        } if g == 0.0 && dim == 2 => match &potential.kind {
            PotentialKind::Harmonic { omega: w }
                if potential.is_static()
                    && w.iter()
                        .all(|x| (x - hbar / (m * width * width)).abs() < 1e-12) =>
            {
                let omega = hbar / (m * width * width);
                Some(rotate(
                    psi0,
                    hbar * omega * (charge.unsigned_abs() as f64 + 1.0),
                ))
            }
            _ => None,
        },
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_amplitude_two_has_density_four() {
        let g = GridSpec::centered(1, 10.0, 16).unwrap();
        let psi = initialize_state(
            &g,
            &Preset::Uniform { amplitude: 2.0 },
            &PhysicsParams::default(),
        )
        .unwrap();
        assert!(psi
            .modulus_squared()
            .values()
            .iter()
            .all(|n| (n - 4.0).abs() < 1e-15));
    }

    #[test]
    fn plane_wave_has_unit_density() {
        let g = GridSpec::new(1, &[TAU], &[64], &[0.0]).unwrap();
        let pw = Preset::PlaneWave {
            k: vec![3.0],
            amplitude: 1.0,
        };
        let psi = initialize_state(&g, &pw, &PhysicsParams::default()).unwrap();
        assert!(psi
            .modulus_squared()
            .values()
            .iter()
            .all(|n| (n - 1.0).abs() < 1e-14));
        let x = g.coord(0, 5);
        assert!((psi.values()[5] - Complex64::from_polar(1.0, 3.0 * x)).norm() < 1e-14);
    }

    #[test]
    fn incommensurate_plane_wave_rejected() {
        let g = GridSpec::new(1, &[TAU], &[64], &[0.0]).unwrap();
        let pw = Preset::PlaneWave {
            k: vec![2.5],
            amplitude: 1.0,
        };
        assert!(initialize_state(&g, &pw, &PhysicsParams::default()).is_err());
    }

    #[test]
    fn harmonic_ground_width_and_norm() {
        let g = GridSpec::centered(1, 20.0, 256).unwrap();
        let omega = 2.0;
        let psi = initialize_state(
            &g,
            &Preset::HarmonicGround { omega },
            &PhysicsParams::default(),
        )
        .unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        // sigma^2 = hbar / (m omega) for psi ~ exp(-x^2 / 2 sigma^2)
        let n = psi.modulus_squared();
        let var: f64 = (0..g.len())
            .map(|i| g.coord(0, i).powi(2) * n.values()[i])
            .sum::<f64>()
            * g.spacing(0);
        assert!((var - 0.5 / omega).abs() < 1e-12);
    }

    #[test]
    fn soliton_coupling_sign_checks() {
        let g = GridSpec::centered(1, 20.0, 64).unwrap();
        let dark = Preset::DarkSoliton {
            n_inf: 1.0,
            position: 0.0,
        };
        let bright = Preset::BrightSoliton {
            amplitude: 1.0,
            position: 0.0,
            velocity: 0.0,
        };
        assert!(
            initialize_state(&g, &dark, &PhysicsParams::default().with_coupling(-1.0)).is_err()
        );
        assert!(initialize_state(&g, &dark, &PhysicsParams::default().with_coupling(1.0)).is_ok());
        assert!(
            initialize_state(&g, &bright, &PhysicsParams::default().with_coupling(1.0)).is_err()
        );
        assert!(
            initialize_state(&g, &bright, &PhysicsParams::default().with_coupling(-1.0)).is_ok()
        );
    }

    #[test]
    fn vortex_needs_two_dimensions() {
        let g = GridSpec::centered(1, 20.0, 64).unwrap();
        let v = Preset::Vortex {
            charge: 1,
            center: [0.0, 0.0],
            core: CoreProfile::Gaussian { width: 1.0 },
        };
        assert!(matches!(
            initialize_state(&g, &v, &PhysicsParams::default()),
            Err(Error::InvalidPreset(_))
        ));
    }

    #[test]
    fn dark_soliton_nodes_and_background() {
        let g = GridSpec::centered(1, 32.0, 256).unwrap();
        let params = PhysicsParams::default().with_coupling(4.0);
        let psi = initialize_state(
            &g,
            &Preset::DarkSoliton {
                n_inf: 1.0,
                position: -8.0,
            },
            &params,
        )
        .unwrap();
        let n = psi.modulus_squared();
        let at = |x: f64| n.values()[((x + 16.0) / g.spacing(0)).round() as usize];
        assert!(at(-8.0) < 1e-20);
        assert!(at(8.0) < 1e-20);
        assert!((at(0.0) - 1.0).abs() < 1e-8);
        assert!((at(-16.0) - 1.0).abs() < 1e-8);
    }
}
