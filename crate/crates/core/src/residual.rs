//! Per-slice norms of a pointwise identity violation.

use std::fmt::Write as _;

use crate::grid::{GridSpec, RealField};

/// Points where the density is large enough for velocity, phase and
/// quantum potential to be meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    inside: Vec<bool>,
    /// Floor relative to `max n`.
    pub floor: f64,
}

impl Mask {
    /// `n > floor * max(n)`.
    pub fn from_density(n: &RealField, floor: f64) -> Self {
        let cut = floor * n.max();
        Mask {
            inside: n.values().iter().map(|&x| x > cut).collect(),
            floor,
        }
    }

    pub fn full(grid: &GridSpec) -> Self {
        Mask {
            inside: vec![true; grid.len()],
            floor: 0.0,
        }
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.inside
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.inside.len() as f64
    }

    pub fn zero_outside(&self, f: &mut RealField) {
        for (x, &m) in f.values_mut().iter_mut().zip(&self.inside) {
            if !m {
                *x = 0.0;
            }
        }
    }

    pub fn intersect(&self, other: &Mask) -> Mask {
        Mask {
            inside: self
                .inside
                .iter()
                .zip(&other.inside)
                .map(|(a, b)| *a && *b)
                .collect(),
            floor: self.floor.max(other.floor),
        }
    }

    /// L2 norm of the listed components restricted to the mask.
    pub fn l2(&self, comps: &[&[f64]], cell_volume: f64) -> f64 {
        let mut acc = 0.0;
        for c in comps {
            for (x, &m) in c.iter().zip(&self.inside) {
                if m {
                    acc += x * x;
                }
            }
        }
        (acc * cell_volume).sqrt()
    }

    /// Pointwise maximum of the component magnitude on the mask.
    pub fn linf(&self, comps: &[&[f64]]) -> f64 {
        let mut best: f64 = 0.0;
        for idx in 0..self.inside.len() {
            if self.inside[idx] {
                let m2: f64 = comps.iter().map(|c| c[idx] * c[idx]).sum();
                best = best.max(m2.sqrt());
            }
        }
        best
    }
}

/// Named contribution to a residual with its masked L2 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct TermNorm {
    pub name: String,
    pub l2: f64,
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// Identity being checked (`continuity`, `euler`, `momentum`, `lighthill`, ...).
    pub check: String,
    pub t: f64,
    pub slice: usize,
    /// Scalar residuals have one component, vector residuals `dim`.
    pub field: Vec<RealField>,
    pub mask: Mask,
    pub l2_abs: f64,
    pub linf_abs: f64,
    pub l2_abs_unmasked: f64,
    pub linf_abs_unmasked: f64,
    /// `l2_abs` divided by the largest constituent-term norm.
    pub l2_rel: f64,
    pub terms: Vec<TermNorm>,
    pub convention: Option<String>,
    pub c0: Option<f64>,
    /// Snapshot spacing used by the temporal stencil.
    pub dt: f64,
    /// Smallest grid spacing.
    pub h: f64,
}

impl ResidualReport {
    /// Builds the report and its norms. Relative norm uses the largest term.
    pub fn new(
        check: &str,
        t: f64,
        slice: usize,
        field: Vec<RealField>,
        mask: Mask,
        terms: Vec<TermNorm>,
        dt: f64,
    ) -> Self {
        let grid = field[0].grid().clone();
        let comps: Vec<&[f64]> = field.iter().map(|f| f.values()).collect();
        let dv = grid.cell_volume();
        let full = Mask::full(&grid);
        let l2_abs = mask.l2(&comps, dv);
        let linf_abs = mask.linf(&comps);
        let l2_abs_unmasked = full.l2(&comps, dv);
        let linf_abs_unmasked = full.linf(&comps);
        let reference = terms.iter().map(|t| t.l2).fold(0.0, f64::max);
        let l2_rel = if reference > 0.0 {
            l2_abs / reference
        } else {
            l2_abs
        };
        ResidualReport {
            check: check.to_string(),
            t,
            slice,
            field,
            mask,
            l2_abs,
            linf_abs,
            l2_abs_unmasked,
            linf_abs_unmasked,
            l2_rel,
            terms,
            convention: None,
            c0: None,
            dt,
            h: grid.min_spacing(),
        }
    }

    pub fn with_convention(mut self, name: &str) -> Self {
        self.convention = Some(name.to_string());
        self
    }

    pub fn with_c0(mut self, c0: f64) -> Self {
        self.c0 = Some(c0);
        self
    }

    /// Largest constituent-term norm.
    pub fn reference_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.l2).fold(0.0, f64::max)
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.l2)
    }

    /// `t,L2_abs,Linf_abs,L2_rel,convention,c0` row (no newline). Numbers
    /// use the shortest representation that parses back to the same value.
    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{},{}",
            self.t,
            self.l2_abs,
            self.linf_abs,
            self.l2_rel,
            self.convention.as_deref().unwrap_or("-"),
            self.c0.map_or("-".to_string(), |c| format!("{c}"))
        )
    }
}

pub const RESIDUAL_CSV_HEADER: &str = "t,L2_abs,Linf_abs,L2_rel,convention,c0";

/// Residual time series as CSV text.
pub fn residual_csv(reports: &[ResidualReport]) -> String {
    let mut out = String::from(RESIDUAL_CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Norm of `f` on the mask.
pub(crate) fn term(name: &str, mask: &Mask, comps: &[&[f64]], dv: f64) -> TermNorm {
    TermNorm {
        name: name.to_string(),
        l2: mask.l2(comps, dv),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_floor_and_norms() {
        let g = GridSpec::new(1, &[8.0], &[8], &[0.0]).unwrap();
        let n = RealField::from_vec(&g, vec![1.0, 0.5, 1e-9, 0.0, 2.0, 1.0, 1.0, 1.0]);
        let m = Mask::from_density(&n, 1e-8);
        assert_eq!(m.count(), 6);
        let r = RealField::from_vec(&g, vec![0.0, 0.0, 7.0, 0.0, 3.0, 4.0, 0.0, 0.0]);
        let rep = ResidualReport::new(
            "x",
            0.0,
            2,
            vec![r],
            m,
            vec![TermNorm {
                name: "a".into(),
                l2: 10.0,
            }],
            0.1,
        );
        assert!((rep.l2_abs - 5.0).abs() < 1e-15);
        assert_eq!(rep.linf_abs, 4.0);
        assert_eq!(rep.linf_abs_unmasked, 7.0);
        assert!((rep.l2_rel - 0.5).abs() < 1e-15);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = GridSpec::new(1, &[8.0], &[8], &[0.0]).unwrap();
        let rep = ResidualReport::new(
            "x",
            0.5,
            2,
            vec![RealField::zeros(&g)],
            Mask::full(&g),
            vec![],
            0.1,
        )
        .with_convention("audited")
        .with_c0(2.0);
        let csv = residual_csv(&[rep]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], RESIDUAL_CSV_HEADER);
        assert!(lines[1].ends_with(",audited,2"));
    }
}
