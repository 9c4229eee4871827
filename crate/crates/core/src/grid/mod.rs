//! Periodic Cartesian grids in one to three dimensions and the sampled field
//! types that live on them.
//!
//! Samples are stored row-major with axis order x, y, z (x slowest). Unused
//! axes of a lower-dimensional grid have a single point.

mod spectral;
mod stencil;

pub use spectral::{
    divergence, double_divergence, fd_laplacian, gradient_vector, spectral_gradient,
    spectral_laplacian, spectral_mixed, spectral_norm, tensor_divergence, Spectral,
};
pub use stencil::{time_stencil, time_stencil_at, TimeOrder};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Shape, extent and origin of a periodic box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    dim: usize,
    extents: [f64; 3],
    points: [usize; 3],
    origin: [f64; 3],
}

impl GridSpec {
    /// Validates and builds a grid. Point counts must be even powers of two
    /// no smaller than 8 and extents strictly positive.
    pub fn new(dim: usize, extents: &[f64], points: &[usize], origin: &[f64]) -> Result<Self> {
        let mut problems = Vec::new();
        if !(1..=3).contains(&dim) {
            problems.push(format!("dimension must be 1, 2 or 3 (got {dim})"));
        }
        for (name, len) in [
            ("extents", extents.len()),
            ("points", points.len()),
            ("origin", origin.len()),
        ] {
            if len != dim {
                problems.push(format!("{name} has {len} entries, expected {dim}"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::InvalidGrid(problems));
        }
        for (a, &n) in points.iter().enumerate() {
            if n < 8 || n % 2 != 0 {
                problems.push(format!(
                    "axis {a}: point count {n} must be even and at least 8"
                ));
            } else if !n.is_power_of_two() {
                problems.push(format!("axis {a}: point count {n} must be a power of two"));
            }
        }
        for (a, &l) in extents.iter().enumerate() {
            if !(l > 0.0) || !l.is_finite() {
                problems.push(format!("axis {a}: extent {l} must be positive and finite"));
            }
        }
        for (a, &o) in origin.iter().enumerate() {
            if !o.is_finite() {
                problems.push(format!("axis {a}: origin {o} is not finite"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::InvalidGrid(problems));
        }
        let mut spec = GridSpec {
            dim,
            extents: [1.0; 3],
            points: [1; 3],
            origin: [0.0; 3],
        };
        spec.extents[..dim].copy_from_slice(extents);
        spec.points[..dim].copy_from_slice(points);
        spec.origin[..dim].copy_from_slice(origin);
        Ok(spec)
    }

    /// Cube (or square, or interval) centred on the origin.
    pub fn centered(dim: usize, extent: f64, points: usize) -> Result<Self> {
        Self::new(
            dim,
            &vec![extent; dim],
            &vec![points; dim],
            &vec![-0.5 * extent; dim],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self, axis: usize) -> usize {
        self.points[axis]
    }

    /// Point counts for all three axes (1 for unused axes).
    pub fn shape(&self) -> [usize; 3] {
        self.points
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extents[axis]
    }

    pub fn origin(&self, axis: usize) -> f64 {
        self.origin[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / self.points[axis] as f64
    }

    /// Smallest spacing over the active axes.
    pub fn min_spacing(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.spacing(a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element used by every quadrature on this grid.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Coordinate of sample `k` on `axis`.
    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        self.origin[axis] + k as f64 * self.spacing(axis)
    }

    /// All coordinates along one axis.
    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.points[axis])
            .map(|k| self.coord(axis, k))
            .collect()
    }

    pub fn index(&self, ix: [usize; 3]) -> usize {
        (ix[0] * self.points[1] + ix[1]) * self.points[2] + ix[2]
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let iz = idx % self.points[2];
        let rest = idx / self.points[2];
        [rest / self.points[1], rest % self.points[1], iz]
    }

    /// Physical position of flat sample `idx`; unused axes read 0.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let ix = self.unravel(idx);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.coord(a, ix[a]);
        }
        p
    }

    /// Wrapped displacement `x - c` folded into `[-L/2, L/2)` on each axis.
    pub fn periodic_offset(&self, axis: usize, x: f64, c: f64) -> f64 {
        let l = self.extents[axis];
        let d = x - c;
        d - l * ((d + 0.5 * l) / l).floor()
    }

    /// Angular wavenumbers in FFT order: 0, 1, .., N/2-1, -N/2, .., -1 (times 2pi/L).
    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        let n = self.points[axis];
        let dk = std::f64::consts::TAU / self.extents[axis];
        (0..n)
            .map(|k| {
                let m = if k < n / 2 {
                    k as f64
                } else {
                    k as f64 - n as f64
                };
                m * dk
            })
            .collect()
    }

    /// Largest resolved wavenumber magnitude summed in quadrature over axes.
    pub fn k_max(&self) -> f64 {
        (0..self.dim)
            .map(|a| (std::f64::consts::PI / self.spacing(a)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn same_shape(&self, other: &GridSpec) -> bool {
        self.dim == other.dim && self.points == other.points && self.extents == other.extents
    }
}

/// Index into the packed upper triangle of a symmetric `d x d` tensor.
pub fn sym_index(i: usize, j: usize, d: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * d + j - i * (i + 1) / 2
}

/// Number of stored components of a symmetric tensor in `d` dimensions.
pub fn sym_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Real scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    data: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: &GridSpec) -> Self {
        RealField {
            grid: grid.clone(),
            data: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &GridSpec, value: f64) -> Self {
        RealField {
            grid: grid.clone(),
            data: vec![value; grid.len()],
        }
    }

    pub fn from_vec(grid: &GridSpec, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.len(), "sample count does not match grid");
        RealField {
            grid: grid.clone(),
            data,
        }
    }

    /// Samples `f(position)` at every grid point.
    pub fn from_fn(grid: &GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        RealField {
            grid: grid.clone(),
            data,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        RealField {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert!(self.grid.same_shape(&other.grid));
        RealField {
            grid: self.grid.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|x| s * x)
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &RealField) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Continuous L2 norm, sqrt(sum f^2 dV).
    pub fn l2(&self) -> f64 {
        (self.data.iter().map(|x| x * x).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// Integral over the box.
    pub fn integral(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn dot(&self, other: &RealField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Complex scalar field (the sampled wavefunction).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: &GridSpec) -> Self {
        ComplexField {
            grid: grid.clone(),
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_vec(grid: &GridSpec, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), grid.len(), "sample count does not match grid");
        ComplexField {
            grid: grid.clone(),
            data,
        }
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn([f64; 3]) -> Complex64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        ComplexField {
            grid: grid.clone(),
            data,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn scaled(&self, w: Complex64) -> Self {
        ComplexField {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&z| w * z).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        ComplexField {
            grid: self.grid.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn add(&self, other: &ComplexField) -> Self {
        ComplexField {
            grid: self.grid.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ComplexField) -> Self {
        ComplexField {
            grid: self.grid.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Pointwise |psi|^2.
    pub fn modulus_squared(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            data: self.data.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    /// Continuous L2 norm squared, the condensate norm.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// One real component per active axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: &GridSpec) -> Self {
        VectorField {
            grid: grid.clone(),
            comps: vec![vec![0.0; grid.len()]; grid.dim()],
        }
    }

    pub fn from_components(grid: &GridSpec, comps: Vec<RealField>) -> Self {
        assert_eq!(
            comps.len(),
            grid.dim(),
            "component count must match dimension"
        );
        VectorField {
            grid: grid.clone(),
            comps: comps.into_iter().map(|c| c.data).collect(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.comps[axis]
    }

    pub fn component_field(&self, axis: usize) -> RealField {
        RealField {
            grid: self.grid.clone(),
            data: self.comps[axis].clone(),
        }
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> RealField {
        let data = (0..self.grid.len())
            .map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect();
        RealField {
            grid: self.grid.clone(),
            data,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        VectorField {
            grid: self.grid.clone(),
            comps: self
                .comps
                .iter()
                .map(|c| c.iter().map(|x| s * x).collect())
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|x| x.is_finite()))
    }
}

/// Symmetric rank-2 field storing the upper triangle, order (xx, xy, xz, yy, yz, zz).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    grid: GridSpec,
    comps: Vec<Vec<f64>>,
}

impl SymTensorField {
    pub fn zeros(grid: &GridSpec) -> Self {
        SymTensorField {
            grid: grid.clone(),
            comps: vec![vec![0.0; grid.len()]; sym_len(grid.dim())],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Component `(i, j)`; `(j, i)` refers to the same storage.
    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        &self.comps[sym_index(i, j, self.grid.dim())]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let k = sym_index(i, j, self.grid.dim());
        &mut self.comps[k]
    }

    pub fn component_field(&self, i: usize, j: usize) -> RealField {
        RealField {
            grid: self.grid.clone(),
            data: self.get(i, j).to_vec(),
        }
    }

    pub fn set(&mut self, i: usize, j: usize, f: &RealField) {
        self.get_mut(i, j).copy_from_slice(f.values());
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &SymTensorField) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    /// Adds `s * f` to every diagonal component.
    pub fn add_isotropic(&mut self, s: f64, f: &RealField) {
        for a in 0..self.grid.dim() {
            for (x, y) in self.get_mut(a, a).iter_mut().zip(f.values()) {
                *x += s * y;
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        SymTensorField {
            grid: self.grid.clone(),
            comps: self
                .comps
                .iter()
                .map(|c| c.iter().map(|x| s * x).collect())
                .collect(),
        }
    }

    pub fn trace(&self) -> RealField {
        let mut out = RealField::zeros(&self.grid);
        for a in 0..self.grid.dim() {
            for (o, x) in out.data.iter_mut().zip(self.get(a, a)) {
                *o += x;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|x| x.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing_is_extent_over_points() {
        let g = GridSpec::new(1, &[std::f64::consts::TAU], &[64], &[0.0]).unwrap();
        assert_eq!(g.spacing(0), std::f64::consts::TAU / 64.0);
        assert_eq!(g.coord(0, 3), 3.0 * std::f64::consts::TAU / 64.0);
    }

    #[test]
    fn valid_3d_grid() {
        let g = GridSpec::new(3, &[10.0; 3], &[32; 3], &[-5.0; 3]).unwrap();
        assert_eq!(g.len(), 32 * 32 * 32);
        assert_eq!(g.coord(2, 0), -5.0);
    }

    #[test]
    fn rejects_odd_and_small_point_counts() {
        assert!(matches!(
            GridSpec::new(1, &[1.0], &[7], &[0.0]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(GridSpec::new(1, &[1.0], &[4], &[0.0]).is_err());
        assert!(GridSpec::new(1, &[1.0], &[24], &[0.0]).is_err());
    }

    #[test]
    fn rejects_non_positive_extent() {
        assert!(GridSpec::new(2, &[1.0, 0.0], &[8, 8], &[0.0, 0.0]).is_err());
        assert!(GridSpec::new(1, &[-2.0], &[8], &[0.0]).is_err());
    }

    #[test]
    fn sym_index_packs_upper_triangle() {
        let d3: Vec<usize> = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
            .iter()
            .map(|&(i, j)| sym_index(i, j, 3))
            .collect();
        assert_eq!(d3, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(sym_index(2, 0, 3), 2);
        let d2: Vec<usize> = [(0, 0), (0, 1), (1, 1)]
            .iter()
            .map(|&(i, j)| sym_index(i, j, 2))
            .collect();
        assert_eq!(d2, vec![0, 1, 2]);
        assert_eq!(sym_index(0, 0, 1), 0);
    }

    #[test]
    fn unravel_inverts_index() {
        let g = GridSpec::new(3, &[1.0; 3], &[8, 16, 32], &[0.0; 3]).unwrap();
        for idx in [0, 1, 31, 32, 511, 4095] {
            assert_eq!(g.index(g.unravel(idx)), idx);
        }
    }

    #[test]
    fn periodic_offset_wraps_into_half_open_box() {
        let g = GridSpec::centered(1, 10.0, 16).unwrap();
        assert!((g.periodic_offset(0, 4.0, -4.0) - (-2.0)).abs() < 1e-14);
        assert!((g.periodic_offset(0, 1.0, 0.5) - 0.5).abs() < 1e-14);
    }
}
