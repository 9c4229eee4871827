//! Fourier pseudospectral differential operators on periodic grids.
//!
//! Every derivative is a multiplier `prod_a (i k_a)^p_a` in transform space.
//! Axes carrying an odd power have their Nyquist mode zeroed; even powers keep
//! it, so `d^2/dx_a^2` and the Laplacian share one discrete operator.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{ComplexField, GridSpec, RealField, SymTensorField, VectorField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Cached transform plans and wavenumbers for one grid shape.
pub struct Spectral {
    grid: GridSpec,
    k: [Vec<f64>; 3],
    nyquist: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

thread_local! {
    static CACHE: RefCell<HashMap<Vec<u64>, Rc<Spectral>>> = RefCell::new(HashMap::new());
}

impl Spectral {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let plan = |p: &mut FftPlanner<f64>, n: usize, fwd: bool| {
            if fwd {
                p.plan_fft_forward(n)
            } else {
                p.plan_fft_inverse(n)
            }
        };
        let shape = grid.shape();
        let forward = [0, 1, 2].map(|a| plan(&mut planner, shape[a], true));
        let inverse = [0, 1, 2].map(|a| plan(&mut planner, shape[a], false));
        let k = [0, 1, 2].map(|a| {
            if a < grid.dim() {
                grid.wavenumbers(a)
            } else {
                vec![0.0]
            }
        });
        let nyquist = [0, 1, 2].map(|a| {
            if a < grid.dim() {
                shape[a] / 2
            } else {
                usize::MAX
            }
        });
        Spectral {
            grid: grid.clone(),
            k,
            nyquist,
            forward,
            inverse,
        }
    }

    /// Shared per-thread instance for `grid`.
    pub fn cached(grid: &GridSpec) -> Rc<Spectral> {
        let mut key: Vec<u64> = grid.shape().iter().map(|&n| n as u64).collect();
        key.extend((0..3).map(|a| grid.extent(a).to_bits()));
        CACHE.with(|c| {
            c.borrow_mut()
                .entry(key)
                .or_insert_with(|| Rc::new(Spectral::new(grid)))
                .clone()
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.k[axis]
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let shape = self.grid.shape();
        let strides = [shape[1] * shape[2], shape[2], 1];
        for a in 0..self.grid.dim() {
            let n = shape[a];
            let plan = if inverse {
                &self.inverse[a]
            } else {
                &self.forward[a]
            };
            let mut scratch = vec![ZERO; plan.get_inplace_scratch_len()];
            if strides[a] == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let stride = strides[a];
            let block = n * stride;
            let mut line = vec![ZERO; n];
            for base in (0..data.len()).step_by(block) {
                for off in 0..stride {
                    for (m, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + off + m * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (m, v) in line.iter().enumerate() {
                        data[base + off + m * stride] = *v;
                    }
                }
            }
        }
        if inverse {
            let s = 1.0 / data.len() as f64;
            for z in data.iter_mut() {
                *z *= s;
            }
        }
    }

    /// Unnormalised forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Inverse transform in place, normalised so `inverse(forward(f)) == f`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    pub fn forward_real(&self, f: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut data);
        data
    }

    pub fn inverse_real(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inverse(&mut spec);
        spec.into_iter().map(|z| z.re).collect()
    }

    /// Transform-space multiplier of `prod_a (i k_a)^orders[a]` at mode `m`.
    pub fn derivative_multiplier(&self, m: [usize; 3], orders: [u32; 3]) -> Complex64 {
        let mut out = Complex64::new(1.0, 0.0);
        for a in 0..self.grid.dim() {
            let p = orders[a];
            if p == 0 {
                continue;
            }
            if p % 2 == 1 && m[a] == self.nyquist[a] {
                return ZERO;
            }
            out *= Complex64::new(0.0, self.k[a][m[a]]).powu(p);
        }
        out
    }

    /// Squared wavenumber magnitude of mode `m`, Nyquist included.
    pub fn k_squared(&self, m: [usize; 3]) -> f64 {
        (0..self.grid.dim()).map(|a| self.k[a][m[a]].powi(2)).sum()
    }

    /// Multiplies a spectrum pointwise by `f(mode)`.
    pub fn apply(&self, spec: &mut [Complex64], f: impl Fn([usize; 3]) -> Complex64) {
        for (idx, z) in spec.iter_mut().enumerate() {
            *z *= f(self.grid.unravel(idx));
        }
    }

    /// Applies `prod_a d^orders[a]/dx_a^orders[a]` to a spectrum.
    pub fn differentiate(&self, spec: &mut [Complex64], orders: [u32; 3]) {
        self.apply(spec, |m| self.derivative_multiplier(m, orders));
    }

    fn orders_for(axes: &[usize]) -> [u32; 3] {
        let mut orders = [0u32; 3];
        for &a in axes {
            orders[a] += 1;
        }
        orders
    }

    /// Spectrum of the Laplacian, `-|k|^2`.
    pub fn laplacian_in_place(&self, spec: &mut [Complex64]) {
        self.apply(spec, |m| Complex64::new(-self.k_squared(m), 0.0));
    }

    /// Derivative of a real field along the listed axes (repeats allowed).
    pub fn derivative_real(&self, f: &[f64], axes: &[usize]) -> Vec<f64> {
        let mut spec = self.forward_real(f);
        self.differentiate(&mut spec, Self::orders_for(axes));
        self.inverse_real(spec)
    }

    pub fn derivative_complex(&self, f: &[Complex64], axes: &[usize]) -> Vec<Complex64> {
        let mut spec = f.to_vec();
        self.forward(&mut spec);
        self.differentiate(&mut spec, Self::orders_for(axes));
        self.inverse(&mut spec);
        spec
    }
}

/// Fields the spectral operators accept.
pub trait SpectralField: Sized {
    fn grid(&self) -> &GridSpec;
    fn spectrum(&self, sp: &Spectral) -> Vec<Complex64>;
    fn from_spectrum(sp: &Spectral, spec: Vec<Complex64>) -> Self;
}

impl SpectralField for RealField {
    fn grid(&self) -> &GridSpec {
        RealField::grid(self)
    }
    fn spectrum(&self, sp: &Spectral) -> Vec<Complex64> {
        sp.forward_real(self.values())
    }
    fn from_spectrum(sp: &Spectral, spec: Vec<Complex64>) -> Self {
        RealField::from_vec(sp.grid(), sp.inverse_real(spec))
    }
}

impl SpectralField for ComplexField {
    fn grid(&self) -> &GridSpec {
        ComplexField::grid(self)
    }
    fn spectrum(&self, sp: &Spectral) -> Vec<Complex64> {
        let mut data = self.values().to_vec();
        sp.forward(&mut data);
        data
    }
    fn from_spectrum(sp: &Spectral, mut spec: Vec<Complex64>) -> Self {
        sp.inverse(&mut spec);
        ComplexField::from_vec(sp.grid(), spec)
    }
}

fn check_axis(grid: &GridSpec, axis: usize) {
    assert!(
        axis < grid.dim(),
        "axis {axis} out of range for a {}-d grid",
        grid.dim()
    );
}

/// First derivative along `axis`; exact for band-limited periodic data.
pub fn spectral_gradient<F: SpectralField>(f: &F, axis: usize) -> F {
    check_axis(f.grid(), axis);
    let sp = Spectral::cached(f.grid());
    let mut spec = f.spectrum(&sp);
    let mut orders = [0; 3];
    orders[axis] = 1;
    sp.differentiate(&mut spec, orders);
    F::from_spectrum(&sp, spec)
}

pub fn spectral_laplacian<F: SpectralField>(f: &F) -> F {
    let sp = Spectral::cached(f.grid());
    let mut spec = f.spectrum(&sp);
    sp.laplacian_in_place(&mut spec);
    F::from_spectrum(&sp, spec)
}

/// Second derivative `d^2 / dx_a dx_b`.
pub fn spectral_mixed<F: SpectralField>(f: &F, a: usize, b: usize) -> F {
    check_axis(f.grid(), a);
    check_axis(f.grid(), b);
    let sp = Spectral::cached(f.grid());
    let mut spec = f.spectrum(&sp);
    let mut orders = [0; 3];
    orders[a] += 1;
    orders[b] += 1;
    sp.differentiate(&mut spec, orders);
    F::from_spectrum(&sp, spec)
}

/// Full gradient of a real field with a single forward transform.
pub fn gradient_vector(f: &RealField) -> VectorField {
    let grid = f.grid();
    let sp = Spectral::cached(grid);
    let spec = sp.forward_real(f.values());
    let comps = (0..grid.dim())
        .map(|a| {
            let mut s = spec.clone();
            let mut orders = [0; 3];
            orders[a] = 1;
            sp.differentiate(&mut s, orders);
            RealField::from_vec(grid, sp.inverse_real(s))
        })
        .collect();
    VectorField::from_components(grid, comps)
}

/// `d_j u_j` accumulated in transform space.
pub fn divergence(u: &VectorField) -> RealField {
    let grid = u.grid();
    let sp = Spectral::cached(grid);
    let mut acc = vec![ZERO; grid.len()];
    for a in 0..grid.dim() {
        let mut s = sp.forward_real(u.component(a));
        let mut orders = [0; 3];
        orders[a] = 1;
        sp.differentiate(&mut s, orders);
        for (x, y) in acc.iter_mut().zip(&s) {
            *x += y;
        }
    }
    RealField::from_vec(grid, sp.inverse_real(acc))
}

/// Row divergence `d_j T_ij` of a symmetric tensor.
pub fn tensor_divergence(t: &SymTensorField) -> VectorField {
    let grid = t.grid();
    let d = grid.dim();
    let sp = Spectral::cached(grid);
    let comps = (0..d)
        .map(|i| {
            let mut acc = vec![ZERO; grid.len()];
            for j in 0..d {
                let mut s = sp.forward_real(t.get(i, j));
                let mut orders = [0; 3];
                orders[j] = 1;
                sp.differentiate(&mut s, orders);
                for (x, y) in acc.iter_mut().zip(&s) {
                    *x += y;
                }
            }
            RealField::from_vec(grid, sp.inverse_real(acc))
        })
        .collect();
    VectorField::from_components(grid, comps)
}

/// `d_i d_j T_ij` summed over both indices; off-diagonal terms count twice.
///
/// Diagonal terms use the even multiplier `-k_a^2`, so an isotropic tensor
/// `c f delta_ij` maps onto exactly `c` times the spectral Laplacian of `f`.
pub fn double_divergence(t: &SymTensorField) -> RealField {
    let grid = t.grid();
    let d = grid.dim();
    let sp = Spectral::cached(grid);
    let mut acc = vec![ZERO; grid.len()];
    for i in 0..d {
        for j in i..d {
            let mut s = sp.forward_real(t.get(i, j));
            let mut orders = [0; 3];
            orders[i] += 1;
            orders[j] += 1;
            let weight = if i == j { 1.0 } else { 2.0 };
            sp.apply(&mut s, |m| weight * sp.derivative_multiplier(m, orders));
            for (x, y) in acc.iter_mut().zip(&s) {
                *x += y;
            }
        }
    }
    RealField::from_vec(grid, sp.inverse_real(acc))
}

/// L2 norm evaluated in transform space through Parseval's identity.
pub fn spectral_norm(f: &RealField) -> f64 {
    let sp = Spectral::cached(f.grid());
    let spec = sp.forward_real(f.values());
    let n = spec.len() as f64;
    (spec.iter().map(|z| z.norm_sqr()).sum::<f64>() / n * f.grid().cell_volume()).sqrt()
}

/// Second-order central finite-difference Laplacian.
pub fn fd_laplacian(f: &RealField) -> RealField {
    let grid = f.grid();
    let shape = grid.shape();
    let v = f.values();
    let mut out = vec![0.0; grid.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let ix = grid.unravel(idx);
        let mut acc = 0.0;
        for a in 0..grid.dim() {
            let h2 = grid.spacing(a).powi(2);
            let mut up = ix;
            let mut dn = ix;
            up[a] = (ix[a] + 1) % shape[a];
            dn[a] = (ix[a] + shape[a] - 1) % shape[a];
            acc += (v[grid.index(up)] - 2.0 * v[idx] + v[grid.index(dn)]) / h2;
        }
        *o = acc;
    }
    RealField::from_vec(grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn line(n: usize) -> GridSpec {
        GridSpec::new(1, &[TAU], &[n], &[0.0]).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn gradient_of_sine_is_cosine() {
        let g = line(64);
        let f = RealField::from_fn(&g, |p| p[0].sin());
        let df = spectral_gradient(&f, 0);
        let exact = RealField::from_fn(&g, |p| p[0].cos());
        assert!(max_diff(df.values(), exact.values()) < 1e-12);
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = line(32);
        let df = spectral_gradient(&RealField::constant(&g, 3.5), 0);
        assert!(df.max_abs() < 1e-14);
    }

    #[test]
    fn gradient_of_complex_exponential() {
        let g = line(64);
        let f = ComplexField::from_fn(&g, |p| Complex64::from_polar(1.0, 3.0 * p[0]));
        let df = spectral_gradient(&f, 0);
        for (d, z) in df.values().iter().zip(f.values()) {
            assert!((d - Complex64::new(0.0, 3.0) * z).norm() < 1e-12);
        }
    }

    #[test]
    fn laplacian_examples() {
        let g = line(64);
        let f = RealField::from_fn(&g, |p| (2.0 * p[0]).sin());
        let lap = spectral_laplacian(&f);
        let exact = f.scaled(-4.0);
        assert!(max_diff(lap.values(), exact.values()) < 1e-11);
        assert!(spectral_laplacian(&RealField::constant(&g, 1.0)).max_abs() < 1e-14);

        let g2 = GridSpec::new(2, &[TAU, TAU], &[32, 32], &[0.0, 0.0]).unwrap();
        let f2 =
            ComplexField::from_fn(&g2, |p| Complex64::from_polar(1.0, 3.0 * p[0] + 4.0 * p[1]));
        let lap2 = spectral_laplacian(&f2);
        for (l, z) in lap2.values().iter().zip(f2.values()) {
            assert!((l + 25.0 * z).norm() < 1e-10);
        }
    }

    #[test]
    fn nyquist_mode_has_zero_first_derivative() {
        let g = line(16);
        let f = RealField::from_fn(&g, |p| (8.0 * p[0]).cos());
        assert!(spectral_gradient(&f, 0).max_abs() < 1e-12);
        // The second derivative keeps it.
        let lap = spectral_laplacian(&f);
        assert!((lap.values()[0] + 64.0).abs() < 1e-9);
    }

    #[test]
    fn double_divergence_examples() {
        let g = line(64);
        let mut t = SymTensorField::zeros(&g);
        t.set(0, 0, &RealField::from_fn(&g, |p| p[0].sin()));
        let dd = double_divergence(&t);
        let exact = RealField::from_fn(&g, |p| -p[0].sin());
        assert!(max_diff(dd.values(), exact.values()) < 1e-12);

        let g2 = GridSpec::new(2, &[TAU, TAU], &[32, 32], &[0.0, 0.0]).unwrap();
        let mut t2 = SymTensorField::zeros(&g2);
        t2.set(0, 1, &RealField::from_fn(&g2, |p| p[0].sin() * p[1].sin()));
        let dd2 = double_divergence(&t2);
        let exact2 = RealField::from_fn(&g2, |p| 2.0 * p[0].cos() * p[1].cos());
        assert!(max_diff(dd2.values(), exact2.values()) < 1e-12);

        let mut iso = SymTensorField::zeros(&g2);
        iso.add_isotropic(2.5, &RealField::constant(&g2, 1.0));
        assert!(double_divergence(&iso).max_abs() < 1e-13);
    }

    #[test]
    fn isotropic_double_divergence_equals_laplacian_exactly() {
        let g = GridSpec::new(2, &[10.0, 8.0], &[32, 16], &[-5.0, -4.0]).unwrap();
        let f = RealField::from_fn(&g, |p| (-(p[0] * p[0] + p[1] * p[1])).exp());
        let mut t = SymTensorField::zeros(&g);
        t.add_isotropic(1.0, &f);
        let a = double_divergence(&t);
        let b = spectral_laplacian(&f);
        assert!(max_diff(a.values(), b.values()) < 1e-13);
    }

    #[test]
    fn fd_laplacian_is_second_order() {
        let err = |n: usize| {
            let g = line(n);
            let f = RealField::from_fn(&g, |p| p[0].sin());
            let l = fd_laplacian(&f);
            max_diff(l.values(), f.scaled(-1.0).values())
        };
        let ratio = err(32) / err(64);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn three_d_transform_round_trip() {
        let g = GridSpec::new(3, &[1.0, 2.0, 3.0], &[8, 16, 8], &[0.0; 3]).unwrap();
        let sp = Spectral::new(&g);
        let f: Vec<f64> = (0..g.len())
            .map(|i| ((i * 7919) % 101) as f64 / 101.0)
            .collect();
        let back = sp.inverse_real(sp.forward_real(&f));
        assert!(max_diff(&f, &back) < 1e-14);
        let gy = spectral_gradient(&RealField::from_fn(&g, |p| (PI * p[1]).sin()), 1);
        let exact = RealField::from_fn(&g, |p| PI * (PI * p[1]).cos());
        assert!(max_diff(gy.values(), exact.values()) < 1e-12);
    }

    #[test]
    fn tensor_divergence_of_product() {
        let g = GridSpec::new(2, &[TAU, TAU], &[32, 32], &[0.0, 0.0]).unwrap();
        let mut t = SymTensorField::zeros(&g);
        t.set(0, 1, &RealField::from_fn(&g, |p| p[0].sin() * p[1].sin()));
        t.set(0, 0, &RealField::from_fn(&g, |p| p[0].cos()));
        let div = tensor_divergence(&t);
        let ex = RealField::from_fn(&g, |p| -p[0].sin() + p[0].sin() * p[1].cos());
        let ey = RealField::from_fn(&g, |p| p[0].cos() * p[1].sin());
        assert!(max_diff(div.component(0), ex.values()) < 1e-12);
        assert!(max_diff(div.component(1), ey.values()) < 1e-12);
    }
}
