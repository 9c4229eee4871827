//! Matrix-free Krylov solvers: MINRES for symmetric operators and restarted
//! GMRES as the general fallback.

/// Result of an iterative solve started from the zero vector.
#[derive(Debug, Clone)]
pub struct KrylovOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `|b - A x| / |b|` as tracked by the recurrence.
    pub residual: f64,
    /// Ratio of the largest to smallest rotation pivot (MINRES) or of the
    /// extreme Hessenberg diagonal entries (GMRES).
    pub condition_estimate: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn trivial(n: usize) -> KrylovOutcome {
    KrylovOutcome {
        x: vec![0.0; n],
        iterations: 0,
        residual: 0.0,
        condition_estimate: 1.0,
        converged: true,
    }
}

/// Paige-Saunders MINRES without preconditioning.
pub fn minres(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    minres_preconditioned(apply, |r, z| z.copy_from_slice(r), b, tol, max_iter)
}

/// MINRES with a symmetric positive definite preconditioner `precond(r) = M^-1 r`.
/// The tracked residual is measured in the `M^-1` norm.
pub fn minres_preconditioned(
    apply: impl Fn(&[f64], &mut [f64]),
    precond: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let n = b.len();
    if norm(b) == 0.0 {
        return trivial(n);
    }
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut y = vec![0.0; n];
    precond(b, &mut y);
    let beta1 = dot(b, &y).sqrt();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0, 0.0);
    let (mut gmax, mut gmin) = (0.0f64, f64::MAX);
    let mut residual = 1.0;
    let mut iterations = 0;
    for itn in 1..=max_iter {
        iterations = itn;
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        apply(&v, &mut y);
        if itn >= 2 {
            let f = beta / oldb;
            for (yi, ri) in y.iter_mut().zip(&r1) {
                *yi -= f * ri;
            }
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        for (yi, ri) in y.iter_mut().zip(&r2) {
            *yi -= f * ri;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        precond(&r2, &mut y);
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        let denom = 1.0 / gamma;
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        gmax = gmax.max(gamma);
        gmin = gmin.min(gamma);
        residual = phibar.abs() / beta1;
        if residual <= tol || beta == 0.0 {
            break;
        }
    }
    KrylovOutcome {
        x,
        iterations,
        residual,
        condition_estimate: gmax / gmin,
        converged: residual <= tol,
    }
}

/// Restarted GMRES(`restart`) with modified Gram-Schmidt and Givens rotations.
pub fn gmres(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> KrylovOutcome {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return trivial(n);
    }
    let m = restart.max(1);
    let mut x = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut iterations = 0;
    let (mut hmax, mut hmin) = (0.0f64, f64::MAX);
    while iterations < max_iter {
        apply(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        let mut residual = beta / bnorm;
        if residual <= tol {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            if iterations >= max_iter {
                break;
            }
            iterations += 1;
            let mut wv = vec![0.0; n];
            apply(&basis[k], &mut wv);
            for (j, q) in basis.iter().enumerate() {
                h[j][k] = dot(&wv, q);
                for (wi, qi) in wv.iter_mut().zip(q) {
                    *wi -= h[j][k] * qi;
                }
            }
            h[k + 1][k] = norm(&wv);
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let rho = h[k][k].hypot(h[k + 1][k]);
            if rho == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / rho;
            sn[k] = h[k + 1][k] / rho;
            let next = h[k + 1][k];
            h[k][k] = rho;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            hmax = hmax.max(rho);
            hmin = hmin.min(rho);
            k_used = k + 1;
            residual = g[k + 1].abs() / bnorm;
            if residual <= tol || next == 0.0 {
                break;
            }
            basis.push(wv.iter().map(|v| v / next).collect());
        }
        let mut coef = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * coef[j]).sum();
            coef[i] = (g[i] - s) / h[i][i];
        }
        for (c, q) in coef.iter().zip(&basis) {
            for (xi, qi) in x.iter_mut().zip(q) {
                *xi += c * qi;
            }
        }
        if residual <= tol {
            break;
        }
    }
    apply(&x, &mut r);
    let true_res = r
        .iter()
        .zip(b)
        .map(|(a, bi)| (bi - a).powi(2))
        .sum::<f64>()
        .sqrt()
        / bnorm;
    KrylovOutcome {
        x,
        iterations,
        residual: true_res,
        condition_estimate: if hmin > 0.0 && hmin < f64::MAX {
            hmax / hmin
        } else {
            f64::INFINITY
        },
        converged: true_res <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Symmetric indefinite tridiagonal test matrix.
    fn tri(x: &[f64], y: &mut [f64], shift: f64) {
        let n = x.len();
        for i in 0..n {
            let l = if i > 0 { x[i - 1] } else { 0.0 };
            let r = if i + 1 < n { x[i + 1] } else { 0.0 };
            y[i] = l - 2.0 * x[i] + r + shift * x[i];
        }
    }

    #[test]
    fn minres_solves_indefinite_system() {
        let n = 200;
        let b: Vec<f64> = (0..n).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
        let out = minres(|x, y| tri(x, y, 1.3), &b, 1e-12, 2000);
        assert!(out.converged);
        let mut ax = vec![0.0; n];
        tri(&out.x, &mut ax, 1.3);
        let err: f64 = ax
            .iter()
            .zip(&b)
            .map(|(a, c)| (a - c).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-9 * norm(&b));
        assert!(out.condition_estimate > 1.0);
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 120;
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let op = |x: &[f64], y: &mut [f64]| {
            for i in 0..x.len() {
                let up = if i + 1 < x.len() { x[i + 1] } else { 0.0 };
                y[i] = 3.0 * x[i] + 0.7 * up;
            }
        };
        let out = gmres(op, &b, 1e-12, 30, 1000);
        assert!(out.converged, "residual {}", out.residual);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let out = minres(|x, y| tri(x, y, 0.5), &[0.0; 10], 1e-10, 10);
        assert!(out.converged && out.x.iter().all(|v| *v == 0.0));
    }
}
