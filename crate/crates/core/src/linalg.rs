//! Dense and banded kernels sized for tensors of a few dimensions and
//! lattice systems of a few thousand unknowns.

/// Inverts the row-major `n x n` matrix `a` into `inv` by Gauss-Jordan
/// elimination with partial pivoting. `work` must hold `n * n` entries.
///
/// Returns `false` when a pivot falls below `1e-14` times the largest
/// entry of `a`.
pub fn invert_into(n: usize, a: &[f64], inv: &mut [f64], work: &mut [f64]) -> bool {
    match n {
        2 => return invert2(a, inv),
        3 => return invert3(a, inv),
        _ => {}
    }
    let work = &mut work[..n * n];
    work.copy_from_slice(&a[..n * n]);
    let inv = &mut inv[..n * n];
    inv.fill(0.0);
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let scale = a[..n * n].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return false;
    }
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if work[r * n + col].abs() > work[piv * n + col].abs() {
                piv = r;
            }
        }
        let p = work[piv * n + col];
        if p.abs() <= 1e-14 * scale {
            return false;
        }
        if piv != col {
            for c in 0..n {
                work.swap(piv * n + c, col * n + c);
                inv.swap(piv * n + c, col * n + c);
            }
        }
        let ip = 1.0 / p;
        for c in 0..n {
            work[col * n + c] *= ip;
            inv[col * n + c] *= ip;
        }
        for r in 0..n {
            if r != col {
                let f = work[r * n + col];
                if f != 0.0 {
                    for c in 0..n {
                        work[r * n + c] -= f * work[col * n + c];
                        inv[r * n + c] -= f * inv[col * n + c];
                    }
                }
            }
        }
    }
    true
}

fn invert2(a: &[f64], inv: &mut [f64]) -> bool {
    let scale = a[..4].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let det = a[0] * a[3] - a[1] * a[2];
    if !(det.abs() > 1e-14 * scale * scale) || !det.is_finite() {
        return false;
    }
    let id = 1.0 / det;
    inv[0] = a[3] * id;
    inv[1] = -a[1] * id;
    inv[2] = -a[2] * id;
    inv[3] = a[0] * id;
    true
}

fn invert3(a: &[f64], inv: &mut [f64]) -> bool {
    let scale = a[..9].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let c00 = a[4] * a[8] - a[5] * a[7];
    let c01 = a[5] * a[6] - a[3] * a[8];
    let c02 = a[3] * a[7] - a[4] * a[6];
    let det = a[0] * c00 + a[1] * c01 + a[2] * c02;
    if !(det.abs() > 1e-14 * scale * scale * scale) || !det.is_finite() {
        return false;
    }
    let id = 1.0 / det;
    inv[0] = c00 * id;
    inv[1] = (a[2] * a[7] - a[1] * a[8]) * id;
    inv[2] = (a[1] * a[5] - a[2] * a[4]) * id;
    inv[3] = c01 * id;
    inv[4] = (a[0] * a[8] - a[2] * a[6]) * id;
    inv[5] = (a[2] * a[3] - a[0] * a[5]) * id;
    inv[6] = c02 * id;
    inv[7] = (a[1] * a[6] - a[0] * a[7]) * id;
    inv[8] = (a[0] * a[4] - a[1] * a[3]) * id;
    true
}

/// Cholesky factor `L` (row-major, lower triangular) of an SPD matrix.
/// Returns `None` when the matrix is not positive definite.
pub fn cholesky(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Quadratic form `v^T A w` for row-major `A`.
#[inline]
pub fn bilinear(n: usize, a: &[f64], v: &[f64], w: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += a[i * n + j] * w[j];
        }
        s += v[i] * row;
    }
    s
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Banded Cholesky factorisation of a symmetric positive definite matrix
/// with half-bandwidth `bw` (entries `A[i][j]` vanish for `|i - j| > bw`).
///
/// Storage is row-wise: `band[i * (bw + 1) + (j + bw - i)]` holds `A[i][j]`
/// for `i - bw <= j <= i`.
#[derive(Clone, Debug)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandCholesky {
    /// Factors the matrix given by its lower band. Returns `None` when the
    /// matrix is not positive definite.
    pub fn factor(n: usize, bw: usize, mut band: Vec<f64>) -> Option<Self> {
        let w = bw + 1;
        assert_eq!(band.len(), n * w);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = band[i * w + (j + bw - i)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= band[i * w + (k + bw - i)] * band[j * w + (k + bw - j)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    band[i * w + bw] = s.sqrt();
                } else {
                    band[i * w + (j + bw - i)] = s / band[j * w + bw];
                }
            }
        }
        Some(Self { n, bw, band })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.band[i * w + (k + bw - i)] * x[k];
            }
            x[i] = s / self.band[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n.min(i + bw + 1) {
                s -= self.band[k * w + (i + bw - k)] * x[k];
            }
            x[i] = s / self.band[i * w + bw];
        }
    }
}

/// Outcome of a GMRES solve.
#[derive(Clone, Copy, Debug)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Right-preconditioned restarted GMRES for `A x = b`.
///
/// `apply` computes `A v`, `precond` applies `M^{-1}` in place. `x` holds
/// the initial guess on entry and the solution on exit.
pub fn gmres(
    n: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&mut [f64]),
    b: &[f64],
    x: &mut [f64],
    restart: usize,
    max_iter: usize,
    rel_tol: f64,
) -> GmresOutcome {
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let mut r = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut total = 0;
    let mut rel = f64::INFINITY;
    while total < max_iter {
        apply(x, &mut tmp);
        for i in 0..n {
            r[i] = b[i] - tmp[i];
        }
        let beta = norm2(&r);
        rel = beta / bnorm;
        if rel <= rel_tol {
            break;
        }
        let m = restart.min(max_iter - total);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(m);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let mut z = basis[k].clone();
            precond(&mut z);
            let mut wv = vec![0.0; n];
            apply(&z, &mut wv);
            zs.push(z);
            for (j, q) in basis.iter().enumerate() {
                let h = dot(&wv, q);
                hess[j][k] = h;
                for i in 0..n {
                    wv[i] -= h * q[i];
                }
            }
            let hn = norm2(&wv);
            hess[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * hess[j][k] + sn[j] * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = t;
            }
            let denom = hess[k][k].hypot(hess[k + 1][k]);
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = hess[k][k] / denom;
            sn[k] = hess[k + 1][k] / denom;
            hess[k][k] = denom;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            rel = g[k + 1].abs() / bnorm;
            if rel <= rel_tol || hn == 0.0 {
                break;
            }
            basis.push(wv.iter().map(|v| v / hn).collect());
        }
        if k_used == 0 {
            break;
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        for (j, z) in zs.iter().take(k_used).enumerate() {
            for i in 0..n {
                x[i] += y[j] * z[i];
            }
        }
        if rel <= rel_tol {
            break;
        }
    }
    GmresOutcome {
        iterations: total,
        relative_residual: rel,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_small_matrix() {
        let a = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let mut inv = [0.0; 9];
        let mut work = [0.0; 9];
        assert!(invert_into(3, &a, &mut inv, &mut work));
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| a[i * 3 + k] * inv[k * 3 + j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!(!invert_into(2, &[1.0, 2.0, 2.0, 4.0], &mut inv, &mut work));
        let b = [2.0, 0.3, -0.1, 0.7, 1.0, 0.2, 0.4, 0.1, 3.0, 0.5, 0.2, 0.9, 1.0, 0.0, 0.3, 2.0];
        let mut inv4 = [0.0; 16];
        let mut work4 = [0.0; 16];
        assert!(invert_into(4, &b, &mut inv4, &mut work4));
        for i in 0..4 {
            for j in 0..4 {
                let s: f64 = (0..4).map(|k| b[i * 4 + k] * inv4[k * 4 + j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn band_cholesky_matches_dense_tridiagonal() {
        let n = 50;
        let bw = 1;
        let mut band = vec![0.0; n * 2];
        for i in 0..n {
            band[i * 2 + 1] = 2.0;
            if i > 0 {
                band[i * 2] = -1.0;
            }
        }
        let f = BandCholesky::factor(n, bw, band).unwrap();
        let mut x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = x.clone();
        f.solve_in_place(&mut x);
        for i in 0..n {
            let mut ax = 2.0 * x[i];
            if i > 0 {
                ax -= x[i - 1];
            }
            if i + 1 < n {
                ax -= x[i + 1];
            }
            assert!((ax - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 30;
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                out[i] = 3.0 * v[i];
                if i > 0 {
                    out[i] -= v[i - 1];
                }
                if i + 1 < n {
                    out[i] -= 0.5 * v[i + 1];
                }
            }
        };
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.1).collect();
        let mut x = vec![0.0; n];
        let out = gmres(n, apply, |_| {}, &b, &mut x, 20, 200, 1e-12);
        assert!(out.relative_residual <= 1e-12);
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-9);
        }
    }
}
