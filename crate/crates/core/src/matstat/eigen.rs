use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::Field;
use crate::error::{Error, Result};
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    Eigenvalues,
    Singular,
}

/// Eigenvalues or singular values, sorted nonincreasing, with multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub kind: SpectrumKind,
}

impl Spectrum {
    fn sorted(mut values: Vec<f64>, kind: SpectrumKind) -> Self {
        // stable: equal values keep their original order
        values.sort_by(|a, b| b.total_cmp(a));
        Self { values, kind }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `k`-th largest value, 1-based.
    pub fn kth(&self, k: usize) -> f64 {
        self.values[k - 1]
    }
}

const HERMITIAN_TOL: f64 = 1e-12;
#[cfg(test)]
const JACOBI_THRESHOLD: f64 = 1e-13;
#[cfg(test)]
const JACOBI_MAX_SWEEPS: usize = 40;

/// Returns the Hermitian part of `a`, or an error when `a` is not square or
/// deviates from `a*` by more than `1e-12` relative to its largest entry.
pub(crate) fn hermitian_part(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!("expected a square matrix, got {}×{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    let scale = a.data().iter().fold(0.0_f64, |m, z| m.max(z.norm())).max(f64::MIN_POSITIVE);
    let mut dev = 0.0_f64;
    for j in 0..n {
        for k in j..n {
            dev = dev.max((a[(j, k)] - a[(k, j)].conj()).norm());
        }
    }
    if dev > HERMITIAN_TOL * scale.max(1.0) {
        return Err(Error::InvalidInput(format!("matrix is not Hermitian (deviation {dev:e})")));
    }
    Ok(Matrix::from_fn(n, n, |j, k| 0.5 * (a[(j, k)] + a[(k, j)].conj())))
}

/// All eigenvalues of a Hermitian matrix, sorted nonincreasing.
///
/// Householder tridiagonalization followed by implicit QR with Wilkinson
/// shifts, on the real symmetric matrix or, for complex input, on its real
/// 2n×2n embedding `[[Re, -Im], [Im, Re]]` (whose spectrum is that of `a`
/// with every eigenvalue doubled). Negating `a` negates the result exactly.
pub fn eigvals_hermitian(a: &Matrix) -> Result<Spectrum> {
    let h = hermitian_part(a)?;
    let n = h.rows();
    let values = if h.is_real() {
        symmetric_eigenvalues(h.real_parts(), n)
    } else {
        let m = 2 * n;
        let mut s = vec![0.0; m * m];
        for j in 0..n {
            for k in 0..n {
                let z = h[(j, k)];
                s[j * m + k] = z.re;
                s[(j + n) * m + (k + n)] = z.re;
                s[j * m + (k + n)] = -z.im;
                s[(j + n) * m + k] = z.im;
            }
        }
        let mut doubled = symmetric_eigenvalues(s, m);
        doubled.sort_by(|a, b| b.total_cmp(a));
        doubled.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
    };
    Ok(Spectrum::sorted(values, SpectrumKind::Eigenvalues))
}

/// Eigenvalues of the symmetric `n × n` matrix `a` (row-major, full
/// storage), unsorted.
pub(crate) fn symmetric_eigenvalues(a: Vec<f64>, n: usize) -> Vec<f64> {
    let (mut d, mut e) = tridiagonalize(a, n);
    tridiagonal_qr(&mut d, &mut e);
    d
}

/// Reduces a symmetric matrix to tridiagonal form `(diag, subdiag)` by
/// Householder reflections `I - β v vᵀ` with `v = x - α e₁`,
/// `α = -sign(x_i)‖x‖` for the first nonzero `x_i`.
fn tridiagonalize(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let m = k + 1;
        let norm = (m..n).map(|i| a[i * n + k] * a[i * n + k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        // sign taken from the first nonzero entry: a cancellation can leave
        // +0.0 in both A and -A, which would break exact negation symmetry
        let pivot = (m..n).map(|i| a[i * n + k]).find(|&x| x != 0.0).unwrap_or(0.0);
        let alpha = if pivot < 0.0 { norm } else { -norm };
        for i in m..n {
            v[i] = a[i * n + k];
        }
        v[m] -= alpha;
        let vv: f64 = (m..n).map(|i| v[i] * v[i]).sum();
        e[k] = alpha;
        if vv == 0.0 {
            continue;
        }
        let beta = 2.0 / vv;
        for i in m..n {
            p[i] = beta * (m..n).map(|j| a[i * n + j] * v[j]).sum::<f64>();
        }
        let pv: f64 = (m..n).map(|i| p[i] * v[i]).sum();
        let half = 0.5 * beta * pv;
        for i in m..n {
            p[i] -= half * v[i];
        }
        for i in m..n {
            for j in m..n {
                a[i * n + j] -= v[i] * p[j] + p[i] * v[j];
            }
        }
    }
    if n >= 2 {
        e[n - 2] = a[(n - 1) * n + (n - 2)];
    }
    ((0..n).map(|i| a[i * n + i]).collect(), e)
}

/// Implicit symmetric QR on a tridiagonal matrix; eigenvalues left in `d`.
fn tridiagonal_qr(d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    if n < 2 {
        return;
    }
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iters = 0usize;
    while hi > 0 {
        // deflate converged trailing entries
        if e[hi - 1].abs() <= eps * (d[hi - 1].abs() + d[hi].abs()) {
            e[hi - 1] = 0.0;
            hi -= 1;
            iters = 0;
            continue;
        }
        let mut lo = hi - 1;
        while lo > 0 && e[lo - 1].abs() > eps * (d[lo - 1].abs() + d[lo].abs()) {
            lo -= 1;
        }
        if lo > 0 {
            e[lo - 1] = 0.0;
        }
        iters += 1;
        if iters > 60 * n {
            break;
        }
        // Wilkinson shift from the trailing 2×2 block
        let delta = 0.5 * (d[hi - 1] - d[hi]);
        let b2 = e[hi - 1] * e[hi - 1];
        let sgn = match delta {
            x if x != 0.0 => x.signum(),
            _ if d[hi] < 0.0 => -1.0,
            _ => 1.0,
        };
        let mu = d[hi] - b2 / (delta + sgn * delta.hypot(e[hi - 1]));
        let mut x = d[lo] - mu;
        let mut z = e[lo];
        for k in lo..hi {
            let r = x.hypot(z);
            let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (x / r, z / r) };
            if k > lo {
                e[k - 1] = c * x + s * z;
            }
            let (a, b, cc) = (d[k], e[k], d[k + 1]);
            d[k] = c * c * a + 2.0 * c * s * b + s * s * cc;
            d[k + 1] = s * s * a - 2.0 * c * s * b + c * c * cc;
            e[k] = c * s * (cc - a) + (c * c - s * s) * b;
            if k + 1 < hi {
                z = s * e[k + 1];
                e[k + 1] *= c;
                x = e[k];
            }
        }
    }
}

#[cfg(test)]
pub(crate) fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = JACOBI_THRESHOLD * total;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if (2.0 * off).sqrt() <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let nrp = c * arp - s * arq;
                    let nrq = s * arp + c * arq;
                    a[r * n + p] = nrp;
                    a[p * n + r] = nrp;
                    a[r * n + q] = nrq;
                    a[q * n + r] = nrq;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

const SVD_TOL: f64 = 1e-15;
const SVD_MAX_SWEEPS: usize = 60;

/// Singular values `s_1 ≥ … ≥ s_l ≥ 0`, `l = min(m, n)`, by one-sided
/// (Hestenes) Jacobi on the columns of `a` or of `a*`.
pub fn singular_values(a: &Matrix) -> Result<Spectrum> {
    if !a.is_finite() {
        return Err(Error::InvalidInput("matrix entries must be finite".into()));
    }
    let values = if a.is_real() { hestenes::<f64>(a) } else { hestenes::<Complex64>(a) };
    Ok(Spectrum::sorted(values, SpectrumKind::Singular))
}

fn hestenes<T: Field>(a: &Matrix) -> Vec<f64> {
    // Columns of a (or of a* when a is wide), stored contiguously.
    let (m, n) = (a.rows(), a.cols());
    let (len, count, wide) = if n <= m { (m, n, false) } else { (n, m, true) };
    let mut cols: Vec<Vec<T>> = (0..count)
        .map(|c| {
            (0..len)
                .map(|r| if wide { T::from_complex(a[(c, r)].conj()) } else { T::from_complex(a[(r, c)]) })
                .collect()
        })
        .collect();
    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..count {
            for j in i + 1..count {
                let (left, right) = cols.split_at_mut(j);
                let (ci, cj) = (&mut left[i], &mut right[0]);
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = T::ZERO;
                for (x, y) in ci.iter().zip(cj.iter()) {
                    alpha += x.abs_sq();
                    beta += y.abs_sq();
                    gamma = gamma + x.conj() * *y;
                }
                let g = gamma.abs();
                if g == 0.0 || g <= SVD_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let ph = gamma.phase().conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
                    let yp = *y * ph;
                    let xi = *x;
                    *x = xi.scale(c) - yp.scale(s);
                    *y = xi.scale(s) + yp.scale(c);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    cols.iter()
        .map(|c| crate::vecnorms::lp_of_moduli(c.iter().map(|z| z.abs()), 2.0))
        .collect()
}
