use super::{eigvals_hermitian, singular_values, Spectrum};
use crate::error::{bail_param, Result};
use crate::vecnorms::lp_of_moduli;
use crate::Matrix;

/// Schatten p-norm: ℓp norm of the singular values.
pub fn schatten_norm(a: &Matrix, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        bail_param!("Schatten exponent must lie in [1, ∞], got {p}");
    }
    let s = singular_values(a)?;
    Ok(lp_of_moduli(s.values.iter().copied(), p))
}

/// Ky Fan k-norm `Σ_{j≤k} s_j(A)`.
pub fn kyfan_norm(a: &Matrix, k: usize) -> Result<f64> {
    let s = singular_values(a)?;
    kyfan_from_singular(&s, k)
}

pub fn kyfan_from_singular(s: &Spectrum, k: usize) -> Result<f64> {
    if k == 0 || k > s.len() {
        bail_param!("Ky Fan index must lie in 1..={}, got {k}", s.len());
    }
    Ok(s.values[..k].iter().sum())
}

/// `(F_k, G_k)`: the sums of the `k` largest and of the `k` smallest
/// eigenvalues of a Hermitian matrix.
pub fn partial_eig_sums(a: &Matrix, k: usize) -> Result<(f64, f64)> {
    let s = eigvals_hermitian(a)?;
    partial_sums_from_spectrum(&s, k)
}

pub fn partial_sums_from_spectrum(s: &Spectrum, k: usize) -> Result<(f64, f64)> {
    let n = s.len();
    if k == 0 || k > n {
        bail_param!("partial sum index must lie in 1..={n}, got {k}");
    }
    let f = s.values[..k].iter().sum();
    let g = s.values[n - k..].iter().rev().sum();
    Ok((f, g))
}
