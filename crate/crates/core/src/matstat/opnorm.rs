use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::field::{pow_abs, Field};
use crate::error::{bail_param, Error, Result};
use crate::vecnorms::{conjugate, lp_of_moduli};
use crate::Matrix;

/// Value of `‖A‖_{p→q}` found by [`opnorm_pq`]. Always attained by some
/// unit vector, hence a lower bound on the true norm; `exact` marks the
/// closed-form cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpNorm {
    pub value: f64,
    pub exact: bool,
}

/// Knobs of the multi-start ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct AscentOptions {
    pub random_starts: usize,
    pub basis_starts: bool,
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Iterations every start gets before only the best `survivors`
    /// continue to convergence. The default keeps every start.
    pub screen_iter: usize,
    pub survivors: usize,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            random_starts: 16,
            basis_starts: true,
            max_iter: 500,
            rel_tol: 1e-12,
            screen_iter: 6,
            survivors: usize::MAX,
            seed: 0x6f70_6e6f_726d,
        }
    }
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 || q.is_nan() || q < 1.0 {
        bail_param!("exponents must lie in [1, ∞], got p = {p}, q = {q}");
    }
    Ok(())
}

/// `‖A‖_{p→q} = max{ ‖Ax‖_q : ‖x‖_p = 1 }`.
///
/// Closed forms for `p = 1` (largest column ℓq norm), `q = ∞` (largest row
/// ℓp' norm) and `p = q = 2` (largest singular value); otherwise a
/// multi-start alternating ascent `x ← J_{p'}(A* J_q(Ax))`.
///
/// Real matrices are handled in real arithmetic when `p ≤ q`, where the
/// real and complex norms coincide.
pub fn opnorm_pq(a: &Matrix, p: f64, q: f64) -> Result<OpNorm> {
    opnorm_pq_with(a, p, q, &AscentOptions::default())
}

pub fn opnorm_pq_with(a: &Matrix, p: f64, q: f64, opts: &AscentOptions) -> Result<OpNorm> {
    check_exponents(p, q)?;
    if !a.is_finite() {
        return Err(Error::InvalidInput("matrix entries must be finite".into()));
    }
    let (m, n) = (a.rows(), a.cols());
    if p == 1.0 {
        let v = (0..n)
            .map(|k| lp_of_moduli((0..m).map(|j| a[(j, k)].norm()), q))
            .fold(0.0, f64::max);
        return Ok(OpNorm { value: v, exact: true });
    }
    if q.is_infinite() {
        let pc = conjugate(p);
        let v = (0..m)
            .map(|j| lp_of_moduli((0..n).map(|k| a[(j, k)].norm()), pc))
            .fold(0.0, f64::max);
        return Ok(OpNorm { value: v, exact: true });
    }
    if p == 2.0 && q == 2.0 {
        let s = super::singular_values(a)?;
        return Ok(OpNorm { value: s.values[0], exact: true });
    }
    let value = if a.is_real() && p <= q {
        Ascent::<f64>::new(a, p, q).run(opts)
    } else {
        Ascent::<Complex64>::new(a, p, q).run(opts)
    };
    Ok(OpNorm { value, exact: false })
}

struct Ascent<T> {
    m: usize,
    n: usize,
    a: Vec<T>,
    p: f64,
    q: f64,
    pc: f64,
}

impl<T: Field> Ascent<T> {
    fn new(a: &Matrix, p: f64, q: f64) -> Self {
        Self {
            m: a.rows(),
            n: a.cols(),
            a: a.data().iter().map(|&z| T::from_complex(z)).collect(),
            p,
            q,
            pc: conjugate(p),
        }
    }

    fn normalize(&self, x: &mut [T]) -> bool {
        let nrm = lp_of_moduli(x.iter().map(|z| z.abs()), self.p);
        if nrm == 0.0 || !nrm.is_finite() {
            return false;
        }
        for z in x.iter_mut() {
            *z = z.scale(1.0 / nrm);
        }
        true
    }

    // y = A x, returns ‖y‖_q
    fn apply(&self, x: &[T], y: &mut [T]) -> f64 {
        for (j, yj) in y.iter_mut().enumerate() {
            let row = &self.a[j * self.n..(j + 1) * self.n];
            let mut s = T::ZERO;
            for (aij, xj) in row.iter().zip(x) {
                s = s + *aij * *xj;
            }
            *yj = s;
        }
        lp_of_moduli(y.iter().map(|z| z.abs()), self.q)
    }

    // One ascent step from normalized x; returns the new normalized x in
    // place. False if the iterate degenerates.
    fn step(&self, x: &mut [T], y: &mut [T], w: &mut [T]) -> bool {
        // z = J_q(y), stored in y
        let ymax = y.iter().fold(0.0_f64, |m, z| m.max(z.abs()));
        if ymax == 0.0 {
            return false;
        }
        for z in y.iter_mut() {
            let r = z.abs() / ymax;
            *z = z.phase().scale(pow_abs(r, self.q - 1.0));
        }
        // w = A* z
        for v in w.iter_mut() {
            *v = T::ZERO;
        }
        for j in 0..self.m {
            let zj = y[j];
            if zj.abs_sq() == 0.0 {
                continue;
            }
            let row = &self.a[j * self.n..(j + 1) * self.n];
            for (wk, ajk) in w.iter_mut().zip(row) {
                *wk = *wk + ajk.conj() * zj;
            }
        }
        let wmax = w.iter().fold(0.0_f64, |m, z| m.max(z.abs()));
        if wmax == 0.0 {
            return false;
        }
        for (xk, wk) in x.iter_mut().zip(w.iter()) {
            let r = wk.abs() / wmax;
            *xk = if self.pc == 1.0 { wk.phase() } else { wk.phase().scale(pow_abs(r, self.pc - 1.0)) };
        }
        self.normalize(x)
    }

    fn starts(&self, opts: &AscentOptions) -> Vec<Vec<T>> {
        let n = self.n;
        let mut out = Vec::new();
        out.push(vec![T::from_complex(Complex64::new(1.0, 0.0)); n]);
        if opts.basis_starts {
            for k in 0..n {
                let mut x = vec![T::ZERO; n];
                x[k] = T::from_complex(Complex64::new(1.0, 0.0));
                out.push(x);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.random_starts {
            out.push(
                (0..n)
                    .map(|_| {
                        let re: f64 = rng.random_range(-1.0..1.0);
                        let im: f64 = rng.random_range(-1.0..1.0);
                        T::from_complex(Complex64::new(re, im))
                    })
                    .collect(),
            );
        }
        out
    }

    // Iterates from x for at most `iters` steps; returns the best value
    // seen and whether the iteration converged.
    fn iterate(&self, x: &mut [T], iters: usize, tol: f64, best: &mut f64) -> (f64, bool) {
        let mut y = vec![T::ZERO; self.m];
        let mut w = vec![T::ZERO; self.n];
        let mut val = self.apply(x, &mut y);
        *best = best.max(val);
        for _ in 0..iters {
            if !self.step(x, &mut y, &mut w) {
                return (val, true);
            }
            let next = self.apply(x, &mut y);
            *best = best.max(next);
            let done = (next - val).abs() <= tol * next.max(f64::MIN_POSITIVE);
            val = next;
            if done {
                return (val, true);
            }
        }
        (val, false)
    }

    fn run(&self, opts: &AscentOptions) -> f64 {
        let mut best = 0.0_f64;
        let mut pool: Vec<(f64, Vec<T>)> = Vec::new();
        for mut x in self.starts(opts) {
            if !self.normalize(&mut x) {
                continue;
            }
            let (val, converged) = self.iterate(&mut x, opts.screen_iter, opts.rel_tol, &mut best);
            if !converged {
                pool.push((val, x));
            }
        }
        pool.sort_by(|a, b| b.0.total_cmp(&a.0));
        let rest = opts.max_iter.saturating_sub(opts.screen_iter);
        for (_, mut x) in pool.into_iter().take(opts.survivors.max(1)) {
            self.iterate(&mut x, rest, opts.rel_tol, &mut best);
        }
        best
    }
}

/// Brute-force `‖A‖_{p→q}` for real `A` with at most three columns: a
/// dense parametrization of the ℓp sphere followed by local refinement of
/// the best grid points.
pub fn opnorm_pq_oracle(a: &Matrix, p: f64, q: f64, resolution: usize) -> Result<f64> {
    check_exponents(p, q)?;
    let n = a.cols();
    if n > 3 {
        return Err(Error::UnsupportedDimension(format!("oracle supports at most 3 columns, got {n}")));
    }
    if !a.is_real() {
        return Err(Error::InvalidInput("oracle supports real matrices only".into()));
    }
    if resolution < 8 {
        bail_param!("resolution must be at least 8");
    }
    let m = a.rows();
    let re = a.real_parts();
    let value = |u: &[f64]| -> f64 {
        let nrm = lp_of_moduli(u.iter().map(|x| x.abs()), p);
        if nrm == 0.0 {
            return 0.0;
        }
        lp_of_moduli(
            (0..m).map(|j| ((0..n).map(|k| re[j * n + k] * u[k]).sum::<f64>() / nrm).abs()),
            q,
        )
    };
    match n {
        1 => Ok(value(&[1.0])),
        2 => {
            let f = |th: f64| value(&[th.cos(), th.sin()]);
            let h = std::f64::consts::PI / resolution as f64;
            let grid: Vec<f64> = (0..resolution).map(|i| f(i as f64 * h)).collect();
            let mut best = grid.iter().copied().fold(0.0, f64::max);
            for i in top_indices(&grid, 8) {
                let c = i as f64 * h;
                best = best.max(golden_max(&f, c - h, c + h));
            }
            Ok(best)
        }
        _ => {
            let f = |th: f64, ph: f64| value(&[th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
            let ht = std::f64::consts::PI / resolution as f64;
            let hp = 2.0 * std::f64::consts::PI / (2 * resolution) as f64;
            let mut grid = Vec::with_capacity((resolution + 1) * 2 * resolution);
            for i in 0..=resolution {
                for j in 0..2 * resolution {
                    grid.push(f(i as f64 * ht, j as f64 * hp));
                }
            }
            let mut best = grid.iter().copied().fold(0.0, f64::max);
            for idx in top_indices(&grid, 8) {
                let (i, j) = (idx / (2 * resolution), idx % (2 * resolution));
                best = best.max(pattern_search(&f, i as f64 * ht, j as f64 * hp, ht));
            }
            Ok(best)
        }
    }
}

fn top_indices(v: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
    idx.truncate(k);
    idx
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

fn pattern_search(f: &impl Fn(f64, f64) -> f64, mut th: f64, mut ph: f64, h0: f64) -> f64 {
    let mut best = f(th, ph);
    let mut h = h0;
    while h > 1e-12 {
        let mut moved = false;
        for (dt, dp) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h), (h, h), (-h, -h), (h, -h), (-h, h)] {
            let v = f(th + dt, ph + dp);
            if v > best {
                best = v;
                th += dt;
                ph += dp;
                moved = true;
                break;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    best
}

/// `‖(a_jk)‖_r` with `r = min{p', q}`, an upper bound on `‖A‖_{p→q}` for
/// `1 < p ≤ 2 ≤ q < ∞`.
pub fn hoelder_vec_bound(a: &Matrix, p: f64, q: f64) -> Result<f64> {
    if !(p > 1.0 && p <= 2.0 && q >= 2.0 && q.is_finite()) {
        bail_param!("need 1 < p ≤ 2 ≤ q < ∞, got p = {p}, q = {q}");
    }
    let r = conjugate(p).min(q);
    Ok(lp_of_moduli(a.data().iter().map(|z| z.norm()), r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_real(m: usize, n: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(m, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), 0.0))
    }

    #[test]
    fn identity_and_diagonal() {
        let i = Matrix::identity(4);
        assert!((opnorm_pq(&i, 2.0, 2.0).unwrap().value - 1.0).abs() < 1e-14);
        // I_n: ℓp → ℓq with p ≥ q has norm n^{1/q - 1/p}
        let v = opnorm_pq(&i, 3.0, 1.5).unwrap().value;
        assert!((v - 4f64.powf(1.0 / 1.5 - 1.0 / 3.0)).abs() < 1e-6, "{v}");
        let d = Matrix::diag(&[2.0, 1.0]);
        assert!((opnorm_pq_oracle(&d, 2.0, 2.0, 64).unwrap() - 2.0).abs() < 1e-9);
        assert!((opnorm_pq_oracle(&Matrix::identity(2), 2.0, 2.0, 64).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn all_ones_block() {
        // a × b all-ones matrix: ‖·‖_{q'→q} = a^{1/q} b^{1/q}... at least (ab)^{1/q}
        let (a, b, q) = (3usize, 5usize, 4.0);
        let m = Matrix::from_fn(a, b, |_, _| Complex64::new(1.0, 0.0));
        let v = opnorm_pq(&m, conjugate(q), q).unwrap().value;
        assert!(v >= ((a * b) as f64).powf(1.0 / q) - 1e-12);
    }

    #[test]
    fn closed_forms_flagged_exact() {
        let a = random_real(3, 4, 1);
        let r = opnorm_pq(&a, 1.0, 3.0).unwrap();
        assert!(r.exact);
        let r2 = opnorm_pq(&a, 1.0001, 3.0).unwrap();
        assert!((r.value - r2.value).abs() < 1e-3);
        assert!(opnorm_pq(&a, 2.0, f64::INFINITY).unwrap().exact);
        assert!(!opnorm_pq(&a, 1.5, 3.0).unwrap().exact);
    }

    #[test]
    fn ascent_agrees_with_angle_oracle() {
        let a = random_real(2, 2, 3);
        let v = opnorm_pq(&a, 3.0, 3.0).unwrap().value;
        let o = opnorm_pq_oracle(&a, 3.0, 3.0, 4096).unwrap();
        assert!((v - o).abs() < 1e-6, "{v} vs {o}");
        let v = opnorm_pq(&a, 1.5, 4.0).unwrap().value;
        let o = opnorm_pq_oracle(&a, 1.5, 4.0, 4096).unwrap();
        assert!((v - o).abs() < 1e-6, "{v} vs {o}");
    }

    #[test]
    fn oracle_limits() {
        let a = random_real(2, 4, 5);
        assert!(matches!(opnorm_pq_oracle(&a, 2.0, 2.0, 64), Err(Error::UnsupportedDimension(_))));
        assert!(opnorm_pq(&a, 0.5, 2.0).is_err());
        assert!(hoelder_vec_bound(&a, 2.5, 3.0).is_err());
        assert!(hoelder_vec_bound(&a, 1.5, f64::INFINITY).is_err());
    }

    #[test]
    fn hoelder_examples() {
        let n = 5;
        let i = Matrix::identity(n);
        assert!((hoelder_vec_bound(&i, 2.0, 2.0).unwrap() - (n as f64).sqrt()).abs() < 1e-14);
        let signs = Matrix::from_fn(n, n, |j, k| Complex64::new(if (j * 7 + k * 3) % 2 == 0 { 1.0 } else { -1.0 }, 0.0));
        let q = 3.0;
        let b = hoelder_vec_bound(&signs, conjugate(q), q).unwrap();
        assert!((b - (n as f64).powf(2.0 / q)).abs() < 1e-12);
        let a = random_real(3, 3, 9);
        let b = hoelder_vec_bound(&a, 4.0 / 3.0, 3.0).unwrap();
        assert!((b - lp_of_moduli(a.data().iter().map(|z| z.norm()), 3.0)).abs() < 1e-15);
        assert!(opnorm_pq(&a, 4.0 / 3.0, 3.0).unwrap().value <= b + 1e-9);
    }

    #[test]
    fn complex_matrix_dual_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = Matrix::from_fn(3, 4, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let (p, q) = (1.5, 3.0);
        let v = opnorm_pq(&a, p, q).unwrap().value;
        let w = opnorm_pq(&a.conj_transpose(), conjugate(q), conjugate(p)).unwrap().value;
        assert!((v - w).abs() < 1e-6 * v, "{v} vs {w}");
    }
}
