//! Convex-hull distance on finite product spaces and exhaustive checks of
//! the isoperimetric inequality it satisfies.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{bail_param, Error, Result};
use crate::vecnorms::{ke_numeric, UnconditionalNorm};

/// Largest number of points enumerated exhaustively.
pub const MAX_ENUMERATION: u64 = 1 << 20;
/// Largest number of factors handled by the bitmask solvers.
pub const MAX_FACTORS: usize = 64;
/// Certificate required of the min-norm-point solvers.
pub const GAP_TOL: f64 = 1e-10;

/// One factor of a product space: distinct points with their probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub points: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

impl Factor {
    pub fn new(points: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            bail_param!("factor needs matching nonempty points and probabilities");
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|p| p.len() != d || p.iter().any(|x| !x.is_finite())) {
            bail_param!("factor points must be finite vectors of one positive dimension");
        }
        for i in 0..points.len() {
            if points[..i].contains(&points[i]) {
                bail_param!("factor points must be distinct");
            }
        }
        if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            bail_param!("factor probabilities must lie in [0, 1] and sum to 1");
        }
        Ok(Self { points, probs })
    }

    /// Uniform distribution on the scalar points given.
    pub fn uniform_scalars(values: &[f64]) -> Result<Self> {
        let p = 1.0 / values.len() as f64;
        Self::new(values.iter().map(|&v| vec![v]).collect(), vec![p; values.len()])
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Largest Euclidean distance between two points.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                d = d.max(euclid(a, b));
            }
        }
        d
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Finite product probability space. Points are addressed by their
/// per-factor indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSpace {
    factors: Vec<Factor>,
}

impl ProductSpace {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            bail_param!("product space needs at least one factor");
        }
        if factors.len() > MAX_FACTORS {
            return Err(Error::TooLarge(format!("{} factors exceed the limit of {MAX_FACTORS}", factors.len())));
        }
        Ok(Self { factors })
    }

    /// `{0,1}^n` with the uniform measure.
    pub fn uniform_cube(n: usize) -> Result<Self> {
        Self::new(vec![Factor::uniform_scalars(&[0.0, 1.0])?; n])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    /// `|Ω|`, or `None` if it overflows `u64`.
    pub fn size(&self) -> Option<u64> {
        self.factors.iter().try_fold(1u64, |acc, f| acc.checked_mul(f.points.len() as u64))
    }

    fn enumerable_size(&self) -> Result<u64> {
        match self.size() {
            Some(s) if s <= MAX_ENUMERATION => Ok(s),
            _ => Err(Error::TooLarge(format!("|Ω| exceeds {MAX_ENUMERATION} points"))),
        }
    }

    /// Point with mixed-radix index `idx`, first factor fastest.
    pub fn point(&self, mut idx: u64) -> Vec<usize> {
        self.factors
            .iter()
            .map(|f| {
                let r = f.points.len() as u64;
                let d = idx % r;
                idx /= r;
                d as usize
            })
            .collect()
    }

    pub fn index(&self, x: &[usize]) -> u64 {
        let mut idx = 0u64;
        for (f, &d) in self.factors.iter().zip(x).rev() {
            idx = idx * f.points.len() as u64 + d as u64;
        }
        idx
    }

    pub fn prob(&self, x: &[usize]) -> f64 {
        self.factors.iter().zip(x).map(|(f, &d)| f.probs[d]).product()
    }

    fn check_point(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.factors.len() || x.iter().zip(&self.factors).any(|(&d, f)| d >= f.points.len()) {
            bail_param!("point does not belong to the product space");
        }
        Ok(())
    }
}

/// Coordinatewise disagreement indicator `h(x, y)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HammingPattern {
    pub bits: Vec<bool>,
}

impl HammingPattern {
    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_mask(&self) -> Result<u64> {
        if self.bits.len() > MAX_FACTORS {
            return Err(Error::TooLarge(format!("patterns longer than {MAX_FACTORS} bits")));
        }
        Ok(self.bits.iter().enumerate().fold(0u64, |m, (j, &b)| m | ((b as u64) << j)))
    }
}

pub fn hamming_pattern<T: PartialEq>(x: &[T], y: &[T]) -> Result<HammingPattern> {
    if x.len() != y.len() {
        bail_param!("points have different lengths {} and {}", x.len(), y.len());
    }
    Ok(HammingPattern { bits: x.iter().zip(y).map(|(a, b)| a != b).collect() })
}

fn pattern_mask<T: PartialEq>(x: &[T], y: &[T]) -> u64 {
    x.iter().zip(y).enumerate().fold(0u64, |m, (j, (a, b))| m | (((a != b) as u64) << j))
}

/// Minimal elements (under inclusion) of a set of masks. Dropping a
/// superset never changes the min-norm point since all vectors are
/// nonnegative.
pub fn minimal_patterns(masks: &[u64]) -> Vec<u64> {
    let mut v = masks.to_vec();
    v.sort_unstable_by_key(|m| (m.count_ones(), *m));
    v.dedup();
    let mut out: Vec<u64> = Vec::new();
    for m in v {
        if !out.iter().any(|&k| k & m == k) {
            out.push(m);
        }
    }
    out
}

/// Result of a min-norm-point computation over the hull of 0/1 vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MinNormPoint {
    pub value: f64,
    pub point: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
}

fn mask_vec(m: u64, n: usize) -> Vec<f64> {
    (0..n).map(|j| ((m >> j) & 1) as f64).collect()
}

fn dot_mask(x: &[f64], m: u64) -> f64 {
    let mut s = 0.0;
    let mut b = m;
    while b != 0 {
        let j = b.trailing_zeros() as usize;
        s += x[j];
        b &= b - 1;
    }
    s
}

fn combo(s: &[u64], lam: &[f64], n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (&m, &l) in s.iter().zip(lam) {
        let mut b = m;
        while b != 0 {
            let j = b.trailing_zeros() as usize;
            x[j] += l;
            b &= b - 1;
        }
    }
    x
}

/// Solves a small dense system by Gaussian elimination with partial
/// pivoting; `None` when numerically singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-13 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Barycentric coordinates of the min-norm point of the affine hull.
fn affine_minimizer(s: &[u64]) -> Option<Vec<f64>> {
    let k = s.len();
    let mut a = vec![vec![0.0; k + 1]; k + 1];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = (s[i] & s[j]).count_ones() as f64;
        }
        a[i][k] = 1.0;
        a[k][i] = 1.0;
    }
    let mut b = vec![0.0; k + 1];
    b[k] = 1.0;
    let mut x = solve_dense(a, b)?;
    x.truncate(k);
    Some(x)
}

/// Wolfe's active-set min-norm-point algorithm over `conv{patterns}` in ℝⁿ.
pub fn min_norm_point(patterns: &[u64], n: usize) -> MinNormPoint {
    assert!(!patterns.is_empty());
    let pats = minimal_patterns(patterns);
    if pats[0] == 0 {
        return MinNormPoint { value: 0.0, point: vec![0.0; n], gap: 0.0, iterations: 0 };
    }
    let mut s = vec![pats[0]];
    let mut lam = vec![1.0];
    let mut x = mask_vec(pats[0], n);
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..10_000 {
        iterations = it + 1;
        let xx: f64 = x.iter().map(|v| v * v).sum();
        let (p, xp) = pats
            .iter()
            .map(|&m| (m, dot_mask(&x, m)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        gap = xx - xp;
        if gap <= GAP_TOL || s.contains(&p) {
            break;
        }
        s.push(p);
        lam.push(0.0);
        loop {
            let Some(alpha) = affine_minimizer(&s) else {
                // affinely dependent corral: drop the lightest point
                let i = argmin(&lam);
                s.remove(i);
                lam.remove(i);
                renormalize(&mut lam);
                break;
            };
            if alpha.iter().all(|&a| a > 1e-14) {
                lam = alpha;
                break;
            }
            let mut theta = 1.0_f64;
            for (a, l) in alpha.iter().zip(&lam) {
                if *a <= 1e-14 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lam.iter_mut().zip(&alpha) {
                *l = theta * a + (1.0 - theta) * *l;
            }
            let mut i = 0;
            let mut removed = false;
            while i < s.len() {
                if lam[i] <= 1e-14 {
                    s.remove(i);
                    lam.remove(i);
                    removed = true;
                } else {
                    i += 1;
                }
            }
            if !removed {
                let i = argmin(&lam);
                s.remove(i);
                lam.remove(i);
            }
            renormalize(&mut lam);
        }
        x = combo(&s, &lam, n);
    }
    let value = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    MinNormPoint { value, point: x, gap: gap.max(0.0), iterations }
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).expect("nonempty")
}

fn renormalize(lam: &mut [f64]) {
    let s: f64 = lam.iter().sum();
    lam.iter_mut().for_each(|l| *l /= s);
}

/// Frank–Wolfe with away steps minimizing `Σ z_j^q / q` over
/// `conv{patterns}`; returns the ℓq norm of the final iterate.
pub fn min_norm_point_fw(patterns: &[u64], n: usize, q: f64) -> MinNormPoint {
    assert!(!patterns.is_empty() && q > 1.0 && q.is_finite());
    let pats = minimal_patterns(patterns);
    let mut lam = vec![0.0; pats.len()];
    lam[0] = 1.0;
    let mut z = mask_vec(pats[0], n);
    let grad = |z: &[f64]| -> Vec<f64> { z.iter().map(|&v| if v > 0.0 { v.powf(q - 1.0) } else { 0.0 }).collect() };
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..100_000 {
        iterations = it + 1;
        let g = grad(&z);
        let gz: f64 = g.iter().zip(&z).map(|(a, b)| a * b).sum();
        let (s, gs) = (0..pats.len())
            .map(|i| (i, dot_mask(&g, pats[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        gap = gz - gs;
        if gap <= GAP_TOL {
            break;
        }
        let (a, ga) = (0..pats.len())
            .filter(|&i| lam[i] > 0.0)
            .map(|i| (i, dot_mask(&g, pats[i])))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("active set nonempty");
        let toward = gap >= ga - gz;
        let (d, gmax) = if toward {
            let sv = mask_vec(pats[s], n);
            (sv.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>(), 1.0)
        } else {
            let av = mask_vec(pats[a], n);
            (z.iter().zip(&av).map(|(a, b)| a - b).collect::<Vec<_>>(), lam[a] / (1.0 - lam[a]))
        };
        let gamma = line_search(&z, &d, gmax, q);
        if gamma <= 0.0 {
            break;
        }
        for (zi, di) in z.iter_mut().zip(&d) {
            *zi = (*zi + gamma * di).max(0.0);
        }
        if toward {
            lam.iter_mut().for_each(|l| *l *= 1.0 - gamma);
            lam[s] += gamma;
        } else {
            lam.iter_mut().for_each(|l| *l *= 1.0 + gamma);
            lam[a] -= gamma;
            if gamma >= gmax * (1.0 - 1e-15) {
                lam[a] = 0.0;
            }
        }
    }
    let value = if q == 2.0 {
        z.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        crate::vecnorms::lp_of_moduli(z.iter().copied(), q)
    };
    MinNormPoint { value, point: z, gap: gap.max(0.0), iterations }
}

fn line_search(z: &[f64], d: &[f64], gmax: f64, q: f64) -> f64 {
    let slope = |g: f64| -> f64 {
        z.iter()
            .zip(d)
            .map(|(zi, di)| {
                let v = (zi + g * di).max(0.0);
                if v > 0.0 {
                    v.powf(q - 1.0) * di
                } else {
                    0.0
                }
            })
            .sum()
    };
    if q == 2.0 {
        let dd: f64 = d.iter().map(|v| v * v).sum();
        if dd == 0.0 {
            return 0.0;
        }
        let zd: f64 = z.iter().zip(d).map(|(a, b)| a * b).sum();
        return (-zd / dd).clamp(0.0, gmax);
    }
    if slope(0.0) >= 0.0 {
        return 0.0;
    }
    if slope(gmax) <= 0.0 {
        return gmax;
    }
    let (mut lo, mut hi) = (0.0, gmax);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn patterns_from<T: PartialEq>(a: &[Vec<T>], x: &[T]) -> Result<Vec<u64>> {
    if a.is_empty() {
        return Err(Error::Domain("convex distance to an empty set is undefined".into()));
    }
    if x.len() > MAX_FACTORS {
        return Err(Error::TooLarge(format!("points longer than {MAX_FACTORS} coordinates")));
    }
    a.iter()
        .map(|y| {
            if y.len() != x.len() {
                bail_param!("points have different lengths {} and {}", x.len(), y.len());
            }
            Ok(pattern_mask(x, y))
        })
        .collect()
}

/// `f_c(A, x)`: Euclidean distance from the origin to the convex hull of
/// the disagreement patterns `h(x, y)`, `y ∈ A`.
pub fn convex_distance<T: PartialEq>(a: &[Vec<T>], x: &[T]) -> Result<f64> {
    let pats = patterns_from(a, x)?;
    Ok(certified(&pats, x.len())?.value)
}

fn certified(pats: &[u64], n: usize) -> Result<MinNormPoint> {
    let r = min_norm_point(pats, n);
    if r.gap <= GAP_TOL {
        return Ok(r);
    }
    let fw = min_norm_point_fw(pats, n, 2.0);
    if fw.gap <= GAP_TOL {
        return Ok(fw);
    }
    Err(Error::Domain(format!("min-norm point not certified (gap {:.3e})", r.gap.min(fw.gap))))
}

/// ℓq analogue of `f_c`: least ℓq norm over the same hull.
pub fn convex_distance_lq<T: PartialEq>(a: &[Vec<T>], x: &[T], q: f64) -> Result<f64> {
    if !(q > 1.0 && q.is_finite()) {
        bail_param!("q must lie in (1, ∞), got {q}");
    }
    let pats = patterns_from(a, x)?;
    Ok(min_norm_point_fw(&pats, x.len(), q).value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub t: f64,
    pub prob: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetryReport {
    pub num_factors: usize,
    pub omega_size: u64,
    pub subset_size: usize,
    pub prob_a: f64,
    /// `∫ exp(f_c²/4) dP`
    pub lhs: f64,
    /// `1 / P(A)`
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
    pub tail: Vec<TailCheck>,
}

/// Relative slack absorbing rounding in the exact enumeration.
const ENUM_SLACK: f64 = 1e-9;

/// Enumerates `Ω` and checks `∫ exp(f_c(A,·)²/4) dP ≤ 1/P(A)` together with
/// the tail form `P(f_c ≥ t) ≤ exp(-t²/4)/P(A)`. `a` is the indicator of
/// `A` indexed like [`ProductSpace::point`].
pub fn verify_isoperimetry(space: &ProductSpace, a: &[bool]) -> Result<IsoperimetryReport> {
    let size = space.enumerable_size()?;
    if a.len() as u64 != size {
        bail_param!("indicator has length {} but |Ω| = {size}", a.len());
    }
    let members: Vec<Vec<usize>> = (0..size).filter(|&i| a[i as usize]).map(|i| space.point(i)).collect();
    let prob_a: f64 = members.iter().map(|y| space.prob(y)).sum();
    if members.is_empty() || prob_a <= 0.0 {
        return Err(Error::Domain("P(A) must be positive".into()));
    }
    let n = space.num_factors();
    let vals: Vec<(f64, f64)> = (0..size)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let x = space.point(i);
            let fc = if a[i as usize] {
                0.0
            } else {
                let pats: Vec<u64> = members.iter().map(|y| pattern_mask(&x, y)).collect();
                certified(&pats, n)?.value
            };
            Ok((space.prob(&x), fc))
        })
        .collect::<Result<_>>()?;
    let lhs: f64 = vals.iter().map(|(p, f)| p * (f * f / 4.0).exp()).sum();
    let rhs = 1.0 / prob_a;
    let fmax = (n as f64).sqrt();
    let tail = (1..=20)
        .map(|i| {
            let t = fmax * i as f64 / 20.0;
            let prob: f64 = vals.iter().filter(|(_, f)| *f >= t - 1e-9).map(|(p, _)| p).sum();
            let bound = (-t * t / 4.0).exp() / prob_a;
            TailCheck { t, prob, bound, pass: prob <= bound * (1.0 + ENUM_SLACK) }
        })
        .collect::<Vec<_>>();
    let pass = lhs <= rhs * (1.0 + ENUM_SLACK) && tail.iter().all(|c| c.pass);
    Ok(IsoperimetryReport {
        num_factors: n,
        omega_size: size,
        subset_size: members.len(),
        prob_a,
        lhs,
        rhs,
        margin: rhs - lhs,
        pass,
        tail,
    })
}

/// Random nonempty subset of `{0, …, size-1}` as an indicator; the
/// cardinality is log-uniform on `[1, min(size, cap)]`.
pub fn sample_subset<R: Rng + ?Sized>(size: usize, cap: usize, rng: &mut R) -> Vec<bool> {
    assert!(size > 0 && cap > 0);
    let top = size.min(cap) as f64;
    let k = ((rng.random::<f64>() * (top + 1.0).ln()).exp().floor() as usize).clamp(1, size.min(cap));
    let mut idx: Vec<usize> = (0..size).collect();
    for i in 0..k {
        let j = rng.random_range(i..size);
        idx.swap(i, j);
    }
    let mut ind = vec![false; size];
    for &i in &idx[..k] {
        ind[i] = true;
    }
    ind
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeDistReport {
    /// `dist(x, conv A)` in the ℓ_E sum of the factors.
    pub dist: f64,
    /// Solver certificate for `dist` (Frank–Wolfe gap on the weight simplex).
    pub dist_gap: f64,
    pub ke: f64,
    pub fc: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Checks `K_E(dist(x, conv A)) ≤ f_c(A, x)` where the distance is taken in
/// the ℓ_E sum of the (Euclidean) factors, which must have diameter ≤ 1.
pub fn verify_ke_dist_bound(space: &ProductSpace, e: &UnconditionalNorm, a: &[Vec<usize>], x: &[usize]) -> Result<KeDistReport> {
    if e.dim != space.num_factors() {
        bail_param!("norm dimension {} differs from the number of factors {}", e.dim, space.num_factors());
    }
    for f in space.factors() {
        if f.diameter() > 1.0 + 1e-12 {
            bail_param!("factor diameter {} exceeds 1", f.diameter());
        }
    }
    let fc = convex_distance(a, x)?;
    let (dist, dist_gap) = dist_to_hull(space, e, a, x)?;
    let t = dist.min(e.ones_norm());
    let ke = if t <= 0.0 { 0.0 } else { ke_numeric(e, t)? };
    let margin = fc - ke;
    Ok(KeDistReport { dist, dist_gap, ke, fc, margin, pass: margin >= -1e-8 })
}

/// `dist(x, conv A)` in the ℓ_E sum of the factors, by projected gradient on
/// the simplex of convex weights with several restarts.
pub fn dist_to_hull(space: &ProductSpace, e: &UnconditionalNorm, a: &[Vec<usize>], x: &[usize]) -> Result<(f64, f64)> {
    if a.is_empty() {
        return Err(Error::Domain("distance to an empty set is undefined".into()));
    }
    space.check_point(x)?;
    for y in a {
        space.check_point(y)?;
    }
    let obj = HullObjective::new(space, e, a, x);
    let k = a.len();
    let mut starts = vec![vec![1.0 / k as f64; k]];
    for i in 0..k.min(4) {
        let mut v = vec![0.0; k];
        v[i] = 1.0;
        starts.push(v);
    }
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0x6469_7374);
    while starts.len() < 8 {
        let mut v: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        renormalize(&mut v);
        starts.push(v);
    }
    let mut best = (f64::INFINITY, f64::INFINITY);
    for s in starts {
        let r = obj.minimize(s);
        if r.0 < best.0 {
            best = r;
        }
    }
    Ok(best)
}

struct HullObjective<'a> {
    e: &'a UnconditionalNorm,
    /// `x_j` per factor
    x: Vec<Vec<f64>>,
    /// `y_j` per member, per factor
    ys: Vec<Vec<Vec<f64>>>,
}

impl<'a> HullObjective<'a> {
    fn new(space: &ProductSpace, e: &'a UnconditionalNorm, a: &[Vec<usize>], x: &[usize]) -> Self {
        let coords = |p: &[usize]| -> Vec<Vec<f64>> {
            space.factors().iter().zip(p).map(|(f, &d)| f.points[d].clone()).collect()
        };
        Self { e, x: coords(x), ys: a.iter().map(|y| coords(y)).collect() }
    }

    fn residuals(&self, lam: &[f64]) -> Vec<Vec<f64>> {
        self.x
            .iter()
            .enumerate()
            .map(|(j, xj)| {
                let mut r: Vec<f64> = xj.iter().map(|v| -v).collect();
                for (y, &l) in self.ys.iter().zip(lam) {
                    for (ri, yi) in r.iter_mut().zip(&y[j]) {
                        *ri += l * yi;
                    }
                }
                r
            })
            .collect()
    }

    fn value_grad(&self, lam: &[f64]) -> (f64, Vec<f64>) {
        let res = self.residuals(lam);
        let u: Vec<f64> = res.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
        let val = self.e.norm(&u).expect("dimension checked");
        let g = self.e.gradient(&u);
        let grad = self
            .ys
            .iter()
            .map(|y| {
                (0..u.len())
                    .filter(|&j| u[j] > 0.0)
                    .map(|j| g[j] * res[j].iter().zip(&y[j]).map(|(r, yi)| r * yi).sum::<f64>() / u[j])
                    .sum()
            })
            .collect();
        (val, grad)
    }

    fn value(&self, lam: &[f64]) -> f64 {
        let u: Vec<f64> = self.residuals(lam).iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
        self.e.norm(&u).expect("dimension checked")
    }

    fn minimize(&self, mut lam: Vec<f64>) -> (f64, f64) {
        let (mut f, mut g) = self.value_grad(&lam);
        let mut eta = 1.0;
        let mut gap = f64::INFINITY;
        for _ in 0..20_000 {
            let gl: f64 = g.iter().zip(&lam).map(|(a, b)| a * b).sum();
            gap = gl - g.iter().copied().fold(f64::INFINITY, f64::min);
            if gap <= GAP_TOL || f == 0.0 {
                break;
            }
            let mut moved = false;
            for _ in 0..60 {
                let trial = project_simplex(&lam.iter().zip(&g).map(|(l, gi)| l - eta * gi).collect::<Vec<_>>());
                let step: Vec<f64> = trial.iter().zip(&lam).map(|(a, b)| a - b).collect();
                let lin: f64 = step.iter().zip(&g).map(|(s, gi)| s * gi).sum();
                let sq: f64 = step.iter().map(|s| s * s).sum();
                if sq == 0.0 {
                    break;
                }
                let ft = self.value(&trial);
                if ft <= f + lin + sq / (2.0 * eta) {
                    lam = trial;
                    moved = ft < f;
                    eta *= 2.0;
                    break;
                }
                eta *= 0.5;
            }
            if !moved {
                break;
            }
            (f, g) = self.value_grad(&lam);
        }
        (f, gap.max(0.0))
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}
