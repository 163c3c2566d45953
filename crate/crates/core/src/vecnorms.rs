//! Vector norms on ℝᴺ (ℓp, Lorentz, Orlicz) and the modulus
//! `K_E(t) = inf{ |x| : ‖x‖_E ≥ t, ‖x‖_∞ ≤ 1 }` of a 1-unconditional norm.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail_param, Error, Result};

/// Anything with a modulus; lets the ℓp norm take real or complex vectors.
pub trait Modulus: Copy {
    fn modulus(self) -> f64;
}

impl Modulus for f64 {
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Modulus for Complex64 {
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Conjugate exponent `p' = p/(p-1)`, with `1' = ∞` and `∞' = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        bail_param!("exponent must lie in [1, ∞], got {p}");
    }
    Ok(())
}

/// ℓp norm of the moduli yielded by `it`, scaled by the maximum to avoid
/// overflow. `p` is assumed valid.
pub(crate) fn lp_of_moduli<I: IntoIterator<Item = f64> + Clone>(it: I, p: f64) -> f64 {
    let max = it.clone().into_iter().fold(0.0_f64, f64::max);
    if max == 0.0 || p.is_infinite() {
        return max;
    }
    let s: f64 = if p == 2.0 {
        it.into_iter().map(|a| (a / max) * (a / max)).sum()
    } else if p == 1.0 {
        return it.into_iter().sum();
    } else if p.fract() == 0.0 && p <= 16.0 {
        let k = p as i32;
        it.into_iter().map(|a| (a / max).powi(k)).sum()
    } else {
        it.into_iter().map(|a| (a / max).powf(p)).sum()
    };
    max * s.powf(1.0 / p)
}

/// `(Σ |v_j|^p)^{1/p}`, or `max |v_j|` when `p = ∞`.
pub fn lp_norm<T: Modulus>(v: &[T], p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(lp_of_moduli(v.iter().map(|x| x.modulus()), p))
}

/// Nonincreasing rearrangement of `|v_j|`.
pub fn decreasing_rearrangement(v: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    a.sort_by(|x, y| y.total_cmp(x));
    a
}

/// Weights of a Lorentz norm: positive and nonincreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LorentzWeights(Vec<f64>);

impl LorentzWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            bail_param!("Lorentz weights must be nonempty");
        }
        if w.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            bail_param!("Lorentz weights must be finite and strictly positive");
        }
        if w.windows(2).any(|p| p[1] > p[0]) {
            bail_param!("Lorentz weights must be nonincreasing");
        }
        Ok(Self(w))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n.max(1)])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for LorentzWeights {
    type Error = Error;
    fn try_from(w: Vec<f64>) -> Result<Self> {
        Self::new(w)
    }
}

impl From<LorentzWeights> for Vec<f64> {
    fn from(w: LorentzWeights) -> Self {
        w.0
    }
}

/// `(Σ w_j a_j^p)^{1/p}` with `a` the nonincreasing rearrangement of `|v|`.
pub fn lorentz_norm(v: &[f64], w: &LorentzWeights, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if p.is_infinite() {
        bail_param!("Lorentz exponent must be finite");
    }
    if v.len() != w.len() {
        bail_param!("length mismatch: vector {} vs weights {}", v.len(), w.len());
    }
    let a = decreasing_rearrangement(v);
    let max = a.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = a
        .iter()
        .zip(w.as_slice())
        .map(|(x, wj)| wj * (x / max).powf(p))
        .sum();
    Ok(max * s.powf(1.0 / p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OrliczKind {
    /// `ψ(t) = t^p`
    Power { p: f64 },
    /// `ψ(t) = c·t^p`
    ScaledPower { c: f64, p: f64 },
    /// Linear interpolation through `(t, ψ(t))` breakpoints starting at
    /// `(0, 0)`, extended past the last breakpoint with the last slope.
    PiecewiseLinear { breakpoints: Vec<(f64, f64)> },
}

/// A validated Orlicz function: convex, nondecreasing, `ψ(0) = 0`,
/// `ψ(t) → ∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OrliczKind", into = "OrliczKind")]
pub struct OrliczFunction {
    kind: OrliczKind,
}

impl TryFrom<OrliczKind> for OrliczFunction {
    type Error = Error;
    fn try_from(kind: OrliczKind) -> Result<Self> {
        Self::new(kind)
    }
}

impl From<OrliczFunction> for OrliczKind {
    fn from(f: OrliczFunction) -> Self {
        f.kind
    }
}

const CONVEXITY_GRID: usize = 64;
const CONVEXITY_TOL: f64 = 1e-10;

impl OrliczFunction {
    pub fn new(kind: OrliczKind) -> Result<Self> {
        match &kind {
            OrliczKind::Power { p } => check_power(1.0, *p)?,
            OrliczKind::ScaledPower { c, p } => check_power(*c, *p)?,
            OrliczKind::PiecewiseLinear { breakpoints } => check_breakpoints(breakpoints)?,
        }
        let f = Self { kind };
        f.check_shape()?;
        Ok(f)
    }

    pub fn power(p: f64) -> Result<Self> {
        Self::new(OrliczKind::Power { p })
    }

    pub fn kind(&self) -> &OrliczKind {
        &self.kind
    }

    /// Returns `(c, p)` when `ψ(t) = c·t^p`.
    pub fn as_power(&self) -> Option<(f64, f64)> {
        match self.kind {
            OrliczKind::Power { p } => Some((1.0, p)),
            OrliczKind::ScaledPower { c, p } => Some((c, p)),
            OrliczKind::PiecewiseLinear { .. } => None,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match &self.kind {
            OrliczKind::Power { p } => t.powf(*p),
            OrliczKind::ScaledPower { c, p } => c * t.powf(*p),
            OrliczKind::PiecewiseLinear { breakpoints } => {
                let i = breakpoints.partition_point(|(s, _)| *s <= t);
                let (s0, v0, slope) = segment(breakpoints, i);
                v0 + slope * (t - s0)
            }
        }
    }

    /// Right derivative.
    pub fn derivative(&self, t: f64) -> f64 {
        match &self.kind {
            OrliczKind::Power { p } => p * t.powf(p - 1.0),
            OrliczKind::ScaledPower { c, p } => c * p * t.powf(p - 1.0),
            OrliczKind::PiecewiseLinear { breakpoints } => {
                let i = breakpoints.partition_point(|(s, _)| *s <= t);
                segment(breakpoints, i).2
            }
        }
    }

    fn scale(&self) -> f64 {
        match &self.kind {
            OrliczKind::PiecewiseLinear { breakpoints } => breakpoints.last().map_or(1.0, |b| b.0),
            _ => 1.0,
        }
    }

    // Midpoint convexity and monotonicity on a geometric grid.
    fn check_shape(&self) -> Result<()> {
        let s = self.scale();
        let lo = s * 1e-3;
        let ratio = (1e6_f64).powf(1.0 / (CONVEXITY_GRID - 1) as f64);
        let mut grid = vec![0.0];
        grid.extend((0..CONVEXITY_GRID).map(|i| lo * ratio.powi(i as i32)));
        let vals: Vec<f64> = grid.iter().map(|&t| self.eval(t)).collect();
        if vals[0] != 0.0 {
            bail_param!("Orlicz function must vanish at 0");
        }
        for w in vals.windows(2) {
            if w[1] < w[0] - CONVEXITY_TOL * w[0].abs().max(1.0) {
                bail_param!("Orlicz function must be nondecreasing");
            }
        }
        for i in 0..grid.len() {
            for j in i + 1..grid.len() {
                let mid = self.eval(0.5 * (grid[i] + grid[j]));
                let avg = 0.5 * (vals[i] + vals[j]);
                if mid > avg + CONVEXITY_TOL * avg.abs().max(1.0) {
                    bail_param!(
                        "Orlicz function fails the midpoint convexity test between {} and {}",
                        grid[i],
                        grid[j]
                    );
                }
            }
        }
        Ok(())
    }
}

fn check_power(c: f64, p: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        bail_param!("Orlicz scale must be positive, got {c}");
    }
    if !(p.is_finite() && p >= 1.0) {
        bail_param!("Orlicz power must be finite and ≥ 1, got {p}");
    }
    Ok(())
}

fn check_breakpoints(b: &[(f64, f64)]) -> Result<()> {
    if b.len() < 2 {
        bail_param!("piecewise-linear Orlicz function needs at least two breakpoints");
    }
    if b[0] != (0.0, 0.0) {
        bail_param!("first breakpoint must be (0, 0)");
    }
    if b.iter().any(|(s, v)| !s.is_finite() || !v.is_finite()) {
        bail_param!("breakpoints must be finite");
    }
    if b.windows(2).any(|w| w[1].0 <= w[0].0) {
        bail_param!("breakpoint abscissae must be strictly increasing");
    }
    let (s0, v0) = b[b.len() - 2];
    let (s1, v1) = b[b.len() - 1];
    if (v1 - v0) / (s1 - s0) <= 0.0 {
        bail_param!("last slope must be positive so that ψ(t) → ∞");
    }
    Ok(())
}

// (start, value at start, slope) of the segment containing points with
// partition index `i`.
fn segment(b: &[(f64, f64)], i: usize) -> (f64, f64, f64) {
    let k = i.clamp(1, b.len() - 1);
    let (s0, v0) = b[k - 1];
    let (s1, v1) = b[k];
    (s0, v0, (v1 - v0) / (s1 - s0))
}

const BISECTION_ITERS: usize = 200;
const BISECTION_REL: f64 = 1e-12;

/// `inf{ρ > 0 : Σ ψ(|v_j|/ρ) ≤ 1}` by bisection on ρ.
pub fn orlicz_norm(v: &[f64], psi: &OrliczFunction) -> f64 {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return 0.0;
    }
    if let Some((c, p)) = psi.as_power() {
        // Closed form; the bisection below is the general path.
        return c.powf(1.0 / p) * lp_of_moduli(v.iter().map(|x| x.abs()), p);
    }
    orlicz_norm_bisect(v, psi)
}

pub(crate) fn orlicz_norm_bisect(v: &[f64], psi: &OrliczFunction) -> f64 {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return 0.0;
    }
    let sum = |rho: f64| -> f64 { v.iter().map(|x| psi.eval(x.abs() / rho)).sum() };
    let mut hi = max;
    while sum(hi) > 1.0 {
        hi *= 2.0;
    }
    let mut lo = hi;
    while sum(lo) <= 1.0 {
        lo *= 0.5;
        if lo < max * 1e-300 {
            return lo;
        }
    }
    for _ in 0..BISECTION_ITERS {
        if hi - lo <= BISECTION_REL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if sum(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormKind {
    Lq { q: f64 },
    Lorentz { weights: LorentzWeights, p: f64 },
    Orlicz { psi: OrliczFunction },
}

/// A 1-unconditional norm on ℝᴺ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnconditionalNorm {
    pub kind: NormKind,
    pub dim: usize,
}

impl UnconditionalNorm {
    pub fn lq(q: f64, dim: usize) -> Result<Self> {
        check_exponent(q)?;
        Self::checked(NormKind::Lq { q }, dim)
    }

    pub fn lorentz(weights: LorentzWeights, p: f64) -> Result<Self> {
        check_exponent(p)?;
        if p.is_infinite() {
            bail_param!("Lorentz exponent must be finite");
        }
        let dim = weights.len();
        Self::checked(NormKind::Lorentz { weights, p }, dim)
    }

    pub fn orlicz(psi: OrliczFunction, dim: usize) -> Result<Self> {
        Self::checked(NormKind::Orlicz { psi }, dim)
    }

    fn checked(kind: NormKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            bail_param!("norm dimension must be positive");
        }
        Ok(Self { kind, dim })
    }

    /// Re-checks invariants of a value built by hand or deserialized.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            bail_param!("norm dimension must be positive");
        }
        match &self.kind {
            NormKind::Lq { q } => check_exponent(*q),
            NormKind::Lorentz { weights, p } => {
                check_exponent(*p)?;
                if p.is_infinite() {
                    bail_param!("Lorentz exponent must be finite");
                }
                if weights.len() != self.dim {
                    bail_param!("Lorentz weights have length {} but dim is {}", weights.len(), self.dim);
                }
                Ok(())
            }
            NormKind::Orlicz { .. } => Ok(()),
        }
    }

    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim {
            bail_param!("length mismatch: vector {} vs norm dimension {}", v.len(), self.dim);
        }
        match &self.kind {
            NormKind::Lq { q } => lp_norm(v, *q),
            NormKind::Lorentz { weights, p } => lorentz_norm(v, weights, *p),
            NormKind::Orlicz { psi } => Ok(orlicz_norm(v, psi)),
        }
    }

    /// `‖(1, …, 1)‖_E`, the largest value of the norm on the unit cube.
    pub fn ones_norm(&self) -> f64 {
        self.norm(&vec![1.0; self.dim]).expect("dimension matches")
    }

    /// A (sub)gradient of the norm at a vector of nonnegative magnitudes.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let n = self.norm(u).unwrap_or(0.0);
        if n == 0.0 {
            return vec![0.0; u.len()];
        }
        match &self.kind {
            NormKind::Lq { q } if q.is_infinite() => {
                let (imax, _) = u
                    .iter()
                    .enumerate()
                    .fold((0, f64::MIN), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
                let mut g = vec![0.0; u.len()];
                g[imax] = 1.0;
                g
            }
            NormKind::Lq { q } => u.iter().map(|&x| (x / n).powf(q - 1.0)).collect(),
            NormKind::Lorentz { weights, p } => {
                let mut idx: Vec<usize> = (0..u.len()).collect();
                idx.sort_by(|&a, &b| u[b].total_cmp(&u[a]));
                let mut g = vec![0.0; u.len()];
                for (rank, &j) in idx.iter().enumerate() {
                    g[j] = weights.as_slice()[rank] * (u[j] / n).powf(p - 1.0);
                }
                g
            }
            NormKind::Orlicz { psi } => {
                let d: Vec<f64> = u.iter().map(|&x| psi.derivative(x / n)).collect();
                let denom: f64 = d.iter().zip(u).map(|(di, x)| di * x / n).sum();
                if denom <= 0.0 {
                    return vec![0.0; u.len()];
                }
                d.iter().map(|di| di / denom).collect()
            }
        }
    }
}

fn check_level(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        bail_param!("level t must be positive and finite, got {t}");
    }
    Ok(())
}

/// Numerical value of `K_E(t)`; `+∞` when no point of the unit cube
/// reaches norm `t`.
///
/// Exact for ℓq and Lorentz norms and for power-type Orlicz functions. For
/// other Orlicz functions the value is the best feasible point found by a
/// multi-start projected-gradient search, hence an upper bound on `K_E(t)`.
pub fn ke_numeric(e: &UnconditionalNorm, t: f64) -> Result<f64> {
    check_level(t)?;
    e.validate()?;
    let top = e.ones_norm();
    if t > top * (1.0 + 1e-14) {
        return Ok(f64::INFINITY);
    }
    let t = t.min(top);
    let n = e.dim;
    Ok(match &e.kind {
        NormKind::Lq { q } if q.is_infinite() => t,
        NormKind::Lq { q } => ke_lorentz(&vec![1.0; n], *q, t),
        NormKind::Lorentz { weights, p } => ke_lorentz(weights.as_slice(), *p, t),
        NormKind::Orlicz { psi } => match psi.as_power() {
            Some((c, p)) => ke_lorentz(&vec![1.0; n], p, t / c.powf(1.0 / p)),
            None => ke_orlicz_search(psi, n, t),
        },
    })
}

// K for ‖x‖ = (Σ w_j a_j^p)^{1/p}. With b = a², minimize Σ b subject to
// Σ w_j b_j^{p/2} ≥ t^p on [0,1]^N.
fn ke_lorentz(w: &[f64], p: f64, t: f64) -> f64 {
    let target = t.powf(p);
    if p >= 2.0 {
        ke_lorentz_vertices(w, p, target)
    } else {
        ke_lorentz_waterfill(w, p, target)
    }
}

// Convex case: candidates (1 × k, c, 0, …) with ones on the largest weights.
fn ke_lorentz_vertices(w: &[f64], p: f64, target: f64) -> f64 {
    let mut best = f64::INFINITY;
    let mut head = 0.0;
    for k in 0..=w.len() {
        let need = target - head;
        if need <= 1e-14 * target {
            best = best.min((k as f64).sqrt());
            break;
        }
        if k < w.len() && need <= w[k] {
            let c = (need / w[k]).powf(1.0 / p);
            best = best.min((k as f64 + c * c).sqrt());
        }
        if k < w.len() {
            head += w[k];
        }
    }
    best
}

// Concave case: for a budget s = Σ b the maximum of Σ w_j b_j^{p/2} is
// attained at b_j = min(1, λ w_j^{2/(2-p)}); bisect on s. The exponent
// blows up as p → 2, so λ is searched in log scale against w_j / max w.
fn ke_lorentz_waterfill(w: &[f64], p: f64, target: f64) -> f64 {
    let e = 2.0 / (2.0 - p);
    let wmax = w.iter().fold(0.0_f64, |m, &x| m.max(x));
    let logs: Vec<f64> = w.iter().map(|&x| e * (x / wmax).ln()).collect();
    let floor = logs.iter().copied().filter(|l| l.is_finite()).fold(0.0_f64, f64::min);
    let n = w.len() as f64;
    let half = p / 2.0;
    let best_value = |s: f64| -> f64 {
        let fill = |mu: f64| -> f64 { logs.iter().map(|&l| (mu + l).min(0.0).exp()).sum() };
        // fill(ln(s/n)) ≤ s, and every positive weight is saturated at -floor
        let (mut lo, mut hi) = ((s / n).ln(), -floor);
        let mu = if fill(hi) <= s {
            hi
        } else {
            for _ in 0..BISECTION_ITERS {
                let mid = 0.5 * (lo + hi);
                if fill(mid) < s {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                    break;
                }
            }
            0.5 * (lo + hi)
        };
        logs.iter().zip(w).map(|(&l, &wj)| wj * (half * (mu + l).min(0.0)).exp()).sum()
    };
    let (mut lo, mut hi) = (0.0, w.len() as f64);
    if best_value(hi) < target {
        return f64::INFINITY;
    }
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if best_value(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi.sqrt()
}

const ORLICZ_RANDOM_STARTS: usize = 8;
const ORLICZ_MAX_STEPS: usize = 2000;

// Scale direction d so that Σ ψ(α d_j / t) = 1; None if the cube is left
// first.
fn retract(psi: &OrliczFunction, d: &[f64], t: f64) -> Option<Vec<f64>> {
    let dmax = d.iter().fold(0.0_f64, |m, &x| m.max(x));
    if dmax <= 0.0 {
        return None;
    }
    let level = |a: f64| -> f64 { d.iter().map(|&x| psi.eval(a * x / t)).sum() };
    let mut hi = 1.0 / dmax;
    if level(hi) < 1.0 {
        return None;
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if level(mid) >= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(d.iter().map(|&x| (hi * x).min(1.0)).collect())
}

fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn ke_orlicz_search(psi: &OrliczFunction, n: usize, t: f64) -> f64 {
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for k in 0..n {
        let mut d = vec![0.0; n];
        for v in d.iter_mut().take(k) {
            *v = 1.0;
        }
        // fractional coordinate swept; retraction fixes the scale
        for frac in [0.25, 0.5, 1.0] {
            d[k] = frac;
            starts.push(d.clone());
        }
    }
    starts.push(vec![1.0; n]);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b65_6f72);
    for _ in 0..ORLICZ_RANDOM_STARTS {
        starts.push((0..n).map(|_| rng.random::<f64>()).collect());
    }

    let mut best = f64::INFINITY;
    for d in starts {
        let Some(mut x) = retract(psi, &d, t) else { continue };
        let mut val = euclid(&x);
        let mut step = 0.5;
        for _ in 0..ORLICZ_MAX_STEPS {
            let g: Vec<f64> = x.iter().map(|&xi| psi.derivative(xi / t) / t).collect();
            let gg: f64 = g.iter().map(|v| v * v).sum();
            if gg == 0.0 {
                break;
            }
            let xg: f64 = x.iter().zip(&g).map(|(a, b)| a * b).sum();
            let dir: Vec<f64> = x.iter().zip(&g).map(|(&xi, &gi)| -(xi - xg / gg * gi)).collect();
            let mut improved = false;
            while step > 1e-14 {
                let trial: Vec<f64> =
                    x.iter().zip(&dir).map(|(&xi, &di)| (xi + step * di).clamp(0.0, 1.0)).collect();
                if let Some(y) = retract(psi, &trial, t) {
                    let v = euclid(&y);
                    if v < val * (1.0 - 1e-15) {
                        x = y;
                        val = v;
                        improved = true;
                        step = (step * 2.0).min(1.0);
                        break;
                    }
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.min(val);
    }
    best
}

/// Closed-form lower bound on `K_E(t)`.
///
/// * ℓq, `q ≥ 2`: `t^{q/2}`; for `1 ≤ q < 2` the Lorentz bound with unit
///   weights and `r' = 2/q`; for `q = ∞` the trivial bound `t`.
/// * Lorentz `(w, p)`: `‖w‖_r^{-r'/2} t^{p r'/2}`, requires `r` with
///   `max{1, 2/p} ≤ r' < ∞`.
/// * Orlicz: `inf_{0<u≤1} u / √ψ(u/t)`.
pub fn ke_bound(e: &UnconditionalNorm, t: f64, r: Option<f64>) -> Result<f64> {
    check_level(t)?;
    e.validate()?;
    match &e.kind {
        NormKind::Lq { q } if q.is_infinite() => Ok(t),
        NormKind::Lq { q } if *q >= 2.0 => Ok(t.powf(q / 2.0)),
        NormKind::Lq { q } => {
            let r = 2.0 / (2.0 - q);
            lorentz_bound(&LorentzWeights::ones(e.dim), *q, r, t)
        }
        NormKind::Lorentz { weights, p } => {
            let Some(r) = r else {
                bail_param!("Lorentz bound needs the summability exponent r");
            };
            lorentz_bound(weights, *p, r, t)
        }
        NormKind::Orlicz { psi } => Ok(orlicz_bound(psi, t)),
    }
}

fn lorentz_bound(w: &LorentzWeights, p: f64, r: f64, t: f64) -> Result<f64> {
    if r.is_nan() || r <= 1.0 {
        bail_param!("need r > 1 so that r' < ∞, got r = {r}");
    }
    let rc = conjugate(r);
    if rc < (2.0 / p).max(1.0) - 1e-12 {
        bail_param!("need max{{1, 2/p}} ≤ r', got r' = {rc} with p = {p}");
    }
    let wr = lp_of_moduli(w.as_slice().iter().copied(), r);
    Ok(wr.powf(-rc / 2.0) * t.powf(p * rc / 2.0))
}

const BOUND_GRID: usize = 2001;

fn orlicz_bound(psi: &OrliczFunction, t: f64) -> f64 {
    let f = |u: f64| -> f64 {
        let v = psi.eval(u / t);
        if v > 0.0 {
            u / v.sqrt()
        } else {
            f64::INFINITY
        }
    };
    // log grid on [1e-12, 1], u = 1 included exactly
    let lmin = -12.0 * std::f64::consts::LN_10;
    let us: Vec<f64> = (0..BOUND_GRID)
        .map(|i| if i + 1 == BOUND_GRID { 1.0 } else { (lmin * (1.0 - i as f64 / (BOUND_GRID - 1) as f64)).exp() })
        .collect();
    let (ibest, vbest) = us
        .iter()
        .enumerate()
        .map(|(i, &u)| (i, f(u)))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    if !vbest.is_finite() {
        return vbest;
    }
    // golden section in log u around the best grid point
    let lo_i = ibest.saturating_sub(1);
    let hi_i = (ibest + 1).min(BOUND_GRID - 1);
    let (mut a, mut b) = (us[lo_i].ln(), us[hi_i].ln());
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let fl = |l: f64| f(l.exp().min(1.0));
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (fl(c), fl(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = fl(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = fl(d);
        }
    }
    vbest.min(fc).min(fd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::close;

    mod approx_eq {
        pub fn close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
        }
    }

    #[test]
    fn lp_examples() {
        assert_eq!(lp_norm(&[3.0, 4.0], 2.0).unwrap(), 5.0);
        assert!(close(lp_norm(&[1.0; 9], 3.0).unwrap(), 9f64.powf(1.0 / 3.0), 1e-15));
        assert_eq!(lp_norm(&[1.0, -2.0, 2.0], 1.0).unwrap(), 5.0);
        assert_eq!(lp_norm(&[1.0, -7.0, 2.0], f64::INFINITY).unwrap(), 7.0);
        let z = [Complex64::new(3.0, 4.0), Complex64::new(0.0, 0.0)];
        assert_eq!(lp_norm(&z, 1.0).unwrap(), 5.0);
        assert!(matches!(lp_norm(&[1.0], 0.5), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn lorentz_examples() {
        let w = LorentzWeights::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(lorentz_norm(&[0.0, 0.0], &w, 2.0).unwrap(), 0.0);
        assert!(close(lorentz_norm(&[2.0, 1.0], &w, 2.0).unwrap(), 5f64.sqrt(), 1e-15));
        let w = LorentzWeights::new(vec![4.0, 1.0]).unwrap();
        assert!(close(lorentz_norm(&[1.0, 3.0], &w, 1.0).unwrap(), 13.0, 1e-15));
        assert!(lorentz_norm(&[1.0, 2.0, 3.0], &w, 1.0).is_err());
        assert!(LorentzWeights::new(vec![1.0, 2.0]).is_err());
        assert!(LorentzWeights::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn orlicz_examples() {
        let sq = OrliczFunction::power(2.0).unwrap();
        assert!(close(orlicz_norm(&[1.0, 1.0], &sq), 2f64.sqrt(), 1e-12));
        assert!(close(orlicz_norm_bisect(&[1.0, 1.0], &sq), 2f64.sqrt(), 1e-11));
        assert_eq!(orlicz_norm(&[0.0, 0.0, 0.0], &sq), 0.0);
        let v = [0.3, -1.7, 2.2, 0.01];
        for p in [1.0, 1.5, 3.0, 6.0] {
            let psi = OrliczFunction::power(p).unwrap();
            let lp = lp_norm(&v, p).unwrap();
            assert!(close(orlicz_norm(&v, &psi), lp, 1e-10));
            assert!(close(orlicz_norm_bisect(&v, &psi), lp, 1e-10), "p={p}");
        }
    }

    #[test]
    fn orlicz_validation() {
        assert!(OrliczFunction::power(0.5).is_err());
        assert!(OrliczFunction::new(OrliczKind::ScaledPower { c: -1.0, p: 2.0 }).is_err());
        // concave piece
        let bad = OrliczKind::PiecewiseLinear { breakpoints: vec![(0.0, 0.0), (1.0, 2.0), (2.0, 2.5)] };
        assert!(OrliczFunction::new(bad).is_err());
        let bad = OrliczKind::PiecewiseLinear { breakpoints: vec![(0.0, 1.0), (1.0, 2.0)] };
        assert!(OrliczFunction::new(bad).is_err());
        let good = OrliczKind::PiecewiseLinear { breakpoints: vec![(0.0, 0.0), (0.5, 0.0), (1.0, 1.0), (2.0, 4.0)] };
        let psi = OrliczFunction::new(good).unwrap();
        assert_eq!(psi.eval(0.25), 0.0);
        assert!(close(psi.eval(0.75), 0.5, 1e-15));
        assert!(close(psi.eval(3.0), 7.0, 1e-15));
        assert_eq!(psi.derivative(1.5), 3.0);
    }

    #[test]
    fn ke_euclidean_and_sharp_points() {
        for n in [1usize, 3, 8] {
            let e = UnconditionalNorm::lq(2.0, n).unwrap();
            for t in [0.1, 0.5, 1.0, (n as f64).sqrt()] {
                assert!(close(ke_numeric(&e, t).unwrap(), t, 1e-12));
            }
            assert!(ke_numeric(&e, (n as f64).sqrt() * 1.01).unwrap().is_infinite());
        }
        for q in [2.0, 3.0, 4.0, 6.0] {
            let n = 8;
            let e = UnconditionalNorm::lq(q, n).unwrap();
            for k in 1..=n {
                let t = (k as f64).powf(1.0 / q);
                let v = ke_numeric(&e, t).unwrap();
                assert!((v - (k as f64).sqrt()).abs() <= 1e-9, "q={q} k={k} v={v}");
            }
        }
    }

    #[test]
    fn ke_l4_example_matches_dense_candidate_grid() {
        let e = UnconditionalNorm::lq(4.0, 8).unwrap();
        let t = 1.5;
        let v = ke_numeric(&e, t).unwrap();
        assert!(v >= t * t - 1e-12);
        // dense grid over (k, c)
        let mut best = f64::INFINITY;
        for k in 0..8 {
            for i in 0..=200_000 {
                let c = i as f64 / 200_000.0;
                if k as f64 + c.powi(4) >= t.powi(4) {
                    best = best.min((k as f64 + c * c).sqrt());
                }
            }
        }
        assert!(v <= best + 1e-12 && best - v < 1e-5, "v={v} grid={best}");
    }

    #[test]
    fn ke_below_two_is_flat() {
        // For q < 2 the minimizer spreads mass evenly.
        let e = UnconditionalNorm::lq(1.0, 4).unwrap();
        assert!(close(ke_numeric(&e, 1.0).unwrap(), 0.5, 1e-12));
        let e = UnconditionalNorm::lq(1.5, 5).unwrap();
        let t = 2.0;
        let flat = t * 5f64.powf(0.5 - 1.0 / 1.5);
        assert!(close(ke_numeric(&e, t).unwrap(), flat, 1e-12));
    }

    #[test]
    fn ke_rejects_nonpositive_level() {
        let e = UnconditionalNorm::lq(2.0, 3).unwrap();
        assert!(ke_numeric(&e, 0.0).is_err());
        assert!(ke_numeric(&e, -1.0).is_err());
        assert!(ke_bound(&e, 0.0, None).is_err());
    }

    #[test]
    fn ke_bound_examples() {
        let e = UnconditionalNorm::lq(3.0, 6).unwrap();
        assert!(close(ke_bound(&e, 1.7, None).unwrap(), 1.7f64.powf(1.5), 1e-15));
        for q in [2.0, 3.0, 5.0] {
            let psi = OrliczFunction::power(q).unwrap();
            let e = UnconditionalNorm::orlicz(psi, 6).unwrap();
            for t in [0.3, 1.0, 2.2] {
                let b = ke_bound(&e, t, None).unwrap();
                assert!((b - t.powf(q / 2.0)).abs() <= 1e-8, "q={q} t={t} b={b}");
            }
        }
        // unit weights, p = q ≥ 2, r = ∞ (r' = 1) reduces to the ℓq bound
        let q = 4.0;
        let e = UnconditionalNorm::lorentz(LorentzWeights::ones(5), q).unwrap();
        let b = ke_bound(&e, 1.3, Some(f64::INFINITY)).unwrap();
        assert!(close(b, 1.3f64.powf(q / 2.0), 1e-14));
        // r' below 2/p is rejected
        let e = UnconditionalNorm::lorentz(LorentzWeights::ones(5), 1.0).unwrap();
        assert!(ke_bound(&e, 1.0, Some(f64::INFINITY)).is_err());
        assert!(ke_bound(&e, 1.0, None).is_err());
        assert!(ke_bound(&e, 1.0, Some(2.0)).is_ok());
    }

    #[test]
    fn orlicz_search_matches_exact_power_case() {
        // The generic search, run on ψ(t)=t^q, against the exact reduction.
        for q in [1.5, 2.0, 3.0] {
            let psi = OrliczFunction::power(q).unwrap();
            let n = 5;
            let e = UnconditionalNorm::lq(q, n).unwrap();
            for t in [0.4, 1.0, 1.6] {
                let exact = ke_numeric(&e, t).unwrap();
                let search = ke_orlicz_search(&psi, n, t);
                assert!(search >= exact - 1e-9, "q={q} t={t}");
                assert!(search - exact < 1e-4, "q={q} t={t} search={search} exact={exact}");
            }
        }
    }

    #[test]
    fn gradient_is_directional_derivative() {
        let u = [0.3, 1.1, 0.7, 0.05];
        let norms = [
            UnconditionalNorm::lq(3.0, 4).unwrap(),
            UnconditionalNorm::lorentz(LorentzWeights::new(vec![2.0, 1.0, 1.0, 0.5]).unwrap(), 2.5).unwrap(),
            UnconditionalNorm::orlicz(
                OrliczFunction::new(OrliczKind::ScaledPower { c: 2.0, p: 2.5 }).unwrap(),
                4,
            )
            .unwrap(),
        ];
        for e in &norms {
            let g = e.gradient(&u);
            for j in 0..4 {
                let h = 1e-6;
                let mut up = u;
                up[j] += h;
                let mut dn = u;
                dn[j] -= h;
                let fd = (e.norm(&up).unwrap() - e.norm(&dn).unwrap()) / (2.0 * h);
                assert!((fd - g[j]).abs() < 1e-6, "{:?} j={j} fd={fd} g={}", e.kind, g[j]);
            }
        }
    }

    #[test]
    fn waterfill_near_two() {
        // below saturation the optimum spreads as w^{r}, giving K = t ‖w‖_r^{-1/p}
        for (w, p) in [(vec![0.05, 0.05], 1.999), (vec![0.74, 0.05], 1.96), (vec![3.0, 1.0, 0.2], 1.9)] {
            let r = 2.0 / (2.0 - p);
            let wr = w.iter().map(|x: &f64| x.powf(r)).sum::<f64>().powf(1.0 / r);
            let e = UnconditionalNorm::lorentz(LorentzWeights::new(w.clone()).unwrap(), p).unwrap();
            let t = 1e-3 * e.ones_norm();
            let want = t * wr.powf(-1.0 / p);
            let got = ke_numeric(&e, t).unwrap();
            assert!((got - want).abs() <= 1e-9 * want, "{w:?}: {got} vs {want}");
        }
    }
}
