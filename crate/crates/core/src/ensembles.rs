//! Random matrix ensembles with bounded (or Gaussian comparison) entries.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{bail_param, Error, Result};
use crate::rng::RngStream;
use crate::Matrix;

/// Entry distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundedLaw {
    Rademacher,
    Uniform { a: f64, b: f64 },
    /// `v1` with probability `prob`, otherwise `v2`.
    TwoPoint { v1: f64, v2: f64, prob: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
    Bernoulli01 { prob: f64 },
    ComplexDiscUniform { radius: f64 },
    /// Unbounded; only usable with the Gaussian comparison envelope.
    Gaussian { mean: f64, variance: f64 },
}

impl BoundedLaw {
    pub fn validate(&self) -> Result<()> {
        let prob_ok = |p: f64| (0.0..=1.0).contains(&p);
        match self {
            BoundedLaw::Rademacher => {}
            BoundedLaw::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && a <= b) {
                    bail_param!("uniform law needs finite a ≤ b, got ({a}, {b})");
                }
            }
            BoundedLaw::TwoPoint { v1, v2, prob } => {
                if !(v1.is_finite() && v2.is_finite() && prob_ok(*prob)) {
                    bail_param!("two-point law needs finite values and prob in [0, 1]");
                }
            }
            BoundedLaw::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    bail_param!("discrete law needs matching nonempty values and probs");
                }
                if values.iter().any(|v| !v.is_finite()) || probs.iter().any(|&p| !prob_ok(p)) {
                    bail_param!("discrete law has a non-finite value or a probability outside [0, 1]");
                }
                let s: f64 = probs.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    bail_param!("discrete probabilities sum to {s}, not 1");
                }
            }
            BoundedLaw::Bernoulli01 { prob } => {
                if !prob_ok(*prob) {
                    bail_param!("bernoulli01 prob must lie in [0, 1], got {prob}");
                }
            }
            BoundedLaw::ComplexDiscUniform { radius } => {
                if !(radius.is_finite() && *radius >= 0.0) {
                    bail_param!("disc radius must be finite and nonnegative, got {radius}");
                }
            }
            BoundedLaw::Gaussian { mean, variance } => {
                if !mean.is_finite() || !variance.is_finite() || *variance < 0.0 {
                    bail_param!("gaussian law needs finite mean and variance ≥ 0, got ({mean}, {variance})");
                }
            }
        }
        Ok(())
    }

    /// Diameter of the support; `+∞` for the Gaussian law.
    pub fn diameter(&self) -> f64 {
        match self {
            BoundedLaw::Rademacher => 2.0,
            BoundedLaw::Uniform { a, b } => b - a,
            BoundedLaw::TwoPoint { v1, v2, .. } => (v1 - v2).abs(),
            BoundedLaw::Discrete { values, .. } => {
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                hi - lo
            }
            BoundedLaw::Bernoulli01 { .. } => 1.0,
            BoundedLaw::ComplexDiscUniform { radius } => 2.0 * radius,
            BoundedLaw::Gaussian { .. } => f64::INFINITY,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, BoundedLaw::Gaussian { .. })
    }

    pub fn is_real(&self) -> bool {
        !matches!(self, BoundedLaw::ComplexDiscUniform { .. })
    }

    /// Length of the smallest interval containing a real law's support.
    pub fn interval_length(&self) -> Option<f64> {
        self.is_real().then(|| self.diameter())
    }

    /// Exact support membership.
    pub fn contains(&self, z: Complex64) -> bool {
        if self.is_real() && z.im != 0.0 {
            return false;
        }
        let x = z.re;
        match self {
            BoundedLaw::Rademacher => x == 1.0 || x == -1.0,
            BoundedLaw::Uniform { a, b } => *a <= x && x <= *b,
            BoundedLaw::TwoPoint { v1, v2, .. } => x == *v1 || x == *v2,
            BoundedLaw::Discrete { values, .. } => values.contains(&x),
            BoundedLaw::Bernoulli01 { .. } => x == 0.0 || x == 1.0,
            BoundedLaw::ComplexDiscUniform { radius } => z.norm() <= *radius,
            BoundedLaw::Gaussian { .. } => x.is_finite(),
        }
    }

    /// `E|x|`.
    pub fn mean_abs(&self) -> f64 {
        match self {
            BoundedLaw::Rademacher => 1.0,
            BoundedLaw::Uniform { a, b } => {
                if b == a {
                    a.abs()
                } else if *a >= 0.0 || *b <= 0.0 {
                    (a + b).abs() / 2.0
                } else {
                    (a * a + b * b) / (2.0 * (b - a))
                }
            }
            BoundedLaw::TwoPoint { v1, v2, prob } => prob * v1.abs() + (1.0 - prob) * v2.abs(),
            BoundedLaw::Discrete { values, probs } => values.iter().zip(probs).map(|(v, p)| p * v.abs()).sum(),
            BoundedLaw::Bernoulli01 { prob } => *prob,
            BoundedLaw::ComplexDiscUniform { radius } => 2.0 * radius / 3.0,
            BoundedLaw::Gaussian { mean, variance } => {
                let s = variance.sqrt();
                if s == 0.0 {
                    return mean.abs();
                }
                let z = mean / s;
                s * (2.0 / PI).sqrt() * (-z * z / 2.0).exp() + mean * statrs::function::erf::erf(z / SQRT_2)
            }
        }
    }

    /// Law of `s·x` for `s > 0`, consuming randomness in the same way.
    pub fn scaled(&self, s: f64) -> BoundedLaw {
        match self {
            BoundedLaw::Rademacher => BoundedLaw::TwoPoint { v1: s, v2: -s, prob: 0.5 },
            BoundedLaw::Uniform { a, b } => BoundedLaw::Uniform { a: a * s, b: b * s },
            BoundedLaw::TwoPoint { v1, v2, prob } => BoundedLaw::TwoPoint { v1: v1 * s, v2: v2 * s, prob: *prob },
            BoundedLaw::Discrete { values, probs } => BoundedLaw::Discrete {
                values: values.iter().map(|v| v * s).collect(),
                probs: probs.clone(),
            },
            BoundedLaw::Bernoulli01 { prob } => BoundedLaw::TwoPoint { v1: s, v2: 0.0, prob: *prob },
            BoundedLaw::ComplexDiscUniform { radius } => BoundedLaw::ComplexDiscUniform { radius: radius * s },
            BoundedLaw::Gaussian { mean, variance } => BoundedLaw::Gaussian { mean: mean * s, variance: variance * s * s },
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let re = |x: f64| Complex64::new(x, 0.0);
        match self {
            BoundedLaw::Rademacher => re(if rng.random::<f64>() < 0.5 { 1.0 } else { -1.0 }),
            BoundedLaw::Uniform { a, b } => re(a + (b - a) * rng.random::<f64>()),
            BoundedLaw::TwoPoint { v1, v2, prob } => re(if rng.random::<f64>() < *prob { *v1 } else { *v2 }),
            BoundedLaw::Discrete { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return re(*v);
                    }
                }
                // rounding in the cumulative sum: fall back to the last atom with positive mass
                let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(values.len() - 1);
                re(values[last])
            }
            BoundedLaw::Bernoulli01 { prob } => re(if rng.random::<f64>() < *prob { 1.0 } else { 0.0 }),
            BoundedLaw::ComplexDiscUniform { radius } => {
                let r = radius * rng.random::<f64>().sqrt();
                let th = 2.0 * PI * rng.random::<f64>();
                Complex64::from_polar(r, th)
            }
            BoundedLaw::Gaussian { mean, variance } => {
                let g: f64 = rng.sample(StandardNormal);
                re(mean + variance.sqrt() * g)
            }
        }
    }
}

/// A single value or a list, kept as written so configs round-trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    pub fn as_slice(&self) -> &[T] {
        match self {
            OneOrMany::One(x) => std::slice::from_ref(x),
            OneOrMany::Many(v) => v,
        }
    }

    fn map<U>(&self, f: impl Fn(&T) -> U) -> OneOrMany<U> {
        match self {
            OneOrMany::One(x) => OneOrMany::One(f(x)),
            OneOrMany::Many(v) => OneOrMany::Many(v.iter().map(f).collect()),
        }
    }
}

/// Distribution of an upper-triangular entry of a self-adjoint ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum OffDiagMode {
    /// Entry drawn from a law with bounded support.
    DiameterSet { law: BoundedLaw },
    /// `w (α + iβ)` with `w = modulus·exp(i(angle + angle_step·(j·n + k)))`.
    RotatedProduct {
        modulus: f64,
        #[serde(default)]
        angle: f64,
        #[serde(default)]
        angle_step: f64,
        alpha: BoundedLaw,
        beta: BoundedLaw,
    },
}

impl OffDiagMode {
    fn validate(&self) -> Result<()> {
        match self {
            OffDiagMode::DiameterSet { law } => law.validate(),
            OffDiagMode::RotatedProduct { modulus, angle, angle_step, alpha, beta } => {
                if !(modulus.is_finite() && (0.0..=1.0).contains(modulus)) {
                    bail_param!("rotated-product modulus must lie in [0, 1], got {modulus}");
                }
                if !angle.is_finite() || !angle_step.is_finite() {
                    bail_param!("rotated-product angles must be finite");
                }
                alpha.validate()?;
                beta.validate()?;
                if !alpha.is_real() || !beta.is_real() {
                    bail_param!("rotated-product α and β must be real laws");
                }
                Ok(())
            }
        }
    }

    fn diameter(&self) -> f64 {
        match self {
            OffDiagMode::DiameterSet { law } => law.diameter(),
            OffDiagMode::RotatedProduct { alpha, beta, .. } => alpha.diameter().max(beta.diameter()),
        }
    }

    fn is_bounded(&self) -> bool {
        match self {
            OffDiagMode::DiameterSet { law } => law.is_bounded(),
            OffDiagMode::RotatedProduct { alpha, beta, .. } => alpha.is_bounded() && beta.is_bounded(),
        }
    }

    fn scaled(&self, s: f64) -> OffDiagMode {
        match self {
            OffDiagMode::DiameterSet { law } => OffDiagMode::DiameterSet { law: law.scaled(s) },
            OffDiagMode::RotatedProduct { modulus, angle, angle_step, alpha, beta } => OffDiagMode::RotatedProduct {
                modulus: *modulus,
                angle: *angle,
                angle_step: *angle_step,
                alpha: alpha.scaled(s),
                beta: beta.scaled(s),
            },
        }
    }

    fn sample<R: Rng + ?Sized>(&self, j: usize, k: usize, n: usize, rng: &mut R) -> Complex64 {
        match self {
            OffDiagMode::DiameterSet { law } => law.sample(rng),
            OffDiagMode::RotatedProduct { modulus, angle, angle_step, alpha, beta } => {
                let w = Complex64::from_polar(*modulus, angle + angle_step * (j * n + k) as f64);
                let a = alpha.sample(rng).re;
                let b = beta.sample(rng).re;
                w * Complex64::new(a, b)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Layout {
    /// Independent entries; a list of laws is cycled over entries in row-major order.
    Rectangular { law: OneOrMany<BoundedLaw> },
    /// Hermitian with independent upper triangle; a list of off-diagonal
    /// modes is cycled by `(j + k) mod len`.
    SelfAdjoint { diag: BoundedLaw, offdiag: OneOrMany<OffDiagMode> },
    /// Real symmetric Gaussian with the given variances.
    GaussianHermitian { offdiag_variance: f64, diag_variance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub m: usize,
    pub n: usize,
    pub layout: Layout,
}

impl EnsembleSpec {
    pub fn rectangular(m: usize, n: usize, law: BoundedLaw) -> Self {
        Self { m, n, layout: Layout::Rectangular { law: OneOrMany::One(law) } }
    }

    pub fn symmetric(n: usize, diag: BoundedLaw, offdiag: BoundedLaw) -> Self {
        Self {
            m: n,
            n,
            layout: Layout::SelfAdjoint { diag, offdiag: OneOrMany::One(OffDiagMode::DiameterSet { law: offdiag }) },
        }
    }

    pub fn gaussian_hermitian(n: usize, offdiag_variance: f64, diag_variance: f64) -> Self {
        Self { m: n, n, layout: Layout::GaussianHermitian { offdiag_variance, diag_variance } }
    }

    pub fn is_selfadjoint(&self) -> bool {
        !matches!(self.layout, Layout::Rectangular { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            bail_param!("ensemble dimensions must be positive, got {}×{}", self.m, self.n);
        }
        match &self.layout {
            Layout::Rectangular { law } => {
                if law.as_slice().is_empty() {
                    bail_param!("rectangular layout needs at least one law");
                }
                law.as_slice().iter().try_for_each(BoundedLaw::validate)
            }
            Layout::SelfAdjoint { diag, offdiag } => {
                if self.m != self.n {
                    bail_param!("self-adjoint layout needs m = n, got {}×{}", self.m, self.n);
                }
                diag.validate()?;
                if !diag.is_real() {
                    bail_param!("diagonal law of a self-adjoint ensemble must be real");
                }
                if offdiag.as_slice().is_empty() {
                    bail_param!("self-adjoint layout needs at least one off-diagonal mode");
                }
                offdiag.as_slice().iter().try_for_each(OffDiagMode::validate)
            }
            Layout::GaussianHermitian { offdiag_variance, diag_variance } => {
                if self.m != self.n {
                    bail_param!("gaussian hermitian layout needs m = n, got {}×{}", self.m, self.n);
                }
                if !(*offdiag_variance >= 0.0 && *diag_variance >= 0.0)
                    || !offdiag_variance.is_finite()
                    || !diag_variance.is_finite()
                {
                    bail_param!("variances must be finite and nonnegative");
                }
                Ok(())
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        match &self.layout {
            Layout::Rectangular { law } => law.as_slice().iter().all(BoundedLaw::is_bounded),
            Layout::SelfAdjoint { diag, offdiag } => {
                diag.is_bounded() && offdiag.as_slice().iter().all(OffDiagMode::is_bounded)
            }
            Layout::GaussianHermitian { .. } => false,
        }
    }

    /// The same ensemble with every entry multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> EnsembleSpec {
        let layout = match &self.layout {
            Layout::Rectangular { law } => Layout::Rectangular { law: law.map(|l| l.scaled(s)) },
            Layout::SelfAdjoint { diag, offdiag } => {
                Layout::SelfAdjoint { diag: diag.scaled(s), offdiag: offdiag.map(|o| o.scaled(s)) }
            }
            Layout::GaussianHermitian { offdiag_variance, diag_variance } => Layout::GaussianHermitian {
                offdiag_variance: offdiag_variance * s * s,
                diag_variance: diag_variance * s * s,
            },
        };
        EnsembleSpec { m: self.m, n: self.n, layout }
    }

    /// Draw one matrix, dispatching on the layout.
    pub fn sample(&self, stream: RngStream) -> Result<Matrix> {
        match self.layout {
            Layout::Rectangular { .. } => sample_matrix(self, stream),
            Layout::SelfAdjoint { .. } => sample_selfadjoint(self, stream),
            Layout::GaussianHermitian { offdiag_variance, diag_variance } => {
                sample_gaussian_hermitian(self.n, offdiag_variance, diag_variance, stream)
            }
        }
    }
}

/// Matrix with independent entries from a rectangular layout.
pub fn sample_matrix(spec: &EnsembleSpec, stream: RngStream) -> Result<Matrix> {
    let Layout::Rectangular { law } = &spec.layout else {
        bail_param!("sample_matrix needs a rectangular layout");
    };
    spec.validate()?;
    let laws = law.as_slice();
    let mut rng = stream.rng();
    let mut idx = 0usize;
    Ok(Matrix::from_fn(spec.m, spec.n, |_, _| {
        let z = laws[idx % laws.len()].sample(&mut rng);
        idx += 1;
        z
    }))
}

/// Hermitian matrix with independent diagonal and upper-triangular entries.
pub fn sample_selfadjoint(spec: &EnsembleSpec, stream: RngStream) -> Result<Matrix> {
    let Layout::SelfAdjoint { diag, offdiag } = &spec.layout else {
        bail_param!("sample_selfadjoint needs a self-adjoint layout");
    };
    spec.validate()?;
    let n = spec.n;
    let modes = offdiag.as_slice();
    let mut rng = stream.rng();
    let mut a = Matrix::zeros(n, n);
    for j in 0..n {
        a[(j, j)] = Complex64::new(diag.sample(&mut rng).re, 0.0);
        for k in j + 1..n {
            let z = modes[(j + k) % modes.len()].sample(j, k, n, &mut rng);
            a[(j, k)] = z;
            a[(k, j)] = z.conj();
        }
    }
    Ok(a)
}

/// Real symmetric Gaussian matrix, centered, with the given variances.
pub fn sample_gaussian_hermitian(n: usize, offdiag_variance: f64, diag_variance: f64, stream: RngStream) -> Result<Matrix> {
    EnsembleSpec::gaussian_hermitian(n, offdiag_variance, diag_variance).validate()?;
    let (so, sd) = (offdiag_variance.sqrt(), diag_variance.sqrt());
    let mut rng = stream.rng();
    let mut a = Matrix::zeros(n, n);
    for j in 0..n {
        let g: f64 = rng.sample(StandardNormal);
        a[(j, j)] = Complex64::new(sd * g, 0.0);
        for k in j + 1..n {
            let g: f64 = rng.sample(StandardNormal);
            a[(j, k)] = Complex64::new(so * g, 0.0);
            a[(k, j)] = a[(j, k)];
        }
    }
    Ok(a)
}

/// Smallest `D` for which the ensemble meets the bounded-entry hypotheses:
/// entries (off-diagonal entries, or α and β) in sets of diameter `D`,
/// diagonal entries in an interval of length `√2·D`.
pub fn effective_diameter(spec: &EnsembleSpec) -> Result<f64> {
    spec.validate()?;
    if !spec.is_bounded() {
        return Err(Error::UnboundedSupport("ensemble has Gaussian entries; no finite D exists".into()));
    }
    let d = match &spec.layout {
        Layout::Rectangular { law } => law.as_slice().iter().map(BoundedLaw::diameter).fold(0.0, f64::max),
        Layout::SelfAdjoint { diag, offdiag } => {
            let dd = if spec.n > 0 { diag.diameter() / SQRT_2 } else { 0.0 };
            let od = if spec.n > 1 {
                offdiag.as_slice().iter().map(OffDiagMode::diameter).fold(0.0, f64::max)
            } else {
                0.0
            };
            dd.max(od)
        }
        Layout::GaussianHermitian { .. } => unreachable!(),
    };
    Ok(d)
}
