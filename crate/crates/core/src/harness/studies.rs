//! Studies that are not tail experiments: exhaustive isoperimetry checks,
//! modulus and solver suites, and the scaling / sharpness experiments.

use std::f64::consts::LN_2;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::{config_hash, sample_statistics, CONFIDENCE};
use super::statistic::{Exponent, StatisticSpec};
use crate::ensembles::{effective_diameter, BoundedLaw, EnsembleSpec};
use crate::error::{bail_param, Error, Result};
use crate::matstat::{hoelder_vec_bound, opnorm_pq, opnorm_pq_oracle};
use crate::rng::RngStream;
use crate::stats;
use crate::talagrand::{sample_subset, verify_isoperimetry, verify_ke_dist_bound, Factor, ProductSpace};
use crate::vecnorms::{conjugate, ke_bound, ke_numeric, LorentzWeights, OrliczFunction, OrliczKind, UnconditionalNorm};
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TalagrandParams {
    pub dims: Vec<usize>,
    pub subsets: usize,
    /// Largest subset cardinality drawn.
    pub cap: usize,
}

impl Default for TalagrandParams {
    fn default() -> Self {
        Self { dims: vec![6, 8, 10], subsets: 200, cap: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeDistParams {
    pub instances: usize,
    pub max_factors: usize,
}

impl Default for KeDistParams {
    fn default() -> Self {
        Self { instances: 100, max_factors: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeLemmaParams {
    pub qs: Vec<f64>,
    pub dims: Vec<usize>,
    pub t_points: usize,
    pub tolerance: f64,
    pub exact_tolerance: f64,
}

impl Default for KeLemmaParams {
    fn default() -> Self {
        Self { qs: vec![2.0, 3.0, 4.0, 6.0], dims: vec![4, 8, 16], t_points: 50, tolerance: 1e-8, exact_tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoelderParams {
    pub matrices: usize,
    pub max_dim: usize,
    /// `(p, q)` pairs with `1 < p ≤ 2 ≤ q < ∞`.
    pub pairs: Vec<(Exponent, Exponent)>,
    pub oracle_instances: usize,
    /// Pairs with `p ≤ q`: the oracle searches the real sphere, and for
    /// `p > q` the (complex) norm of a real matrix may exceed the real one.
    pub oracle_pairs: Vec<(Exponent, Exponent)>,
    pub oracle_resolution: usize,
    pub oracle_tolerance: f64,
}

impl Default for HoelderParams {
    fn default() -> Self {
        let e = |p: f64, q: f64| (Exponent(p), Exponent(q));
        Self {
            matrices: 500,
            max_dim: 8,
            pairs: vec![e(4.0 / 3.0, 4.0), e(1.5, 3.0), e(2.0, 2.0), e(1.25, 5.0), e(2.0, 6.0), e(1.1, 2.0)],
            oracle_instances: 200,
            oracle_pairs: vec![e(4.0 / 3.0, 4.0), e(1.5, 3.0), e(2.0, 2.0), e(1.25, 6.0), e(1.2, 1.2), e(4.0, 4.0)],
            oracle_resolution: 512,
            oracle_tolerance: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CltParams {
    pub ns: Vec<usize>,
    /// Exponent of the root; must be below 2.
    pub p: Exponent,
    /// Comparison exponent, at least 2.
    pub q: Exponent,
    pub trials: u64,
    /// Allowed distance between the fitted and the predicted slope.
    pub tolerance: f64,
}

impl Default for CltParams {
    fn default() -> Self {
        Self { ns: vec![64, 256, 1024, 4096], p: Exponent(1.0), q: Exponent(3.0), trials: 10_000, tolerance: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharpnessParams {
    pub m: usize,
    pub n: usize,
    /// `[a, b]` submatrix shapes.
    pub shapes: Vec<[usize; 2]>,
    pub trials: u64,
    /// When set, also records how often `‖X̃‖_{q'→q} ≥ (ab)^{1/q}` for the
    /// 0/1 matrix `X̃ = (X + 1)/2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Exponent>,
}

impl Default for SharpnessParams {
    fn default() -> Self {
        Self { m: 8, n: 8, shapes: vec![[1, 1], [1, 2], [2, 2]], trials: 10_000, q: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MedianGrowthParams {
    pub law: BoundedLaw,
    pub sizes: Vec<[usize; 2]>,
    pub p: Exponent,
    pub q: Exponent,
    pub trials: u64,
}

impl Default for MedianGrowthParams {
    fn default() -> Self {
        Self {
            law: BoundedLaw::Rademacher,
            sizes: vec![[1, 1], [8, 8], [16, 16], [32, 32], [64, 64]],
            p: Exponent(4.0 / 3.0),
            q: Exponent(4.0),
            trials: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteriorCenterParams {
    pub ensemble: EnsembleSpec,
    pub ks: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: u64,
}

fn default_trials() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StudyKind {
    Talagrand(TalagrandParams),
    KeDist(KeDistParams),
    KeLemma(KeLemmaParams),
    HoelderOracle(HoelderParams),
    Clt(CltParams),
    Sharpness(SharpnessParams),
    MedianGrowth(MedianGrowthParams),
    InteriorCenter(InteriorCenterParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub name: String,
    pub seed: u64,
    #[serde(flatten)]
    pub kind: StudyKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TalagrandRow {
    pub n: usize,
    pub subsets: usize,
    pub failures: usize,
    pub tail_failures: usize,
    /// Largest `lhs / rhs` seen.
    pub max_ratio: f64,
    pub min_margin: f64,
    pub mean_subset_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeDistOutcome {
    pub instances: usize,
    pub failures: usize,
    pub zero_cases: usize,
    pub min_margin: f64,
    pub max_dist_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeLemmaRow {
    pub family: String,
    pub dim: usize,
    pub checks: usize,
    pub failures: usize,
    /// Largest `ke_bound - ke_numeric`.
    pub worst_excess: f64,
    /// Largest error of `K(k^{1/q}) = √k`, for ℓq only.
    pub exact_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoelderOutcome {
    pub matrices: usize,
    pub hoelder_failures: usize,
    /// Largest `opnorm - ‖vec A‖_r`.
    pub worst_hoelder_excess: f64,
    pub oracle_instances: usize,
    pub oracle_failures: usize,
    pub worst_oracle_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltRow {
    pub n: usize,
    pub sd_p: f64,
    pub sd_q: f64,
    pub mean_p: f64,
    pub mean_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltOutcome {
    pub p: f64,
    pub q: f64,
    pub rows: Vec<CltRow>,
    pub slope_p: SlopeFit,
    pub expected_slope_p: f64,
    pub slope_q: SlopeFit,
    /// `sqrt(8 · 4^{2/q} Γ(2/q) / q)`, the standard deviation allowed by the
    /// `4 exp(-t^q/4)` tail.
    pub sd_bound_q: f64,
    pub pass_p: bool,
    pub pass_q: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub a: usize,
    pub b: usize,
    pub hits: u64,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub floor: f64,
    pub inconclusive: bool,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_frequency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianGrowthRow {
    pub m: usize,
    pub n: usize,
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean: f64,
    pub lower_bound: f64,
    /// `median / max(m, n)^{1/q}`; recorded only.
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeComparison {
    pub t: f64,
    pub akv: f64,
    pub interior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorCenterRow {
    pub k: usize,
    /// Index used by the partial sums: `k`, or `n - k + 1` on the small end.
    pub index: usize,
    pub small_end: bool,
    pub m_hat: f64,
    pub m_hat_ci: (f64, f64),
    pub median_lambda: f64,
    pub median_ci: (f64, f64),
    pub gap: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    pub comparison: Vec<EnvelopeComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StudyOutcome {
    Talagrand { rows: Vec<TalagrandRow> },
    KeDist(KeDistOutcome),
    KeLemma { rows: Vec<KeLemmaRow> },
    HoelderOracle(HoelderOutcome),
    Clt(CltOutcome),
    Sharpness { m: usize, n: usize, trials: u64, rows: Vec<SharpnessRow> },
    MedianGrowth { p: f64, q: f64, c: f64, rows: Vec<MedianGrowthRow> },
    InteriorCenter { d: f64, n: usize, rows: Vec<InteriorCenterRow> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub name: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub pass: bool,
    pub inconclusive: bool,
    pub outcome: StudyOutcome,
    pub wall_time_s: f64,
}

impl StudyReport {
    pub fn to_json_without_timing(&self) -> String {
        let mut r = self.clone();
        r.wall_time_s = 0.0;
        serde_json::to_string_pretty(&r).expect("report serializes")
    }

    /// Table form of the outcome: a header and rows of already formatted
    /// fields.
    pub fn table(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let f = |x: f64| format!("{x}");
        let b = |x: bool| if x { "pass".to_string() } else { "fail".to_string() };
        match &self.outcome {
            StudyOutcome::Talagrand { rows } => (
                vec!["n", "subsets", "failures", "tail_failures", "max_ratio", "min_margin"],
                rows.iter()
                    .map(|r| {
                        vec![
                            r.n.to_string(),
                            r.subsets.to_string(),
                            r.failures.to_string(),
                            r.tail_failures.to_string(),
                            f(r.max_ratio),
                            f(r.min_margin),
                        ]
                    })
                    .collect(),
            ),
            StudyOutcome::KeDist(o) => (
                vec!["instances", "failures", "zero_cases", "min_margin", "max_dist_gap"],
                vec![vec![
                    o.instances.to_string(),
                    o.failures.to_string(),
                    o.zero_cases.to_string(),
                    f(o.min_margin),
                    f(o.max_dist_gap),
                ]],
            ),
            StudyOutcome::KeLemma { rows } => (
                vec!["family", "dim", "checks", "failures", "worst_excess", "exact_error"],
                rows.iter()
                    .map(|r| {
                        vec![
                            r.family.clone(),
                            r.dim.to_string(),
                            r.checks.to_string(),
                            r.failures.to_string(),
                            f(r.worst_excess),
                            r.exact_error.map(f).unwrap_or_default(),
                        ]
                    })
                    .collect(),
            ),
            StudyOutcome::HoelderOracle(o) => (
                vec!["matrices", "hoelder_failures", "worst_hoelder_excess", "oracle_instances", "oracle_failures", "worst_oracle_error"],
                vec![vec![
                    o.matrices.to_string(),
                    o.hoelder_failures.to_string(),
                    f(o.worst_hoelder_excess),
                    o.oracle_instances.to_string(),
                    o.oracle_failures.to_string(),
                    f(o.worst_oracle_error),
                ]],
            ),
            StudyOutcome::Clt(o) => (
                vec!["n", "sd_p", "sd_q", "mean_p", "mean_q"],
                o.rows
                    .iter()
                    .map(|r| vec![r.n.to_string(), f(r.sd_p), f(r.sd_q), f(r.mean_p), f(r.mean_q)])
                    .collect(),
            ),
            StudyOutcome::Sharpness { rows, .. } => (
                vec!["a", "b", "hits", "frequency", "ci_low", "ci_high", "floor", "verdict"],
                rows.iter()
                    .map(|r| {
                        vec![
                            r.a.to_string(),
                            r.b.to_string(),
                            r.hits.to_string(),
                            f(r.frequency),
                            f(r.ci_low),
                            f(r.ci_high),
                            f(r.floor),
                            if r.inconclusive { "inconclusive".into() } else { b(r.pass) },
                        ]
                    })
                    .collect(),
            ),
            StudyOutcome::MedianGrowth { rows, .. } => (
                vec!["m", "n", "median", "ci_low", "ci_high", "lower_bound", "ratio", "verdict"],
                rows.iter()
                    .map(|r| {
                        vec![
                            r.m.to_string(),
                            r.n.to_string(),
                            f(r.median),
                            f(r.ci_low),
                            f(r.ci_high),
                            f(r.lower_bound),
                            f(r.ratio),
                            b(r.pass),
                        ]
                    })
                    .collect(),
            ),
            StudyOutcome::InteriorCenter { rows, .. } => (
                vec!["k", "m_hat", "median_lambda", "gap", "bound", "slack", "verdict"],
                rows.iter()
                    .map(|r| {
                        vec![
                            r.k.to_string(),
                            f(r.m_hat),
                            f(r.median_lambda),
                            f(r.gap),
                            f(r.bound),
                            f(r.slack),
                            b(r.pass),
                        ]
                    })
                    .collect(),
            ),
        }
    }
}

pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let start = Instant::now();
    let (outcome, pass, inconclusive) = match &cfg.kind {
        StudyKind::Talagrand(p) => {
            let rows = talagrand_study(p, cfg.seed)?;
            let pass = rows.iter().all(|r| r.failures == 0 && r.tail_failures == 0);
            (StudyOutcome::Talagrand { rows }, pass, false)
        }
        StudyKind::KeDist(p) => {
            let o = ke_dist_study(p, cfg.seed)?;
            let pass = o.failures == 0;
            (StudyOutcome::KeDist(o), pass, false)
        }
        StudyKind::KeLemma(p) => {
            let rows = ke_lemma_study(p)?;
            let pass = rows.iter().all(|r| r.failures == 0);
            (StudyOutcome::KeLemma { rows }, pass, false)
        }
        StudyKind::HoelderOracle(p) => {
            let o = hoelder_study(p, cfg.seed)?;
            let pass = o.hoelder_failures == 0 && o.oracle_failures == 0;
            (StudyOutcome::HoelderOracle(o), pass, false)
        }
        StudyKind::Clt(p) => {
            let o = clt_counterexample(p, cfg.seed)?;
            let pass = o.pass_p && o.pass_q;
            (StudyOutcome::Clt(o), pass, false)
        }
        StudyKind::Sharpness(p) => {
            let rows = sharpness_submatrix(p, cfg.seed)?;
            let pass = rows.iter().all(|r| r.inconclusive || r.pass);
            let inconclusive = rows.iter().any(|r| r.inconclusive);
            (StudyOutcome::Sharpness { m: p.m, n: p.n, trials: p.trials, rows }, pass, inconclusive)
        }
        StudyKind::MedianGrowth(p) => {
            let (c, rows) = median_growth_check(p, cfg.seed)?;
            let pass = rows.iter().all(|r| r.pass);
            (StudyOutcome::MedianGrowth { p: p.p.0, q: p.q.0, c, rows }, pass, false)
        }
        StudyKind::InteriorCenter(p) => {
            let (d, rows) = interior_center_consistency(p, cfg.seed)?;
            let pass = rows.iter().all(|r| r.pass);
            (StudyOutcome::InteriorCenter { d, n: p.ensemble.n, rows }, pass, false)
        }
    };
    Ok(StudyReport {
        name: cfg.name.clone(),
        tool_version: crate::VERSION.to_string(),
        config_hash: config_hash(cfg),
        seed: cfg.seed,
        pass,
        inconclusive,
        outcome,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Exhaustive isoperimetry check on `{0,1}^N` for random subsets.
pub fn talagrand_study(p: &TalagrandParams, seed: u64) -> Result<Vec<TalagrandRow>> {
    if p.cap == 0 {
        bail_param!("subset cap must be positive");
    }
    p.dims
        .iter()
        .map(|&n| {
            let space = ProductSpace::uniform_cube(n)?;
            let size = 1usize << n;
            let mut rng = RngStream::new(seed, n as u64).rng();
            let mut row = TalagrandRow {
                n,
                subsets: p.subsets,
                failures: 0,
                tail_failures: 0,
                max_ratio: 0.0,
                min_margin: f64::INFINITY,
                mean_subset_size: 0.0,
            };
            for _ in 0..p.subsets {
                let a = sample_subset(size, p.cap, &mut rng);
                let r = verify_isoperimetry(&space, &a)?;
                if r.lhs > r.rhs * (1.0 + 1e-9) {
                    row.failures += 1;
                }
                if r.tail.iter().any(|c| !c.pass) {
                    row.tail_failures += 1;
                }
                row.max_ratio = row.max_ratio.max(r.lhs / r.rhs);
                row.min_margin = row.min_margin.min(r.margin);
                row.mean_subset_size += r.subset_size as f64 / p.subsets as f64;
            }
            Ok(row)
        })
        .collect()
}

fn ke_dist_norm(i: usize, n: usize) -> Result<UnconditionalNorm> {
    match i % 4 {
        0 => UnconditionalNorm::lq(2.0, n),
        1 => UnconditionalNorm::lq(4.0, n),
        2 => UnconditionalNorm::lorentz(LorentzWeights::new((1..=n).map(|j| 1.0 / j as f64).collect())?, 2.0),
        _ => UnconditionalNorm::orlicz(OrliczFunction::power(3.0)?, n),
    }
}

/// `K_E(dist(x, conv A)) ≤ f_c(A, x)` on random small vector instances.
pub fn ke_dist_study(p: &KeDistParams, seed: u64) -> Result<KeDistOutcome> {
    if p.max_factors < 2 {
        bail_param!("max_factors must be at least 2");
    }
    let reports = (0..p.instances)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let mut rng = RngStream::for_trial(seed, i as u64).rng();
            let n = rng.random_range(2..=p.max_factors);
            let factors = (0..n)
                .map(|_| {
                    let d = rng.random_range(1..=3usize);
                    let k = rng.random_range(2..=3usize);
                    // points in a cube of diagonal 1
                    let side = 1.0 / (d as f64).sqrt();
                    let pts: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| rng.random::<f64>() * side).collect()).collect();
                    Factor::new(pts, vec![1.0 / k as f64; k])
                })
                .collect::<Result<Vec<_>>>()?;
            let space = ProductSpace::new(factors)?;
            let random_point = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<usize> {
                space.factors().iter().map(|f| rng.random_range(0..f.points.len())).collect()
            };
            let a: Vec<Vec<usize>> = (0..rng.random_range(1..=5)).map(|_| random_point(&mut rng)).collect();
            let x = if i % 10 == 0 { a[0].clone() } else { random_point(&mut rng) };
            let e = ke_dist_norm(i, n)?;
            verify_ke_dist_bound(&space, &e, &a, &x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KeDistOutcome {
        instances: reports.len(),
        failures: reports.iter().filter(|r| !r.pass).count(),
        zero_cases: reports.iter().filter(|r| r.fc == 0.0).count(),
        min_margin: reports.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min),
        max_dist_gap: reports.iter().map(|r| r.dist_gap).fold(0.0, f64::max),
    })
}

fn lemma_families(n: usize) -> Result<Vec<(String, UnconditionalNorm, Vec<Option<f64>>)>> {
    let lorentz = |name: &str, w: Vec<f64>, p: f64| -> Result<(String, UnconditionalNorm, Vec<Option<f64>>)> {
        // r' from the smallest admissible value upwards
        let lo = (2.0 / p).max(1.0);
        let rs = [lo, lo + 1.0, 2.0 * lo + 2.0].iter().map(|&rc| Some(conjugate(rc))).collect();
        Ok((format!("lorentz-{name}-p{p}"), UnconditionalNorm::lorentz(LorentzWeights::new(w)?, p)?, rs))
    };
    let orlicz = |name: &str, kind: OrliczKind| -> Result<(String, UnconditionalNorm, Vec<Option<f64>>)> {
        Ok((format!("orlicz-{name}"), UnconditionalNorm::orlicz(OrliczFunction::new(kind)?, n)?, vec![None]))
    };
    Ok(vec![
        lorentz("harmonic", (1..=n).map(|j| 1.0 / j as f64).collect(), 1.0)?,
        lorentz("inverse-sqrt", (1..=n).map(|j| 1.0 / (j as f64).sqrt()).collect(), 2.0)?,
        lorentz("geometric", (0..n).map(|j| 0.8f64.powi(j as i32)).collect(), 3.0)?,
        orlicz("cubic", OrliczKind::Power { p: 3.0 })?,
        orlicz("scaled-power", OrliczKind::ScaledPower { c: 2.0, p: 2.5 })?,
        orlicz("piecewise-linear", OrliczKind::PiecewiseLinear { breakpoints: vec![(0.0, 0.0), (0.5, 0.25), (1.0, 1.0), (2.0, 4.0)] })?,
    ])
}

/// Compares the numerical modulus with its closed-form lower bound.
pub fn ke_lemma_study(p: &KeLemmaParams) -> Result<Vec<KeLemmaRow>> {
    if p.t_points == 0 {
        bail_param!("t_points must be positive");
    }
    let mut rows = Vec::new();
    for &n in &p.dims {
        let mut families: Vec<(String, UnconditionalNorm, Vec<Option<f64>>)> = Vec::new();
        for &q in &p.qs {
            families.push((format!("lq-{q}"), UnconditionalNorm::lq(q, n)?, vec![None]));
        }
        families.extend(lemma_families(n)?);
        for (family, e, rs) in families {
            let top = e.ones_norm();
            let mut row = KeLemmaRow { family, dim: n, checks: 0, failures: 0, worst_excess: f64::NEG_INFINITY, exact_error: None };
            for i in 1..=p.t_points {
                let t = top * i as f64 / p.t_points as f64;
                let k = ke_numeric(&e, t)?;
                for r in &rs {
                    let lb = ke_bound(&e, t, *r)?;
                    row.checks += 1;
                    row.worst_excess = row.worst_excess.max(lb - k);
                    if k < lb - p.tolerance {
                        row.failures += 1;
                    }
                }
            }
            if let crate::vecnorms::NormKind::Lq { q } = e.kind {
                let mut err: f64 = 0.0;
                for k in 1..=n {
                    let t = (k as f64).powf(1.0 / q);
                    err = err.max((ke_numeric(&e, t)? - (k as f64).sqrt()).abs());
                }
                row.checks += n;
                if err > p.exact_tolerance {
                    row.failures += 1;
                }
                row.exact_error = Some(err);
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Hölder bound `‖A‖_{p→q} ≤ ‖vec A‖_r` on random matrices, and agreement
/// of the solver with the brute-force oracle on matrices with ≤ 3 columns.
pub fn hoelder_study(p: &HoelderParams, seed: u64) -> Result<HoelderOutcome> {
    if p.pairs.is_empty() || p.oracle_pairs.is_empty() || p.max_dim < 1 {
        bail_param!("need at least one exponent pair and max_dim ≥ 1");
    }
    if let Some((a, b)) = p.oracle_pairs.iter().find(|(a, b)| a.0 > b.0) {
        bail_param!("oracle pairs need p ≤ q, got ({a}, {b})");
    }
    let hoelder = (0..p.matrices)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = RngStream::for_trial(seed, i as u64).rng();
            let m = rng.random_range(1..=p.max_dim);
            let n = rng.random_range(1..=p.max_dim);
            let complex = i % 5 == 4;
            let a = Matrix::from_fn(m, n, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), if complex { rng.random_range(-1.0..1.0) } else { 0.0 })
            });
            let (pp, qq) = p.pairs[i % p.pairs.len()];
            Ok(opnorm_pq(&a, pp.0, qq.0)?.value - hoelder_vec_bound(&a, pp.0, qq.0)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let oracle = (0..p.oracle_instances)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = RngStream::for_trial(seed ^ 0x6f72_6163_6c65, i as u64).rng();
            let m = rng.random_range(1..=4usize);
            let n = rng.random_range(1..=3usize);
            let a = Matrix::from_fn(m, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), 0.0));
            let (pp, qq) = p.oracle_pairs[i % p.oracle_pairs.len()];
            let o = opnorm_pq_oracle(&a, pp.0, qq.0, p.oracle_resolution)?;
            Ok((opnorm_pq(&a, pp.0, qq.0)?.value - o).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HoelderOutcome {
        matrices: hoelder.len(),
        hoelder_failures: hoelder.iter().filter(|&&x| x > 1e-9).count(),
        worst_hoelder_excess: hoelder.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        oracle_instances: oracle.len(),
        oracle_failures: oracle.iter().filter(|&&x| x > p.oracle_tolerance).count(),
        worst_oracle_error: oracle.iter().copied().fold(0.0, f64::max),
    })
}

/// Weighted least-squares slope of `log sd` against `log n`, with the
/// delta-method variance of `log sd` as weights and a 99% interval.
fn log_slope(ns: &[usize], samples: &[Vec<f64>]) -> SlopeFit {
    let mut pts = Vec::new();
    for (&n, x) in ns.iter().zip(samples) {
        let m = x.len() as f64;
        let mu = stats::mean(x);
        let s2 = x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / m;
        let m4 = x.iter().map(|v| (v - mu).powi(4)).sum::<f64>() / m;
        if s2 <= 0.0 {
            continue;
        }
        let kurt = m4 / (s2 * s2);
        let var = ((kurt - (m - 3.0) / (m - 1.0)) / (4.0 * m)).max(1e-12);
        pts.push(((n as f64).ln(), 0.5 * s2.ln(), 1.0 / var));
    }
    if pts.len() < 2 {
        return SlopeFit { slope: 0.0, ci_low: f64::NEG_INFINITY, ci_high: f64::INFINITY };
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let xb = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let yb = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - xb).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - xb) * (p.1 - yb)).sum();
    let slope = sxy / sxx;
    let half = stats::normal_quantile(CONFIDENCE) / sxx.sqrt();
    SlopeFit { slope, ci_low: slope - half, ci_high: slope + half }
}

/// Standard deviation of `S_n^{1/p}`, `S_n ~ Bin(n, 1/2)`, as `n` grows:
/// for `p < 2` it grows like `n^{1/p - 1/2}`, while for `q ≥ 2` it stays
/// bounded.
pub fn clt_counterexample(p: &CltParams, seed: u64) -> Result<CltOutcome> {
    if p.p.0 >= 2.0 {
        bail_param!("the root exponent must be below 2, got {}", p.p.0);
    }
    if p.q.0 < 2.0 || p.q.0.is_infinite() {
        bail_param!("the comparison exponent must lie in [2, ∞), got {}", p.q.0);
    }
    if p.ns.is_empty() || p.ns.contains(&0) {
        bail_param!("sizes must be positive");
    }
    let stats_spec = [StatisticSpec::BinomialRoot { p: p.p }, StatisticSpec::BinomialRoot { p: p.q }];
    let mut cols_p = Vec::new();
    let mut cols_q = Vec::new();
    let mut rows = Vec::new();
    for &n in &p.ns {
        let e = EnsembleSpec::rectangular(1, n, BoundedLaw::Bernoulli01 { prob: 0.5 });
        let mut cols = sample_statistics(&e, &stats_spec, p.trials, seed)?;
        let xq = cols.pop().expect("two columns");
        let xp = cols.pop().expect("two columns");
        rows.push(CltRow {
            n,
            sd_p: stats::std_dev(&xp),
            sd_q: stats::std_dev(&xq),
            mean_p: stats::mean(&xp),
            mean_q: stats::mean(&xq),
        });
        cols_p.push(xp);
        cols_q.push(xq);
    }
    let slope_p = log_slope(&p.ns, &cols_p);
    let slope_q = log_slope(&p.ns, &cols_q);
    let expected = 1.0 / p.p.0 - 0.5;
    let q = p.q.0;
    let sd_bound_q = (8.0 * 4f64.powf(2.0 / q) * stats::gamma(2.0 / q) / q).sqrt();
    let pass_p = (slope_p.slope - expected).abs() <= p.tolerance;
    let pass_q = slope_q.ci_high <= 0.0 && rows.iter().all(|r| r.sd_q <= sd_bound_q);
    Ok(CltOutcome { p: p.p.0, q, rows, slope_p, expected_slope_p: expected, slope_q, sd_bound_q, pass_p, pass_q })
}

/// Whether some `a` rows share at least `b` columns of ones.
fn has_all_ones(rows: &[u64], a: usize, b: usize, start: usize, acc: u64) -> bool {
    if (acc.count_ones() as usize) < b {
        return false;
    }
    if a == 0 {
        return true;
    }
    (start..rows.len()).any(|i| rows.len() - i >= a && has_all_ones(rows, a - 1, b, i + 1, acc & rows[i]))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Frequency of an all-ones `a × b` submatrix (entries equal to +1) of an
/// `m × n` Rademacher matrix, against the floor `2^{-ab}`.
pub fn sharpness_submatrix(p: &SharpnessParams, seed: u64) -> Result<Vec<SharpnessRow>> {
    if p.m == 0 || p.n == 0 || p.m > 64 || p.n > 64 {
        bail_param!("sharpness needs 1 ≤ m, n ≤ 64");
    }
    if p.trials < super::experiment::MIN_TRIALS {
        return Err(Error::Refused(format!("{} trials is below the minimum of {}", p.trials, super::experiment::MIN_TRIALS)));
    }
    for &[a, b] in &p.shapes {
        if a == 0 || b == 0 || a > p.m || b > p.n {
            bail_param!("submatrix shape {a}×{b} does not fit in {}×{}", p.m, p.n);
        }
        if binomial(p.m, a) > 1e6 {
            return Err(Error::TooLarge(format!("C({}, {a}) row subsets", p.m)));
        }
    }
    let ensemble = EnsembleSpec::rectangular(p.m, p.n, BoundedLaw::Rademacher);
    let per_trial = (0..p.trials)
        .into_par_iter()
        .map(|i| -> Result<(Vec<bool>, Vec<bool>)> {
            let x = ensemble.sample(RngStream::for_trial(seed, i))?;
            let rows: Vec<u64> = (0..p.m)
                .map(|j| (0..p.n).fold(0u64, |acc, k| if x[(j, k)].re > 0.0 { acc | (1 << k) } else { acc }))
                .collect();
            let full = if p.n == 64 { u64::MAX } else { (1u64 << p.n) - 1 };
            let hits = p.shapes.iter().map(|&[a, b]| has_all_ones(&rows, a, b, 0, full)).collect();
            let norms = match p.q {
                None => vec![],
                Some(q) => {
                    let x01 = Matrix::from_fn(p.m, p.n, |j, k| Complex64::new(if x[(j, k)].re > 0.0 { 1.0 } else { 0.0 }, 0.0));
                    let v = opnorm_pq(&x01, conjugate(q.0), q.0)?.value;
                    p.shapes.iter().map(|&[a, b]| v >= ((a * b) as f64).powf(1.0 / q.0) * (1.0 - 1e-12)).collect()
                }
            };
            Ok((hits, norms))
        })
        .collect::<Result<Vec<_>>>()?;
    let t = p.trials;
    Ok(p.shapes
        .iter()
        .enumerate()
        .map(|(s, &[a, b])| {
            let hits = per_trial.iter().filter(|h| h.0[s]).count() as u64;
            let (lo, hi) = stats::clopper_pearson(hits, t, CONFIDENCE);
            let floor = 0.5f64.powi((a * b) as i32);
            let norm_frequency =
                p.q.map(|_| per_trial.iter().filter(|h| h.1[s]).count() as f64 / t as f64);
            SharpnessRow {
                a,
                b,
                hits,
                frequency: hits as f64 / t as f64,
                ci_low: lo,
                ci_high: hi,
                floor,
                inconclusive: (t as f64) * floor < 5.0,
                pass: hi >= floor,
                norm_frequency,
            }
        })
        .collect())
}

/// Median of `‖X‖_{p→q}` against `c · max{m^{1/q}, n^{1/p'}}` with
/// `c = E|x|`.
pub fn median_growth_check(p: &MedianGrowthParams, seed: u64) -> Result<(f64, Vec<MedianGrowthRow>)> {
    p.law.validate()?;
    let c = p.law.mean_abs();
    if c <= 0.0 {
        return Err(Error::Refused("entries with E|x| = 0 give no lower bound".into()));
    }
    if p.trials < super::experiment::MIN_TRIALS {
        return Err(Error::Refused(format!("{} trials is below the minimum of {}", p.trials, super::experiment::MIN_TRIALS)));
    }
    let stat = [StatisticSpec::Opnorm { p: p.p, q: p.q }];
    let rows = p
        .sizes
        .iter()
        .map(|&[m, n]| -> Result<MedianGrowthRow> {
            let e = EnsembleSpec::rectangular(m, n, p.law.clone());
            let mut x = sample_statistics(&e, &stat, p.trials, seed)?.pop().expect("one column");
            x.sort_by(f64::total_cmp);
            let median = stats::lower_median(&x);
            let (lo, hi) = stats::median_ci(&x, CONFIDENCE);
            let lower_bound = c * (m as f64).powf(1.0 / p.q.0).max((n as f64).powf(1.0 / conjugate(p.p.0)));
            Ok(MedianGrowthRow {
                m,
                n,
                median,
                ci_low: lo,
                ci_high: hi,
                mean: stats::mean(&x),
                lower_bound,
                ratio: median / (m.max(n) as f64).powf(1.0 / p.q.0),
                pass: hi >= lower_bound * (1.0 - 1e-12),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((c, rows))
}

/// Compares the interior center `M̂_k` with the median of `λ_k` against
/// `2√(6 ln 2)(√k + √(k-1)) D`.
pub fn interior_center_consistency(p: &InteriorCenterParams, seed: u64) -> Result<(f64, Vec<InteriorCenterRow>)> {
    let e = &p.ensemble;
    e.validate()?;
    if !e.is_selfadjoint() {
        return Err(Error::Incompatible("interior centers need a self-adjoint ensemble".into()));
    }
    if p.trials < super::experiment::MIN_TRIALS {
        return Err(Error::Refused(format!("{} trials is below the minimum of {}", p.trials, super::experiment::MIN_TRIALS)));
    }
    let d = effective_diameter(e)?;
    let n = e.n;
    for &k in &p.ks {
        if k < 2 || k + 1 > n {
            bail_param!("k must lie in [2, n - 1], got {k} with n = {n}");
        }
    }
    let rows = p
        .ks
        .iter()
        .map(|&k| -> Result<InteriorCenterRow> {
            let small_end = 2 * k > n + 1;
            let index = if small_end { n + 1 - k } else { k };
            let (s1, s2) = if small_end {
                (StatisticSpec::Gk { k: index }, StatisticSpec::Gk { k: index - 1 })
            } else {
                (StatisticSpec::Fk { k: index }, StatisticSpec::Fk { k: index - 1 })
            };
            let mut cols = sample_statistics(e, &[StatisticSpec::Lambda { k }, s1, s2], p.trials, seed)?;
            for c in &mut cols {
                c.sort_by(f64::total_cmp);
            }
            let med = |x: &[f64]| if small_end { x[x.len() / 2] } else { stats::lower_median(x) };
            let half = 1.0 - 0.5 * (1.0 - CONFIDENCE);
            let (alo, ahi) = stats::median_ci(&cols[1], half);
            let (blo, bhi) = stats::median_ci(&cols[2], half);
            let m_hat = med(&cols[1]) - med(&cols[2]);
            let m_hat_ci = (alo - bhi, ahi - blo);
            let median_lambda = med(&cols[0]);
            let median_ci = stats::median_ci(&cols[0], CONFIDENCE);
            let slack = (m_hat - m_hat_ci.0).max(m_hat_ci.1 - m_hat)
                + (median_lambda - median_ci.0).max(median_ci.1 - median_lambda);
            let kf = index as f64;
            let bound = 2.0 * (6.0 * LN_2).sqrt() * (kf.sqrt() + (kf - 1.0).sqrt()) * d;
            let gap = (m_hat - median_lambda).abs();
            let comparison = [1.0, 2.0, 4.0, 8.0]
                .iter()
                .map(|s| {
                    let t = s * d * kf.sqrt();
                    EnvelopeComparison {
                        t,
                        akv: 4.0 * (-t * t / (8.0 * kf * kf * d * d)).exp(),
                        interior: 8.0 * (-t * t / (32.0 * kf * d * d)).exp(),
                    }
                })
                .collect();
            Ok(InteriorCenterRow {
                k,
                index,
                small_end,
                m_hat,
                m_hat_ci,
                median_lambda,
                median_ci,
                gap,
                bound,
                slack,
                pass: gap <= bound + slack,
                comparison,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((d, rows))
}
