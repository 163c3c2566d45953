use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::statistic::{Exponent, StatisticSpec};
use crate::ensembles::{effective_diameter, BoundedLaw, EnsembleSpec, Layout};
use crate::error::{bail_param, Error, Result};
use crate::vecnorms::{conjugate, ke_bound, ke_numeric, NormKind, UnconditionalNorm};

/// Tail bound identifier with its parameters. `d` defaults to the
/// ensemble's effective diameter and may only be raised above it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvelopeKind {
    /// `4 exp(-(t/D)^r / 4)`, `r = min(p', q)`, for `‖X‖_{p→q}`.
    Thm11 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
    },
    /// `4 exp(-(t/(L D))^q / 4)` for an `L`-Lipschitz quasiconvex statistic.
    Cor22 {
        q: Exponent,
        l: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
    },
    /// `4 exp(-t² / (8 D²))` for `λ_1` and `λ_n`.
    Thm12Extreme {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
    },
    /// `8 exp(-t² / (32 k D²))` for `λ_k` or `λ_{n-k+1}` about `M_k`.
    Thm12Interior {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
    },
    /// `4 exp(-K_E(t/(L D))² / 4)`.
    Prop24 {
        norm: UnconditionalNorm,
        #[serde(default = "one")]
        l: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
    },
    /// `4 exp(-t² / (4 D²))` for Schatten norms with `p ≥ 2`.
    SchattenHigh {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
    },
    /// `4 exp(-t² / (4 l^{2/p-1} D²))` for `1 ≤ p < 2`, `l = min(m, n)`.
    SchattenLow {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
    },
    /// `4 exp(-t² / (4 l D²))` for unitarily invariant norms with `|||E₁₁||| = 1`.
    UiNorm {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
    },
    /// `4 exp(-t² / (4 D²))` for `s_1`.
    Thm33S1 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
    },
    /// `8 exp(-t² / (16 k D²))` for `s_k` about `M_k`.
    Thm33Sk {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
    },
    /// `4 exp(-t² / (4 m^{2/q-1} n^{2/p'-1} D²))` for `‖X‖_{p→q}`, `1 < q ≤ 2 ≤ p < ∞`.
    MixedRange {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
    },
    /// `exp(-t² / (2 L²))` for Euclidean `L`-Lipschitz statistics of
    /// Gaussian matrices; `L` defaults to the value implied by the variances.
    Gaussian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        l: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

/// An envelope, optionally multiplied by `scale` (used to build
/// deliberately failing runs).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEnvelope {
    #[serde(flatten)]
    pub kind: EnvelopeKind,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub scale: f64,
}

// `scale` is split off by hand so that unknown keys in the remaining
// table are still rejected.
impl<'de> Deserialize<'de> for BoundEnvelope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut map = serde_json::Map::deserialize(d)?;
        let scale = match map.remove("scale") {
            None => 1.0,
            Some(v) => v.as_f64().ok_or_else(|| D::Error::custom("envelope scale must be a number"))?,
        };
        let kind = EnvelopeKind::deserialize(serde_json::Value::Object(map)).map_err(D::Error::custom)?;
        Ok(Self { kind, scale })
    }
}

impl From<EnvelopeKind> for BoundEnvelope {
    fn from(kind: EnvelopeKind) -> Self {
        Self { kind, scale: 1.0 }
    }
}

/// How the experiment is centered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterRule {
    /// Empirical median of the statistic.
    Median,
    /// `M(F_k) - M(F_{k-1})` (or the `G` analogue for the small end).
    EigenDifference,
    /// `M(‖·‖_(k)) - M(‖·‖_(k-1))` with Ky Fan norms.
    KyFanDifference,
}

#[derive(Debug, Clone, PartialEq)]
enum Formula {
    /// `c exp(-(t/s)^r / div)`
    PowerExp { c: f64, r: f64, s: f64, div: f64 },
    /// `4 exp(-K(t/s)² / 4)`, with `K` exact or a lower bound.
    Ke { norm: UnconditionalNorm, s: f64, exact: bool },
}

/// An envelope resolved against a concrete ensemble and statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    formula: Formula,
    scale: f64,
    /// Diameter used, for bounded ensembles.
    pub d: Option<f64>,
    /// Lipschitz constant used by the Gaussian envelope.
    pub lipschitz: Option<f64>,
    pub center: CenterRule,
    /// `k` of an interior centering and whether it goes through the small end.
    pub interior: Option<(usize, bool)>,
    /// `(q, L)` when the statistic is within reach of the mean–median
    /// estimate, i.e. a Lipschitz quasiconvex functional with an
    /// `exp(-t^q)` tail.
    pub gap_params: Option<(f64, f64)>,
}

impl Envelope {
    pub fn eval(&self, t: f64) -> Result<f64> {
        let base = match &self.formula {
            Formula::PowerExp { c, r, s, div } => {
                if t <= 0.0 {
                    *c
                } else if *s == 0.0 {
                    0.0
                } else {
                    c * (-(t / s).powf(*r) / div).exp()
                }
            }
            Formula::Ke { norm, s, exact } => {
                if t <= 0.0 {
                    4.0
                } else if *s == 0.0 {
                    0.0
                } else {
                    let u = t / s;
                    let k = if u > norm.ones_norm() {
                        f64::INFINITY
                    } else if *exact {
                        ke_numeric(norm, u)?
                    } else {
                        ke_bound(norm, u, None)?
                    };
                    4.0 * (-k * k / 4.0).exp()
                }
            }
        };
        Ok(self.scale * base)
    }

    /// `∫₀^∞ envelope(t) dt` without the scale factor, which bounds
    /// `|E F - M F|`.
    pub fn gap_bound(&self) -> Option<f64> {
        let (q, l) = self.gap_params?;
        let d = self.d?;
        Some(l * d * 4f64.powf(1.0 + 1.0 / q) * crate::stats::gamma(1.0 + 1.0 / q))
    }

    /// Largest `t` with `envelope(t) ≥ floor`, by bisection; `None` if the
    /// envelope never drops below `floor`.
    pub fn level_crossing(&self, floor: f64, hi_hint: f64) -> Result<Option<f64>> {
        let mut hi = hi_hint.max(1e-6);
        let mut n = 0;
        while self.eval(hi)? >= floor {
            hi *= 2.0;
            n += 1;
            if n > 200 {
                return Ok(None);
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid)? >= floor {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(lo))
    }
}

fn bounded_d(ensemble: &EnsembleSpec, given: Option<f64>) -> Result<f64> {
    let eff = effective_diameter(ensemble)?;
    match given {
        None => Ok(eff),
        Some(d) if !(d.is_finite() && d >= 0.0) => Err(Error::InvalidParameter(format!("D must be finite and ≥ 0, got {d}"))),
        Some(d) if d < eff * (1.0 - 1e-12) => Err(Error::Incompatible(format!(
            "D = {d} is below the ensemble's effective diameter {eff}"
        ))),
        Some(d) => Ok(d),
    }
}

fn rectangular_only(ensemble: &EnsembleSpec, id: &str) -> Result<()> {
    if ensemble.is_selfadjoint() {
        return Err(Error::Incompatible(format!("{id} needs independent entries (rectangular layout)")));
    }
    Ok(())
}

fn bounded_selfadjoint(ensemble: &EnsembleSpec, id: &str) -> Result<()> {
    if matches!(ensemble.layout, Layout::GaussianHermitian { .. }) {
        return Err(Error::UnboundedSupport(format!("{id} needs bounded entries; the ensemble is Gaussian")));
    }
    if !matches!(ensemble.layout, Layout::SelfAdjoint { .. }) {
        return Err(Error::Incompatible(format!("{id} needs a self-adjoint layout")));
    }
    Ok(())
}

fn incompatible_stat(id: &str, stat: &StatisticSpec) -> Error {
    Error::Incompatible(format!("envelope {id} does not apply to {stat}"))
}

/// Lipschitz constant of Euclidean-Lipschitz spectral statistics of a
/// Gaussian ensemble, from its variances.
fn gaussian_lipschitz(ensemble: &EnsembleSpec) -> Result<f64> {
    match &ensemble.layout {
        Layout::GaussianHermitian { offdiag_variance, diag_variance } => {
            let off = if ensemble.n > 1 { (2.0 * offdiag_variance).sqrt() } else { 0.0 };
            Ok(off.max(diag_variance.sqrt()))
        }
        Layout::Rectangular { law } => law
            .as_slice()
            .iter()
            .map(|l| match l {
                BoundedLaw::Gaussian { variance, .. } => Ok(variance.sqrt()),
                _ => Err(Error::Incompatible("gaussian envelope needs every entry to be Gaussian".into())),
            })
            .try_fold(0.0_f64, |m, v| Ok(m.max(v?))),
        Layout::SelfAdjoint { .. } => Err(Error::Incompatible("gaussian envelope needs a Gaussian ensemble".into())),
    }
}

impl BoundEnvelope {
    pub fn id(&self) -> &'static str {
        match self.kind {
            EnvelopeKind::Thm11 { .. } => "thm11",
            EnvelopeKind::Cor22 { .. } => "cor22",
            EnvelopeKind::Thm12Extreme { .. } => "thm12-extreme",
            EnvelopeKind::Thm12Interior { .. } => "thm12-interior",
            EnvelopeKind::Prop24 { .. } => "prop24",
            EnvelopeKind::SchattenHigh { .. } => "schatten-high",
            EnvelopeKind::SchattenLow { .. } => "schatten-low",
            EnvelopeKind::UiNorm { .. } => "ui-norm",
            EnvelopeKind::Thm33S1 { .. } => "thm33-s1",
            EnvelopeKind::Thm33Sk { .. } => "thm33-sk",
            EnvelopeKind::MixedRange { .. } => "mixed-range",
            EnvelopeKind::Gaussian { .. } => "gaussian",
        }
    }

    /// Checks compatibility with the ensemble and statistic and fixes every
    /// parameter.
    pub fn resolve(&self, ensemble: &EnsembleSpec, stat: &StatisticSpec) -> Result<Envelope> {
        ensemble.validate()?;
        stat.validate(ensemble.m, ensemble.n, ensemble.is_selfadjoint())?;
        if !(self.scale.is_finite() && self.scale > 0.0) {
            bail_param!("envelope scale must be positive, got {}", self.scale);
        }
        let id = self.id();
        let (m, n) = (ensemble.m, ensemble.n);
        let l = m.min(n) as f64;
        let pe = |c: f64, r: f64, s: f64, div: f64| Formula::PowerExp { c, r, s, div };
        let mut env = Envelope {
            formula: pe(4.0, 2.0, 1.0, 4.0),
            scale: self.scale,
            d: None,
            lipschitz: None,
            center: CenterRule::Median,
            interior: None,
            gap_params: None,
        };
        match &self.kind {
            EnvelopeKind::Thm11 { d } => {
                rectangular_only(ensemble, id)?;
                let d = bounded_d(ensemble, *d)?;
                let StatisticSpec::Opnorm { p, q } = stat else { return Err(incompatible_stat(id, stat)) };
                let (p, q) = (p.0, q.0);
                if !(p > 1.0 && p <= 2.0 && q >= 2.0 && q.is_finite()) {
                    return Err(Error::Incompatible(format!("{id} needs 1 < p ≤ 2 ≤ q < ∞, got p = {p}, q = {q}")));
                }
                let r = conjugate(p).min(q);
                env.formula = pe(4.0, r, d, 4.0);
                env.d = Some(d);
                env.gap_params = Some((r, 1.0));
            }
            EnvelopeKind::Cor22 { q, l: lip, d } => {
                let d = bounded_d(ensemble, *d)?;
                if !(q.0 >= 2.0 && q.0.is_finite()) {
                    bail_param!("cor22 needs 2 ≤ q < ∞, got {}", q.0);
                }
                if !(lip.is_finite() && *lip > 0.0) {
                    bail_param!("Lipschitz constant must be positive, got {lip}");
                }
                env.formula = pe(4.0, q.0, lip * d, 4.0);
                env.d = Some(d);
                env.gap_params = Some((q.0, *lip));
            }
            EnvelopeKind::Thm12Extreme { d } => {
                bounded_selfadjoint(ensemble, id)?;
                let d = bounded_d(ensemble, *d)?;
                match stat {
                    StatisticSpec::Lambda { k } if *k == 1 || *k == n => {}
                    _ => return Err(incompatible_stat(id, stat)),
                }
                env.formula = pe(4.0, 2.0, d, 8.0);
                env.d = Some(d);
                env.gap_params = Some((2.0, SQRT_2));
            }
            EnvelopeKind::Thm12Interior { k, d } => {
                bounded_selfadjoint(ensemble, id)?;
                let d = bounded_d(ensemble, *d)?;
                let StatisticSpec::Lambda { k: j } = stat else { return Err(incompatible_stat(id, stat)) };
                let j = *j;
                if j < 2 || j + 1 > n {
                    return Err(Error::Incompatible(format!("{id} needs 2 ≤ k ≤ n - 1, got λ_{j} with n = {n}")));
                }
                let mirror = n + 1 - j;
                let k = k.unwrap_or(j.min(mirror));
                if k != j && k != mirror {
                    return Err(Error::Incompatible(format!("{id} with k = {k} does not cover λ_{j} (n = {n})")));
                }
                let small_end = k == mirror && k != j;
                env.formula = pe(8.0, 2.0, d, 32.0 * k as f64);
                env.d = Some(d);
                env.center = CenterRule::EigenDifference;
                env.interior = Some((k, small_end));
            }
            EnvelopeKind::Prop24 { norm, l: lip, d } => {
                let d = bounded_d(ensemble, *d)?;
                norm.validate()?;
                if !(lip.is_finite() && *lip > 0.0) {
                    bail_param!("Lipschitz constant must be positive, got {lip}");
                }
                let exact = match &norm.kind {
                    NormKind::Orlicz { psi } => psi.as_power().is_some(),
                    _ => true,
                };
                env.formula = Formula::Ke { norm: norm.clone(), s: lip * d, exact };
                env.d = Some(d);
            }
            EnvelopeKind::SchattenHigh { d } => {
                rectangular_only(ensemble, id)?;
                let d = bounded_d(ensemble, *d)?;
                match stat {
                    StatisticSpec::Schatten { p } if p.0 >= 2.0 => {}
                    StatisticSpec::Singular { k: 1 } => {}
                    _ => return Err(incompatible_stat(id, stat)),
                }
                env.formula = pe(4.0, 2.0, d, 4.0);
                env.d = Some(d);
                env.gap_params = Some((2.0, 1.0));
            }
            EnvelopeKind::SchattenLow { d } => {
                rectangular_only(ensemble, id)?;
                let d = bounded_d(ensemble, *d)?;
                let StatisticSpec::Schatten { p } = stat else { return Err(incompatible_stat(id, stat)) };
                if p.0 >= 2.0 {
                    return Err(Error::Incompatible(format!("{id} needs 1 ≤ p < 2, got {}", p.0)));
                }
                let growth = l.powf(2.0 / p.0 - 1.0);
                env.formula = pe(4.0, 2.0, d, 4.0 * growth);
                env.d = Some(d);
                env.gap_params = Some((2.0, growth.sqrt()));
            }
            EnvelopeKind::UiNorm { d } => {
                rectangular_only(ensemble, id)?;
                let d = bounded_d(ensemble, *d)?;
                match stat {
                    StatisticSpec::Schatten { .. } | StatisticSpec::Kyfan { .. } | StatisticSpec::Singular { k: 1 } => {}
                    _ => return Err(incompatible_stat(id, stat)),
                }
                env.formula = pe(4.0, 2.0, d, 4.0 * l);
                env.d = Some(d);
                env.gap_params = Some((2.0, l.sqrt()));
            }
            EnvelopeKind::Thm33S1 { d } => {
                rectangular_only(ensemble, id)?;
                let d = bounded_d(ensemble, *d)?;
                if *stat != (StatisticSpec::Singular { k: 1 }) {
                    return Err(incompatible_stat(id, stat));
                }
                env.formula = pe(4.0, 2.0, d, 4.0);
                env.d = Some(d);
                env.gap_params = Some((2.0, 1.0));
            }
            EnvelopeKind::Thm33Sk { k, d } => {
                rectangular_only(ensemble, id)?;
                let d = bounded_d(ensemble, *d)?;
                let StatisticSpec::Singular { k: j } = stat else { return Err(incompatible_stat(id, stat)) };
                let k = k.unwrap_or(*j);
                if k != *j || k < 2 {
                    return Err(Error::Incompatible(format!("{id} needs k = index of s_k ≥ 2, got k = {k}, s_{j}")));
                }
                env.formula = pe(8.0, 2.0, d, 16.0 * k as f64);
                env.d = Some(d);
                env.center = CenterRule::KyFanDifference;
                env.interior = Some((k, false));
            }
            EnvelopeKind::MixedRange { d } => {
                rectangular_only(ensemble, id)?;
                let d = bounded_d(ensemble, *d)?;
                let StatisticSpec::Opnorm { p, q } = stat else { return Err(incompatible_stat(id, stat)) };
                let (p, q) = (p.0, q.0);
                if !(q > 1.0 && q <= 2.0 && p >= 2.0 && p.is_finite()) {
                    return Err(Error::Incompatible(format!("{id} needs 1 < q ≤ 2 ≤ p < ∞, got p = {p}, q = {q}")));
                }
                let growth = (m as f64).powf(2.0 / q - 1.0) * (n as f64).powf(2.0 / conjugate(p) - 1.0);
                env.formula = pe(4.0, 2.0, d, 4.0 * growth);
                env.d = Some(d);
                env.gap_params = Some((2.0, growth.sqrt()));
            }
            EnvelopeKind::Gaussian { l: given } => {
                if ensemble.is_bounded() {
                    return Err(Error::Incompatible("gaussian envelope needs a Gaussian ensemble".into()));
                }
                let lip = gaussian_lipschitz(ensemble)?;
                let lip = match given {
                    None => lip,
                    Some(g) if *g >= lip * (1.0 - 1e-12) && g.is_finite() => *g,
                    Some(g) => {
                        return Err(Error::Incompatible(format!("L = {g} is below the ensemble's Lipschitz constant {lip}")))
                    }
                };
                match stat {
                    StatisticSpec::Lambda { .. } | StatisticSpec::Singular { .. } => {}
                    StatisticSpec::Schatten { p } if p.0 >= 2.0 => {}
                    StatisticSpec::Opnorm { p, q } if p.0 <= 2.0 && q.0 >= 2.0 => {}
                    _ => return Err(incompatible_stat(id, stat)),
                }
                env.formula = pe(1.0, 2.0, lip, 2.0);
                env.lipschitz = Some(lip);
            }
        }
        if env.d.is_some() && !ensemble.is_bounded() {
            return Err(Error::UnboundedSupport(format!("envelope {id} needs bounded entries")));
        }
        Ok(env)
    }
}
