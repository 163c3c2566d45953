use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{bail_param, Error, Result};
use crate::matstat::{eigvals_hermitian, opnorm_pq, singular_values, Spectrum};
use crate::vecnorms::lp_of_moduli;
use crate::Matrix;

/// An exponent in `[1, ∞]`. Configs may write it as a number, a fraction
/// such as `"4/3"`, or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent(pub f64);

impl Exponent {
    pub fn get(self) -> f64 {
        self.0
    }
}

impl From<f64> for Exponent {
    fn from(x: f64) -> Self {
        Exponent(x)
    }
}

impl FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let v = match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => f64::INFINITY,
            _ => match t.split_once('/') {
                Some((a, b)) => {
                    let a: f64 = a.trim().parse().map_err(|_| Error::InvalidParameter(format!("bad exponent {s:?}")))?;
                    let b: f64 = b.trim().parse().map_err(|_| Error::InvalidParameter(format!("bad exponent {s:?}")))?;
                    a / b
                }
                None => t.parse().map_err(|_| Error::InvalidParameter(format!("bad exponent {s:?}")))?,
            },
        };
        if v.is_nan() || v < 1.0 {
            bail_param!("exponent must lie in [1, ∞], got {s:?}");
        }
        Ok(Exponent(v))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Str(String),
        }
        let v = match Raw::deserialize(d)? {
            Raw::Num(x) => x,
            Raw::Int(i) => i as f64,
            Raw::Str(s) => return s.parse().map_err(serde::de::Error::custom),
        };
        if v.is_nan() || v < 1.0 {
            return Err(serde::de::Error::custom(format!("exponent must lie in [1, ∞], got {v}")));
        }
        Ok(Exponent(v))
    }
}

/// A scalar functional of a sampled matrix. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StatisticSpec {
    /// `‖A‖_{p→q}`
    Opnorm { p: Exponent, q: Exponent },
    /// `λ_k`, the k-th largest eigenvalue
    Lambda { k: usize },
    /// `s_k`, the k-th largest singular value
    Singular { k: usize },
    Schatten { p: Exponent },
    Kyfan { k: usize },
    /// Sum of the k largest eigenvalues.
    Fk { k: usize },
    /// Sum of the k smallest eigenvalues.
    Gk { k: usize },
    /// Entrywise ℓp norm; for a 0/1 row vector this is `S^{1/p}` with `S`
    /// the number of ones.
    BinomialRoot { p: Exponent },
}

impl fmt::Display for StatisticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatisticSpec::Opnorm { p, q } => write!(f, "opnorm({p}->{q})"),
            StatisticSpec::Lambda { k } => write!(f, "lambda({k})"),
            StatisticSpec::Singular { k } => write!(f, "singular({k})"),
            StatisticSpec::Schatten { p } => write!(f, "schatten({p})"),
            StatisticSpec::Kyfan { k } => write!(f, "kyfan({k})"),
            StatisticSpec::Fk { k } => write!(f, "F({k})"),
            StatisticSpec::Gk { k } => write!(f, "G({k})"),
            StatisticSpec::BinomialRoot { p } => write!(f, "binomial-root({p})"),
        }
    }
}

impl StatisticSpec {
    fn needs_eigen(&self) -> bool {
        matches!(self, StatisticSpec::Lambda { .. } | StatisticSpec::Fk { .. } | StatisticSpec::Gk { .. })
    }

    fn needs_singular(&self) -> bool {
        matches!(self, StatisticSpec::Singular { .. } | StatisticSpec::Schatten { .. } | StatisticSpec::Kyfan { .. })
    }

    /// Checks parameters against an `m × n` ensemble.
    pub fn validate(&self, m: usize, n: usize, selfadjoint: bool) -> Result<()> {
        let l = m.min(n);
        let index = |k: usize, top: usize, what: &str| -> Result<()> {
            if k == 0 || k > top {
                bail_param!("{what} index must lie in 1..={top}, got {k}");
            }
            Ok(())
        };
        match self {
            StatisticSpec::Opnorm { p, q } => {
                if p.0 < 1.0 || q.0 < 1.0 {
                    bail_param!("operator norm exponents must lie in [1, ∞]");
                }
                Ok(())
            }
            StatisticSpec::Lambda { k } | StatisticSpec::Fk { k } | StatisticSpec::Gk { k } => {
                if !selfadjoint {
                    return Err(Error::Incompatible(format!("{self} needs a self-adjoint ensemble")));
                }
                index(*k, n, "eigenvalue")
            }
            StatisticSpec::Singular { k } | StatisticSpec::Kyfan { k } => index(*k, l, "singular value"),
            StatisticSpec::Schatten { .. } | StatisticSpec::BinomialRoot { .. } => Ok(()),
        }
    }

    /// Whether the natural median for this statistic is the upper one.
    /// Functionals of the small end of the spectrum use the upper median so
    /// that replacing `X` by `-X` maps every report onto its mirror exactly.
    pub fn upper_median(&self, n: usize) -> bool {
        match self {
            StatisticSpec::Lambda { k } => 2 * k > n + 1,
            StatisticSpec::Gk { .. } => true,
            _ => false,
        }
    }
}

/// Evaluates several statistics on one matrix, computing each spectrum
/// at most once.
pub fn evaluate_all(stats: &[StatisticSpec], a: &Matrix) -> Result<Vec<f64>> {
    let eig: Option<Spectrum> =
        if stats.iter().any(StatisticSpec::needs_eigen) { Some(eigvals_hermitian(a)?) } else { None };
    let sv: Option<Spectrum> =
        if stats.iter().any(StatisticSpec::needs_singular) { Some(singular_values(a)?) } else { None };
    stats
        .iter()
        .map(|s| {
            let e = || eig.as_ref().expect("computed above");
            let v = || sv.as_ref().expect("computed above");
            let check = |k: usize, len: usize| -> Result<()> {
                if k == 0 || k > len {
                    bail_param!("index {k} out of range 1..={len}");
                }
                Ok(())
            };
            Ok(match s {
                StatisticSpec::Opnorm { p, q } => opnorm_pq(a, p.0, q.0)?.value,
                StatisticSpec::Lambda { k } => {
                    check(*k, e().len())?;
                    e().kth(*k)
                }
                StatisticSpec::Fk { k } => {
                    check(*k, e().len())?;
                    e().values[..*k].iter().sum()
                }
                StatisticSpec::Gk { k } => {
                    let n = e().len();
                    check(*k, n)?;
                    e().values[n - k..].iter().rev().sum()
                }
                StatisticSpec::Singular { k } => {
                    check(*k, v().len())?;
                    v().kth(*k)
                }
                StatisticSpec::Kyfan { k } => {
                    check(*k, v().len())?;
                    v().values[..*k].iter().sum()
                }
                StatisticSpec::Schatten { p } => lp_of_moduli(v().values.iter().copied(), p.0),
                StatisticSpec::BinomialRoot { p } => lp_of_moduli(a.data().iter().map(|z| z.norm()), p.0),
            })
        })
        .collect()
}
