//! Sup-norm deviation bounds for the multinomial MLE.
//!
//! Every bound returns a [`BoundResult`] carrying the radius, the total
//! failure probability it spends, and the named sub-terms that produced it.
//! Sums of the form `Σ_k k^{m−k} n^k x^k` are evaluated in log space and
//! combined with log-sum-exp, since `k^{m−k}` alone overflows `f64` for `m`
//! around 60.
//!
//! | method            | needs `p` | failure probability |
//! |-------------------|-----------|---------------------|
//! | `Baseline`        | no        | δ                   |
//! | `Th1Oracle`       | yes       | δ                   |
//! | `Th1WorstCase`    | no        | δ                   |
//! | `Th2`, `Cor21`    | no (p̂)    | δ₁ + δ₂             |
//! | `Th3Ub1..Th3Ub3`  | yes       | δ + 81/n            |
//! | `Th4`             | no (v̂*)   | δ + 81/n            |

mod bernstein;
mod moment;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bernstein::{th3_bounds, th4_bound, Th3Bounds, TH3_MIN_N};
pub use moment::{
    cor21_bound, corollary_m_factor, epsilon_term, optimal_m_corollary, optimal_m_data_independent, optimal_m_th2,
    taylor_gap, th1_oracle_bound, th1_worst_case_bound, th2_bound, worst_case_leading_term, EpsilonTerm, COR21_A,
};

use crate::dist::MleEstimate;
use crate::{Error, Result};

/// Default share of δ given to the moment term of the data-dependent
/// bounds; the remainder goes to the concentration of the plug-in sum.
pub const DEFAULT_DELTA1_SHARE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    Baseline,
    Th1Oracle,
    Th1WorstCase,
    Th2,
    Cor21,
    Th3Ub1,
    Th3Ub2,
    Th3Ub3,
    Th4,
}

impl BoundMethod {
    pub const ALL: [BoundMethod; 9] = [
        BoundMethod::Baseline,
        BoundMethod::Th1Oracle,
        BoundMethod::Th1WorstCase,
        BoundMethod::Th2,
        BoundMethod::Cor21,
        BoundMethod::Th3Ub1,
        BoundMethod::Th3Ub2,
        BoundMethod::Th3Ub3,
        BoundMethod::Th4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundMethod::Baseline => "baseline",
            BoundMethod::Th1Oracle => "th1_oracle",
            BoundMethod::Th1WorstCase => "th1_worst_case",
            BoundMethod::Th2 => "th2",
            BoundMethod::Cor21 => "cor21",
            BoundMethod::Th3Ub1 => "th3_ub1",
            BoundMethod::Th3Ub2 => "th3_ub2",
            BoundMethod::Th3Ub3 => "th3_ub3",
            BoundMethod::Th4 => "th4",
        }
    }

    /// Whether the radius changes with the sample (as opposed to depending
    /// only on `p`, `n` and δ).
    pub fn is_data_dependent(self) -> bool {
        matches!(self, BoundMethod::Th2 | BoundMethod::Cor21 | BoundMethod::Th4)
    }

    /// Whether the radius needs the true distribution.
    pub fn needs_truth(self) -> bool {
        matches!(
            self,
            BoundMethod::Th1Oracle | BoundMethod::Th3Ub1 | BoundMethod::Th3Ub2 | BoundMethod::Th3Ub3
        )
    }

    /// Smallest sample size the bound is stated for.
    pub fn min_n(self) -> u64 {
        match self {
            BoundMethod::Th3Ub1 | BoundMethod::Th3Ub2 | BoundMethod::Th3Ub3 | BoundMethod::Th4 => TH3_MIN_N,
            BoundMethod::Th2 | BoundMethod::Cor21 | BoundMethod::Th1Oracle | BoundMethod::Th1WorstCase => 2,
            BoundMethod::Baseline => 1,
        }
    }

    fn uses_split(self) -> bool {
        matches!(self, BoundMethod::Th2 | BoundMethod::Cor21)
    }
}

impl fmt::Display for BoundMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let method = match key.as_str() {
            "baseline" => BoundMethod::Baseline,
            "th1" | "th1_oracle" => BoundMethod::Th1Oracle,
            "th1_worst_case" | "th1_worstcase" | "th1_worst" => BoundMethod::Th1WorstCase,
            "th2" => BoundMethod::Th2,
            "cor21" | "cor2.1" => BoundMethod::Cor21,
            "th3_ub1" | "th3" => BoundMethod::Th3Ub1,
            "th3_ub2" => BoundMethod::Th3Ub2,
            "th3_ub3" => BoundMethod::Th3Ub3,
            "th4" => BoundMethod::Th4,
            _ => return Err(Error::invalid(format!("unknown bound method {s:?}"))),
        };
        Ok(method)
    }
}

/// Moment order `m`: explicit even integer, or chosen analytically per
/// method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MChoice {
    #[default]
    Auto,
    Fixed(u32),
}

impl MChoice {
    pub fn validate(self) -> Result<()> {
        match self {
            MChoice::Fixed(m) if m < 2 || m % 2 != 0 => {
                Err(Error::invalid(format!("moment order m must be even and at least 2, got {m}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for MChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MChoice::Auto => f.write_str("auto"),
            MChoice::Fixed(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for MChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(MChoice::Auto);
        }
        let m: u32 = s.parse().map_err(|_| Error::invalid(format!("m must be an even integer or \"auto\", got {s:?}")))?;
        let choice = MChoice::Fixed(m);
        choice.validate()?;
        Ok(choice)
    }
}

impl Serialize for MChoice {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MChoice::Auto => serializer.serialize_str("auto"),
            MChoice::Fixed(m) => serializer.serialize_u32(*m),
        }
    }
}

/// Which bound to evaluate and with what parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundSpec {
    pub method: BoundMethod,
    pub delta: f64,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub m: MChoice,
}

impl BoundSpec {
    pub fn new(method: BoundMethod, delta: f64) -> Self {
        Self { method, delta, delta1: None, delta2: None, m: MChoice::Auto }
    }

    pub fn with_m(mut self, m: MChoice) -> Self {
        self.m = m;
        self
    }

    pub fn with_split(mut self, delta1: f64, delta2: f64) -> Self {
        self.delta1 = Some(delta1);
        self.delta2 = Some(delta2);
        self
    }

    /// Same method and split ratio at a different total δ.
    pub fn at_delta(&self, delta: f64) -> Self {
        let scale = delta / self.delta;
        Self {
            delta,
            delta1: self.delta1.map(|d| d * scale),
            delta2: self.delta2.map(|d| d * scale),
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_delta("delta", self.delta)?;
        self.m.validate()?;
        if let Some(d1) = self.delta1 {
            check_delta("delta1", d1)?;
        }
        if let Some(d2) = self.delta2 {
            check_delta("delta2", d2)?;
        }
        if let (Some(d1), Some(d2)) = (self.delta1, self.delta2) {
            if d1 + d2 > self.delta * (1.0 + 1e-12) {
                return Err(Error::invalid(format!("delta1 + delta2 = {} exceeds delta = {}", d1 + d2, self.delta)));
            }
        }
        Ok(())
    }

    /// `(δ₁, δ₂)`, filling missing parts from the default 0.99/0.01 split.
    pub fn split(&self) -> (f64, f64) {
        match (self.delta1, self.delta2) {
            (Some(d1), Some(d2)) => (d1, d2),
            (Some(d1), None) => (d1, self.delta - d1),
            (None, Some(d2)) => (self.delta - d2, d2),
            (None, None) => (DEFAULT_DELTA1_SHARE * self.delta, (1.0 - DEFAULT_DELTA1_SHARE) * self.delta),
        }
    }

    /// Evaluates the bound. `truth` is only read by methods that need the
    /// true distribution; `phat` supplies `n` and the plug-in quantities.
    pub fn evaluate(&self, truth: &[f64], phat: &MleEstimate) -> Result<BoundResult> {
        self.validate()?;
        let n = phat.n();
        let mut result = match self.method {
            BoundMethod::Baseline => baseline_bound(n, self.delta),
            BoundMethod::Th1Oracle => th1_oracle_bound(truth, n, self.delta, self.m),
            BoundMethod::Th1WorstCase => th1_worst_case_bound(n, self.delta, self.m),
            BoundMethod::Th2 => {
                let (d1, d2) = self.split();
                th2_bound(phat, d1, d2, self.m)
            }
            BoundMethod::Cor21 => {
                let (d1, d2) = self.split();
                cor21_bound(phat, d1, d2, self.m)
            }
            BoundMethod::Th3Ub1 => th3_bounds(truth, n, self.delta).map(|b| b.ub1),
            BoundMethod::Th3Ub2 => th3_bounds(truth, n, self.delta).map(|b| b.ub2),
            BoundMethod::Th3Ub3 => th3_bounds(truth, n, self.delta).map(|b| b.ub3),
            BoundMethod::Th4 => th4_bound(phat.max_variance(), n, self.delta),
        }?;
        if self.method.uses_split() {
            let (d1, d2) = self.split();
            result.components.insert("delta1".into(), d1);
            result.components.insert("delta2".into(), d2);
        }
        Ok(result)
    }
}

/// A computed radius `T` with `P(max_i |p_i − p̂_i| > T) ≤ failure_prob`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    pub method: BoundMethod,
    pub radius: f64,
    pub m_used: Option<u32>,
    pub failure_prob: f64,
    /// Set when `failure_prob ≥ 1`, i.e. the guarantee says nothing.
    pub vacuous: bool,
    pub components: BTreeMap<String, f64>,
}

impl BoundResult {
    pub(crate) fn new(method: BoundMethod, radius: f64, failure_prob: f64) -> Self {
        Self {
            method,
            radius,
            m_used: None,
            failure_prob,
            vacuous: failure_prob >= 1.0,
            components: BTreeMap::new(),
        }
    }

    pub(crate) fn component(mut self, name: &str, value: f64) -> Self {
        self.components.insert(name.to_string(), value);
        self
    }

    pub const CSV_HEADER: [&'static str; 5] = ["method", "radius", "m_used", "failure_prob", "vacuous"];

    pub fn csv_record(&self) -> [String; 5] {
        [
            self.method.to_string(),
            format!("{:e}", self.radius),
            self.m_used.map(|m| m.to_string()).unwrap_or_default(),
            format!("{:e}", self.failure_prob),
            self.vacuous.to_string(),
        ]
    }
}

/// `√(1/n) + √(ln(1/δ)/(2n))`, the McDiarmid baseline.
pub fn baseline_bound(n: u64, delta: f64) -> Result<BoundResult> {
    check_delta("delta", delta)?;
    check_n(n, 1)?;
    let n = n as f64;
    let first = (1.0 / n).sqrt();
    let second = ((1.0 / delta).ln() / (2.0 * n)).sqrt();
    Ok(BoundResult::new(BoundMethod::Baseline, first + second, delta)
        .component("expectation_term", first)
        .component("deviation_term", second))
}

pub(crate) fn check_delta(name: &str, delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in (0, 1), got {delta}")))
    }
}

pub(crate) fn check_n(n: u64, min: u64) -> Result<()> {
    if n >= min {
        Ok(())
    } else {
        Err(Error::invalid(format!("sample size must be at least {min}, got {n}")))
    }
}
