//! Bernstein-type bounds driven by the largest coordinate variance.

use super::{check_delta, BoundMethod, BoundResult};
use crate::dist::{log_rank_variance, max_variance, phi};
use crate::{Error, Result};

/// Smallest sample size the variance-adaptive bounds are stated for.
pub const TH3_MIN_N: u64 = 81;

/// The three oracle radii, ordered by how much of the distribution they use.
#[derive(Debug, Clone, PartialEq)]
pub struct Th3Bounds {
    /// With the log-rank variance `V*`.
    pub ub1: BoundResult,
    /// With `φ(v*)`.
    pub ub2: BoundResult,
    /// With `v*·ln(n+1)`.
    pub ub3: BoundResult,
}

fn check_range(n: u64) -> Result<()> {
    if n < TH3_MIN_N {
        return Err(Error::out_of_range(format!(
            "variance-adaptive bounds require n ≥ {TH3_MIN_N}, got n = {n}"
        )));
    }
    Ok(())
}

fn failure_prob(n: u64, delta: f64) -> f64 {
    delta + TH3_MIN_N as f64 / n as f64
}

/// `(4/(3n))·ln(2(n+1)/δ) + ln n / n`.
fn tail_term(n: f64, delta: f64) -> f64 {
    4.0 / (3.0 * n) * (2.0 * (n + 1.0) / delta).ln() + n.ln() / n
}

pub fn th3_bounds(p: &[f64], n: u64, delta: f64) -> Result<Th3Bounds> {
    check_delta("delta", delta)?;
    check_range(n)?;
    let nf = n as f64;
    let v_star = max_variance(p);
    let big_v = log_rank_variance(p);
    let tail = tail_term(nf, delta);
    let fp = failure_prob(n, delta);
    let make = |method, x: f64, name: &str| {
        let radius = 2.0 * (x / nf + v_star / nf * (2.0 / delta).ln()).sqrt() + tail;
        BoundResult::new(method, radius, fp)
            .component(name, x)
            .component("v_star", v_star)
            .component("tail", tail)
    };
    Ok(Th3Bounds {
        ub1: make(BoundMethod::Th3Ub1, big_v, "log_rank_variance"),
        ub2: make(BoundMethod::Th3Ub2, phi(v_star)?, "phi_v_star"),
        ub3: make(BoundMethod::Th3Ub3, v_star * (nf + 1.0).ln(), "v_star_log_n"),
    })
}

/// Empirical version: `a + 3b²/2 + b√a + 3b√v̂*/2`.
pub fn th4_bound(vhat_star: f64, n: u64, delta: f64) -> Result<BoundResult> {
    check_delta("delta", delta)?;
    check_range(n)?;
    if !(0.0..=0.25).contains(&vhat_star) {
        return Err(Error::invalid(format!("empirical max variance must lie in [0, 1/4], got {vhat_star}")));
    }
    let nf = n as f64;
    let a = tail_term(nf, delta);
    let b = 2.0 * (((nf + 1.0).ln() + (2.0 / delta).ln()) / nf).sqrt();
    let radius = a + 1.5 * b * b + b * a.sqrt() + 1.5 * b * vhat_star.sqrt();
    Ok(BoundResult::new(BoundMethod::Th4, radius, failure_prob(n, delta))
        .component("a", a)
        .component("b", b)
        .component("vhat_star", vhat_star))
}
