//! Numerical checks of the computable propositions behind the bounds.
//!
//! Each check is a grid evaluation; [`verify_all`] runs them with fixed
//! grids and a fixed seed and returns a report of pass/fail entries.

use rand_core::RngCore;
use serde::Serialize;

use crate::binomial::normal_quantile;
use crate::dist::{max_variance, sup_dev, Distribution};
use crate::numeric::KahanSum;
use crate::rng::{self, uniform01};
use crate::{Error, Result};

/// `f(n) = β^{−β} n² ((n−β)/n)^{β−n} / (2^β − 2)` with `β = ln n`.
pub fn f_of_n(n: u64) -> Result<f64> {
    Ok(ln_f_of_n(n)?.exp())
}

/// `ln f(n)`, evaluated without forming the large intermediate powers.
pub fn ln_f_of_n(n: u64) -> Result<f64> {
    if n < 10 {
        return Err(Error::out_of_range(format!("f(n) is studied for n ≥ 10, got {n}")));
    }
    let nf = n as f64;
    let beta = nf.ln();
    let ln_denominator = ((beta * 2f64.ln()).exp() - 2.0).ln();
    Ok(-beta * beta.ln() + 2.0 * nf.ln() + (nf - beta) * (nf.ln() - (nf - beta).ln()) - ln_denominator)
}

/// Probability bound for the light-mass event, `2f(n)/n`; at most `81/n`.
pub fn light_mass_failure_prob(n: u64) -> Result<f64> {
    Ok(2.0 * f_of_n(n)? / n as f64)
}

/// Two distributions on `n` symbols that are hard to tell apart from `n`
/// samples yet far apart in sup norm.
#[derive(Debug, Clone)]
pub struct FanoPair {
    pub p: Distribution,
    pub q: Distribution,
    pub n: u64,
}

impl FanoPair {
    /// `p₁` of the construction.
    pub fn heavy_mass(&self) -> f64 {
        self.p.probs()[0]
    }

    /// Common mass `b = (1 − p₁)/(n − 1)` of the remaining symbols.
    pub fn light_mass(&self) -> f64 {
        self.p.probs()[1]
    }

    pub fn separation(&self) -> f64 {
        sup_dev(self.p.probs(), self.q.probs())
    }
}

/// `p₁ = ln n / (2n·ln ln n)`, the rest uniform; `q` swaps symbols 1 and 2.
pub fn fano_pair(n: u64) -> Result<FanoPair> {
    if n < 16 {
        return Err(Error::out_of_range(format!("construction needs n ≥ 16, got {n}")));
    }
    let nf = n as f64;
    let p1 = nf.ln() / (2.0 * nf * nf.ln().ln());
    let b = (1.0 - p1) / (nf - 1.0);
    let mut probs = vec![b; n as usize];
    probs[0] = p1;
    let mut swapped = probs.clone();
    swapped.swap(0, 1);
    Ok(FanoPair { p: Distribution::new(probs)?, q: Distribution::new(swapped)?, n })
}

/// `D(p‖q) = Σ p_i ln(p_i/q_i)`, with `0·ln(0/q) = 0`.
pub fn kl(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::invalid(format!("support sizes differ: {} vs {}", p.len(), q.len())));
    }
    let mut acc = KahanSum::default();
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::invalid(format!("p is not absolutely continuous w.r.t. q at symbol {i}")));
        }
        acc.add(pi * (pi / qi).ln());
    }
    Ok(acc.total().max(0.0))
}

/// First-order lower bound `z_{δ/2}·√(p(1−p)/n)` on the expected length
/// of a selective interval for the top symbol.
pub fn selective_lb(p_top: f64, n: u64, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_top) {
        return Err(Error::invalid(format!("p_top must lie in [0, 1], got {p_top}")));
    }
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    Ok(normal_quantile(delta / 2.0)? * (p_top * (1.0 - p_top) / n as f64).sqrt())
}

/// Whether the largest coordinate variance is attained at the largest mass.
pub fn argmax_variance_check(p: &[f64]) -> bool {
    let top = p.iter().copied().fold(0.0, f64::max);
    (max_variance(p) - top * (1.0 - top)).abs() <= 1e-12
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryReport {
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name: name.to_string(), passed, detail }
}

/// Integer argmax and maximum of `f` over `lo..=hi`.
pub fn f_argmax(lo: u64, hi: u64) -> Result<(u64, f64)> {
    let mut best = (lo, f64::NEG_INFINITY);
    for n in lo..=hi {
        let v = f_of_n(n)?;
        if v > best.1 {
            best = (n, v);
        }
    }
    Ok(best)
}

/// Whether `ln f` is strictly decreasing on `lo..=hi`; returns the first
/// violation if any.
pub fn f_decreasing_from(lo: u64, hi: u64) -> Result<Option<u64>> {
    let mut prev = ln_f_of_n(lo)?;
    for n in lo + 1..=hi {
        let cur = ln_f_of_n(n)?;
        if cur >= prev {
            return Ok(Some(n));
        }
        prev = cur;
    }
    Ok(None)
}

/// `(n/ln n)·D(p‖q)` over the construction, which tends to 1/2.
pub fn scaled_fano_kl(n: u64) -> Result<f64> {
    let pair = fano_pair(n)?;
    let nf = n as f64;
    Ok(nf / nf.ln() * kl(pair.p.probs(), pair.q.probs())?)
}

/// Random probability vector over `a` symbols with a random number of
/// exact zeros and occasional dominant masses.
pub fn random_distribution(rng: &mut rng::StreamRng, a: usize) -> Vec<f64> {
    let spike = rng.next_u64() % 4 == 0;
    let mut w: Vec<f64> = (0..a)
        .map(|i| {
            let u = uniform01(rng);
            if u < 0.1 {
                0.0
            } else if spike && i == 0 {
                50.0 * u
            } else {
                -u.ln()
            }
        })
        .collect();
    if w.iter().all(|x| *x == 0.0) {
        w[0] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Runs every check with its documented grid.
pub fn verify_all(seed: u64) -> Result<TheoryReport> {
    let mut checks = Vec::new();

    let (argmax, max) = f_argmax(10, 200)?;
    checks.push(check(
        "f_argmax_at_33",
        argmax == 33,
        format!("argmax over 10..=200 is n = {argmax} with f = {max:.9}"),
    ));

    let mut grid_max = (10u64, 0.0f64);
    let mut n = 10.0f64;
    while n <= 1e6 {
        let v = f_of_n(n.round() as u64)?;
        if v > grid_max.1 {
            grid_max = (n.round() as u64, v);
        }
        n *= 1.05;
    }
    for n in 10..=300 {
        let v = f_of_n(n)?;
        if v > grid_max.1 {
            grid_max = (n, v);
        }
    }
    checks.push(check(
        "f_at_most_81_over_2",
        grid_max.1 <= 40.5,
        format!("max f on 10..=300 and a 5% log grid to 1e6 is {:.9} at n = {}", grid_max.1, grid_max.0),
    ));

    let violation = f_decreasing_from(201, 100_000)?;
    checks.push(check(
        "f_decreasing_after_200",
        violation.is_none(),
        match violation {
            None => "ln f strictly decreasing on 201..=100000".to_string(),
            Some(n) => format!("ln f increases at n = {n}"),
        },
    ));

    let ratio = |n: u64| {
        let b = (n as f64).ln();
        b * b / (n as f64 - b)
    };
    let ratio_ok = (10..100_000u64).all(|n| ratio(n + 1) < ratio(n));
    checks.push(check("beta_ratio_decreasing", ratio_ok, "β²/(n−β) on 10..=100000".to_string()));

    let mut light_ok = true;
    for n in (10..=1000).chain((1..=100).map(|i| 1000 * i * i)) {
        let v = light_mass_failure_prob(n)?;
        light_ok &= v <= 81.0 / n as f64 && (v - 2.0 * f_of_n(n)? / n as f64).abs() <= 1e-15 * v.max(1.0);
    }
    checks.push(check("light_mass_at_most_81_over_n", light_ok, "n on 10..=1000 and 1000·i², i ≤ 100".to_string()));

    let scaled: Vec<f64> = [10_000u64, 100_000, 1_000_000, 10_000_000]
        .iter()
        .map(|&n| scaled_fano_kl(n))
        .collect::<Result<_>>()?;
    let trend = scaled.windows(2).all(|w| w[1] > w[0] && (0.5 - w[1]).abs() < (0.5 - w[0]).abs());
    checks.push(check(
        "fano_kl_trend",
        trend,
        format!("(n/ln n)·D at n = 1e4..1e7: {scaled:.4?}"),
    ));
    checks.push(check(
        "fano_kl_limit_at_1e7",
        (scaled[3] - 0.5).abs() <= 0.1,
        format!("(n/ln n)·D at n = 1e7 is {:.4}, target 0.5 ± 0.1", scaled[3]),
    ));

    let pair = fano_pair(100_000)?;
    let nf = 100_000f64;
    let c = 0.25;
    let sep = pair.separation();
    checks.push(check(
        "fano_separation",
        sep >= c * nf.ln() / (nf * nf.ln().ln()) && pair.heavy_mass() > pair.light_mass(),
        format!("‖p − q‖∞ = {sep:.3e} at n = 1e5, c = {c}"),
    ));

    let mut rng = rng::stream(seed);
    let mut argmax_ok = true;
    for i in 0..10_000 {
        let a = 2 + i % 29;
        argmax_ok &= argmax_variance_check(&random_distribution(&mut rng, a));
    }
    checks.push(check(
        "argmax_variance",
        argmax_ok,
        "10000 random distributions on 2..=30 symbols".to_string(),
    ));

    let lb = selective_lb(0.0213, 10_000, 0.05)?;
    checks.push(check(
        "selective_lb_reference",
        (lb - 0.00283).abs() < 5e-6,
        format!("first-order lower bound at p = 0.0213, n = 1e4, δ = 0.05: {lb:.6}"),
    ));

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(TheoryReport { checks, all_passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_reference_values() {
        assert!((f_of_n(32).unwrap() - 40.131_040_557).abs() < 1e-8);
        assert!((f_of_n(33).unwrap() - 40.125_974).abs() < 1e-5);
        assert!((f_of_n(10).unwrap() - 37.449).abs() < 1e-3);
        assert!((f_of_n(1000).unwrap() - 13.168).abs() < 1e-3);
        assert!(matches!(f_of_n(9), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn light_mass_identity() {
        for n in [10, 33, 10_000] {
            let v = light_mass_failure_prob(n).unwrap();
            assert!((v - 2.0 * f_of_n(n).unwrap() / n as f64).abs() < 1e-15);
            assert!(v <= 81.0 / n as f64);
        }
    }

    #[test]
    fn kl_basics() {
        assert_eq!(kl(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!((kl(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(kl(&[0.5, 0.5], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn fano_pair_structure() {
        let pair = fano_pair(1000).unwrap();
        let (a, b) = (pair.heavy_mass(), pair.light_mass());
        assert!(a > b);
        assert_eq!(pair.q.probs()[1], a);
        let direct = kl(pair.p.probs(), pair.q.probs()).unwrap();
        assert!((direct - (a - b) * (a / b).ln()).abs() < 1e-15);
        assert!(fano_pair(15).is_err());
    }

    #[test]
    fn selective_lb_values() {
        let v = selective_lb(0.0213, 10_000, 0.05).unwrap();
        assert!((v - 0.002_829_845_250_688_174_4).abs() < 1e-12);
        assert_eq!(selective_lb(1.0, 10, 0.05).unwrap(), 0.0);
        assert!(selective_lb(0.1, 1000, 0.05).unwrap() < selective_lb(0.1, 100, 0.05).unwrap());
    }

    #[test]
    fn argmax_examples() {
        assert!(argmax_variance_check(&[0.1; 10]));
        assert!(argmax_variance_check(&[0.7, 0.3]));
        assert!(argmax_variance_check(&[0.2, 0.5, 0.3]));
    }
}
