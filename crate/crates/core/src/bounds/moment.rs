//! Bounds from the m-th moment of the coordinate deviations.

use super::{check_delta, check_n, BoundMethod, BoundResult, MChoice};
use crate::dist::MleEstimate;
use crate::numeric::{log_sum_exp, round_to_even};
use crate::{Error, Result};

/// `a = √(2·e^{1/e})`, the constant in the corollary's remainder term.
pub const COR21_A: f64 = 1.699_804_612_895_121;

/// `2(ln(1/δ) + 1)` rounded to the nearest even integer, the minimizer of
/// the worst-case leading term.
pub fn optimal_m_data_independent(delta: f64) -> u32 {
    round_to_even(2.0 * ((1.0 / delta).ln() + 1.0))
}

/// Default order for the data-dependent bound: `ln(1/δ₁) + 2`, rounded.
pub fn optimal_m_th2(delta1: f64) -> u32 {
    round_to_even((1.0 / delta1).ln() + 2.0)
}

/// Default order for the corollary: the minimizer of `m/δ₁^{1/m}`, rounded.
pub fn optimal_m_corollary(delta1: f64) -> u32 {
    round_to_even((1.0 / delta1).ln())
}

/// `m / δ^{1/m}`, minimized at `m = ln(1/δ)` with value `e·ln(1/δ)`.
pub fn corollary_m_factor(m: f64, delta: f64) -> f64 {
    m * (1.0 / delta).powf(1.0 / m)
}

/// Closed-form leading term `(1/√n)·√(m/2)·δ^{-1/m}·e^{−1/2+1/m}` of the
/// worst-case bound, for real `m > 0`.
pub fn worst_case_leading_term(m: f64, n: u64, delta: f64) -> f64 {
    (m / 2.0).sqrt() * (1.0 / delta).powf(1.0 / m) * (-0.5 + 1.0 / m).exp() / (n as f64).sqrt()
}

/// Upper bound on `sup_p |(p(1−p))^k − ((p+1/n)(1−p−1/n))^k|`.
pub fn taylor_gap(k: u32, n: u64) -> f64 {
    let (k, n) = (f64::from(k), n as f64);
    k / (n * 4f64.powf(k - 1.0)) + 3.0 * k * (k - 1.0) * (k - 2.0) / (n.powi(3) * 2f64.powf(2.0 * k - 5.0))
}

/// The concentration slack ε of the plug-in moment sum, in both the
/// theorem form (cubic part `3k³`) and the sharper `3k(k−1)(k−2)` form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonTerm {
    pub theorem: f64,
    pub proposition: f64,
}

pub fn epsilon_term(n: u64, delta2: f64, m: u32) -> Result<EpsilonTerm> {
    check_delta("delta2", delta2)?;
    check_n(n, 1)?;
    check_m(m)?;
    let (ln_theorem, ln_proposition) = ln_epsilon(n, delta2, m);
    Ok(EpsilonTerm { theorem: ln_theorem.exp(), proposition: ln_proposition.exp() })
}

fn ln_epsilon(n: u64, delta2: f64, m: u32) -> (f64, f64) {
    let nf = n as f64;
    let ln_n = nf.ln();
    let ln_prefactor = 0.5 * (0.5 * nf * (1.0 / delta2).ln()).ln();
    let mut theorem = Vec::with_capacity(m as usize / 2);
    let mut proposition = Vec::with_capacity(m as usize / 2);
    for k in 1..=m / 2 {
        let kf = f64::from(k);
        let ln_weight = ln_moment_weight(k, m, ln_n);
        let ln_linear = kf.ln() - ln_n - (kf - 1.0) * 4f64.ln();
        let ln_cubic_scale = 3f64.ln() - 3.0 * ln_n - (2.0 * kf - 5.0) * 2f64.ln();
        let ln_cubic_theorem = ln_cubic_scale + 3.0 * kf.ln();
        let ln_cubic_prop = if k > 2 {
            ln_cubic_scale + kf.ln() + (kf - 1.0).ln() + (kf - 2.0).ln()
        } else {
            f64::NEG_INFINITY
        };
        theorem.push(ln_weight + log_sum_exp(&[ln_linear, ln_cubic_theorem]));
        proposition.push(ln_weight + log_sum_exp(&[ln_linear, ln_cubic_prop]));
    }
    (ln_prefactor + log_sum_exp(&theorem), ln_prefactor + log_sum_exp(&proposition))
}

/// `ln(k^{m−k} n^k)`.
fn ln_moment_weight(k: u32, m: u32, ln_n: f64) -> f64 {
    f64::from(m - k) * f64::from(k).ln() + f64::from(k) * ln_n
}

/// `ln Σ_i x_i^k` over the given logs `ln x_i` (entries of `-∞` skipped).
fn ln_power_sum(ln_x: &[f64], k: u32, scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend(ln_x.iter().map(|l| f64::from(k) * l));
    log_sum_exp(scratch)
}

/// `ln(p(1−p))` per coordinate, `-∞` where the variance vanishes.
fn ln_variances(p: &[f64]) -> Vec<f64> {
    p.iter()
        .filter(|x| **x > 0.0 && **x < 1.0)
        .map(|x| x.ln() + (-x).ln_1p())
        .collect()
}

/// `ln Σ_{k=1}^{m/2} k^{m−k} n^k Σ_i v_i^k`.
fn ln_moment_sum(ln_v: &[f64], n: u64, m: u32) -> f64 {
    let ln_n = (n as f64).ln();
    let mut scratch = Vec::with_capacity(ln_v.len());
    let terms: Vec<f64> = (1..=m / 2)
        .map(|k| ln_moment_weight(k, m, ln_n) + ln_power_sum(ln_v, k, &mut scratch))
        .collect();
    log_sum_exp(&terms)
}

fn check_m(m: u32) -> Result<()> {
    MChoice::Fixed(m).validate()
}

fn largest_even_at_most(n: u64) -> u32 {
    let n = n.min(u64::from(u32::MAX - 1)) as u32;
    n - n % 2
}

/// Resolves `choice` against the requirement `2 ≤ m ≤ n`; automatic orders
/// are clamped, explicit ones are checked.
fn resolve_m(choice: MChoice, auto: u32, n: u64) -> Result<u32> {
    match choice {
        MChoice::Auto => Ok(auto.clamp(2, largest_even_at_most(n).max(2))),
        MChoice::Fixed(m) => {
            check_m(m)?;
            if u64::from(m) > n {
                return Err(Error::invalid(format!("moment order m = {m} exceeds the sample size n = {n}")));
            }
            Ok(m)
        }
    }
}

/// Oracle moment bound with the true `p`:
/// `(1/n)·((1/δ)·Σ_k k^{m−k} n^k Σ_i (p_i(1−p_i))^k)^{1/m}`.
pub fn th1_oracle_bound(p: &[f64], n: u64, delta: f64, m: MChoice) -> Result<BoundResult> {
    check_delta("delta", delta)?;
    check_n(n, 2)?;
    let m = resolve_m(m, optimal_m_data_independent(delta), n)?;
    let ln_v = ln_variances(p);
    let ln_n = (n as f64).ln();
    let ln_inv_delta = (1.0 / delta).ln();
    let mf = f64::from(m);
    let mut scratch = Vec::with_capacity(ln_v.len());
    let terms: Vec<f64> = (1..=m / 2)
        .map(|k| ln_moment_weight(k, m, ln_n) + ln_power_sum(&ln_v, k, &mut scratch) + ln_inv_delta)
        .collect();
    let ln_total = log_sum_exp(&terms);
    let radius = (ln_total / mf).exp() / n as f64;
    // m-th root taken per k-term instead of over the sum
    let displayed: f64 = terms.iter().map(|t| (t / mf).exp()).sum::<f64>() / n as f64;
    let mut result = BoundResult::new(BoundMethod::Th1Oracle, radius, delta)
        .component("displayed_form", displayed)
        .component("ln_moment_sum", ln_total - ln_inv_delta);
    result.m_used = Some(m);
    Ok(result)
}

/// Worst-case moment bound, `Σ_i v_i^k` replaced by the envelope
/// `e^{−k+1}`.
pub fn th1_worst_case_bound(n: u64, delta: f64, m: MChoice) -> Result<BoundResult> {
    check_delta("delta", delta)?;
    check_n(n, 2)?;
    let m = resolve_m(m, optimal_m_data_independent(delta), n)?;
    let ln_n = (n as f64).ln();
    let ln_inv_delta = (1.0 / delta).ln();
    let terms: Vec<f64> = (1..=m / 2)
        .map(|k| ln_moment_weight(k, m, ln_n) + 1.0 - f64::from(k) + ln_inv_delta)
        .collect();
    let radius = (log_sum_exp(&terms) / f64::from(m)).exp() / n as f64;
    let k1 = (terms[0] / f64::from(m)).exp() / n as f64;
    let mut result = BoundResult::new(BoundMethod::Th1WorstCase, radius, delta)
        .component("leading", worst_case_leading_term(f64::from(m), n, delta))
        .component("first_term", k1);
    result.m_used = Some(m);
    Ok(result)
}

/// Data-dependent bound: the oracle bound with `p` replaced by `p̂`,
/// inflated by `n/(n−1)` and the slack ε; failure probability `δ₁ + δ₂`.
pub fn th2_bound(phat: &MleEstimate, delta1: f64, delta2: f64, m: MChoice) -> Result<BoundResult> {
    check_delta("delta1", delta1)?;
    check_delta("delta2", delta2)?;
    let n = phat.n();
    if n < 2 {
        return Err(Error::invalid("the data-dependent bound needs n ≥ 2 (n/(n−1) is singular at n = 1)"));
    }
    let m = resolve_m(m, optimal_m_th2(delta1), n)?;
    let mf = f64::from(m);
    let nf = n as f64;
    let ln_sum = ln_moment_sum(&ln_variances(phat.probs()), n, m);
    let (ln_eps, ln_eps_prop) = ln_epsilon(n, delta2, m);
    let ln_scale = (1.0 / delta1).ln() + (nf / (nf - 1.0)).ln();
    let radius = ((ln_scale + log_sum_exp(&[ln_sum, ln_eps])) / mf).exp() / nf;
    let leading = ((ln_scale + ln_sum) / mf).exp() / nf;
    let mut result = BoundResult::new(BoundMethod::Th2, radius, delta1 + delta2)
        .component("leading", leading)
        .component("epsilon", ln_eps.exp())
        .component("epsilon_proposition", ln_eps_prop.exp())
        .component("ln_moment_sum", ln_sum);
    result.m_used = Some(m);
    Ok(result)
}

/// The corollary's simplified data-dependent bound.
pub fn cor21_bound(phat: &MleEstimate, delta1: f64, delta2: f64, m: MChoice) -> Result<BoundResult> {
    check_delta("delta1", delta1)?;
    check_delta("delta2", delta2)?;
    let n = phat.n();
    if n < 2 {
        return Err(Error::invalid("the data-dependent bound needs n ≥ 2"));
    }
    let m = resolve_m(m, optimal_m_corollary(delta1), n)?;
    let mf = f64::from(m);
    let nf = n as f64;
    let factor = corollary_m_factor(mf, delta1);
    let ln_nv: Vec<f64> = ln_variances(phat.probs()).iter().map(|l| l + nf.ln()).collect();
    let mut scratch = Vec::with_capacity(ln_nv.len());
    let terms: Vec<f64> = (1..=m / 2).map(|k| ln_power_sum(&ln_nv, k, &mut scratch)).collect();
    let leading = factor * (log_sum_exp(&terms) / mf).exp() / nf;
    let remainder = COR21_A
        * factor
        * (1.0 / delta2).ln().powf(1.0 / (2.0 * mf))
        * (nf.powf(-(1.0 + 1.0 / mf) / 2.0) + 24.0 * nf.powf(-(1.0 + 5.0 / mf) / 2.0));
    let mut result = BoundResult::new(BoundMethod::Cor21, leading + remainder, delta1 + delta2)
        .component("leading", leading)
        .component("remainder", remainder)
        .component("a", COR21_A)
        .component("m_factor", factor);
    result.m_used = Some(m);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::CountVector;

    #[test]
    fn constant_a() {
        assert!((COR21_A - (2.0 * (1.0f64 / std::f64::consts::E).exp()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn analytic_orders() {
        assert_eq!(optimal_m_data_independent((-1.0f64).exp()), 4);
        assert_eq!(optimal_m_data_independent((-2.0f64).exp()), 6);
        assert_eq!(optimal_m_th2(0.0495), 6);
        assert_eq!(optimal_m_corollary(0.0495), 4);
        assert_eq!(optimal_m_corollary(0.9), 2);
    }

    #[test]
    fn corollary_factor_minimum() {
        let d = (-4.0f64).exp();
        assert!((corollary_m_factor(4.0, d) - 4.0 * std::f64::consts::E).abs() < 1e-12);
        assert!(corollary_m_factor(3.9, d) > corollary_m_factor(4.0, d));
        assert!(corollary_m_factor(4.1, d) > corollary_m_factor(4.0, d));
    }

    #[test]
    fn leading_term_at_continuous_optimum() {
        for delta in [0.3, 0.05, 1e-4] {
            let d = (1.0f64 / delta).ln() + 1.0;
            let n = 1_000;
            let lead = worst_case_leading_term(2.0 * d, n, delta);
            assert!((lead - (d / n as f64).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn taylor_gap_small_k() {
        assert!((taylor_gap(1, 50) - 1.0 / 50.0).abs() < 1e-18);
        assert!((taylor_gap(2, 50) - 2.0 / 200.0).abs() < 1e-18);
        assert!(taylor_gap(3, 50) > 3.0 / (50.0 * 16.0));
    }

    #[test]
    fn oracle_tiny_case() {
        let r = th1_oracle_bound(&[0.5, 0.5], 4, 0.5, MChoice::Fixed(2)).unwrap();
        assert!((r.radius - 0.5).abs() < 1e-15);
        assert_eq!(r.m_used, Some(2));
    }

    #[test]
    fn oracle_point_mass_is_zero() {
        let r = th1_oracle_bound(&[1.0], 50, 0.05, MChoice::Fixed(4)).unwrap();
        assert_eq!(r.radius, 0.0);
    }

    #[test]
    fn m_checks() {
        assert!(th1_oracle_bound(&[0.5, 0.5], 4, 0.5, MChoice::Fixed(3)).is_err());
        assert!(th1_oracle_bound(&[0.5, 0.5], 4, 0.5, MChoice::Fixed(6)).is_err());
        assert_eq!(th1_oracle_bound(&[0.5, 0.5], 3, 0.01, MChoice::Auto).unwrap().m_used, Some(2));
        let phat = CountVector::new(vec![1]).unwrap().mle();
        assert!(th2_bound(&phat, 0.04, 0.01, MChoice::Auto).is_err());
    }

    #[test]
    fn epsilon_m2_single_term() {
        // only k = 1: √(n/2·ln(1/δ₂))·n·(1/n + 24/n³)
        let e = epsilon_term(1000, 5e-4, 2).unwrap();
        let pre = (500.0 * 2000f64.ln()).sqrt();
        assert!((e.theorem - pre * (1.0 + 24.0 / 1e6)).abs() < 1e-10);
        assert!((e.proposition - pre).abs() < 1e-10);
        // ε ∝ √ln(1/δ₂), which vanishes as δ₂ → 1
        let near = epsilon_term(1000, 1.0 - 1e-12, 4).unwrap().theorem;
        let far = epsilon_term(1000, 1.0 - 1e-6, 4).unwrap().theorem;
        assert!((near / far - 1e-3).abs() < 1e-6);
    }

    #[test]
    fn th2_point_mass() {
        let phat = CountVector::new(vec![100, 0, 0]).unwrap().mle();
        let r = th2_bound(&phat, 0.0495, 0.0005, MChoice::Fixed(4)).unwrap();
        let eps = epsilon_term(100, 0.0005, 4).unwrap().theorem;
        let expected = ((100.0 / 99.0) * eps / 0.0495).powf(0.25) / 100.0;
        assert!((r.radius - expected).abs() < 1e-14);
        assert_eq!(r.components["leading"], 0.0);
    }

    #[test]
    fn worst_case_sum_dominates_first_term() {
        for m in [4, 6, 10, 20] {
            let r = th1_worst_case_bound(10_000, 0.05, MChoice::Fixed(m)).unwrap();
            assert!(r.radius >= r.components["first_term"]);
        }
    }
}
