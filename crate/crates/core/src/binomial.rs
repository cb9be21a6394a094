//! Binomial confidence intervals and the standard normal quantile.

use serde::Serialize;
use statrs::function::erf::erfc;
use statrs::function::factorial::ln_binomial;

use crate::numeric::{bisect, KahanSum};
use crate::{Error, Result};

/// Bisection steps for the exact endpoints; 2⁻⁸⁰ is far below 1e-10.
const CP_ITERATIONS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    ClopperPearson,
    Thulin,
    EmpiricalBernstein,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinomialCi {
    pub lower: f64,
    pub upper: f64,
    pub method: CiMethod,
}

impl BinomialCi {
    pub fn contains(&self, theta: f64) -> bool {
        self.lower <= theta && theta <= self.upper
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")))
    }
}

fn check_count(y: u64, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("number of trials must be positive"));
    }
    if y > n {
        return Err(Error::invalid(format!("success count {y} exceeds the number of trials {n}")));
    }
    Ok(())
}

/// `P(Y ≤ y)` for `Y ~ Bin(n, θ)`, summed term by term in log space.
pub fn binomial_cdf(y: u64, n: u64, theta: f64) -> f64 {
    if y >= n || theta <= 0.0 {
        return 1.0;
    }
    if theta >= 1.0 {
        return 0.0;
    }
    let (ln_t, ln_1mt) = (theta.ln(), (-theta).ln_1p());
    let total: KahanSum = (0..=y)
        .map(|j| (ln_binomial(n, j) + j as f64 * ln_t + (n - j) as f64 * ln_1mt).exp())
        .collect();
    total.total().clamp(0.0, 1.0)
}

/// Exact interval: `θ_l` solves `F(y−1; θ) = 1 − δ/2`, `θ_u` solves
/// `F(y; θ) = δ/2`, with `θ_l = 0` at `y = 0` and `θ_u = 1` at `y = n`.
pub fn clopper_pearson(y: u64, n: u64, delta: f64) -> Result<BinomialCi> {
    check_count(y, n)?;
    check_delta(delta)?;
    let lower = if y == 0 {
        0.0
    } else {
        bisect(0.0, 1.0, CP_ITERATIONS, |t| binomial_cdf(y - 1, n, t) - (1.0 - delta / 2.0))
    };
    let upper = if y == n {
        1.0
    } else {
        bisect(0.0, 1.0, CP_ITERATIONS, |t| binomial_cdf(y, n, t) - delta / 2.0)
    };
    Ok(BinomialCi { lower, upper, method: CiMethod::ClopperPearson })
}

/// Second-order closed-form approximation to the exact interval, valid for
/// `1 ≤ y ≤ n − 1`; endpoints clamped to `[0, 1]`.
pub fn thulin_endpoints(y: u64, n: u64, delta: f64) -> Result<BinomialCi> {
    check_count(y, n)?;
    check_delta(delta)?;
    if y == 0 || y == n {
        return Err(Error::out_of_range(format!("approximation holds for 1 ≤ y ≤ n − 1, got y = {y}, n = {n}")));
    }
    let nf = n as f64;
    let t = y as f64 / nf;
    let z = normal_quantile(delta / 2.0)?;
    let spread = z * (t * (1.0 - t) / nf).sqrt();
    let skew = (1.0 - 2.0 * t) * z * z;
    let lower = t - spread + (skew - 1.0 - t) / (3.0 * nf);
    let upper = t + spread + (skew + 2.0 - t) / (3.0 * nf);
    Ok(BinomialCi { lower: lower.clamp(0.0, 1.0), upper: upper.clamp(0.0, 1.0), method: CiMethod::Thulin })
}

/// Radius `√(5θ̂(1−θ̂)·ln(2/δ)/n) + 5·ln(2/δ)/n`.
pub fn empirical_bernstein(theta_hat: f64, n: u64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if n == 0 {
        return Err(Error::invalid("number of trials must be positive"));
    }
    if !(0.0..=1.0).contains(&theta_hat) {
        return Err(Error::invalid(format!("theta_hat must lie in [0, 1], got {theta_hat}")));
    }
    let nf = n as f64;
    let l = (2.0 / delta).ln();
    Ok((5.0 * theta_hat * (1.0 - theta_hat) * l / nf).sqrt() + 5.0 * l / nf)
}

/// Interval `θ̂ ± empirical_bernstein(θ̂)`, clamped to `[0, 1]`.
pub fn empirical_bernstein_ci(y: u64, n: u64, delta: f64) -> Result<BinomialCi> {
    check_count(y, n)?;
    let t = y as f64 / n as f64;
    let r = empirical_bernstein(t, n, delta)?;
    Ok(BinomialCi {
        lower: (t - r).max(0.0),
        upper: (t + r).min(1.0),
        method: CiMethod::EmpiricalBernstein,
    })
}

/// Standard normal CDF via `erfc`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper `q`-quantile: the `z` with `Φ(z) = 1 − q`.
pub fn normal_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("quantile level must lie in (0, 1), got {q}")));
    }
    Ok(-inverse_normal_cdf(q))
}

/// `Φ⁻¹(p)`: Acklam's rational approximation, then one Newton step.
fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    let x = if p < P_LOW {
        tail(p)
    } else if p > 1.0 - P_LOW {
        -tail(1.0 - p)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    x - (normal_cdf(x) - p) / density
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_values() {
        assert_eq!(binomial_cdf(10, 10, 0.3), 1.0);
        assert!((binomial_cdf(0, 10, 0.1) - 0.9f64.powi(10)).abs() < 1e-15);
        assert!((binomial_cdf(5, 10, 0.5) - 638.0 / 1024.0).abs() < 1e-14);
    }

    #[test]
    fn quantile_values() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        let z = normal_quantile(0.025).unwrap();
        assert!((z - 1.959_963_984_540_054).abs() < 1e-10, "{z:.17}");
        assert!((normal_quantile(5e-9).unwrap() - 5.730_728_868_236_29).abs() < 1e-9);
        assert!((normal_quantile(0.975).unwrap() + 1.959_963_984_540_054).abs() < 1e-10);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn quantile_tail_asymptotics() {
        let z = normal_quantile(0.5e-8).unwrap();
        let ratio = z / (2.0 * (2.0f64 / 1e-8).ln()).sqrt();
        assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn clopper_pearson_closed_forms() {
        let ci = clopper_pearson(0, 20, 0.05).unwrap();
        assert_eq!(ci.lower, 0.0);
        assert!((ci.upper - (1.0 - 0.025f64.powf(1.0 / 20.0))).abs() < 1e-10);
        let ci = clopper_pearson(20, 20, 0.05).unwrap();
        assert_eq!(ci.upper, 1.0);
        assert!((ci.lower - 0.025f64.powf(1.0 / 20.0)).abs() < 1e-10);
    }

    #[test]
    fn clopper_pearson_reference() {
        let ci = clopper_pearson(5, 10, 0.05).unwrap();
        assert!((ci.lower - 0.187_086_028_447_398_55).abs() < 1e-8);
        assert!((ci.upper - 0.812_913_971_552_601_5).abs() < 1e-8);
        assert!(clopper_pearson(11, 10, 0.05).is_err());
    }

    #[test]
    fn thulin_length_identity() {
        let (y, n, delta) = (37, 200, 0.1);
        let ci = thulin_endpoints(y, n, delta).unwrap();
        let t = y as f64 / n as f64;
        let z = normal_quantile(delta / 2.0).unwrap();
        let expected = 2.0 * z * (t * (1.0 - t) / n as f64).sqrt() + 1.0 / n as f64;
        assert!((ci.length() - expected).abs() < 1e-14);
        assert!(matches!(thulin_endpoints(0, 10, 0.05), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn thulin_tracks_exact_interval() {
        let n = 10_000;
        let cp = clopper_pearson(n / 2, n, 0.05).unwrap();
        let th = thulin_endpoints(n / 2, n, 0.05).unwrap();
        let tol = 5.0 * (n as f64).powf(-1.5);
        assert!((cp.lower - th.lower).abs() < tol);
        assert!((cp.upper - th.upper).abs() < tol);
    }

    #[test]
    fn bernstein_values() {
        let r0 = empirical_bernstein(0.0, 50, 0.1).unwrap();
        assert!((r0 - 5.0 * 20f64.ln() / 50.0).abs() < 1e-15);
        assert_eq!(r0, empirical_bernstein(1.0, 50, 0.1).unwrap());
        let r = empirical_bernstein(0.5, 100, 0.05).unwrap();
        assert!((r - 0.399_178_676_879_065_6).abs() < 1e-14);
    }
}
