//! Library results against independently written reference computations:
//! direct (non-log) formula evaluation, exact rational arithmetic, and
//! brute-force enumeration.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

use supnorm_core::binomial::{binomial_cdf, clopper_pearson};
use supnorm_core::bounds::{
    cor21_bound, epsilon_term, optimal_m_data_independent, taylor_gap, th1_oracle_bound, th2_bound,
    worst_case_leading_term, BoundMethod, BoundSpec, MChoice,
};
use supnorm_core::dist::{sup_dev, CountVector, Distribution};
use supnorm_core::montecarlo::{exact_coverage, oracle_quantile};

fn direct_epsilon(n: u64, delta2: f64, m: u32) -> f64 {
    let nf = n as f64;
    let mut sum = 0.0;
    for k in 1..=m / 2 {
        let kf = k as f64;
        let gap = kf / (nf * 4f64.powi(k as i32 - 1)) + 3.0 * kf.powi(3) / (nf.powi(3) * 2f64.powi(2 * k as i32 - 5));
        sum += kf.powi((m - k) as i32) * nf.powi(k as i32) * gap;
    }
    (nf / 2.0 * (1.0 / delta2).ln()).sqrt() * sum
}

fn direct_moment_sum(p: &[f64], n: u64, m: u32) -> f64 {
    let nf = n as f64;
    let mut sum = 0.0;
    for k in 1..=m / 2 {
        let inner: f64 = p.iter().map(|x| (x * (1.0 - x)).powi(k as i32)).sum();
        sum += (k as f64).powi((m - k) as i32) * nf.powi(k as i32) * inner;
    }
    sum
}

fn direct_th1(p: &[f64], n: u64, delta: f64, m: u32) -> f64 {
    (direct_moment_sum(p, n, m) / delta).powf(1.0 / m as f64) / n as f64
}

fn direct_th2(phat: &[f64], n: u64, d1: f64, d2: f64, m: u32) -> f64 {
    let nf = n as f64;
    let s = direct_moment_sum(phat, n, m) + direct_epsilon(n, d2, m);
    (s * nf / (nf - 1.0) / d1).powf(1.0 / m as f64) / nf
}

fn direct_cor21(phat: &[f64], n: u64, d1: f64, d2: f64, m: u32) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    let a = (2.0 * (1.0 / std::f64::consts::E).exp()).sqrt();
    let factor = mf / d1.powf(1.0 / mf);
    let mut s = 0.0;
    for k in 1..=m / 2 {
        s += phat.iter().map(|x| (nf * x * (1.0 - x)).powi(k as i32)).sum::<f64>();
    }
    factor * s.powf(1.0 / mf) / nf
        + a * factor
            * (1.0 / d2).ln().powf(1.0 / (2.0 * mf))
            * (nf.powf(-(1.0 + 1.0 / mf) / 2.0) + 24.0 * nf.powf(-(1.0 + 5.0 / mf) / 2.0))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

fn counts_strategy() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..30, 2..12).prop_filter("n in 2..=100", |c| {
        let n: u64 = c.iter().sum();
        (2..=100).contains(&n)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn log_space_matches_direct_evaluation(counts in counts_strategy(), half_m in 1u32..=5, d in 0.001f64..0.5) {
        let c = CountVector::new(counts).unwrap();
        let n = c.n();
        let m = 2 * half_m;
        prop_assume!(u64::from(m) <= n);
        let phat = c.mle();
        let (d1, d2) = (0.99 * d, 0.01 * d);

        let th2 = th2_bound(&phat, d1, d2, MChoice::Fixed(m)).unwrap().radius;
        prop_assert!(rel_close(th2, direct_th2(phat.probs(), n, d1, d2, m), 1e-9));

        let cor = cor21_bound(&phat, d1, d2, MChoice::Fixed(m)).unwrap().radius;
        prop_assert!(rel_close(cor, direct_cor21(phat.probs(), n, d1, d2, m), 1e-9));

        let eps = epsilon_term(n, d2, m).unwrap().theorem;
        prop_assert!(rel_close(eps, direct_epsilon(n, d2, m), 1e-9));

        let th1 = th1_oracle_bound(phat.probs(), n, d, MChoice::Fixed(m)).unwrap().radius;
        let direct = direct_th1(phat.probs(), n, d, m);
        if direct > 0.0 {
            prop_assert!(rel_close(th1, direct, 1e-9));
        } else {
            prop_assert_eq!(th1, 0.0);
        }
    }
}

#[test]
fn th1_tiny_case_by_hand() {
    // single k = 1 term: 1·4·0.5·(1/0.5) = 4, √4 / 4
    let r = th1_oracle_bound(&[0.5, 0.5], 4, 0.5, MChoice::Fixed(2)).unwrap();
    assert!((r.radius - 0.5).abs() < 1e-15);
}

fn exact_cdf(y: u64, n: u64, num: i64, den: i64) -> BigRational {
    let theta = BigRational::new(BigInt::from(num), BigInt::from(den));
    let one_minus = BigRational::one() - &theta;
    let mut total = BigRational::zero();
    let mut binom = BigInt::one();
    for j in 0..=y {
        if j > 0 {
            binom = binom * BigInt::from(n - j + 1) / BigInt::from(j);
        }
        let term = BigRational::from_integer(binom.clone())
            * num_traits::pow(theta.clone(), j as usize)
            * num_traits::pow(one_minus.clone(), (n - j) as usize);
        total += term;
    }
    total
}

#[test]
fn binomial_cdf_matches_exact_rationals() {
    assert_eq!(exact_cdf(5, 10, 1, 2), BigRational::new(BigInt::from(638), BigInt::from(1024)));
    for &(n, num, den) in &[(10u64, 1i64, 10i64), (25, 1, 3), (60, 7, 11), (200, 1, 2)] {
        for y in 0..n {
            let exact = exact_cdf(y, n, num, den).to_f64().unwrap();
            let got = binomial_cdf(y, n, num as f64 / den as f64);
            assert!((got - exact).abs() < 1e-12, "n={n} y={y}: {got} vs {exact}");
        }
    }
}

fn direct_cdf(y: u64, n: u64, t: f64) -> f64 {
    let mut term = (1.0 - t).powi(n as i32);
    let mut total = term;
    for j in 1..=y {
        term *= (n - j + 1) as f64 / j as f64 * t / (1.0 - t);
        total += term;
    }
    total
}

fn bisect_decreasing(target: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn clopper_pearson_matches_independent_bisection() {
    for &(n, delta) in &[(10u64, 0.05), (25, 0.1), (40, 0.01)] {
        for y in 0..=n {
            let ci = clopper_pearson(y, n, delta).unwrap();
            let lower = if y == 0 { 0.0 } else { bisect_decreasing(1.0 - delta / 2.0, |t| direct_cdf(y - 1, n, t)) };
            let upper = if y == n { 1.0 } else { bisect_decreasing(delta / 2.0, |t| direct_cdf(y, n, t)) };
            assert!((ci.lower - lower).abs() < 1e-8, "n={n} y={y}");
            assert!((ci.upper - upper).abs() < 1e-8, "n={n} y={y}");
        }
    }
}

#[test]
fn taylor_gap_dominates_true_gap_on_grid() {
    let n = 50u64;
    let h = 1.0 / n as f64;
    let points = 100_000;
    for k in 1..=10u32 {
        let bound = taylor_gap(k, n);
        let mut worst = 0.0f64;
        for i in 0..=points {
            let p = (1.0 - h) * i as f64 / points as f64;
            let a = (p * (1.0 - p)).powi(k as i32);
            let b = ((p + h) * (1.0 - p - h)).powi(k as i32);
            worst = worst.max((a - b).abs());
        }
        assert!(worst <= bound, "k={k}: {worst} > {bound}");
    }
}

#[test]
fn data_independent_order_matches_grid_search() {
    for delta in [0.3, 0.1, 0.05, 1e-3, 1e-6, 1e-10] {
        let best = (1..=100u32)
            .map(|h| 2 * h)
            .min_by(|a, b| {
                worst_case_leading_term(*a as f64, 1000, delta).total_cmp(&worst_case_leading_term(*b as f64, 1000, delta))
            })
            .unwrap();
        let analytic = optimal_m_data_independent(delta);
        assert!(best.abs_diff(analytic) <= 2, "δ={delta}: grid {best}, analytic {analytic}");
    }
}

#[test]
fn tiny_oracle_quantile_matches_enumeration() {
    // counts (c, 4−c) under p = (1/2, 1/2): deviation 0 w.p. 6/16, 1/4 w.p. 8/16, 1/2 w.p. 2/16;
    // the 0.75-quantile is therefore 1/4
    let mut cdf = 0.0;
    let mut exact = f64::NAN;
    for (dev, prob) in [(0.0, 6.0 / 16.0), (0.25, 8.0 / 16.0), (0.5, 2.0 / 16.0)] {
        cdf += prob;
        if cdf >= 0.75 {
            exact = dev;
            break;
        }
    }
    let d = Distribution::uniform(2).unwrap();
    assert_eq!(oracle_quantile(&d, 4, 0.25, 10_000, 3).unwrap(), exact);
}

fn binomial_pmf(y: u64, n: u64, t: f64) -> f64 {
    let mut c = 1.0;
    for j in 0..y {
        c = c * (n - j) as f64 / (j + 1) as f64;
    }
    c * t.powi(y as i32) * (1.0 - t).powi((n - y) as i32)
}

#[test]
fn exact_coverage_matches_two_symbol_enumeration() {
    let p = [0.9, 0.1];
    let n = 20u64;
    let d = Distribution::new(p.to_vec()).unwrap();
    let spec = BoundSpec::new(BoundMethod::Th2, 0.1);
    let m = spec.evaluate(&p, &CountVector::new(vec![18, 2]).unwrap().mle()).unwrap().m_used.unwrap();
    let mut oracle = 0.0;
    for y in 0..=n {
        let phat = [y as f64 / n as f64, (n - y) as f64 / n as f64];
        let radius = direct_th2(&phat, n, 0.099, 0.001, m);
        if sup_dev(&p, &phat) <= radius {
            oracle += binomial_pmf(y, n, 0.9);
        }
    }
    let got = exact_coverage(&d, n, &spec).unwrap();
    assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
    assert!(got >= 0.9);
}
