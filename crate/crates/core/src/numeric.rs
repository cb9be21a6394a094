//! Small numerical helpers shared by the bound and enumeration code.

/// `ln Σ exp(x_i)`, skipping `-∞` entries. Returns `-∞` for an empty or
/// all-`-∞` input.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max == f64::INFINITY {
        return max;
    }
    let acc: KahanSum = terms
        .iter()
        .filter(|t| **t > f64::NEG_INFINITY)
        .map(|t| (t - max).exp())
        .collect();
    max + acc.total().ln()
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<T: IntoIterator<Item = f64>>(iter: T) -> Self {
        let mut acc = KahanSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Root of a monotone function on `[lo, hi]` by bisection.
///
/// `f(lo)` and `f(hi)` must bracket zero; the midpoint after `iters`
/// halvings is returned, so 80 iterations on the unit interval leave an
/// error far below 1e-10.
pub fn bisect<F>(mut lo: f64, mut hi: f64, iters: usize, f: F) -> f64
where
    F: Fn(f64) -> f64,
{
    let lo_sign = f(lo) < 0.0;
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Rounds `x` to the nearest even integer, never below 2.
pub fn round_to_even(x: f64) -> u32 {
    let m = 2.0 * (x / 2.0).round();
    if m.is_finite() && m >= 2.0 {
        m as u32
    } else {
        2
    }
}

/// 1-based rank `⌈q·reps⌉`, with products that land within rounding noise
/// of an integer treated as that integer.
pub fn ceil_rank(q: f64, reps: usize) -> usize {
    let x = q * reps as f64;
    let r = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.ceil() };
    (r.max(1.0) as usize).min(reps)
}
