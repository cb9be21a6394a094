//! Finite-support distributions, multinomial sampling, the MLE, and the
//! variance functionals the bounds are stated in.

use std::io::{Read, Write};

use serde::Serialize;

use crate::numeric::KahanSum;
use crate::rng::{self, StreamRng};
use crate::{Error, Result};

/// Tolerance on `Σ p_i = 1`.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A probability vector over symbols `0..support_size`. Zero-mass entries
/// are allowed and count towards the support size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("distribution must have at least one symbol"));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(Error::invalid(format!("mass of symbol {i} is {p}, expected a finite nonnegative value")));
        }
        let total = probs.iter().copied().collect::<KahanSum>().total();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("masses sum to {total}, expected 1")));
        }
        Ok(Self { probs })
    }

    /// Zipf law `p_i ∝ i^{-s}` over `i = 1..=alphabet`.
    pub fn zipf(alphabet: usize, exponent: f64) -> Result<Self> {
        if alphabet == 0 {
            return Err(Error::invalid("zipf alphabet size must be at least 1"));
        }
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(Error::invalid(format!("zipf exponent must be positive, got {exponent}")));
        }
        let weights: Vec<f64> = (1..=alphabet).map(|i| (i as f64).powf(-exponent)).collect();
        // smallest terms first
        let norm = weights.iter().rev().copied().collect::<KahanSum>().total();
        Self::new(weights.into_iter().map(|w| w / norm).collect())
    }

    pub fn uniform(alphabet: usize) -> Result<Self> {
        if alphabet == 0 {
            return Err(Error::invalid("uniform alphabet size must be at least 1"));
        }
        Self::new(vec![1.0 / alphabet as f64; alphabet])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    /// Largest mass `p_(1)`.
    pub fn max_mass(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }

    /// Masses in non-increasing order; ties keep their original order.
    pub fn sorted_desc(&self) -> Vec<f64> {
        sorted_desc(&self.probs)
    }

    pub fn sampler(&self) -> Sampler {
        Sampler::new(self)
    }

    /// Multinomial sample of size `n`, deterministic in `seed`.
    pub fn sample(&self, n: u64, seed: u64) -> Result<CountVector> {
        if n == 0 {
            return Err(Error::invalid("sample size must be at least 1"));
        }
        let mut counts = vec![0u64; self.support_size()];
        self.sampler().fill_counts(n, &mut rng::stream(seed), &mut counts);
        Ok(CountVector { counts, n })
    }
}

impl AsRef<[f64]> for Distribution {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

/// Inverse-CDF sampler over a precomputed cumulative table; each draw is a
/// binary search, O(log A).
#[derive(Debug, Clone)]
pub struct Sampler {
    cumulative: Vec<f64>,
}

impl Sampler {
    pub fn new(dist: &Distribution) -> Self {
        let mut acc = KahanSum::default();
        let mut cumulative: Vec<f64> = dist
            .probs
            .iter()
            .map(|p| {
                acc.add(*p);
                acc.total()
            })
            .collect();
        // Pin the top of the table to exactly 1 so that u < 1 always lands
        // on a symbol with positive mass.
        if let Some(last) = dist.probs.iter().rposition(|p| *p > 0.0) {
            for c in &mut cumulative[last..] {
                *c = 1.0;
            }
        }
        Self { cumulative }
    }

    #[inline]
    pub fn draw(&self, rng: &mut StreamRng) -> usize {
        let u = rng::uniform01(rng);
        self.cumulative.partition_point(|c| *c <= u)
    }

    /// Overwrites `counts` with the symbol counts of `n` draws.
    pub fn fill_counts(&self, n: u64, rng: &mut StreamRng, counts: &mut [u64]) {
        debug_assert_eq!(counts.len(), self.cumulative.len());
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..n {
            counts[self.draw(rng)] += 1;
        }
    }
}

/// Symbol counts of a sample of size `n = Σ counts`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountVector {
    counts: Vec<u64>,
    n: u64,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::invalid("counts must sum to a positive sample size"));
        }
        Ok(Self { counts, n })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mle(&self) -> MleEstimate {
        mle(self)
    }
}

/// Empirical frequencies `p̂_i = c_i / n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MleEstimate {
    probs: Vec<f64>,
    n: u64,
}

impl MleEstimate {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `v̂* = max_i p̂_i(1 − p̂_i)`.
    pub fn max_variance(&self) -> f64 {
        max_variance(&self.probs)
    }
}

impl AsRef<[f64]> for MleEstimate {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

pub fn mle(counts: &CountVector) -> MleEstimate {
    let n = counts.n as f64;
    MleEstimate {
        probs: counts.counts.iter().map(|c| *c as f64 / n).collect(),
        n: counts.n,
    }
}

/// `max_i |p_i − q_i|`, with the shorter vector zero-padded.
pub fn sup_dev(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    (0..len)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

/// `v* = max_i p_i(1 − p_i)`.
#[doc(alias = "v_star")]
pub fn max_variance(p: &[f64]) -> f64 {
    p.iter().map(|x| x * (1.0 - x)).fold(0.0, f64::max)
}

/// `V* = sup_i v_i(p↓)·ln(i + 1)` over the masses sorted in non-increasing
/// order (1-based rank `i`).
#[doc(alias = "V_star")]
pub fn log_rank_variance(p: &[f64]) -> f64 {
    sorted_desc(p)
        .iter()
        .enumerate()
        .map(|(i, x)| x * (1.0 - x) * ((i + 2) as f64).ln())
        .fold(0.0, f64::max)
}

/// `φ(t) = t·ln(1/t)` on `[0, 1]`, with `φ(0) = 0`.
pub fn phi(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("phi is defined on [0, 1], got {t}")));
    }
    Ok(if t == 0.0 { 0.0 } else { -t * t.ln() })
}

fn sorted_desc(p: &[f64]) -> Vec<f64> {
    let mut sorted = p.to_vec();
    // stable sort keeps index order among ties
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted
}

/// Writes `symbol,probability` rows with 1-based symbol indices.
pub fn write_distribution_csv<W: Write>(dist: &Distribution, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["symbol", "probability"])?;
    for (i, p) in dist.probs.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format!("{p:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a two-column `symbol,probability` table. Row order defines the
/// symbol order.
pub fn read_distribution_csv<R: Read>(reader: R) -> Result<Distribution> {
    let rows = read_two_column(reader, "probability")?;
    let probs = rows
        .into_iter()
        .map(|(line, _, v)| {
            v.parse::<f64>()
                .map_err(|e| Error::Validation(format!("line {line}: bad probability {v:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Distribution::new(probs)
}

pub fn write_counts_csv<W: Write>(counts: &CountVector, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["symbol", "count"])?;
    for (i, c) in counts.counts.iter().enumerate() {
        w.write_record([(i + 1).to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_counts_csv<R: Read>(reader: R) -> Result<CountVector> {
    let rows = read_two_column(reader, "count")?;
    let counts = rows
        .into_iter()
        .map(|(line, _, v)| {
            v.parse::<u64>()
                .map_err(|e| Error::Validation(format!("line {line}: bad count {v:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    CountVector::new(counts)
}

/// `(line, symbol, value)` triples from a headed two-column CSV.
pub(crate) fn read_two_column<R: Read>(reader: R, value_name: &str) -> Result<Vec<(u64, String, String)>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.len() != 2 {
        return Err(Error::Validation(format!(
            "expected a header with 2 columns (symbol,{value_name}), found {}",
            headers.len()
        )));
    }
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::Validation(format!("line {line}: expected 2 fields, found {}", record.len())));
        }
        out.push((line, record[0].to_string(), record[1].to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zipf_small_cases() {
        assert_eq!(Distribution::zipf(1, 1.1).unwrap().probs(), &[1.0]);
        let d = Distribution::zipf(2, 1.0).unwrap();
        assert!((d.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.probs()[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(Distribution::zipf(0, 1.0).is_err());
        assert!(Distribution::zipf(3, 0.0).is_err());
    }

    #[test]
    fn zipf_100_matches_high_precision_normalizer() {
        // 1 / Σ_{r=1}^{100} r^{-1.1}, 40-digit reference summation
        let d = Distribution::zipf(100, 1.1).unwrap();
        assert!((d.probs()[0] - 0.233_752_778_055_164_37).abs() < 1e-15);
        assert!((d.probs()[99] - 0.001_474_880_321_065_544_4).abs() < 1e-17);
    }

    #[test]
    fn uniform_cases() {
        assert_eq!(Distribution::uniform(1).unwrap().probs(), &[1.0]);
        assert_eq!(Distribution::uniform(4).unwrap().probs(), &[0.25; 4]);
        assert!(Distribution::uniform(100).unwrap().probs().iter().all(|p| *p == 0.01));
        assert!(Distribution::uniform(0).is_err());
    }

    #[test]
    fn new_rejects_invalid_vectors() {
        assert!(Distribution::new(vec![]).is_err());
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
        assert!(Distribution::new(vec![f64::NAN]).is_err());
        assert_eq!(Distribution::new(vec![1.0, 0.0]).unwrap().support_size(), 2);
    }

    #[test]
    fn degenerate_sampling() {
        let d = Distribution::new(vec![1.0]).unwrap();
        assert_eq!(d.sample(7, 123).unwrap().counts(), &[7]);
        let d = Distribution::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(d.sample(5, 9).unwrap().counts(), &[0, 5, 0]);
    }

    #[test]
    fn fair_coin_within_three_sigma() {
        let d = Distribution::uniform(2).unwrap();
        let c = d.sample(1_000_000, 2024).unwrap();
        let frac = c.counts()[0] as f64 / 1e6;
        assert!((0.497..=0.503).contains(&frac), "{frac}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = Distribution::zipf(50, 1.1).unwrap();
        assert_eq!(d.sample(1000, 5).unwrap(), d.sample(1000, 5).unwrap());
        assert_ne!(d.sample(1000, 5).unwrap(), d.sample(1000, 6).unwrap());
    }

    #[test]
    fn mle_cases() {
        let m = CountVector::new(vec![3, 1]).unwrap().mle();
        assert_eq!(m.probs(), &[0.75, 0.25]);
        assert_eq!(CountVector::new(vec![0, 5]).unwrap().mle().probs(), &[0.0, 1.0]);
        let m = CountVector::new(vec![2, 2, 2]).unwrap().mle();
        assert!(m.probs().iter().all(|p| (*p - 1.0 / 3.0).abs() < 1e-16));
        assert!(CountVector::new(vec![0, 0]).is_err());
    }

    #[test]
    fn sup_dev_cases() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(sup_dev(&p, &p), 0.0);
        assert!((sup_dev(&[0.7, 0.3], &[0.5, 0.5]) - 0.2).abs() < 1e-15);
        assert!((sup_dev(&[0.5, 0.5, 0.0], &[0.4, 0.4, 0.2]) - 0.2).abs() < 1e-15);
        assert!((sup_dev(&[0.5, 0.5], &[0.4, 0.4, 0.2]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn variance_functionals() {
        assert_eq!(max_variance(&[1.0, 0.0]), 0.0);
        assert_eq!(max_variance(&[0.5, 0.5]), 0.25);
        assert_eq!(log_rank_variance(&[1.0]), 0.0);
        assert!((log_rank_variance(&[0.5, 0.5]) - 0.25 * 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_rank_variance_uniform_sits_at_last_rank() {
        let u = Distribution::uniform(8).unwrap();
        // exhaustive scan over ranks
        let scan = (1..=8).map(|i| (1.0 / 8.0) * (7.0 / 8.0) * ((i + 1) as f64).ln()).fold(0.0, f64::max);
        assert!((log_rank_variance(u.probs()) - scan).abs() < 1e-15);
        assert!((scan - (7.0 / 64.0) * 9f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn zipf_max_variance_at_largest_mass() {
        let z = Distribution::zipf(100, 1.1).unwrap();
        let mut best = (0usize, f64::MIN);
        for (i, p) in z.probs().iter().enumerate() {
            if p * (1.0 - p) > best.1 {
                best = (i, p * (1.0 - p));
            }
        }
        assert_eq!(best.0, 0);
        assert_eq!(max_variance(z.probs()), best.1);
    }

    #[test]
    fn phi_cases() {
        assert_eq!(phi(1.0).unwrap(), 0.0);
        assert_eq!(phi(0.0).unwrap(), 0.0);
        let e_inv = (-1.0f64).exp();
        assert!((phi(e_inv).unwrap() - e_inv).abs() < 1e-16);
        assert!(phi(1.5).is_err());
        assert!(phi(-0.1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = Distribution::zipf(10, 1.1).unwrap();
        let mut buf = Vec::new();
        write_distribution_csv(&d, &mut buf).unwrap();
        assert_eq!(read_distribution_csv(buf.as_slice()).unwrap(), d);

        let c = CountVector::new(vec![3, 0, 9]).unwrap();
        let mut buf = Vec::new();
        write_counts_csv(&c, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("symbol,count\n"));
        assert_eq!(read_counts_csv(buf.as_slice()).unwrap(), c);
    }

    #[test]
    fn csv_rejects_bad_rows() {
        assert!(read_counts_csv("symbol,count\na,x\n".as_bytes()).is_err());
        assert!(read_counts_csv("symbol,count,extra\na,1,2\n".as_bytes()).is_err());
        assert!(read_distribution_csv("symbol,probability\na,0.4\nb,0.4\n".as_bytes()).is_err());
    }
}
