//! Seeded coverage simulation, oracle quantiles, exact enumeration, and the
//! top-k selective-inference experiment.
//!
//! Repetition `r` at sample size `n` draws from its own stream, seeded by
//! `stream_seed(stream_seed(seed, n), r)`. Repetitions run on the rayon pool
//! and are collected in index order, and all aggregation happens
//! sequentially afterwards, so a report does not depend on the number of
//! threads.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::factorial::{ln_binomial, ln_factorial};

use crate::binomial::clopper_pearson;
use crate::bounds::{BoundMethod, BoundResult, BoundSpec};
use crate::dist::{sup_dev, CountVector, Distribution, MleEstimate, Sampler};
use crate::numeric::{ceil_rank, KahanSum};
use crate::rng::{self, stream_seed};
use crate::theory::selective_lb;
use crate::{Error, Result};

/// Largest number of count vectors [`exact_coverage`] will enumerate.
pub const MAX_COMPOSITIONS: f64 = 1e6;

pub const SKIPPED_PRECONDITION: &str = "skipped: theorem precondition";

/// Label of the naive per-symbol interval row in top-k reports.
pub const NAIVE_TOP1: &str = "naive_cp_top1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaRule {
    Fixed(f64),
    /// `δ = 1/n²`.
    InverseNSquared,
}

impl DeltaRule {
    pub fn delta(self, n: u64) -> f64 {
        match self {
            DeltaRule::Fixed(d) => d,
            DeltaRule::InverseNSquared => 1.0 / (n as f64 * n as f64),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub label: String,
    pub distribution: Distribution,
    pub n_values: Vec<u64>,
    pub delta_rule: DeltaRule,
    /// Bound specifications; their δ (and split, proportionally) is
    /// replaced per `n` by `delta_rule`.
    pub methods: Vec<BoundSpec>,
    pub reps: usize,
    pub seed: u64,
    /// Top-k mode when set.
    pub k: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(label: impl Into<String>, distribution: Distribution, n_values: Vec<u64>, delta_rule: DeltaRule) -> Self {
        Self {
            label: label.into(),
            distribution,
            n_values,
            delta_rule,
            methods: Vec::new(),
            reps: 10_000,
            seed: 0,
            k: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        if self.n_values.is_empty() {
            return Err(Error::invalid("n_values must not be empty"));
        }
        if self.n_values.contains(&0) {
            return Err(Error::invalid("sample sizes must be positive"));
        }
        if !self.n_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("n_values must be sorted ascending without repeats"));
        }
        if let DeltaRule::Fixed(d) = self.delta_rule {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::invalid(format!("delta must lie in (0, 1), got {d}")));
            }
        }
        if let Some(k) = self.k {
            if k == 0 || k > self.distribution.support_size() {
                return Err(Error::invalid(format!(
                    "k = {k} must lie in 1..={}",
                    self.distribution.support_size()
                )));
            }
        }
        for spec in &self.methods {
            spec.validate()?;
        }
        Ok(())
    }

    fn spec_at(&self, spec: &BoundSpec, n: u64) -> BoundSpec {
        spec.at_delta(self.delta_rule.delta(n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageCell {
    pub method: String,
    pub n: u64,
    pub delta: f64,
    /// `None` when the cell ran; otherwise why it was skipped.
    pub skipped: Option<String>,
    pub reps: usize,
    /// Repetitions whose deviation stayed within the radius.
    pub covered: u64,
    pub coverage_rate: f64,
    /// Coverage of the full sup-norm deviation (equals `coverage_rate`
    /// outside top-k mode).
    pub full_coverage_rate: Option<f64>,
    pub mean_radius: Option<f64>,
    pub failure_prob: Option<f64>,
    pub m_used: Option<u32>,
    pub oracle_quantile: f64,
}

/// Per-`n` reference quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceLine {
    pub n: u64,
    pub delta: f64,
    /// `(1−δ)`-quantile of the full sup-norm deviation.
    pub oracle_quantile: f64,
    /// Top-k mode only: quantile of the deviation over the selected symbols.
    pub oracle_topk_quantile: Option<f64>,
    /// Top-k mode only: quantile of the deviation of the sample's top symbol.
    pub oracle_top1_quantile: Option<f64>,
    /// Top-k mode only: first-order selective lower bound at the true top mass.
    pub selective_lb: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub label: String,
    pub support_size: usize,
    pub seed: u64,
    pub reps: usize,
    pub k: Option<usize>,
    pub delta_rule: DeltaRule,
    pub cells: Vec<CoverageCell>,
    pub reference: Vec<ReferenceLine>,
}

impl CoverageReport {
    pub fn cell(&self, method: &str, n: u64) -> Option<&CoverageCell> {
        self.cells.iter().find(|c| c.method == method && c.n == n)
    }

    pub fn reference_at(&self, n: u64) -> Option<&ReferenceLine> {
        self.reference.iter().find(|r| r.n == n)
    }

    pub const CSV_HEADER: [&'static str; 16] = [
        "label",
        "method",
        "n",
        "delta",
        "status",
        "reps",
        "covered",
        "coverage_rate",
        "full_coverage_rate",
        "mean_radius",
        "failure_prob",
        "m_used",
        "oracle_quantile",
        "oracle_topk_quantile",
        "oracle_top1_quantile",
        "selective_lb",
    ];

    /// One row per method × n.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(Self::CSV_HEADER)?;
        for c in &self.cells {
            let r = self.reference_at(c.n);
            w.write_record([
                self.label.clone(),
                c.method.clone(),
                c.n.to_string(),
                format!("{:e}", c.delta),
                c.skipped.clone().unwrap_or_else(|| "ok".into()),
                c.reps.to_string(),
                c.covered.to_string(),
                format!("{:e}", c.coverage_rate),
                opt(c.full_coverage_rate),
                opt(c.mean_radius),
                opt(c.failure_prob),
                c.m_used.map(|m| m.to_string()).unwrap_or_default(),
                format!("{:e}", c.oracle_quantile),
                opt(r.and_then(|r| r.oracle_topk_quantile)),
                opt(r.and_then(|r| r.oracle_top1_quantile)),
                opt(r.and_then(|r| r.selective_lb)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Outcome of one repetition.
#[derive(Debug, Clone)]
struct Rep {
    dev: f64,
    topk_dev: f64,
    top1_dev: f64,
    radii: Vec<f64>,
    naive_covered: bool,
    naive_radius: f64,
}

/// Indices of the `k` largest counts, ties broken by ascending index.
pub fn top_k_indices(counts: &[u64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..counts.len()).collect();
    idx.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// `max_{i ∈ idx} |p_i − p̂_i|`.
pub fn subset_deviation(p: &[f64], phat: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| (p[i] - phat[i]).abs()).fold(0.0, f64::max)
}

fn rep_seed(seed: u64, n: u64, rep: usize) -> u64 {
    stream_seed(stream_seed(seed, n), rep as u64)
}

fn sample_counts(sampler: &Sampler, support: usize, n: u64, seed: u64) -> CountVector {
    let mut counts = vec![0u64; support];
    sampler.fill_counts(n, &mut rng::stream(seed), &mut counts);
    CountVector::new(counts).expect("n ≥ 1 draws")
}

/// Stand-in estimate carrying only `n`, for methods that ignore the sample.
fn placeholder_mle(n: u64) -> MleEstimate {
    CountVector::new(vec![n]).expect("n ≥ 1").mle()
}

enum Prepared {
    Skipped(String),
    Static(BoundResult),
    Dynamic(BoundSpec),
}

fn prepare(spec: &BoundSpec, truth: &[f64], n: u64) -> Result<Prepared> {
    if n < spec.method.min_n() {
        return Ok(Prepared::Skipped(SKIPPED_PRECONDITION.into()));
    }
    if spec.method.is_data_dependent() {
        return Ok(Prepared::Dynamic(*spec));
    }
    match spec.evaluate(truth, &placeholder_mle(n)) {
        Ok(r) => Ok(Prepared::Static(r)),
        Err(Error::OutOfRange(_)) => Ok(Prepared::Skipped(SKIPPED_PRECONDITION.into())),
        Err(e) => Err(e),
    }
}

fn quantile(values: &mut [f64], delta: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    values[ceil_rank(1.0 - delta, values.len()) - 1]
}

/// Empirical `(1−δ)`-quantile of `sup_dev(p, p̂)` over `reps` seeded
/// samples of size `n`, at order statistic `⌈(1−δ)·reps⌉`.
pub fn oracle_quantile(dist: &Distribution, n: u64, delta: f64, reps: usize, seed: u64) -> Result<f64> {
    if reps == 0 || n == 0 {
        return Err(Error::invalid("reps and n must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let sampler = dist.sampler();
    let p = dist.probs();
    let mut devs: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let counts = sample_counts(&sampler, p.len(), n, rep_seed(seed, n, r));
            sup_dev(p, counts.mle().probs())
        })
        .collect();
    Ok(quantile(&mut devs, delta))
}

/// Coverage (and, with `cfg.k`, top-k selective coverage) of every method
/// at every `n`.
pub fn run_coverage(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let p = cfg.distribution.probs();
    let support = p.len();
    let sampler = cfg.distribution.sampler();
    let k = cfg.k;
    let true_top = cfg.distribution.max_mass();
    let mut cells = Vec::new();
    let mut reference = Vec::new();

    for &n in &cfg.n_values {
        let delta = cfg.delta_rule.delta(n);
        let specs: Vec<BoundSpec> = cfg.methods.iter().map(|s| cfg.spec_at(s, n)).collect();
        let prepared: Vec<Prepared> = specs.iter().map(|s| prepare(s, p, n)).collect::<Result<_>>()?;

        let reps: Vec<Rep> = (0..cfg.reps)
            .into_par_iter()
            .map(|r| -> Result<Rep> {
                let counts = sample_counts(&sampler, support, n, rep_seed(cfg.seed, n, r));
                let phat = counts.mle();
                let dev = sup_dev(p, phat.probs());
                let (topk_dev, top1_dev, naive_covered, naive_radius) = match k {
                    Some(k) => {
                        let idx = top_k_indices(counts.counts(), k);
                        let top = idx[0];
                        let ci = clopper_pearson(counts.counts()[top], n, delta)?;
                        let th = phat.probs()[top];
                        (
                            subset_deviation(p, phat.probs(), &idx),
                            (p[top] - th).abs(),
                            ci.contains(p[top]),
                            (th - ci.lower).max(ci.upper - th),
                        )
                    }
                    None => (dev, dev, false, 0.0),
                };
                let radii = prepared
                    .iter()
                    .map(|prep| match prep {
                        Prepared::Skipped(_) => Ok(f64::NAN),
                        Prepared::Static(res) => Ok(res.radius),
                        Prepared::Dynamic(spec) => spec.evaluate(p, &phat).map(|r| r.radius),
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok(Rep { dev, topk_dev, top1_dev, radii, naive_covered, naive_radius })
            })
            .collect::<Result<_>>()?;

        let mut devs: Vec<f64> = reps.iter().map(|r| r.dev).collect();
        let oracle = quantile(&mut devs, delta);
        let line = match k {
            Some(_) => {
                let mut topk: Vec<f64> = reps.iter().map(|r| r.topk_dev).collect();
                let mut top1: Vec<f64> = reps.iter().map(|r| r.top1_dev).collect();
                ReferenceLine {
                    n,
                    delta,
                    oracle_quantile: oracle,
                    oracle_topk_quantile: Some(quantile(&mut topk, delta)),
                    oracle_top1_quantile: Some(quantile(&mut top1, delta)),
                    selective_lb: Some(selective_lb(true_top, n, delta)?),
                }
            }
            None => ReferenceLine {
                n,
                delta,
                oracle_quantile: oracle,
                oracle_topk_quantile: None,
                oracle_top1_quantile: None,
                selective_lb: None,
            },
        };
        reference.push(line);

        for (j, (spec, prep)) in specs.iter().zip(&prepared).enumerate() {
            let mut cell = CoverageCell {
                method: spec.method.to_string(),
                n,
                delta,
                skipped: None,
                reps: cfg.reps,
                covered: 0,
                coverage_rate: 0.0,
                full_coverage_rate: None,
                mean_radius: None,
                failure_prob: None,
                m_used: None,
                oracle_quantile: oracle,
            };
            match prep {
                Prepared::Skipped(reason) => cell.skipped = Some(reason.clone()),
                Prepared::Static(res) => {
                    cell.failure_prob = Some(res.failure_prob);
                    cell.m_used = res.m_used;
                }
                Prepared::Dynamic(s) => {
                    // budget and order depend only on n, so read them off rep 0's inputs
                    let first = s.evaluate(p, &placeholder_mle(n))?;
                    cell.failure_prob = Some(first.failure_prob);
                    cell.m_used = first.m_used;
                }
            }
            if cell.skipped.is_none() {
                let mut covered = 0u64;
                let mut full = 0u64;
                let mut sum = KahanSum::default();
                for rep in &reps {
                    let radius = rep.radii[j];
                    covered += u64::from(rep.topk_dev <= radius);
                    full += u64::from(rep.dev <= radius);
                    sum.add(radius);
                }
                cell.covered = covered;
                cell.coverage_rate = covered as f64 / cfg.reps as f64;
                cell.full_coverage_rate = Some(full as f64 / cfg.reps as f64);
                cell.mean_radius = Some(sum.total() / cfg.reps as f64);
            }
            cells.push(cell);
        }

        if k.is_some() {
            let covered = reps.iter().filter(|r| r.naive_covered).count() as u64;
            let mean = reps.iter().map(|r| r.naive_radius).collect::<KahanSum>().total() / cfg.reps as f64;
            cells.push(CoverageCell {
                method: NAIVE_TOP1.into(),
                n,
                delta,
                skipped: None,
                reps: cfg.reps,
                covered,
                coverage_rate: covered as f64 / cfg.reps as f64,
                full_coverage_rate: None,
                mean_radius: Some(mean),
                failure_prob: Some(delta),
                m_used: None,
                oracle_quantile: oracle,
            });
        }
    }

    Ok(CoverageReport {
        label: cfg.label.clone(),
        support_size: support,
        seed: cfg.seed,
        reps: cfg.reps,
        k,
        delta_rule: cfg.delta_rule,
        cells,
        reference,
    })
}

/// Top-k run; `cfg.k` must be set.
pub fn topk_experiment(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    if cfg.k.is_none() {
        return Err(Error::invalid("top-k experiment needs k"));
    }
    run_coverage(cfg)
}

/// Number of count vectors of size `n` over `a` symbols, `C(n+a−1, a−1)`.
pub fn composition_count(n: u64, a: usize) -> f64 {
    ln_binomial(n + a as u64 - 1, a as u64 - 1).exp()
}

/// Calls `f` on every count vector of size `n` over `a` symbols, in
/// lexicographically decreasing order of the leading counts.
pub fn for_each_composition<F: FnMut(&[u64])>(n: u64, a: usize, mut f: F) {
    fn go<F: FnMut(&[u64])>(counts: &mut [u64], pos: usize, left: u64, f: &mut F) {
        if pos + 1 == counts.len() {
            counts[pos] = left;
            f(counts);
            return;
        }
        for c in (0..=left).rev() {
            counts[pos] = c;
            go(counts, pos + 1, left - c, f);
        }
    }
    if a == 0 {
        return;
    }
    let mut counts = vec![0u64; a];
    go(&mut counts, 0, n, &mut f);
}

/// Exact coverage `Σ P(c)·1{sup_dev(p, c/n) ≤ radius(c)}` over all count
/// vectors `c`.
pub fn exact_coverage(dist: &Distribution, n: u64, spec: &BoundSpec) -> Result<f64> {
    let p = dist.probs();
    let count = composition_count(n, p.len());
    if count > MAX_COMPOSITIONS {
        return Err(Error::invalid(format!(
            "{count:.3e} count vectors exceed the enumeration limit {MAX_COMPOSITIONS:e}"
        )));
    }
    if n < spec.method.min_n() {
        return Err(Error::out_of_range(format!("{} needs n ≥ {}", spec.method, spec.method.min_n())));
    }
    let fixed = if spec.method.is_data_dependent() {
        None
    } else {
        Some(spec.evaluate(p, &placeholder_mle(n))?.radius)
    };
    let ln_p: Vec<f64> = p.iter().map(|x| x.ln()).collect();
    let ln_n_fact = ln_factorial(n);
    let mut total = KahanSum::default();
    let mut failure = None;
    for_each_composition(n, p.len(), |c| {
        if failure.is_some() {
            return;
        }
        let mut ln_prob = ln_n_fact;
        for (i, &ci) in c.iter().enumerate() {
            if ci > 0 {
                ln_prob += ci as f64 * ln_p[i] - ln_factorial(ci);
            }
        }
        if ln_prob == f64::NEG_INFINITY {
            return;
        }
        let counts = CountVector::new(c.to_vec()).expect("n ≥ 1");
        let phat = counts.mle();
        let radius = match fixed {
            Some(r) => r,
            None => match spec.evaluate(p, &phat) {
                Ok(r) => r.radius,
                Err(e) => {
                    failure = Some(e);
                    return;
                }
            },
        };
        if sup_dev(p, phat.probs()) <= radius {
            total.add(ln_prob.exp());
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(total.total().min(1.0)),
    }
}

/// Every method, one spec each, at `delta` with default split and order.
pub fn all_method_specs(delta: f64) -> Vec<BoundSpec> {
    BoundMethod::ALL.iter().map(|m| BoundSpec::new(*m, delta)).collect()
}
