//! Frequency tables from CSV files and raw text.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::dist::Distribution;
use crate::numeric::KahanSum;
use crate::{Error, Result};

/// Label of the residual bucket appended to partial proportion tables.
pub const OTHER_LABEL: &str = "OTHER";

/// Proportion tables summing to at least this are renormalized; below it
/// the missing mass goes to an [`OTHER_LABEL`] bucket.
pub const RENORMALIZE_FLOOR: f64 = 0.98;
/// Proportion tables summing above this are rejected.
pub const PROPORTION_CEILING: f64 = 1.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableMode {
    Counts,
    Proportions,
}

impl std::str::FromStr for TableMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "counts" => Ok(TableMode::Counts),
            "proportions" => Ok(TableMode::Proportions),
            _ => Err(Error::invalid(format!("table mode must be counts or proportions, got {s:?}"))),
        }
    }
}

/// Labelled nonnegative values with unique labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    entries: Vec<(String, f64)>,
    total: f64,
}

#[derive(Debug, Serialize)]
struct Record<'a> {
    label: &'a str,
    count: f64,
    prob: f64,
}

impl FrequencyTable {
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        let mut seen = HashMap::with_capacity(entries.len());
        for (i, (label, value)) in entries.iter().enumerate() {
            if !value.is_finite() || *value < 0.0 {
                return Err(Error::Validation(format!("value for {label:?} must be finite and nonnegative, got {value}")));
            }
            if seen.insert(label.as_str(), i).is_some() {
                return Err(Error::Validation(format!("duplicate label {label:?}")));
            }
        }
        let total = entries.iter().map(|(_, v)| *v).collect::<KahanSum>().total();
        if !(total > 0.0) {
            return Err(Error::Validation("table total must be positive".into()));
        }
        Ok(Self { entries, total })
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.entries.iter().find(|(l, _)| l == label).map(|(_, v)| *v)
    }

    /// Entries sorted by value, largest first; ties keep table order.
    pub fn sorted_desc(&self) -> Self {
        let mut entries = self.entries.clone();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1));
        Self { entries, total: self.total }
    }

    pub fn write_csv<W: Write>(&self, writer: W, value_name: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["label", value_name])?;
        for (label, value) in &self.entries {
            w.write_record([label.as_str(), &value.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON array of `{label, count, prob}` records.
    pub fn to_json(&self) -> Result<String> {
        let records: Vec<Record<'_>> = self
            .entries
            .iter()
            .map(|(label, v)| Record { label, count: *v, prob: v / self.total })
            .collect();
        Ok(serde_json::to_string_pretty(&records)?)
    }
}

/// Loads a headed two-column `label,value` CSV.
pub fn load_frequency_csv(path: &Path, mode: TableMode) -> Result<FrequencyTable> {
    let file = fs::File::open(path)?;
    let parse_err = |line: u64, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let rows = crate::dist::read_two_column(file, "value").map_err(|e| match e {
        Error::Csv(c) => {
            let line = c.position().map_or(0, |p| p.line());
            parse_err(line, c.to_string())
        }
        Error::Validation(m) => parse_err(0, m),
        other => other,
    })?;
    let mut entries = Vec::with_capacity(rows.len());
    for (line, label, value) in rows {
        let v: f64 = value.parse().map_err(|_| parse_err(line, format!("value {value:?} is not a number")))?;
        if !v.is_finite() || v < 0.0 {
            return Err(parse_err(line, format!("value {value:?} must be finite and nonnegative")));
        }
        if label.is_empty() {
            return Err(parse_err(line, "empty label".into()));
        }
        entries.push((label, v));
    }
    let table = FrequencyTable::new(entries)?;
    match mode {
        TableMode::Counts => Ok(table),
        TableMode::Proportions => normalize_proportions(table),
    }
}

fn normalize_proportions(table: FrequencyTable) -> Result<FrequencyTable> {
    let sum = table.total;
    if sum > PROPORTION_CEILING {
        return Err(Error::Validation(format!("proportions sum to {sum}, above {PROPORTION_CEILING}")));
    }
    let mut entries = table.entries;
    if sum < RENORMALIZE_FLOOR {
        let residual = 1.0 - sum;
        match entries.iter_mut().find(|(l, _)| l == OTHER_LABEL) {
            Some((_, v)) => *v += residual,
            None => entries.push((OTHER_LABEL.to_string(), residual)),
        }
    } else {
        entries.iter_mut().for_each(|(_, v)| *v /= sum);
    }
    FrequencyTable::new(entries)
}

/// Lowercased maximal runs of alphanumerics and apostrophes.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Token counts, most frequent first (ties in first-seen order).
pub fn count_tokens(text: &str) -> Result<FrequencyTable> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut entries: Vec<(String, f64)> = Vec::new();
    for token in tokenize(text) {
        match index.get(&token) {
            Some(&i) => entries[i].1 += 1.0,
            None => {
                index.insert(token.clone(), entries.len());
                entries.push((token, 1.0));
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::Validation("text contains no tokens".into()));
    }
    FrequencyTable::new(entries).map(|t| t.sorted_desc())
}

pub fn tokenize_corpus(path: &Path) -> Result<FrequencyTable> {
    count_tokens(&fs::read_to_string(path)?)
}

/// Whether token and type counts fall within `tolerance` (relative) of the
/// expected values.
pub fn corpus_within_band(table: &FrequencyTable, tokens: f64, types: f64, tolerance: f64) -> bool {
    (table.total() - tokens).abs() <= tolerance * tokens && (table.len() as f64 - types).abs() <= tolerance * types
}

/// `value / total` per entry, in table order.
pub fn to_distribution(table: &FrequencyTable) -> Result<Distribution> {
    let raw: Vec<f64> = table.entries.iter().map(|(_, v)| v / table.total).collect();
    let norm = raw.iter().copied().collect::<KahanSum>().total();
    Distribution::new(raw.into_iter().map(|p| p / norm).collect())
}
