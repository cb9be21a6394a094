//! Flat `key = value` experiment configs.
//!
//! Grammar: one `key = value` pair per line, `#` starts a comment, blank
//! lines are ignored, list values are comma-separated. Recognized keys:
//!
//! | key             | value                                                       |
//! |-----------------|-------------------------------------------------------------|
//! | `distributions` | list of `zipf:A:s`, `uniform:A`, `counts:PATH`, `proportions:PATH`, `corpus:PATH` |
//! | `n`             | list of sample sizes, ascending                             |
//! | `delta`         | a number in (0, 1) or `1/n^2`                               |
//! | `methods`       | list of method names, or `all`                              |
//! | `m`             | `auto` or an even integer ≥ 2                               |
//! | `reps`          | repetitions per cell                                        |
//! | `seed`          | base seed                                                   |
//! | `k`             | top-k size (top-k runs only)                                |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use supnorm_core::bounds::{BoundMethod, BoundSpec, MChoice};
use supnorm_core::dist::Distribution;
use supnorm_core::ingest::{load_frequency_csv, to_distribution, tokenize_corpus, TableMode};
use supnorm_core::montecarlo::{DeltaRule, ExperimentConfig};

use crate::Failure;

const KEYS: [&str; 8] = ["distributions", "n", "delta", "methods", "m", "reps", "seed", "k"];

/// Parsed key/value pairs, kept sorted so the echo and the hash are stable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Failure::usage(format!("config line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(Failure::usage(format!("config line {}: unknown key {key:?}", i + 1)));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Failure::usage(format!("config line {}: duplicate key {key:?}", i + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::runtime(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn preset(name: &str) -> Result<Self, Failure> {
        let text = match name {
            "fig1" => "distributions = zipf:100:1.1, uniform:100\nn = 100, 1000, 10000\ndelta = 0.05\nmethods = all\nreps = 10000\n",
            "fig2" => "distributions = zipf:100:1.1, uniform:100\nn = 1000, 3000, 10000, 30000, 100000\ndelta = 1/n^2\nmethods = all\nreps = 10000\n",
            "smoke" => "distributions = zipf:20:1.1\nn = 50, 100\ndelta = 0.05\nmethods = all\nreps = 1\n",
            "topk" => "distributions = zipf:100:1.1\nn = 10000\ndelta = 0.05\nmethods = all\nreps = 1000\nk = 5\n",
            other => return Err(Failure::usage(format!("unknown preset {other:?} (fig1, fig2, smoke, topk)"))),
        };
        Self::parse(text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str, Failure> {
        self.get(key).ok_or_else(|| Failure::usage(format!("config is missing `{key}`")))
    }

    /// Canonical `key=value` lines; the hash input.
    pub fn canonical(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// First 12 hex digits of the SHA-256 of the canonical form.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(digest)[..12].to_string()
    }

    pub fn seed(&self) -> Result<u64, Failure> {
        self.get("seed").map_or(Ok(0), |s| parse_num(s, "seed"))
    }

    /// One experiment per listed distribution.
    pub fn experiments(&self, base_dir: &Path) -> Result<Vec<ExperimentConfig>, Failure> {
        let n_values = list(self.require("n")?)
            .map(|s| parse_num::<u64>(s, "n"))
            .collect::<Result<Vec<_>, _>>()?;
        let delta_text = self.require("delta")?;
        let delta_rule = if delta_text.replace(' ', "") == "1/n^2" {
            DeltaRule::InverseNSquared
        } else {
            DeltaRule::Fixed(parse_num(delta_text, "delta")?)
        };
        let m: MChoice = self.get("m").unwrap_or("auto").parse().map_err(Failure::from)?;
        let base_delta = match delta_rule {
            DeltaRule::Fixed(d) => d,
            // replaced per n; any valid value will do here
            DeltaRule::InverseNSquared => 0.05,
        };
        let methods = parse_methods(self.get("methods").unwrap_or("all"))?
            .into_iter()
            .map(|method| BoundSpec::new(method, base_delta).with_m(m))
            .collect::<Vec<_>>();
        let reps = self.get("reps").map_or(Ok(10_000), |s| parse_num(s, "reps"))?;
        let k = self.get("k").map(|s| parse_num(s, "k")).transpose()?;
        let seed = self.seed()?;

        let mut out = Vec::new();
        for item in list(self.require("distributions")?) {
            let (label, distribution) = parse_distribution(item, base_dir)?;
            let mut cfg = ExperimentConfig::new(label, distribution, n_values.clone(), delta_rule);
            cfg.methods = methods.clone();
            cfg.reps = reps;
            cfg.seed = seed;
            cfg.k = k;
            cfg.validate()?;
            out.push(cfg);
        }
        if out.is_empty() {
            return Err(Failure::usage("`distributions` lists nothing"));
        }
        Ok(out)
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_num<T: std::str::FromStr>(s: &str, key: &str) -> Result<T, Failure> {
    s.trim()
        .parse()
        .map_err(|_| Failure::usage(format!("`{key}`: cannot parse {s:?}")))
}

pub fn parse_methods(value: &str) -> Result<Vec<BoundMethod>, Failure> {
    let mut methods = Vec::new();
    for name in list(value) {
        if name.eq_ignore_ascii_case("all") {
            methods.extend(BoundMethod::ALL);
        } else {
            methods.push(name.parse().map_err(Failure::from)?);
        }
    }
    methods.dedup();
    if methods.is_empty() {
        return Err(Failure::usage("no methods requested"));
    }
    Ok(methods)
}

/// `zipf:A:s`, `uniform:A` or `<mode>:PATH`; returns a file-name-safe label.
pub fn parse_distribution(spec: &str, base_dir: &Path) -> Result<(String, Distribution), Failure> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let resolve = |p: &str| -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) }
    };
    let stem = |p: &str| {
        Path::new(p)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "file".into())
    };
    match kind {
        "zipf" => {
            let (a, s) = rest
                .split_once(':')
                .ok_or_else(|| Failure::usage(format!("expected zipf:A:exponent, got {spec:?}")))?;
            let a: usize = parse_num(a, "distributions")?;
            let s: f64 = parse_num(s, "distributions")?;
            Ok((format!("zipf-{a}-{s}"), Distribution::zipf(a, s)?))
        }
        "uniform" => {
            let a: usize = parse_num(rest, "distributions")?;
            Ok((format!("uniform-{a}"), Distribution::uniform(a)?))
        }
        "counts" | "proportions" => {
            let mode: TableMode = kind.parse()?;
            let table = load_frequency_csv(&resolve(rest), mode)?;
            Ok((stem(rest), to_distribution(&table)?))
        }
        "corpus" => {
            let table = tokenize_corpus(&resolve(rest))?;
            Ok((stem(rest), to_distribution(&table)?))
        }
        _ => Err(Failure::usage(format!(
            "unknown distribution {spec:?} (zipf:A:s, uniform:A, counts:PATH, proportions:PATH, corpus:PATH)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_lists() {
        let c = Config::parse("# sweep\nn = 10, 20 # two sizes\n\ndelta=0.1\n").unwrap();
        assert_eq!(c.values["n"], "10, 20");
        assert_eq!(c.values["delta"], "0.1");
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(Config::parse("colour = red\n").is_err());
        assert!(Config::parse("n = 1\nn = 2\n").is_err());
        assert!(Config::parse("just words\n").is_err());
    }

    #[test]
    fn hash_ignores_layout() {
        let a = Config::parse("n = 10\ndelta = 0.1\n").unwrap();
        let b = Config::parse("# x\ndelta = 0.1\n\nn = 10\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), Config::parse("n = 11\ndelta = 0.1\n").unwrap().hash());
    }

    #[test]
    fn fig1_preset_expands_to_two_experiments() {
        let exps = Config::preset("fig1").unwrap().experiments(Path::new(".")).unwrap();
        assert_eq!(exps.len(), 2);
        assert_eq!(exps[0].n_values, vec![100, 1000, 10000]);
        assert_eq!(exps[1].label, "uniform-100");
        assert_eq!(exps[0].methods.len(), BoundMethod::ALL.len());
    }

    #[test]
    fn fig2_preset_uses_decaying_delta() {
        let exps = Config::preset("fig2").unwrap().experiments(Path::new(".")).unwrap();
        assert_eq!(exps[0].delta_rule, DeltaRule::InverseNSquared);
    }
}
