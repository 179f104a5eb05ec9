//! Run configuration: command-line flags over an optional `key = value`
//! file over defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mtvar_core::meta_eval::{ErrorPolicy, DEFAULT_HYBRIDS};
use mtvar_core::significance::TestConfig;
use serde_json::{json, Value};

use crate::failure::{CliResult, Failure};

pub const KEYS: [&str; 8] = ["seed", "iterations", "alpha", "policy", "jobs", "out", "hybrids", "metrics"];

/// Values given on the command line; `None` defers to the file or default.
#[derive(Debug, Clone, Default)]
pub struct Flags {
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub alpha: Option<f64>,
    pub policy: Option<String>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub hybrids: Option<usize>,
    pub metrics: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Never defaulted; commands that resample require it.
    pub seed: Option<u64>,
    pub iterations: usize,
    pub alpha: f64,
    pub policy: ErrorPolicy,
    pub jobs: usize,
    pub out: PathBuf,
    pub hybrids: usize,
    pub metrics: Option<Vec<String>>,
}

/// Parses a flat `key = value` file. Blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str, file: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: &str| Failure::Input(format!("{file}:{}: {reason}", i + 1));
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(bad(&format!("unknown key `{key}`")));
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(bad(&format!("duplicate key `{key}`")));
        }
    }
    Ok(out)
}

fn pick<T: FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> CliResult<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|_| Failure::Input(format!("config: bad value `{v}` for `{key}`"))))
        .transpose()
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl RunConfig {
    pub fn resolve(flags: Flags, file: &BTreeMap<String, String>) -> CliResult<Self> {
        let policy = match pick(flags.policy, file, "policy")? {
            None => ErrorPolicy::default(),
            Some(p) => ErrorPolicy::parse(&p)
                .ok_or_else(|| Failure::Input(format!("unknown policy `{p}` (full or significant-only)")))?,
        };
        let metrics = pick(flags.metrics, file, "metrics")?.map(|m: String| {
            m.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect::<Vec<_>>()
        });
        let config = Self {
            seed: pick(flags.seed, file, "seed")?,
            iterations: pick(flags.iterations, file, "iterations")?.unwrap_or(1000),
            alpha: pick(flags.alpha, file, "alpha")?.unwrap_or(0.05),
            policy,
            jobs: pick(flags.jobs, file, "jobs")?.unwrap_or_else(default_jobs),
            out: pick(flags.out, file, "out")?.unwrap_or_else(|| PathBuf::from(".")),
            hybrids: pick(flags.hybrids, file, "hybrids")?.unwrap_or(DEFAULT_HYBRIDS),
            metrics,
        };
        if config.jobs == 0 {
            return Err(Failure::Input("--jobs must be at least 1".into()));
        }
        if config.metrics.as_ref().is_some_and(Vec::is_empty) {
            return Err(Failure::Input("--metrics lists no metric".into()));
        }
        config.significance(0).validate().map_err(|e| Failure::staged("config", e))?;
        Ok(config)
    }

    /// Reads the `--config` file, if any, and merges.
    pub fn load(flags: Flags, path: Option<&Path>) -> CliResult<Self> {
        let file = match path {
            None => BTreeMap::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Failure::io(p, e))?;
                parse_config_file(&text, &p.display().to_string())?
            }
        };
        Self::resolve(flags, &file)
    }

    pub fn require_seed(&self) -> CliResult<u64> {
        self.seed
            .ok_or_else(|| Failure::Input("--seed is required for this command (no default seed is ever used)".into()))
    }

    fn significance(&self, seed: u64) -> TestConfig {
        TestConfig {
            iterations: self.iterations,
            alpha: self.alpha,
            seed,
        }
    }

    pub fn test_config(&self) -> CliResult<TestConfig> {
        Ok(self.significance(self.require_seed()?))
    }

    /// Snapshot for the run manifest. `jobs` is recorded but does not
    /// influence any output byte.
    pub fn to_json(&self) -> Value {
        json!({
            "seed": self.seed,
            "iterations": self.iterations,
            "alpha": self.alpha,
            "policy": self.policy.as_str(),
            "jobs": self.jobs,
            "out": self.out.display().to_string(),
            "hybrids": self.hybrids,
            "metrics": self.metrics,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::resolve(Flags::default(), &BTreeMap::new()).unwrap();
        assert_eq!(c.seed, None);
        assert_eq!((c.iterations, c.alpha, c.hybrids), (1000, 0.05, 142));
        assert_eq!(c.policy, ErrorPolicy::Full);
        assert!(c.require_seed().is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_file("# run\nseed = 7\niterations=200\npolicy = significant-only\nmetrics = BLEU, chrF\n", "c").unwrap();
        let flags = Flags {
            iterations: Some(50),
            ..Flags::default()
        };
        let c = RunConfig::resolve(flags, &file).unwrap();
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.iterations, 50);
        assert_eq!(c.policy, ErrorPolicy::SignificantOnly);
        assert_eq!(c.metrics, Some(vec!["BLEU".to_string(), "chrF".to_string()]));
    }

    #[test]
    fn rejects_bad_files_and_values() {
        assert!(parse_config_file("seed 7", "c").is_err());
        assert!(parse_config_file("colour = red", "c").is_err());
        assert!(parse_config_file("seed = 1\nseed = 2", "c").is_err());
        let file = parse_config_file("alpha = lots", "c").unwrap();
        assert!(RunConfig::resolve(Flags::default(), &file).is_err());
        let file = parse_config_file("alpha = 1.5", "c").unwrap();
        assert!(RunConfig::resolve(Flags::default(), &file).is_err());
        let flags = Flags {
            jobs: Some(0),
            ..Flags::default()
        };
        assert!(RunConfig::resolve(flags, &BTreeMap::new()).is_err());
    }
}
