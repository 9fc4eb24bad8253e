//! Flat `key = value` run configuration.
//!
//! Keys: `problem`, `d`, `s`, `n`, `sigma2`, `t`, `r`, `eps-grid`, `seed`,
//! `mode`, `scale`. Lines starting with `#` and blank lines are ignored.
//! Underscores in keys are read as dashes. Command-line flags override the
//! file; the file overrides `FANOBOUND_SEED`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use fanobound::minimax::NormalMeanMode;

use crate::CliError;

pub const SEED_ENV: &str = "FANOBOUND_SEED";

pub const KEYS: &[&str] = &[
    "problem", "d", "s", "n", "sigma2", "t", "r", "eps-grid", "seed", "mode", "scale",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundProblem {
    NormalMean,
    NormalMeanTail,
    SparseLocation,
    CompressedSensing,
    Regression,
}

impl BoundProblem {
    pub const ALL: [BoundProblem; 5] = [
        BoundProblem::NormalMean,
        BoundProblem::NormalMeanTail,
        BoundProblem::SparseLocation,
        BoundProblem::CompressedSensing,
        BoundProblem::Regression,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundProblem::NormalMean => "normal-mean",
            BoundProblem::NormalMeanTail => "normal-mean-tail",
            BoundProblem::SparseLocation => "sparse-location",
            BoundProblem::CompressedSensing => "compressed-sensing",
            BoundProblem::Regression => "regression",
        }
    }

    /// Keys that have no default for this problem.
    pub fn required(self) -> &'static [&'static str] {
        match self {
            BoundProblem::NormalMean | BoundProblem::Regression => &["d", "n"],
            BoundProblem::NormalMeanTail => &["d", "n", "r", "t"],
            BoundProblem::SparseLocation | BoundProblem::CompressedSensing => &["d", "s", "n"],
        }
    }
}

impl fmt::Display for BoundProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundProblem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|p| p.as_str()).collect();
            format!("unknown problem `{s}` (expected one of {})", names.join(", "))
        })
    }
}

/// Raw key-value layers before typing.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut out = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, got `{line}`", i + 1)))?;
            let key = normalize_key(key.trim());
            if out.values.contains_key(&key) {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
            out.insert(&key, value.trim())?;
        }
        Ok(out)
    }

    pub fn insert(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = normalize_key(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        self.values.insert(key, value.to_string());
        Ok(())
    }

    /// Layer `other` on top of `self`.
    pub fn overlay(&mut self, other: RawConfig) {
        self.values.extend(other.values);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

fn normalize_key(key: &str) -> String {
    key.replace('_', "-")
}

/// A fully typed bound configuration with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConfig {
    pub problem: BoundProblem,
    pub d: u64,
    pub s: Option<u64>,
    pub n: u64,
    pub sigma2: f64,
    pub t: Option<f64>,
    pub r: Option<f64>,
    pub eps_grid: Option<Vec<f64>>,
    pub seed: u64,
    pub mode: NormalMeanMode,
    pub scale: f64,
}

impl BoundConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let problem: BoundProblem = match raw.get("problem") {
            Some(p) => p.parse().map_err(CliError::Config)?,
            None => return Err(missing("problem")),
        };
        for key in problem.required() {
            if raw.get(key).is_none() {
                return Err(missing(key));
            }
        }
        let seed = match raw.get("seed") {
            Some(v) => parse_u64("seed", v)?,
            None => match std::env::var(SEED_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("invalid value for {SEED_ENV}: `{v}`")))?,
                Err(_) => 0,
            },
        };
        let mode = match raw.get("mode") {
            Some(v) => v.parse().map_err(|e| invalid("mode", v, e))?,
            None => NormalMeanMode::Integrated,
        };
        let cfg = BoundConfig {
            problem,
            d: positive_u64(raw, "d")?.unwrap_or(0),
            s: positive_u64(raw, "s")?,
            n: positive_u64(raw, "n")?.unwrap_or(0),
            sigma2: positive_f64(raw, "sigma2")?.unwrap_or(1.0),
            t: positive_f64(raw, "t")?,
            r: positive_f64(raw, "r")?,
            eps_grid: match raw.get("eps-grid") {
                Some(v) => Some(parse_list("eps-grid", v)?),
                None => None,
            },
            seed,
            mode,
            scale: positive_f64(raw, "scale")?.unwrap_or(1.0),
        };
        Ok(cfg)
    }

    /// Sorted `key=value` lines with defaults filled in; the hash input.
    pub fn canonical(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("problem".to_string(), self.problem.to_string());
        m.insert("d".to_string(), self.d.to_string());
        m.insert("n".to_string(), self.n.to_string());
        m.insert("sigma2".to_string(), fmt_f64(self.sigma2));
        m.insert("seed".to_string(), self.seed.to_string());
        if let Some(s) = self.s {
            m.insert("s".to_string(), s.to_string());
        }
        if let Some(t) = self.t {
            m.insert("t".to_string(), fmt_f64(t));
        }
        if let Some(r) = self.r {
            m.insert("r".to_string(), fmt_f64(r));
        }
        if let Some(g) = &self.eps_grid {
            let parts: Vec<_> = g.iter().map(|v| fmt_f64(*v)).collect();
            m.insert("eps-grid".to_string(), parts.join(","));
        }
        if self.problem == BoundProblem::NormalMean {
            let mode = match self.mode {
                NormalMeanMode::Simple => "simple",
                NormalMeanMode::Integrated => "integrated",
            };
            m.insert("mode".to_string(), mode.to_string());
        }
        if self.problem == BoundProblem::Regression {
            m.insert("scale".to_string(), fmt_f64(self.scale));
        }
        m
    }

    /// Set a sweepable key from a typed value.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), CliError> {
        let whole = || -> Result<u64, CliError> {
            if value >= 1.0 && value.fract() == 0.0 && value < 2f64.powi(53) {
                Ok(value as u64)
            } else {
                Err(invalid(key, &fmt_f64(value), "expected a positive integer"))
            }
        };
        let pos = || -> Result<f64, CliError> {
            if value > 0.0 && value.is_finite() {
                Ok(value)
            } else {
                Err(invalid(key, &fmt_f64(value), "expected a positive number"))
            }
        };
        match key {
            "d" => self.d = whole()?,
            "s" => self.s = Some(whole()?),
            "n" => self.n = whole()?,
            "sigma2" => self.sigma2 = pos()?,
            "t" => self.t = Some(pos()?),
            "r" => self.r = Some(pos()?),
            "scale" => self.scale = pos()?,
            _ => return Err(CliError::Config(format!("key `{key}` cannot be swept"))),
        }
        Ok(())
    }
}

/// A sweep `key=v1,v2,...` over one numeric key.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<f64>,
}

impl FromStr for Sweep {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, values) = s
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("sweep must look like `key=v1,v2`, got `{s}`")))?;
        let key = normalize_key(key.trim());
        if !["d", "s", "n", "sigma2", "t", "r", "scale"].contains(&key.as_str()) {
            return Err(CliError::Config(format!("key `{key}` cannot be swept")));
        }
        let values = parse_list(&key, values)?;
        Ok(Sweep { key, values })
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<_> = self.values.iter().map(f64::to_string).collect();
        write!(f, "{}={}", self.key, parts.join(","))
    }
}

/// Shortest round-trip decimal form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn missing(key: &str) -> CliError {
    CliError::Config(format!("missing required key `{key}`"))
}

fn invalid(key: &str, value: &str, why: impl fmt::Display) -> CliError {
    CliError::Config(format!("invalid value for key `{key}`: `{value}` ({why})"))
}

fn parse_u64(key: &str, v: &str) -> Result<u64, CliError> {
    v.parse().map_err(|e| invalid(key, v, e))
}

fn positive_u64(raw: &RawConfig, key: &str) -> Result<Option<u64>, CliError> {
    match raw.get(key) {
        None => Ok(None),
        Some(v) => match parse_u64(key, v)? {
            0 => Err(invalid(key, v, "must be at least 1")),
            x => Ok(Some(x)),
        },
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v.parse().map_err(|e| invalid(key, v, e))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(key, v, "must be positive and finite"))
    }
}

fn positive_f64(raw: &RawConfig, key: &str) -> Result<Option<f64>, CliError> {
    raw.get(key).map(|v| parse_f64(key, v)).transpose()
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    let out: Vec<f64> = v
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| parse_f64(key, p))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(invalid(key, v, "empty list"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_with_comments() {
        let raw = RawConfig::parse("# run\nproblem = normal-mean\nd=10\n\nn = 100\nsigma_2 = 2\n").unwrap_err();
        assert!(raw.to_string().contains("sigma-2"));
        let raw = RawConfig::parse("# run\nproblem = normal-mean\nd=10\n\nn = 100\nsigma2 = 2\n").unwrap();
        let cfg = BoundConfig::from_raw(&raw).unwrap();
        assert_eq!((cfg.d, cfg.n, cfg.sigma2), (10, 100, 2.0));
        assert_eq!(cfg.mode, NormalMeanMode::Integrated);
    }

    #[test]
    fn missing_key_is_named() {
        let raw = RawConfig::parse("problem = sparse-location\nd = 32\nn = 200\n").unwrap();
        let err = BoundConfig::from_raw(&raw).unwrap_err();
        assert!(err.to_string().contains("`s`"), "{err}");
    }

    #[test]
    fn duplicate_and_malformed_lines() {
        assert!(RawConfig::parse("d = 1\nd = 2\n").is_err());
        assert!(RawConfig::parse("d 1\n").is_err());
        let raw = RawConfig::parse("problem = normal-mean\nd = 2\nn = 0\n").unwrap();
        assert!(BoundConfig::from_raw(&raw).unwrap_err().to_string().contains("`n`"));
    }

    #[test]
    fn sweep_round_trip() {
        let s: Sweep = "n=50,100,200".parse().unwrap();
        assert_eq!(s.values, vec![50.0, 100.0, 200.0]);
        assert_eq!(s.to_string(), "n=50,100,200");
        assert!("eps-grid=1,2".parse::<Sweep>().is_err());
    }
}
