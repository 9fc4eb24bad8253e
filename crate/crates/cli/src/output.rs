//! Result files, CSV rows and run manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::fmt_f64;
use crate::CliError;

pub const BOUND_SCHEMA: &str = "fanobound.bound/1";
pub const TABLE_SCHEMA: &str = "fanobound.bound-table/1";
pub const RISK_TABLE_SCHEMA: &str = "fanobound.risk-table/1";

pub const COLUMNS: [&str; 11] = [
    "pipeline",
    "d",
    "s",
    "n",
    "sigma2",
    "t",
    "eps",
    "mi_bound_nats",
    "log_ratio_nats",
    "bound",
    "valid",
];

pub const RISK_COLUMNS: [&str; 4] = ["estimator", "risk_mean", "risk_lower", "risk_upper"];

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Identity of a run: what was asked for, not when.
#[derive(Debug, Clone)]
pub struct RunId {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub config_hash: String,
    pub manifest: String,
}

impl RunId {
    pub fn new(command: &str, config: BTreeMap<String, String>, seed: u64) -> Self {
        let mut text = String::new();
        for (k, v) in &config {
            let _ = writeln!(text, "{k}={v}");
        }
        let config_hash = sha256_hex(text.as_bytes());
        let manifest = sha256_hex(
            format!(
                "fanobound-manifest/1\ncommand={command}\nconfig-hash={config_hash}\nseed={seed}\nversion={}\n",
                fanobound::VERSION
            )
            .as_bytes(),
        );
        RunId {
            command: command.to_string(),
            config,
            seed,
            config_hash,
            manifest,
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    manifest: &'a str,
    command: &'a str,
    config_hash: &'a str,
    config: &'a BTreeMap<String, String>,
    seed: u64,
    versions: BTreeMap<&'static str, &'static str>,
    timestamps: BTreeMap<&'static str, u64>,
    outputs: Vec<String>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Collects artifacts for one run and writes them with `manifest.json`.
pub struct Artifacts {
    dir: PathBuf,
    started: u64,
    files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Self {
        Artifacts {
            dir: dir.to_path_buf(),
            started: unix_now(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn write(self, id: &RunId) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| io_err(&self.dir, e))?;
        let mut outputs = Vec::new();
        for (name, contents) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
            outputs.push(path.display().to_string());
        }
        let manifest = Manifest {
            manifest: &id.manifest,
            command: &id.command,
            config_hash: &id.config_hash,
            config: &id.config,
            seed: id.seed,
            versions: BTreeMap::from([
                ("fanobound", fanobound::VERSION),
                ("fanobound-cli", env!("CARGO_PKG_VERSION")),
            ]),
            timestamps: BTreeMap::from([("started_unix", self.started), ("finished_unix", unix_now())]),
            outputs,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        fs::write(&path, text).map_err(|e| io_err(&path, e))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// One CSV row: the bound columns and optional matched risk.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub pipeline: String,
    pub d: u64,
    pub s: Option<u64>,
    pub n: u64,
    pub sigma2: f64,
    pub t: Option<f64>,
    pub eps: Option<f64>,
    pub mi_bound: Option<f64>,
    pub log_ratio: Option<f64>,
    pub bound: f64,
    pub valid: bool,
    pub risk: Option<RiskCells>,
    /// Swept key that has no column of its own, with its value.
    pub extra: Option<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskCells {
    pub estimator: String,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl Row {
    fn cells(&self) -> Vec<String> {
        let mut cells = vec![
            self.pipeline.clone(),
            self.d.to_string(),
            self.s.map(|s| s.to_string()).unwrap_or_default(),
            self.n.to_string(),
            fmt_f64(self.sigma2),
            opt(self.t),
            opt(self.eps),
            opt(self.mi_bound),
            opt(self.log_ratio),
            fmt_f64(self.bound),
            self.valid.to_string(),
        ];
        if let Some((_, v)) = &self.extra {
            cells.push(fmt_f64(*v));
        }
        if let Some(r) = &self.risk {
            cells.extend([r.estimator.clone(), fmt_f64(r.mean), fmt_f64(r.lower), fmt_f64(r.upper)]);
        }
        cells
    }
}

/// CSV text with the schema/manifest comment line.
pub fn render_csv(rows: &[Row], manifest: &str) -> String {
    let with_risk = rows.iter().any(|r| r.risk.is_some());
    let schema = if with_risk { RISK_TABLE_SCHEMA } else { TABLE_SCHEMA };
    let mut out = format!("# schema={schema} manifest={manifest}\n");
    let mut header: Vec<&str> = COLUMNS.to_vec();
    if let Some((key, _)) = rows.first().and_then(|r| r.extra.as_ref()) {
        header.push(key);
    }
    if with_risk {
        header.extend(RISK_COLUMNS);
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.cells().join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_depends_on_config_and_seed() {
        let cfg = BTreeMap::from([("d".to_string(), "2".to_string())]);
        let a = RunId::new("bound", cfg.clone(), 1);
        assert_eq!(a.manifest, RunId::new("bound", cfg.clone(), 1).manifest);
        assert_ne!(a.manifest, RunId::new("bound", cfg.clone(), 2).manifest);
        assert_ne!(a.manifest, RunId::new("table", cfg, 1).manifest);
    }

    #[test]
    fn csv_layout() {
        let row = Row {
            pipeline: "normal-mean-integrated".into(),
            d: 10,
            s: None,
            n: 100,
            sigma2: 1.0,
            t: None,
            eps: None,
            mi_bound: None,
            log_ratio: Some(6.9),
            bound: 0.5,
            valid: true,
            risk: None,
            extra: None,
        };
        let csv = render_csv(&[row], "abc");
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "# schema=fanobound.bound-table/1 manifest=abc");
        assert_eq!(lines[1], COLUMNS.join(","));
        assert_eq!(lines[2], "normal-mean-integrated,10,,100,1.0,,,,6.9,0.5,true");
    }
}
