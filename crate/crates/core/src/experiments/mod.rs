//! Batch experiments. Each returns a [`Report`]: named checks of the form
//! `value <= tolerance`, CSV artifacts, and the config that produced them.

mod algebra;
mod hermite;
mod quotient;
mod spde;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use algebra::{algebra_suite, AlgebraConfig};
pub use hermite::{hermite_suite, HermiteConfig};
pub use quotient::{donsker_check, embed_study, noise_growth, DonskerConfig, EmbedConfig, NoiseGrowthConfig};
pub use spde::{
    spde_compare_wick, spde_residual, spde_solve, uniqueness, CompareConfig, ResidualRunConfig, SolveConfig,
    UniquenessConfig,
};

pub const SUBCOMMANDS: [&str; 9] = [
    "hermite-suite",
    "algebra-suite",
    "embed-study",
    "noise-growth",
    "donsker-check",
    "spde-solve",
    "spde-residual",
    "spde-compare-wick",
    "uniqueness",
];

/// One declared tolerance. Passes iff `value <= tolerance` (NaN fails).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub config: Json,
    pub checks: Vec<Check>,
    pub artifacts: Vec<Artifact>,
}

impl Report {
    fn new(command: &str, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            checks: Vec::new(),
            artifacts: Vec::new(),
        })
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }

    fn push_artifact(&mut self, name: &str, content: String) {
        self.artifacts.push(Artifact {
            name: name.to_string(),
            content,
        });
    }

    /// Manifest: config echo, every check, and a content hash per artifact.
    pub fn manifest(&self) -> Json {
        let artifacts: Vec<Json> = self
            .artifacts
            .iter()
            .map(|a| {
                json!({
                    "name": a.name,
                    "bytes": a.content.len(),
                    "sha256": blob_hash(a.content.as_bytes()),
                })
            })
            .collect();
        json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "checks": self.checks,
            "artifacts": artifacts,
            "pass": self.passed(),
        })
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{} {}: {:.6e} <= {:.6e}{}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance,
                if c.note.is_empty() { String::new() } else { format!("  ({})", c.note) }
            ));
        }
        s
    }

    /// Writes every artifact and `manifest.json` into `dir`. Files written
    /// before a failure are removed again.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let created_dir = !dir.exists();
        let mut written: Vec<PathBuf> = Vec::new();
        let res = (|| -> Result<()> {
            fs::create_dir_all(dir)?;
            for a in &self.artifacts {
                let path = dir.join(&a.name);
                written.push(path.clone());
                fs::write(&path, &a.content)?;
            }
            let path = dir.join("manifest.json");
            written.push(path.clone());
            fs::write(&path, serde_json::to_string_pretty(&self.manifest())? + "\n")?;
            Ok(())
        })();
        if res.is_err() {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created_dir {
                let _ = fs::remove_dir(dir);
            }
        }
        res
    }
}

/// Git-style content hash: sha256 of `"blob <len>\0" ++ content`.
pub fn blob_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Tolerance overrides by check name.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Tolerances {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    /// Parses `name=value`.
    pub fn parse_assignment(&mut self, s: &str) -> Result<()> {
        let (name, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("tolerance `{s}` is not of the form name=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("tolerance `{s}`: `{v}` is not a number")))?;
        self.set(name.trim(), v);
        Ok(())
    }

    fn get(&self, name: &str, default: f64) -> f64 {
        self.0.get(name).copied().unwrap_or(default)
    }

    /// Overrides naming no check of `report` are configuration errors.
    fn validate(&self, report: &Report) -> Result<()> {
        for k in self.0.keys() {
            if report.check(k).is_none() {
                let known: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
                return Err(Error::Config(format!(
                    "no check named `{k}` in {}; known: {}",
                    report.command,
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }
}

impl Report {
    fn check_le(&mut self, tol: &Tolerances, name: &str, value: f64, default_tol: f64, note: impl Into<String>) {
        let tolerance = tol.get(name, default_tol);
        self.checks.push(Check {
            name: name.to_string(),
            value,
            tolerance,
            pass: value <= tolerance,
            note: note.into(),
        });
    }

    fn finish(self, tol: &Tolerances) -> Result<Self> {
        tol.validate(&self)?;
        Ok(self)
    }
}

/// RFC-4180 CSV from a header and rows.
fn csv_table<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_matches_git_convention() {
        // `printf 'hello\n' | git hash-object --object-format=sha256 --stdin`
        assert_eq!(
            blob_hash(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
    }

    #[test]
    fn tolerance_overrides() {
        let mut t = Tolerances::new();
        t.parse_assignment("a=0.5").unwrap();
        assert!(t.parse_assignment("a").is_err());
        assert!(t.parse_assignment("a=x").is_err());
        let mut r = Report::new("x", &json!({})).unwrap();
        r.check_le(&t, "a", 0.4, 0.1, "");
        r.check_le(&t, "b", f64::NAN, 1.0, "");
        assert!(r.checks[0].pass);
        assert!(!r.checks[1].pass);
        assert!(r.clone().finish(&t).is_ok());
        t.set("missing", 1.0);
        assert!(r.finish(&t).is_err());
    }

    #[test]
    fn write_cleans_up_on_failure() {
        let dir = std::env::temp_dir().join(format!("wnchaos-exp-{}", std::process::id()));
        let mut r = Report::new("x", &json!({})).unwrap();
        r.push_artifact("a.csv", "x\n1\n".into());
        r.push_artifact("sub/b.csv", "y\n".into());
        assert!(r.write_to(&dir).is_err());
        assert!(!dir.exists());
        r.artifacts.pop();
        r.write_to(&dir).unwrap();
        assert!(dir.join("manifest.json").exists());
        fs::remove_dir_all(&dir).unwrap();
    }
}
