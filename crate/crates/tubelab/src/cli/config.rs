//! Flat key-value config files with `[section]` headers.
//!
//! The format is deliberately schema-free and diffable:
//!
//! ```text
//! # comment
//! [study]
//! kind = tube
//! seed = 42
//! [curve]
//! preset = bump
//! length = 10
//! ```
//!
//! Lists are whitespace-separated values on one line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::cross_section::SectionShape;
use crate::error::{Error, Result};
use crate::geometry::{presets, CurveSpec};

/// Parsed but untyped config: section -> key -> value.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
    /// Canonical text the hash is computed from.
    pub text: String,
    /// Directory of the config file, for relative paths inside it.
    pub base_dir: Option<PathBuf>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::from("global");
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') || line.len() < 3 {
                    return Err(Error::Config(format!(
                        "line {}: malformed section header {line:?}",
                        lineno + 1
                    )));
                }
                current = line[1..line.len() - 1].trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, found {line:?}",
                    lineno + 1
                )));
            };
            let key = k.trim().to_string();
            let val = v.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            sections
                .entry(current.clone())
                .or_default()
                .insert(key, val);
        }
        Ok(RawConfig {
            sections,
            text: text.to_string(),
            base_dir: None,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(|p| p.to_path_buf());
        Ok(cfg)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(|s| s.as_str())
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.to_string());
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key)
            .ok_or_else(|| Error::Config(format!("missing key `{key}` in section [{section}]")))
    }

    pub fn f64_opt(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("[{section}] {key}: bad number {v:?}"))),
        }
    }

    pub fn f64_req(&self, section: &str, key: &str) -> Result<f64> {
        self.f64_opt(section, key)?
            .ok_or_else(|| Error::Config(format!("missing number `{key}` in section [{section}]")))
    }

    pub fn usize_opt(&self, section: &str, key: &str) -> Result<Option<usize>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("[{section}] {key}: bad integer {v:?}"))),
        }
    }

    pub fn list_f64(&self, section: &str, key: &str) -> Result<Vec<f64>> {
        let raw = self.require(section, key)?;
        let vals: Result<Vec<f64>> = raw
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Config(format!("[{section}] {key}: bad number {t:?}")))
            })
            .collect();
        let vals = vals?;
        if vals.is_empty() {
            return Err(Error::Config(format!("[{section}] {key}: empty list")));
        }
        Ok(vals)
    }

    /// FNV-1a hash of the canonical text, for the run manifest.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }

    /// Build the curve described by the `[curve]` section.
    pub fn curve(&self) -> Result<CurveSpec> {
        let sec = "curve";
        if let Some(path) = self.get(sec, "file") {
            let p = match &self.base_dir {
                Some(d) => d.join(path),
                None => PathBuf::from(path),
            };
            return CurveSpec::from_file(&p);
        }
        let preset = self.require(sec, "preset")?;
        let length = self.f64_req(sec, "length")?;
        if !(length > 0.0) {
            return Err(Error::Config("curve length must be positive".into()));
        }
        let nodes = match self.usize_opt(sec, "nodes")? {
            Some(n) if n >= 2 => n,
            Some(n) => return Err(Error::Config(format!("curve needs >= 2 nodes, got {n}"))),
            None => {
                let h = self.f64_req(sec, "h")?;
                if !(h > 0.0) {
                    return Err(Error::Config("curve spacing must be positive".into()));
                }
                (length / h).round().max(2.0) as usize + 1
            }
        };
        match preset {
            "straight" => Ok(presets::straight(length, nodes)),
            "arc" => Ok(presets::circular_arc(
                self.f64_req(sec, "kappa")?,
                length,
                nodes,
            )),
            "helix" => Ok(presets::helix(
                self.f64_req(sec, "kappa")?,
                self.f64_req(sec, "tau")?,
                length,
                nodes,
            )),
            "bump" => Ok(presets::bump_curve(
                length,
                self.f64_req(sec, "center")?,
                self.f64_req(sec, "width")?,
                self.f64_req(sec, "amplitude")?,
                nodes,
            )),
            "twisted" => Ok(presets::twisted_straight(
                length,
                self.f64_req(sec, "center")?,
                self.f64_req(sec, "width")?,
                self.f64_req(sec, "amplitude")?,
                nodes,
            )),
            other => Err(Error::Config(format!(
                "unknown curve preset {other:?}: straight | arc | helix | bump | twisted | file"
            ))),
        }
    }

    /// Build the section shape: `[section] shape = ...`, with the bare
    /// `section = ...` key accepted anywhere as a shorthand.
    pub fn section_shape(&self) -> Result<SectionShape> {
        let spec = self
            .get("section", "shape")
            .or_else(|| {
                self.sections
                    .values()
                    .find_map(|kv| kv.get("section").map(|s| s.as_str()))
            })
            .ok_or_else(|| {
                Error::Config("missing section shape: set `shape` in [section]".into())
            })?;
        SectionShape::parse(spec, self.base_dir.as_deref())
    }

    pub fn section_h(&self) -> Result<f64> {
        let h = self.f64_req("section", "h")?;
        if !(h > 0.0) {
            return Err(Error::Config("section spacing must be positive".into()));
        }
        Ok(h)
    }

    /// Seed with CLI override taking priority.
    pub fn seed(&self, cli: Option<u64>) -> u64 {
        cli.or_else(|| self.get("study", "seed").and_then(|s| s.parse().ok()))
            .unwrap_or(0x7ab5)
    }
}
