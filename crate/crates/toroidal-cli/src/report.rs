//! Versioned JSON run reports and the content-hashed profile cache.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use toroidal::elliptic::NeckSize;
use toroidal::embedcert::EmbeddingCertificate;
use toroidal::profile::solve_profile;
use toroidal::reduction::IterRecord;
use toroidal::ProfileTable;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const CACHE_ENV: &str = "TOROIDAL_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileProvenance {
    pub a: f64,
    pub n_t: usize,
    pub rtol: f64,
    pub sha256: String,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub n: usize,
    pub gamma: f64,
    #[serde(rename = "A")]
    pub amp: f64,
    pub a_n: f64,
    pub b_n: f64,
    pub lambda0_res: f64,
    pub lambda1: f64,
    pub bracket: (f64, f64),
    pub grid: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: Option<RunConfig>,
    pub profiles: Vec<ProfileProvenance>,
    pub diagnostics: BTreeMap<String, Value>,
    pub trace: Vec<IterRecord>,
    pub certificate: Option<EmbeddingCertificate>,
    #[serde(rename = "match")]
    pub matching: Option<MatchSummary>,
    pub runtime_s: f64,
    pub created_unix: u64,
}

impl Report {
    pub fn new(command: &str, config: Option<RunConfig>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            profiles: Vec::new(),
            diagnostics: BTreeMap::new(),
            trace: Vec::new(),
            certificate: None,
            matching: None,
            runtime_s: 0.0,
            created_unix: 0,
        }
    }

    pub fn diag(&mut self, key: &str, v: impl Serialize) {
        self.diagnostics
            .insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    /// Stamps wall-clock fields; everything else is a function of the input.
    pub fn stamp(&mut self, started: std::time::Instant) {
        self.runtime_s = started.elapsed().as_secs_f64();
        self.created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
    }

    /// Copy with the wall-clock fields cleared.
    pub fn without_timestamps(&self) -> Self {
        Self {
            runtime_s: 0.0,
            created_unix: 0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).with_context(|| format!("writing {}", path.display()))
    }
}

/// Checks the fields every report must carry.
pub fn validate_schema(v: &Value) -> Result<()> {
    let obj = v.as_object().context("report is not an object")?;
    let version = obj.get("schema_version").and_then(Value::as_u64).context("schema_version")?;
    anyhow::ensure!(version == SCHEMA_VERSION as u64, "schema_version {version}");
    for key in ["command", "config", "profiles", "diagnostics", "trace", "certificate", "match", "runtime_s"] {
        anyhow::ensure!(obj.contains_key(key), "missing `{key}`");
    }
    anyhow::ensure!(obj["diagnostics"].is_object() && obj["profiles"].is_array() && obj["trace"].is_array());
    Ok(())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Profile tables keyed by `(a, N_t, rtol)`, stored as JSON under the
/// cache directory when one is configured.
#[derive(Debug, Clone, Default)]
pub struct ProfileCache {
    pub dir: Option<PathBuf>,
}

impl ProfileCache {
    pub fn from_env() -> Self {
        Self {
            dir: std::env::var_os(CACHE_ENV).map(PathBuf::from),
        }
    }

    fn key(a: f64, n_t: usize, rtol: f64) -> String {
        format!("profile-{:016x}-{n_t}-{:016x}.json", a.to_bits(), rtol.to_bits())
    }

    pub fn load(&self, a: f64, n_t: usize) -> Result<(ProfileTable, ProfileProvenance)> {
        let rtol = toroidal::ode::Tolerances::<f64>::default().rtol;
        let path = self.dir.as_ref().map(|d| d.join(Self::key(a, n_t, rtol)));
        if let Some(p) = path.as_ref().filter(|p| p.exists()) {
            let bytes = std::fs::read(p)?;
            let tbl: ProfileTable = serde_json::from_slice(&bytes)?;
            return Ok((tbl, Self::provenance(a, n_t, rtol, &bytes, true)));
        }
        let tbl = solve_profile(NeckSize::new(a)?, n_t)?;
        let bytes = serde_json::to_vec(&tbl)?;
        if let Some(p) = path {
            if let Some(d) = p.parent() {
                std::fs::create_dir_all(d)?;
            }
            std::fs::write(&p, &bytes)?;
        }
        Ok((tbl, Self::provenance(a, n_t, rtol, &bytes, false)))
    }

    fn provenance(a: f64, n_t: usize, rtol: f64, bytes: &[u8], cached: bool) -> ProfileProvenance {
        ProfileProvenance {
            a,
            n_t,
            rtol,
            sha256: hex(&Sha256::digest(bytes)),
            cached,
        }
    }
}
