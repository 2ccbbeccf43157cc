//! Versioned JSON run reports and atomic file output.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curve::Model;
use crate::verify::{RunDetail, VerdictReport};

pub const SCHEMA_VERSION: u32 = 1;

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Echo of the resolved run configuration, embedded in every report so a run
/// can be reproduced bit-exactly.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model: Option<Model>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub genus: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub np: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ell: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub subspace: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub primes: Vec<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub retries: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportJson {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub curve_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nrows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ncols: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nnz: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kernel_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub runs: Vec<RunDetail>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
    pub elapsed_ms: u128,
}

impl ReportJson {
    pub fn new(config: ConfigEcho) -> ReportJson {
        ReportJson {
            schema_version: SCHEMA_VERSION,
            tool_version: tool_version().to_string(),
            config,
            curve_digest: None,
            nrows: None,
            ncols: None,
            nnz: None,
            rank: None,
            kernel_dim: None,
            verdict: None,
            runs: Vec::new(),
            warnings: Vec::new(),
            elapsed_ms: 0,
        }
    }

    pub fn from_verdict(config: ConfigEcho, v: &VerdictReport) -> ReportJson {
        let mut r = ReportJson::new(config);
        r.nrows = Some(v.nrows);
        r.ncols = Some(v.ncols);
        r.nnz = Some(v.nnz);
        r.rank = v.runs.iter().map(|run| run.rank).max();
        r.kernel_dim = Some(v.kernel_dim);
        r.verdict = Some(if v.holds {
            "holds".to_string()
        } else {
            format!("kernel_dim = {}", v.kernel_dim)
        });
        r.runs = v.runs.clone();
        r.warnings = v.warnings.clone();
        r.elapsed_ms = v.elapsed_ms;
        r
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Write via a temporary file in the same directory plus rename, so readers
/// never observe a half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp_name = format!(".{}.tmp.{}", file_name.to_string_lossy(), std::process::id());
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => tmp_name.clone().into(),
    };
    fs::write(&tmp, contents)?;
    match fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trips() {
        let mut config = ConfigEcho::default();
        config.subcommand = "verify".into();
        config.genus = Some(6);
        config.primes = vec![131];
        let mut r = ReportJson::new(config);
        r.rank = Some(30);
        r.kernel_dim = Some(0);
        r.verdict = Some("holds".into());
        let json = r.to_json();
        let back: ReportJson = serde_json::from_str(&json).unwrap();
        assert_eq!(back.schema_version, SCHEMA_VERSION);
        assert_eq!(back.rank, Some(30));
        assert_eq!(back.config.genus, Some(6));
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"second");
        // no stray temp files left behind
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(leftovers.len(), 1);
    }
}
