//! Run directories: CSV series, gnuplot scripts, snapshots and a manifest
//! written last, so a directory with a manifest is complete.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_NAME: &str = "manifest.json";

/// `sha256("blob <len>\0" ++ bytes)` in hex, the same framing git uses for
/// object ids.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_hash(path: &Path) -> CliResult<String> {
    Ok(content_hash(&fs::read(path)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputEntry {
    pub name: String,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictEntry {
    pub name: String,
    pub verdict: String,
    pub measured: String,
    pub target: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub artifact: &'static str,
    pub artifact_version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub input_hashes: BTreeMap<String, String>,
    pub outputs: Vec<OutputEntry>,
    pub wall_clock_seconds: f64,
    pub verdicts: Vec<VerdictEntry>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize) -> CliResult<Self> {
        Ok(RunManifest {
            artifact: "jmgt",
            artifact_version: ARTIFACT_VERSION,
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            seed: None,
            input_hashes: BTreeMap::new(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
            verdicts: Vec::new(),
            notes: Vec::new(),
        })
    }
}

/// Shortest round-trip decimal form, so CSV output is deterministic.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else if x == 0.0 {
        // one spelling for ±0
        "0e0".into()
    } else {
        format!("{x:e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_f64)
}

pub struct RunDir {
    root: PathBuf,
    outputs: Vec<String>,
}

impl RunDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", root.display())))?;
        Ok(RunDir {
            root: root.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn record(&mut self, name: &str) {
        if !self.outputs.iter().any(|n| n == name) {
            self.outputs.push(name.to_string());
        }
    }

    pub fn csv_writer(&mut self, name: &str) -> CliResult<csv::Writer<File>> {
        self.record(name);
        Ok(csv::Writer::from_path(self.path(name))?)
    }

    pub fn write_csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut w = self.csv_writer(name)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        self.record(name);
        fs::write(self.path(name), text)?;
        Ok(())
    }

    pub fn write_with(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> CliResult<()>) -> CliResult<()> {
        self.record(name);
        let mut w = BufWriter::new(File::create(self.path(name))?);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Hash every recorded output and write the manifest atomically.
    pub fn finish(self, mut manifest: RunManifest) -> CliResult<PathBuf> {
        manifest.outputs = self
            .outputs
            .iter()
            .map(|n| {
                Ok(OutputEntry {
                    name: n.clone(),
                    hash: file_hash(&self.path(n))?,
                })
            })
            .collect::<CliResult<_>>()?;
        let target = self.path(MANIFEST_NAME);
        let tmp = self.path(".manifest.json.tmp");
        let mut body = serde_json::to_vec_pretty(&manifest)?;
        body.push(b'\n');
        fs::write(&tmp, body)?;
        fs::rename(&tmp, &target)?;
        Ok(target)
    }
}

/// Log-log gnuplot script plotting columns `2..=columns` of `data` against
/// the first.
pub fn gnuplot_script(data: &str, title: &str, columns: usize, logscale: bool) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    if logscale {
        s.push_str("set logscale xy\n");
    }
    s.push_str(&format!("set title '{title}'\n"));
    s.push_str(&format!(
        "plot for [i=2:{columns}] '{data}' using 1:i with linespoints\n"
    ));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_matches_git() {
        // the empty blob id of a sha256 git repository
        assert_eq!(
            content_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
        assert_eq!(
            content_hash(b"abc"),
            "c1cf6e465077930e88dc5136641d402f72a229ddd996f627d60e9639eaba35a6"
        );
    }

    #[test]
    fn manifest_lists_outputs_with_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut rd = RunDir::create(dir.path()).unwrap();
        rd.write_text("a.txt", "abc").unwrap();
        rd.write_csv("b.csv", &["x"], vec![vec!["1".to_string()]]).unwrap();
        let m = RunManifest::new("test", &serde_json::json!({"k": 1})).unwrap();
        let path = rd.finish(m).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&fs::read(path).unwrap()).unwrap();
        let outs = v["outputs"].as_array().unwrap();
        assert_eq!(outs.len(), 2);
        assert_eq!(outs[0]["hash"], content_hash(b"abc"));
        assert!(!dir.path().join(".manifest.json.tmp").exists());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1e-300, 123456.789, -2.5] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(-0.0), "0e0");
    }
}
