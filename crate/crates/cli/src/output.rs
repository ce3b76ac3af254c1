//! Files written under `--out`.
//!
//! Every file goes through [`OutputDir`], which writes to a temporary name
//! and renames it into place, and remembers what it wrote so the manifest
//! can list it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Nine significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.8e}")
}

pub struct OutputDir {
    root: PathBuf,
    created: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(root.display().to_string(), e))?;
        Ok(Self {
            root: root.to_path_buf(),
            created: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn files(&self) -> &[String] {
        &self.created
    }

    /// Scratch location for `name`; [`OutputDir::adopt`] moves it into place.
    pub fn partial_path(&self, name: &str) -> PathBuf {
        self.path(&format!(".{name}.partial"))
    }

    /// Renames the partial file for `name` to its final path and records it.
    pub fn adopt(&mut self, name: &str) -> CliResult<()> {
        let dest = self.path(name);
        fs::rename(self.partial_path(name), &dest).map_err(|e| CliError::Io(dest.display().to_string(), e))?;
        if !self.created.iter().any(|f| f == name) {
            self.created.push(name.to_string());
        }
        Ok(())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let tmp = self.partial_path(name);
        fs::write(&tmp, bytes).map_err(|e| CliError::Io(tmp.display().to_string(), e))?;
        self.adopt(name)
    }

    /// Writes a CSV with the given header and pre-formatted rows.
    pub fn write_csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Output(format!("{name}: {e}"));
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(format!("{name}: {e}")))?;
        self.write(name, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(format!("{name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

/// Description of a finished run. Its `wall_clock_s` field varies between
/// runs, so the manifest is the one output that is not byte-reproducible.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub wall_clock_s: f64,
    pub outputs: Vec<String>,
    /// Resolved configuration in canonical config-file syntax.
    pub config: String,
}

pub const MANIFEST_NAME: &str = "manifest.toml";

impl RunManifest {
    /// Writes the manifest last; it lists itself along with every other
    /// file.
    pub fn write(mut self, out: &mut OutputDir) -> CliResult<()> {
        self.outputs = out.files().to_vec();
        self.outputs.push(MANIFEST_NAME.to_string());
        let text = toml::to_string(&self).map_err(|e| CliError::Output(format!("manifest: {e}")))?;
        out.write(MANIFEST_NAME, text.as_bytes())
    }
}

/// Reads back a CSV written by [`OutputDir::write_csv`].
pub fn read_csv(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    let header = r
        .headers()
        .map_err(|e| CliError::Output(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<Vec<Vec<String>>, _>>()
        .map_err(|e| CliError::Output(e.to_string()))?;
    Ok((header, rows))
}
