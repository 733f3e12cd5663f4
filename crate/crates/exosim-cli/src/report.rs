//! Plain `key = value` run reports.
//!
//! Reports are the machine-readable summary of a run: one line per
//! quantity, numbers through the same 9-significant-digit formatter as
//! the CSVs, artifact paths listed explicitly so a run directory is
//! self-describing. The report body is also echoed to stdout.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use crate::csvio::write_file;
use crate::error::CliError;
use crate::fmt::fmt_sig;

pub struct Report {
    lines: Vec<String>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self { lines: vec![format!("command = {command}")] }
    }

    pub fn kv(&mut self, key: &str, value: impl Display) {
        self.lines.push(format!("{key} = {value}"));
    }

    pub fn num(&mut self, key: &str, value: f64) {
        self.kv(key, fmt_sig(value));
    }

    pub fn artifact(&mut self, path: &Path) {
        self.lines.push(format!("artifact = {}", path.display()));
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }

    /// Writes the report into `out_dir` and echoes it to stdout.
    pub fn finish(self, out_dir: &Path, file_name: &str) -> Result<(), CliError> {
        let path = out_dir.join(file_name);
        let body = self.render();
        write_file(&path, &body)?;
        print!("{body}");
        println!("report = {}", path.display());
        Ok(())
    }
}

/// Creates the run directory, failing as an input error since the path
/// came from the config or the command line.
pub fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::input(format!("cannot create output dir {}: {e}", dir.display())))
}

/// Resolves the output directory: the `--out` flag wins over the config.
pub fn resolve_out_dir(flag: Option<PathBuf>, config_dir: &Path) -> PathBuf {
    flag.unwrap_or_else(|| config_dir.to_path_buf())
}
