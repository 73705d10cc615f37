//! CSV tables and the per-run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ResolvedConfig;
use crate::error::CliError;

/// Shortest round-trip decimal form, so reruns produce identical bytes.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        ryu::Buffer::new().format_finite(v).to_string()
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub struct Table {
    writer: csv::Writer<BufWriter<File>>,
    columns: usize,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, CliError> {
        Self::create_owned(dir, name, header.iter().map(|s| s.to_string()).collect())
    }

    pub fn create_owned(dir: &Path, name: &str, header: Vec<String>) -> Result<Self, CliError> {
        let file = File::create(dir.join(name))?;
        let mut writer = csv::Writer::from_writer(BufWriter::new(file));
        writer.write_record(&header)?;
        Ok(Self {
            writer,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        debug_assert_eq!(fields.len(), self.columns);
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush()?;
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct Artifact<'a> {
    name: &'a str,
    version: &'a str,
    subcommand: &'a str,
}

#[derive(Debug, Serialize)]
struct Manifest<'a, R: Serialize> {
    artifact: Artifact<'a>,
    tables: &'a [&'a str],
    config: &'a ResolvedConfig,
    results: &'a R,
}

/// Writes `manifest.toml`: artifact version, the resolved config and the run's results.
pub fn write_manifest<R: Serialize>(
    dir: &Path,
    subcommand: &str,
    config: &ResolvedConfig,
    tables: &[&str],
    results: &R,
) -> Result<PathBuf, CliError> {
    let manifest = Manifest {
        artifact: Artifact {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
        },
        tables,
        config,
        results,
    };
    let path = dir.join("manifest.toml");
    let mut f = File::create(&path)?;
    f.write_all(toml::to_string(&manifest)?.as_bytes())?;
    Ok(path)
}
