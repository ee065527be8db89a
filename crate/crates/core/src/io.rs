//! CSV artifacts and dataset resolution.
//!
//! Every artifact starts with two comment lines, `# config_hash <hex>` and
//! `# seed <n>` (or `# seed none`), followed by a header row and numeric
//! rows. Numbers are written in Rust's shortest round-trip form so identical
//! inputs give byte-identical files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::models::Dataset;

const FIXTURE_PREFIX: &str = "fixture:";

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub config_hash: String,
    pub seed: Option<u64>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Artifact {
    pub fn new(config_hash: impl Into<String>, seed: Option<u64>, header: Vec<String>) -> Self {
        Self { config_hash: config_hash.into(), seed, header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write_to(&self, out: impl Write) -> Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "# config_hash {}", self.config_hash)?;
        match self.seed {
            Some(s) => writeln!(out, "# seed {s}")?,
            None => writeln!(out, "# seed none")?,
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(File::create(path)?)
    }
}

fn meta_value<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix('#')
        .map(str::trim_start)
        .and_then(|l| l.strip_prefix(key))
        .map(str::trim)
        .ok_or_else(|| Error::InvalidInput(format!("artifact line `{line}` should start with `# {key}`")))
}

/// Parses an artifact written by [`Artifact::write_to`].
pub fn read_artifact(input: impl Read) -> Result<Artifact> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let config_hash = meta_value(line.trim_end(), "config_hash")?.to_string();
    if config_hash.len() != 64 || !config_hash.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(Error::InvalidInput(format!("malformed config hash `{config_hash}`")));
    }
    line.clear();
    reader.read_line(&mut line)?;
    let seed = match meta_value(line.trim_end(), "seed")? {
        "none" => None,
        s => Some(s.parse().map_err(|_| Error::InvalidInput(format!("malformed seed `{s}`")))?),
    };
    let mut csv = csv::Reader::from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in csv.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::InvalidInput(format!("non-numeric artifact field `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Artifact { config_hash, seed, header, rows })
}

pub fn read_artifact_path(path: impl AsRef<Path>) -> Result<Artifact> {
    read_artifact(File::open(path)?)
}

/// Hex SHA-256 of a byte string.
pub fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Resolves `fixture:<name>` or a CSV path. Files named after a bundled
/// fixture are checked against its known statistics.
pub fn load_dataset(source: &str) -> Result<Dataset> {
    if let Some(name) = source.strip_prefix(FIXTURE_PREFIX) {
        return fixtures::by_name(name);
    }
    let path = Path::new(source);
    let data = Dataset::from_csv_path(path)?;
    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
        if fixtures::NAMES.contains(&stem) {
            fixtures::verify(stem, &data)?;
        }
    }
    Ok(data)
}
