//! CSV ingestion for the two supported layouts.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use lpcop_core::ContingencyTable;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// Two-column CSV with a header, one row per observation.
    Pairs,
    /// Contingency table: header of column labels, then one labelled row per category.
    Table,
}

impl InputFormat {
    pub fn name(self) -> &'static str {
        match self {
            InputFormat::Pairs => "pairs",
            InputFormat::Table => "table",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Dataset {
    Pairs { names: [String; 2], pairs: Vec<(f64, f64)> },
    Table(ContingencyTable),
}

impl Dataset {
    pub fn variable_names(&self) -> [String; 2] {
        match self {
            Dataset::Pairs { names, .. } => names.clone(),
            Dataset::Table(_) => ["X".into(), "Y".into()],
        }
    }

    pub fn table(&self) -> Result<ContingencyTable> {
        match self {
            Dataset::Table(t) => Ok(t.clone()),
            Dataset::Pairs { pairs, .. } => Ok(ContingencyTable::from_pairs(pairs)?),
        }
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        match self {
            Dataset::Table(t) => t.to_pairs(),
            Dataset::Pairs { pairs, .. } => pairs.clone(),
        }
    }
}

/// Raw bytes of an input file with their SHA-256.
pub struct Source {
    pub bytes: Vec<u8>,
    pub sha256: String,
}

pub fn read_source(path: &Path) -> Result<Source> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    Ok(Source { bytes, sha256 })
}

fn reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn number(field: &str, line: u64, col: usize) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => bail!("line {line}, column {col}: expected a finite number, found {field:?}"),
    }
}

/// Header names plus numeric columns of a CSV with any number of columns.
pub fn parse_columns(bytes: &[u8]) -> Result<Vec<(String, Vec<f64>)>> {
    let mut rdr = reader(bytes);
    let header = rdr.headers().context("line 1: cannot read header")?.clone();
    if header.is_empty() {
        bail!("line 1: empty header");
    }
    let mut cols: Vec<(String, Vec<f64>)> = header.iter().map(|h| (h.to_string(), Vec::new())).collect();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != cols.len() {
            bail!("line {line}: expected {} fields, found {}", cols.len(), rec.len());
        }
        for (i, field) in rec.iter().enumerate() {
            cols[i].1.push(number(field, line, i + 1)?);
        }
    }
    if cols[0].1.is_empty() {
        bail!("no data rows");
    }
    Ok(cols)
}

pub fn parse_pairs(bytes: &[u8]) -> Result<Dataset> {
    let cols = parse_columns(bytes)?;
    if cols.len() != 2 {
        bail!("line 1: pairs input needs exactly 2 columns, found {}", cols.len());
    }
    let pairs = cols[0].1.iter().copied().zip(cols[1].1.iter().copied()).collect();
    Ok(Dataset::Pairs {
        names: [cols[0].0.clone(), cols[1].0.clone()],
        pairs,
    })
}

pub fn parse_table(bytes: &[u8]) -> Result<Dataset> {
    let mut rdr = reader(bytes);
    let header = rdr.headers().context("line 1: cannot read header")?.clone();
    if header.len() < 2 {
        bail!("line 1: table header needs a corner cell and at least one column label");
    }
    let col_labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut row_labels = Vec::new();
    let mut counts = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != header.len() {
            bail!("line {line}: expected {} fields, found {}", header.len(), rec.len());
        }
        row_labels.push(rec[0].to_string());
        let row = rec
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, f)| {
                f.parse::<u64>()
                    .map_err(|_| anyhow::anyhow!("line {line}, column {}: expected a count, found {f:?}", i + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        counts.push(row);
    }
    if counts.is_empty() {
        bail!("no table rows");
    }
    Ok(Dataset::Table(ContingencyTable::with_labels(
        counts, row_labels, col_labels,
    )?))
}

pub fn parse(bytes: &[u8], format: InputFormat) -> Result<Dataset> {
    match format {
        InputFormat::Pairs => parse_pairs(bytes),
        InputFormat::Table => parse_table(bytes),
    }
}
