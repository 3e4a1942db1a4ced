//! CSV ingestion and output plumbing.
//!
//! Input files carry one numeric column, or two columns (date, value); a
//! non-numeric first row is treated as a header and skipped. Output goes to
//! stdout or `--out`, with floats printed in Rust's shortest round-trip
//! form so identical runs diff byte-identically.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

/// A parsed input series: values, plus timestamps when the file had two
/// columns.
pub struct InputSeries {
    pub values: Vec<f64>,
    pub timestamps: Option<Vec<String>>,
}

pub fn read_series(path: &Path) -> Result<InputSeries> {
    let mut raw = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut raw))
        .with_context(|| format!("reading {}", path.display()))?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(raw.as_bytes());

    let mut values = Vec::new();
    let mut timestamps: Vec<String> = Vec::new();
    let mut two_column = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("parsing {} row {}", path.display(), i + 1))?;
        let fields: Vec<&str> = record.iter().filter(|f| !f.is_empty()).collect();
        if fields.is_empty() {
            continue;
        }
        let cols = fields.len();
        if cols > 2 {
            bail!(
                "{} row {}: expected 1 value column or (date, value), found {} fields",
                path.display(),
                i + 1,
                cols
            );
        }
        let value_field = fields[cols - 1];
        match value_field.parse::<f64>() {
            Ok(v) => {
                match two_column {
                    None => two_column = Some(cols == 2),
                    Some(t) if t != (cols == 2) => {
                        bail!("{} row {}: inconsistent column count", path.display(), i + 1)
                    }
                    _ => {}
                }
                if cols == 2 {
                    timestamps.push(fields[0].to_string());
                }
                values.push(v);
            }
            Err(_) if i == 0 => continue, // header row
            Err(e) => bail!(
                "{} row {}: '{}' is not numeric: {}",
                path.display(),
                i + 1,
                value_field,
                e
            ),
        }
    }
    if values.is_empty() {
        bail!("{}: no numeric values found", path.display());
    }
    Ok(InputSeries {
        values,
        timestamps: if two_column == Some(true) {
            Some(timestamps)
        } else {
            None
        },
    })
}

/// Write `content` to `--out` when given, otherwise stdout.
pub fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            let mut f =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            f.write_all(content.as_bytes())
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
        }
    }
    Ok(())
}
