use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))
}

/// Writes rows (header first, if any) as RFC-4180 CSV.
pub fn write_csv<I, R>(path: &Path, header: Option<&[&str]>, rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let err = |e: csv::Error| CliError::output(path, e);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(err)?;
    if let Some(h) = header {
        w.write_record(h).map_err(err)?;
    }
    for row in rows {
        w.write_record(row).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::output(path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::output(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::output(path, e))
}
