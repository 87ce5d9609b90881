//! Dataset directories: `manifest.json` plus one headerless CSV per
//! observation (`p` rows of `q` values).

use std::fs;
use std::path::{Path, PathBuf};

use matfdp_core::{Dataset, Matrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::{ensure_dir, float, write_csv, write_json};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub m: usize,
    /// Paths relative to the manifest's directory.
    pub treatment: Vec<String>,
    pub control: Vec<String>,
}

fn read_matrix(path: &Path, p: usize, q: usize) -> Result<Matrix, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::data(path, e))?;
    let mut data = Vec::with_capacity(p * q);
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::data(path, e))?;
        rows += 1;
        if rows > p {
            return Err(CliError::data(path, format!("more than {p} rows")));
        }
        if rec.len() != q {
            return Err(CliError::data(
                path,
                format!("row {rows} has {} values, expected {q}", rec.len()),
            ));
        }
        for (col, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::data(path, format!("row {rows}, column {}: not a number: {field:?}", col + 1))
            })?;
            if !v.is_finite() {
                return Err(CliError::data(path, format!("row {rows}, column {}: non-finite value", col + 1)));
            }
            data.push(v);
        }
    }
    if rows != p {
        return Err(CliError::data(path, format!("{rows} rows, expected {p}")));
    }
    Ok(Matrix::new(p, q, data).expect("size checked"))
}

/// Loads a dataset directory. Files are parsed in parallel; on failure the
/// error names the first offending file in manifest order.
pub fn load(dir: &Path) -> Result<Dataset, CliError> {
    let manifest_path = dir.join(MANIFEST);
    let text = fs::read_to_string(&manifest_path).map_err(|e| CliError::data(&manifest_path, e))?;
    let man: Manifest = serde_json::from_str(&text).map_err(|e| CliError::data(&manifest_path, e))?;
    if man.treatment.len() != man.n || man.control.len() != man.m {
        return Err(CliError::data(
            &manifest_path,
            format!(
                "n = {}, m = {} but {} treatment and {} control files are listed",
                man.n,
                man.m,
                man.treatment.len(),
                man.control.len()
            ),
        ));
    }
    if man.p == 0 || man.q == 0 {
        return Err(CliError::data(&manifest_path, "p and q must be positive"));
    }
    let files: Vec<PathBuf> = man.treatment.iter().chain(&man.control).map(|f| dir.join(f)).collect();
    let parsed: Vec<Result<Matrix, CliError>> = files
        .par_iter()
        .map(|f| read_matrix(f, man.p, man.q))
        .collect();
    let mut mats = Vec::with_capacity(parsed.len());
    for r in parsed {
        mats.push(r?);
    }
    let control = mats.split_off(man.n);
    Dataset::new(mats, control).map_err(|e| CliError::data(&manifest_path, e))
}

fn obs_name(group: &str, k: usize) -> String {
    format!("{group}_{k:04}.csv")
}

pub fn save(dir: &Path, ds: &Dataset) -> Result<(), CliError> {
    ensure_dir(dir)?;
    let (p, q) = ds.dims();
    let man = Manifest {
        p,
        q,
        n: ds.n(),
        m: ds.m(),
        treatment: (0..ds.n()).map(|k| obs_name("treatment", k)).collect(),
        control: (0..ds.m()).map(|k| obs_name("control", k)).collect(),
    };
    let groups = [(&man.treatment, ds.treatment()), (&man.control, ds.control())];
    for (names, obs) in groups {
        for (name, mat) in names.iter().zip(obs) {
            let rows = (0..p).map(|i| mat.row(i).iter().map(|&v| float(v)).collect::<Vec<_>>());
            write_csv(&dir.join(name), None, rows)?;
        }
    }
    write_json(&dir.join(MANIFEST), &man)
}
