use std::fs;
use std::io::Write;
use std::path::Path;

use rsgd::random::{random_spd, seeded_rng};
use rsgd::{Sample, SpdMatrix};

use crate::args::ThetaSpec;
use crate::error::{CliError, CliResult};

const SYMMETRY_TOL: f64 = 1e-10;

/// Resolves a matrix spec to an SPD matrix of dimension `m`.
pub fn resolve_theta(spec: &ThetaSpec, m: usize) -> CliResult<SpdMatrix> {
    match spec {
        ThetaSpec::Identity => Ok(SpdMatrix::identity(m)),
        ThetaSpec::Random(seed) => Ok(random_spd(m, &mut seeded_rng(*seed, 0))),
        ThetaSpec::File(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
            let rows: Vec<Vec<f64>> = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("{}: expected a JSON array of rows: {e}", path.display())))?;
            if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                return Err(CliError::usage(format!("{}: expected a {m}x{m} matrix", path.display())));
            }
            let scale = rows.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            let asymmetric = (0..m).any(|i| (0..i).any(|j| (rows[i][j] - rows[j][i]).abs() > SYMMETRY_TOL * scale));
            if asymmetric {
                return Err(CliError::usage(format!("{}: matrix is not symmetric", path.display())));
            }
            SpdMatrix::from_rows(&rows).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
        }
    }
}

/// Reads observations, one per row, and checks that every row has `m` columns.
pub fn read_samples(path: &Path, m: usize) -> CliResult<Vec<Sample>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        if record.len() != m {
            return Err(CliError::usage(format!(
                "{} line {line}: {} columns, expected {m}",
                path.display(),
                record.len()
            )));
        }
        let x = record
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::usage(format!("{} line {line}: {e}", path.display())))?;
        out.push(Sample::new(x).map_err(|e| CliError::usage(format!("{} line {line}: {e}", path.display())))?);
    }
    if out.is_empty() {
        return Err(CliError::usage(format!("{} has no observations", path.display())));
    }
    Ok(out)
}

/// CSV text with LF line endings.
pub fn csv_string<I, R>(header: Option<&[&str]>, rows: I) -> CliResult<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let wrap = |e: csv::Error| CliError::usage(format!("CSV encoding failed: {e}"));
    if let Some(h) = header {
        w.write_record(h).map_err(wrap)?;
    }
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::usage(format!("CSV encoding failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::usage(e.to_string()))
}

pub fn json_string<T: serde::Serialize>(value: &T) -> CliResult<String> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| CliError::usage(format!("JSON encoding failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::usage(format!("cannot write to stdout: {e}"))),
    }
}
