//! Header-less numeric matrix files.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Opens `path`, naming it in the error.
pub fn open_file(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

/// Reads a comma-separated numeric matrix, one matrix row per line.
///
/// Blank lines and lines starting with `#` are skipped.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let file = open_file(path)?;
    matrix_from_reader(file, &path.display().to_string())
}

pub fn matrix_from_reader<R: Read>(reader: R, source: &str) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(source, line, format!("bad number `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    source,
                    line,
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(source, 0, "matrix file is empty"));
    }
    let ncols = rows[0].len();
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.into_iter().flatten(),
    ))
}

pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, mut out: W) -> Result<()> {
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
