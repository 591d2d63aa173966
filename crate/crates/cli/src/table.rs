//! CSV input and output.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use belief::RawColumn;

use crate::error::{CliError, CliResult};

/// A CSV file held column-wise as trimmed text.
pub struct Frame {
    pub path: PathBuf,
    pub headers: Vec<String>,
    pub columns: Vec<Vec<String>>,
}

impl Frame {
    pub fn read(path: &Path) -> CliResult<Self> {
        let csv_err = |source| CliError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(file);
        let headers: Vec<String> = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_string)
            .collect();
        if headers.is_empty() {
            return Err(CliError::Data(format!("{}: no header row", path.display())));
        }
        for (i, h) in headers.iter().enumerate() {
            if headers[..i].contains(h) {
                return Err(CliError::Data(format!(
                    "{}: duplicate column `{h}`",
                    path.display()
                )));
            }
        }
        let mut columns = vec![Vec::new(); headers.len()];
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            for (col, field) in columns.iter_mut().zip(record.iter()) {
                col.push(field.to_string());
            }
        }
        if columns[0].is_empty() {
            return Err(CliError::Data(format!("{}: no data rows", path.display())));
        }
        Ok(Frame {
            path: path.to_path_buf(),
            headers,
            columns,
        })
    }

    pub fn column(&self, name: &str) -> Option<&[String]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn raw_columns(&self) -> Vec<RawColumn> {
        self.headers
            .iter()
            .zip(&self.columns)
            .map(|(h, c)| RawColumn::text(h.clone(), c.clone()))
            .collect()
    }
}

/// Writes to a file, or to stdout when no path is given.
pub fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) => Ok(Box::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

pub fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    let mut out = open_output(path)?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(path.unwrap_or(Path::new("<stdout>")), e))
}

pub fn write_csv(path: Option<&Path>, headers: &[String], rows: &[Vec<String>]) -> CliResult<()> {
    let target = path.unwrap_or(Path::new("<stdout>")).to_path_buf();
    let mut w = csv::Writer::from_writer(open_output(path)?);
    let csv_err = |source| CliError::Csv {
        path: target.clone(),
        source,
    };
    w.write_record(headers).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(&target, e))
}
