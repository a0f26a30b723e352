use std::fs::File;
use std::path::Path;

use csv::{ReaderBuilder, Terminator, Trim, WriterBuilder};
use nalgebra::{DMatrix, DVector};

use super::{DataError, Dataset};

/// A fully numeric CSV table: header names plus an N×C matrix of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub cells: DMatrix<f64>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

fn open(path: &Path) -> Result<File, DataError> {
    File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a headed CSV whose every data cell is a decimal real.
///
/// Rows in errors are 1-based data rows (the header is row 0).
pub fn load_table(path: &Path) -> Result<Table, DataError> {
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .trim(Trim::All)
        .from_reader(open(path)?);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(DataError::NoFeatures);
    }
    let mut values = Vec::new();
    let mut nrows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| DataError::Parse {
                row: r + 1,
                column: header[c].clone(),
                value: cell.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFinite {
                    row: r + 1,
                    column: header[c].clone(),
                });
            }
            values.push(v);
        }
        nrows += 1;
    }
    if nrows == 0 {
        return Err(DataError::NoRows);
    }
    let cells = DMatrix::from_row_slice(nrows, header.len(), &values);
    Ok(Table { header, cells })
}

/// Loads a dataset; `target` names the target column (default: the last one).
/// The remaining columns, in header order, become the features.
pub fn load_csv(path: &Path, target: Option<&str>) -> Result<Dataset, DataError> {
    let table = load_table(path)?;
    let ncols = table.header.len();
    let t = match target {
        Some(name) => table
            .column_index(name)
            .ok_or_else(|| DataError::MissingTarget(name.to_owned()))?,
        None => ncols - 1,
    };
    if ncols < 2 {
        return Err(DataError::NoFeatures);
    }
    let keep: Vec<usize> = (0..ncols).filter(|&c| c != t).collect();
    let x = table.cells.select_columns(&keep);
    let y = DVector::from_iterator(table.cells.nrows(), table.cells.column(t).iter().copied());
    let names = keep.iter().map(|&c| table.header[c].clone()).collect();
    Dataset::new(x, y, names, table.header[t].clone())
}

/// Shortest representation that parses back to the identical f64.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        String::new()
    }
}

/// Writes equal-length columns under a header row, `\n`-terminated.
/// Non-finite values are written as empty cells.
pub fn save_csv<S: AsRef<str>>(
    path: &Path,
    names: &[S],
    columns: &[Vec<f64>],
) -> Result<(), DataError> {
    if names.is_empty() || columns.is_empty() {
        return Err(DataError::Shape("no columns to write".into()));
    }
    if names.len() != columns.len() {
        return Err(DataError::Shape(format!(
            "{} names for {} columns",
            names.len(),
            columns.len()
        )));
    }
    let len = columns[0].len();
    if columns.iter().any(|c| c.len() != len) {
        return Err(DataError::Shape("ragged columns".into()));
    }
    let file = File::create(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(names.iter().map(|s| s.as_ref()))?;
    for r in 0..len {
        w.write_record(columns.iter().map(|c| format_number(c[r])))?;
    }
    w.flush().map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

/// Writes features followed by the target column.
pub fn save_dataset(path: &Path, data: &Dataset) -> Result<(), DataError> {
    let mut names: Vec<&str> = data.feature_names().iter().map(String::as_str).collect();
    names.push(data.target_name());
    let mut columns: Vec<Vec<f64>> = data
        .x()
        .column_iter()
        .map(|c| c.iter().copied().collect())
        .collect();
    columns.push(data.y().iter().copied().collect());
    save_csv(path, &names, &columns)
}
