//! Delimited-text datasets, one row per observation with a header row.
//!
//! Morris files have columns `y,v`. Regression files have a `y` column and
//! one column per covariate.

use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_table(path: &Path) -> Result<Table, String> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| format!("{}: {e}", path.display()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| format!("{}: {e}", path.display()))?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| format!("{}:{line}: `{f}` is not a number", path.display()))
            })
            .collect::<Result<Vec<f64>, String>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

fn column(table: &Table, name: &str) -> Option<usize> {
    table.header.iter().position(|h| h.eq_ignore_ascii_case(name))
}

/// `(y, V)` from a file with `y` and `v` columns.
pub fn read_morris(path: &Path) -> Result<(Vec<f64>, Vec<f64>), String> {
    let t = read_table(path)?;
    let (Some(iy), Some(iv)) = (column(&t, "y"), column(&t, "v")) else {
        return Err(format!("{}: columns `y` and `v` required", path.display()));
    };
    Ok(t.rows.iter().map(|r| (r[iy], r[iv])).unzip())
}

/// `(design rows, y)` from a file with a `y` column; every other column is
/// a covariate, in file order.
pub fn read_regression(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>), String> {
    let t = read_table(path)?;
    let Some(iy) = column(&t, "y") else {
        return Err(format!("{}: column `y` required", path.display()));
    };
    let x = t
        .rows
        .iter()
        .map(|r| r.iter().enumerate().filter(|&(j, _)| j != iy).map(|(_, v)| *v).collect())
        .collect();
    let y = t.rows.iter().map(|r| r[iy]).collect();
    Ok((x, y))
}
