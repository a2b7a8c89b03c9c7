use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ObservationTable, OutcomeRange};

use super::config::ColumnMap;

fn column_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Data(format!("{}: no column named `{name}`", path.display())))
}

fn binary(v: &str, what: &str, row: usize) -> Result<u8> {
    match v.parse::<f64>() {
        Ok(x) if x == 0.0 => Ok(0),
        Ok(x) if x == 1.0 => Ok(1),
        _ => Err(Error::Data(format!("row {row}: {what} must be 0 or 1, got `{v}`"))),
    }
}

fn number(v: &str, what: &str, row: usize) -> Result<f64> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(Error::Data(format!("row {row}: {what} must be a finite number, got `{v}`"))),
    }
}

/// Reads an observation table from a headed CSV. Rows are numbered from 1
/// (the first data row) in error messages; empty cells are rejected.
pub fn read_table(path: &Path, columns: &ColumnMap, range: Option<OutcomeRange>) -> Result<ObservationTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let iy = column_index(&headers, &columns.y, path)?;
    let id = column_index(&headers, &columns.d, path)?;
    let iz = column_index(&headers, &columns.z, path)?;
    let ix: Vec<usize> =
        columns.covariates.iter().map(|c| column_index(&headers, c, path)).collect::<Result<_>>()?;
    let (mut y, mut d, mut z, mut x) = (vec![], vec![], vec![], vec![]);
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let cell = |i: usize, name: &str| -> Result<&str> {
            match rec.get(i).map(str::trim) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(Error::Data(format!("row {row}: missing value in column `{name}`"))),
            }
        };
        y.push(number(cell(iy, &columns.y)?, &columns.y, row)?);
        d.push(binary(cell(id, &columns.d)?, &columns.d, row)?);
        z.push(binary(cell(iz, &columns.z)?, &columns.z, row)?);
        for (&i, name) in ix.iter().zip(&columns.covariates) {
            x.push(number(cell(i, name)?, name, row)?);
        }
    }
    if y.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    ObservationTable::from_flat(y, d, z, x, ix.len(), range)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => Error::Data(format!("{}: {e}", path.display())),
    }
}

/// Renders a table as CSV with columns `y,d,z` followed by `covariates`.
pub fn table_csv(table: &ObservationTable, covariates: &[String]) -> Result<String> {
    if covariates.len() != table.k_x() {
        return Err(Error::Invalid(format!("{} covariate names for {} columns", covariates.len(), table.k_x())));
    }
    let mut out = format!("y,d,z,{}\n", covariates.join(","));
    for i in 0..table.n() {
        out.push_str(&format!("{},{},{}", table.y()[i], table.d()[i], table.z()[i]));
        for v in table.row(i) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols() -> ColumnMap {
        ColumnMap { y: "y".into(), d: "d".into(), z: "z".into(), covariates: vec!["x".into()] }
    }

    fn write(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn reads_columns_in_any_order() {
        let f = write("x,z,extra,y,d\n0.5,1,a,0.25,0\n1.5,0,b,0.75,1\n");
        let t = read_table(f.path(), &cols(), Some(OutcomeRange::unit())).unwrap();
        assert_eq!(t.y(), &[0.25, 0.75]);
        assert_eq!(t.d(), &[0, 1]);
        assert_eq!(t.z(), &[1, 0]);
        assert_eq!(t.x(), &[0.5, 1.5]);
    }

    #[test]
    fn data_errors_exit_with_three() {
        for text in [
            "y,d,z\n1,0,1\n",
            "y,d,z,x\n1,2,1,0\n",
            "y,d,z,x\n,0,1,0\n",
            "y,d,z,x\n1.5,0,1,0\n",
            "y,d,z,x\nabc,0,1,0\n",
            "y,d,z,x\n",
        ] {
            let f = write(text);
            let e = read_table(f.path(), &cols(), Some(OutcomeRange::unit())).unwrap_err();
            assert_eq!(e.exit_code(), 3, "{text}: {e}");
        }
    }

    #[test]
    fn written_tables_read_back() {
        let t = ObservationTable::from_flat(vec![0.1, 0.7], vec![1, 0], vec![0, 1], vec![0.25, 1e-3], 1, None).unwrap();
        let f = write(&table_csv(&t, &["x".into()]).unwrap());
        assert_eq!(read_table(f.path(), &cols(), None).unwrap(), t);
    }

    #[test]
    fn missing_file_is_io_error() {
        let e = read_table(Path::new("/nonexistent/file.csv"), &cols(), None).unwrap_err();
        assert!(matches!(e, Error::Io { .. }));
    }
}
