use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::dynamics::Series;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsvOptions {
    /// Zero-based column holding the values.
    pub column: usize,
    /// `None` detects a header by whether the first row parses as numbers.
    pub has_header: Option<bool>,
    /// Sample spacing assigned to the series.
    pub dt: f64,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            column: 0,
            has_header: None,
            dt: 1.0,
        }
    }
}

fn read_records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    rdr.records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Corrupt(format!("{}: {e}", path.display())))
}

fn parse_column(records: &[csv::StringRecord], column: usize, has_header: Option<bool>, path: &Path) -> Result<Vec<f64>> {
    let first_is_numeric = records
        .first()
        .and_then(|r| r.get(column))
        .is_some_and(|f| f.parse::<f64>().is_ok());
    let skip = match has_header {
        Some(h) => h,
        None => !first_is_numeric,
    } as usize;
    records
        .iter()
        .enumerate()
        .skip(skip)
        .filter(|(_, r)| !(r.len() == 1 && r.get(0) == Some("")))
        .map(|(line, r)| {
            let field = r.get(column).ok_or_else(|| {
                Error::Corrupt(format!("{}: row {} has no column {column}", path.display(), line + 1))
            })?;
            field.parse::<f64>().map_err(|_| {
                Error::Corrupt(format!("{}: row {}: '{field}' is not a number", path.display(), line + 1))
            })
        })
        .collect()
}

/// One numeric column of a CSV file as a series named after the file stem.
pub fn read_series_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Series> {
    let path = path.as_ref();
    let records = read_records(path)?;
    let values = parse_column(&records, opts.column, opts.has_header, path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into());
    Series::new(name, values, opts.dt)
}

/// The `value,differential` layout written by [`write_two_column_csv`].
pub fn read_two_column_csv(path: impl AsRef<Path>, dt: f64) -> Result<(Series, Series)> {
    let path = path.as_ref();
    let records = read_records(path)?;
    let values = parse_column(&records, 0, None, path)?;
    let diffs = parse_column(&records, 1, None, path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into());
    let v = Series::new(name.clone(), values, dt)?;
    let d = Series::derivative(format!("{name}_diff"), diffs, dt, &v)?;
    Ok((v, d))
}

/// Writes `value,differential` rows with a header. Numbers use the shortest
/// representation that parses back to the same `f64`.
pub fn write_two_column_csv(path: impl AsRef<Path>, values: &Series, diffs: &Series) -> Result<()> {
    let path = path.as_ref();
    if values.len() != diffs.len() {
        return Err(Error::shape("write_two_column_csv", values.len(), diffs.len()));
    }
    let mut out = String::with_capacity(values.len() * 40);
    out.push_str("value,differential\n");
    for (v, d) in values.values.iter().zip(&diffs.values) {
        out.push_str(&format!("{v},{d}\n"));
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let v = Series::new("s", vec![0.1 + 0.2, -1e-300, 12345.678901234567], 0.1).unwrap();
        let d = Series::new("d", vec![1.0 / 3.0, 2.0, f64::MIN_POSITIVE], 0.1).unwrap();
        write_two_column_csv(&p, &v, &d).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("value,differential\n"));
        let (v2, d2) = read_two_column_csv(&p, 0.1).unwrap();
        assert_eq!(v2.values, v.values);
        assert_eq!(d2.values, d.values);
    }

    #[test]
    fn header_detection_and_column_choice() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("prices.csv");
        std::fs::write(&p, "date,close\n2007-01-02,18.5\n2007-01-03,18.75\n").unwrap();
        let s = read_series_csv(
            &p,
            &CsvOptions {
                column: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(s.values, vec![18.5, 18.75]);
        assert_eq!(s.name, "prices");

        let q = dir.path().join("bare.csv");
        std::fs::write(&q, "1.5\n2.5\n").unwrap();
        assert_eq!(read_series_csv(&q, &CsvOptions::default()).unwrap().values, vec![1.5, 2.5]);
    }

    #[test]
    fn bad_cell_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "v\n1\nabc\n").unwrap();
        assert!(matches!(read_series_csv(&p, &CsvOptions::default()), Err(Error::Corrupt(_))));
        assert!(matches!(
            read_series_csv(dir.path().join("missing.csv"), &CsvOptions::default()),
            Err(Error::Io { .. })
        ));
    }
}
