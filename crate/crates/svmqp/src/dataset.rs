//! Dataset CSV: `d` coordinate columns followed by a `+1`/`−1` label column.
//! A header row is optional on input and is detected by a non-numeric first
//! field.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use svmqp_core::svm::Dataset;
use svmqp_core::Matrix;

use crate::error::{csv_err, io_err, HarnessError, Result};

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_dataset(file, path)
}

/// Parses dataset CSV from any reader; `path` is only used in messages.
pub fn parse_dataset<R: Read>(reader: R, path: &Path) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let parse_err = |line: u64, msg: String| HarnessError::Parse { path: path.to_path_buf(), line, msg };

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let line = rec.position().map_or(idx as u64 + 1, |p| p.line());
        if idx == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if rec.len() < 2 {
            return Err(parse_err(line, "expected at least one coordinate and a label".into()));
        }
        let d = rec.len() - 1;
        match dim {
            None => dim = Some(d),
            Some(prev) if prev != d => {
                return Err(parse_err(line, format!("expected {prev} coordinates, found {d}")));
            }
            _ => {}
        }
        for field in rec.iter().take(d) {
            let v: f64 = field.parse().map_err(|_| parse_err(line, format!("not a number: {field:?}")))?;
            data.push(v);
        }
        let raw = &rec[d];
        let label: f64 = raw.parse().map_err(|_| parse_err(line, format!("not a label: {raw:?}")))?;
        if label != 1.0 && label != -1.0 {
            return Err(parse_err(line, format!("label must be +1 or -1, found {raw}")));
        }
        labels.push(label);
    }
    let d = dim.ok_or_else(|| parse_err(0, "no data rows".into()))?;
    Ok(Dataset::new(Matrix::from_vec(labels.len(), d, data)?, labels)?)
}

pub fn write_dataset(path: &Path, ds: &Dataset, header: bool) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    format_dataset(file, ds, header).map_err(csv_err(path))
}

/// Coordinates use Rust's shortest round-trip formatting, so a written file
/// reads back bit-identically.
pub fn format_dataset<W: Write>(writer: W, ds: &Dataset, header: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if header {
        let mut names: Vec<String> = (1..=ds.dim()).map(|k| format!("x{k}")).collect();
        names.push("label".into());
        w.write_record(&names)?;
    }
    let mut row = Vec::with_capacity(ds.dim() + 1);
    for i in 0..ds.len() {
        row.clear();
        row.extend(ds.point(i).iter().map(|v| v.to_string()));
        row.push(if ds.labels()[i] > 0.0 { "1".into() } else { "-1".into() });
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        let pts = Matrix::from_rows(&[[0.1, -2.5], [1.0 / 3.0, 7e-300]]);
        Dataset::new(pts, vec![1.0, -1.0]).unwrap()
    }

    #[test]
    fn round_trip_with_and_without_header() {
        for header in [false, true] {
            let mut buf = Vec::new();
            format_dataset(&mut buf, &sample(), header).unwrap();
            let back = parse_dataset(buf.as_slice(), Path::new("mem")).unwrap();
            assert_eq!(back, sample());
        }
    }

    #[test]
    fn accepts_plus_sign_labels() {
        let ds = parse_dataset("0.5,+1\n1.5,-1\n".as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(ds.labels(), &[1.0, -1.0]);
    }

    #[test]
    fn rejects_bad_rows() {
        let bad = ["0.5,2\n", "0.5,1\n1,2,-1\n", "0.5,x,1\n", "", "0.5\n"];
        for text in bad {
            assert!(parse_dataset(text.as_bytes(), Path::new("mem")).is_err(), "{text:?}");
        }
    }
}
