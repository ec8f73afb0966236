//! CSV input and output for point clouds and sampled functions.
//!
//! One row per point. A first row with any non-numeric field is a header.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn parse_rows<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    let mut width = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(r) => r,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Format(format!("row {}: {e}", i + 1))),
        };
        if let Some(bad) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "row {}, column {}",
                i + 1,
                bad + 1
            )));
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Format(format!(
                    "row {} has {} columns, expected {w}",
                    i + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("no data rows".into()));
    }
    Ok(rows)
}

fn convert<T: Scalar>(rows: Vec<Vec<f64>>) -> Vec<Vec<T>> {
    rows.into_iter()
        .map(|r| r.into_iter().map(T::of).collect())
        .collect()
}

/// Points, one per row.
pub fn read_points<T: Scalar, R: Read>(reader: R) -> Result<Vec<Vec<T>>> {
    Ok(convert(parse_rows(reader)?))
}

/// Points with the function value in the last column.
pub fn read_samples<T: Scalar, R: Read>(reader: R) -> Result<(Vec<Vec<T>>, Vec<T>)> {
    let rows = parse_rows(reader)?;
    if rows[0].len() < 2 {
        return Err(Error::Format(
            "samples need at least one coordinate column and a value column".into(),
        ));
    }
    let mut points = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for mut r in rows {
        values.push(T::of(r.pop().unwrap_or_default()));
        points.push(r.into_iter().map(T::of).collect());
    }
    Ok((points, values))
}

pub fn read_points_file<T: Scalar>(path: &Path) -> Result<Vec<Vec<T>>> {
    read_points(File::open(path)?)
}

pub fn read_samples_file<T: Scalar>(path: &Path) -> Result<(Vec<Vec<T>>, Vec<T>)> {
    read_samples(File::open(path)?)
}

/// Writes `x1..xm,value` rows.
pub fn write_values<T: Scalar, W: Write>(writer: W, points: &[Vec<T>], values: &[T]) -> Result<()> {
    if points.len() != values.len() {
        return Err(Error::InvalidArgument(format!(
            "{} points but {} values",
            points.len(),
            values.len()
        )));
    }
    let m = points.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=m).map(|k| format!("x{k}")).collect();
    header.push("value".into());
    w.write_record(&header)?;
    for (p, v) in points.iter().zip(values) {
        let mut rec: Vec<String> = p.iter().map(|c| c.to_string()).collect();
        rec.push(v.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_optional() {
        let a: Vec<Vec<f64>> = read_points("x,y\n1,2\n3,4\n".as_bytes()).unwrap();
        let b: Vec<Vec<f64>> = read_points("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn samples_split_last_column() {
        let (p, v) = read_samples::<f64, _>("x,f\n0,1\n 2 , 3\n".as_bytes()).unwrap();
        assert_eq!(p, vec![vec![0.0], vec![2.0]]);
        assert_eq!(v, vec![1.0, 3.0]);
    }

    #[test]
    fn rejects_ragged_and_garbage() {
        assert!(read_points::<f64, _>("1,2\n3\n".as_bytes()).is_err());
        assert!(read_points::<f64, _>("1,2\nx,4\n".as_bytes()).is_err());
        assert!(read_points::<f64, _>("1,nan\n".as_bytes()).is_err());
        assert!(read_points::<f64, _>("a,b\n".as_bytes()).is_err());
        assert!(read_samples::<f64, _>("1\n2\n".as_bytes()).is_err());
    }

    #[test]
    fn write_then_read() {
        let pts = vec![vec![0.1, -0.25], vec![1e-17, 3.0]];
        let vals = vec![0.5, -1.0 / 3.0];
        let mut buf = Vec::new();
        write_values(&mut buf, &pts, &vals).unwrap();
        let (p, v) = read_samples::<f64, _>(buf.as_slice()).unwrap();
        assert_eq!(p, pts);
        assert_eq!(v, vals);
    }
}
