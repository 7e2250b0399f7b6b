//! CSV ingestion and output.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use bsmooth_core::discrete::DataSet;
use bsmooth_core::pipeline::CurvePoint;

use crate::error::CliError;

/// Reads an `x,y` table with a header row. Rows may come in any order;
/// repeated abscissae are rejected.
pub fn read_xy<R: Read>(reader: R) -> Result<DataSet, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(CliError::Input("input is empty; expected a header row `x,y`".into()));
    }
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(ix), Some(iy)) = (col("x"), col("y")) else {
        return Err(CliError::Parse {
            line: 1,
            msg: format!("expected header `x,y`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    };
    let mut pairs = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| -> Result<f64, CliError> {
            let raw = record.get(i).ok_or_else(|| CliError::Parse { line, msg: format!("missing `{name}`") })?;
            let v: f64 = raw.parse().map_err(|_| CliError::Parse { line, msg: format!("`{raw}` is not a number") })?;
            if !v.is_finite() {
                return Err(CliError::Parse { line, msg: format!("`{raw}` is not finite") });
            }
            Ok(v)
        };
        pairs.push((field(ix, "x")?, field(iy, "y")?));
    }
    if pairs.is_empty() {
        return Err(CliError::Input("input has a header but no data rows".into()));
    }
    Ok(DataSet::from_pairs(pairs)?)
}

/// [`read_xy`] on a file.
pub fn read_xy_path(path: &Path) -> Result<DataSet, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_xy(file)
}

fn csv_error(e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::Io { path: "<input>".into(), source: e },
        kind => CliError::Parse { line, msg: format!("{kind:?}") },
    }
}

/// Writes a header and rows of already formatted fields.
pub fn write_table<W: Write>(
    out: W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

/// Writes `t,estimate,halfwidth,region`.
pub fn write_curve<W: Write>(out: W, points: &[CurvePoint]) -> std::io::Result<()> {
    let rows = points
        .iter()
        .map(|p| vec![p.t.to_string(), p.estimate.to_string(), p.halfwidth.to_string(), p.region.as_str().to_string()]);
    write_table(out, &["t", "estimate", "halfwidth", "region"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_unsorted_rows() {
        let d = read_xy("x,y\n0.5,1\n0,2\n1,3\n".as_bytes()).unwrap();
        assert_eq!(d.x(), &[0.0, 0.5, 1.0]);
        assert_eq!(d.y(), &[2.0, 1.0, 3.0]);
    }

    #[test]
    fn header_columns_may_be_swapped() {
        let d = read_xy("y,x\n1,0\n2,1\n".as_bytes()).unwrap();
        assert_eq!(d.x(), &[0.0, 1.0]);
    }

    #[test]
    fn reports_line_numbers() {
        match read_xy("x,y\n0,1\n0.5,abc\n".as_bytes()) {
            Err(CliError::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("abc"));
            }
            other => panic!("{other:?}"),
        }
        match read_xy("x,y\n0,1\n0.5\n".as_bytes()) {
            Err(e @ CliError::Parse { line: 3, .. }) => assert_eq!(e.exit_code(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_empty_and_duplicates() {
        assert_eq!(read_xy("".as_bytes()).unwrap_err().exit_code(), 2);
        assert_eq!(read_xy("x,y\n".as_bytes()).unwrap_err().exit_code(), 2);
        let e = read_xy("x,y\n0,1\n0.25,2\n0.25,3\n".as_bytes()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("0.25"), "{e}");
    }

    #[test]
    fn curve_round_trip_header() {
        let mut buf = Vec::new();
        write_curve(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,estimate,halfwidth,region\n");
    }
}
