//! Dataset CSV files.
//!
//! The format is a header line `x,y` followed by one `x,y` row per point, with
//! `x` a decimal in `[0, 1]` and `y` either `0` or `1`. Lines starting with `#`
//! are comments. Numbers are written in the shortest form that parses back to
//! the same `f64`, so a save/load round trip is exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::DataSet;

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

pub fn read_dataset(reader: impl Read) -> Result<DataSet> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let header_line = rdr.position().line();
    let header = rdr.headers().map_err(|e| parse_error(header_line, e.to_string()))?.clone();
    if header.len() != 2 || &header[0] != "x" || &header[1] != "y" {
        let line = header.position().map_or(1, |p| p.line());
        return Err(parse_error(
            line,
            format!("expected header `x,y`, got `{}`", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let xi: f64 = record[0].parse().map_err(|_| parse_error(line, format!("invalid x `{}`", &record[0])))?;
        let yi = match &record[1] {
            "0" => false,
            "1" => true,
            other => return Err(parse_error(line, format!("y must be 0 or 1, got `{other}`"))),
        };
        if !(0.0..=1.0).contains(&xi) {
            return Err(parse_error(line, format!("x = {xi} outside [0, 1]")));
        }
        x.push(xi);
        y.push(yi);
    }
    DataSet::new(x, y)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<DataSet> {
    read_dataset(BufReader::new(File::open(path)?))
}

/// Writes `# `-prefixed comment lines, the header and the points in their
/// original order.
pub fn write_dataset(data: &DataSet, comments: &[String], mut out: impl Write) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "x,y")?;
    for (x, y) in data.points() {
        writeln!(out, "{x},{}", y as u8)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_dataset(data: &DataSet, path: impl AsRef<Path>) -> Result<()> {
    write_dataset(data, &[], BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_is_empty() {
        let d = read_dataset("x,y\n".as_bytes()).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn bad_response_names_line() {
        let err = read_dataset("# note\nx,y\n0.1,1\n0.2,2\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn duplicate_covariate_is_rejected() {
        let err = read_dataset("x,y\n0.5,1\n0.5,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DuplicateCovariate { .. }));
    }

    #[test]
    fn wrong_header() {
        assert!(read_dataset("a,b\n0.1,1\n".as_bytes()).is_err());
        assert!(read_dataset("x,y\n1.5,1\n".as_bytes()).is_err());
    }

    #[test]
    fn round_trip_with_comments() {
        let d = DataSet::from_points(&[(0.1, true), (1.0 / 3.0, false), (0.0, true)]).unwrap();
        let mut buf = Vec::new();
        write_dataset(&d, &["seed = 3".into()], &mut buf).unwrap();
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), d);
    }
}
