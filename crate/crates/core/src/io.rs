//! Flat-file formats shared by the command-line tools: sample-set CSV and a
//! hash-stable JSON encoding.
//!
//! Sample sets are CSV with header `x1,...,xn`, one row per point, plus an
//! optional trailing `label` column. JSON payloads print every float with 17
//! significant digits so identical payloads serialize to identical bytes.

use serde::Serialize;

use crate::error::{Error, Result};

/// Rows of a sample CSV: the points and, when the file has a `label` column,
/// their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleTable {
    pub points: Vec<Vec<f64>>,
    pub labels: Option<Vec<f64>>,
}

impl SampleTable {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

/// Formats a float with 17 significant digits, enough to reproduce the exact
/// bit pattern on re-parse.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

/// Renders points (and labels, when given) as CSV with header
/// `x1,...,xn[,label]`.
pub fn write_samples_csv(points: &[Vec<f64>], labels: Option<&[f64]>) -> Result<String> {
    let first = points.first().ok_or(Error::EmptyInput("csv points"))?;
    let n = first.len();
    if n == 0 {
        return Err(Error::invalid("points", "points must have dimension >= 1"));
    }
    for point in points {
        if point.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: point.len(),
            });
        }
    }
    if let Some(labels) = labels {
        if labels.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: labels.len(),
            });
        }
    }

    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    if labels.is_some() {
        header.push("label".to_string());
    }
    let mut out = header.join(",");
    out.push('\n');
    for (i, point) in points.iter().enumerate() {
        let mut row: Vec<String> = point.iter().map(|&v| format_float(v)).collect();
        if let Some(labels) = labels {
            // Labels are +-1 in every pipeline; plain Display keeps the
            // column readable and still round-trips exactly.
            row.push(format!("{}", labels[i]));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Parses CSV produced by [`write_samples_csv`] (or hand-written in the same
/// shape). The header is checked literally; blank lines are skipped.
pub fn read_samples_csv(text: &str) -> Result<SampleTable> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::EmptyInput("csv text"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let labeled = columns.last() == Some(&"label");
    let n = columns.len() - usize::from(labeled);
    if n == 0 {
        return Err(Error::Parse(
            "csv header has no coordinate columns".to_string(),
        ));
    }
    for (i, column) in columns[..n].iter().enumerate() {
        let want = format!("x{}", i + 1);
        if *column != want {
            return Err(Error::Parse(format!(
                "csv header column {} is `{column}`, expected `{want}`",
                i + 1
            )));
        }
    }

    let mut points = Vec::new();
    let mut labels = if labeled { Some(Vec::new()) } else { None };
    for (index, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row_no = index + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::Parse(format!(
                "csv row {row_no}: expected {} fields, got {}",
                columns.len(),
                fields.len()
            )));
        }
        let mut point = Vec::with_capacity(n);
        for field in &fields[..n] {
            point.push(parse_field(field, row_no)?);
        }
        points.push(point);
        if let Some(labels) = labels.as_mut() {
            labels.push(parse_field(fields[n], row_no)?);
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyInput("csv rows"));
    }
    Ok(SampleTable { points, labels })
}

fn parse_field(field: &str, row_no: usize) -> Result<f64> {
    let trimmed = field.trim();
    trimmed
        .parse()
        .map_err(|_| Error::Parse(format!("csv row {row_no}: `{trimmed}` is not a number")))
}

struct StableFormatter;

impl serde_json::ser::Formatter for StableFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes to JSON with floats at fixed 17-significant-digit precision, so
/// equal payloads produce byte-identical files. Non-finite floats become
/// `null` (JSON has no representation for them).
pub fn to_stable_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, StableFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}
