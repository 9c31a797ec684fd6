//! Generic header-checked CSV table reader shared by every input schema.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use super::{IngestError, RowError, RowErrorKind};
use crate::calendar::{parse_date, DateWindow};

/// A row type with a fixed CSV schema.
pub(crate) trait TableRow: Sized {
    const HEADER: &'static [&'static str];

    fn from_fields(fields: &Fields<'_>) -> Result<Self, RowErrorKind>;

    /// Observation date for rows subject to the analysis window.
    fn date(&self) -> Option<NaiveDate> {
        None
    }
}

/// Outcome of reading one table: accepted records plus everything that was
/// dropped or rejected along the way.
#[derive(Debug, Clone)]
pub struct TableReport<T> {
    pub records: Vec<T>,
    /// Source line of each accepted record, parallel to `records`.
    pub lines: Vec<u64>,
    /// Data rows seen, header excluded.
    pub rows: usize,
    pub dropped_out_of_window: usize,
    pub errors: Vec<RowError>,
}

impl<T> TableReport<T> {
    pub fn accepted(&self) -> usize {
        self.records.len()
    }

    /// `accepted + dropped + errored == rows`.
    pub fn reconciles(&self) -> bool {
        self.accepted() + self.dropped_out_of_window + self.errors.len() == self.rows
    }

    /// Turns collected row errors into a hard error at the first bad line.
    pub fn into_strict(self, path: &str) -> Result<Self, IngestError> {
        match self.errors.first() {
            Some(e) => Err(IngestError::Row { path: path.to_string(), line: e.line, kind: e.kind.clone() }),
            None => Ok(self),
        }
    }

    /// Removes records for which `reject` returns an error, recording it.
    pub(crate) fn reject_where(&mut self, mut reject: impl FnMut(&T, u64) -> Option<RowErrorKind>) {
        let mut kept = Vec::with_capacity(self.records.len());
        let mut kept_lines = Vec::with_capacity(self.lines.len());
        for (rec, line) in self.records.drain(..).zip(self.lines.drain(..)) {
            match reject(&rec, line) {
                Some(kind) => self.errors.push(RowError { line, kind }),
                None => {
                    kept.push(rec);
                    kept_lines.push(line);
                }
            }
        }
        self.records = kept;
        self.lines = kept_lines;
        self.errors.sort_by_key(|e| e.line);
    }
}

/// Named access to the fields of one data row.
pub(crate) struct Fields<'a> {
    header: &'static [&'static str],
    values: Vec<&'a str>,
}

impl<'a> Fields<'a> {
    fn column(&self, i: usize) -> &'static str {
        self.header[i]
    }

    pub fn text(&self, i: usize) -> Result<String, RowErrorKind> {
        let v = self.values[i];
        if v.is_empty() {
            return Err(RowErrorKind::Empty { column: self.column(i) });
        }
        Ok(v.to_string())
    }

    pub fn date(&self, i: usize) -> Result<NaiveDate, RowErrorKind> {
        let v = self.text(i)?;
        parse_date(&v).ok_or(RowErrorKind::BadDate { column: self.column(i), value: v })
    }

    pub fn count(&self, i: usize) -> Result<u64, RowErrorKind> {
        let v = self.text(i)?;
        if let Ok(n) = v.parse::<u64>() {
            return Ok(n);
        }
        if v.parse::<i64>().is_ok_and(|n| n < 0) {
            return Err(RowErrorKind::Negative { column: self.column(i), value: v });
        }
        Err(RowErrorKind::Invalid { column: self.column(i), value: v, expected: "nonnegative integer" })
    }

    fn real(&self, i: usize) -> Result<(f64, String), RowErrorKind> {
        let v = self.text(i)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok((x, v)),
            _ => Err(RowErrorKind::Invalid { column: self.column(i), value: v, expected: "finite number" }),
        }
    }

    pub fn nonnegative(&self, i: usize) -> Result<f64, RowErrorKind> {
        let (x, v) = self.real(i)?;
        if x < 0.0 {
            return Err(RowErrorKind::Negative { column: self.column(i), value: v });
        }
        Ok(x)
    }

    pub fn positive(&self, i: usize) -> Result<f64, RowErrorKind> {
        let (x, v) = self.real(i)?;
        if x <= 0.0 {
            return Err(RowErrorKind::OutOfRange { column: self.column(i), value: v, range: "(0, inf)" });
        }
        Ok(x)
    }

    pub fn fraction(&self, i: usize) -> Result<f64, RowErrorKind> {
        let (x, v) = self.real(i)?;
        if !(0.0..=1.0).contains(&x) {
            return Err(RowErrorKind::OutOfRange { column: self.column(i), value: v, range: "[0, 1]" });
        }
        Ok(x)
    }
}

pub(crate) fn read_path<T: TableRow>(
    path: &Path,
    window: Option<&DateWindow>,
) -> Result<TableReport<T>, IngestError> {
    let label = path.display().to_string();
    let file = File::open(path).map_err(|source| IngestError::Io { path: label.clone(), source })?;
    read_from(file, &label, window)
}

pub(crate) fn read_from<T: TableRow, R: Read>(
    reader: R,
    label: &str,
    window: Option<&DateWindow>,
) -> Result<TableReport<T>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut report = TableReport {
        records: Vec::new(),
        lines: Vec::new(),
        rows: 0,
        dropped_out_of_window: 0,
        errors: Vec::new(),
    };

    let mut record = csv::ByteRecord::new();
    let mut header_seen = false;
    loop {
        let line = rdr.position().line();
        match rdr.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(err) => {
                let line = err.position().map_or(line, |p| p.line());
                match err.into_kind() {
                    csv::ErrorKind::Io(source) => {
                        return Err(IngestError::Io { path: label.to_string(), source })
                    }
                    other => {
                        if !header_seen {
                            return Err(IngestError::Header {
                                path: label.to_string(),
                                expected: T::HEADER.join(","),
                                found: format!("<unreadable: {other:?}>"),
                            });
                        }
                        report.rows += 1;
                        report.errors.push(RowError { line, kind: RowErrorKind::Malformed(format!("{other:?}")) });
                        continue;
                    }
                }
            }
        }
        let line = record.position().map_or(line, |p| p.line());

        let values: Result<Vec<&str>, _> = record.iter().map(std::str::from_utf8).collect();

        if !header_seen {
            header_seen = true;
            let names = values.map_err(|_| IngestError::Header {
                path: label.to_string(),
                expected: T::HEADER.join(","),
                found: "<invalid utf-8>".into(),
            })?;
            check_header(label, T::HEADER, &names)?;
            continue;
        }

        report.rows += 1;
        let values = match values {
            Ok(v) => v,
            Err(e) => {
                report.errors.push(RowError { line, kind: RowErrorKind::Malformed(format!("invalid UTF-8: {e}")) });
                continue;
            }
        };
        if values.len() != T::HEADER.len() {
            report.errors.push(RowError {
                line,
                kind: RowErrorKind::FieldCount { expected: T::HEADER.len(), found: values.len() },
            });
            continue;
        }
        let fields = Fields { header: T::HEADER, values };
        match T::from_fields(&fields) {
            Ok(rec) => {
                if let (Some(w), Some(d)) = (window, rec.date()) {
                    if !w.contains(d) {
                        report.dropped_out_of_window += 1;
                        continue;
                    }
                }
                report.records.push(rec);
                report.lines.push(line);
            }
            Err(kind) => report.errors.push(RowError { line, kind }),
        }
    }

    if !header_seen {
        return Err(IngestError::Empty { path: label.to_string() });
    }
    Ok(report)
}

fn check_header(label: &str, expected: &[&str], found: &[&str]) -> Result<(), IngestError> {
    let found: Vec<&str> = found.iter().map(|s| s.trim_start_matches('\u{feff}')).collect();
    if found == expected {
        return Ok(());
    }
    if let Some(missing) = expected.iter().find(|c| !found.contains(c)) {
        return Err(IngestError::MissingColumn { path: label.to_string(), column: missing.to_string() });
    }
    Err(IngestError::Header { path: label.to_string(), expected: expected.join(","), found: found.join(",") })
}
