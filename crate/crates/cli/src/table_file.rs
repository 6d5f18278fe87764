//! CSV count tables.
//!
//! A file holds `r` rows of `r` nonnegative integer counts. An optional
//! header row and an optional row-label first column are detected from
//! non-numeric tokens. Files where only some rows carry a label are
//! rejected.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use dtmh_core::CountTable;

#[derive(Debug)]
pub struct ParseError {
    pub line: Option<u64>,
    pub column: Option<usize>,
    pub message: String,
}

impl ParseError {
    fn at(line: u64, column: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            column: Some(column),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token {
    Count(u64),
    /// Parses as a number but is not a nonnegative integer.
    OtherNumber,
    Text,
}

fn classify(s: &str) -> Token {
    if let Ok(v) = s.parse::<u64>() {
        Token::Count(v)
    } else if s.parse::<f64>().is_ok() {
        Token::OtherNumber
    } else {
        Token::Text
    }
}

/// A parsed table file.
#[derive(Debug, Clone, PartialEq)]
pub struct TableFile {
    pub path: String,
    pub had_header: bool,
    pub had_row_labels: bool,
    pub table: CountTable,
}

struct Row {
    line: u64,
    fields: Vec<String>,
}

pub fn parse_table<R: Read>(input: R) -> Result<(CountTable, bool, bool), ParseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line());
            ParseError {
                line,
                column: None,
                message: e.to_string(),
            }
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(Row {
            line,
            fields: rec.iter().map(str::to_string).collect(),
        });
    }
    if rows.is_empty() {
        return Err(ParseError::general("file contains no table rows"));
    }

    let had_header = rows[0]
        .fields
        .iter()
        .any(|f| !f.is_empty() && classify(f) == Token::Text);
    let header = if had_header {
        Some(rows.remove(0))
    } else {
        None
    };
    if rows.is_empty() {
        return Err(ParseError::general(
            "file has a header row but no data rows",
        ));
    }

    let labelled: Vec<bool> = rows
        .iter()
        .map(|r| classify(&r.fields[0]) == Token::Text)
        .collect();
    let had_labels = labelled[0];
    if let Some(i) = labelled.iter().position(|&l| l != had_labels) {
        return Err(ParseError::at(
            rows[i].line,
            1,
            format!(
                "ambiguous row labels: '{}' {} a label but line {} {}",
                rows[i].fields[0],
                if labelled[i] { "looks like" } else { "is not" },
                rows[0].line,
                if had_labels {
                    "starts with one"
                } else {
                    "does not"
                }
            ),
        ));
    }
    let skip = usize::from(had_labels);

    let r = rows.len();
    let mut counts = Vec::with_capacity(r * r);
    for row in &rows {
        let width = row.fields.len() - skip;
        if width != r {
            return Err(ParseError::at(
                row.line,
                row.fields.len(),
                format!("expected {r} counts for a square {r}x{r} table, found {width}"),
            ));
        }
        for (j, f) in row.fields.iter().enumerate().skip(skip) {
            match classify(f) {
                Token::Count(v) => counts.push(v),
                Token::OtherNumber => {
                    return Err(ParseError::at(
                        row.line,
                        j + 1,
                        format!("expected a nonnegative integer count, found '{f}'"),
                    ))
                }
                Token::Text => {
                    return Err(ParseError::at(
                        row.line,
                        j + 1,
                        format!("expected a count, found text '{f}'"),
                    ))
                }
            }
        }
    }
    if let Some(h) = header {
        let want = r + skip;
        let ok = h.fields.len() == want || (!had_labels && h.fields.len() == r + 1);
        if !ok {
            return Err(ParseError::at(
                h.line,
                h.fields.len(),
                format!(
                    "header has {} fields, data rows have {want}",
                    h.fields.len()
                ),
            ));
        }
    }
    let table = CountTable::from_flat(r, counts).map_err(|e| ParseError::general(e.to_string()))?;
    Ok((table, had_header, had_labels))
}

impl TableFile {
    pub fn read(path: &Path) -> Result<(Self, Vec<u8>), ParseError> {
        let bytes = std::fs::read(path)
            .map_err(|e| ParseError::general(format!("cannot read {}: {e}", path.display())))?;
        let (table, had_header, had_row_labels) =
            parse_table(bytes.as_slice()).map_err(|mut e| {
                e.message = format!("{}: {}", path.display(), e.message);
                e
            })?;
        Ok((
            Self {
                path: path.display().to_string(),
                had_header,
                had_row_labels,
                table,
            },
            bytes,
        ))
    }
}

/// Writes counts as plain CSV, no header or labels.
pub fn write_table<W: Write>(t: &CountTable, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in t.rows() {
        w.write_record(row.iter().map(u64::to_string))?;
    }
    w.flush()
}
