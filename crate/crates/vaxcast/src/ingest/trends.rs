//! Web-search interest batches: parsing, censoring repair, and
//! cross-batch standardization via a shared reference query.
//!
//! The search provider reports relative interest in [0, 100] per request
//! of at most five queries, so a corpus of queries is split into batches
//! that each carry one shared reference query. Values below 1 arrive as
//! the censored marker `<1`. [`repair_censoring`] replaces those markers
//! with 0.5; [`standardize_batches`] rescales every batch so the
//! reference query has the same mean everywhere, which makes query series
//! comparable across batches, then drops the reference columns.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Duration, NaiveDate};

use crate::error::Error;
use crate::series::{parse_date, DatedSeries};
use crate::Result;

/// Reference query label used by the bundled exports.
pub const DEFAULT_REFERENCE: &str = "Joker";

/// Maximum columns per batch (provider limit of five queries per request).
pub const MAX_COLUMNS: usize = 5;

/// One raw cell of a batch: a relative-interest value or the censored
/// marker `<1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Value(f64),
    Censored,
}

impl Cell {
    fn numeric(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            Cell::Censored => None,
        }
    }
}

/// One batched export: daily rows for up to five queries, one of which is
/// the shared reference query.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendsBatch {
    start_date: NaiveDate,
    reference_name: String,
    /// Column labels in file order; exactly one equals `reference_name`.
    names: Vec<String>,
    /// One cell column per label, all the same length.
    columns: Vec<Vec<Cell>>,
}

impl TrendsBatch {
    /// Builds a batch and checks its invariants: 1..=5 distinct columns,
    /// exactly one of them the reference, equal-length non-empty columns,
    /// and finite values inside [0, 100].
    pub fn new(
        start_date: NaiveDate,
        reference_name: impl Into<String>,
        names: Vec<String>,
        columns: Vec<Vec<Cell>>,
    ) -> Result<TrendsBatch> {
        let reference_name = reference_name.into();
        if names.is_empty() || names.len() > MAX_COLUMNS {
            return Err(Error::domain(format!(
                "a batch holds 1 to {MAX_COLUMNS} query columns, got {}",
                names.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::domain(format!("duplicate query label `{name}`")));
            }
        }
        if names.iter().filter(|n| **n == reference_name).count() != 1 {
            return Err(Error::domain(format!(
                "a batch needs exactly one reference column `{reference_name}`"
            )));
        }
        if columns.len() != names.len() {
            return Err(Error::domain(format!(
                "{} labels but {} columns",
                names.len(),
                columns.len()
            )));
        }
        let rows = columns.first().map_or(0, Vec::len);
        if rows == 0 {
            return Err(Error::domain("a batch needs at least one row"));
        }
        for (name, column) in names.iter().zip(&columns) {
            if column.len() != rows {
                return Err(Error::domain(format!(
                    "column `{name}` has {} rows, expected {rows}",
                    column.len()
                )));
            }
            for cell in column {
                if let Cell::Value(v) = cell {
                    if !(v.is_finite() && (0.0..=100.0).contains(v)) {
                        return Err(Error::domain(format!(
                            "column `{name}` holds {v}, outside the interest scale [0, 100]"
                        )));
                    }
                }
            }
        }
        Ok(TrendsBatch {
            start_date,
            reference_name,
            names,
            columns,
        })
    }

    /// Reads and parses one batch export. See [`TrendsBatch::from_csv`].
    pub fn from_path(path: &Path, reference_name: &str) -> Result<TrendsBatch> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrendsBatch::from_csv(&text, reference_name)
    }

    /// Parses one batch export: header `date,<q1>,...,<qk>`, then one row
    /// per consecutive calendar day. Cells are decimals in [0, 100] or
    /// the literal `<1`; any other `<` marker is a parse error.
    pub fn from_csv(text: &str, reference_name: &str) -> Result<TrendsBatch> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty file; expected a header row"))?;
        let mut parts = header.split(',');
        if parts.next() != Some("date") {
            return Err(Error::parse(
                1,
                format!("expected header `date,<query>,...`, got `{header}`"),
            ));
        }
        let names: Vec<String> = parts.map(str::to_string).collect();
        if names.is_empty() {
            return Err(Error::parse(1, "header lists no query columns"));
        }

        let mut start: Option<NaiveDate> = None;
        let mut columns: Vec<Vec<Cell>> = vec![Vec::new(); names.len()];
        let mut rows = 0usize;
        for (i, line) in lines {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut cells = line.split(',');
            let date_s = cells
                .next()
                .ok_or_else(|| Error::parse(lineno, "missing date cell"))?;
            let date = parse_date(lineno, date_s)?;
            match start {
                None => start = Some(date),
                Some(s) => {
                    let expected = s + Duration::days(rows as i64);
                    if date != expected {
                        return Err(Error::domain(format!(
                            "batch dates must be consecutive: expected {expected}, found {date}"
                        )));
                    }
                }
            }
            for (j, name) in names.iter().enumerate() {
                let raw = cells.next().ok_or_else(|| {
                    Error::parse(lineno, format!("missing cell for column `{name}`"))
                })?;
                columns[j].push(parse_cell(lineno, raw)?);
            }
            if cells.next().is_some() {
                return Err(Error::parse(
                    lineno,
                    format!("more cells than the {} header columns", names.len() + 1),
                ));
            }
            rows += 1;
        }
        let start = start.ok_or_else(|| Error::parse(2, "no data rows"))?;
        TrendsBatch::new(start, reference_name, names, columns)
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn end_date(&self) -> NaiveDate {
        self.start_date + Duration::days(self.len() as i64 - 1)
    }

    /// Number of daily rows.
    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false // the constructor rejects empty batches
    }

    pub fn reference_name(&self) -> &str {
        &self.reference_name
    }

    /// Column labels in file order, reference included.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Query labels excluding the reference, in file order.
    pub fn query_names(&self) -> impl Iterator<Item = &str> {
        self.names
            .iter()
            .map(String::as_str)
            .filter(move |n| *n != self.reference_name)
    }

    /// Cells of the named column.
    pub fn column(&self, name: &str) -> Option<&[Cell]> {
        let idx = self.names.iter().position(|n| n == name)?;
        Some(&self.columns[idx])
    }

    /// Number of censored cells still present.
    pub fn censored_cells(&self) -> usize {
        self.columns
            .iter()
            .flatten()
            .filter(|c| matches!(c, Cell::Censored))
            .count()
    }
}

fn parse_cell(lineno: usize, raw: &str) -> Result<Cell> {
    let trimmed = raw.trim();
    if trimmed == "<1" {
        return Ok(Cell::Censored);
    }
    if trimmed.starts_with('<') {
        return Err(Error::parse(
            lineno,
            format!("unknown censor marker `{trimmed}`; only `<1` is defined"),
        ));
    }
    let value: f64 = trimmed
        .parse()
        .map_err(|_| Error::parse(lineno, format!("invalid cell `{trimmed}`")))?;
    if !(value.is_finite() && (0.0..=100.0).contains(&value)) {
        return Err(Error::parse(
            lineno,
            format!("interest values live in [0, 100], got `{trimmed}`"),
        ));
    }
    Ok(Cell::Value(value))
}

/// Replaces every censored `<1` cell with 0.5 and reports how many cells
/// were repaired. All other cells pass through unchanged, so a batch
/// without censored cells comes back identical with a zero count.
pub fn repair_censoring(batch: &TrendsBatch) -> (TrendsBatch, usize) {
    let mut repaired = batch.clone();
    let mut repairs = 0usize;
    for column in &mut repaired.columns {
        for cell in column {
            if matches!(cell, Cell::Censored) {
                *cell = Cell::Value(0.5);
                repairs += 1;
            }
        }
    }
    (repaired, repairs)
}

/// Rescales every batch onto the first batch's reference scale and
/// returns one series per non-reference query.
///
/// Batch `b`'s scale factor is `mean(reference in batch 1) /
/// mean(reference in batch b)`; every non-reference column of `b` is
/// multiplied by it and the reference columns are dropped. All batches
/// must be censoring-repaired, cover the same date range, and carry
/// positive-mean references; query labels must be unique across batches.
pub fn standardize_batches(batches: &[TrendsBatch]) -> Result<BTreeMap<String, DatedSeries>> {
    let first = batches
        .first()
        .ok_or_else(|| Error::domain("no batches to standardize"))?;
    for (b, batch) in batches.iter().enumerate() {
        if batch.start_date() != first.start_date() || batch.len() != first.len() {
            return Err(Error::domain(format!(
                "batch {} covers {}..={} but batch 1 covers {}..={}; all batches must share one date range",
                b + 1,
                batch.start_date(),
                batch.end_date(),
                first.start_date(),
                first.end_date(),
            )));
        }
        if batch.censored_cells() > 0 {
            return Err(Error::domain(format!(
                "batch {} still holds {} censored cells; repair censoring first",
                b + 1,
                batch.censored_cells()
            )));
        }
    }

    let reference_mean = |batch: &TrendsBatch, index: usize| -> Result<f64> {
        let cells = batch
            .column(batch.reference_name())
            .expect("constructor guarantees the reference column");
        let mean = cells
            .iter()
            .map(|c| c.numeric().expect("censored cells were rejected above"))
            .sum::<f64>()
            / cells.len() as f64;
        if mean > 0.0 {
            Ok(mean)
        } else {
            Err(Error::domain(format!(
                "batch {} has a zero-mean reference `{}`; cannot rescale",
                index + 1,
                batch.reference_name()
            )))
        }
    };

    let anchor = reference_mean(first, 0)?;
    let mut out = BTreeMap::new();
    for (b, batch) in batches.iter().enumerate() {
        let factor = anchor / reference_mean(batch, b)?;
        for name in batch.query_names() {
            let values: Vec<f64> = batch
                .column(name)
                .expect("query_names lists existing columns")
                .iter()
                .map(|c| c.numeric().expect("censored cells were rejected above") * factor)
                .collect();
            let series = DatedSeries::new(batch.start_date(), name, values)?;
            if out.insert(name.to_string(), series).is_some() {
                return Err(Error::domain(format!(
                    "query label `{name}` appears in more than one batch"
                )));
            }
        }
    }
    Ok(out)
}
