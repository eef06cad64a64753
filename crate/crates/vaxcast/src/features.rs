//! Lagged design-matrix construction from attitude signals.
//!
//! [`build_design`] aligns the attitude series with the target on their
//! common calendar range, appends one-period-lag columns, and reports the
//! aligned target alongside the matrix. Attitude series may start earlier
//! than the target; those earlier days feed the lag columns only.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::series::{parse_date, DatedSeries, CSV_DECIMALS};
use crate::Result;

/// A dense, date-aligned design matrix (row-major storage).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    start_date: NaiveDate,
    column_names: Vec<String>,
    /// Row-major values, `n_rows × column_names.len()`.
    data: Vec<f64>,
    n_rows: usize,
}

impl FeatureMatrix {
    /// Builds a matrix from per-row slices; every cell must be finite.
    pub fn new(
        start_date: NaiveDate,
        column_names: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if column_names.is_empty() {
            return Err(Error::domain("feature matrix needs at least one column"));
        }
        if rows.is_empty() {
            return Err(Error::domain("feature matrix needs at least one row"));
        }
        let mut sorted = column_names.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("feature column names must be distinct"));
        }
        let n_cols = column_names.len();
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::domain(format!(
                    "row {} has {} cells; expected {}",
                    i,
                    row.len(),
                    n_cols
                )));
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::domain(format!(
                    "non-finite feature value {bad} in row {i}"
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(FeatureMatrix {
            start_date,
            column_names,
            data,
            n_rows: rows.len(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn end_date(&self) -> NaiveDate {
        self.start_date + chrono::Days::new(self.n_rows as u64 - 1)
    }

    pub fn date_at(&self, row: usize) -> NaiveDate {
        self.start_date + chrono::Days::new(row as u64)
    }

    /// Row index of `date`, if covered.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = date.signed_duration_since(self.start_date).num_days();
        (0..self.n_rows as i64)
            .contains(&offset)
            .then_some(offset as usize)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.n_cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.row(i)[j]).collect()
    }

    /// Gathers arbitrary rows into a new matrix. The result keeps this
    /// matrix's start date purely as a placeholder — gathered rows are
    /// generally not consecutive days — so it is only for internal
    /// resampling (cross-validation folds, bootstrap) where learners
    /// ignore dates.
    pub(crate) fn gather_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let c = self.n_cols();
        let mut data = Vec::with_capacity(rows.len() * c);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            start_date: self.start_date,
            column_names: self.column_names.clone(),
            data,
            n_rows: rows.len(),
        }
    }

    /// Contiguous row slice `[offset, offset + len)` as a new matrix.
    pub fn slice_rows(&self, offset: usize, len: usize) -> Result<FeatureMatrix> {
        if len == 0 || offset + len > self.n_rows {
            return Err(Error::domain(format!(
                "row slice {offset}..{} out of bounds for {} rows",
                offset + len,
                self.n_rows
            )));
        }
        let c = self.n_cols();
        Ok(FeatureMatrix {
            start_date: self.date_at(offset),
            column_names: self.column_names.clone(),
            data: self.data[offset * c..(offset + len) * c].to_vec(),
            n_rows: len,
        })
    }

    /// Rows restricted to dates the matrix shares with `[first, last]`.
    pub fn slice_dates(&self, first: NaiveDate, last: NaiveDate) -> Result<FeatureMatrix> {
        let lo = first.max(self.start_date);
        let hi = last.min(self.end_date());
        if lo > hi {
            return Err(Error::domain(format!(
                "no feature rows between {first} and {last}"
            )));
        }
        let offset = self.index_of(lo).expect("clamped into range");
        let len = hi.signed_duration_since(lo).num_days() as usize + 1;
        self.slice_rows(offset, len)
    }

    /// CSV serialization: `date,<col1>,…` header, fixed 6-decimal values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date");
        for name in &self.column_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for i in 0..self.n_rows {
            out.push_str(&self.date_at(i).format("%Y-%m-%d").to_string());
            for v in self.row(i) {
                out.push_str(&format!(",{v:.prec$}", prec = CSV_DECIMALS));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the [`to_csv`](Self::to_csv) format back; dates must be dense.
    pub fn from_csv(text: &str) -> Result<FeatureMatrix> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty feature file"))?;
        let mut fields = header.split(',');
        if fields.next() != Some("date") {
            return Err(Error::parse(1, "header must start with `date`"));
        }
        let column_names: Vec<String> = fields.map(str::to_string).collect();
        if column_names.is_empty() {
            return Err(Error::parse(1, "header lists no feature columns"));
        }

        let mut start_date = None;
        let mut expected = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.is_empty() {
                continue;
            }
            let mut cells = line.split(',');
            let date_text = cells
                .next()
                .ok_or_else(|| Error::parse(lineno, "missing date cell"))?;
            let date = parse_date(lineno, date_text)?;
            if let Some(exp) = expected {
                if date != exp {
                    return Err(Error::parse(
                        lineno,
                        format!("expected date {exp}, found {date}; rows must be consecutive days"),
                    ));
                }
            } else {
                start_date = Some(date);
            }
            expected = date.succ_opt();
            let mut row = Vec::with_capacity(column_names.len());
            for cell in cells {
                let value: f64 = cell.trim().parse().map_err(|_| {
                    Error::parse(lineno, format!("cannot parse `{cell}` as a number"))
                })?;
                row.push(value);
            }
            if row.len() != column_names.len() {
                return Err(Error::parse(
                    lineno,
                    format!(
                        "row has {} values; header lists {} columns",
                        row.len(),
                        column_names.len()
                    ),
                ));
            }
            rows.push(row);
        }
        FeatureMatrix::new(
            start_date.ok_or_else(|| Error::parse(1, "feature file has no data rows"))?,
            column_names,
            rows,
        )
    }
}

/// A built design: the feature matrix, the date-aligned target, and any
/// data-quality warnings (constant columns are kept but flagged).
#[derive(Debug, Clone)]
pub struct Design {
    pub features: FeatureMatrix,
    pub target: DatedSeries,
    pub warnings: Vec<String>,
}

/// Aligns the attitude series with the target and assembles the design
/// matrix: one column per attitude at `t`, then (for `lag > 0`) one per
/// attitude at `t − lag`. The first feasible rows are trimmed so every lag
/// cell exists.
pub fn build_design(
    attitudes: &[DatedSeries],
    target: &DatedSeries,
    lag: usize,
) -> Result<Design> {
    if attitudes.is_empty() {
        return Err(Error::domain("at least one attitude series is required"));
    }

    // First date with both a target value and all lagged attitude values.
    let mut first = target.start_date();
    let mut last = target.end_date();
    for series in attitudes {
        let needed_start = series.start_date() + chrono::Days::new(lag as u64);
        first = first.max(needed_start);
        last = last.min(series.end_date());
    }
    if first > last {
        return Err(Error::domain(
            "attitude and target series have no common dates after lag trimming",
        ));
    }
    let n_rows = last.signed_duration_since(first).num_days() as usize + 1;

    let mut column_names: Vec<String> =
        attitudes.iter().map(|s| s.name().to_string()).collect();
    if lag > 0 {
        column_names.extend(attitudes.iter().map(|s| format!("{}_lag{lag}", s.name())));
    }

    let mut rows = Vec::with_capacity(n_rows);
    let mut target_values = Vec::with_capacity(n_rows);
    for r in 0..n_rows {
        let date = first + chrono::Days::new(r as u64);
        let mut row = Vec::with_capacity(column_names.len());
        for series in attitudes {
            row.push(series.get(date).expect("date inside trimmed range"));
        }
        if lag > 0 {
            let lagged = date - chrono::Days::new(lag as u64);
            for series in attitudes {
                row.push(series.get(lagged).expect("lag inside trimmed range"));
            }
        }
        rows.push(row);
        target_values.push(target.get(date).expect("date inside target range"));
    }

    let features = FeatureMatrix::new(first, column_names, rows)?;
    let mut warnings = Vec::new();
    for (j, name) in features.column_names().iter().enumerate() {
        let col = features.column(j);
        if col.iter().all(|v| *v == col[0]) {
            warnings.push(format!(
                "feature column `{name}` is constant; regression may be rank-deficient"
            ));
        }
    }
    let target = DatedSeries::new(first, target.name(), target_values)?;
    Ok(Design {
        features,
        target,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
    }

    fn series(name: &str, start: NaiveDate, values: Vec<f64>) -> DatedSeries {
        DatedSeries::new(start, name, values).expect("valid series")
    }

    fn three_attitudes(start: NaiveDate, n: usize) -> Vec<DatedSeries> {
        ["pt", "nt", "ng"]
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let values = (0..n).map(|i| (i + k * 100) as f64).collect();
                series(name, start, values)
            })
            .collect()
    }

    #[test]
    fn lag_one_drops_one_row_and_doubles_columns() {
        let start = date(2021, 1, 2);
        let attitudes = three_attitudes(start, 10);
        let target = series("ratio", start, (0..10).map(|i| i as f64 * 0.1).collect());
        let design = build_design(&attitudes, &target, 1).unwrap();
        assert_eq!(design.features.n_rows(), 9);
        assert_eq!(design.features.n_cols(), 6);
        assert_eq!(
            design.features.column_names(),
            &["pt", "nt", "ng", "pt_lag1", "nt_lag1", "ng_lag1"]
        );
        assert_eq!(design.features.start_date(), date(2021, 1, 3));
        assert_eq!(design.target.len(), 9);
        // Row 0 is dated 2021-01-03: attitudes at index 1, lags at index 0.
        assert_eq!(design.features.row(0), &[1.0, 101.0, 201.0, 0.0, 100.0, 200.0]);
        assert_eq!(design.target.values()[0], 0.1);
        assert!(design.warnings.is_empty());
    }

    #[test]
    fn lag_zero_keeps_all_rows() {
        let start = date(2021, 1, 2);
        let attitudes = three_attitudes(start, 10);
        let target = series("ratio", start, vec![1.0; 10]);
        let design = build_design(&attitudes, &target, 0).unwrap();
        assert_eq!(design.features.n_rows(), 10);
        assert_eq!(design.features.n_cols(), 3);
    }

    #[test]
    fn earlier_attitude_days_feed_lags_only() {
        // Attitudes start 12 days before the target (as web data does); with
        // lag 1 the design covers exactly the target's dates.
        let attitudes = three_attitudes(date(2020, 12, 21), 24);
        let target = series("ratio", date(2021, 1, 2), vec![2.0; 10]);
        let design = build_design(&attitudes, &target, 1).unwrap();
        assert_eq!(design.features.start_date(), date(2021, 1, 2));
        assert_eq!(design.features.n_rows(), 10);
    }

    #[test]
    fn constant_column_warned_not_dropped() {
        let start = date(2021, 1, 2);
        let mut attitudes = three_attitudes(start, 8);
        attitudes[1] = series("nt", start, vec![7.0; 8]);
        let target = series("ratio", start, (0..8).map(|i| i as f64).collect());
        let design = build_design(&attitudes, &target, 1).unwrap();
        assert_eq!(design.features.n_cols(), 6);
        assert_eq!(design.warnings.len(), 2); // nt and nt_lag1
        assert!(design.warnings[0].contains("`nt`"));
    }

    #[test]
    fn disjoint_ranges_error() {
        let attitudes = three_attitudes(date(2021, 1, 2), 5);
        let target = series("ratio", date(2022, 1, 1), vec![1.0; 5]);
        assert!(build_design(&attitudes, &target, 1).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let start = date(2021, 1, 2);
        let attitudes = three_attitudes(start, 6);
        let target = series("ratio", start, (0..6).map(|i| i as f64 * 0.25).collect());
        let design = build_design(&attitudes, &target, 1).unwrap();
        let text = design.features.to_csv();
        let parsed = FeatureMatrix::from_csv(&text).unwrap();
        assert_eq!(parsed, design.features);
        assert!(text.starts_with("date,pt,nt,ng,pt_lag1,nt_lag1,ng_lag1\n"));
    }

    #[test]
    fn csv_rejects_gap_dates() {
        let text = "date,a\n2021-01-02,1.0\n2021-01-04,2.0\n";
        let err = FeatureMatrix::from_csv(text).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "got {err:?}");
    }

    #[test]
    fn slice_dates_clamps_to_overlap() {
        let start = date(2021, 1, 2);
        let attitudes = three_attitudes(start, 10);
        let target = series("ratio", start, vec![1.0; 10]);
        let design = build_design(&attitudes, &target, 0).unwrap();
        let part = design
            .features
            .slice_dates(date(2021, 1, 5), date(2021, 1, 8))
            .unwrap();
        assert_eq!(part.n_rows(), 4);
        assert_eq!(part.start_date(), date(2021, 1, 5));
    }
}
