//! Clinical CSV ingestion: a daily count of administered first doses.

use std::path::Path;

use chrono::{Duration, NaiveDate};

use crate::error::Error;
use crate::series::{parse_date, DatedSeries};
use crate::Result;

/// Header required on a clinical export.
pub const CLINICAL_HEADER: &str = "date,first_doses";

/// Reads and parses a clinical CSV file. See [`clinical_from_str`].
pub fn parse_clinical_csv(path: &Path) -> Result<DatedSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    clinical_from_str(&text)
}

/// Parses a clinical export: header `date,first_doses`, then one row per
/// calendar day of `ISO date, nonnegative decimal`.
///
/// Dates must be consecutive — a gap names the first missing date, and a
/// duplicate row is reported as a date mismatch. The returned series is
/// named `first_doses`.
pub fn clinical_from_str(text: &str) -> Result<DatedSeries> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty file; expected a header row"))?;
    if header != CLINICAL_HEADER {
        return Err(Error::parse(
            1,
            format!("expected header `{CLINICAL_HEADER}`, got `{header}`"),
        ));
    }

    let mut start: Option<NaiveDate> = None;
    let mut values = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (date_s, value_s) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(lineno, "expected `date,value`"))?;
        let date = parse_date(lineno, date_s)?;
        let value: f64 = value_s
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid decimal `{value_s}`")))?;
        if !value.is_finite() || value < 0.0 {
            return Err(Error::parse(
                lineno,
                format!("dose counts must be finite and nonnegative, got `{value_s}`"),
            ));
        }
        match start {
            None => start = Some(date),
            Some(s) => {
                let expected = s + Duration::days(values.len() as i64);
                if date != expected {
                    return Err(Error::domain(format!(
                        "clinical dates must be consecutive: expected {expected}, found {date}"
                    )));
                }
            }
        }
        values.push(value);
    }
    let start = start.ok_or_else(|| Error::parse(2, "no data rows"))?;
    DatedSeries::new(start, "first_doses", values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_row_file_parses() {
        let text = "date,first_doses\n2021-01-02,100\n2021-01-03,150.5\n2021-01-04,0\n";
        let series = clinical_from_str(text).unwrap();
        assert_eq!(series.name(), "first_doses");
        assert_eq!(series.len(), 3);
        assert_eq!(series.values(), &[100.0, 150.5, 0.0]);
        assert_eq!(series.start_date().to_string(), "2021-01-02");
    }

    #[test]
    fn skipped_date_is_rejected_by_name() {
        let text = "date,first_doses\n2021-01-02,100\n2021-01-04,150\n";
        let err = clinical_from_str(text).unwrap_err();
        assert!(err.to_string().contains("2021-01-03"), "{err}");
    }

    #[test]
    fn duplicate_date_is_rejected() {
        let text = "date,first_doses\n2021-01-02,100\n2021-01-02,150\n";
        let err = clinical_from_str(text).unwrap_err();
        assert!(err.to_string().contains("expected 2021-01-03"), "{err}");
    }

    #[test]
    fn negative_value_is_a_parse_error_with_line() {
        let text = "date,first_doses\n2021-01-02,100\n2021-01-03,-5\n";
        match clinical_from_str(text).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("-5"), "{message}");
            }
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = clinical_from_str("date,doses\n2021-01-02,1\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn missing_file_reports_the_path() {
        let err = parse_clinical_csv(Path::new("/nonexistent/clinical.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/clinical.csv"), "{err}");
    }
}
