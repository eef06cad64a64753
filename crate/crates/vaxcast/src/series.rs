//! Daily time series and the dose-to-expectation ratio transform.
//!
//! [`DatedSeries`] is the crate's core container: a dense run of daily values
//! anchored at a start date. Density is structural — a missing day cannot be
//! represented, it is an ingestion error. [`to_ratio`] converts a series of
//! daily first vaccine doses into the vaccination-to-expectation ratio, the
//! pipeline's forecast target: doses divided by the not-yet-vaccinated
//! eligible population expressed in hundreds, with the eligible pool shrinking
//! day by day as doses accumulate. [`to_doses`] inverts the transform.

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Number of decimals used when writing series values to CSV.
pub(crate) const CSV_DECIMALS: usize = 6;

/// A dense daily series: one finite value per calendar day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries", into = "RawSeries")]
pub struct DatedSeries {
    start_date: NaiveDate,
    values: Vec<f64>,
    name: String,
}

/// Serde surrogate so deserialized series re-run invariant checks.
#[derive(Serialize, Deserialize)]
struct RawSeries {
    start_date: NaiveDate,
    values: Vec<f64>,
    name: String,
}

impl TryFrom<RawSeries> for DatedSeries {
    type Error = Error;
    fn try_from(raw: RawSeries) -> Result<Self> {
        DatedSeries::new(raw.start_date, raw.name, raw.values)
    }
}

impl From<DatedSeries> for RawSeries {
    fn from(s: DatedSeries) -> Self {
        RawSeries {
            start_date: s.start_date,
            values: s.values,
            name: s.name,
        }
    }
}

impl DatedSeries {
    /// Build a series from a start date and daily values.
    ///
    /// Rejects empty inputs and non-finite values.
    pub fn new(start_date: NaiveDate, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("series must contain at least one value"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite value at {}",
                start_date + Duration::days(i as i64)
            )));
        }
        Ok(DatedSeries {
            start_date,
            values,
            name: name.into(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: emptiness is rejected at construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn end_date(&self) -> NaiveDate {
        self.date_at(self.len() - 1)
    }

    /// Date of the i-th value.
    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start_date + Duration::days(index as i64)
    }

    /// Index of `date`, if it falls inside the series.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start_date).num_days();
        (0..self.values.len() as i64)
            .contains(&offset)
            .then_some(offset as usize)
    }

    /// Value on `date`, if covered.
    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        self.index_of(date).map(|i| self.values[i])
    }

    /// Iterate `(date, value)` pairs in order.
    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.date_at(i), v))
    }

    /// Copy of the contiguous sub-series `[offset, offset + len)`.
    pub fn slice(&self, offset: usize, len: usize) -> Result<DatedSeries> {
        if len == 0 || offset + len > self.values.len() {
            return Err(Error::domain(format!(
                "slice [{offset}, {}) out of bounds for series of length {}",
                offset + len,
                self.values.len()
            )));
        }
        DatedSeries::new(
            self.date_at(offset),
            self.name.clone(),
            self.values[offset..offset + len].to_vec(),
        )
    }

    /// Values restricted to the dates this series shares with
    /// `[first, last]`; errors when the ranges do not overlap.
    pub fn window(&self, first: NaiveDate, last: NaiveDate) -> Result<DatedSeries> {
        let lo = first.max(self.start_date);
        let hi = last.min(self.end_date());
        if lo > hi {
            return Err(Error::domain(format!(
                "series `{}` has no values between {first} and {last}",
                self.name
            )));
        }
        let offset = self.index_of(lo).expect("clamped into range");
        let len = hi.signed_duration_since(lo).num_days() as usize + 1;
        self.slice(offset, len)
    }

    /// Same dates, new values (lengths must agree), new name.
    pub fn with_values(&self, name: impl Into<String>, values: Vec<f64>) -> Result<DatedSeries> {
        if values.len() != self.values.len() {
            return Err(Error::domain(format!(
                "replacement values have length {} but series has length {}",
                values.len(),
                self.values.len()
            )));
        }
        DatedSeries::new(self.start_date, name, values)
    }

    /// True when both series cover exactly the same dates.
    pub fn same_dates(&self, other: &DatedSeries) -> bool {
        self.start_date == other.start_date && self.values.len() == other.values.len()
    }

    /// Render as two-column CSV: ISO-8601 date plus the value, with the
    /// series name as the value-column header.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 24);
        out.push_str(&format!("date,{}\n", self.name));
        for (date, value) in self.iter() {
            out.push_str(&format!("{date},{value:.prec$}\n", prec = CSV_DECIMALS));
        }
        out
    }

    /// Parse the CSV produced by [`DatedSeries::to_csv`]. The value-column
    /// header becomes the series name; dates must be dense.
    pub fn from_csv(text: &str) -> Result<DatedSeries> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty file; expected a header row"))?;
        let mut parts = header.split(',');
        let date_col = parts.next().unwrap_or("");
        let name = parts
            .next()
            .ok_or_else(|| Error::parse(1, "header must have two comma-separated columns"))?;
        if parts.next().is_some() || date_col != "date" {
            return Err(Error::parse(1, format!("expected header `date,<name>`, got `{header}`")));
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
            if !value.is_finite() {
                return Err(Error::parse(lineno, format!("non-finite value `{value_s}`")));
            }
            match start {
                None => start = Some(date),
                Some(s) => {
                    let expected = s + Duration::days(values.len() as i64);
                    if date != expected {
                        return Err(Error::domain(format!(
                            "dates must be dense: expected {expected}, found {date}"
                        )));
                    }
                }
            }
            values.push(value);
        }
        let start = start.ok_or_else(|| Error::parse(2, "no data rows"))?;
        DatedSeries::new(start, name, values)
    }
}

/// Parse an ISO-8601 date, reporting the 1-based line on failure.
pub(crate) fn parse_date(lineno: usize, text: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d")
        .map_err(|_| Error::parse(lineno, format!("invalid ISO-8601 date `{text}`")))
}

/// How the eligible population is derived from the census base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EligibleRule {
    /// `eligible = base_population / (1 − temp_resident_share)` — the base
    /// count is read as the resident share of a larger true population.
    #[default]
    DivideComplement,
    /// `eligible = base_population · (1 + temp_resident_share)` — the share
    /// is read as an additive top-up.
    MultiplyShare,
}

/// Population inputs for the ratio transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationParams {
    /// Census base population, in persons. Must be positive.
    pub base_population: f64,
    /// Temporary-resident fraction in `[0, 1)`.
    #[serde(default = "default_share")]
    pub temp_resident_share: f64,
    /// First doses administered before the series starts, in persons.
    #[serde(default)]
    pub cumulative_prior_doses: f64,
    /// Eligible-population adjustment rule.
    #[serde(default)]
    pub eligible_rule: EligibleRule,
}

fn default_share() -> f64 {
    0.071
}

impl PopulationParams {
    /// Convenience constructor with the default share and adjustment rule.
    pub fn new(base_population: f64) -> Self {
        PopulationParams {
            base_population,
            temp_resident_share: default_share(),
            cumulative_prior_doses: 0.0,
            eligible_rule: EligibleRule::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.base_population > 0.0) {
            return Err(Error::domain("base_population must be positive"));
        }
        if !(0.0..1.0).contains(&self.temp_resident_share) {
            return Err(Error::domain("temp_resident_share must lie in [0, 1)"));
        }
        if self.cumulative_prior_doses < 0.0 {
            return Err(Error::domain("cumulative_prior_doses must be nonnegative"));
        }
        Ok(())
    }

    /// Eligible population after the temporary-resident adjustment.
    pub fn eligible(&self) -> f64 {
        match self.eligible_rule {
            EligibleRule::DivideComplement => {
                self.base_population / (1.0 - self.temp_resident_share)
            }
            EligibleRule::MultiplyShare => self.base_population * (1.0 + self.temp_resident_share),
        }
    }
}

/// Convert daily first doses into the vaccination-to-expectation ratio.
///
/// `expected(t)` is the eligible population that has not yet received a dose
/// before day `t`; the ratio is `doses(t) / (expected(t)/100)` — doses per
/// hundred still-expected persons. The denominator shrinks as the series
/// progresses, so exhausting the eligible pool is a domain error naming the
/// first offending date.
pub fn to_ratio(doses: &DatedSeries, params: &PopulationParams) -> Result<DatedSeries> {
    params.validate()?;
    if let Some((date, _)) = doses.iter().find(|(_, v)| *v < 0.0) {
        return Err(Error::domain(format!("negative dose count on {date}")));
    }
    let mut expected = params.eligible() - params.cumulative_prior_doses;
    let mut out = Vec::with_capacity(doses.len());
    for (date, d) in doses.iter() {
        if expected <= 0.0 {
            return Err(Error::domain(format!(
                "eligible population exhausted on {date} (expected = {expected})"
            )));
        }
        out.push(d / (expected / 100.0));
        expected -= d;
    }
    doses.with_values("ratio", out)
}

/// Invert [`to_ratio`]: recover the daily dose counts from a ratio series.
pub fn to_doses(ratio: &DatedSeries, params: &PopulationParams) -> Result<DatedSeries> {
    params.validate()?;
    let mut expected = params.eligible() - params.cumulative_prior_doses;
    let mut out = Vec::with_capacity(ratio.len());
    for (date, r) in ratio.iter() {
        if expected <= 0.0 {
            return Err(Error::domain(format!(
                "eligible population exhausted on {date} (expected = {expected})"
            )));
        }
        let d = r * expected / 100.0;
        out.push(d);
        expected -= d;
    }
    ratio.with_values("first_doses", out)
}
