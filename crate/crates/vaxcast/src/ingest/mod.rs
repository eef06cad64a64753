//! Offline data preparation.
//!
//! The pipeline runs: parse the clinical export ([`parse_clinical_csv`])
//! and the batched web-search exports ([`TrendsBatch::from_csv`]), repair
//! censored cells ([`repair_censoring`]), put all batches on one scale
//! via the shared reference query ([`standardize_batches`]), and sum the
//! standardized queries into the three attitude signals
//! ([`aggregate_categories`]). [`corpus_keywords`] is the side tool that
//! ranked candidate queries from a tweet corpus in the first place.

mod clinical;
mod keywords;
mod trends;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::series::DatedSeries;
use crate::Result;

pub use clinical::{clinical_from_str, parse_clinical_csv, CLINICAL_HEADER};
pub use keywords::{corpus_keywords, KeywordRow, KeywordTable};
pub use trends::{
    repair_censoring, standardize_batches, Cell, TrendsBatch, DEFAULT_REFERENCE, MAX_COLUMNS,
};

/// Bundled attitude-category word lists.
const CATEGORY_MAP_RAW: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/category_map.json"));

/// Number of query labels per attitude category.
pub const WORDS_PER_CATEGORY: usize = 12;

/// Assignment of search-query labels to the three attitude categories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryMap {
    pub positive: Vec<String>,
    pub neutral: Vec<String>,
    pub negative: Vec<String>,
}

impl CategoryMap {
    /// The map bundled with the crate (the published word lists).
    pub fn bundled() -> CategoryMap {
        CategoryMap::from_json(CATEGORY_MAP_RAW).expect("the bundled category map is valid")
    }

    /// Parses and validates a category map from JSON text.
    pub fn from_json(text: &str) -> Result<CategoryMap> {
        let map: CategoryMap = serde_json::from_str(text)
            .map_err(|e| Error::parse(e.line().max(1), e.to_string()))?;
        map.validate()?;
        Ok(map)
    }

    /// Reads and validates a category map file.
    pub fn from_path(path: &Path) -> Result<CategoryMap> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CategoryMap::from_json(&text)
    }

    /// `(category name, member labels)` in output order.
    pub fn categories(&self) -> [(&'static str, &[String]); 3] {
        [
            ("pt", &self.positive),
            ("nt", &self.neutral),
            ("ng", &self.negative),
        ]
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (name, labels) in self.categories() {
            if labels.len() != WORDS_PER_CATEGORY {
                return Err(Error::domain(format!(
                    "category `{name}` lists {} labels; exactly {WORDS_PER_CATEGORY} required",
                    labels.len()
                )));
            }
            for label in labels {
                if !seen.insert(label.as_str()) {
                    return Err(Error::domain(format!(
                        "label `{label}` appears in more than one category"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The three aggregated attitude signals, each a per-date sum of its 12
/// standardized member queries.
#[derive(Debug, Clone, PartialEq)]
pub struct AttitudeSeries {
    pub positive: DatedSeries,
    pub neutral: DatedSeries,
    pub negative: DatedSeries,
}

impl AttitudeSeries {
    /// The signals in feature-column order: `pt`, `nt`, `ng`.
    pub fn as_array(&self) -> [&DatedSeries; 3] {
        [&self.positive, &self.neutral, &self.negative]
    }
}

/// Sums the standardized query series into the three attitude signals.
///
/// Every label in the map must be present in `standardized`, and all
/// member series must cover identical dates.
pub fn aggregate_categories(
    standardized: &BTreeMap<String, DatedSeries>,
    map: &CategoryMap,
) -> Result<AttitudeSeries> {
    let mut sums = Vec::with_capacity(3);
    for (name, labels) in map.categories() {
        let mut members = Vec::with_capacity(labels.len());
        for label in labels {
            let series = standardized.get(label).ok_or_else(|| {
                Error::domain(format!(
                    "category `{name}` needs query `{label}`, which is missing from the standardized set"
                ))
            })?;
            members.push(series);
        }
        let first = members[0];
        let mut totals = vec![0.0; first.len()];
        for series in &members {
            if !series.same_dates(first) {
                return Err(Error::domain(format!(
                    "query `{}` covers different dates than `{}`; standardize batches over one range",
                    series.name(),
                    first.name()
                )));
            }
            for (t, v) in totals.iter_mut().zip(series.values()) {
                *t += v;
            }
        }
        sums.push(DatedSeries::new(first.start_date(), name, totals)?);
    }
    let mut iter = sums.into_iter();
    Ok(AttitudeSeries {
        positive: iter.next().expect("three categories"),
        neutral: iter.next().expect("three categories"),
        negative: iter.next().expect("three categories"),
    })
}
