//! Batch forecasting toolkit for daily vaccination-uptake ratios.
//!
//! The crate covers the full pipeline behind a stacked clinical/web-signal
//! forecaster:
//!
//! * [`series`] — dated daily series, the dose-to-expectation ratio transform
//!   and its inverse.
//! * [`diagnostics`] — ACF/PACF, an augmented Dickey–Fuller unit-root test and
//!   Kendall rank-correlation trend segmentation.
//! * [`arima`] — exact Gaussian maximum-likelihood ARIMA estimation via a
//!   Kalman filter, information criteria, order selection and iterated
//!   forecasts.
//! * [`features`] / [`learn`] — lagged design matrices over web-search
//!   attitude signals and four regression learners (OLS, LASSO, gradient
//!   boosting, random forest) with k-fold cross-validation.
//! * [`stack`] — combination of one clinical and one web model by ordinary
//!   least squares or by an epsilon-insensitive (SVR-style) ridge objective.
//! * [`eval`] — holdout protocol, RMSE scoring and the full model-comparison
//!   table.
//! * [`ingest`] — clinical CSV parsing, batched web-search query ingestion
//!   (censoring repair, cross-batch standardization, category aggregation)
//!   and corpus keyword extraction.
//!
//! Fitting and model selection are data-parallel via rayon when the default
//! `parallel` feature is enabled; the sequential fallback produces
//! bit-identical results.

pub mod arima;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod eval;
mod exec;
pub mod features;
pub mod ingest;
pub mod learn;
mod linalg;
pub mod series;
pub mod sim;
pub mod stack;

pub use error::Error;
pub use series::DatedSeries;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
