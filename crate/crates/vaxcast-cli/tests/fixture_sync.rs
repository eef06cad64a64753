//! Keeps the bundled synthetic dataset and its generator in lockstep.
//!
//! The committed files under `data/` are regenerated in memory on every run
//! and compared byte-for-byte, so the fixture can never silently drift from
//! the code that describes it. Run with `BLESS=1` to rewrite the committed
//! files after an intentional generator change.
//!
//! The dataset imitates the real inputs' texture: a daily clinical count
//! export whose implied ratio follows a rising → steady → falling path with
//! a weekly wave and autocorrelated noise, plus nine batched web-search
//! exports (four queries and the shared reference each, integer 0–100
//! scale, `"<1"` censoring) whose latent attitude signals lead the ratio by
//! one day.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const N_DAYS: usize = 219;
const GEN_SEED: u64 = 20_210_102;
const TAU: f64 = std::f64::consts::TAU;

/// The 36 query labels in category order (positive, neutral, negative),
/// matching the bundled category map.
const QUERIES: [&str; 36] = [
    // positive
    "vaccine available",
    "vaccine cdc",
    "vaccine near me",
    "vaccinate child",
    "vaccine registration",
    "vaccine doses",
    "vaccine appointment",
    "second dose",
    "vaccine booking",
    "first dose",
    "vaccine location",
    "vaccinated",
    // neutral
    "vaccine update",
    "Moderna",
    "vaccine safety",
    "vaccine used",
    "vaccine rate",
    "vaccine information",
    "vaccine last",
    "vaccine impact",
    "current vaccination",
    "vaccine feeling",
    "Pfizer",
    "vaccine effectiveness",
    // negative
    "vaccine fever",
    "vaccine variant",
    "vaccine pain",
    "vaccine restriction",
    "vaccine headache",
    "vaccine reaction",
    "vaccine side effect",
    "vaccine adverse",
    "vaccine death",
    "vaccine risk",
    "vaccine cost",
    "vaccine blood clot",
];

fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 1, 2).expect("valid date")
}

fn date_at(t: usize) -> NaiveDate {
    start_date() + chrono::Days::new(t as u64)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Shared latent uptake path: rising to day 89, a steady wobble to day 149,
/// falling after. Both the clinical ratio and the attitude signals are built
/// on this path.
fn base_trend(t: usize) -> f64 {
    if t < 90 {
        0.8 + 2.6 * t as f64 / 90.0
    } else if t < 150 {
        3.4
    } else {
        3.4 - 2.0 * (t - 150) as f64 / 69.0
    }
}

/// Latent category attitude signals (positive, neutral, negative). Positive
/// and negative attitudes track tomorrow's uptake path (with opposite sign),
/// so the one-day-lagged web features genuinely lead the clinical ratio;
/// neutral carries only seasonality. Each adds a slow seasonal wave and a
/// stationary AR(1), all comfortably inside (0, 100).
fn attitude_latents() -> [Vec<f64>; 3] {
    let specs: [(f64, f64, f64, f64, f64, f64, f64, u64); 3] = [
        (26.0, 9.0, 2.5, 90.0, 1.1, 0.85, 1.2, 1),
        (45.0, 0.0, 6.0, 60.0, 0.3, 0.9, 1.8, 2),
        (62.0, -8.0, 2.0, 75.0, 2.0, 0.85, 1.1, 3),
    ];
    specs.map(|(mean, lead, amp, period, phase, phi, sigma, stream)| {
        let mut rng = ChaCha8Rng::seed_from_u64(GEN_SEED + stream);
        let mut ar = 0.0f64;
        (0..N_DAYS)
            .map(|t| {
                ar = phi * ar + sigma * normal(&mut rng);
                let tomorrow = base_trend((t + 1).min(N_DAYS - 1));
                mean + lead * tomorrow + amp * (TAU * t as f64 / period + phase).sin() + ar
            })
            .collect()
    })
}

/// Latent daily ratio: the shared uptake path, a weekly wave the attitude
/// signals do not carry, and AR(1) noise. The clinical models see the weekly
/// structure; the web learners see the path through the attitudes — neither
/// side dominates, so the ensemble comparison stays interesting.
fn ratio_latent() -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(GEN_SEED);
    let mut e = 0.0f64;
    (0..N_DAYS)
        .map(|t| {
            let weekly = 0.18 * (TAU * t as f64 / 7.0 + 0.6).sin();
            e = 0.6 * e + 0.07 * normal(&mut rng);
            (base_trend(t) + weekly + e).max(0.05)
        })
        .collect()
}

/// Integer daily dose counts whose implied ratio (under the bundled
/// population parameters) reproduces the latent path up to rounding.
fn clinical_counts(ratio: &[f64]) -> Vec<u64> {
    // Must match data/config.json: base population 9.3M, 7.1% temporary
    // residents, divide-complement eligibility, no prior doses.
    let eligible = 9_300_000.0 / (1.0 - 0.071);
    let mut expected = eligible;
    ratio
        .iter()
        .map(|r| {
            let doses = (r * expected / 100.0).round().max(0.0);
            expected -= doses;
            doses as u64
        })
        .collect()
}

fn clinical_csv(counts: &[u64]) -> String {
    let mut out = String::from("date,first_doses\n");
    for (t, doses) in counts.iter().enumerate() {
        writeln!(out, "{},{doses}", date_at(t)).unwrap();
    }
    out
}

/// Per-query popularity weight. Most queries are light, the first query of
/// each category is heavy enough to out-peak the reference (so batch scales
/// genuinely differ), and the last query of each category is faint enough
/// to fall below the censoring floor on weak days.
fn query_weight(q: usize, rng: &mut ChaCha8Rng) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    let u = z.abs().min(3.0) / 3.0;
    match q % 12 {
        0 => 1.05,
        11 => 0.012,
        _ => 0.05 + 0.25 * u,
    }
}

/// Latent series for all 36 queries: weight × category latent × small
/// multiplicative noise.
fn query_latents(attitudes: &[Vec<f64>; 3]) -> Vec<Vec<f64>> {
    (0..QUERIES.len())
        .map(|q| {
            let mut rng = ChaCha8Rng::seed_from_u64(GEN_SEED + 100 + q as u64);
            let weight = query_weight(q, &mut rng);
            let category = &attitudes[q / 12];
            (0..N_DAYS)
                .map(|t| (weight * category[t] * (1.0 + 0.05 * normal(&mut rng))).max(0.0))
                .collect()
        })
        .collect()
}

/// Shared reference query, identical latent in every batch.
fn joker_latent() -> Vec<f64> {
    (0..N_DAYS)
        .map(|t| 60.0 + 5.0 * (TAU * t as f64 / 30.0).sin())
        .collect()
}

/// Batch membership: query `q` goes to batch `q % 9`, giving nine batches
/// of four queries with categories interleaved.
fn batch_members(batch: usize) -> Vec<usize> {
    (0..QUERIES.len()).filter(|q| q % 9 == batch).collect()
}

/// One batch export: every column rescaled by the batch-wide maximum to the
/// 0–100 integer scale, sub-1 values written as the `"<1"` censoring marker,
/// reference column last.
fn trends_csv(batch: usize, queries: &[Vec<f64>], joker: &[f64]) -> String {
    let members = batch_members(batch);
    let mut columns: Vec<(&str, &[f64])> = members
        .iter()
        .map(|&q| (QUERIES[q], queries[q].as_slice()))
        .collect();
    columns.push(("Joker", joker));

    let peak = columns
        .iter()
        .flat_map(|(_, values)| values.iter().copied())
        .fold(0.0f64, f64::max);
    let scale = 100.0 / peak;

    let mut out = String::from("date");
    for (name, _) in &columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for t in 0..N_DAYS {
        out.push_str(&date_at(t).to_string());
        for (_, values) in &columns {
            let scaled = values[t] * scale;
            if scaled < 1.0 {
                out.push_str(",<1");
            } else {
                write!(out, ",{}", scaled.round() as u32).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

/// Asserts one committed fixture matches its regenerated contents
/// (rewriting it first when `BLESS=1` is set).
fn assert_fixture(name: &str, expected: &str) {
    let path = data_dir().join(name);
    if std::env::var_os("BLESS").is_some() {
        std::fs::write(&path, expected).unwrap();
    }
    let actual = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    assert_eq!(
        actual, expected,
        "{name} is out of sync with its generator; run with BLESS=1 to regenerate"
    );
}

#[test]
fn bundled_dataset_matches_its_generator() {
    let attitudes = attitude_latents();
    let ratio = ratio_latent();
    let counts = clinical_counts(&ratio);
    assert_eq!(counts.len(), N_DAYS);
    assert_fixture("clinical.csv", &clinical_csv(&counts));

    let queries = query_latents(&attitudes);
    let joker = joker_latent();
    let mut censored_total = 0usize;
    for batch in 0..9 {
        let csv = trends_csv(batch, &queries, &joker);
        censored_total += csv.matches("<1").count();
        assert_fixture(&format!("trends_{}.csv", batch + 1), &csv);
    }
    // The censoring repair path must actually run on the bundled data.
    assert!(
        censored_total > 0,
        "expected at least one censored cell in the bundled batches"
    );
}

#[test]
fn every_query_lands_in_exactly_one_batch() {
    let mut seen = vec![0usize; QUERIES.len()];
    for batch in 0..9 {
        let members = batch_members(batch);
        assert_eq!(members.len(), 4);
        for q in members {
            seen[q] += 1;
        }
    }
    assert!(seen.iter().all(|&n| n == 1));
}
