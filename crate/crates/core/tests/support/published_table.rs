//! Published per-language accuracies for the Alpaca and CrossAlpaca model
//! families, and the summary cells printed next to them.

use crossalpaca::bench::BenchmarkName::{self, Bbh, Mlqa, Mmlu, Xquad};
use crossalpaca::evalrun::{Comparison, GroupSpec, PublishedCell, ResultRow};

pub const BENCHMARKS: [BenchmarkName; 4] = [Mlqa, Xquad, Mmlu, Bbh];

/// (model, [MLQA, XQUAD, MMLU, BBH])
pub const PER_LANGUAGE: &[(&str, [f64; 4])] = &[
    ("en-Alpaca", [0.89, 0.87, 0.42, 0.30]),
    ("zh-Alpaca", [0.48, 0.38, 0.26, 0.25]),
    ("ar-Alpaca", [0.17, 0.16, 0.18, 0.20]),
    ("it-Alpaca", [0.35, 0.32, 0.21, 0.25]),
    ("es-Alpaca", [0.32, 0.33, 0.19, 0.24]),
    ("de-Alpaca", [0.36, 0.39, 0.24, 0.25]),
    ("zh-CrossAlpaca", [0.70, 0.69, 0.36, 0.28]),
    ("ar-CrossAlpaca", [0.56, 0.60, 0.25, 0.25]),
    ("it-CrossAlpaca", [0.64, 0.65, 0.28, 0.27]),
    ("es-CrossAlpaca", [0.65, 0.64, 0.28, 0.28]),
    ("de-CrossAlpaca", [0.64, 0.67, 0.32, 0.29]),
];

pub const LANGS: [&str; 5] = ["zh", "ar", "it", "es", "de"];

pub const FULL_TABLE: &str = "full results table";
pub const SUMMARY_TABLE: &str = "summary table";

/// (label, source, [MLQA, XQUAD, MMLU, BBH])
pub const PUBLISHED: &[(&str, &str, [f64; 4])] = &[
    ("avg-Alpaca", FULL_TABLE, [0.34, 0.31, 0.24, 0.24]),
    ("avg-CrossAlpaca", FULL_TABLE, [0.64, 0.65, 0.32, 0.28]),
    (
        "en-Alpaca vs avg-Alpaca",
        FULL_TABLE,
        [-0.55, -0.56, -0.18, -0.06],
    ),
    (
        "en-Alpaca vs avg-CrossAlpaca",
        FULL_TABLE,
        [-0.25, -0.22, -0.10, -0.20],
    ),
    (
        "avg-CrossAlpaca vs avg-Alpaca",
        FULL_TABLE,
        [0.30, 0.34, 0.08, 0.04],
    ),
    (
        "avg-CrossAlpaca vs avg-Alpaca",
        SUMMARY_TABLE,
        [0.30, 0.30, 0.08, 0.04],
    ),
];

pub fn rows() -> Vec<ResultRow> {
    PER_LANGUAGE
        .iter()
        .flat_map(|(model, values)| {
            BENCHMARKS
                .iter()
                .zip(values)
                .map(|(&b, &v)| ResultRow::new(*model, b, v))
        })
        .collect()
}

pub fn groups() -> Vec<GroupSpec> {
    ["Alpaca", "CrossAlpaca"]
        .iter()
        .map(|family| GroupSpec {
            name: format!("avg-{family}"),
            members: LANGS.iter().map(|l| format!("{l}-{family}")).collect(),
        })
        .collect()
}

pub fn comparisons() -> Vec<Comparison> {
    let c = |label: &str, minuend: &str, subtrahend: &str| Comparison {
        label: label.into(),
        minuend: minuend.into(),
        subtrahend: subtrahend.into(),
    };
    vec![
        c("en-Alpaca vs avg-Alpaca", "avg-Alpaca", "en-Alpaca"),
        c(
            "en-Alpaca vs avg-CrossAlpaca",
            "avg-CrossAlpaca",
            "en-Alpaca",
        ),
        c(
            "avg-CrossAlpaca vs avg-Alpaca",
            "avg-CrossAlpaca",
            "avg-Alpaca",
        ),
    ]
}

pub fn published() -> Vec<PublishedCell> {
    PUBLISHED
        .iter()
        .flat_map(|(label, source, values)| {
            BENCHMARKS.iter().zip(values).map(|(&b, &v)| PublishedCell {
                label: label.to_string(),
                benchmark: b,
                value: v,
                source: Some(source.to_string()),
            })
        })
        .collect()
}
