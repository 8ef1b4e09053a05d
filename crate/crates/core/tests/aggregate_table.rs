mod support;

use std::collections::BTreeSet;

use crossalpaca::bench::BenchmarkName::{self, Bbh, Mlqa, Mmlu, Xquad};
use crossalpaca::evalrun::{
    aggregate_results, parse_report, render_report, Comparison, GroupSpec, Report, ReportFormat,
    ResultRow, Score2,
};
use crossalpaca::Error;
use num_rational::Ratio;
use proptest::prelude::*;
use support::published_table::{
    self as table, BENCHMARKS, FULL_TABLE, LANGS, PER_LANGUAGE, SUMMARY_TABLE,
};

fn report() -> Report {
    aggregate_results(
        &table::rows(),
        &table::groups(),
        &table::comparisons(),
        &table::published(),
    )
    .unwrap()
}

fn hundredths(s: &str) -> i64 {
    let (int, frac) = s
        .trim_start_matches('-')
        .split_once('.')
        .unwrap_or((s, "0"));
    let frac = format!("{frac:0<2}");
    let v = int.parse::<i64>().unwrap() * 100 + frac[..2].parse::<i64>().unwrap();
    if s.starts_with('-') {
        -v
    } else {
        v
    }
}

/// Rational mean of two-decimal values, rounded half away from zero.
fn oracle_mean(values: &[f64]) -> i64 {
    let sum: i64 = values.iter().map(|v| hundredths(&v.to_string())).sum();
    Ratio::new(sum, values.len() as i64).round().to_integer()
}

fn family_values(family: &str, bench: usize) -> Vec<f64> {
    LANGS
        .iter()
        .map(|l| {
            let name = format!("{l}-{family}");
            PER_LANGUAGE.iter().find(|(m, _)| *m == name).unwrap().1[bench]
        })
        .collect()
}

#[test]
fn averages_match_rational_oracle() {
    let r = report();
    for (i, &b) in BENCHMARKS.iter().enumerate() {
        for family in ["Alpaca", "CrossAlpaca"] {
            let expected = oracle_mean(&family_values(family, i));
            assert_eq!(
                r.average(&format!("avg-{family}"), b),
                Some(Score2(expected)),
                "{family} {b}"
            );
        }
        let delta = oracle_mean(&family_values("CrossAlpaca", i))
            - oracle_mean(&family_values("Alpaca", i));
        assert_eq!(
            r.delta("avg-CrossAlpaca vs avg-Alpaca", b),
            Some(Score2(delta))
        );
    }
}

#[test]
fn mlqa_and_xquad_cross_rows() {
    let r = report();
    assert_eq!(r.average("avg-Alpaca", Mlqa).unwrap().to_string(), "0.34");
    assert_eq!(
        r.average("avg-CrossAlpaca", Mlqa).unwrap().to_string(),
        "0.64"
    );
    assert_eq!(
        r.delta("avg-CrossAlpaca vs avg-Alpaca", Mlqa)
            .unwrap()
            .signed(),
        "+0.30"
    );
    assert_eq!(
        r.average("avg-CrossAlpaca", Xquad).unwrap().to_string(),
        "0.65"
    );
    // 0.38 + 0.16 + 0.32 + 0.33 + 0.39 = 1.58, and 1.58 / 5 = 0.316.
    assert_eq!(r.average("avg-Alpaca", Xquad).unwrap().to_string(), "0.32");
    assert_eq!(
        r.delta("en-Alpaca vs avg-Alpaca", Mlqa).unwrap().signed(),
        "-0.55"
    );
    assert_eq!(
        r.delta("en-Alpaca vs avg-CrossAlpaca", Xquad)
            .unwrap()
            .signed(),
        "-0.22"
    );
}

#[test]
fn inconsistent_published_cells_are_flagged() {
    let r = report();
    let flagged: BTreeSet<(String, BenchmarkName, String)> = r
        .discrepancies
        .iter()
        .map(|d| (d.label.clone(), d.benchmark, d.source.clone().unwrap()))
        .collect();
    let f = |label: &str, b, src: &str| (label.to_string(), b, src.to_string());
    let expected: BTreeSet<_> = [
        f("avg-Alpaca", Xquad, FULL_TABLE),
        f("avg-Alpaca", Mmlu, FULL_TABLE),
        f("avg-CrossAlpaca", Mmlu, FULL_TABLE),
        f("avg-CrossAlpaca", Bbh, FULL_TABLE),
        f("en-Alpaca vs avg-Alpaca", Xquad, FULL_TABLE),
        f("en-Alpaca vs avg-Alpaca", Mmlu, FULL_TABLE),
        f("en-Alpaca vs avg-CrossAlpaca", Mmlu, FULL_TABLE),
        f("en-Alpaca vs avg-CrossAlpaca", Bbh, FULL_TABLE),
        f("avg-CrossAlpaca vs avg-Alpaca", Xquad, FULL_TABLE),
        f("avg-CrossAlpaca vs avg-Alpaca", Bbh, FULL_TABLE),
        f("avg-CrossAlpaca vs avg-Alpaca", Xquad, SUMMARY_TABLE),
        f("avg-CrossAlpaca vs avg-Alpaca", Bbh, SUMMARY_TABLE),
    ]
    .into_iter()
    .collect();
    assert_eq!(flagged, expected);
    let md = render_report(&r, ReportFormat::MarkdownTable).unwrap();
    assert!(md.contains(
        "XQUAD avg-CrossAlpaca vs avg-Alpaca: published 0.30 but the listed values give 0.33"
    ));
    assert!(md.contains("MMLU avg-Alpaca: published 0.24 but the listed values give 0.22"));
}

#[test]
fn markdown_matches_golden_file() {
    let r = report();
    assert_eq!(
        render_report(&r, ReportFormat::MarkdownTable).unwrap(),
        include_str!("golden/published_report.md")
    );
    assert_eq!(
        render_report(&r, ReportFormat::MarkdownSummary).unwrap(),
        include_str!("golden/published_summary.md")
    );
}

#[test]
fn json_and_csv_round_trip() {
    let r = report();
    for format in [ReportFormat::Json, ReportFormat::Csv] {
        let once = render_report(&r, format).unwrap();
        let parsed = parse_report(&once, format).unwrap();
        assert_eq!(parsed, r, "{format:?}");
        assert_eq!(render_report(&parsed, format).unwrap(), once, "{format:?}");
    }
}

#[test]
fn single_row_csv() {
    let r = aggregate_results(
        &[ResultRow::new("de-CrossAlpaca", Xquad, 0.67)],
        &[],
        &[],
        &[],
    )
    .unwrap();
    let csv = render_report(&r, ReportFormat::Csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines,
        vec![
            "kind,label,benchmark,value,other,detail",
            "row,de-CrossAlpaca,XQUAD,0.67,,"
        ]
    );
}

#[test]
fn missing_member_cell_is_an_error() {
    let rows = vec![
        ResultRow::new("a", Mlqa, 0.5),
        ResultRow::new("a", Xquad, 0.5),
        ResultRow::new("b", Mlqa, 0.5),
    ];
    let groups = vec![GroupSpec {
        name: "g".into(),
        members: vec!["a".into(), "b".into()],
    }];
    match aggregate_results(&rows, &groups, &[], &[]) {
        Err(Error::MissingCell { model, benchmark }) => {
            assert_eq!((model.as_str(), benchmark.as_str()), ("b", "XQUAD"))
        }
        other => panic!("{other:?}"),
    }
    let bad = vec![Comparison {
        label: "x".into(),
        minuend: "nobody".into(),
        subtrahend: "a".into(),
    }];
    assert!(aggregate_results(&rows[..2], &[], &bad, &[]).is_err());
}

proptest! {
    #[test]
    fn averages_agree_with_oracle_on_random_tables(values in prop::collection::vec(0u32..=100, 1..12)) {
        let accs: Vec<f64> = values.iter().map(|&v| v as f64 / 100.0).collect();
        let rows: Vec<ResultRow> = accs.iter().enumerate().map(|(i, &a)| ResultRow::new(format!("m{i}"), Bbh, a)).collect();
        let groups = vec![GroupSpec { name: "all".into(), members: (0..accs.len()).map(|i| format!("m{i}")).collect() }];
        let r = aggregate_results(&rows, &groups, &[], &[]).unwrap();
        prop_assert_eq!(r.average("all", Bbh), Some(Score2(oracle_mean(&accs))));
    }
}
