//! Group averages, pairwise deltas and their rendering.
//!
//! Averages are exact arithmetic means of the member accuracies, rounded
//! half away from zero to two decimals. Deltas are differences of those
//! rounded values. Accuracies are converted to exact decimals through their
//! shortest round-trip representation, so `0.48` means 48/100 exactly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bench::BenchmarkName;
use crate::error::{Error, Result};

/// A value in hundredths (`34` is 0.34).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Score2(pub i64);

impl Score2 {
    pub fn hundredths(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    /// Round an accuracy to two decimals, half away from zero.
    pub fn round(value: f64) -> Result<Self> {
        let d = Decimal::from_f64(value)?;
        Ok(Score2(round_div(d.units * 100, d.scale())))
    }

    pub fn signed(self) -> String {
        if self.0 >= 0 {
            format!("+{self}")
        } else {
            self.to_string()
        }
    }

    fn parse(s: &str) -> Result<Self> {
        let v: f64 = s
            .trim()
            .trim_start_matches('+')
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("not a number: {s:?}")))?;
        Ok(Score2((v * 100.0).round() as i64))
    }
}

impl fmt::Display for Score2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

impl Serialize for Score2 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Score2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Ok(Score2((v * 100.0).round() as i64))
    }
}

/// Exact decimal `units / 10^exp`.
#[derive(Clone, Copy, Debug)]
struct Decimal {
    units: i128,
    exp: u32,
}

impl Decimal {
    fn from_f64(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite accuracy {value}"
            )));
        }
        // `{}` prints the shortest string that round-trips, never exponents.
        let text = format!("{value}");
        let (neg, digits) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.as_str()),
        };
        let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
        let exp = frac.len() as u32;
        if exp > 30 {
            return Err(Error::InvalidArgument(format!(
                "accuracy {value} has too many decimals"
            )));
        }
        let units: i128 = format!("{int}{frac}")
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("unrepresentable accuracy {value}")))?;
        Ok(Decimal {
            units: if neg { -units } else { units },
            exp,
        })
    }

    fn scale(self) -> i128 {
        10i128.pow(self.exp)
    }

    fn rescale(self, exp: u32) -> i128 {
        self.units * 10i128.pow(exp - self.exp)
    }
}

/// `num / den` rounded half away from zero (`den > 0`).
fn round_div(num: i128, den: i128) -> i64 {
    let q = num / den;
    let r = num % den;
    let q = if 2 * r.abs() >= den {
        q + num.signum()
    } else {
        q
    };
    q as i64
}

/// Mean of `values`, rounded to hundredths.
fn mean_hundredths(values: &[f64]) -> Result<Score2> {
    let decimals = values
        .iter()
        .map(|&v| Decimal::from_f64(v))
        .collect::<Result<Vec<_>>>()?;
    let exp = decimals.iter().map(|d| d.exp).max().unwrap_or(0);
    let sum: i128 = decimals.iter().map(|d| d.rescale(exp)).sum();
    let den = values.len() as i128 * 10i128.pow(exp);
    Ok(Score2(round_div(sum * 100, den)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub benchmark: BenchmarkName,
    pub accuracy: f64,
}

impl ResultRow {
    pub fn new(model: impl Into<String>, benchmark: BenchmarkName, accuracy: f64) -> Self {
        ResultRow {
            model: model.into(),
            benchmark,
            accuracy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    pub members: Vec<String>,
}

/// `minuend − subtrahend`; each operand names a group or a model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub label: String,
    pub minuend: String,
    pub subtrahend: String,
}

/// An externally reported value to check the computed report against.
/// `label` names a group (average), a comparison (delta) or a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedCell {
    pub label: String,
    pub benchmark: BenchmarkName,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub model: String,
    pub values: BTreeMap<BenchmarkName, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupAverage {
    pub name: String,
    pub members: Vec<String>,
    pub values: BTreeMap<BenchmarkName, Score2>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub label: String,
    pub minuend: String,
    pub subtrahend: String,
    /// The minuend's (rounded) value per benchmark.
    pub minuend_values: BTreeMap<BenchmarkName, Score2>,
    pub deltas: BTreeMap<BenchmarkName, Score2>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub label: String,
    pub benchmark: BenchmarkName,
    pub published: Score2,
    pub computed: Score2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: published {} but the listed values give {}",
            self.benchmark, self.label, self.published, self.computed
        )?;
        if let Some(src) = &self.source {
            write!(f, " ({src})")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ModelRow>,
    pub averages: Vec<GroupAverage>,
    pub deltas: Vec<DeltaRow>,
    #[serde(default)]
    pub discrepancies: Vec<Discrepancy>,
}

impl Report {
    /// Benchmarks present in the rows, in canonical order.
    pub fn benchmarks(&self) -> Vec<BenchmarkName> {
        let set: BTreeSet<BenchmarkName> = self
            .rows
            .iter()
            .flat_map(|r| r.values.keys().copied())
            .collect();
        set.into_iter().collect()
    }

    pub fn average(&self, group: &str, benchmark: BenchmarkName) -> Option<Score2> {
        self.averages
            .iter()
            .find(|g| g.name == group)
            .and_then(|g| g.values.get(&benchmark).copied())
    }

    pub fn delta(&self, label: &str, benchmark: BenchmarkName) -> Option<Score2> {
        self.deltas
            .iter()
            .find(|d| d.label == label)
            .and_then(|d| d.deltas.get(&benchmark).copied())
    }

    pub fn row(&self, model: &str) -> Option<&ModelRow> {
        self.rows.iter().find(|r| r.model == model)
    }
}

pub fn aggregate_results(
    rows: &[ResultRow],
    groups: &[GroupSpec],
    comparisons: &[Comparison],
    published: &[PublishedCell],
) -> Result<Report> {
    let mut model_rows: Vec<ModelRow> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for r in rows {
        let i = *index.entry(r.model.as_str()).or_insert_with(|| {
            model_rows.push(ModelRow {
                model: r.model.clone(),
                values: BTreeMap::new(),
            });
            model_rows.len() - 1
        });
        if !(0.0..=1.0).contains(&r.accuracy) {
            return Err(Error::InvalidArgument(format!(
                "accuracy {} for {} on {} is outside [0, 1]",
                r.accuracy, r.model, r.benchmark
            )));
        }
        if model_rows[i]
            .values
            .insert(r.benchmark, r.accuracy)
            .is_some()
        {
            return Err(Error::InvalidArgument(format!(
                "duplicate cell for {} on {}",
                r.model, r.benchmark
            )));
        }
    }
    let benchmarks: BTreeSet<BenchmarkName> = rows.iter().map(|r| r.benchmark).collect();

    let mut averages = Vec::with_capacity(groups.len());
    for g in groups {
        if g.members.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "group {} has no members",
                g.name
            )));
        }
        let member_rows = g
            .members
            .iter()
            .map(|m| {
                index
                    .get(m.as_str())
                    .map(|&i| &model_rows[i])
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!("unknown group member {m:?} in {}", g.name))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut values = BTreeMap::new();
        for &b in &benchmarks {
            if member_rows.iter().all(|r| !r.values.contains_key(&b)) {
                continue;
            }
            let cells = member_rows
                .iter()
                .map(|r| {
                    r.values.get(&b).copied().ok_or_else(|| Error::MissingCell {
                        model: r.model.clone(),
                        benchmark: b.to_string(),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            values.insert(b, mean_hundredths(&cells)?);
        }
        averages.push(GroupAverage {
            name: g.name.clone(),
            members: g.members.clone(),
            values,
        });
    }

    let operand = |name: &str| -> Result<BTreeMap<BenchmarkName, Score2>> {
        if let Some(g) = averages.iter().find(|g| g.name == name) {
            return Ok(g.values.clone());
        }
        let row = index.get(name).map(|&i| &model_rows[i]).ok_or_else(|| {
            Error::InvalidArgument(format!("unknown comparison operand {name:?}"))
        })?;
        row.values
            .iter()
            .map(|(&b, &v)| Score2::round(v).map(|s| (b, s)))
            .collect()
    };

    let mut deltas = Vec::with_capacity(comparisons.len());
    for c in comparisons {
        let minuend = operand(&c.minuend)?;
        let subtrahend = operand(&c.subtrahend)?;
        let mut diff = BTreeMap::new();
        for (b, m) in &minuend {
            if let Some(s) = subtrahend.get(b) {
                diff.insert(*b, Score2(m.0 - s.0));
            }
        }
        deltas.push(DeltaRow {
            label: c.label.clone(),
            minuend: c.minuend.clone(),
            subtrahend: c.subtrahend.clone(),
            minuend_values: minuend
                .into_iter()
                .filter(|(b, _)| diff.contains_key(b))
                .collect(),
            deltas: diff,
        });
    }

    let mut report = Report {
        rows: model_rows,
        averages,
        deltas,
        discrepancies: Vec::new(),
    };
    for p in published {
        let computed = if report.averages.iter().any(|g| g.name == p.label) {
            report.average(&p.label, p.benchmark)
        } else if report.deltas.iter().any(|d| d.label == p.label) {
            report.delta(&p.label, p.benchmark)
        } else if let Some(row) = report.row(&p.label) {
            row.values
                .get(&p.benchmark)
                .map(|&v| Score2::round(v))
                .transpose()?
        } else {
            return Err(Error::InvalidArgument(format!(
                "published cell refers to unknown row {:?}",
                p.label
            )));
        };
        let Some(computed) = computed else {
            return Err(Error::MissingCell {
                model: p.label.clone(),
                benchmark: p.benchmark.to_string(),
            });
        };
        let published = Score2::round(p.value)?;
        if published != computed {
            report.discrepancies.push(Discrepancy {
                label: p.label.clone(),
                benchmark: p.benchmark,
                published,
                computed,
                source: p.source.clone(),
            });
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    /// Per-model rows, then group averages, then comparisons.
    MarkdownTable,
    /// One row per benchmark; columns are groups and deltas.
    MarkdownSummary,
    Csv,
    Json,
}

pub fn render_report(report: &Report, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::MarkdownTable => Ok(render_markdown(report)),
        ReportFormat::MarkdownSummary => Ok(render_summary(report)),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::json(&e))?;
            s.push('\n');
            Ok(s)
        }
    }
}

fn md_row(out: &mut String, cells: &[String]) {
    out.push('|');
    for c in cells {
        let _ = write!(out, " {} |", c.replace('|', "\\|"));
    }
    out.push('\n');
}

fn render_notes(out: &mut String, report: &Report) {
    if report.discrepancies.is_empty() {
        return;
    }
    out.push_str("\nNotes:\n");
    for (i, d) in report.discrepancies.iter().enumerate() {
        let _ = writeln!(out, "{}. {d}", i + 1);
    }
}

fn render_markdown(report: &Report) -> String {
    let benchmarks = report.benchmarks();
    let mut out = String::new();
    let mut header = vec!["Model".to_string()];
    header.extend(benchmarks.iter().map(ToString::to_string));
    md_row(&mut out, &header);
    md_row(&mut out, &vec!["---".to_string(); header.len()]);
    for r in &report.rows {
        let mut cells = vec![r.model.clone()];
        cells.extend(benchmarks.iter().map(|b| {
            r.values
                .get(b)
                .map(|&v| {
                    Score2::round(v)
                        .map(|s| s.to_string())
                        .unwrap_or_else(|_| v.to_string())
                })
                .unwrap_or_default()
        }));
        md_row(&mut out, &cells);
    }
    for g in &report.averages {
        let mut cells = vec![format!("**{}**", g.name)];
        cells.extend(
            benchmarks
                .iter()
                .map(|b| g.values.get(b).map(ToString::to_string).unwrap_or_default()),
        );
        md_row(&mut out, &cells);
    }
    for d in &report.deltas {
        let mut cells = vec![d.label.clone()];
        cells.extend(
            benchmarks
                .iter()
                .map(|b| match (d.minuend_values.get(b), d.deltas.get(b)) {
                    (Some(m), Some(delta)) => format!("{m} ({})", delta.signed()),
                    _ => String::new(),
                }),
        );
        md_row(&mut out, &cells);
    }
    render_notes(&mut out, report);
    out
}

fn render_summary(report: &Report) -> String {
    let benchmarks = report.benchmarks();
    let mut out = String::new();
    let mut header = vec!["Task".to_string()];
    header.extend(report.averages.iter().map(|g| g.name.clone()));
    header.extend(report.deltas.iter().map(|d| format!("δ {}", d.label)));
    md_row(&mut out, &header);
    md_row(&mut out, &vec!["---".to_string(); header.len()]);
    for b in &benchmarks {
        let mut cells = vec![b.to_string()];
        cells.extend(
            report
                .averages
                .iter()
                .map(|g| g.values.get(b).map(ToString::to_string).unwrap_or_default()),
        );
        cells.extend(
            report
                .deltas
                .iter()
                .map(|d| d.deltas.get(b).map(|s| s.signed()).unwrap_or_default()),
        );
        md_row(&mut out, &cells);
    }
    render_notes(&mut out, report);
    out
}

const CSV_HEADER: [&str; 6] = ["kind", "label", "benchmark", "value", "other", "detail"];

fn render_csv(report: &Report) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &report.rows {
        if r.values.is_empty() {
            w.write_record(["model", &r.model, "", "", "", ""])
                .map_err(csv_err)?;
        }
        for (b, v) in &r.values {
            w.write_record(["row", &r.model, b.as_str(), &v.to_string(), "", ""])
                .map_err(csv_err)?;
        }
    }
    for g in &report.averages {
        for m in &g.members {
            if m.contains('|') {
                return Err(Error::InvalidArgument(format!(
                    "model name {m:?} contains '|'"
                )));
            }
        }
        w.write_record(["group", &g.name, "", "", "", &g.members.join("|")])
            .map_err(csv_err)?;
        for (b, v) in &g.values {
            w.write_record(["avg", &g.name, b.as_str(), &v.to_string(), "", ""])
                .map_err(csv_err)?;
        }
    }
    for d in &report.deltas {
        w.write_record(["comparison", &d.label, "", "", &d.minuend, &d.subtrahend])
            .map_err(csv_err)?;
        for (b, v) in &d.deltas {
            let m = d
                .minuend_values
                .get(b)
                .map(ToString::to_string)
                .unwrap_or_default();
            w.write_record(["delta", &d.label, b.as_str(), &v.to_string(), &m, ""])
                .map_err(csv_err)?;
        }
    }
    for n in &report.discrepancies {
        w.write_record([
            "note",
            &n.label,
            n.benchmark.as_str(),
            &n.computed.to_string(),
            &n.published.to_string(),
            n.source.as_deref().unwrap_or(""),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv of UTF-8 strings"))
}

/// Parse a report rendered as CSV or JSON.
pub fn parse_report(text: &str, format: ReportFormat) -> Result<Report> {
    match format {
        ReportFormat::Json => serde_json::from_str(text).map_err(|e| Error::json(&e)),
        ReportFormat::Csv => parse_csv(text),
        _ => Err(Error::InvalidArgument(
            "markdown reports are not parseable".into(),
        )),
    }
}

fn parse_csv(text: &str) -> Result<Report> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut report = Report::default();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Row {
            row,
            reason: e.to_string(),
        })?;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Row {
                row,
                reason: format!("expected {} columns", CSV_HEADER.len()),
            });
        }
        let bench = || rec[2].parse::<BenchmarkName>();
        let bad = |reason: &str| Error::Row {
            row,
            reason: reason.to_string(),
        };
        match &rec[0] {
            "model" => report.rows.push(ModelRow {
                model: rec[1].to_string(),
                values: BTreeMap::new(),
            }),
            "row" => {
                let v: f64 = rec[3].parse().map_err(|_| bad("bad accuracy"))?;
                if report.rows.last().is_none_or(|r| r.model != rec[1]) {
                    report.rows.push(ModelRow {
                        model: rec[1].to_string(),
                        values: BTreeMap::new(),
                    });
                }
                report
                    .rows
                    .last_mut()
                    .expect("pushed")
                    .values
                    .insert(bench()?, v);
            }
            "group" => report.averages.push(GroupAverage {
                name: rec[1].to_string(),
                members: rec[5]
                    .split('|')
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect(),
                values: BTreeMap::new(),
            }),
            "avg" => {
                let g = report
                    .averages
                    .iter_mut()
                    .rev()
                    .find(|g| g.name == rec[1])
                    .ok_or_else(|| bad("avg before its group line"))?;
                g.values.insert(bench()?, Score2::parse(&rec[3])?);
            }
            "comparison" => report.deltas.push(DeltaRow {
                label: rec[1].to_string(),
                minuend: rec[4].to_string(),
                subtrahend: rec[5].to_string(),
                minuend_values: BTreeMap::new(),
                deltas: BTreeMap::new(),
            }),
            "delta" => {
                let d = report
                    .deltas
                    .iter_mut()
                    .rev()
                    .find(|d| d.label == rec[1])
                    .ok_or_else(|| bad("delta before its comparison line"))?;
                let b = bench()?;
                d.deltas.insert(b, Score2::parse(&rec[3])?);
                if !rec[4].is_empty() {
                    d.minuend_values.insert(b, Score2::parse(&rec[4])?);
                }
            }
            "note" => report.discrepancies.push(Discrepancy {
                label: rec[1].to_string(),
                benchmark: bench()?,
                computed: Score2::parse(&rec[3])?,
                published: Score2::parse(&rec[4])?,
                source: Some(rec[5].to_string()).filter(|s| !s.is_empty()),
            }),
            other => return Err(bad(&format!("unknown record kind {other:?}"))),
        }
    }
    Ok(report)
}
