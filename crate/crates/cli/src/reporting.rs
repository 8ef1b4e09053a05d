//! `report`: render the results store as tables and plot series.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use crossalpaca::bench::BenchmarkName;
use crossalpaca::evalrun::{aggregate_results, render_report, Report, ReportFormat, ResultRow};
use crossalpaca::{Error, Result};

use crate::config::PipelineConfig;
use crate::evaluate::{read_store, store_dir, StoreEntry};

pub struct ReportOutputs {
    pub report: Report,
    pub files: Vec<PathBuf>,
}

/// Pick one store entry per (model, benchmark). When a cell was evaluated
/// under several configurations, a preferred hash wins; otherwise the most
/// recently written file does.
pub fn select_cells(
    entries: &[(PathBuf, StoreEntry)],
    preferred: &BTreeSet<String>,
) -> Vec<StoreEntry> {
    let mut by_cell: BTreeMap<(String, BenchmarkName), Vec<&(PathBuf, StoreEntry)>> =
        BTreeMap::new();
    for e in entries {
        by_cell
            .entry((e.1.model.clone(), e.1.benchmark))
            .or_default()
            .push(e);
    }
    let mut out = Vec::new();
    for ((model, bench), candidates) in by_cell {
        let chosen = match candidates
            .iter()
            .find(|c| preferred.contains(&c.1.config_hash))
        {
            Some(c) => *c,
            None => {
                let newest = candidates
                    .iter()
                    .max_by_key(|c| (modified(&c.0), c.0.clone()))
                    .expect("non-empty group");
                if candidates.len() > 1 {
                    log::warn!(
                        "{model} on {bench} has {} results under different configurations; using {}",
                        candidates.len(),
                        newest.0.display()
                    );
                }
                *newest
            }
        };
        out.push(chosen.1.clone());
    }
    out
}

fn modified(path: &Path) -> SystemTime {
    fs::metadata(path)
        .and_then(|m| m.modified())
        .unwrap_or(SystemTime::UNIX_EPOCH)
}

/// Rows in first-appearance order of the configured groups, then any
/// remaining models sorted by id.
fn ordered_rows(cells: &[StoreEntry], config: &PipelineConfig) -> Vec<ResultRow> {
    let mut order: Vec<String> = Vec::new();
    let mut push = |m: &str| {
        if !order.iter().any(|o| o == m) {
            order.push(m.to_string());
        }
    };
    if let Some(r) = &config.report.reference_model {
        push(r);
    }
    for g in &config.report.groups {
        for m in &g.members {
            push(m);
        }
    }
    let models: BTreeSet<&str> = cells.iter().map(|c| c.model.as_str()).collect();
    for m in models {
        push(m);
    }
    let mut rows = Vec::new();
    for model in &order {
        let mut mine: Vec<&StoreEntry> = cells.iter().filter(|c| &c.model == model).collect();
        mine.sort_by_key(|c| c.benchmark);
        rows.extend(
            mine.into_iter()
                .map(|c| ResultRow::new(c.model.clone(), c.benchmark, c.accuracy)),
        );
    }
    rows
}

pub fn cmd_report(
    config: &PipelineConfig,
    preferred_hashes: &BTreeSet<String>,
) -> Result<ReportOutputs> {
    let dir = store_dir(config);
    let entries = if dir.exists() {
        read_store(&dir)?
    } else {
        Vec::new()
    };
    if entries.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "results store {} is empty",
            dir.display()
        )));
    }
    let cells = select_cells(&entries, preferred_hashes);
    let rows = ordered_rows(&cells, config);
    let r = &config.report;
    let report = aggregate_results(&rows, &r.groups, &r.comparisons, &r.published)?;
    for d in &report.discrepancies {
        log::warn!("{d}");
    }

    let out = &config.output_dir;
    let mut files = Vec::new();
    for (name, format) in [
        ("report.md", ReportFormat::MarkdownTable),
        ("summary.md", ReportFormat::MarkdownSummary),
        ("report.csv", ReportFormat::Csv),
        ("report.json", ReportFormat::Json),
    ] {
        let path = out.join(name);
        write_text(&path, &render_report(&report, format)?)?;
        files.push(path);
    }
    let path = out.join("series.csv");
    write_text(&path, &render_series(&report, r.reference_model.as_deref()))?;
    files.push(path);
    Ok(ReportOutputs { report, files })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
enum SeriesX {
    Scale(usize),
    Direction(String),
}

/// Recognize `<lang>-crossalpaca-<N>` and `<lang>-crossalpaca-<dir>-only`
/// model ids (case-insensitive).
fn series_point(model: &str) -> Option<(String, SeriesX)> {
    let lower = model.to_ascii_lowercase();
    let (lang, rest) = lower.split_once("-crossalpaca-")?;
    if lang.is_empty() {
        return None;
    }
    if let Ok(n) = rest.parse::<usize>() {
        return Some((lang.to_string(), SeriesX::Scale(n)));
    }
    let dir = rest.strip_suffix("-only")?;
    matches!(dir, "en_x" | "x_en").then(|| (lang.to_string(), SeriesX::Direction(dir.to_string())))
}

/// Wide CSV for plotting: one row per (series, language, x), one column per
/// benchmark. The reference model, when present, is emitted as its own row.
pub fn render_series(report: &Report, reference_model: Option<&str>) -> String {
    let benchmarks = report.benchmarks();
    let mut out = String::from("series,language,x");
    for b in &benchmarks {
        out.push(',');
        out.push_str(b.as_str());
    }
    out.push('\n');
    let cells = |values: &BTreeMap<BenchmarkName, f64>| -> String {
        benchmarks
            .iter()
            .map(|b| values.get(b).map(f64::to_string).unwrap_or_default())
            .collect::<Vec<_>>()
            .join(",")
    };

    let mut points: Vec<(SeriesX, String, &BTreeMap<BenchmarkName, f64>)> = report
        .rows
        .iter()
        .filter_map(|r| series_point(&r.model).map(|(lang, x)| (x, lang, &r.values)))
        .collect();
    points.sort_by(|a, b| {
        let kind = |x: &SeriesX| matches!(x, SeriesX::Direction(_));
        (kind(&a.0), &a.1, &a.0).cmp(&(kind(&b.0), &b.1, &b.0))
    });
    for (x, lang, values) in points {
        let (series, x) = match x {
            SeriesX::Scale(n) => ("scale", n.to_string()),
            SeriesX::Direction(d) => ("direction", d),
        };
        out.push_str(&format!("{series},{lang},{x},{}\n", cells(values)));
    }
    if let Some(row) = reference_model.and_then(|m| report.row(m)) {
        out.push_str(&format!(
            "reference,{},,{}\n",
            row.model,
            cells(&row.values)
        ));
    }
    out
}
