//! Report rendering from a finished run directory: a score matrix, the
//! full aggregate series, or standalone SVG boxplots.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::store::{self, format_float, PairRow, RunSummary};
use super::RunnerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

impl ReportFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Csv => "report.csv",
            ReportFormat::Json => "report.json",
            ReportFormat::Svg => "report.svg",
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Svg => "svg",
        })
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        match text {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "svg" => Ok(ReportFormat::Svg),
            other => Err(format!("unknown report format '{other}' (csv, json, svg)")),
        }
    }
}

/// Render a report for `summary` without touching the filesystem.
pub fn render_report(summary: &RunSummary, format: ReportFormat) -> Result<Vec<u8>, RunnerError> {
    match format {
        ReportFormat::Csv => render_matrix_csv(summary),
        ReportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(summary)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        ReportFormat::Svg => Ok(render_boxplots_svg(summary).into_bytes()),
    }
}

/// Read a run directory's summary, render the report, and write it next
/// to `scores.csv`. Returns the written path.
pub fn write_report(run_dir: &Path, format: ReportFormat) -> Result<PathBuf, RunnerError> {
    let summary = store::read_summary(run_dir)?;
    let bytes = render_report(&summary, format)?;
    let path = run_dir.join(format.file_name());
    std::fs::write(&path, bytes)?;
    Ok(path)
}

/// The score matrix: one row per (backend, model), one column per
/// evaluated scenario, cells holding the mean over per-instruction means.
fn render_matrix_csv(summary: &RunSummary) -> Result<Vec<u8>, RunnerError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["backend".to_string(), "model".to_string()];
    header.extend(
        summary
            .partitions
            .iter()
            .map(|row| format!("{}/{}/{}", row.environment, row.partition, row.phase)),
    );
    writer.write_record(&header)?;

    let mut row = vec![
        summary.provenance.backend.clone(),
        summary.provenance.model.clone(),
    ];
    row.extend(summary.partitions.iter().map(|partition| format_float(partition.mean)));
    writer.write_record(&row)?;

    writer
        .into_inner()
        .map_err(|err| RunnerError::Config(format!("flushing report.csv: {err}")))
}

const PLOT_TOP: f64 = 30.0;
const PLOT_BOTTOM: f64 = 290.0;
const SLOT_WIDTH: f64 = 110.0;
const BOX_WIDTH: f64 = 44.0;
const MARGIN_LEFT: f64 = 70.0;

/// One Tukey boxplot per evaluated scenario, whiskers at the extreme
/// per-instruction means. Pure static SVG, no scripts or external assets.
fn render_boxplots_svg(summary: &RunSummary) -> String {
    let groups = &summary.partitions;
    let width = MARGIN_LEFT + SLOT_WIDTH * groups.len().max(1) as f64 + 30.0;
    let height = PLOT_BOTTOM + 70.0;
    let y = |score: f64| PLOT_BOTTOM - score.clamp(0.0, 1.0) * (PLOT_BOTTOM - PLOT_TOP);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width} {height}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{MARGIN_LEFT}\" y=\"18\" font-size=\"14\">Mean score per instruction, \
         grouped by scenario ({} / {})</text>\n",
        escape(&summary.provenance.backend),
        escape(&summary.provenance.model),
    ));

    // Axis and horizontal gridlines at each quarter.
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let ty = y(tick);
        svg.push_str(&format!(
            "  <line x1=\"{MARGIN_LEFT}\" y1=\"{ty}\" x2=\"{}\" y2=\"{ty}\" \
             stroke=\"#ddd\"/>\n",
            width - 20.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{tick}</text>\n",
            MARGIN_LEFT - 8.0,
            ty + 4.0
        ));
    }

    // Whiskers span the observed extremes of the per-instruction means.
    for (index, group) in groups.iter().enumerate() {
        let center = MARGIN_LEFT + SLOT_WIDTH * (index as f64 + 0.5);
        let half = BOX_WIDTH / 2.0;
        let (low, high) = group_extremes(&summary.pairs, group.scenario_key());
        let (box_top, box_bottom) = (y(group.q75), y(group.q25));
        svg.push_str(&format!(
            "  <line x1=\"{center}\" y1=\"{}\" x2=\"{center}\" y2=\"{}\" stroke=\"black\"/>\n",
            y(high),
            y(low)
        ));
        for cap in [low, high] {
            svg.push_str(&format!(
                "  <line x1=\"{x1}\" y1=\"{cy}\" x2=\"{x2}\" y2=\"{cy}\" stroke=\"black\"/>\n",
                cy = y(cap),
                x1 = center - half / 2.0,
                x2 = center + half / 2.0
            ));
        }
        svg.push_str(&format!(
            "  <rect class=\"box\" x=\"{}\" y=\"{box_top}\" width=\"{BOX_WIDTH}\" \
             height=\"{}\" fill=\"#9ecae1\" stroke=\"black\"/>\n",
            center - half,
            (box_bottom - box_top).max(0.5)
        ));
        svg.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" \
             stroke-width=\"2\"/>\n",
            center - half,
            y(group.median),
            center + half,
            y(group.median)
        ));
        svg.push_str(&format!(
            "  <circle cx=\"{center}\" cy=\"{}\" r=\"3\" fill=\"black\"/>\n",
            y(group.mean)
        ));
        svg.push_str(&format!(
            "  <text x=\"{center}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            PLOT_BOTTOM + 20.0,
            escape(&format!("{}/{}", group.environment, group.partition))
        ));
        svg.push_str(&format!(
            "  <text x=\"{center}\" y=\"{}\" text-anchor=\"middle\" fill=\"#555\">{}</text>\n",
            PLOT_BOTTOM + 36.0,
            group.phase
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

impl super::store::PartitionRow {
    fn scenario_key(&self) -> (&str, &str, crate::grid::Phase) {
        (&self.environment, &self.partition, self.phase)
    }
}

fn group_extremes(pairs: &[PairRow], key: (&str, &str, crate::grid::Phase)) -> (f64, f64) {
    let mut low = f64::INFINITY;
    let mut high = f64::NEG_INFINITY;
    for pair in pairs {
        if (pair.environment.as_str(), pair.partition.as_str(), pair.phase) == key {
            low = low.min(pair.mean);
            high = high.max(pair.mean);
        }
    }
    if low.is_infinite() {
        (0.0, 0.0)
    } else {
        (low, high)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Phase;
    use crate::runner::store::{PartitionRow, Provenance};

    fn fixture() -> RunSummary {
        let pair = |partition: &str, id: &str, mean: f64| PairRow {
            environment: "ant-maze".into(),
            partition: partition.into(),
            phase: Phase::Whole,
            instruction_id: id.into(),
            author: "canonical".into(),
            queries: 4,
            mean,
            std: 0.0,
        };
        let partition = |label: &str, mean: f64| PartitionRow {
            environment: "ant-maze".into(),
            partition: label.into(),
            phase: Phase::Whole,
            instructions: 2,
            mean,
            std: 0.1,
            median: mean,
            q25: mean - 0.05,
            q75: mean + 0.05,
            iqr: 0.1,
        };
        RunSummary {
            provenance: Provenance {
                config_sha256: "00".into(),
                backend: "echo".into(),
                model: "offline".into(),
                queries_per_pair: 4,
                base_seed: 0,
                record_count: 16,
            },
            pairs: vec![
                pair("I", "a", 0.6),
                pair("I", "b", 0.8),
                pair("IV", "a", 0.4),
                pair("IV", "b", 1.0),
            ],
            partitions: vec![partition("I", 0.7), partition("IV", 0.7)],
        }
    }

    #[test]
    fn csv_matrix_has_one_column_per_scenario() {
        let bytes = render_report(&fixture(), ReportFormat::Csv).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "backend,model,ant-maze/I/whole,ant-maze/IV/whole"
        );
        assert_eq!(lines.next().unwrap(), "echo,offline,0.7,0.7");
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn json_report_round_trips_to_the_same_summary() {
        let summary = fixture();
        let bytes = render_report(&summary, ReportFormat::Json).unwrap();
        let back: RunSummary = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, summary);
    }

    #[test]
    fn svg_draws_one_box_per_scenario() {
        let bytes = render_report(&fixture(), ReportFormat::Svg).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("<svg "));
        assert!(text.trim_end().ends_with("</svg>"));
        assert_eq!(text.matches("class=\"box\"").count(), 2);
        // Whiskers reflect the pair extremes, not the quartiles.
        assert!(text.contains("ant-maze/I"));
    }

    #[test]
    fn format_parses_and_names_files() {
        assert_eq!("csv".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert_eq!(ReportFormat::Svg.file_name(), "report.svg");
        assert!("pdf".parse::<ReportFormat>().is_err());
    }
}
