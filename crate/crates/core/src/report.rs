//! Rendering: alignment-distribution heatmaps as SVG and metric tables as
//! Markdown and CSV.

use std::io::Write;

use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricReport};
use crate::scalar::Scalar;
use crate::similarity::AlignmentMatrix;

/// Two-color linear ramp endpoints, as (r, g, b).
#[derive(Debug, Clone, Copy)]
pub struct ColorRamp {
    pub low: (u8, u8, u8),
    pub high: (u8, u8, u8),
}

impl Default for ColorRamp {
    fn default() -> Self {
        // pale yellow to deep blue
        ColorRamp {
            low: (255, 250, 205),
            high: (8, 48, 107),
        }
    }
}

impl ColorRamp {
    fn color(&self, t: f64) -> String {
        let t = t.clamp(0.0, 1.0);
        let ch = |lo: u8, hi: u8| (lo as f64 + t * (hi as f64 - lo as f64)).round() as u8;
        format!(
            "#{:02x}{:02x}{:02x}",
            ch(self.low.0, self.high.0),
            ch(self.low.1, self.high.1),
            ch(self.low.2, self.high.2)
        )
    }
}

/// Heatmap layout and scaling options.
#[derive(Debug, Clone)]
pub struct HeatmapSpec {
    pub ramp: ColorRamp,
    pub cell_px: u32,
    /// Scale colors per row (each row's min..max) or over the whole matrix.
    pub per_row_scale: bool,
    pub row_label: String,
    pub col_label: String,
}

impl Default for HeatmapSpec {
    fn default() -> Self {
        HeatmapSpec {
            ramp: ColorRamp::default(),
            cell_px: 16,
            per_row_scale: true,
            row_label: "outline bullet".into(),
            col_label: "sentence index".into(),
        }
    }
}

const MARGIN_LEFT: u32 = 60;
const MARGIN_TOP: u32 = 20;
const MARGIN_BOTTOM: u32 = 40;
const MARGIN_RIGHT: u32 = 10;

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

/// Render the distribution rows of a matrix as an SVG heatmap: one rect
/// per cell, row and column axis labels, deterministic bytes.
pub fn render_heatmap<F: Scalar>(matrix: &AlignmentMatrix<F>, spec: &HeatmapSpec) -> Result<String> {
    let rows = matrix.distributions.len();
    let cols = matrix.sentence_count;
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyText);
    }
    let cell = spec.cell_px;
    let width = MARGIN_LEFT + cols as u32 * cell + MARGIN_RIGHT;
    let height = MARGIN_TOP + rows as u32 * cell + MARGIN_BOTTOM;

    let values: Vec<Vec<f64>> = matrix
        .distributions
        .iter()
        .map(|r| r.iter().map(|v| v.to_f64().unwrap_or(0.0)).collect())
        .collect();
    let global_min = values.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let global_max = values.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("  <g class=\"cells\">\n");
    for (i, row) in values.iter().enumerate() {
        let (lo, hi) = if spec.per_row_scale {
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        } else {
            (global_min, global_max)
        };
        let span = if hi > lo { hi - lo } else { 1.0 };
        for (k, &v) in row.iter().enumerate() {
            let x = MARGIN_LEFT + k as u32 * cell;
            let y = MARGIN_TOP + i as u32 * cell;
            let color = spec.ramp.color((v - lo) / span);
            svg.push_str(&format!(
                "    <rect class=\"cell\" x=\"{x}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"{color}\"><title>o{i} y{k} {}</title></rect>\n",
                fmt6(v)
            ));
        }
    }
    svg.push_str("  </g>\n");
    for i in 0..rows {
        let y = MARGIN_TOP + i as u32 * cell + cell / 2 + 4;
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{y}\" text-anchor=\"end\" font-size=\"11\">o{}</text>\n",
            MARGIN_LEFT - 6,
            i + 1
        ));
    }
    let tick_every = if cols > 20 { 5 } else { 1 };
    for k in (0..cols).step_by(tick_every) {
        let x = MARGIN_LEFT + k as u32 * cell + cell / 2;
        svg.push_str(&format!(
            "  <text x=\"{x}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{k}</text>\n",
            MARGIN_TOP + rows as u32 * cell + 14
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
        MARGIN_LEFT + cols as u32 * cell / 2,
        height - 8,
        xml_escape(&spec.col_label)
    ));
    svg.push_str(&format!(
        "  <text x=\"12\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 12 {})\">{}</text>\n",
        MARGIN_TOP + rows as u32 * cell / 2,
        MARGIN_TOP + rows as u32 * cell / 2,
        xml_escape(&spec.row_label)
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Table column order, mirroring the standard comparison layout.
pub const TABLE_COLUMNS: [(&str, Metric); 8] = [
    ("R-1", Metric::R1),
    ("R-2", Metric::R2),
    ("R-L", Metric::Rl),
    ("DV", Metric::Dv),
    ("PD", Metric::Pd),
    ("Bleu-1", Metric::Bleu1),
    ("Bleu-2", Metric::Bleu2),
    ("Bleu-4", Metric::Bleu4),
];

/// Render aggregate rows as a Markdown pipe table, 2-decimal values,
/// `-` for metrics that were not computed.
pub fn render_markdown_table(reports: &[&MetricReport], labels: &[String]) -> Result<String> {
    if reports.len() != labels.len() {
        return Err(Error::LabelMismatch {
            reports: reports.len(),
            labels: labels.len(),
        });
    }
    let mut out = String::from("| Method |");
    for (name, _) in TABLE_COLUMNS {
        out.push_str(&format!(" {name} |"));
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in TABLE_COLUMNS {
        out.push_str("---|");
    }
    out.push('\n');
    for (report, label) in reports.iter().zip(labels) {
        out.push_str(&format!("| {label} |"));
        for (_, metric) in TABLE_COLUMNS {
            match report.aggregate.get(metric) {
                Some(v) => out.push_str(&format!(" {v:.2} |")),
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Render aggregate rows as RFC-4180 CSV at full float precision.
pub fn render_csv_table(reports: &[&MetricReport], labels: &[String]) -> Result<String> {
    if reports.len() != labels.len() {
        return Err(Error::LabelMismatch {
            reports: reports.len(),
            labels: labels.len(),
        });
    }
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header = vec!["Method".to_string()];
        header.extend(TABLE_COLUMNS.iter().map(|(n, _)| n.to_string()));
        w.write_record(&header)
            .map_err(|e| Error::InvalidConfig(format!("csv write: {e}")))?;
        for (report, label) in reports.iter().zip(labels) {
            let mut record = vec![label.clone()];
            for (_, metric) in TABLE_COLUMNS {
                record.push(match report.aggregate.get(metric) {
                    Some(v) => format!("{v}"),
                    None => String::new(),
                });
            }
            w.write_record(&record)
                .map_err(|e| Error::InvalidConfig(format!("csv write: {e}")))?;
        }
        w.flush().map_err(|e| Error::InvalidConfig(format!("csv flush: {e}")))?;
    }
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

/// Write both table renderings next to each other.
pub fn write_tables(
    reports: &[&MetricReport],
    labels: &[String],
    markdown_path: &std::path::Path,
    csv_path: &std::path::Path,
) -> Result<()> {
    let md = render_markdown_table(reports, labels)?;
    let csv_text = render_csv_table(reports, labels)?;
    let mut f = std::fs::File::create(markdown_path).map_err(|e| Error::io(markdown_path, e))?;
    f.write_all(md.as_bytes()).map_err(|e| Error::io(markdown_path, e))?;
    let mut f = std::fs::File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
    f.write_all(csv_text.as_bytes()).map_err(|e| Error::io(csv_path, e))?;
    Ok(())
}
