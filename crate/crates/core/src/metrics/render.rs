//! Report rendering: JSON, CSV, markdown tables, and SVG bar charts.

use std::path::{Path, PathBuf};

use crate::corpus::InterruptType;

use super::MetricReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Json,
    Csv,
    Markdown,
    SvgPlots,
}

/// Metric column order for tabular outputs. With `include_nir` false this is
/// exactly: WER, SRR, SRIR, SIR, EIR, IRD, FSED, ERT, EIT, C-PPL, Score.
/// When noise metrics are present NIR slots in after EIR.
pub fn column_headers(include_nir: bool) -> Vec<&'static str> {
    let mut cols = vec!["WER", "SRR", "SRIR", "SIR", "EIR"];
    if include_nir {
        cols.push("NIR");
    }
    cols.extend(["IRD", "FSED", "ERT", "EIT", "C-PPL", "Score"]);
    cols
}

fn fmt_rate(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.1}")).unwrap_or_else(|| "-".into())
}

fn fmt_timing(v: Option<f64>) -> String {
    v.map(|x| format!("{:.0}", x.round())).unwrap_or_else(|| "-".into())
}

fn fmt_score(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into())
}

fn row_cells(report: &MetricReport, include_nir: bool) -> Vec<String> {
    let r = &report.rates_percent;
    let t = &report.timings_ms;
    let mut cells = vec![
        fmt_rate(report.wer_percent),
        fmt_rate(r.srr),
        fmt_rate(r.srir),
        fmt_rate(r.sir),
        fmt_rate(r.eir),
    ];
    if include_nir {
        cells.push(fmt_rate(r.nir));
    }
    cells.extend([
        fmt_timing(t.ird_median_ms),
        fmt_timing(t.fsed_median_ms),
        fmt_timing(t.ert_median_ms),
        fmt_timing(t.eit_median_ms),
        fmt_rate(report.c_ppl),
        fmt_score(report.subjective.map(|s| s.overall)),
    ]);
    cells
}

fn any_nir(reports: &[&MetricReport]) -> bool {
    reports.iter().any(|r| r.rates_percent.nir.is_some())
}

/// One row per (model, dataset) report.
pub fn render_csv(reports: &[&MetricReport]) -> String {
    let include_nir = any_nir(reports);
    let mut out = String::new();
    out.push_str("model,dataset,");
    out.push_str(&column_headers(include_nir).join(","));
    out.push('\n');
    for report in reports {
        out.push_str(&report.label.model);
        out.push(',');
        out.push_str(&report.label.dataset);
        out.push(',');
        out.push_str(&row_cells(report, include_nir).join(","));
        out.push('\n');
    }
    out
}

pub fn render_markdown(reports: &[&MetricReport]) -> String {
    let include_nir = any_nir(reports);
    let headers = column_headers(include_nir);
    let mut out = String::new();
    out.push_str("| Model | Data |");
    for h in &headers {
        out.push_str(&format!(" {h} |"));
    }
    out.push('\n');
    out.push_str(&"|---".repeat(headers.len() + 2));
    out.push_str("|\n");
    for report in reports {
        out.push_str(&format!("| {} | {} |", report.label.model, report.label.dataset));
        for cell in row_cells(report, include_nir) {
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }

    // per-type breakdown as a second table when present
    if reports.iter().any(|r| !r.per_type.is_empty()) {
        out.push_str("\n| Model | Type | SIR | SRIR |\n|---|---|---|---|\n");
        for report in reports {
            for (ty, rates) in &report.per_type {
                out.push_str(&format!(
                    "| {} | {} | {} | {} |\n",
                    report.label.model,
                    ty,
                    fmt_rate(rates.sir),
                    fmt_rate(rates.srir),
                ));
            }
        }
    }
    out
}

/// Bar charts of per-type SIR and SRIR, one bar group per interruption type.
pub fn render_svg_plots(report: &MetricReport) -> Vec<(String, String)> {
    vec![
        ("sir_by_type.svg".to_string(), bar_chart(report, "SIR", |r| r.sir)),
        ("srir_by_type.svg".to_string(), bar_chart(report, "SRIR", |r| r.srir)),
    ]
}

fn bar_chart(
    report: &MetricReport,
    metric: &str,
    value: fn(&super::TypeRates) -> Option<f64>,
) -> String {
    const WIDTH: f64 = 460.0;
    const HEIGHT: f64 = 300.0;
    const MARGIN_LEFT: f64 = 50.0;
    const MARGIN_BOTTOM: f64 = 40.0;
    const MARGIN_TOP: f64 = 30.0;
    let plot_w = WIDTH - MARGIN_LEFT - 20.0;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{} by interruption type ({})</text>\n",
        WIDTH / 2.0,
        metric,
        xml_escape(&report.label.model),
    ));
    // axes
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_TOP + plot_h
    ));
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_TOP + plot_h,
        MARGIN_LEFT + plot_w,
        MARGIN_TOP + plot_h
    ));
    for tick in [0.0, 25.0, 50.0, 75.0, 100.0] {
        let y = MARGIN_TOP + plot_h * (1.0 - tick / 100.0);
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"10\">{}</text>\n",
            MARGIN_LEFT - 6.0,
            y + 3.0,
            tick
        ));
    }

    let types = InterruptType::ALL;
    let group_w = plot_w / types.len() as f64;
    for (i, ty) in types.iter().enumerate() {
        let x0 = MARGIN_LEFT + i as f64 * group_w;
        svg.push_str(&format!("  <g class=\"bar-group\" data-type=\"{ty}\">\n"));
        if let Some(v) = report.per_type.get(ty).and_then(value) {
            let h = plot_h * (v.clamp(0.0, 100.0) / 100.0);
            svg.push_str(&format!(
                "    <rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"#4878a8\"/>\n",
                x0 + group_w * 0.2,
                MARGIN_TOP + plot_h - h,
                group_w * 0.6,
                h
            ));
            svg.push_str(&format!(
                "    <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"10\">{:.1}</text>\n",
                x0 + group_w / 2.0,
                MARGIN_TOP + plot_h - h - 4.0,
                v
            ));
        }
        svg.push_str(&format!(
            "    <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\">{ty}</text>\n",
            x0 + group_w / 2.0,
            MARGIN_TOP + plot_h + 16.0
        ));
        svg.push_str("  </g>\n");
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes the chosen rendering(s) of a report set into a directory,
/// returning the created paths.
pub fn render_to_dir(
    reports: &[&MetricReport],
    format: RenderFormat,
    dir: &Path,
    stem: &str,
) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    match format {
        RenderFormat::Json => {
            let path = dir.join(format!("{stem}.json"));
            let body: Vec<&MetricReport> = reports.to_vec();
            std::fs::write(&path, serde_json::to_string_pretty(&body).expect("serializes"))?;
            written.push(path);
        }
        RenderFormat::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            std::fs::write(&path, render_csv(reports))?;
            written.push(path);
        }
        RenderFormat::Markdown => {
            let path = dir.join(format!("{stem}.md"));
            std::fs::write(&path, render_markdown(reports))?;
            written.push(path);
        }
        RenderFormat::SvgPlots => {
            for report in reports {
                for (name, svg) in render_svg_plots(report) {
                    let prefix = if report.label.model.is_empty() {
                        String::new()
                    } else {
                        format!("{}_", report.label.model.replace([' ', '/'], "_"))
                    };
                    let path = dir.join(format!("{prefix}{name}"));
                    std::fs::write(&path, svg)?;
                    written.push(path);
                }
            }
        }
    }
    Ok(written)
}
