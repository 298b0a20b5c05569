use std::fmt::Write;

use super::report::RunReport;
use crate::numerics::median;

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 300.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#000000", "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
];

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

struct Panel {
    title: String,
    x_label: &'static str,
    series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn render_panel(out: &mut String, panel: &Panel, top: f64) {
    let all = || panel.series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = bounds(all().map(|p| p.0));
    let (y0, y1) = bounds(all().map(|p| p.1));
    let plot_w = WIDTH - 2.0 * MARGIN - 120.0;
    let plot_h = PANEL_HEIGHT - 2.0 * MARGIN;
    let left = MARGIN;
    let bottom = top + MARGIN + plot_h;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| bottom - (y - y0) / (y1 - y0) * plot_h;

    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"#,
        left + plot_w / 2.0,
        top + MARGIN - 15.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{left:.2}" y="{:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#888"/>"##,
        top + MARGIN
    );
    for (v, y) in [(y0, bottom), (y1, top + MARGIN)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{v:.3}</text>"#,
            left - 4.0,
            y + 3.0
        );
    }
    for (v, x) in [(x0, left), (x1, left + plot_w)] {
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{v}</text>"#,
            bottom + 14.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
        left + plot_w / 2.0,
        bottom + 30.0,
        panel.x_label
    );
    for (k, s) in panel.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        if pts.len() == 1 {
            let (x, y) = s.points[0];
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
        } else if !pts.is_empty() {
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = top + MARGIN + 12.0 + 16.0 * k as f64;
        let lx = left + plot_w + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 18.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            lx + 22.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
}

fn median_by_step(traces: &[&[f64]]) -> Vec<(f64, f64)> {
    let len = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    (0..len)
        .filter_map(|i| {
            let mut vals: Vec<f64> = traces.iter().filter_map(|t| t.get(i).copied()).collect();
            median(&mut vals).map(|m| ((i + 1) as f64, m))
        })
        .collect()
}

fn panels(report: &RunReport) -> Vec<Panel> {
    let names = report.column_names();
    let mut predictions = vec![Series {
        name: "truth".into(),
        points: report.truth.iter().enumerate().map(|(i, &t)| (i as f64, t)).collect(),
    }];
    for (m, name) in report.methods.iter().zip(&names) {
        if let Some(run) = m.representative() {
            predictions.push(Series {
                name: name.clone(),
                points: run.predictions.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect(),
            });
        }
    }
    let mut out = vec![Panel {
        title: "Predictions on target points".into(),
        x_label: "target point",
        series: predictions,
    }];

    let losses: Vec<Series> = report
        .methods
        .iter()
        .zip(&names)
        .filter_map(|(m, name)| {
            let traces: Vec<&[f64]> = m.runs.iter().map(|r| r.loss_trace.as_slice()).filter(|t| !t.is_empty()).collect();
            (!traces.is_empty()).then(|| Series {
                name: name.clone(),
                points: median_by_step(&traces),
            })
        })
        .collect();
    if !losses.is_empty() {
        out.push(Panel {
            title: "Calibration loss per iteration (median over seeds)".into(),
            x_label: "iteration",
            series: losses,
        });
    }

    let mut etas: Vec<usize> = report.sweep.iter().map(|s| s.eta).collect();
    etas.sort_unstable();
    etas.dedup();
    if !etas.is_empty() {
        out.push(Panel {
            title: "RMSE of labeled targets (median over seeds)".into(),
            x_label: "iteration",
            series: etas
                .iter()
                .map(|&eta| {
                    let traces: Vec<&[f64]> = report
                        .sweep
                        .iter()
                        .filter(|s| s.eta == eta && !s.labeled_rmse.is_empty())
                        .map(|s| s.labeled_rmse.as_slice())
                        .collect();
                    Series {
                        name: format!("eta = {eta}"),
                        points: median_by_step(&traces),
                    }
                })
                .collect(),
        });
    }
    out
}

/// Line charts of the representative predictions and of the traces.
pub fn report_plot(report: &RunReport) -> String {
    let panels = panels(report);
    let height = PANEL_HEIGHT * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, panel) in panels.iter().enumerate() {
        render_panel(&mut out, panel, PANEL_HEIGHT * k as f64);
    }
    out.push_str("</svg>\n");
    out
}
