//! Static SVG figures built as plain strings.

use std::f64::consts::PI;
use std::fmt::Write;

use super::run::ComparisonReport;
use crate::deployment::EdgeDeployment;
use crate::field::{Point, SensorField};
use crate::planner::RoundPlan;

const PALETTE: [&str; 6] = ["#2b6cb0", "#c05621", "#2f855a", "#6b46c1", "#b83280", "#4a5568"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(out: &mut String, w: u32, h: u32, stamp: Option<u64>) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    if let Some(t) = stamp {
        let _ = writeln!(out, "<!-- generated at unix time {t} -->");
    }
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
}

/// Per-method trip-energy bars on the left, per-split accuracy radar on the
/// right. Each method gets one `<g class="method">` element.
pub(super) fn report_chart(report: &ComparisonReport, stamp: Option<u64>) -> String {
    let mut s = String::new();
    open(&mut s, 880, 400, stamp);
    let _ = writeln!(
        s,
        r#"<text x="20" y="24" font-size="15">{} sensors, {:.0} acres</text>"#,
        report.field.sensors, report.field.acres
    );

    // Bar chart.
    let (x0, y0, plot_w, plot_h) = (60.0, 60.0, 360.0, 280.0);
    let max = report
        .methods
        .iter()
        .filter_map(|m| m.metrics.as_ref().map(|x| x.trip_energy_j))
        .fold(0.0, f64::max)
        .max(1.0);
    let _ = writeln!(s, r#"<g class="bar-chart">"#);
    let _ = writeln!(s, r#"<text x="{x0}" y="{}">Trip energy (kJ)</text>"#, y0 - 12.0);
    let _ = writeln!(
        s,
        r##"<line x1="{x0}" y1="{}" x2="{}" y2="{}" stroke="#333"/>"##,
        y0 + plot_h,
        x0 + plot_w,
        y0 + plot_h
    );
    let slot = plot_w / report.methods.len().max(1) as f64;
    for (i, m) in report.methods.iter().enumerate() {
        let name = escape(m.method.as_str());
        let x = x0 + slot * i as f64 + slot * 0.15;
        let bw = slot * 0.7;
        let _ = writeln!(s, r#"<g class="method" data-method="{name}">"#);
        match &m.metrics {
            Some(mm) => {
                let h = plot_h * mm.trip_energy_j / max;
                let _ = writeln!(
                    s,
                    r#"<rect x="{x:.2}" y="{:.2}" width="{bw:.2}" height="{h:.2}" fill="{}"/>"#,
                    y0 + plot_h - h,
                    PALETTE[i % PALETTE.len()]
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.1}</text>"#,
                    x + bw / 2.0,
                    y0 + plot_h - h - 4.0,
                    mm.trip_energy_j / 1e3
                );
            }
            None => {
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                    x + bw / 2.0,
                    y0 + plot_h - 6.0,
                    escape(m.note.as_deref().unwrap_or("n/a"))
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{name}</text>"#,
            x + bw / 2.0,
            y0 + plot_h + 16.0
        );
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(s, "</g>");

    // Radar of accuracy per split fraction.
    let (cx, cy, r) = (680.0, 210.0, 130.0);
    let n = report.split_learning.len();
    let _ = writeln!(s, r#"<g class="radar-chart">"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}">Accuracy by split fraction</text>"#, cx - r, y0 - 12.0);
    let angle = |k: usize| -PI / 2.0 + 2.0 * PI * k as f64 / n.max(1) as f64;
    for ring in [0.25, 0.5, 0.75, 1.0] {
        let pts: Vec<String> = (0..n.max(3))
            .map(|k| {
                let a = -PI / 2.0 + 2.0 * PI * k as f64 / n.max(3) as f64;
                format!("{:.2},{:.2}", cx + r * ring * a.cos(), cy + r * ring * a.sin())
            })
            .collect();
        let _ = writeln!(s, r##"<polygon points="{}" fill="none" stroke="#ccc"/>"##, pts.join(" "));
    }
    let mut pts = Vec::with_capacity(n);
    for (k, sr) in report.split_learning.iter().enumerate() {
        let a = angle(k);
        let (ax, ay) = (cx + r * a.cos(), cy + r * a.sin());
        let _ = writeln!(s, r##"<line x1="{cx}" y1="{cy}" x2="{ax:.2}" y2="{ay:.2}" stroke="#999"/>"##);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{} ({:.2})</text>"#,
            cx + (r + 18.0) * a.cos(),
            cy + (r + 18.0) * a.sin(),
            sr.fraction,
            sr.final_accuracy
        );
        let v = sr.final_accuracy.clamp(0.0, 1.0);
        pts.push(format!("{:.2},{:.2}", cx + r * v * a.cos(), cy + r * v * a.sin()));
    }
    if !pts.is_empty() {
        let _ = writeln!(
            s,
            r##"<polygon class="accuracy" points="{}" fill="#2b6cb0" fill-opacity="0.3" stroke="#2b6cb0"/>"##,
            pts.join(" ")
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    s
}

/// Sensors, edge devices, assignment links and, when given, the UAV route.
pub fn field_svg(field: &SensorField, deployment: &EdgeDeployment, plan: Option<&RoundPlan>) -> String {
    let size = 600.0;
    let pad = 20.0;
    let k = (size - 2.0 * pad) / field.side_m();
    let px = |p: Point| (pad + p.x * k, size - pad - p.y * k);
    let mut s = String::new();
    open(&mut s, size as u32, size as u32, None);
    let _ = writeln!(
        s,
        r##"<rect x="{pad}" y="{pad}" width="{0:.2}" height="{0:.2}" fill="#f7fafc" stroke="#333"/>"##,
        size - 2.0 * pad
    );
    let sensors = field.sensors();
    for (i, &e) in deployment.assignment.iter().enumerate() {
        let (x1, y1) = px(sensors[i]);
        let (x2, y2) = px(sensors[e]);
        let _ = writeln!(
            s,
            r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#a0aec0"/>"##
        );
    }
    if let Some(p) = plan {
        let mut route = vec![px(p.origin)];
        route.extend(p.tour.order.iter().map(|&i| px(sensors[i])));
        route.push(px(sensors[p.tour.order[0]]));
        let pts: Vec<String> = route.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            s,
            r##"<polyline class="route" points="{}" fill="none" stroke="#c05621" stroke-width="2"/>"##,
            pts.join(" ")
        );
        let (bx, by) = px(p.origin);
        let _ = writeln!(s, r##"<rect class="base" x="{:.2}" y="{:.2}" width="10" height="10" fill="#2d3748"/>"##, bx - 5.0, by - 5.0);
    }
    for (i, &p) in sensors.iter().enumerate() {
        let (x, y) = px(p);
        if deployment.loads.contains_key(&i) {
            let _ = writeln!(
                s,
                r##"<circle class="edge" cx="{x:.2}" cy="{y:.2}" r="6" fill="#2b6cb0"/>"##
            );
        } else {
            let _ = writeln!(s, r##"<circle class="sensor" cx="{x:.2}" cy="{y:.2}" r="3" fill="#4a5568"/>"##);
        }
    }
    let _ = writeln!(s, "</svg>");
    s
}

/// One polyline of per-step training loss per labelled series.
pub fn loss_svg(series: &[(String, Vec<f64>)]) -> String {
    let (w, h, pad) = (640.0, 360.0, 40.0);
    let longest = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0).max(2);
    let top = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(1e-9);
    let mut s = String::new();
    open(&mut s, w as u32, h as u32, None);
    let _ = writeln!(s, r#"<text x="{pad}" y="24">Training loss per step</text>"#);
    for (i, (label, v)) in series.iter().enumerate() {
        let pts: Vec<String> = v
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                let x = pad + (w - 2.0 * pad) * k as f64 / (longest - 1) as f64;
                let y = h - pad - (h - 2.0 * pad) * (l / top);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<polyline class="loss" data-series="{}" points="{}" fill="none" stroke="{color}"/>"#,
            escape(label),
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            w - pad - 120.0,
            pad + 16.0 * i as f64,
            escape(label)
        );
    }
    let _ = writeln!(s, "</svg>");
    s
}
