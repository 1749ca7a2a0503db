//! SVG rendering of an episode trace: obstacles, reference path, agent
//! trajectory and the last graph snapshot.

use std::fmt::Write as _;
use std::path::Path;

use super::episode::trace_positions;
use super::trace::EpisodeTrace;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::topomap::NodeKind;

/// Pixels per meter.
const SCALE: f64 = 100.0;

fn polyline(out: &mut String, pts: &[Point], height: f64, style: &str) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts
        .iter()
        .map(|p| format!("{:.1},{:.1}", p.x * SCALE, height - p.y * SCALE))
        .collect();
    let _ = writeln!(out, r#"<polyline points="{}" fill="none" {style}/>"#, coords.join(" "));
}

pub fn render_svg(trace: &EpisodeTrace) -> String {
    let rows = &trace.world.rows;
    let res = trace.world.resolution;
    let h_cells = rows.len();
    let w_cells = rows.first().map_or(0, |r| r.chars().count());
    let width = w_cells as f64 * res * SCALE;
    let height = h_cells as f64 * res * SCALE;
    let cell = res * SCALE;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.1} {height:.1}">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(out, r##"<g fill="#444444">"##);
    for (r, row) in rows.iter().enumerate() {
        let chars: Vec<char> = row.chars().collect();
        let mut c = 0;
        while c < chars.len() {
            if chars[c] != '#' {
                c += 1;
                continue;
            }
            let start = c;
            while c < chars.len() && chars[c] == '#' {
                c += 1;
            }
            let _ = writeln!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}"/>"#,
                start as f64 * cell,
                r as f64 * cell,
                (c - start) as f64 * cell,
                cell
            );
        }
    }
    out.push_str("</g>\n");

    polyline(
        &mut out,
        &trace.reference,
        height,
        r##"stroke="#2a9d8f" stroke-width="3" stroke-dasharray="8 5""##,
    );

    if let Some(last) = trace.decisions.last() {
        let pos = |id| last.graph.nodes.iter().find(|n| n.id == id).map(|n| n.position);
        for (a, b, _) in &last.graph.edges {
            if let (Some(p), Some(q)) = (pos(*a), pos(*b)) {
                polyline(&mut out, &[p, q], height, r##"stroke="#999999" stroke-width="1.5""##);
            }
        }
        for n in &last.graph.nodes {
            let fill = match n.kind {
                NodeKind::Visited => "#1d3557",
                NodeKind::Current => "#e63946",
                NodeKind::Ghost => "#a8dadc",
            };
            let _ = writeln!(
                out,
                r##"<circle cx="{:.1}" cy="{:.1}" r="5" fill="{fill}" stroke="#1d3557"/>"##,
                n.position.x * SCALE,
                height - n.position.y * SCALE
            );
        }
    }

    polyline(
        &mut out,
        &trace_positions(trace),
        height,
        r##"stroke="#e76f51" stroke-width="2""##,
    );
    let marker = |out: &mut String, p: Point, fill: &str| {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.1}" cy="{:.1}" r="8" fill="{fill}"/>"#,
            p.x * SCALE,
            height - p.y * SCALE
        );
    };
    marker(&mut out, trace.start.position, "#264653");
    marker(&mut out, trace.goal, "#f4a261");
    let _ = writeln!(
        out,
        r##"<text x="8" y="20" font-family="monospace" font-size="14" fill="#000000">{} / {}  SR={} NE={:.2}</text>"##,
        trace.scenario, trace.episode, trace.record.metrics.SR, trace.record.metrics.NE
    );
    out.push_str("</svg>\n");
    out
}

/// Renders the trace at `trace_path` to `out`.
pub fn plot_trace(trace_path: &Path, out: &Path) -> Result<()> {
    let trace = EpisodeTrace::load(trace_path)?;
    std::fs::write(out, render_svg(&trace)).map_err(|e| Error::io(out, e))
}
