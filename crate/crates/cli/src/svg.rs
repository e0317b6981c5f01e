//! Hand-written SVG 1.1 plots drawn from the CSV tables.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::tables::{CellRow, LinkRow, RunRow, SummaryRow, SweepRow};

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn open(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Worker shading, regional links built up to `step`, and territory borders.
pub fn render_map(cells: &[CellRow], links: &[LinkRow], step: usize) -> String {
    const PX: f64 = 40.0;
    const MARGIN: f64 = 20.0;
    let cells: Vec<&CellRow> = cells.iter().filter(|c| c.step == step).collect();
    let rows = cells.iter().map(|c| c.row + 1).max().unwrap_or(0);
    let cols = cells.iter().map(|c| c.col + 1).max().unwrap_or(0);
    let width = 2.0 * MARGIN + cols as f64 * PX;
    let height = 2.0 * MARGIN + rows as f64 * PX + 20.0;
    let max_workers = cells.iter().fold(0.0f64, |m, c| m.max(c.workers));
    let mut territory = vec![usize::MAX; rows * cols];
    let mut position = BTreeMap::new();
    for c in &cells {
        territory[c.row * cols + c.col] = c.territory;
        position.insert(c.cell_id, (c.row, c.col));
    }
    let center = |row: usize, col: usize| (MARGIN + (col as f64 + 0.5) * PX, MARGIN + (row as f64 + 0.5) * PX);

    let mut out = String::new();
    open(&mut out, width, height);
    for c in &cells {
        let share = if max_workers > 0.0 { c.workers / max_workers } else { 0.0 };
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{PX}" height="{PX}" fill="#2e8b57" fill-opacity="{:.4}" stroke="#dddddd" stroke-width="0.5"/>"##,
            MARGIN + c.col as f64 * PX,
            MARGIN + c.row as f64 * PX,
            share
        );
    }
    for r in 0..rows {
        for c in 0..cols {
            let t = territory[r * cols + c];
            if c + 1 < cols && territory[r * cols + c + 1] != t {
                let x = MARGIN + (c + 1) as f64 * PX;
                let y = MARGIN + r as f64 * PX;
                let _ = writeln!(
                    out,
                    r#"<line x1="{x:.2}" y1="{y:.2}" x2="{x:.2}" y2="{:.2}" stroke="black" stroke-width="2"/>"#,
                    y + PX
                );
            }
            if r + 1 < rows && territory[(r + 1) * cols + c] != t {
                let x = MARGIN + c as f64 * PX;
                let y = MARGIN + (r + 1) as f64 * PX;
                let _ = writeln!(
                    out,
                    r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black" stroke-width="2"/>"#,
                    x + PX
                );
            }
        }
    }
    for link in links.iter().filter(|l| l.step_built <= step) {
        let (Some(&(ra, ca)), Some(&(rb, cb))) = (position.get(&link.a), position.get(&link.b)) else {
            continue;
        };
        let (x1, y1) = center(ra, ca);
        let (x2, y2) = center(rb, cb);
        let _ = writeln!(
            out,
            r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#c0392b" stroke-width="3" stroke-linecap="round"/>"##
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="{:.2}" font-family="sans-serif" font-size="12">step {step}</text>"#,
        height - 8.0
    );
    out.push_str("</svg>\n");
    out
}

/// Linear data-to-pixel mapping over a padded range.
struct Axis {
    lo: f64,
    hi: f64,
    start: f64,
    end: f64,
}

impl Axis {
    fn new(values: impl IntoIterator<Item = f64>, start: f64, end: f64) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        let pad = if hi > lo { 0.05 * (hi - lo) } else { 1e-3 * lo.abs().max(1.0) };
        Self {
            lo: lo - pad,
            hi: hi + pad,
            start,
            end,
        }
    }

    fn map(&self, v: f64) -> f64 {
        self.start + (v - self.lo) / (self.hi - self.lo) * (self.end - self.start)
    }
}

fn frame(out: &mut String, x: &Axis, y: &Axis, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x.start,
        y.end,
        x.end - x.start,
        y.start - y.end
    );
    let ticks = |axis: &Axis| [axis.lo, 0.5 * (axis.lo + axis.hi), axis.hi];
    for v in ticks(x) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            x.map(v),
            y.start + 14.0,
            tick_label(v)
        );
    }
    for v in ticks(y) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
            x.start - 4.0,
            y.map(v) + 3.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        0.5 * (x.start + x.end),
        y.start + 32.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        0.5 * (y.start + y.end),
        0.5 * (y.start + y.end),
        escape(y_label)
    );
}

fn tick_label(v: f64) -> String {
    if v.abs() >= 1e5 {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

/// Final indicators of every run, their mean, and the 1-sigma ellipse.
/// A batch with zero spread draws as a single point.
pub fn render_ellipse(summary: &SummaryRow, runs: &[RunRow]) -> String {
    let (width, height) = (520.0, 420.0);
    let (sin, cos) = summary.ellipse_angle.sin_cos();
    let outline: Vec<(f64, f64)> = (0..=72)
        .map(|k| {
            let t = k as f64 * std::f64::consts::TAU / 72.0;
            let (a, b) = (summary.ellipse_major * t.cos(), summary.ellipse_minor * t.sin());
            (
                summary.mean_accessibility + a * cos - b * sin,
                summary.mean_travel_time + a * sin + b * cos,
            )
        })
        .collect();
    let x = Axis::new(
        runs.iter()
            .map(|r| r.total_accessibility)
            .chain(outline.iter().map(|p| p.0)),
        80.0,
        width - 20.0,
    );
    let y = Axis::new(
        runs.iter().map(|r| r.total_travel_time).chain(outline.iter().map(|p| p.1)),
        height - 50.0,
        20.0,
    );

    let mut out = String::new();
    open(&mut out, width, height);
    frame(&mut out, &x, &y, "total accessibility", "total travel time (h)");
    for r in runs {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#7f7f7f"/>"##,
            x.map(r.total_accessibility),
            y.map(r.total_travel_time)
        );
    }
    if summary.ellipse_major > 0.0 {
        let points: Vec<String> = outline
            .iter()
            .map(|&(a, t)| format!("{:.2},{:.2}", x.map(a), y.map(t)))
            .collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>"##,
            points.join(" ")
        );
    }
    let _ = writeln!(
        out,
        r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#1f77b4"/>"##,
        x.map(summary.mean_accessibility),
        y.map(summary.mean_travel_time)
    );
    let _ = writeln!(
        out,
        r#"<text x="90" y="34" font-family="sans-serif" font-size="12">n = {}</text>"#,
        summary.n
    );
    out.push_str("</svg>\n");
    out
}

/// Mean final accessibility per share of local decisions, one curve per
/// configuration; failed rows are skipped.
pub fn sweep_means(rows: &[SweepRow]) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut acc: BTreeMap<String, Vec<(f64, f64, usize)>> = BTreeMap::new();
    for row in rows {
        let Some(value) = row.total_accessibility else {
            continue;
        };
        let series = acc.entry(row.configuration.clone()).or_default();
        match series.iter_mut().find(|(xi, ..)| *xi == row.xi) {
            Some(entry) => {
                entry.1 += value;
                entry.2 += 1;
            }
            None => series.push((row.xi, value, 1)),
        }
    }
    acc.into_iter()
        .map(|(name, mut series)| {
            series.sort_by(|a, b| a.0.total_cmp(&b.0));
            (name, series.into_iter().map(|(xi, s, n)| (xi, s / n as f64)).collect())
        })
        .collect()
}

pub fn render_sweep(rows: &[SweepRow]) -> String {
    let (width, height) = (560.0, 420.0);
    let series = sweep_means(rows);
    let x = Axis::new(
        series.values().flatten().map(|p| p.0).chain([0.0, 1.0]),
        80.0,
        width - 150.0,
    );
    let y = Axis::new(series.values().flatten().map(|p| p.1), height - 50.0, 20.0);

    let mut out = String::new();
    open(&mut out, width, height);
    frame(&mut out, &x, &y, "share of local decisions", "mean total accessibility");
    for (k, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .map(|&(xi, m)| format!("{:.2},{:.2}", x.map(xi), y.map(m)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            coords.join(" ")
        );
        for &(xi, m) in points {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                x.map(xi),
                y.map(m)
            );
        }
        let ly = 30.0 + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            width - 140.0,
            width - 120.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            width - 115.0,
            ly + 4.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(step: usize, id: usize, row: usize, col: usize, territory: usize, workers: f64) -> CellRow {
        CellRow {
            step,
            cell_id: id,
            row,
            col,
            territory,
            workers,
            jobs: 0.0,
        }
    }

    #[test]
    fn map_draws_only_links_built_so_far() {
        let cells = vec![
            cell(1, 0, 0, 0, 0, 1.0),
            cell(1, 1, 0, 1, 1, 3.0),
            cell(1, 2, 1, 0, 0, 0.0),
            cell(1, 3, 1, 1, 1, 2.0),
        ];
        let links = vec![
            LinkRow { a: 0, b: 1, step_built: 1 },
            LinkRow { a: 2, b: 3, step_built: 2 },
        ];
        let svg = render_map(&cells, &links, 1);
        assert_eq!(svg.matches("<rect").count(), 5);
        assert_eq!(svg.matches("stroke=\"#c0392b\"").count(), 1);
        // one vertical border between the two territories, two rows tall
        assert_eq!(svg.matches("stroke=\"black\" stroke-width=\"2\"").count(), 2);
    }

    #[test]
    fn zero_spread_renders_a_point() {
        let summary = SummaryRow {
            n: 1,
            mean_accessibility: 10.0,
            mean_travel_time: 2.0,
            cov_aa: 0.0,
            cov_at: 0.0,
            cov_tt: 0.0,
            ellipse_major: 0.0,
            ellipse_minor: 0.0,
            ellipse_angle: 0.0,
        };
        let runs = [RunRow {
            seed: 0,
            total_accessibility: 10.0,
            total_travel_time: 2.0,
        }];
        let svg = render_ellipse(&summary, &runs);
        assert!(!svg.contains("<polyline"));
        assert!(svg.contains(r#"r="4""#));
    }

    #[test]
    fn sweep_means_average_per_xi() {
        let row = |c: &str, xi: f64, v: Option<f64>| SweepRow {
            configuration: c.into(),
            xi,
            seed: 0,
            total_accessibility: v,
            total_travel_time: v,
            status: "ok".into(),
        };
        let rows = [
            row("a", 0.5, Some(2.0)),
            row("a", 0.0, Some(1.0)),
            row("a", 0.5, Some(4.0)),
            row("a", 0.0, None),
            row("b", 1.0, Some(7.0)),
        ];
        let means = sweep_means(&rows);
        assert_eq!(means["a"], vec![(0.0, 1.0), (0.5, 3.0)]);
        assert_eq!(means["b"], vec![(1.0, 7.0)]);
    }
}
