//! Minimal SVG charts built from the harness CSV files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{HarnessError, Summary};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

type Traces = BTreeMap<String, BTreeMap<String, BTreeMap<usize, Vec<f64>>>>;

fn read_traces(dir: &Path) -> Result<Traces, HarnessError> {
    let mut out: Traces = BTreeMap::new();
    let mut reader = csv::Reader::from_path(dir.join("traces.csv"))?;
    for row in reader.records() {
        let row = row?;
        let step: usize = row[3].parse().unwrap_or(0);
        let value: f64 = row[4].parse().unwrap_or(f64::NAN);
        out.entry(row[0].to_string())
            .or_default()
            .entry(row[1].to_string())
            .or_default()
            .entry(step)
            .or_default()
            .push(value);
    }
    Ok(out)
}

fn header(svg: &mut String, title: &str) {
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = write!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#, WIDTH / 2.0);
    let _ = write!(
        svg,
        r#"<line x1="{MARGIN}" y1="{y}" x2="{x}" y2="{y}" stroke="black"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{y}" stroke="black"/>"#,
        x = WIDTH - MARGIN,
        y = HEIGHT - MARGIN,
    );
}

/// Median incumbent per step, one line per variant.
pub fn convergence_svg(benchmark: &str, per_variant: &BTreeMap<String, BTreeMap<usize, Vec<f64>>>) -> String {
    let lines: Vec<(&String, Vec<(usize, f64)>)> = per_variant
        .iter()
        .map(|(v, steps)| (v, steps.iter().map(|(&s, vals)| (s, Summary::of(vals).median)).collect()))
        .collect();
    let max_step = lines.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)).max().unwrap_or(1).max(2);
    let ys: Vec<f64> = lines.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)).filter(|y| y.is_finite()).collect();
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        hi = lo + 1.0;
    }
    let sx = |s: usize| MARGIN + (s - 1) as f64 / (max_step - 1) as f64 * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    header(&mut svg, &format!("{benchmark}: median incumbent"));
    let _ = write!(svg, r#"<text x="{}" y="{}">{lo:.4}</text>"#, 2.0, HEIGHT - MARGIN);
    let _ = write!(svg, r#"<text x="{}" y="{}">{hi:.4}</text>"#, 2.0, MARGIN);
    for (i, (variant, points)) in lines.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(s, y)| format!("{:.2},{:.2}", sx(s), sy(y)))
            .collect();
        let _ = write!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = write!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{variant}</text>"#,
            WIDTH - MARGIN - 90.0,
            MARGIN + 15.0 * (i + 1) as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Grouped bars of filter-mode frequency per (variant, benchmark).
pub fn filters_svg(rows: &[(String, String, String, f64)]) -> String {
    let groups: Vec<(String, String)> = {
        let mut g: Vec<(String, String)> = rows.iter().map(|r| (r.0.clone(), r.1.clone())).collect();
        g.dedup();
        g
    };
    let modes: Vec<String> = {
        let mut m: Vec<String> = rows.iter().map(|r| r.2.clone()).collect();
        m.sort();
        m.dedup();
        m
    };
    let mut svg = String::new();
    header(&mut svg, "filter mode frequency");
    let group_w = (WIDTH - 2.0 * MARGIN) / groups.len().max(1) as f64;
    let bar_w = group_w / (modes.len().max(1) as f64 + 1.0);
    for (gi, g) in groups.iter().enumerate() {
        for r in rows.iter().filter(|r| r.0 == g.0 && r.1 == g.1) {
            let mi = modes.iter().position(|m| *m == r.2).unwrap();
            let h = r.3 * (HEIGHT - 2.0 * MARGIN);
            let x = MARGIN + gi as f64 * group_w + mi as f64 * bar_w;
            let _ = write!(
                svg,
                r#"<rect x="{x:.2}" y="{:.2}" width="{bar_w:.2}" height="{h:.2}" fill="{}"/>"#,
                HEIGHT - MARGIN - h,
                COLORS[mi % COLORS.len()]
            );
        }
        let _ = write!(
            svg,
            r#"<text x="{:.2}" y="{}" font-size="9">{}/{}</text>"#,
            MARGIN + gi as f64 * group_w,
            HEIGHT - MARGIN + 14.0,
            g.0,
            g.1
        );
    }
    for (mi, m) in modes.iter().enumerate() {
        let _ = write!(
            svg,
            r#"<text x="{}" y="{}" fill="{}">{m}</text>"#,
            WIDTH - MARGIN - 70.0,
            MARGIN + 15.0 * (mi + 1) as f64,
            COLORS[mi % COLORS.len()]
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes one convergence chart per benchmark plus `filters.svg` (when
/// `filters.csv` has rows). Returns the written paths.
pub fn plot_results(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::new();
    for (benchmark, per_variant) in read_traces(dir)? {
        let path = dir.join(format!("convergence_{benchmark}.svg"));
        std::fs::write(&path, convergence_svg(&benchmark, &per_variant))?;
        written.push(path);
    }
    let filters = dir.join("filters.csv");
    if filters.exists() {
        let mut reader = csv::Reader::from_path(&filters)?;
        let mut rows = Vec::new();
        for row in reader.records() {
            let row = row?;
            rows.push((row[0].to_string(), row[1].to_string(), row[2].to_string(), row[3].parse().unwrap_or(0.0)));
        }
        if !rows.is_empty() {
            let path = dir.join("filters.svg");
            std::fs::write(&path, filters_svg(&rows))?;
            written.push(path);
        }
    }
    Ok(written)
}
