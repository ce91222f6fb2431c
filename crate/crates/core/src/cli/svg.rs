//! Minimal hand-written SVG charts.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub width: f64,
    pub opacity: f64,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x0: f64,
    y0: f64,
    scale_x: f64,
    scale_y: f64,
}

impl Frame {
    /// Bounds of all points; `equal` keeps one unit the same length on both axes.
    fn fit(points: impl Iterator<Item = (f64, f64)>, equal: bool) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in points {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |a: f64, b: f64| if b - a > 1e-12 { (b - a) * 0.05 } else { 0.5 };
        let (px, py) = (pad(x0, x1), pad(y0, y1));
        let (x0, x1, y0, y1) = (x0 - px, x1 + px, y0 - py, y1 + py);
        let mut scale_x = (WIDTH - 2.0 * MARGIN) / (x1 - x0);
        let mut scale_y = (HEIGHT - 2.0 * MARGIN) / (y1 - y0);
        if equal {
            let s = scale_x.min(scale_y);
            scale_x = s;
            scale_y = s;
        }
        Self { x0, y0, scale_x, scale_y }
    }

    fn map(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (MARGIN + (x - self.x0) * self.scale_x, HEIGHT - MARGIN - (y - self.y0) * self.scale_y)
    }
}

fn open(title: &str, config_hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(s, "<!-- config_hash={config_hash} -->");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line chart of planar paths with a legend.
pub fn paths(title: &str, config_hash: &str, series: &[Series<'_>]) -> String {
    let frame = Frame::fit(series.iter().flat_map(|s| s.points.iter().copied()), true);
    let mut s = open(title, config_hash);
    for line in series {
        let pts: Vec<String> = line
            .points
            .iter()
            .map(|&p| {
                let (x, y) = frame.map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" stroke-opacity=\"{}\" points=\"{}\"/>",
            line.color,
            line.width,
            line.opacity,
            pts.join(" ")
        );
    }
    let mut y = 44.0;
    let mut seen: Vec<&str> = Vec::new();
    for line in series {
        if seen.contains(&line.label) {
            continue;
        }
        seen.push(line.label);
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"2\"/>",
            WIDTH - 170.0,
            WIDTH - 150.0,
            line.color
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            WIDTH - 145.0,
            y + 4.0,
            escape(line.label)
        );
        y += 16.0;
    }
    s.push_str("</svg>\n");
    s
}

/// Box plot (quartiles, whiskers at the extremes) of one sample per label.
pub fn boxes(title: &str, config_hash: &str, groups: &[(String, Vec<f64>)]) -> String {
    let all = groups.iter().flat_map(|(_, v)| v.iter().copied());
    let frame = Frame::fit(all.map(|v| (0.0, v)), false);
    let mut s = open(title, config_hash);
    let n = groups.len().max(1) as f64;
    let slot = (WIDTH - 2.0 * MARGIN) / n;
    for (i, (label, values)) in groups.iter().enumerate() {
        let cx = MARGIN + slot * (i as f64 + 0.5);
        let _ = writeln!(
            s,
            "<text x=\"{cx:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            HEIGHT - MARGIN + 18.0,
            escape(label)
        );
        if values.is_empty() {
            continue;
        }
        let mut v = values.clone();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        let y = |val: f64| frame.map((0.0, val)).1;
        let half = slot * 0.25;
        let _ = writeln!(
            s,
            "<line x1=\"{cx:.2}\" y1=\"{:.2}\" x2=\"{cx:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
            y(q(0.0)),
            y(q(1.0))
        );
        let _ = writeln!(
            s,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#9ecae1\" stroke=\"black\"/>",
            cx - half,
            y(q(0.75)),
            2.0 * half,
            (y(q(0.25)) - y(q(0.75))).max(0.5)
        );
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"2\"/>",
            cx - half,
            y(q(0.5)),
            cx + half,
            y(q(0.5))
        );
    }
    // value axis ticks at the data range ends and midpoint
    let (lo, hi) = groups
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if lo.is_finite() {
        for t in [lo, 0.5 * (lo + hi), hi] {
            let ty = frame.map((0.0, t)).1;
            let _ = writeln!(
                s,
                "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{t:.2}</text>",
                MARGIN - 4.0,
                ty + 3.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
