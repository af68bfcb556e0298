//! Minimal SVG line and bar charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn header(out: &mut String, title: &str, (x0, x1): (f64, f64), (y0, y1): (f64, f64)) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<path d="M{PAD} {PAD} L{PAD} {b} L{r} {b}" fill="none" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{}" font-size="10">{x0:.4}</text>"#,
        H - PAD + 14.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{x1:.4}</text>"#,
        W - PAD,
        H - PAD + 14.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{y0:.4}</text>"#,
        PAD - 4.0,
        H - PAD
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{PAD}" font-size="10" text-anchor="end">{y1:.4}</text>"#,
        PAD - 4.0
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Polylines of every series on shared axes.
pub fn line_chart(title: &str, series: &[Series]) -> String {
    let xs = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let ys = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let sx = |x: f64| PAD + (x - xs.0) / (xs.1 - xs.0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - ys.0) / (ys.1 - ys.0) * (H - 2.0 * PAD);
    let mut out = String::new();
    header(&mut out, title, xs, ys);
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            W - PAD - 120.0,
            PAD + 14.0 * i as f64,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One bar per labelled value, negative values drawn in red.
pub fn bar_chart(title: &str, labels: &[String], values: &[f64]) -> String {
    let finite = values.iter().map(|v| if v.is_finite() { *v } else { 0.0 });
    let (lo, hi) = bounds(finite.clone().chain([0.0]));
    let sy = |y: f64| H - PAD - (y - lo) / (hi - lo) * (H - 2.0 * PAD);
    let mut out = String::new();
    header(&mut out, title, (0.0, values.len() as f64), (lo, hi));
    let width = (W - 2.0 * PAD) / values.len().max(1) as f64;
    for (i, v) in finite.enumerate() {
        let (top, bottom) = if v >= 0.0 {
            (sy(v), sy(0.0))
        } else {
            (sy(0.0), sy(v))
        };
        let color = if v < 0.0 { "#d62728" } else { "#1f77b4" };
        let x = PAD + i as f64 * width;
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
            x + 0.1 * width,
            0.8 * width,
            (bottom - top).max(0.5)
        );
        if let Some(l) = labels.get(i) {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{}" font-size="9" text-anchor="middle">{}</text>"#,
                x + width / 2.0,
                H - PAD + 26.0,
                escape(l)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let s = Series {
            name: "h".into(),
            points: (0..5).map(|i| (i as f64, (i * i) as f64)).collect(),
        };
        let svg = line_chart("a < b", &[s]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n") && svg.contains("a &lt; b"));
        let svg = bar_chart("margins", &["r0".into(), "r1".into()], &[0.5, -0.25]);
        assert_eq!(svg.matches("<rect").count(), 3);
    }
}
