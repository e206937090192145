//! Minimal SVG line plots: information in bits on the left axis, the
//! equivalent accuracy (for unbiased binary variables) on the right, and
//! log-scaled SGD steps along the bottom.

use std::fmt::Write;

use crate::infotheory::mi_to_accuracy;
use crate::probes::MetricSeries;

const W: f64 = 720.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 80.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// A named polyline in data coordinates `(step, bits)`.
pub struct Line<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

/// Lines for `I(F_t;Y)`, `mu`, `I(F_t;Y|L)` and the constant `I(L;Y)`.
pub fn series_lines(series: &MetricSeries) -> Vec<Line<'static>> {
    let pick = |f: fn(&crate::probes::MetricRow) -> f64| {
        series.rows.iter().map(|r| (r.step as f64, f(r))).collect()
    };
    let first = series.rows.first().map_or(0.0, |r| r.step as f64);
    let last = series.rows.last().map_or(1.0, |r| r.step as f64);
    vec![
        Line {
            label: "I(F;Y)",
            color: "#1f77b4",
            dashed: false,
            points: pick(|r| r.i_fy),
        },
        Line {
            label: "mu(F;L)",
            color: "#d62728",
            dashed: false,
            points: pick(|r| r.mu),
        },
        Line {
            label: "I(F;Y|L)",
            color: "#2ca02c",
            dashed: false,
            points: pick(|r| r.i_fy_given_l),
        },
        Line {
            label: "I(L;Y)",
            color: "#7f7f7f",
            dashed: true,
            points: vec![(first, series.i_ly), (last, series.i_ly)],
        },
    ]
}

/// Render a metric series in the dual-axis layout.
pub fn render_series_svg(series: &MetricSeries, title: &str) -> String {
    render_lines_svg(&series_lines(series), title)
}

fn xmap(step: f64, lo: f64, hi: f64) -> f64 {
    let t = ((step + 1.0).log10() - (lo + 1.0).log10())
        / ((hi + 1.0).log10() - (lo + 1.0).log10()).max(1e-12);
    LEFT + t * (W - LEFT - RIGHT)
}

fn ymap(bits: f64, top: f64) -> f64 {
    H - BOTTOM - bits / top * (H - TOP - BOTTOM)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Render arbitrary lines on the dual axes.
pub fn render_lines_svg(lines: &[Line<'_>], title: &str) -> String {
    let xs = lines.iter().flat_map(|l| l.points.iter().map(|p| p.0));
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    let (lo, hi) = if lo.is_finite() {
        (lo.max(0.0), hi.max(lo + 1.0))
    } else {
        (0.0, 1.0)
    };
    let ymax = lines
        .iter()
        .flat_map(|l| l.points.iter().map(|p| p.1))
        .fold(0.0f64, f64::max);
    // Round the top up to a tenth of a bit, capped at one bit.
    let top = ((ymax * 1.1 * 10.0).ceil() / 10.0).clamp(0.1, 1.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(
        s,
        r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );

    for i in 0..=5 {
        let bits = top * f64::from(i) / 5.0;
        let y = ymap(bits, top);
        let acc = mi_to_accuracy(bits.min(1.0)).unwrap_or(f64::NAN);
        let _ = writeln!(
            s,
            r##"<line x1="{x0}" y1="{y:.1}" x2="{x1}" y2="{y:.1}" stroke="#eee"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{bits:.2}</text>"#,
            x0 - 6.0,
            y + 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{acc:.3}</text>"#,
            x1 + 6.0,
            y + 4.0
        );
    }
    let mut decade = 1.0;
    while decade <= hi {
        if decade >= lo {
            let x = xmap(decade, lo, hi);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.1}" y1="{y1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#,
                y1 + 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{decade}</text>"#,
                y1 + 18.0
            );
        }
        decade *= 10.0;
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">SGD steps</text>"#,
        (x0 + x1) / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {}) rotate(-90)" text-anchor="middle">information (bits)</text>"#,
        (y0 + y1) / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate({} {}) rotate(90)" text-anchor="middle">accuracy</text>"#,
        W - 18.0,
        (y0 + y1) / 2.0
    );

    for (i, line) in lines.iter().enumerate() {
        let pts: Vec<String> = line
            .points
            .iter()
            .map(|&(x, y)| {
                format!(
                    "{:.1},{:.1}",
                    xmap(x, lo, hi),
                    ymap(y.clamp(-0.05 * top, top), top)
                )
            })
            .collect();
        let dash = if line.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="2"{dash} points="{}"/>"#,
            line.color,
            pts.join(" ")
        );
        let ly = y0 + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"{dash}/>"#,
            x0 + 10.0,
            x0 + 30.0,
            line.color
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            x0 + 36.0,
            ly + 4.0,
            escape(line.label)
        );
    }
    s.push_str("</svg>\n");
    s
}
