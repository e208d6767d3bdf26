//! Standalone SVG log-log plot of an error table.
//!
//! Axes are `log2(1/N)` against `log2(error)`, so the fitted line rises with
//! the convergence order as its slope. A slope-1/2 guide passes through the
//! coarsest point.

use std::fmt::Write as _;
use std::path::Path;

use acsolve_core::ErrorReport;

use crate::CliError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 64.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo < 1e-9 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.08 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// The SVG document for `report`. Rows with a non-positive error cannot be
/// placed on log axes and are skipped.
pub fn render(report: &ErrorReport, title: &str) -> String {
    let points: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter(|r| r.rms_error > 0.0)
        .map(|r| (-(r.resolution as f64).log2(), r.rms_error.log2()))
        .collect();
    let (x0, x1) = padded(
        points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = padded(
        points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    let frame = if points.is_empty() {
        Frame { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 }
    } else {
        Frame { x0, x1, y0, y1 }
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // axes and integer ticks
    let (ax0, ax1) = (frame.px(frame.x0), frame.px(frame.x1));
    let (ay0, ay1) = (frame.py(frame.y0), frame.py(frame.y1));
    let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(s, r#"<line class="axis" x1="{ax0:.2}" y1="{ay0:.2}" x2="{ax1:.2}" y2="{ay0:.2}"/>"#);
    let _ = writeln!(s, r#"<line class="axis" x1="{ax0:.2}" y1="{ay0:.2}" x2="{ax0:.2}" y2="{ay1:.2}"/>"#);
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="ticks" text-anchor="middle">"#);
    for t in (frame.x0.ceil() as i64)..=(frame.x1.floor() as i64) {
        let x = frame.px(t as f64);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}">{t}</text>"#,
            ay0 + 18.0
        );
    }
    for t in (frame.y0.ceil() as i64)..=(frame.y1.floor() as i64) {
        let y = frame.py(t as f64);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t}</text>"#,
            ax0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">log2(1/N)</text>"#,
        (ax0 + ax1) / 2.0,
        HEIGHT - 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">log2(rms error)</text>"#,
        (ay0 + ay1) / 2.0,
        (ay0 + ay1) / 2.0
    );

    let line = |s: &mut String, class: &str, style: &str, f: &dyn Fn(f64) -> f64| {
        let _ = writeln!(
            s,
            r#"<line class="{class}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" {style}/>"#,
            frame.px(frame.x0),
            frame.py(f(frame.x0)),
            frame.px(frame.x1),
            frame.py(f(frame.x1)),
        );
    };
    let _ = writeln!(s, r#"<g class="lines">"#);
    if let Some(fit) = report.fit {
        line(&mut s, "fit", r#"stroke="steelblue" stroke-width="2""#, &|x| {
            fit.slope * x + fit.intercept
        });
    }
    if let Some(&(gx, gy)) = points.first() {
        line(&mut s, "guide", r#"stroke="gray" stroke-dasharray="6 4""#, &|x| {
            gy + 0.5 * (x - gx)
        });
    }
    let _ = writeln!(s, "</g>");
    for &(x, y) in &points {
        let _ = writeln!(
            s,
            r#"<circle class="data" cx="{:.2}" cy="{:.2}" r="4" fill="crimson"/>"#,
            frame.px(x),
            frame.py(y)
        );
    }

    let slope = report
        .fitted_slope()
        .map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
    let _ = writeln!(s, r#"<g class="legend">"#);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">fitted slope = {slope}</text>"#, LEFT + 12.0, TOP + 16.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">reference slope = 1/2</text>"#, LEFT + 12.0, TOP + 32.0);
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn emit_loglog_plot(report: &ErrorReport, title: &str, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, render(report, title)).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use acsolve_core::{fit_slope, ErrorRow};

    fn report(errors: &[(usize, f64)]) -> ErrorReport {
        let rows: Vec<ErrorRow> = errors
            .iter()
            .map(|&(resolution, rms_error)| ErrorRow {
                resolution,
                rms_error,
                mc_std_error: 0.0,
            })
            .collect();
        let pts: Vec<_> = errors.iter().map(|&(r, e)| (r as f64, e)).collect();
        ErrorReport {
            rows,
            samples: 10,
            fit: fit_slope(&pts).ok(),
        }
    }

    fn table1() -> ErrorReport {
        report(&[
            (4, 0.106381),
            (8, 0.077172),
            (16, 0.055174),
            (32, 0.039209),
            (64, 0.027624),
            (128, 0.019225),
        ])
    }

    #[test]
    fn six_points_two_lines() {
        let svg = render(&table1(), "joint");
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let count = |tag: &str, class: &str| {
            doc.descendants()
                .filter(|n| n.has_tag_name(tag) && n.attribute("class") == Some(class))
                .count()
        };
        assert_eq!(count("circle", "data"), 6);
        assert_eq!(count("line", "fit"), 1);
        assert_eq!(count("line", "guide"), 1);
    }

    #[test]
    fn legend_shows_slope() {
        let r = table1();
        let svg = render(&r, "joint");
        let want = format!("fitted slope = {:.3}", r.fitted_slope().unwrap());
        assert!(svg.contains(&want), "{want}");
        assert!(svg.contains("fitted slope = 0.494"));
    }

    #[test]
    fn degenerate_inputs_stay_valid() {
        for r in [
            report(&[(4, 0.1), (8, 0.07)]),
            report(&[(4, 0.1)]),
            report(&[(4, 0.1), (8, 0.1)]),
            report(&[(4, 0.0), (8, 0.0)]),
        ] {
            let svg = render(&r, "a < b & c");
            roxmltree::Document::parse(&svg).unwrap();
            assert!(!svg.contains("NaN") && !svg.contains("inf"), "{svg}");
        }
    }
}
