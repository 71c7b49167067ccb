//! Standalone SVG bar chart of a class distribution.

use std::fmt::Write as _;

use crate::corpus::ClassShare;

const LABEL_WIDTH: f64 = 160.0;
pub const MAX_BAR_WIDTH: f64 = 400.0;
const COUNT_WIDTH: f64 = 60.0;
const BAR_HEIGHT: f64 = 22.0;
const GAP: f64 = 8.0;
const TITLE_HEIGHT: f64 = 36.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Bar length in pixels for `count` when the largest class has `max`.
pub fn bar_width(count: usize, max: usize) -> f64 {
    if max == 0 {
        0.0
    } else {
        (MAX_BAR_WIDTH * count as f64 / max as f64).round()
    }
}

/// Horizontal bars in the given order, one `rect class="bar"` per class,
/// with the class name and count as text.
pub fn class_chart_svg(shares: &[ClassShare], title: &str) -> String {
    let max = shares.iter().map(|s| s.count).max().unwrap_or(0);
    let width = LABEL_WIDTH + MAX_BAR_WIDTH + COUNT_WIDTH;
    let height = TITLE_HEIGHT + shares.len() as f64 * (BAR_HEIGHT + GAP) + GAP;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(
        out,
        r#"  <text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    for (i, s) in shares.iter().enumerate() {
        let y = TITLE_HEIGHT + i as f64 * (BAR_HEIGHT + GAP);
        let w = bar_width(s.count, max);
        let text_y = y + BAR_HEIGHT / 2.0 + 4.5;
        let _ = writeln!(
            out,
            r#"  <text x="{}" y="{text_y}" text-anchor="end">{}</text>"#,
            LABEL_WIDTH - 8.0,
            escape(&s.label)
        );
        let _ = writeln!(
            out,
            r##"  <rect class="bar" x="{LABEL_WIDTH}" y="{y}" width="{w}" height="{BAR_HEIGHT}" fill="#4c78a8"/>"##
        );
        let _ = writeln!(out, r#"  <text x="{}" y="{text_y}">{}</text>"#, LABEL_WIDTH + w + 6.0, s.count);
    }
    out.push_str("</svg>\n");
    out
}
