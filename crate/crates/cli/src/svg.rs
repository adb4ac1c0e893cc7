//! Minimal standalone SVG rendering of result tables: line plots and heat maps.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 52.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Axes<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_y: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = write!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        return Some((lo - 0.5, hi + 0.5));
    }
    Some((lo, hi))
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

/// Line plot of several series. With `log_y`, non-positive values are dropped.
pub fn line_plot(axes: &Axes, series: &[Series]) -> String {
    let ty = |y: f64| if axes.log_y { y.log10() } else { y };
    let usable = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!axes.log_y || y > 0.0);
    let xr = range(series.iter().flat_map(|s| s.points.iter().filter(|p| usable(p)).map(|p| p.0)));
    let yr = range(series.iter().flat_map(|s| s.points.iter().filter(|p| usable(p)).map(|p| ty(p.1))));
    let mut out = String::new();
    header(&mut out, axes.title);
    let (Some((x0, x1)), Some((y0, y1))) = (xr, yr) else {
        out.push_str("</svg>\n");
        return out;
    };
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_T + ph - (y - y0) / (y1 - y0) * ph;
    let _ = write!(
        out,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let ylab = if axes.log_y { format!("1e{yv:.1}") } else { tick_label(yv) };
        let _ = write!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            sx(xv),
            HEIGHT - MARGIN_B + 16.0,
            tick_label(xv),
            MARGIN_L - 6.0,
            sy(yv) + 4.0,
            ylab
        );
    }
    let _ = write!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text><text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 12.0,
        escape(axes.x_label),
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        escape(axes.y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| usable(p))
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(ty(y))))
            .collect();
        let _ = write!(
            out,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN_T + 14.0 + 16.0 * i as f64;
        let lx = WIDTH - MARGIN_R + 10.0;
        let _ = write!(
            out,
            r#"<line x1="{lx}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{colour}" stroke-width="2"/><text x="{:.1}" y="{ly:.1}">{}</text>"#,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0,
            lx + 24.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Heat map with rows `ys` and columns `xs`; `values[row][col]`, `None` cells
/// drawn grey. Colours run from white (minimum) to dark blue (maximum).
pub fn heat_map(title: &str, x_label: &str, y_label: &str, xs: &[String], ys: &[String], values: &[Vec<Option<f64>>]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let (lo, hi) = range(values.iter().flatten().flatten().copied()).unwrap_or((0.0, 1.0));
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let (cw, ch) = (pw / xs.len().max(1) as f64, ph / ys.len().max(1) as f64);
    for (r, row) in values.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let fill = match v {
                Some(v) if v.is_finite() => {
                    let f = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
                    let ch = |a: f64, b: f64| (a + f * (b - a)).round() as u8;
                    format!("#{:02x}{:02x}{:02x}", ch(255.0, 8.0), ch(255.0, 48.0), ch(255.0, 107.0))
                }
                _ => "#cccccc".to_string(),
            };
            let _ = write!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                MARGIN_L + c as f64 * cw,
                MARGIN_T + r as f64 * ch,
                cw,
                ch
            );
        }
    }
    for (c, x) in xs.iter().enumerate() {
        let _ = write!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            MARGIN_L + (c as f64 + 0.5) * cw,
            HEIGHT - MARGIN_B + 16.0,
            escape(x)
        );
    }
    for (r, y) in ys.iter().enumerate() {
        let _ = write!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            MARGIN_L - 6.0,
            MARGIN_T + (r as f64 + 0.5) * ch + 4.0,
            escape(y)
        );
    }
    let _ = write!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text><text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 12.0,
        escape(x_label),
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        escape(y_label)
    );
    let _ = write!(
        out,
        r#"<text x="{:.1}" y="{:.1}">max {}</text><text x="{:.1}" y="{:.1}">min {}</text>"#,
        WIDTH - MARGIN_R + 10.0,
        MARGIN_T + 14.0,
        tick_label(hi),
        WIDTH - MARGIN_R + 10.0,
        MARGIN_T + 30.0,
        tick_label(lo)
    );
    out.push_str("</svg>\n");
    out
}
