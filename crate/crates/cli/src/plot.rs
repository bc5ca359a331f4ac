//! Bare-bones SVG line charts drawn from CSV-ready series.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn bounds(series: &[Series]) -> Option<(f64, f64, f64, f64)> {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    let mut any = false;
    for &(x, y) in pts {
        any = true;
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !any {
        return None;
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    Some((x0, x1, y0, y1))
}

pub fn line_chart(title: &str, x_label: &str, series: &[Series]) -> String {
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#, WIDTH / 2.0);
    let Some((x0, x1, y0, y1)) = bounds(series) else {
        svg.push_str("</svg>\n");
        return svg;
    };
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{m} {top} V{bot} H{right}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        top = MARGIN,
        bot = HEIGHT - MARGIN,
        right = WIDTH - MARGIN
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
    for (v, anchor, x) in [(x0, "start", MARGIN), (x1, "end", WIDTH - MARGIN)] {
        let _ = writeln!(svg, r#"<text x="{x}" y="{}" text-anchor="{anchor}">{v:.3}</text>"#, HEIGHT - MARGIN + 15.0);
    }
    for (v, y) in [(y0, HEIGHT - MARGIN), (y1, MARGIN)] {
        let _ = writeln!(svg, r#"<text x="{}" y="{y}" text-anchor="end">{v:.3e}</text>"#, MARGIN - 4.0);
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        for (j, &(x, y)) in s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()).enumerate() {
            let _ = write!(d, "{}{:.2} {:.2} ", if j == 0 { "M" } else { "L" }, sx(x), sy(y));
        }
        let _ = writeln!(svg, r#"<path d="{}" fill="none" stroke="{color}"/>"#, d.trim_end());
        let _ = writeln!(svg, r#"<text x="{}" y="{}" fill="{color}">{}</text>"#, WIDTH - MARGIN - 120.0, MARGIN + 15.0 * (i as f64 + 1.0), s.name);
    }
    svg.push_str("</svg>\n");
    svg
}
