//! Static SVG overlays of trajectories: one polyline per run and a dashed line at `K`.

use std::fmt::Write as _;

use crate::control::Trajectory;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn trajectories(runs: &[Trajectory], title: &str) -> String {
    let n = runs.iter().map(|t| t.states.len()).max().unwrap_or(1).max(2);
    let k = runs.first().map(|t| t.k).unwrap_or(0.0);
    let values = runs.iter().flat_map(|t| t.states.iter().copied()).chain([k]);
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let x = |i: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / (n - 1) as f64;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ =
        writeln!(s, r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{x1}" y="{}" font-size="11" text-anchor="end">n = {}</text>"#, y0 + 30.0, n - 1);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{lo:.3}</text>"#, x0 - 4.0, y0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{hi:.3}</text>"#, x0 - 4.0, y1 + 4.0);
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{yk:.2}" x2="{x1}" y2="{yk:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        yk = y(k)
    );
    let _ = writeln!(s, r#"<text x="{}" y="{:.2}" font-size="11">K</text>"#, x1 + 4.0, y(k) + 4.0);
    for (r, t) in runs.iter().enumerate() {
        let mut pts = String::new();
        for (i, &v) in t.states.iter().enumerate() {
            let _ = write!(pts, "{:.2},{:.2} ", x(i), y(v));
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1" points="{}"/>"#,
            COLORS[r % COLORS.len()],
            pts.trim_end()
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
