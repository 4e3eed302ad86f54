//! Minimal SVG line charts for the `plot` subcommand.

use std::fmt::Write as _;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Renders series as polylines with axes and tick labels.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    y_range: Option<(f64, f64)>,
) -> String {
    let (w, h) = (720.0, 440.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let plot_w = w - ml - mr;
    let plot_h = h - mt - mb;

    let all = series.iter().flat_map(|s| s.points.iter());
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for &(x, y) in all {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if let Some((lo, hi)) = y_range {
        y_min = lo;
        y_max = hi;
    }
    if !x_min.is_finite() || x_max <= x_min {
        x_min = 0.0;
        x_max = 1.0;
    }
    if !y_min.is_finite() || y_max <= y_min {
        y_min = 0.0;
        y_max = 1.0;
    }
    let sx = |x: f64| ml + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| mt + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>"#,
        w / 2.0
    )
    .unwrap();

    // Axes and ticks.
    writeln!(
        out,
        r#"<g stroke="black" fill="none"><path d="M {ml} {mt} V {y0} H {x1}"/></g>"#,
        y0 = mt + plot_h,
        x1 = ml + plot_w
    )
    .unwrap();
    for i in 0..=5 {
        let frac = i as f64 / 5.0;
        let xv = x_min + frac * (x_max - x_min);
        let yv = y_min + frac * (y_max - y_min);
        writeln!(
            out,
            r#"<line x1="{x}" y1="{y0}" x2="{x}" y2="{y2}" stroke="black"/><text x="{x}" y="{yt}" font-family="sans-serif" font-size="11" text-anchor="middle">{xv:.3}</text>"#,
            x = sx(xv),
            y0 = mt + plot_h,
            y2 = mt + plot_h + 5.0,
            yt = mt + plot_h + 20.0,
        )
        .unwrap();
        writeln!(
            out,
            r#"<line x1="{x0}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/><text x="{xt}" y="{yy}" font-family="sans-serif" font-size="11" text-anchor="end">{yv:.3}</text>"#,
            x0 = ml - 5.0,
            x2 = ml,
            y = sy(yv),
            xt = ml - 8.0,
            yy = sy(yv) + 4.0,
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{x_label}</text>"#,
        ml + plot_w / 2.0,
        h - 12.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">{y_label}</text>"#,
        mt + plot_h / 2.0,
        mt + plot_h / 2.0
    )
    .unwrap();

    for (i, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (j, &(x, y)) in s.points.iter().enumerate() {
            let cmd = if j == 0 { 'M' } else { 'L' };
            write!(d, "{cmd} {:.2} {:.2} ", sx(x), sy(y.clamp(y_min, y_max))).unwrap();
        }
        writeln!(
            out,
            r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            s.color
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{}">{}</text>"#,
            ml + plot_w - 150.0,
            mt + 16.0 + 16.0 * i as f64,
            s.color,
            s.label
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
