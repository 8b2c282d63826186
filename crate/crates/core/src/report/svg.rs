use std::fmt::Write as _;

use crate::cost::CostCurve;

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 240.0;
const MARGIN: f64 = 48.0;

/// Four side-by-side line plots (t1, t2, t3, cost) against `n`, with `n*`
/// marked by a red asterisk on each.
pub fn curve_svg(curve: &CostCurve) -> String {
    let xs: Vec<f64> = curve.points.iter().map(|p| p.terms.n as f64).collect();
    let series: [(&str, Vec<f64>); 4] = [
        ("t1", curve.points.iter().map(|p| p.terms.t1).collect()),
        ("t2", curve.points.iter().map(|p| p.terms.t2).collect()),
        ("t3", curve.points.iter().map(|p| p.terms.t3).collect()),
        ("cost", curve.points.iter().map(|p| p.cost).collect()),
    ];
    let star = curve.points.iter().position(|p| p.terms.n == curve.n_star);

    let width = 4.0 * (PANEL_W + MARGIN) + MARGIN;
    let height = PANEL_H + 2.0 * MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, (name, ys)) in series.iter().enumerate() {
        let x0 = MARGIN + i as f64 * (PANEL_W + MARGIN);
        panel(&mut out, x0, MARGIN, name, &xs, ys, star, curve.n_star);
    }
    out.push_str("</svg>\n");
    out
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

#[allow(clippy::too_many_arguments)]
fn panel(
    out: &mut String,
    x0: f64,
    y0: f64,
    name: &str,
    xs: &[f64],
    ys: &[f64],
    star: Option<usize>,
    n_star: usize,
) {
    let (xlo, xhi) = bounds(xs);
    let (ylo, yhi) = bounds(ys);
    let px = |x: f64| x0 + (x - xlo) / (xhi - xlo) * PANEL_W;
    let py = |y: f64| y0 + PANEL_H - (y - ylo) / (yhi - ylo) * PANEL_H;

    let _ = writeln!(
        out,
        r#"<rect x="{x0:.2}" y="{y0:.2}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{name}</text>"#,
        x0 + PANEL_W / 2.0,
        y0 - 8.0
    );
    for (v, y) in [(ylo, y0 + PANEL_H), (yhi, y0 + 10.0)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{y:.2}" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            tick(v)
        );
    }
    for (v, anchor) in [(xlo, "start"), (xhi, "end")] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{}</text>"#,
            px(v),
            y0 + PANEL_H + 16.0,
            tick(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">n</text>"#,
        x0 + PANEL_W / 2.0,
        y0 + PANEL_H + 32.0
    );

    let mut points = String::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if !points.is_empty() {
            points.push(' ');
        }
        let _ = write!(points, "{:.2},{:.2}", px(x), py(y));
    }
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{points}"/>"#
    );
    if let Some(i) = star {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" fill="red" font-size="20" text-anchor="middle" dominant-baseline="central">*</text>"#,
            px(xs[i]),
            py(ys[i])
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" fill="red" text-anchor="end">n*={n_star}</text>"#,
            x0 + PANEL_W - 4.0,
            y0 + 14.0
        );
    }
}

fn tick(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e9 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}
