//! Minimal log-log line plots of mean radius against n.

use std::fmt::Write;

use supnorm_core::montecarlo::CoverageReport;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

fn series(report: &CoverageReport) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for cell in &report.cells {
        let Some(r) = cell.mean_radius.filter(|r| *r > 0.0 && r.is_finite()) else {
            continue;
        };
        match out.iter_mut().find(|s| s.name == cell.method) {
            Some(s) => s.points.push((cell.n as f64, r)),
            None => out.push(Series { name: cell.method.clone(), points: vec![(cell.n as f64, r)], dashed: false }),
        }
    }
    let mut reference = |name: &str, pick: &dyn Fn(&supnorm_core::montecarlo::ReferenceLine) -> Option<f64>| {
        let points: Vec<(f64, f64)> = report
            .reference
            .iter()
            .filter_map(|line| pick(line).filter(|v| *v > 0.0).map(|v| (line.n as f64, v)))
            .collect();
        if !points.is_empty() {
            out.push(Series { name: name.to_string(), points, dashed: true });
        }
    };
    reference("oracle", &|l| Some(l.oracle_quantile));
    reference("oracle top-k", &|l| l.oracle_topk_quantile);
    reference("selective lb", &|l| l.selective_lb);
    out
}

/// Decade bounds covering `[lo, hi]`.
fn decades(lo: f64, hi: f64) -> (i32, i32) {
    let a = lo.log10().floor() as i32;
    let b = hi.log10().ceil() as i32;
    (a, if b > a { b } else { a + 1 })
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the report; identical reports give identical bytes.
pub fn render(report: &CoverageReport) -> String {
    let all = series(report);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let title = match report.k {
        Some(k) => format!("{} (top-{k})", report.label),
        None => report.label.clone(),
    };
    let _ = writeln!(svg, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + (WIDTH - LEFT - RIGHT) / 2.0, esc(&title));

    let xs = all.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = all.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let (xmin, xmax) = xs.fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(x), b.max(x)));
    let (ymin, ymax) = ys.fold((f64::INFINITY, 0.0f64), |(a, b), y| (a.min(y), b.max(y)));
    if all.is_empty() {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">no completed cells</text>"#, WIDTH / 2.0, HEIGHT / 2.0);
        svg.push_str("</svg>\n");
        return svg;
    }
    let (x0, x1) = decades(xmin, xmax);
    let (y0, y1) = decades(ymin, ymax);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x.log10() - x0 as f64) / (x1 - x0) as f64 * pw;
    let py = |y: f64| TOP + ph - (y.log10() - y0 as f64) / (y1 - y0) as f64 * ph;

    let _ = writeln!(svg, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for e in x0..=x1 {
        let x = px(10f64.powi(e));
        let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/>"##, TOP + ph);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#, TOP + ph + 18.0);
    }
    for e in y0..=y1 {
        let y = py(10f64.powi(e));
        let _ = writeln!(svg, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, LEFT + pw);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">n</text>"#, LEFT + pw / 2.0, HEIGHT - 12.0);
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">mean radius</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    for (i, s) in all.iter().enumerate() {
        let colour = if s.dashed { "black" } else { PALETTE[i % PALETTE.len()] };
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.8"{dash}/>"#, pts.join(" "));
        for &(x, y) in &s.points {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{colour}"/>"#, px(x), py(y));
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(svg, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="1.8"{dash}/>"#, lx + 22.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 28.0, ly + 4.0, esc(&s.name));
    }
    svg.push_str("</svg>\n");
    svg
}
