use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;

use mcar_core::harness::{read_results_csv, ResultRow};

use crate::{Failure, PlotArgs, XAxis};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn colour(test: &str) -> &'static str {
    match test {
        "an" => "#ff7f0e",
        "d2" | "d2_general" | "d2_univariate" => "#1f77b4",
        "dn" => "#2ca02c",
        _ => "#7f7f7f",
    }
}

struct Point {
    x: f64,
    rate: f64,
    lo: f64,
    hi: f64,
}

fn x_value(row: &ResultRow, axis: XAxis) -> Option<f64> {
    match axis {
        XAxis::N => Some(row.n as f64),
        _ => row.param,
    }
}

fn pick_axis(rows: &[ResultRow], requested: XAxis) -> Result<XAxis, Failure> {
    if requested != XAxis::Auto {
        return Ok(requested);
    }
    let ns: BTreeSet<usize> = rows.iter().map(|r| r.n).collect();
    let params: BTreeSet<u64> = rows.iter().filter_map(|r| r.param).map(f64::to_bits).collect();
    match (ns.len() > 1, params.len() > 1) {
        (true, true) => Err(Failure::data(
            "mixed sweeps: both n and param vary in one results file",
        )),
        (true, false) => Ok(XAxis::N),
        _ => Ok(XAxis::Param),
    }
}

/// Groups rows into one series per test, sorted by x.
fn series(rows: &[ResultRow], axis: XAxis) -> Result<BTreeMap<String, Vec<Point>>, Failure> {
    let cells: BTreeSet<(&str, &str, &str)> = rows
        .iter()
        .map(|r| (r.label.as_str(), r.distribution.as_str(), r.mechanism.as_str()))
        .collect();
    if cells.len() > 1 {
        return Err(Failure::data(
            "mixed sweeps: rows come from more than one label/distribution/mechanism",
        ));
    }
    let mut out: BTreeMap<String, Vec<Point>> = BTreeMap::new();
    for row in rows {
        let x = x_value(row, axis)
            .ok_or_else(|| Failure::data(format!("row for test {} has no param value", row.test)))?;
        out.entry(row.test.clone()).or_default().push(Point {
            x,
            rate: row.rate.clamp(0.0, 1.0),
            lo: row.ci_low.clamp(0.0, 1.0),
            hi: row.ci_high.clamp(0.0, 1.0),
        });
    }
    for (test, pts) in out.iter_mut() {
        pts.sort_by(|a, b| a.x.total_cmp(&b.x));
        if pts.windows(2).any(|w| w[0].x == w[1].x) {
            return Err(Failure::data(format!(
                "mixed sweeps: test {test} has repeated x values"
            )));
        }
    }
    if out.values().all(|pts| pts.len() < 2) {
        return Err(Failure::data("nothing to plot: need at least two grid points"));
    }
    Ok(out)
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn render_svg(rows: &[ResultRow], axis: XAxis, alpha: f64) -> Result<String, Failure> {
    if rows.is_empty() {
        return Err(Failure::data("nothing to plot: the results file has no rows"));
    }
    let axis = pick_axis(rows, axis)?;
    let data = series(rows, axis)?;
    let xs: BTreeSet<u64> = data.values().flatten().map(|p| p.x.to_bits()).collect();
    let xs: Vec<f64> = xs.into_iter().map(f64::from_bits).collect();
    let (x_min, x_max) = (xs[0], xs[xs.len() - 1]);
    let top = data
        .values()
        .flatten()
        .map(|p| p.hi)
        .fold(alpha.clamp(0.0, 1.0), f64::max);
    let y_max = ((top * 1.1 * 10.0).ceil() / 10.0).clamp(0.1, 1.0);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| {
        if x_max > x_min {
            LEFT + (x - x_min) / (x_max - x_min) * plot_w
        } else {
            LEFT + plot_w / 2.0
        }
    };
    let sy = |y: f64| TOP + (1.0 - y / y_max) * plot_h;

    let first = &rows[0];
    let x_name = if axis == XAxis::N { "n" } else { "missingness probability" };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{} {} {}</text>"#,
        LEFT + plot_w / 2.0,
        first.label,
        first.distribution,
        first.mechanism
    );

    // axes and ticks
    let _ = writeln!(
        svg,
        r#"<path d="M{LEFT},{TOP} V{} H{}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    for &x in &xs {
        let px = sx(x);
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 16.0,
            fmt_tick(x)
        );
    }
    for k in 0..=5 {
        let y = y_max * k as f64 / 5.0;
        let py = sy(y);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py + 4.0,
            fmt_tick(y)
        );
        let _ = writeln!(
            svg,
            r##"<path d="M{LEFT},{py:.2} H{:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_name}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">rejection rate</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    // alpha reference
    if alpha <= y_max {
        let _ = writeln!(
            svg,
            r#"<line class="alpha" x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="5,4"/>"#,
            sy(alpha),
            LEFT + plot_w,
            sy(alpha)
        );
    }

    for (i, (test, pts)) in data.iter().enumerate() {
        let c = colour(test);
        let upper = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.hi)));
        let lower = pts.iter().rev().map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.lo)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            svg,
            r#"<polygon class="band" data-test="{test}" points="{}" fill="{c}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.rate)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-test="{test}" points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            svg,
            r#"<path d="M{lx:.2},{ly:.2} h20" stroke="{c}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{test}</text>"#,
            lx + 26.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn cmd_plot(a: PlotArgs) -> Result<(), Failure> {
    let file = fs::File::open(&a.input)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", a.input.display())))?;
    let rows = read_results_csv(file)?;
    let svg = render_svg(&rows, a.x, a.alpha)?;
    fs::write(&a.out, svg)
        .map_err(|e| Failure::data(format!("cannot write {}: {e}", a.out.display())))?;
    Ok(())
}
