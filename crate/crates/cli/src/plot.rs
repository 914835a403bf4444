//! Static SVG line plots: inputs as dashed coloured series, the measured
//! output as a solid black series.

use std::fmt::Write as _;

use posture_sim::engine::Trace;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 45.0;

struct Series {
    label: &'static str,
    color: &'static str,
    dashed: bool,
    values: Vec<f64>,
}

pub fn trace_svg(trace: &Trace, title: &str) -> String {
    let ts: Vec<f64> = trace.rows.iter().map(|r| r.t).collect();
    let column = |f: fn(&posture_sim::TraceRow) -> f64| trace.rows.iter().map(f).collect::<Vec<_>>();
    let candidates = [
        Series {
            label: "posture target",
            color: "#d62728",
            dashed: true,
            values: column(|r| r.posture.target),
        },
        Series {
            label: "movement target",
            color: "#1f77b4",
            dashed: true,
            values: column(|r| r.movement.target),
        },
        Series {
            label: "APA",
            color: "#8c564b",
            dashed: true,
            values: column(|r| r.posture.injection),
        },
        Series {
            label: "disturbance",
            color: "#7f7f7f",
            dashed: true,
            values: column(|r| r.disturbance),
        },
        Series {
            label: "y",
            color: "#000000",
            dashed: false,
            values: column(|r| r.y),
        },
    ];
    // Inputs that stay at zero are left out; y is always drawn.
    let series: Vec<Series> = candidates
        .into_iter()
        .filter(|s| !s.dashed || s.values.iter().any(|v| *v != 0.0))
        .collect();

    let (t0, t1) = (
        ts.first().copied().unwrap_or(0.0),
        ts.last().copied().unwrap_or(1.0).max(1e-9),
    );
    let (mut lo, mut hi) = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi - lo < 1e-9 {
        hi += 1.0;
        lo -= 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |t: f64| LEFT + (t - t0) / (t1 - t0) * plot_w;
    let sy = |v: f64| TOP + (hi - v) / (hi - lo) * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    for t in nice_ticks(t0, t1, 10) {
        let x = sx(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 18.0,
            tick_label(t)
        );
    }
    for v in nice_ticks(lo, hi, 8) {
        let y = sy(v);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">time (s)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 8.0
    );

    for (i, s) in series.iter().enumerate() {
        let mut points = String::new();
        for (t, v) in ts.iter().zip(&s.values) {
            let _ = write!(points, "{:.2},{:.2} ", sx(*t), sy(*v));
        }
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let width = if s.dashed { 1.5 } else { 2.0 };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="{width}"{dash} points="{}"/>"#,
            s.color,
            points.trim_end()
        );
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="{width}"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 28.0,
            s.color,
            lx + 34.0,
            ly + 4.0,
            s.label
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Round tick positions covering `[lo, hi]`, about `target` of them.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else {
        r.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
