//! Minimal dependency-free SVG plotting: scatter and line charts with axes,
//! ticks and a legend. CSV remains the canonical output; these figures are a
//! convenience view of the same data.

use std::fmt::Write as _;

pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub points: Vec<[f64; 2]>,
    /// Connect the points with a polyline instead of drawing markers.
    pub line: bool,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0; // room for the legend
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

fn finite_bounds(series: &[Series]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for s in series {
        for p in &s.points {
            for d in 0..2 {
                if p[d].is_finite() {
                    lo[d] = lo[d].min(p[d]);
                    hi[d] = hi[d].max(p[d]);
                }
            }
        }
    }
    for d in 0..2 {
        if !lo[d].is_finite() {
            lo[d] = 0.0;
            hi[d] = 1.0;
        }
        if hi[d] - lo[d] < 1e-12 {
            // Degenerate span: pad around the value.
            lo[d] -= 0.5;
            hi[d] += 0.5;
        }
        let pad = 0.05 * (hi[d] - lo[d]);
        lo[d] -= pad;
        hi[d] += pad;
    }
    (lo, hi)
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1000.0 || a < 0.01 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Renders the series into a complete standalone SVG document.
pub fn plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let (lo, hi) = finite_bounds(series);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - lo[0]) / (hi[0] - lo[0]) * plot_w;
    let sy = |y: f64| MARGIN_T + plot_h - (y - lo[1]) / (hi[1] - lo[1]) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"monospace\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        MARGIN_L + plot_w / 2.0,
        title
    );

    // Axes box, ticks and grid.
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"black\"/>"
    );
    let n_ticks = 5;
    for i in 0..=n_ticks {
        let f = i as f64 / n_ticks as f64;
        let xv = lo[0] + f * (hi[0] - lo[0]);
        let yv = lo[1] + f * (hi[1] - lo[1]);
        let xp = sx(xv);
        let yp = sy(yv);
        let _ = writeln!(
            s,
            "<line x1=\"{xp}\" y1=\"{}\" x2=\"{xp}\" y2=\"{}\" stroke=\"#dddddd\"/>",
            MARGIN_T,
            MARGIN_T + plot_h
        );
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{yp}\" x2=\"{}\" y2=\"{yp}\" stroke=\"#dddddd\"/>",
            MARGIN_L,
            MARGIN_L + plot_w
        );
        let _ = writeln!(
            s,
            "<text x=\"{xp}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            MARGIN_T + plot_h + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            MARGIN_L - 6.0,
            yp + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0,
        xlabel
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        ylabel
    );

    // Data.
    for sr in series {
        let pts: Vec<[f64; 2]> = sr
            .points
            .iter()
            .filter(|p| p[0].is_finite() && p[1].is_finite())
            .copied()
            .collect();
        if sr.line {
            let path: Vec<String> = pts
                .iter()
                .map(|p| format!("{:.2},{:.2}", sx(p[0]), sy(p[1])))
                .collect();
            let _ = writeln!(
                s,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>",
                path.join(" "),
                sr.color
            );
        } else {
            for p in &pts {
                let _ = writeln!(
                    s,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"{}\" fill-opacity=\"0.8\"/>",
                    sx(p[0]),
                    sy(p[1]),
                    sr.color
                );
            }
        }
    }

    // Legend.
    for (i, sr) in series.iter().enumerate() {
        let y = MARGIN_T + 14.0 + 16.0 * i as f64;
        let x = MARGIN_L + plot_w + 14.0;
        let _ = writeln!(
            s,
            "<rect x=\"{x}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>",
            y - 9.0,
            sr.color
        );
        let _ = writeln!(s, "<text x=\"{}\" y=\"{y}\">{}</text>", x + 16.0, sr.label);
    }
    s.push_str("</svg>\n");
    s
}
