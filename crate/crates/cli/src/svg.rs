//! Minimal hand-emitted SVG line charts: axes, polylines, end-point labels.
//! Good enough for eyeballing trends; deliberately dependency-free.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_log: bool,
    pub series: Vec<Series>,
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 0.01 && v.abs() < 10_000.0 {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

impl Chart {
    pub fn render(&self) -> String {
        let transform = |v: f64| if self.log_log { v.log10() } else { v };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                if self.log_log && (x <= 0.0 || y <= 0.0) {
                    continue;
                }
                xs.push(transform(x));
                ys.push(transform(y));
            }
        }
        let (x_min, x_max) = bounds(&xs);
        let (y_min, y_max) = bounds(&ys);
        let px = |x: f64| {
            MARGIN_LEFT
                + (transform(x) - x_min) / (x_max - x_min)
                    * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
        };
        let py = |y: f64| {
            HEIGHT
                - MARGIN_BOTTOM
                - (transform(y) - y_min) / (y_max - y_min)
                    * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
        };

        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        );
        let _ = writeln!(
            out,
            "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
        );
        let _ = writeln!(
            out,
            "  <text x=\"{:.1}\" y=\"24\" font-family=\"monospace\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
            WIDTH / 2.0,
            escape(&self.title)
        );
        // Axes.
        let _ = writeln!(
            out,
            "  <line x1=\"{MARGIN_LEFT}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
            HEIGHT - MARGIN_BOTTOM,
            WIDTH - MARGIN_RIGHT,
            HEIGHT - MARGIN_BOTTOM
        );
        let _ = writeln!(
            out,
            "  <line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" y2=\"{:.1}\" stroke=\"black\"/>",
            HEIGHT - MARGIN_BOTTOM
        );
        // Extremal tick labels (in data units; log axes show the raw values).
        let untrans = |v: f64| if self.log_log { 10f64.powf(v) } else { v };
        let _ = writeln!(
            out,
            "  <text x=\"{MARGIN_LEFT}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\">{}</text>",
            HEIGHT - MARGIN_BOTTOM + 18.0,
            fmt_tick(untrans(x_min))
        );
        let _ = writeln!(
            out,
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">{}</text>",
            WIDTH - MARGIN_RIGHT,
            HEIGHT - MARGIN_BOTTOM + 18.0,
            fmt_tick(untrans(x_max))
        );
        let _ = writeln!(
            out,
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">{}</text>",
            MARGIN_LEFT - 6.0,
            HEIGHT - MARGIN_BOTTOM,
            fmt_tick(untrans(y_min))
        );
        let _ = writeln!(
            out,
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">{}</text>",
            MARGIN_LEFT - 6.0,
            MARGIN_TOP + 4.0,
            fmt_tick(untrans(y_max))
        );
        let _ = writeln!(
            out,
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
            (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            "  <text x=\"16\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );

        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let mut path = String::new();
            for &(x, y) in &s.points {
                if self.log_log && (x <= 0.0 || y <= 0.0) {
                    continue;
                }
                if !path.is_empty() {
                    path.push(' ');
                }
                let _ = write!(path, "{:.2},{:.2}", px(x), py(y));
            }
            let _ = writeln!(
                out,
                "  <polyline points=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>"
            );
            // Legend entry.
            let ly = MARGIN_TOP + 16.0 * k as f64;
            let _ = writeln!(
                out,
                "  <rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"4\" fill=\"{color}\"/>",
                WIDTH - MARGIN_RIGHT - 170.0,
                ly
            );
            let _ = writeln!(
                out,
                "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\">{}</text>",
                WIDTH - MARGIN_RIGHT - 152.0,
                ly + 6.0,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_document() {
        let chart = Chart {
            title: "demo".into(),
            x_label: "t".into(),
            y_label: "err".into(),
            log_log: false,
            series: vec![Series {
                label: "trace".into(),
                points: vec![(1.0, 2.0), (2.0, 1.0), (3.0, 4.0)],
            }],
        };
        let svg = chart.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline"));
        // Deterministic output.
        assert_eq!(svg, chart.render());
    }
}
