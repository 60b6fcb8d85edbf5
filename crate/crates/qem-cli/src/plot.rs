//! Minimal SVG line charts for visual inspection of magnetization and
//! deviation curves. One polyline per series, fixed palette, no external
//! rendering dependencies.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Renders named `(times, values)` series into a standalone SVG document.
pub fn line_chart(title: &str, series: &[(String, Vec<f64>, Vec<f64>)]) -> String {
    let points: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, ts, vs)| ts.iter().copied().zip(vs.iter().copied()))
        .filter(|(t, v)| t.is_finite() && v.is_finite())
        .collect();
    let (x_min, x_max) = bounds(points.iter().map(|p| p.0), 0.0, 1.0);
    let (y_min, y_max) = bounds(points.iter().map(|p| p.1), -1.0, 1.0);
    let x_span = (x_max - x_min).max(1e-12);
    let y_span = (y_max - y_min).max(1e-12);
    let sx = |t: f64| MARGIN + (t - x_min) / x_span * (WIDTH - 2.0 * MARGIN);
    let sy = |v: f64| HEIGHT - MARGIN - (v - y_min) / y_span * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n  <text x=\"{}\" \
         y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));
    // axes
    svg.push_str(&format!(
        "  <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n  <line \
         x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN
    ));
    for (frac, along_x) in [(0.0, true), (0.5, true), (1.0, true), (0.0, false), (0.5, false), (1.0, false)] {
        if along_x {
            let t = x_min + frac * x_span;
            svg.push_str(&format!(
                "  <text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
                 font-size=\"11\">{:.3}</text>\n",
                sx(t),
                HEIGHT - MARGIN + 18.0,
                t
            ));
        } else {
            let v = y_min + frac * y_span;
            svg.push_str(&format!(
                "  <text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" \
                 font-size=\"11\">{:.3}</text>\n",
                MARGIN - 6.0,
                sy(v) + 4.0,
                v
            ));
        }
    }
    for (k, (name, ts, vs)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = ts
            .iter()
            .zip(vs)
            .filter(|(t, v)| t.is_finite() && v.is_finite())
            .map(|(t, v)| format!("{:.2},{:.2}", sx(*t), sy(*v)))
            .collect();
        svg.push_str(&format!(
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"{color}\">{}</text>\n",
            WIDTH - MARGIN + 4.0 - 120.0,
            MARGIN + 16.0 * (k as f64 + 1.0),
            escape(name)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>, lo: f64, hi: f64) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if min > max {
        (lo, hi)
    } else if min == max {
        (min - 0.5, max + 0.5)
    } else {
        (min, max)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
