use std::fmt::Write as _;

use crate::harness::metrics::AggregatePoint;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Learning curves as an SVG document: one mean line per series with a
/// shaded ±1 std band.
pub fn render_svg(series: &[(String, Vec<AggregatePoint>)], y_label: &str) -> String {
    let points = series.iter().flat_map(|(_, p)| p.iter());
    let x_max = points.clone().map(|p| p.env_step as f64).fold(1.0, f64::max);
    let y_lo = points.clone().map(|p| p.mean - p.std).fold(0.0, f64::min);
    let y_hi = points.map(|p| p.mean + p.std).fold(y_lo + 1.0, f64::max);

    let sx = |x: f64| MARGIN + x / x_max * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0, x1, y1) = (sx(0.0), sy(y_lo), sx(x_max), sy(y_hi));
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" stroke="black" fill="none"/>"#
    );
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let xv = frac * x_max;
        let yv = y_lo + frac * (y_hi - y_lo);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(xv),
            y0 + 18.0,
            xv.round()
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.1}</text>"#,
            x0 - 6.0,
            sy(yv) + 4.0,
            yv
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">environment steps</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.1}" text-anchor="middle" transform="rotate(-90 15 {:.1})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    for (k, (name, pts)) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let upper: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.1},{:.1}", sx(p.env_step as f64), sy(p.mean + p.std)))
            .collect();
        let lower: Vec<String> = pts
            .iter()
            .rev()
            .map(|p| format!("{:.1},{:.1}", sx(p.env_step as f64), sy(p.mean - p.std)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polygon points="{} {}" fill="{colour}" fill-opacity="0.15" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.1},{:.1}", sx(p.env_step as f64), sy(p.mean)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = MARGIN + 18.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            x1 - 170.0,
            x1 - 150.0,
            x1 - 145.0,
            ly + 4.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(offset: f64) -> Vec<AggregatePoint> {
        (0..5)
            .map(|i| AggregatePoint {
                env_step: i * 1000,
                mean: offset + i as f64,
                std: 0.5,
                seeds: 3,
            })
            .collect()
    }

    #[test]
    fn one_band_and_line_per_series() {
        let svg = render_svg(
            &[("uniform+disagreement".into(), curve(0.0)), ("max_beta+hybrid".into(), curve(2.0))],
            "return",
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polygon").count(), 2);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("max_beta+hybrid"));
    }

    #[test]
    fn names_are_escaped() {
        let svg = render_svg(&[("a<b".into(), curve(0.0))], "r");
        assert!(svg.contains("a&lt;b"));
    }
}
