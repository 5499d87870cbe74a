//! Cumulative-error-curve SVG emission: pure text, no external assets.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub struct Series {
    pub name: String,
    /// Pose errors in degrees.
    pub errors: Vec<f64>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Step recall curve `recall(e) = |errors <= e| / N` over `[0, max_deg]`
/// for each series, as one polyline per series with a legend.
pub fn cumulative_error_svg(series: &[Series], max_deg: f64) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |deg: f64| MARGIN_LEFT + (deg / max_deg) * plot_w;
    let y_of = |recall: f64| MARGIN_TOP + (1.0 - recall) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    // Axes and grid.
    let mut tick = 0.0;
    while tick <= max_deg + 1e-9 {
        let x = x_of(tick);
        svg.push_str(&format!(
            "  <line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#dddddd\"/>\n",
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        ));
        svg.push_str(&format!(
            "  <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{tick:.0}</text>\n",
            MARGIN_TOP + plot_h + 18.0
        ));
        tick += max_deg / 4.0;
    }
    for i in 0..=4 {
        let recall = i as f64 / 4.0;
        let y = y_of(recall);
        svg.push_str(&format!(
            "  <line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\"/>\n",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{recall:.2}</text>\n",
            MARGIN_LEFT - 8.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "  <rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">pose error (deg)</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "  <text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">recall</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let n = s.errors.len().max(1) as f64;
        let mut sorted = s.errors.clone();
        sorted.sort_by(f64::total_cmp);

        let mut points = vec![(0.0f64, 0.0f64)];
        let mut recall = 0.0;
        let mut j = 0;
        while j < sorted.len() && sorted[j] <= max_deg {
            let v = sorted[j];
            points.push((v.max(0.0), recall));
            while j < sorted.len() && sorted[j] == v {
                recall += 1.0 / n;
                j += 1;
            }
            points.push((v.max(0.0), recall));
        }
        points.push((max_deg, recall));

        let path: Vec<String> = points
            .iter()
            .map(|&(deg, r)| format!("{:.2},{:.2}", x_of(deg), y_of(r)))
            .collect();
        svg.push_str(&format!(
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            path.join(" ")
        ));

        // Legend entry.
        let ly = MARGIN_TOP + 16.0 + 18.0 * i as f64;
        svg.push_str(&format!(
            "  <line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            MARGIN_LEFT + 12.0,
            MARGIN_LEFT + 40.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            MARGIN_LEFT + 46.0,
            ly + 4.0,
            escape(&s.name)
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_errors_draw_the_constant_one_line() {
        let svg = cumulative_error_svg(
            &[Series { name: "perfect".into(), errors: vec![0.0; 10] }],
            20.0,
        );
        // The curve jumps to recall 1 at x = 0 and stays there.
        let y_top = MARGIN_TOP;
        assert!(svg.contains(&format!("{:.2},{:.2}", MARGIN_LEFT, y_top)));
        assert!(svg.contains(&format!(
            "{:.2},{:.2}",
            MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT),
            y_top
        )));
    }

    #[test]
    fn two_series_two_polylines_with_legend() {
        let svg = cumulative_error_svg(
            &[
                Series { name: "a<b".into(), errors: vec![1.0, 3.0] },
                Series { name: "other".into(), errors: vec![25.0] },
            ],
            20.0,
        );
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains("other"));
    }
}
