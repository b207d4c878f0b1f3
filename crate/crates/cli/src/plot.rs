//! Minimal static SVG plot of rate vs long-path efficiency, one polyline per
//! short-path efficiency series. Display only: rates are clamped at 0.

use crate::row::ResultRow;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn fmt(v: f64) -> String {
    format!("{:.4}", v)
}

/// Rows must already be in sweep order (eta_s desc, eta_l asc); rows with a
/// non-finite rate are skipped.
pub fn rate_plot_svg(rows: &[ResultRow]) -> String {
    let pts: Vec<&ResultRow> = rows.iter().filter(|r| r.rate.is_finite()).collect();
    let (x0, x1) = pts.iter().fold((1.0f64, 0.0f64), |(lo, hi), r| {
        (lo.min(r.eta_l), hi.max(r.eta_l))
    });
    let (x0, x1) = if x0 < x1 { (x0, x1) } else { (0.0, 1.0) };
    let y1 = pts
        .iter()
        .map(|r| r.rate.max(0.0))
        .fold(0.0f64, f64::max)
        .max(1e-3);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - y.max(0.0) / y1 * (H - 2.0 * MARGIN);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN,
        t = MARGIN
    ));
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y1 * k as f64 / 4.0;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            sx(fx),
            H - MARGIN + 18.0,
            fmt(fx)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            MARGIN - 6.0,
            sy(fy) + 4.0,
            fmt(fy)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">long-path efficiency</text>\n",
        W / 2.0,
        H - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">key rate</text>\n",
        H / 2.0,
        H / 2.0
    ));

    // One series per (eta_s, visibility), preserving row order within.
    let mut series: Vec<((f64, f64), Vec<&ResultRow>)> = Vec::new();
    for r in &pts {
        let key = (r.eta_s, r.visibility);
        match series.last_mut() {
            Some((k, v)) if *k == key => v.push(r),
            _ => series.push((key, vec![r])),
        }
    }
    for (i, ((eta_s, vis), rows)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = rows
            .iter()
            .map(|r| format!("{},{}", fmt(sx(r.eta_l)), fmt(sy(r.rate))))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">eta_s={eta_s} v={vis}</text>\n",
            W - MARGIN - 150.0,
            MARGIN + 16.0 * (i + 1) as f64
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(eta_s: f64, eta_l: f64, rate: f64) -> ResultRow {
        ResultRow {
            protocol: "rBB84".into(),
            eta_s,
            eta_l,
            visibility: 1.0,
            level: "2".into(),
            m: 4,
            h_ae: 0.0,
            h_ab: 0.0,
            rate,
            status: "optimal".into(),
            gap: 0.0,
            seconds: 0.0,
        }
    }

    #[test]
    fn emits_one_polyline_per_series() {
        let rows = vec![
            row(1.0, 0.8, 0.1),
            row(1.0, 0.9, 0.3),
            row(0.9, 0.8, 0.05),
            row(0.9, 0.9, 0.2),
        ];
        let svg = rate_plot_svg(&rows);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn negative_rates_are_clamped_to_axis() {
        let rows = vec![row(1.0, 0.5, -0.4), row(1.0, 0.9, 0.5)];
        let svg = rate_plot_svg(&rows);
        // The clamped point sits on the x axis, y = H - MARGIN.
        assert!(svg.contains(&format!(",{}", fmt(H - MARGIN))), "{svg}");
    }
}
