use plotters::prelude::*;

use super::AblationRow;
use crate::error::{Error, Result};

type Series<'a> = (&'a str, Vec<(f64, f64)>, RGBColor);

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.08).max(1e-6);
    (lo - pad, hi + pad)
}

/// Two stacked line charts over the forgetting scale: alignment on top,
/// mean log-likelihood below.
pub fn render_ablation_svg(rows: &[AblationRow]) -> Result<String> {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (720, 640)).into_drawing_area();
        let plot_err = |e: String| Error::InvalidArgument(format!("plot: {e}"));
        root.fill(&WHITE).map_err(|e| plot_err(e.to_string()))?;
        let panels = root.split_evenly((2, 1));
        let (x_lo, x_hi) = range(rows.iter().map(|r| r.eta));

        let series: [Series; 2] = [
            (
                "toy CLIP-T (x100)",
                rows.iter().map(|r| (r.eta, r.alignment_mean)).collect(),
                BLUE,
            ),
            (
                "mean log-likelihood",
                rows.iter().map(|r| (r.eta, r.log_likelihood_mean)).collect(),
                RED,
            ),
        ];

        for (area, (name, points, color)) in panels.iter().zip(series) {
            let (y_lo, y_hi) = range(points.iter().map(|p| p.1));
            let mut chart = ChartBuilder::on(area)
                .caption(name, ("sans-serif", 18))
                .margin(12)
                .x_label_area_size(36)
                .y_label_area_size(64)
                .build_cartesian_2d(x_lo..x_hi, y_lo..y_hi)
                .map_err(|e| plot_err(e.to_string()))?;
            chart
                .configure_mesh()
                .x_desc("forgetting scale eta")
                .draw()
                .map_err(|e| plot_err(e.to_string()))?;
            chart
                .draw_series(LineSeries::new(points.clone(), color.stroke_width(2)))
                .map_err(|e| plot_err(e.to_string()))?;
            chart
                .draw_series(points.iter().map(|&p| Circle::new(p, 4, color.filled())))
                .map_err(|e| plot_err(e.to_string()))?;
        }
        root.present().map_err(|e| plot_err(e.to_string()))?;
    }
    Ok(svg)
}
