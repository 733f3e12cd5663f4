//! Static SVG figures emitted alongside each run.
//!
//! Two shapes cover every command: labelled line series over a shared
//! axis, and a scatter of samples with a fitted curve drawn through
//! them. Plotting failures never abort a run's data outputs; commands
//! plot last.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{write_err, CliError};

const SIZE: (u32, u32) = (900, 560);
const COLORS: [RGBColor; 4] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-12 + hi.abs() * 1e-9);
    (lo - pad, hi + pad)
}

/// Draws labelled line series into an SVG file.
pub fn line_chart(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series<'_>],
) -> Result<(), CliError> {
    let map = |e: &dyn std::fmt::Display| write_err(path, e);
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| map(&e))?;
    let x_range = axis_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let y_range = axis_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(42)
        .y_label_area_size(64)
        .build_cartesian_2d(x_range.0..x_range.1, y_range.0..y_range.1)
        .map_err(|e| map(&e))?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc(y_label)
        .draw()
        .map_err(|e| map(&e))?;
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
            .map_err(|e| map(&e))?
            .label(s.label)
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2))
            });
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.85))
        .draw()
        .map_err(|e| map(&e))?;
    root.present().map_err(|e| map(&e))
}

/// Draws measured points plus a fitted curve, the calibration view.
pub fn fit_chart(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    data: &[(f64, f64)],
    curve: &[(f64, f64)],
) -> Result<(), CliError> {
    let map = |e: &dyn std::fmt::Display| write_err(path, e);
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| map(&e))?;
    let xs = data.iter().chain(curve).map(|p| p.0);
    let ys = data.iter().chain(curve).map(|p| p.1);
    let x_range = axis_range(xs);
    let y_range = axis_range(ys);
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(42)
        .y_label_area_size(64)
        .build_cartesian_2d(x_range.0..x_range.1, y_range.0..y_range.1)
        .map_err(|e| map(&e))?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc(y_label)
        .draw()
        .map_err(|e| map(&e))?;
    chart
        .draw_series(LineSeries::new(curve.iter().copied(), COLORS[1].stroke_width(2)))
        .map_err(|e| map(&e))?
        .label("model")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], COLORS[1].stroke_width(2)));
    chart
        .draw_series(data.iter().map(|&(x, y)| Circle::new((x, y), 3, COLORS[0].filled())))
        .map_err(|e| map(&e))?
        .label("data")
        .legend(|(x, y)| Circle::new((x + 9, y), 3, COLORS[0].filled()));
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.85))
        .draw()
        .map_err(|e| map(&e))?;
    root.present().map_err(|e| map(&e))
}
