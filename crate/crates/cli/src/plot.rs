//! SVG charts rendered from the CSV files a subcommand has already written.
//! Plots never feed back into numeric outputs.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{CliError, CliResult};

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Linear,
    /// Plotted as log10 of the value; non-positive values are dropped.
    Log,
}

impl Axis {
    fn map(self, v: f64) -> Option<f64> {
        match self {
            Axis::Linear => v.is_finite().then_some(v),
            Axis::Log => (v > 0.0).then(|| v.log10()),
        }
    }

    fn label(self, name: &str) -> String {
        match self {
            Axis::Linear => name.to_string(),
            Axis::Log => format!("log10 {name}"),
        }
    }
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn draw_err<E: std::fmt::Debug>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Output(format!("{}: {e:?}", path.display()))
}

pub struct LineChart<'a> {
    pub title: &'a str,
    pub x: (&'a str, Axis),
    pub y: (&'a str, Axis),
    pub series: Vec<Series>,
}

impl LineChart<'_> {
    pub fn render(&self, path: &Path) -> CliResult<()> {
        let (xa, ya) = (self.x.1, self.y.1);
        let mapped: Vec<(String, Vec<(f64, f64)>)> = self
            .series
            .iter()
            .map(|s| {
                let pts = s
                    .points
                    .iter()
                    .filter_map(|&(x, y)| Some((xa.map(x)?, ya.map(y)?)))
                    .collect();
                (s.label.clone(), pts)
            })
            .collect();
        let xr = span(mapped.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
        let yr = span(mapped.iter().flat_map(|s| s.1.iter().map(|p| p.1)));

        let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
        let err = draw_err(path);
        root.fill(&WHITE).map_err(&err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(self.title, ("sans-serif", 20))
            .margin(15)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(xr.0..xr.1, yr.0..yr.1)
            .map_err(&err)?;
        chart
            .configure_mesh()
            .x_desc(xa.label(self.x.0))
            .y_desc(ya.label(self.y.0))
            .draw()
            .map_err(&err)?;
        for (i, (label, pts)) in mapped.into_iter().enumerate() {
            let color = Palette99::pick(i).to_rgba();
            chart
                .draw_series(LineSeries::new(pts, color.stroke_width(2)))
                .map_err(&err)?
                .label(label)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
        }
        if self.series.len() > 1 {
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(&err)?;
        }
        root.present().map_err(&err)?;
        Ok(())
    }
}

/// Histogram from `(low, high, count)` bins.
pub fn histogram_chart(path: &Path, title: &str, x_desc: &str, bins: &[(f64, f64, usize)]) -> CliResult<()> {
    let err = draw_err(path);
    let xr = span(bins.iter().flat_map(|b| [b.0, b.1]));
    let ymax = bins.iter().map(|b| b.2).max().unwrap_or(1).max(1) as f64 * 1.1;
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(&err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(xr.0..xr.1, 0.0..ymax)
        .map_err(&err)?;
    chart
        .configure_mesh()
        .x_desc(x_desc)
        .y_desc("count")
        .draw()
        .map_err(&err)?;
    chart
        .draw_series(
            bins.iter()
                .map(|&(lo, hi, n)| Rectangle::new([(lo, 0.0), (hi, n as f64)], BLUE.mix(0.6).filled())),
        )
        .map_err(&err)?;
    root.present().map_err(&err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_svg_with_text() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.svg");
        LineChart {
            title: "decay",
            x: ("t [s]", Axis::Linear),
            y: ("I [A]", Axis::Log),
            series: vec![
                Series {
                    label: "a".into(),
                    points: (1..50).map(|k| (k as f64, (-(k as f64) / 10.0).exp())).collect(),
                },
                Series {
                    label: "b".into(),
                    points: vec![(1.0, 0.5), (2.0, 0.0)],
                },
            ],
        }
        .render(&p)
        .unwrap();
        let svg = std::fs::read_to_string(&p).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("decay"));
        let h = dir.path().join("h.svg");
        histogram_chart(&h, "rates", "Hz", &[(60.0, 65.0, 3), (65.0, 70.0, 10)]).unwrap();
        assert!(std::fs::read_to_string(&h).unwrap().contains("<rect"));
    }
}
