//! Static SVG line charts over lead days.

use crate::failure::{CliResult, Failure};
use crate::output::{MetricsRow, RetrospectiveRow};
use plotters::prelude::*;
use std::collections::BTreeMap;
use std::path::Path;

pub struct Series {
    pub label: String,
    pub points: Vec<(i32, f64)>,
}

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(255, 127, 14),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

pub fn line_chart(path: &Path, title: &str, y_label: &str, series: &[Series]) -> CliResult<()> {
    let points = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y1) = (i32::MAX, i32::MIN, 0.0f64);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        return Err(Failure::config(format!(
            "nothing to plot for {}",
            path.display()
        )));
    }
    if x0 == x1 {
        x1 = x0 + 1;
    }
    let y1 = if y1 > 0.0 { y1 * 1.1 } else { 1.0 };

    let draw =
        || -> Result<(), Box<dyn std::error::Error>> {
            let root = SVGBackend::new(path, (800, 480)).into_drawing_area();
            root.fill(&WHITE)?;
            let mut chart = ChartBuilder::on(&root)
                .caption(title, ("sans-serif", 20))
                .margin(12)
                .x_label_area_size(36)
                .y_label_area_size(56)
                .build_cartesian_2d(x0..x1, 0.0..y1)?;
            chart
                .configure_mesh()
                .x_desc("lead day")
                .y_desc(y_label)
                .x_labels((x1 - x0 + 1) as usize)
                .x_label_formatter(&|x| format!("LD{}", -x))
                .draw()?;
            let mut owners: Vec<&str> = Vec::new();
            for s in series {
                let owner = s.label.split(' ').next().unwrap_or("");
                let k = match owners.iter().position(|o| *o == owner) {
                    Some(k) => k,
                    None => {
                        owners.push(owner);
                        owners.len() - 1
                    }
                };
                let base = PALETTE[k % PALETTE.len()];
                let global = s.label.ends_with("global");
                let color = if global {
                    base.mix(0.55)
                } else {
                    base.mix(1.0)
                };
                let style = color.stroke_width(if global { 1 } else { 2 });
                chart
                    .draw_series(LineSeries::new(s.points.iter().copied(), style))?
                    .label(s.label.clone())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], style));
                chart.draw_series(s.points.iter().map(|&(x, y)| {
                    Circle::new((x, y), if global { 2 } else { 3 }, color.filled())
                }))?;
            }
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .position(SeriesLabelPosition::UpperRight)
                .draw()?;
            root.present()?;
            Ok(())
        };
    draw().map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

/// Site and global curves of every solver found in the metrics rows.
pub fn metrics_series(rows: &[MetricsRow]) -> Vec<Series> {
    let mut by_solver: BTreeMap<&str, Vec<&MetricsRow>> = BTreeMap::new();
    for r in rows {
        by_solver.entry(&r.solver).or_default().push(r);
    }
    let mut out = Vec::new();
    for (solver, rs) in by_solver {
        out.push(Series {
            label: format!("{solver} site"),
            points: rs.iter().map(|r| (r.lead_day, r.wmape_site)).collect(),
        });
        out.push(Series {
            label: format!("{solver} global"),
            points: rs.iter().map(|r| (r.lead_day, r.wmape_global)).collect(),
        });
    }
    out
}

pub fn retrospective_series(rows: &[RetrospectiveRow]) -> Vec<Series> {
    let mut by_solver: BTreeMap<&str, Vec<(i32, f64)>> = BTreeMap::new();
    for r in rows {
        by_solver
            .entry(&r.solver)
            .or_default()
            .push((r.lead_day, r.wmape_site));
    }
    by_solver
        .into_iter()
        .map(|(s, points)| Series {
            label: format!("{s} site"),
            points,
        })
        .collect()
}

/// Drops the first day of each solver, which is measured against itself.
pub fn transitions_only(rows: &[MetricsRow]) -> Vec<MetricsRow> {
    let mut first: BTreeMap<&str, i32> = BTreeMap::new();
    for r in rows {
        let e = first.entry(&r.solver).or_insert(r.lead_day);
        *e = (*e).min(r.lead_day);
    }
    rows.iter()
        .filter(|r| first[r.solver.as_str()] != r.lead_day)
        .cloned()
        .collect()
}
