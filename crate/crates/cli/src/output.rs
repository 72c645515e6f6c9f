use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::config::Resolved;
use crate::experiments::{Figure, Table};

pub struct Written {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub plot: Option<PathBuf>,
}

pub fn write_all(dir: &Path, resolved: &Resolved, table: &Table) -> Result<Written, Box<dyn std::error::Error>> {
    fs::create_dir_all(dir)?;
    let stem = resolved.experiment.name();
    let csv = dir.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&csv)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;

    let manifest = dir.join(format!("{stem}.manifest.toml"));
    fs::write(&manifest, toml::to_string(&resolved.to_config())?)?;

    let plot = match &table.figure {
        Some(fig) => {
            let path = dir.join(format!("{stem}.svg"));
            draw(&path, stem, fig)?;
            Some(path)
        }
        None => None,
    };
    Ok(Written { csv, manifest, plot })
}

fn draw(path: &Path, title: &str, fig: &Figure) -> Result<(), Box<dyn std::error::Error>> {
    let pts = fig.series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y, e) in pts {
        if fig.log_y && y <= 0.0 {
            continue;
        }
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y - e);
        y1 = y1.max(y + e);
    }
    if !x0.is_finite() || !y0.is_finite() {
        return Ok(());
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut builder = ChartBuilder::on(&root);
    builder.caption(title, ("sans-serif", 22)).margin(15).x_label_area_size(40).y_label_area_size(70);
    if fig.log_y {
        let (lo, hi) = (y0.max(f64::MIN_POSITIVE) * 0.5, y1.max(y0) * 2.0);
        let mut chart = builder.build_cartesian_2d(x0..x1, (lo..hi).log_scale())?;
        chart.configure_mesh().x_desc(fig.x_label).y_desc(fig.y_label).draw()?;
        for (i, s) in fig.series.iter().enumerate() {
            let c = Palette99::pick(i).to_rgba();
            let line: Vec<(f64, f64)> = s.points.iter().filter(|p| p.1 > 0.0).map(|p| (p.0, p.1)).collect();
            chart.draw_series(LineSeries::new(line, c.stroke_width(2)))?.label(s.name.clone()).legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], c));
        }
        chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
    } else {
        let pad = 0.05 * (y1 - y0).max(1e-12);
        let mut chart = builder.build_cartesian_2d(x0..x1, (y0 - pad)..(y1 + pad))?;
        chart.configure_mesh().x_desc(fig.x_label).y_desc(fig.y_label).draw()?;
        for (i, s) in fig.series.iter().enumerate() {
            let c = Palette99::pick(i).to_rgba();
            chart
                .draw_series(LineSeries::new(s.points.iter().map(|p| (p.0, p.1)), c.stroke_width(2)))?
                .label(s.name.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], c));
            chart.draw_series(s.points.iter().filter(|p| p.2 > 0.0).map(|&(x, y, e)| ErrorBar::new_vertical(x, y - e, y, y + e, c.filled(), 6)))?;
        }
        chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
    }
    root.present()?;
    Ok(())
}
