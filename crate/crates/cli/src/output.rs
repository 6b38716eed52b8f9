//! CSV and SVG writers.
//!
//! Numbers are written in the shortest form that parses back to the same
//! `f64`, plain for moderate magnitudes and with an exponent otherwise, so
//! files are stable across platforms and runs.

use std::io::Write;
use std::path::Path;

use copycat_core::analysis::CurveSeries;
use copycat_core::evolution::TimeGrid;
use plotters::prelude::*;

use crate::config::OutputConfig;
use crate::CliError;

/// Shortest round-trip text for `x`.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// Header `t,<curves...>`, then one row per grid point.
pub fn csv_bytes(grid: &TimeGrid, curves: &[CurveSeries]) -> Result<Vec<u8>, CliError> {
    let csv_err = |e: csv::Error| CliError::io("formatting CSV", std::io::Error::other(e));
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend(curves.iter().map(|c| c.name.clone()));
    w.write_record(&header).map_err(csv_err)?;
    for (i, t) in grid.times().iter().enumerate() {
        let mut row = vec![format_f64(*t)];
        row.extend(curves.iter().map(|c| format_f64(c.values[i])));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| CliError::io("formatting CSV", std::io::Error::other(e.to_string())))
}

/// Parses a CSV produced by [`csv_bytes`] back into `(header, columns)`.
pub fn read_csv(bytes: &[u8]) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let bad = |m: String| CliError::io("reading CSV", std::io::Error::other(m));
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut cols = vec![Vec::new(); header.len()];
    for record in r.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        for (col, field) in cols.iter_mut().zip(record.iter()) {
            col.push(field.parse::<f64>().map_err(|e| bad(format!("{field}: {e}")))?);
        }
    }
    Ok((header, cols))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder
        .tempfile_in(dir)
        .map_err(|e| CliError::io(format!("creating temporary file in {}", dir.display()), e))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    tmp.persist(path)
        .map_err(|e| CliError::io(format!("renaming into {}", path.display()), e.error))?;
    Ok(())
}

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(255, 127, 14),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(23, 190, 207),
];

fn range_of(values: impl Iterator<Item = f64>, log: bool) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite() && (!log || *v > 0.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return if log { (1e-3, 1.0) } else { (0.0, 1.0) };
    }
    if hi > lo {
        return (lo, hi);
    }
    if log {
        (lo / 2.0, lo * 2.0)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

/// A line chart of `curves` against `t`. Points that a log axis cannot show
/// are dropped; values outside `y_range` are clipped by the plot area.
pub fn svg_document(title: &str, curves: &[CurveSeries], opts: &OutputConfig, path: &Path) -> Result<String, CliError> {
    let plot_err = |e: String| CliError::Output {
        path: path.to_path_buf(),
        message: e,
    };
    let keep_x = |t: f64| !opts.log_x || t > 0.0;
    let keep_y = |v: f64| !opts.log_y || v > 0.0;
    let (x0, x1) = range_of(
        curves.iter().flat_map(|c| c.times.iter().copied()).filter(|&t| keep_x(t)),
        opts.log_x,
    );
    let (y0, y1) = match opts.y_range {
        Some([lo, hi]) => (lo, hi),
        None => range_of(curves.iter().flat_map(|c| c.values.iter().copied()), opts.log_y),
    };

    let mut doc = String::new();
    {
        let root = SVGBackend::with_string(&mut doc, (800, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| plot_err(e.to_string()))?;
        let mut builder = ChartBuilder::on(&root);
        builder
            .caption(title, ("sans-serif", 20))
            .margin(15)
            .x_label_area_size(40)
            .y_label_area_size(70);
        macro_rules! draw {
            ($chart:expr) => {{
                let mut chart = $chart.map_err(|e| plot_err(e.to_string()))?;
                chart
                    .configure_mesh()
                    .x_desc("t")
                    .draw()
                    .map_err(|e| plot_err(e.to_string()))?;
                for (k, c) in curves.iter().enumerate() {
                    let color = PALETTE[k % PALETTE.len()];
                    let points: Vec<(f64, f64)> = c
                        .times
                        .iter()
                        .zip(&c.values)
                        .map(|(&t, &v)| (t, v))
                        .filter(|&(t, v)| keep_x(t) && keep_y(v))
                        .collect();
                    chart
                        .draw_series(LineSeries::new(points, color.stroke_width(2)))
                        .map_err(|e| plot_err(e.to_string()))?
                        .label(c.name.clone())
                        .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
                }
                chart
                    .configure_series_labels()
                    .background_style(WHITE.mix(0.8))
                    .border_style(BLACK)
                    .draw()
                    .map_err(|e| plot_err(e.to_string()))?;
            }};
        }
        match (opts.log_x, opts.log_y) {
            (false, false) => draw!(builder.build_cartesian_2d(x0..x1, y0..y1)),
            (true, false) => draw!(builder.build_cartesian_2d((x0..x1).log_scale(), y0..y1)),
            (false, true) => draw!(builder.build_cartesian_2d(x0..x1, (y0..y1).log_scale())),
            (true, true) => draw!(builder.build_cartesian_2d((x0..x1).log_scale(), (y0..y1).log_scale())),
        }
        root.present().map_err(|e| plot_err(e.to_string()))?;
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn csv_round_trips_exactly() {
        let grid = TimeGrid::linear(1.0, 4).unwrap();
        let vals = vec![0.1 + 0.2, 1e-300, -3.0, std::f64::consts::PI];
        assert_eq!(format_f64(1.1102230246251565e-16), "1.1102230246251565e-16");
        assert_eq!(format_f64(-2.5e20), "-2.5e20");
        let c = CurveSeries::new("x", grid.times().to_vec(), vals.clone(), BTreeMap::new()).unwrap();
        let bytes = csv_bytes(&grid, &[c]).unwrap();
        let (header, cols) = read_csv(&bytes).unwrap();
        assert_eq!(header, vec!["t", "x"]);
        assert_eq!(cols[1], vals);
        assert_eq!(cols[0], grid.times());
        assert!(String::from_utf8(bytes).unwrap().starts_with("t,x\n0,0.30000000000000004\n"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
