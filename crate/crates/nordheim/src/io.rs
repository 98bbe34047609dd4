//! File formats: time-series CSV, snapshot CSV, atom-list CSV, summary JSON,
//! and self-contained SVG plots.
//!
//! Series numbers carry 10 significant digits; snapshot numbers carry 17 so
//! that a written state re-reads bit-exactly. All formatting is
//! locale-independent.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::config::{InitialData, SimConfig};
use crate::error::{Error, Result};
use crate::functionals::entropy;
use crate::grid::{
    conserved_energy, conserved_mass, make_grid, moment_with, Distribution, EnergyGrid,
    MomentConvention, MomentKind,
};
use crate::initdata::{make_blowup_data, make_bose_einstein};
use crate::integrator::{MomentReport, RunOutcome};
use crate::measure::{DiscreteMeasure, DyadicFamily};

/// 10 significant digits for time-series cells.
fn fmt_series(x: f64) -> String {
    format!("{x:.9e}")
}

/// 17 significant digits: lossless f64 round-trip for snapshots.
fn fmt_snapshot(x: f64) -> String {
    format!("{x:.16e}")
}

fn data_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::DataFormat { path: path.display().to_string(), msg: msg.into() }
}

/// Column headers of a series with the given partial-mass radii and optional
/// exponent column. Radii render in shortest round-trip form.
pub fn series_header(radii: &[f64], with_exponent: bool) -> Vec<String> {
    let mut cols: Vec<String> =
        ["t", "M", "E", "S", "f_sup"].iter().map(|s| s.to_string()).collect();
    cols.extend(radii.iter().map(|r| format!("mass_below_{r}")));
    if with_exponent {
        cols.push("exponent".to_string());
    }
    cols
}

/// Write the observable series as CSV.
pub fn write_series(
    path: &Path,
    series: &[MomentReport],
    radii: &[f64],
    with_exponent: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| data_err(path, e.to_string()))?;
    w.write_record(series_header(radii, with_exponent))
        .map_err(|e| data_err(path, e.to_string()))?;
    for row in series {
        let mut rec: Vec<String> = vec![
            fmt_series(row.t),
            fmt_series(row.mass),
            fmt_series(row.energy),
            fmt_series(row.entropy),
            fmt_series(row.f_sup),
        ];
        rec.extend(row.mass_below.iter().map(|&m| fmt_series(m)));
        if with_exponent {
            rec.push(row.exponent.map(fmt_series).unwrap_or_default());
        }
        w.write_record(&rec).map_err(|e| data_err(path, e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Write a nodal snapshot as `eps,f,g` CSV, losslessly.
pub fn write_snapshot(path: &Path, d: &Distribution) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| data_err(path, e.to_string()))?;
    w.write_record(["eps", "f", "g"]).map_err(|e| data_err(path, e.to_string()))?;
    for i in 0..d.grid().len() {
        w.write_record([
            fmt_snapshot(d.grid().node(i)),
            fmt_snapshot(d.f(i)),
            fmt_snapshot(d.g(i)),
        ])
        .map_err(|e| data_err(path, e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Parse the leading float columns of a CSV that may or may not start with
/// the given header row.
fn read_float_rows(
    path: &Path,
    header: &[&str],
    min_cols: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(path, e.to_string()))?;
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| data_err(path, e.to_string()))?;
        let fields: Vec<&str> = record.iter().collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        if idx == 0 && fields.first().map_or(false, |f| f.parse::<f64>().is_err()) {
            // A non-numeric first row must be the expected header.
            if fields.len() >= min_cols
                && fields.iter().zip(header).all(|(f, h)| f.eq_ignore_ascii_case(h))
            {
                continue;
            }
            return Err(data_err(
                path,
                format!("row 1: expected header {header:?} or numeric data, got {fields:?}"),
            ));
        }
        if fields.len() < min_cols {
            return Err(data_err(
                path,
                format!("row {}: expected at least {min_cols} columns, got {}", idx + 1, fields.len()),
            ));
        }
        let mut row = Vec::with_capacity(min_cols);
        for (col, field) in fields.iter().take(min_cols).enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                data_err(
                    path,
                    format!("row {}, column {} ({}): not a number: \"{field}\"", idx + 1, col + 1, header[col]),
                )
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Read a nodal snapshot back into a distribution. The node column must be a
/// uniform grid starting at zero; the density column, if present, is ignored
/// (it is derived).
pub fn read_snapshot(path: &Path) -> Result<Distribution> {
    let rows = read_float_rows(path, &["eps", "f", "g"], 2)?;
    if rows.len() < 2 {
        return Err(data_err(path, format!("need at least 2 nodes, found {}", rows.len())));
    }
    let n = rows.len();
    let eps_max = rows[n - 1][0];
    if !(eps_max.is_finite() && eps_max > 0.0) {
        return Err(data_err(path, format!("last node must be positive, got {eps_max}")));
    }
    let h = eps_max / (n - 1) as f64;
    for (i, row) in rows.iter().enumerate() {
        let expected = i as f64 * h;
        if (row[0] - expected).abs() > 1e-9 * eps_max {
            return Err(data_err(
                path,
                format!(
                    "row {}: node {} is not on the uniform grid (expected {expected})",
                    i + 1,
                    row[0]
                ),
            ));
        }
    }
    let grid = make_grid(eps_max, n)?.into_shared();
    let f: Vec<f64> = rows.iter().map(|row| row[1]).collect();
    Distribution::new(grid, f).map_err(|e| data_err(path, e.to_string()))
}

/// Read an atom list (`location,mass` CSV, header optional).
pub fn read_atoms(path: &Path) -> Result<DiscreteMeasure> {
    let rows = read_float_rows(path, &["location", "mass"], 2)?;
    let atoms: Vec<(f64, f64)> = rows.into_iter().map(|row| (row[0], row[1])).collect();
    DiscreteMeasure::new(atoms).map_err(|e| data_err(path, e.to_string()))
}

/// Build the grid and initial distribution a configuration describes. A
/// file-based initial state must match the configured grid exactly.
pub fn build_initial(cfg: &SimConfig) -> Result<(Arc<EnergyGrid>, Distribution)> {
    let grid = make_grid(cfg.eps_max, cfg.grid_n)?.into_shared();
    let d = match &cfg.initial {
        InitialData::Blowup { m, e, rho, beta } => {
            make_blowup_data(grid.clone(), *m, *e, *rho, *beta, cfg.convention)?
                .into_distribution()
        }
        InitialData::BoseEinstein { beta, alpha } => {
            make_bose_einstein(grid.clone(), *beta, *alpha)?
        }
        InitialData::File { path } => {
            let path = Path::new(path);
            let d = read_snapshot(path)?;
            let file_grid = d.grid();
            if file_grid.len() != grid.len()
                || (file_grid.eps_max() - grid.eps_max()).abs() > 1e-9 * grid.eps_max()
            {
                return Err(data_err(
                    path,
                    format!(
                        "snapshot grid (n = {}, eps_max = {}) does not match the configured \
                         grid (n = {}, eps_max = {})",
                        file_grid.len(),
                        file_grid.eps_max(),
                        grid.len(),
                        grid.eps_max()
                    ),
                ));
            }
            d
        }
    };
    Ok((grid, d))
}

/// Machine-readable run summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    /// Terminal status string.
    pub status: String,
    /// Process exit code encoding the status.
    pub exit_code: i32,
    /// Accepted steps.
    pub steps: u64,
    /// Final simulation time.
    pub t_final: f64,
    /// Blow-up detection time, when detected.
    pub t_detect: Option<f64>,
    /// Cap used for detection; None means uncapped.
    pub f_cap_used: Option<f64>,
    /// Supremum of the occupation at the start.
    pub f_sup_initial: f64,
    /// Supremum of the occupation at the end.
    pub f_sup_final: f64,
    /// Exactly conserved mass sum at the start.
    pub conserved_mass_initial: f64,
    /// Exactly conserved mass sum at the end.
    pub conserved_mass_final: f64,
    /// Exactly conserved energy sum at the start.
    pub conserved_energy_initial: f64,
    /// Exactly conserved energy sum at the end.
    pub conserved_energy_final: f64,
    /// Entropy at the start.
    pub entropy_initial: f64,
    /// Entropy at the end.
    pub entropy_final: f64,
    /// Convention of the reported trapezoid moments.
    pub moment_convention: String,
    /// Trapezoid mass at the start, in the configured convention.
    pub mass_initial: f64,
    /// Trapezoid mass at the end.
    pub mass_final: f64,
    /// Trapezoid energy at the start.
    pub energy_initial: f64,
    /// Trapezoid energy at the end.
    pub energy_final: f64,
    /// Fitted exponent at the final report, when a window is configured.
    pub exponent_final: Option<f64>,
    /// Detail for abnormal terminations.
    pub note: Option<String>,
}

impl RunSummary {
    /// Assemble the summary from a finished run.
    pub fn new(initial: &Distribution, outcome: &RunOutcome, conv: MomentConvention) -> Self {
        let final_d = outcome.final_state.distribution();
        RunSummary {
            status: outcome.status.as_str().to_string(),
            exit_code: outcome.status.exit_code(),
            steps: outcome.steps,
            t_final: outcome.final_state.time(),
            t_detect: outcome.t_detect,
            f_cap_used: outcome.f_cap_used.is_finite().then_some(outcome.f_cap_used),
            f_sup_initial: outcome.sup_initial,
            f_sup_final: final_d.sup(),
            conserved_mass_initial: conserved_mass(initial),
            conserved_mass_final: conserved_mass(final_d),
            conserved_energy_initial: conserved_energy(initial),
            conserved_energy_final: conserved_energy(final_d),
            entropy_initial: entropy(initial),
            entropy_final: entropy(final_d),
            moment_convention: match conv {
                MomentConvention::Physical => "physical".to_string(),
                MomentConvention::Plain => "plain".to_string(),
            },
            mass_initial: moment_with(initial, MomentKind::Mass, conv),
            mass_final: moment_with(final_d, MomentKind::Mass, conv),
            energy_initial: moment_with(initial, MomentKind::Energy, conv),
            energy_final: moment_with(final_d, MomentKind::Energy, conv),
            exponent_final: outcome.series.last().and_then(|row| row.exponent),
            note: outcome.note.clone(),
        }
    }
}

/// Write any serializable summary as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| data_err(path, e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// SVG plots
// ---------------------------------------------------------------------------

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const SVG_MARGIN: f64 = 64.0;

/// Minimal SVG document builder.
struct Svg {
    body: String,
}

impl Svg {
    fn new() -> Self {
        let mut body = String::new();
        body.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
             viewBox=\"0 0 {SVG_W} {SVG_H}\">\n",
        ));
        body.push_str(&format!(
            "<rect x=\"0\" y=\"0\" width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>\n"
        ));
        Svg { body }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, style: &str) {
        self.body.push_str(&format!(
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" {style}/>\n"
        ));
    }

    fn polyline(&mut self, pts: &[(f64, f64)], style: &str) {
        let coords: Vec<String> =
            pts.iter().map(|&(x, y)| format!("{x:.2},{y:.2}")).collect();
        self.body.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" {style}/>\n",
            coords.join(" ")
        ));
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, style: &str) {
        self.body
            .push_str(&format!("<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{r}\" {style}/>\n"));
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, style: &str) {
        self.body.push_str(&format!(
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" {style}/>\n"
        ));
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, content: &str) {
        let escaped = content.replace('&', "&amp;").replace('<', "&lt;");
        self.body.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\" \
             font-family=\"monospace\" font-size=\"12\">{escaped}</text>\n"
        ));
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

/// Data↦pixel mapping over the plot frame, with degenerate ranges padded.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(mut x0: f64, mut x1: f64, mut y0: f64, mut y1: f64) -> Self {
        if x1 <= x0 {
            x0 -= 0.5 + x0.abs() * 0.1;
            x1 += 0.5 + x1.abs() * 0.1;
        }
        if y1 <= y0 {
            y0 -= 0.5 + y0.abs() * 0.1;
            y1 += 0.5 + y1.abs() * 0.1;
        }
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        SVG_MARGIN + (x - self.x0) / (self.x1 - self.x0) * (SVG_W - 2.0 * SVG_MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        SVG_H - SVG_MARGIN - (y - self.y0) / (self.y1 - self.y0) * (SVG_H - 2.0 * SVG_MARGIN)
    }

    /// Axes, ticks, and tick labels; log axes label the decade as 1e{k}.
    fn draw_axes(&self, svg: &mut Svg, log_x: bool, log_y: bool) {
        let axis = "stroke=\"black\" stroke-width=\"1\"";
        let grid = "stroke=\"#dddddd\" stroke-width=\"0.5\"";
        svg.line(SVG_MARGIN, SVG_H - SVG_MARGIN, SVG_W - SVG_MARGIN, SVG_H - SVG_MARGIN, axis);
        svg.line(SVG_MARGIN, SVG_MARGIN, SVG_MARGIN, SVG_H - SVG_MARGIN, axis);
        let label = |v: f64, log: bool| {
            if log {
                format!("1e{}", v.round() as i64)
            } else {
                format!("{v:.3}")
            }
        };
        for i in 0..=4 {
            let fx = self.x0 + (self.x1 - self.x0) * i as f64 / 4.0;
            let px = self.px(fx);
            svg.line(px, SVG_MARGIN, px, SVG_H - SVG_MARGIN, grid);
            svg.text(px, SVG_H - SVG_MARGIN + 16.0, "middle", &label(fx, log_x));
            let fy = self.y0 + (self.y1 - self.y0) * i as f64 / 4.0;
            let py = self.py(fy);
            svg.line(SVG_MARGIN, py, SVG_W - SVG_MARGIN, py, grid);
            svg.text(SVG_MARGIN - 6.0, py + 4.0, "end", &label(fy, log_y));
        }
    }
}

fn write_svg(path: &Path, svg: Svg) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(svg.finish().as_bytes())?;
    file.flush()?;
    Ok(())
}

/// Draw one curve, degenerating to a marker for a single point.
fn draw_curve(svg: &mut Svg, frame: &Frame, pts: &[(f64, f64)], color: &str) {
    let pixel: Vec<(f64, f64)> =
        pts.iter().map(|&(x, y)| (frame.px(x), frame.py(y))).collect();
    if pixel.len() == 1 {
        svg.circle(pixel[0].0, pixel[0].1, 3.0, &format!("fill=\"{color}\""));
    } else {
        svg.polyline(&pixel, &format!("stroke=\"{color}\" stroke-width=\"1.5\""));
    }
}

/// Plot the M, E, S columns of a series against time.
pub fn plot_moments(path: &Path, series: &[MomentReport]) -> Result<()> {
    if series.is_empty() {
        return Err(Error::EmptyData("series has no rows".into()));
    }
    let ts: Vec<f64> = series.iter().map(|r| r.t).collect();
    let curves: [(&str, &str, Vec<f64>); 3] = [
        ("M", "#1f77b4", series.iter().map(|r| r.mass).collect()),
        ("E", "#d62728", series.iter().map(|r| r.energy).collect()),
        ("S", "#2ca02c", series.iter().map(|r| r.entropy).collect()),
    ];
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, _, ys) in &curves {
        for &y in ys {
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    let frame = Frame::new(ts[0], ts[ts.len() - 1], y0, y1);
    let mut svg = Svg::new();
    frame.draw_axes(&mut svg, false, false);
    for (i, (name, color, ys)) in curves.iter().enumerate() {
        let pts: Vec<(f64, f64)> = ts.iter().copied().zip(ys.iter().copied()).collect();
        draw_curve(&mut svg, &frame, &pts, color);
        svg.text(SVG_W - SVG_MARGIN - 40.0 + 20.0 * i as f64, SVG_MARGIN - 8.0, "start", name);
        svg.circle(
            SVG_W - SVG_MARGIN - 48.0 + 20.0 * i as f64,
            SVG_MARGIN - 12.0,
            3.0,
            &format!("fill=\"{color}\""),
        );
    }
    svg.text(SVG_W / 2.0, SVG_H - 16.0, "middle", "t");
    write_svg(path, svg)
}

/// Reference slope of the singular profile drawn on log-log plots.
const LOGLOG_GUIDE_SLOPE: f64 = -7.0 / 6.0;

/// Log-log plot of a snapshot's occupation with a slope −7/6 guide line.
pub fn plot_loglog(path: &Path, d: &Distribution) -> Result<()> {
    let pts: Vec<(f64, f64)> = (0..d.grid().len())
        .filter_map(|i| {
            let eps = d.grid().node(i);
            let f = d.f(i);
            (eps > 0.0 && f > 0.0).then(|| (eps.log10(), f.log10()))
        })
        .collect();
    if pts.is_empty() {
        return Err(Error::EmptyData(
            "snapshot has no strictly positive values on positive nodes".into(),
        ));
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let frame = Frame::new(x0, x1, y0, y1);
    let mut svg = Svg::new();
    frame.draw_axes(&mut svg, true, true);
    // Guide anchored at the median-x data point.
    let anchor = pts[pts.len() / 2];
    let guide = |x: f64| anchor.1 + LOGLOG_GUIDE_SLOPE * (x - anchor.0);
    svg.line(
        frame.px(frame.x0),
        frame.py(guide(frame.x0)),
        frame.px(frame.x1),
        frame.py(guide(frame.x1)),
        "stroke=\"#888888\" stroke-width=\"1\" stroke-dasharray=\"6 4\"",
    );
    svg.text(frame.px(frame.x0) + 8.0, frame.py(guide(frame.x0)) - 6.0, "start", "slope -7/6");
    draw_curve(&mut svg, &frame, &pts, "#1f77b4");
    svg.text(SVG_W / 2.0, SVG_H - 16.0, "middle", "eps (log)");
    svg.text(16.0, SVG_MARGIN - 8.0, "start", "f (log)");
    write_svg(path, svg)
}

/// Bar plot of a measure's dyadic interval masses on a log-energy axis.
pub fn plot_dyadic(path: &Path, m: &DiscreteMeasure, b: f64) -> Result<()> {
    let Some(scale) = m.max_location() else {
        return Err(Error::EmptyData("measure has no positive mass".into()));
    };
    let family = DyadicFamily::new(b, scale, 0)?;
    let masses = family.interval_masses(m)?;
    let max_mass = masses.values().cloned().fold(0.0, f64::max);
    if max_mass <= 0.0 {
        return Err(Error::EmptyData("measure has no positive mass".into()));
    }
    let deepest = *masses.keys().next_back().unwrap();
    let (lo_edge, _) = family.interval(deepest);
    let frame = Frame::new(lo_edge.log10(), scale.log10(), 0.0, max_mass);
    let mut svg = Svg::new();
    frame.draw_axes(&mut svg, true, false);
    for (&k, &mass) in &masses {
        let (lo, hi) = family.interval(k);
        let x = frame.px(lo.log10());
        let w = frame.px(hi.log10()) - x;
        let y = frame.py(mass);
        let h = frame.py(0.0) - y;
        svg.rect(x, y, w.max(1.0), h, "fill=\"#1f77b4\" stroke=\"white\" stroke-width=\"0.5\"");
    }
    svg.text(SVG_W / 2.0, SVG_H - 16.0, "middle", "interval (log eps)");
    svg.text(16.0, SVG_MARGIN - 8.0, "start", "mass");
    write_svg(path, svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::grid::MomentKind;
    use tempfile::tempdir;

    fn sample_series() -> Vec<MomentReport> {
        vec![
            MomentReport {
                t: 0.0,
                mass: 1.0,
                energy: 2.0,
                entropy: 0.5,
                f_sup: 3.0,
                mass_below: vec![0.25],
                exponent: None,
            },
            MomentReport {
                t: 0.125,
                mass: 1.0,
                energy: 2.0,
                entropy: 0.75,
                f_sup: 4.0,
                mass_below: vec![0.5],
                exponent: Some(-7.0 / 6.0),
            },
        ]
    }

    #[test]
    fn series_csv_matches_the_golden_format() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("series.csv");
        write_series(&path, &sample_series(), &[0.1], true).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let expected = "\
t,M,E,S,f_sup,mass_below_0.1,exponent
0.000000000e0,1.000000000e0,2.000000000e0,5.000000000e-1,3.000000000e0,2.500000000e-1,
1.250000000e-1,1.000000000e0,2.000000000e0,7.500000000e-1,4.000000000e0,5.000000000e-1,-1.166666667e0
";
        assert_eq!(text, expected);
    }

    #[test]
    fn snapshot_round_trips_bit_exactly() {
        let grid = make_grid(2.0, 33).unwrap().into_shared();
        let d = Distribution::from_fn(grid, |eps| (1.3 * eps).exp_m1().recip().min(7.25)).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("snap.csv");
        write_snapshot(&path, &d).unwrap();
        let back = read_snapshot(&path).unwrap();
        assert_eq!(back.grid().len(), 33);
        assert_eq!(back.grid().eps_max(), 2.0);
        for i in 0..33 {
            assert_eq!(back.f(i), d.f(i), "node {i}");
        }
    }

    #[test]
    fn snapshot_reader_rejects_malformed_files() {
        let dir = tempdir().unwrap();
        let write = |name: &str, content: &str| {
            let path = dir.path().join(name);
            std::fs::write(&path, content).unwrap();
            path
        };
        let cases = [
            ("short.csv", "eps,f,g\n0.0,1.0,0.0\n"),
            ("nonuniform.csv", "eps,f,g\n0.0,1.0,0.0\n0.1,1.0,1.0\n0.3,1.0,1.0\n"),
            ("badnum.csv", "eps,f,g\n0.0,1.0,0.0\n0.1,one,1.0\n"),
            ("header.csv", "energy,f,g\n0.0,1.0,0.0\n0.1,1.0,1.0\n"),
            ("negative.csv", "eps,f,g\n0.0,-1.0,0.0\n0.1,1.0,1.0\n"),
        ];
        for (name, content) in cases {
            let path = write(name, content);
            assert!(
                matches!(read_snapshot(&path), Err(Error::DataFormat { .. })),
                "{name} should fail"
            );
        }
    }

    #[test]
    fn atom_reader_accepts_optional_header() {
        let dir = tempdir().unwrap();
        let with = dir.path().join("with.csv");
        std::fs::write(&with, "location,mass\n0.9,0.5\n0.05,0.5\n").unwrap();
        let without = dir.path().join("without.csv");
        std::fs::write(&without, "0.9,0.5\n0.05,0.5\n").unwrap();
        let a = read_atoms(&with).unwrap();
        let b = read_atoms(&without).unwrap();
        assert_eq!(a.atoms(), b.atoms());
        assert_eq!(a.total(), 1.0);
    }

    #[test]
    fn build_initial_covers_all_three_kinds() {
        let dir = tempdir().unwrap();
        let base = "\
[grid]
n = 129
eps_max = 4.0

[time]
t_end = 0.1

[initial]
";
        let be = parse_config(&format!("{base}kind = bose_einstein\nbeta = 1.0\nalpha = 0.5\n"))
            .unwrap();
        let (grid, d) = build_initial(&be).unwrap();
        assert_eq!(grid.len(), 129);
        assert!(d.f(0) > 0.0);

        let blowup = parse_config(&format!(
            "{base}kind = blowup\nm = 1.0\ne = 1.0\nrho = 0.1\nbeta = 0.3\n\n\
             [output]\nmoment_convention = plain\n"
        ))
        .unwrap();
        let (_, d) = build_initial(&blowup).unwrap();
        assert!((moment_with(&d, MomentKind::Mass, MomentConvention::Plain) - 1.0).abs() < 1e-10);

        let snap_path = dir.path().join("init.csv");
        write_snapshot(&snap_path, &d).unwrap();
        let from_file = parse_config(&format!(
            "{base}kind = file\npath = {}\n",
            snap_path.display()
        ))
        .unwrap();
        let (_, loaded) = build_initial(&from_file).unwrap();
        assert_eq!(loaded.values(), d.values());

        // A grid mismatch is rejected.
        let mismatched = parse_config(&format!(
            "{}kind = file\npath = {}\n",
            base.replace("n = 129", "n = 65"),
            snap_path.display()
        ))
        .unwrap();
        assert!(matches!(build_initial(&mismatched), Err(Error::DataFormat { .. })));
    }

    #[test]
    fn plots_emit_wellformed_svg_even_for_single_points() {
        let dir = tempdir().unwrap();
        let one = dir.path().join("one.svg");
        plot_moments(&one, &sample_series()[..1]).unwrap();
        let text = std::fs::read_to_string(&one).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.ends_with("</svg>\n"));
        assert!(text.contains("<circle"), "single-point series plots a marker");

        let two = dir.path().join("two.svg");
        plot_moments(&two, &sample_series()).unwrap();
        assert!(std::fs::read_to_string(&two).unwrap().contains("<polyline"));

        assert!(matches!(plot_moments(&one, &[]), Err(Error::EmptyData(_))));
    }

    #[test]
    fn loglog_plot_draws_the_reference_guide() {
        let grid = make_grid(2.0, 65).unwrap().into_shared();
        let d = Distribution::from_fn(grid.clone(), |eps| 1.0 / (eps + 0.01)).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("loglog.svg");
        plot_loglog(&path, &d).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("slope -7/6"));
        assert!(text.contains("stroke-dasharray"));

        let vacuum = Distribution::from_fn(grid, |_| 0.0).unwrap();
        assert!(matches!(plot_loglog(&path, &vacuum), Err(Error::EmptyData(_))));
    }

    #[test]
    fn dyadic_plot_renders_interval_bars() {
        let m = DiscreteMeasure::new(vec![(0.9, 0.5), (0.05, 0.5)]).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("dyadic.svg");
        plot_dyadic(&path, &m, 2.0).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.matches("<rect").count() >= 3, "background plus two bars");
        let empty = DiscreteMeasure::new(vec![]).unwrap();
        assert!(matches!(plot_dyadic(&path, &empty, 2.0), Err(Error::EmptyData(_))));
    }

    #[test]
    fn summary_serializes_to_json() {
        let grid = make_grid(1.0, 33).unwrap().into_shared();
        let d = make_bose_einstein(grid, 1.0, 1.0).unwrap();
        let outcome = crate::integrator::run(
            d.clone(),
            &crate::integrator::RunParams {
                t_end: 1e-3,
                dt0: 1e-3,
                ..Default::default()
            },
        )
        .unwrap();
        let summary = RunSummary::new(&d, &outcome, MomentConvention::Physical);
        let dir = tempdir().unwrap();
        let path = dir.path().join("summary.json");
        write_json(&path, &summary).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["status"], "completed");
        assert_eq!(value["exit_code"], 0);
        assert!(value["conserved_mass_initial"].as_f64().unwrap() > 0.0);
    }
}
