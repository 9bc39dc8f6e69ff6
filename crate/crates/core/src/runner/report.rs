//! Human-readable report and per-figure plot data for a completed run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::config::ExperimentConfig;
use super::manifest::{FileRecord, RunManifest};
use super::table::{ReadTable, Table};
use crate::error::{LabError, Result};
use crate::numfmt::fmt_f64;

pub const REPORT_FILE: &str = "report.md";
pub const PLOT_DIR: &str = "plots";

#[derive(Clone, Debug, PartialEq)]
pub struct ReportOutputs {
    pub report: PathBuf,
    pub plot_data: Vec<PathBuf>,
    pub svg: Vec<PathBuf>,
}

/// A figure: named columns, points and an optional fitted line.
struct Figure {
    name: String,
    x: String,
    y: String,
    points: Vec<(f64, f64)>,
    /// Extra per-point columns (name, values).
    extra: Vec<(String, Vec<String>)>,
    fit: Option<(f64, f64)>,
}

impl Figure {
    fn table(&self) -> Table {
        let mut head = vec![self.x.clone(), self.y.clone()];
        if self.fit.is_some() {
            head.push("fitted".into());
        }
        head.extend(self.extra.iter().map(|e| e.0.clone()));
        let mut t = Table::from_header(head);
        for (i, &(x, y)) in self.points.iter().enumerate() {
            let mut row = vec![fmt_f64(x), fmt_f64(y)];
            if let Some((slope, intercept)) = self.fit {
                row.push(fmt_f64(intercept + slope * x));
            }
            row.extend(self.extra.iter().map(|e| e.1[i].clone()));
            t.push(row);
        }
        t
    }

    fn render_svg(&self, path: &Path) -> Result<()> {
        let pts: Vec<(f64, f64)> =
            self.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        if pts.is_empty() {
            return Ok(());
        }
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let line: Vec<(f64, f64)> = match self.fit {
            Some((slope, intercept)) => [x0, x1].iter().map(|&x| (x, intercept + slope * x)).collect(),
            None => Vec::new(),
        };
        for &(_, y) in &line {
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let pad = |a: f64, b: f64| if b > a { 0.05 * (b - a) } else { 0.5 };
        let (px, py) = (pad(x0, x1), pad(y0, y1));
        let draw = || -> std::result::Result<(), Box<dyn std::error::Error>> {
            let root = SVGBackend::new(path, (640, 480)).into_drawing_area();
            root.fill(&WHITE)?;
            let mut chart = ChartBuilder::on(&root)
                .margin(20)
                .caption(&self.name, ("sans-serif", 20))
                .x_label_area_size(40)
                .y_label_area_size(60)
                .build_cartesian_2d((x0 - px)..(x1 + px), (y0 - py)..(y1 + py))?;
            chart.configure_mesh().x_desc(self.x.as_str()).y_desc(self.y.as_str()).draw()?;
            chart.draw_series(pts.iter().map(|&p| Circle::new(p, 3, BLUE.filled())))?;
            if !line.is_empty() {
                chart.draw_series(LineSeries::new(line.clone(), &RED))?;
            }
            root.present()?;
            Ok(())
        };
        draw().map_err(|e| LabError::Format(format!("svg rendering of {}: {e}", self.name)))
    }
}

fn fit_of(fits: &ReadTable, estimator: &str) -> Result<Option<(f64, f64)>> {
    let names = fits.strings("estimator")?;
    let slopes = fits.floats("slope")?;
    let intercepts = fits.floats("intercept")?;
    Ok(names.iter().position(|n| n == estimator).map(|i| (slopes[i], intercepts[i])))
}

fn figures(manifest: &RunManifest, dir: &Path, fits: &ReadTable) -> Result<Vec<Figure>> {
    let has = |name: &str| manifest.file(name).is_some();
    let read = |name: &str| ReadTable::read(&dir.join(name));
    let ln = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(f64::ln).collect() };
    let mut out = Vec::new();
    let mut loglog = |name: &str, file: &str, xcol: &str, ycol: &str, x: &str, y: &str, abs: bool| -> Result<()> {
        if !has(file) {
            return Ok(());
        }
        let t = read(file)?;
        let xs = ln(t.floats(xcol)?);
        let raw = t.floats(ycol)?;
        let ys = if abs { ln(raw.iter().map(|v| v.abs()).collect()) } else { ln(raw) };
        let extra = if t.column("used").is_ok() { vec![("used".into(), t.strings("used")?)] } else { Vec::new() };
        out.push(Figure {
            name: name.into(),
            x: x.into(),
            y: y.into(),
            points: xs.into_iter().zip(ys).collect(),
            extra,
            fit: fit_of(fits, name)?,
        });
        Ok(())
    };
    loglog("chi", "chi_sizes.csv", "size", "variance", "log_n", "log_var", false)?;
    loglog("xi", "xi_sizes.csv", "size", "r_star", "log_n", "log_r", false)?;
    loglog("kappa", "kappa_points.csv", "norm", "diff", "log_z", "log_diff", true)?;
    if has("mean_excess.csv") {
        let t = read("mean_excess.csv")?;
        let xs = ln(t.floats("size")?);
        let ex = t.floats("excess")?;
        let se = t.floats("excess_se")?;
        out.push(Figure {
            name: "mean_excess".into(),
            x: "log_n".into(),
            y: "excess".into(),
            points: xs.iter().copied().zip(ex.iter().copied()).collect(),
            extra: vec![("se".into(), se.iter().map(|s| fmt_f64(*s)).collect())],
            fit: fit_of(fits, "mean_excess")?,
        });
        if let Some(fit) = fit_of(fits, "mean_excess_power")? {
            out.push(Figure {
                name: "mean_excess_power".into(),
                x: "log_n".into(),
                y: "log_abs_excess".into(),
                points: xs.iter().copied().zip(ex.iter().map(|e| e.abs().ln())).collect(),
                extra: Vec::new(),
                fit: Some(fit),
            });
        }
    }
    for (name, file) in [("shape_fan", "shape_directions.csv"), ("kappa_fan", "kappa_fan_directions.csv")] {
        if has(file) {
            let t = read(file)?;
            let se = t.floats("se")?;
            out.push(Figure {
                name: name.into(),
                x: "angle".into(),
                y: "f".into(),
                points: t.floats("angle")?.into_iter().zip(t.floats("value")?).collect(),
                extra: vec![("se".into(), se.iter().map(|s| fmt_f64(*s)).collect())],
                fit: None,
            });
        }
    }
    if has("concentration.csv") {
        let t = read("concentration.csv")?;
        let bound = t.floats("bound")?;
        out.push(Figure {
            name: "concentration".into(),
            x: "t".into(),
            y: "frequency".into(),
            points: t.floats("t")?.into_iter().zip(t.floats("frequency")?).collect(),
            extra: vec![("bound".into(), bound.iter().map(|b| fmt_f64(*b)).collect())],
            fit: None,
        });
    }
    Ok(out)
}

/// Writes `report.md` and `plots/*.csv` (and `plots/*.svg` when `svg` is
/// set) for the run at `path`, a run directory or its manifest. Every
/// artifact listed in the manifest must be present and unchanged.
pub fn emit_report(path: &Path, svg: bool) -> Result<ReportOutputs> {
    let (mut manifest, dir) = RunManifest::load(path)?;
    for f in &manifest.files {
        f.verify(&dir)?;
    }
    for required in ["summary.csv", "fits.csv", "config.json"] {
        if manifest.file(required).is_none() {
            return Err(LabError::MissingArtifact(format!("{required} is not listed in the manifest")));
        }
    }
    let config: ExperimentConfig = serde_json::from_str(&fs::read_to_string(dir.join("config.json"))?)
        .map_err(|e| LabError::Format(format!("config.json: {e}")))?;
    let summary = ReadTable::read(&dir.join("summary.csv"))?;
    let fits = ReadTable::read(&dir.join("fits.csv"))?;

    fs::create_dir_all(dir.join(PLOT_DIR))?;
    let mut plot_data = Vec::new();
    let mut svgs = Vec::new();
    let mut records = Vec::new();
    let figs = figures(&manifest, &dir, &fits)?;
    for fig in &figs {
        let rel = PathBuf::from(PLOT_DIR).join(format!("{}.csv", fig.name));
        fs::write(dir.join(&rel), fig.table().to_csv()?)?;
        records.push(FileRecord::of(&dir, &rel)?);
        plot_data.push(dir.join(&rel));
        if svg {
            let rel = PathBuf::from(PLOT_DIR).join(format!("{}.svg", fig.name));
            fig.render_svg(&dir.join(&rel))?;
            if dir.join(&rel).exists() {
                records.push(FileRecord::of(&dir, &rel)?);
                svgs.push(dir.join(&rel));
            }
        }
    }

    let text = render_markdown(&manifest, &config, &summary, &dir, &figs)?;
    fs::write(dir.join(REPORT_FILE), text)?;
    records.push(FileRecord::of(&dir, Path::new(REPORT_FILE))?);
    manifest.report_files = records;
    manifest.write(&dir)?;
    Ok(ReportOutputs { report: dir.join(REPORT_FILE), plot_data, svg: svgs })
}

fn cell(row: &[String], k: usize) -> &str {
    row.get(k).map_or("", |s| s.as_str())
}

fn short(text: &str) -> String {
    text.parse::<f64>().map_or_else(|_| text.to_string(), |x| format!("{x:.4}"))
}

fn render_markdown(
    manifest: &RunManifest,
    config: &ExperimentConfig,
    summary: &ReadTable,
    dir: &Path,
    figs: &[Figure],
) -> Result<String> {
    let mut s = String::new();
    let w = |e: std::fmt::Error| LabError::Format(e.to_string());
    writeln!(s, "# polymer-lab run report\n").map_err(w)?;
    writeln!(
        s,
        "- model: {}, dimension {}, weights {}, beta {}",
        serde_json::to_value(config.model)?.as_str().unwrap_or_default(),
        config.dimension,
        config.distribution,
        config.beta
    )
    .map_err(w)?;
    writeln!(
        s,
        "- sizes {:?}, {} replicates per size, master seed {}",
        config.sizes, config.replicates, config.master_seed
    )
    .map_err(w)?;
    writeln!(s, "- tool version {}, config sha256 {}", manifest.version, manifest.config_sha256).map_err(w)?;
    writeln!(s, "- {} workers, started {}, finished {}\n", manifest.workers, manifest.started, manifest.finished)
        .map_err(w)?;

    writeln!(s, "## Estimates\n").map_err(w)?;
    writeln!(s, "| estimator | quantity | estimate | se | 95% interval | window | R^2 | note |").map_err(w)?;
    writeln!(s, "|---|---|---|---|---|---|---|---|").map_err(w)?;
    let col = |name: &str| summary.column(name);
    let (ce, cq, cv, cs, cl, ch, cw, cr, cn) = (
        col("estimator")?,
        col("quantity")?,
        col("estimate")?,
        col("se")?,
        col("ci_lo")?,
        col("ci_hi")?,
        col("window")?,
        col("r_squared")?,
        col("note")?,
    );
    for row in &summary.rows {
        let ci = if cell(row, cl).is_empty() {
            String::new()
        } else {
            format!("[{}, {}]", short(cell(row, cl)), short(cell(row, ch)))
        };
        writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            cell(row, ce),
            cell(row, cq),
            short(cell(row, cv)),
            short(cell(row, cs)),
            ci,
            cell(row, cw),
            short(cell(row, cr)),
            cell(row, cn)
        )
        .map_err(w)?;
    }
    writeln!(s).map_err(w)?;

    if let Some(row) = summary.rows.iter().find(|r| cell(r, ce) == "relation") {
        let verdict = if cell(row, cn).contains("inconsistent") { "inconsistent" } else { "consistent" };
        writeln!(s, "## Exponent relation\n").map_err(w)?;
        writeln!(s, "χ̂ vs κ̂ξ̂−(κ̂−1): {verdict}\n").map_err(w)?;
    }

    if manifest.file("xi_sensitivity.csv").is_some() {
        let t = ReadTable::read(&dir.join("xi_sensitivity.csv"))?;
        let q = config.estimators.xi.as_ref().map_or(0.5, |x| x.q);
        writeln!(s, "## Transversal exponent: dependence on the level q\n").map_err(w)?;
        writeln!(
            s,
            "r*(n) is read at the fixed level q = {q}. This finite-size operating point is a modelling choice; the table shows how the fitted slope moves with q.\n"
        )
        .map_err(w)?;
        writeln!(s, "| q | xi |\n|---|---|").map_err(w)?;
        for row in &t.rows {
            writeln!(s, "| {} | {} |", short(&row[0]), short(&row[1])).map_err(w)?;
        }
        writeln!(s).map_err(w)?;
    }

    if !manifest.incomplete.is_empty() {
        writeln!(s, "## Incomplete tasks\n").map_err(w)?;
        for t in &manifest.incomplete {
            writeln!(s, "- {} (exit code {}): {}", t.task, t.exit_code, t.error).map_err(w)?;
        }
        writeln!(s).map_err(w)?;
    }

    writeln!(s, "## Plot data\n").map_err(w)?;
    for f in figs {
        writeln!(s, "- {}/{}.csv: {} against {}", PLOT_DIR, f.name, f.y, f.x).map_err(w)?;
    }
    Ok(s)
}
