//! Experiment orchestration: runs the selected estimators for one
//! configuration and persists CSV artifacts, a JSON results dump and a
//! manifest with content hashes.

pub mod config;
pub mod manifest;
pub mod report;
mod table;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::environment::WeightDistribution;
use crate::error::{LabError, Result};
use crate::estimators::chi::{chi_from_values, ChiResult};
use crate::estimators::concentration::{concentration_tail, ConcentrationReport};
use crate::estimators::delta_f::{delta_f_variance, DeltaFReport};
use crate::estimators::ensemble::{domain, EnsembleSpec};
use crate::estimators::excess::{mean_excess_from_values, FeReference, MeanFreeEnergyCurve};
use crate::estimators::exponent::ExponentEstimate;
use crate::estimators::kappa::{antidiagonal_fan, default_offsets, estimate_kappa, KappaResult};
use crate::estimators::relation::{check_relation, RelationReport};
use crate::estimators::shape::{
    containment_side, estimate_limit_shape, shape_containment, ConstantEnvShape, ContainmentReport, ShapeEstimate,
};
use crate::estimators::stats::{RegressionFit, Z95};
use crate::estimators::xi::{estimate_xi, XiResult};
use crate::lattice::Vertex;
use crate::numfmt::fmt_f64;
use crate::rng::derive_seed;

pub use config::{ConfigDraft, ExperimentConfig, ParamSource, WORKERS_ENV};
pub use manifest::{FileRecord, IncompleteTask, RunManifest, SeedLedgerEntry};
pub use report::{emit_report, ReportOutputs};
use table::Table;

/// Confinement levels at which the transversal exponent is re-read from the
/// stored curves for the sensitivity table.
pub const XI_SENSITIVITY_LEVELS: [f64; 5] = [0.25, 0.4, 0.5, 0.6, 0.75];

/// Everything computed by one run, serialized to `results.json`.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct RunResults {
    pub chi: Option<ChiResult>,
    pub xi: Option<XiResult>,
    pub shape: Option<ShapeEstimate>,
    pub kappa_shape: Option<ShapeEstimate>,
    pub kappa: Option<KappaResult>,
    pub relation: Option<RelationReport>,
    pub delta_f: Option<DeltaFReport>,
    pub mean_excess: Option<MeanFreeEnergyCurve>,
    pub concentration: Option<ConcentrationReport>,
    pub containment: Option<ContainmentReport>,
}

/// Runs `config` with every parameter attributed to the configuration file.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest> {
    let provenance = config::CONFIG_KEYS.iter().map(|k| (k.to_string(), ParamSource::Config)).collect();
    run_with_provenance(config, &provenance)
}

pub fn run_with_provenance(
    config: &ExperimentConfig,
    provenance: &BTreeMap<String, ParamSource>,
) -> Result<RunManifest> {
    config.validate()?;
    let (workers, worker_source) = config.resolve_workers()?;
    let mut provenance = provenance.clone();
    if config.workers.is_none() {
        provenance.insert("workers".into(), worker_source);
    }
    let started = chrono::Utc::now().to_rfc3339();
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| LabError::ResourceCap(format!("cannot start {workers} workers: {e}")))?;

    let mut run = Run::new(config, dir.clone());
    pool.install(|| run.execute())?;

    let config_text = serde_json::to_string_pretty(config)? + "\n";
    run.write_text("config.json", &config_text)?;
    let results_text = serde_json::to_string_pretty(&run.results)? + "\n";
    run.write_text("results.json", &results_text)?;

    let manifest = RunManifest {
        tool: "polymer-lab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: manifest::sha256_hex(config_text.as_bytes()),
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        workers,
        provenance,
        estimators: config.estimators.names().iter().map(|s| s.to_string()).collect(),
        seed_ledger: seed_ledger(config),
        files: run.files,
        incomplete: run.incomplete,
        report_files: Vec::new(),
    };
    manifest.write(&dir)?;
    Ok(manifest)
}

struct Run<'a> {
    config: &'a ExperimentConfig,
    spec: EnsembleSpec,
    dir: PathBuf,
    summary: Table,
    fits: Table,
    files: Vec<FileRecord>,
    incomplete: Vec<IncompleteTask>,
    results: RunResults,
}

/// Errors that end one estimator but let the rest of the run continue.
fn is_partial(e: &LabError) -> bool {
    matches!(
        e,
        LabError::ResourceCap(_)
            | LabError::Degenerate(_)
            | LabError::GridExhausted { .. }
            | LabError::FlatWithinNoise(_)
            | LabError::Unbounded(_)
            | LabError::OutsideBox { .. }
    )
}

fn window_label(sizes: &[u64], w: (usize, usize)) -> String {
    if w.1 > w.0 && w.1 <= sizes.len() {
        format!("{}..{}", sizes[w.0], sizes[w.1 - 1])
    } else {
        String::new()
    }
}

fn unit_diagonal_angle(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let along = x.iter().sum::<f64>() / d.sqrt();
    let mean = x.iter().sum::<f64>() / d;
    let across = x.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>().sqrt();
    let sign = if x.len() >= 2 && x[1] < x[0] { -1.0 } else { 1.0 };
    sign * across.atan2(along)
}

impl<'a> Run<'a> {
    fn new(config: &'a ExperimentConfig, dir: PathBuf) -> Self {
        Self {
            config,
            spec: config.ensemble(),
            dir,
            summary: Table::new(&[
                "estimator",
                "quantity",
                "estimate",
                "se",
                "ci_lo",
                "ci_hi",
                "window",
                "r_squared",
                "note",
            ]),
            fits: Table::new(&["estimator", "x", "y", "slope", "intercept", "window_lo", "window_hi", "r_squared"]),
            files: Vec::new(),
            incomplete: Vec::new(),
            results: RunResults::default(),
        }
    }

    fn execute(&mut self) -> Result<()> {
        let est = self.config.estimators.clone();
        let mut diagonal: Option<Vec<Vec<f64>>> = None;
        if est.chi.is_some() || est.mean_excess.is_some() {
            match self.spec.diagonal_values() {
                Ok(v) => diagonal = Some(v),
                Err(e) if is_partial(&e) => {
                    if est.chi.is_some() {
                        self.flag("chi", &e);
                    }
                    if est.mean_excess.is_some() {
                        self.flag("mean_excess", &e);
                    }
                }
                Err(e) => return Err(e),
            }
        }
        if let (Some(opts), Some(values)) = (&est.chi, &diagonal) {
            let seed = derive_seed(self.spec.master_seed, &[domain::BOOTSTRAP, 0]);
            let r = chi_from_values(&self.spec.sizes, values.clone(), opts, seed);
            self.step("chi", r, Self::record_chi)?;
        }
        if let Some(opts) = &est.xi {
            let r = estimate_xi(&self.spec, opts);
            self.step("xi", r, Self::record_xi)?;
        }
        if let Some(opts) = &est.shape {
            let dirs = match &opts.directions {
                Some(d) => Ok(d.clone()),
                None => antidiagonal_fan(self.spec.dimension, &default_offsets()),
            };
            let r = dirs.and_then(|d| estimate_limit_shape(&self.spec, &d));
            self.step("shape", r, Self::record_shape)?;
        }
        if let Some(opts) = &est.kappa {
            let offsets = opts.offsets();
            let seed = derive_seed(self.spec.master_seed, &[domain::BOOTSTRAP, 2]);
            let reuse = self
                .results
                .shape
                .as_ref()
                .filter(|s| antidiagonal_fan(self.spec.dimension, &offsets).is_ok_and(|f| f == s.directions))
                .cloned();
            let r = match reuse {
                Some(shape) => Ok(shape),
                None => {
                    antidiagonal_fan(self.spec.dimension, &offsets).and_then(|f| estimate_limit_shape(&self.spec, &f))
                }
            }
            .and_then(|shape| estimate_kappa(&shape, seed).map(|k| (shape, k)));
            self.step("kappa", r, Self::record_kappa)?;
        }
        if est.relation.is_some() {
            let parts = (
                self.results.chi.as_ref().map(|c| c.estimate.clone()),
                self.results.xi.as_ref().map(|x| x.estimate.clone()),
                self.results.kappa.as_ref().map(|k| k.estimate.clone()),
            );
            match parts {
                (Some(c), Some(x), Some(k)) => {
                    let report = check_relation(&c, &x, &k);
                    self.record_relation(report)?;
                }
                _ => self.incomplete.push(IncompleteTask {
                    task: "relation".into(),
                    error: "an input exponent is missing".into(),
                    exit_code: 1,
                }),
            }
        }
        if let Some(opts) = &est.delta_f {
            let n = opts.n.unwrap_or(*self.spec.sizes.last().expect("validated sizes"));
            let r = delta_f_variance(&self.spec, n, opts.xi_prime);
            self.step("delta_f", r, Self::record_delta_f)?;
        }
        if let (Some(opts), Some(values)) = (&est.mean_excess, &diagonal) {
            let reference = opts.reference.or_else(|| self.closed_form_reference());
            let r = mean_excess_from_values(&self.spec.sizes, values, reference, opts.window);
            self.step("mean_excess", r, Self::record_mean_excess)?;
        }
        if let Some(opts) = &est.concentration {
            let n = *self.spec.sizes.last().expect("validated sizes") as i64;
            let z = Vertex(opts.z.clone().unwrap_or_else(|| vec![n; self.spec.dimension]));
            let r = concentration_tail(&self.spec, &z, &opts.t);
            self.step("concentration", r, Self::record_concentration)?;
        }
        if let Some(opts) = &est.containment {
            let r = self.containment(opts.t, opts.epsilon);
            self.step("containment", r, Self::record_containment)?;
        }
        let summary = std::mem::replace(&mut self.summary, Table::new(&[]));
        self.write_table("summary.csv", &summary)?;
        let fits = std::mem::replace(&mut self.fits, Table::new(&[]));
        self.write_table("fits.csv", &fits)?;
        Ok(())
    }

    fn closed_form_reference(&self) -> Option<FeReference> {
        match self.spec.dist {
            WeightDistribution::Constant { value } => {
                let c = value + self.spec.shift;
                let f = ConstantEnvShape { c, beta: self.spec.beta };
                match self.spec.model {
                    crate::estimators::Model::Polymer => {
                        Some(FeReference::ClosedForm { value: f.value(&vec![1.0; self.spec.dimension]) })
                    }
                    crate::estimators::Model::Lpp => {
                        Some(FeReference::ClosedForm { value: c * self.spec.dimension as f64 })
                    }
                }
            }
            _ => None,
        }
    }

    fn containment(&self, t: f64, epsilon: f64) -> Result<ContainmentReport> {
        let WeightDistribution::Constant { value } = self.spec.dist else {
            return Err(LabError::Config("containment needs a constant distribution".into()));
        };
        let d = self.spec.dimension;
        let reference = ConstantEnvShape { c: value + self.spec.shift, beta: self.spec.beta };
        let lpp = LinearShape { c: reference.c };
        let shape: &dyn crate::estimators::ShapeFunction = match self.spec.model {
            crate::estimators::Model::Polymer => &reference,
            crate::estimators::Model::Lpp => &lpp,
        };
        let side = containment_side(shape, d, (1.0 + epsilon) * t)?;
        let corner = Vertex(vec![side; d]);
        let env = self.spec.environment(domain::CONTAINMENT, 0, &corner)?;
        shape_containment(&env, self.spec.model, self.spec.beta, t, shape, epsilon)
    }

    fn step<T>(&mut self, name: &str, outcome: Result<T>, record: fn(&mut Self, T) -> Result<()>) -> Result<()> {
        match outcome {
            Ok(v) => record(self, v),
            Err(e) if is_partial(&e) => {
                self.flag(name, &e);
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn flag(&mut self, name: &str, e: &LabError) {
        self.incomplete.push(IncompleteTask { task: name.into(), error: e.to_string(), exit_code: e.exit_code() });
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.files.push(FileRecord::of(&self.dir, Path::new(name))?);
        Ok(())
    }

    fn write_table(&mut self, name: &str, table: &Table) -> Result<()> {
        let text = table.to_csv()?;
        self.write_text(name, &text)
    }

    fn exponent_row(&mut self, name: &str, e: &ExponentEstimate, window: String, note: String) {
        let se = e.fit.slope_se.map_or(String::new(), |_| fmt_f64(e.half_width() / Z95));
        self.summary.push(vec![
            name.into(),
            e.which.name().into(),
            fmt_f64(e.value),
            se,
            fmt_f64(e.ci.0),
            fmt_f64(e.ci.1),
            window,
            fmt_f64(e.fit.r_squared),
            note,
        ]);
    }

    fn fit_row(&mut self, name: &str, x: &str, y: &str, fit: &RegressionFit) {
        self.fits.push(vec![
            name.into(),
            x.into(),
            y.into(),
            fmt_f64(fit.slope),
            fmt_f64(fit.intercept),
            fit.window.0.to_string(),
            fit.window.1.to_string(),
            fmt_f64(fit.r_squared),
        ]);
    }

    fn record_chi(&mut self, r: ChiResult) -> Result<()> {
        let mut reps = Table::new(&["size", "replicate", "value"]);
        for (n, vals) in r.sizes.iter().zip(&r.values) {
            for (i, v) in vals.iter().enumerate() {
                reps.push(vec![n.to_string(), i.to_string(), fmt_f64(*v)]);
            }
        }
        self.write_table("chi_replicates.csv", &reps)?;
        let mut sizes = Table::new(&["size", "variance", "variance_se"]);
        for ((n, v), s) in r.sizes.iter().zip(&r.variances).zip(&r.variance_se) {
            sizes.push(vec![n.to_string(), fmt_f64(*v), fmt_f64(*s)]);
        }
        self.write_table("chi_sizes.csv", &sizes)?;
        let note = r.estimate.warnings.join("; ");
        self.exponent_row("chi", &r.estimate, window_label(&r.sizes, r.estimate.fit.window), note);
        self.fit_row("chi", "log_n", "log_var", &r.estimate.fit);
        self.results.chi = Some(r);
        Ok(())
    }

    fn record_xi(&mut self, r: XiResult) -> Result<()> {
        let mut reps;
        if r.deviations.is_empty() {
            reps = Table::new(&["size", "replicate", "radius", "value"]);
            for ((n, grid), curves) in r.sizes.iter().zip(&r.grids).zip(&r.curves) {
                for (i, curve) in curves.iter().enumerate() {
                    for (radius, p) in grid.iter().zip(curve) {
                        reps.push(vec![n.to_string(), i.to_string(), fmt_f64(*radius), fmt_f64(*p)]);
                    }
                }
            }
        } else {
            reps = Table::new(&["size", "replicate", "value"]);
            for (n, devs) in r.sizes.iter().zip(&r.deviations) {
                for (i, v) in devs.iter().enumerate() {
                    reps.push(vec![n.to_string(), i.to_string(), fmt_f64(*v)]);
                }
            }
        }
        self.write_table("xi_replicates.csv", &reps)?;
        let mut sizes = Table::new(&["size", "r_star"]);
        for (n, rs) in r.sizes.iter().zip(&r.r_star) {
            sizes.push(vec![n.to_string(), fmt_f64(*rs)]);
        }
        self.write_table("xi_sizes.csv", &sizes)?;
        let mut sens = Table::new(&["q", "xi"]);
        for q in XI_SENSITIVITY_LEVELS {
            sens.push(vec![fmt_f64(q), fmt_f64(r.at_level(q).unwrap_or(f64::NAN))]);
        }
        self.write_table("xi_sensitivity.csv", &sens)?;
        let mut note = r.estimate.warnings.join("; ");
        if r.estimate.degenerate {
            note = format!("degenerate; {note}");
        }
        self.exponent_row("xi", &r.estimate, window_label(&r.sizes, r.estimate.fit.window), note);
        self.fit_row("xi", "log_n", "log_r", &r.estimate.fit);
        self.results.xi = Some(r);
        Ok(())
    }

    fn shape_tables(&mut self, prefix: &str, s: &ShapeEstimate) -> Result<()> {
        let d = self.spec.dimension;
        let mut head = vec!["direction".to_string(), "angle".to_string()];
        head.extend((1..=d).map(|k| format!("x{k}")));
        head.extend((1..=d).map(|k| format!("p{k}")));
        head.extend(["value", "se", "boundary"].map(String::from));
        let mut dirs = Table::from_header(head);
        for (k, x) in s.directions.iter().enumerate() {
            let mut row = vec![k.to_string(), fmt_f64(unit_diagonal_angle(x))];
            row.extend(x.iter().map(|c| fmt_f64(*c)));
            row.extend(s.points[k].0.iter().map(|c| c.to_string()));
            row.extend([fmt_f64(s.values[k]), fmt_f64(s.se[k]), s.boundary[k].to_string()]);
            dirs.push(row);
        }
        self.write_table(&format!("{prefix}_directions.csv"), &dirs)?;
        let mut reps = Table::new(&["direction", "replicate", "value"]);
        for (k, vals) in s.per_replicate.iter().enumerate() {
            for (i, v) in vals.iter().enumerate() {
                reps.push(vec![k.to_string(), i.to_string(), fmt_f64(*v)]);
            }
        }
        self.write_table(&format!("{prefix}_replicates.csv"), &reps)?;
        let mut cont = Table::new(&["size", "direction", "gap"]);
        for c in &s.containment {
            for (k, g) in c.gaps.iter().enumerate() {
                cont.push(vec![c.n.to_string(), k.to_string(), fmt_f64(*g)]);
            }
        }
        self.write_table(&format!("{prefix}_containment.csv"), &cont)
    }

    fn record_shape(&mut self, s: ShapeEstimate) -> Result<()> {
        self.shape_tables("shape", &s)?;
        let k = s.directions.iter().position(|x| x.iter().all(|&c| c == x[0])).unwrap_or(0);
        let label = format!("f({})", s.directions[k].iter().map(|c| fmt_num(*c)).collect::<Vec<_>>().join(","));
        let worst = s.containment.iter().map(|c| c.max_abs_gap).fold(0.0, f64::max);
        let note =
            format!("n = {}; {} directions; largest smaller-size gap {}", s.n, s.directions.len(), fmt_num(worst));
        let (v, se) = (s.values[k], s.se[k]);
        self.summary.push(vec![
            "shape".into(),
            label,
            fmt_f64(v),
            fmt_f64(se),
            fmt_f64(v - Z95 * se),
            fmt_f64(v + Z95 * se),
            s.n.to_string(),
            String::new(),
            note,
        ]);
        self.results.shape = Some(s);
        Ok(())
    }

    fn record_kappa(&mut self, (shape, k): (ShapeEstimate, KappaResult)) -> Result<()> {
        self.shape_tables("kappa_fan", &shape)?;
        let mut pts = Table::new(&["norm", "diff", "diff_se", "used"]);
        for i in 0..k.norms.len() {
            pts.push(vec![fmt_f64(k.norms[i]), fmt_f64(k.diffs[i]), fmt_f64(k.diff_se[i]), k.used[i].to_string()]);
        }
        self.write_table("kappa_points.csv", &pts)?;
        let used = k.used.iter().filter(|&&u| u).count();
        let note = format!("{used} of {} fan points above 3 SE", k.used.len());
        self.exponent_row("kappa", &k.estimate, format!("{used} points"), note);
        self.fit_row("kappa", "log_z", "log_diff", &k.estimate.fit);
        self.results.kappa_shape = Some(shape);
        self.results.kappa = Some(k);
        Ok(())
    }

    fn record_relation(&mut self, r: RelationReport) -> Result<()> {
        self.summary.push(vec![
            "relation".into(),
            "kappa*xi-(kappa-1)".into(),
            fmt_f64(r.rhs),
            String::new(),
            fmt_f64(r.rhs_ci.0),
            fmt_f64(r.rhs_ci.1),
            String::new(),
            String::new(),
            format!("residual {}; {}", fmt_num(r.residual), r.verdict()),
        ]);
        self.results.relation = Some(r);
        Ok(())
    }

    fn record_delta_f(&mut self, r: DeltaFReport) -> Result<()> {
        let mut t = Table::new(&["n", "xi_prime", "k", "norm", "variance", "variance_se", "var_f", "var_f_se"]);
        t.push(vec![
            r.offset.n.to_string(),
            fmt_f64(r.offset.xi_prime),
            r.offset.k.to_string(),
            fmt_f64(r.offset.norm),
            fmt_f64(r.variance),
            fmt_f64(r.variance_se),
            fmt_f64(r.var_f),
            fmt_f64(r.var_f_se),
        ]);
        self.write_table("delta_f.csv", &t)?;
        self.summary.push(vec![
            "delta_f".into(),
            "var_delta_f".into(),
            fmt_f64(r.variance),
            fmt_f64(r.variance_se),
            fmt_f64(r.variance - Z95 * r.variance_se),
            fmt_f64(r.variance + Z95 * r.variance_se),
            r.offset.n.to_string(),
            String::new(),
            format!("var F(0, n e) = {}", fmt_num(r.var_f)),
        ]);
        self.results.delta_f = Some(r);
        Ok(())
    }

    fn record_mean_excess(&mut self, c: MeanFreeEnergyCurve) -> Result<()> {
        let mut t = Table::new(&["size", "mean", "se", "excess", "excess_se", "reference_bias"]);
        for i in 0..c.sizes.len() {
            t.push(vec![
                c.sizes[i].to_string(),
                fmt_f64(c.mean[i]),
                fmt_f64(c.se[i]),
                fmt_f64(c.excess[i]),
                fmt_f64(c.excess_se[i]),
                fmt_f64(c.reference_bias[i]),
            ]);
        }
        self.write_table("mean_excess.csv", &t)?;
        let reference = match c.reference {
            FeReference::ClosedForm { value } => format!("closed-form f(e) = {}", fmt_num(value)),
            FeReference::Estimated { value, bias_bound } => {
                format!("estimated f(e) = {} with bias bound {}", fmt_num(value), fmt_num(bias_bound))
            }
        };
        let fit = c.log_fit.clone();
        let se = fit.slope_se.map_or(String::new(), fmt_f64);
        let (lo, hi) = fit
            .slope_se
            .map_or((String::new(), String::new()), |s| (fmt_f64(fit.slope - Z95 * s), fmt_f64(fit.slope + Z95 * s)));
        self.summary.push(vec![
            "mean_excess".into(),
            "log_n_slope".into(),
            fmt_f64(fit.slope),
            se,
            lo,
            hi,
            window_label(&c.sizes, fit.window),
            fmt_f64(fit.r_squared),
            reference,
        ]);
        self.fit_row("mean_excess", "log_n", "excess", &fit);
        if let Some(p) = &c.power_fit {
            self.fit_row("mean_excess_power", "log_n", "log_abs_excess", p);
        }
        self.results.mean_excess = Some(c);
        Ok(())
    }

    fn record_concentration(&mut self, r: ConcentrationReport) -> Result<()> {
        let mut rows = Table::new(&[
            "t",
            "threshold",
            "exceedances",
            "frequency",
            "wilson_lo",
            "wilson_hi",
            "bound",
            "sigma_mc",
            "within_bound",
        ]);
        for row in &r.rows {
            rows.push(vec![
                fmt_f64(row.t),
                fmt_f64(row.threshold),
                row.exceedances.to_string(),
                fmt_f64(row.frequency),
                fmt_f64(row.wilson.0),
                fmt_f64(row.wilson.1),
                fmt_f64(row.bound),
                fmt_f64(row.sigma_mc),
                row.within_bound.to_string(),
            ]);
        }
        self.write_table("concentration.csv", &rows)?;
        let mut reps = Table::new(&["replicate", "value"]);
        for (i, v) in r.values.iter().enumerate() {
            reps.push(vec![i.to_string(), fmt_f64(*v)]);
        }
        self.write_table("concentration_replicates.csv", &reps)?;
        let worst = r.rows.iter().map(|row| row.frequency - row.bound).fold(f64::NEG_INFINITY, f64::max);
        let all = r.rows.iter().all(|row| row.within_bound);
        self.summary.push(vec![
            "concentration".into(),
            "max_frequency_minus_bound".into(),
            fmt_f64(worst),
            String::new(),
            String::new(),
            String::new(),
            format!("z = {}", r.z),
            String::new(),
            if all { "within bound at every t".into() } else { "bound exceeded beyond 3 sigma".into() },
        ]);
        self.results.concentration = Some(r);
        Ok(())
    }

    fn record_containment(&mut self, r: ContainmentReport) -> Result<()> {
        let mut t =
            Table::new(&["t", "epsilon", "outer_ratio", "inner_ratio", "required_epsilon", "holds", "points_checked"]);
        t.push(vec![
            fmt_f64(r.t),
            fmt_f64(r.epsilon),
            fmt_f64(r.outer_ratio),
            fmt_f64(r.inner_ratio),
            fmt_f64(r.required_epsilon),
            r.holds.to_string(),
            r.points_checked.to_string(),
        ]);
        self.write_table("containment.csv", &t)?;
        self.summary.push(vec![
            "containment".into(),
            "required_epsilon".into(),
            fmt_f64(r.required_epsilon),
            String::new(),
            String::new(),
            String::new(),
            format!("t = {}", fmt_num(r.t)),
            String::new(),
            if r.holds { format!("holds at epsilon {}", fmt_num(r.epsilon)) } else { "fails".into() },
        ]);
        self.results.containment = Some(r);
        Ok(())
    }
}

/// `f(x) = c |x|_1`, the shape of a constant environment at zero temperature.
struct LinearShape {
    c: f64,
}

impl crate::estimators::ShapeFunction for LinearShape {
    fn eval(&self, x: &[f64]) -> Result<(f64, f64)> {
        Ok((self.c * x.iter().sum::<f64>(), 0.0))
    }
}

/// Short human-readable number for notes.
fn fmt_num(x: f64) -> String {
    format!("{x:.6}")
}

fn seed_ledger(config: &ExperimentConfig) -> Vec<SeedLedgerEntry> {
    let spec = config.ensemble();
    let est = &config.estimators;
    let reps = |dom: u64| -> Vec<u64> { (0..spec.replicates as u64).map(|r| spec.replicate_seed(dom, r)).collect() };
    let mut out = Vec::new();
    let mut sized = |task: &str, indices: Vec<usize>| {
        for i in indices {
            out.push(SeedLedgerEntry {
                task: task.into(),
                domain: i as u64,
                size: Some(spec.sizes[i]),
                seeds: reps(i as u64),
            });
        }
    };
    let all: Vec<usize> = (0..spec.sizes.len()).collect();
    if est.chi.is_some() || est.mean_excess.is_some() {
        sized("diagonal", all.clone());
    }
    if est.xi.is_some() {
        sized("xi", all.clone());
    }
    if est.shape.is_some() || est.kappa.is_some() {
        sized("shape", all);
    }
    let mut named = |task: &str, dom: u64, count: usize| {
        let seeds = (0..count as u64).map(|r| spec.replicate_seed(dom, r)).collect();
        out.push(SeedLedgerEntry { task: task.into(), domain: dom, size: None, seeds });
    };
    if est.delta_f.is_some() {
        named("delta_f", domain::DELTA_F, spec.replicates);
    }
    if est.concentration.is_some() {
        named("concentration", domain::CONCENTRATION, spec.replicates);
    }
    if est.containment.is_some() {
        named("containment", domain::CONTAINMENT, 1);
    }
    let boot = |k: u64| derive_seed(spec.master_seed, &[domain::BOOTSTRAP, k]);
    let mut boots = Vec::new();
    if est.chi.is_some() {
        boots.push(boot(0));
    }
    if est.xi.is_some() {
        boots.push(boot(1));
    }
    if est.kappa.is_some() {
        boots.push(boot(2));
    }
    if !boots.is_empty() {
        out.push(SeedLedgerEntry { task: "bootstrap".into(), domain: domain::BOOTSTRAP, size: None, seeds: boots });
    }
    out
}
