use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use polymer_core::estimators::exponent::{Exponent, ExponentEstimate};
use polymer_core::estimators::relation::check_relation;
use polymer_core::estimators::stats::Z95;
use polymer_core::lattice::{Cylinder, Slab};
use polymer_core::numfmt::fmt_f64;
use polymer_core::polymer::{free_energy, log_partition, ConstraintMask, PolymerParams};
use polymer_core::runner::config::{ConfigDraft, ParamSource};
use polymer_core::runner::{emit_report, run_with_provenance, RunManifest};
use polymer_core::sampler::{sample_paths, write_samples_csv};
use polymer_core::{
    first_passage, geodesic, last_passage, Environment, LabError, Result, TruncationSpec, Vertex, WeightDistribution,
};

#[derive(Parser)]
#[command(name = "polymer-lab", version, about = "Directed polymers and last-passage percolation on finite lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an environment and write its CSV snapshot.
    Generate(GenerateArgs),
    /// Free energy F(source, target) of one environment.
    FreeEnergy(FreeEnergyArgs),
    /// Exact samples from the polymer measure.
    SamplePaths(SampleArgs),
    /// Last-passage (or first-passage) value and geodesic.
    Lpp(LppArgs),
    /// Run a single estimator.
    Estimate(EstimateArgs),
    /// Check chi = kappa xi - (kappa - 1) for given or stored estimates.
    CheckRelation(RelationArgs),
    /// Run every estimator selected in a configuration file.
    Run(RunArgs),
    /// Write the report and plot data of a finished run.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Weight law, e.g. `exponential:1`, `bernoulli:0.5,0,1` or a JSON object.
    #[arg(long)]
    dist: WeightDistribution,
    /// Box corner, e.g. `10,10`.
    #[arg(long)]
    corner: Vertex,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replace every weight by min(weight, L).
    #[arg(long)]
    truncate: Option<f64>,
    /// Add a constant to every weight.
    #[arg(long)]
    shift: Option<f64>,
    /// Output file; `-` for standard output.
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args)]
struct FieldArgs {
    /// Environment snapshot written by `generate`.
    #[arg(long)]
    env: PathBuf,
    #[arg(long)]
    target: Vertex,
    /// Defaults to the origin.
    #[arg(long)]
    source: Option<Vertex>,
}

#[derive(Args)]
struct FreeEnergyArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Keep only paths within this distance of the segment source -> target.
    #[arg(long, conflicts_with_all = ["slab", "through"])]
    cylinder: Option<f64>,
    /// Keep only paths crossing the level band `near,far` of the coordinate sum.
    #[arg(long, value_parser = parse_pair, conflicts_with = "through")]
    slab: Option<(i64, i64)>,
    /// Keep only paths through these vertices, separated by `;`.
    #[arg(long)]
    through: Option<String>,
    /// Write the whole logZ field as CSV.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args)]
struct LppArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Minimize instead of maximize (first-passage percolation).
    #[arg(long)]
    min: bool,
    /// Write the geodesic as CSV.
    #[arg(long)]
    geodesic: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Chi,
    Xi,
    Kappa,
    Shape,
}

#[derive(Args, Default)]
struct ExperimentFlags {
    /// Base configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long)]
    dist: Option<WeightDistribution>,
    #[arg(long)]
    beta: Option<f64>,
    /// Comma-separated, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<u64>>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the POLYMER_LAB_WORKERS environment variable.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    max_field_vertices: Option<u64>,
}

#[derive(Args)]
struct EstimateArgs {
    which: Which,
    #[command(flatten)]
    flags: ExperimentFlags,
    /// Confinement level or deviation quantile (xi).
    #[arg(long)]
    q: Option<f64>,
    /// Number of smallest sizes left out of the fit (chi, xi).
    #[arg(long)]
    skip_smallest: Option<usize>,
    /// Signed anti-diagonal offsets (kappa).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    offsets: Option<Vec<f64>>,
    /// Directions separated by `;`, coordinates by `,` (shape).
    #[arg(long)]
    directions: Option<String>,
}

#[derive(Args)]
struct RelationArgs {
    /// `value` or `value,half_width` of a 95% interval.
    #[arg(long, value_parser = parse_estimate, allow_hyphen_values = true)]
    chi: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_estimate, allow_hyphen_values = true)]
    xi: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_estimate, allow_hyphen_values = true)]
    kappa: Option<(f64, f64)>,
    /// Read the three estimates from a finished run's summary instead.
    #[arg(long, conflicts_with_all = ["chi", "xi", "kappa"])]
    run: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    flags: ExperimentFlags,
    /// Also write the report after the run.
    #[arg(long)]
    report: bool,
    /// Render SVG figures with the report.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory or manifest file.
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    svg: bool,
}

fn parse_pair(s: &str) -> std::result::Result<(i64, i64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `near,far`")?;
    Ok((a.trim().parse().map_err(|_| "bad integer")?, b.trim().parse().map_err(|_| "bad integer")?))
}

fn parse_estimate(s: &str) -> std::result::Result<(f64, f64), String> {
    let mut parts = s.split(',').map(|t| t.trim().parse::<f64>());
    let value = parts.next().ok_or("empty")?.map_err(|e| e.to_string())?;
    let half = parts.next().transpose().map_err(|e| e.to_string())?.unwrap_or(0.0);
    if parts.next().is_some() || half.is_nan() || half < 0.0 {
        return Err("expected `value` or `value,half_width`".into());
    }
    Ok((value, half))
}

fn parse_directions(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';')
        .map(|d| {
            d.split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|_| LabError::Config(format!("bad direction {d:?}"))))
                .collect()
        })
        .collect()
}

fn writer(path: &Path) -> Result<Box<dyn Write>> {
    Ok(if path.as_os_str() == "-" {
        Box::new(BufWriter::new(io::stdout()))
    } else {
        Box::new(BufWriter::new(File::create(path)?))
    })
}

fn load_env(path: &Path) -> Result<Environment> {
    Environment::read_csv(BufReader::new(File::open(path)?))
}

fn source_of(field: &FieldArgs) -> Vertex {
    field.source.clone().unwrap_or_else(|| Vertex::origin(field.target.dim()))
}

fn generate(a: GenerateArgs) -> Result<()> {
    let mut env = Environment::generate_on(&a.dist, &a.corner, a.seed)?;
    if let Some(l) = a.truncate {
        env = env.truncate(TruncationSpec::new(l)?);
    }
    if let Some(c) = a.shift {
        env = env.shift(c)?;
    }
    let mut out = writer(&a.out)?;
    env.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn free_energy_cmd(a: FreeEnergyArgs) -> Result<()> {
    let env = load_env(&a.field.env)?;
    let source = source_of(&a.field);
    let target = a.field.target.clone();
    let mask = if let Some(r) = a.cylinder {
        ConstraintMask::Cylinder(Cylinder::new(source.to_f64(), target.to_f64(), r)?)
    } else if let Some((near, far)) = a.slab {
        ConstraintMask::SlabPass(Slab::new(near, far, None)?)
    } else if let Some(list) = &a.through {
        ConstraintMask::ThroughPoints(list.split(';').map(|v| v.parse()).collect::<Result<_>>()?)
    } else {
        ConstraintMask::Full
    };
    let field = log_partition(&env, PolymerParams::new(a.beta)?, &source, &mask)?;
    let f = free_energy(&field, &target)?;
    println!("log_z,{}", fmt_f64(field.log_z(&target)?));
    println!("free_energy,{}", fmt_f64(f));
    if let Some(path) = a.dump {
        let mut out = writer(&path)?;
        field.write_csv(&mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn sample_cmd(a: SampleArgs) -> Result<()> {
    let env = load_env(&a.field.env)?;
    let source = source_of(&a.field);
    let field = log_partition(&env, PolymerParams::new(a.beta)?, &source, &ConstraintMask::Full)?;
    let samples = sample_paths(&field, &env, &a.field.target, a.count, a.seed)?;
    let mut out = writer(&a.out)?;
    write_samples_csv(&samples, &mut out)?;
    out.flush()?;
    Ok(())
}

fn lpp_cmd(a: LppArgs) -> Result<()> {
    let env = load_env(&a.field.env)?;
    let source = source_of(&a.field);
    let target = &a.field.target;
    let field = if a.min { first_passage(&env, &source, target)? } else { last_passage(&env, &source, target)? };
    println!("{},{}", if a.min { "first_passage" } else { "last_passage" }, fmt_f64(field.value(target)?));
    if let Some(path) = a.geodesic {
        let g = geodesic(&field, &env, target)?;
        let mut out = writer(&path)?;
        g.write_csv(&mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn draft_from(flags: &ExperimentFlags) -> Result<ConfigDraft> {
    let mut draft = match &flags.config {
        Some(path) => ConfigDraft::from_file(path)?,
        None => ConfigDraft::empty(),
    };
    let mut set = |key: &str, v: Option<Value>| {
        if let Some(v) = v {
            draft.set(key, v, ParamSource::Flag);
        }
    };
    set("model", flags.model.as_ref().map(|m| json!(m)));
    set("dimension", flags.dimension.map(|d| json!(d)));
    set("distribution", flags.dist.as_ref().map(|d| serde_json::to_value(d).expect("distributions serialize")));
    set("beta", flags.beta.map(|b| json!(b)));
    set("sizes", flags.sizes.as_ref().map(|s| json!(s)));
    set("replicates", flags.replicates.map(|r| json!(r)));
    set("master_seed", flags.seed.map(|s| json!(s)));
    set("output_dir", flags.out.as_ref().map(|o| json!(o)));
    set("workers", flags.workers.map(|w| json!(w)));
    set("max_field_vertices", flags.max_field_vertices.map(|m| json!(m)));
    Ok(draft)
}

fn finish_run(draft: ConfigDraft, report: bool, svg: bool) -> Result<i32> {
    let (config, provenance) = draft.finish()?;
    let manifest = run_with_provenance(&config, &provenance)?;
    let summary = std::fs::read_to_string(config.output_dir.join("summary.csv"))?;
    print!("{summary}");
    for t in &manifest.incomplete {
        eprintln!("incomplete: {}: {}", t.task, t.error);
    }
    if report {
        let out = emit_report(&config.output_dir, svg)?;
        eprintln!("report: {}", out.report.display());
    }
    Ok(manifest.exit_code())
}

fn estimate_cmd(a: EstimateArgs) -> Result<i32> {
    let mut draft = draft_from(&a.flags)?;
    let window = a.skip_smallest.map_or(json!({}), |k| json!({ "skip_smallest": k }));
    let (name, options) = match a.which {
        Which::Chi => ("chi", json!({ "window": window })),
        Which::Xi => {
            let mut o = json!({ "window": window });
            if let Some(q) = a.q {
                o["q"] = json!(q);
            }
            ("xi", o)
        }
        Which::Kappa => ("kappa", a.offsets.as_ref().map_or(json!({}), |o| json!({ "offsets": o }))),
        Which::Shape => match &a.directions {
            Some(d) => ("shape", json!({ "directions": parse_directions(d)? })),
            None => ("shape", json!({})),
        },
    };
    draft.set("estimators", json!({ name: options }), ParamSource::Flag);
    finish_run(draft, false, false)
}

fn relation_cmd(a: RelationArgs) -> Result<()> {
    let triple = match &a.run {
        Some(dir) => {
            let (manifest, dir) = RunManifest::load(dir)?;
            manifest.file("summary.csv").ok_or_else(|| LabError::MissingArtifact("summary.csv".into()))?;
            let mut reader =
                csv::Reader::from_path(dir.join("summary.csv")).map_err(|e| LabError::Format(e.to_string()))?;
            let mut found = [None, None, None];
            for rec in reader.records() {
                let rec = rec.map_err(|e| LabError::Format(e.to_string()))?;
                let k = match &rec[0] {
                    "chi" => 0,
                    "xi" => 1,
                    "kappa" => 2,
                    _ => continue,
                };
                let num = |i: usize| rec[i].parse::<f64>().map_err(|e| LabError::Format(e.to_string()));
                let (v, lo, hi) = (num(2)?, num(4)?, num(5)?);
                found[k] = Some((v, lo, hi));
            }
            let get = |k: usize, n: &str| {
                found[k].ok_or_else(|| LabError::MissingArtifact(format!("{n} estimate in summary.csv")))
            };
            [get(0, "chi")?, get(1, "xi")?, get(2, "kappa")?]
        }
        None => {
            let get = |v: Option<(f64, f64)>, n: &str| {
                v.map(|(x, h)| (x, x - h, x + h))
                    .ok_or_else(|| LabError::Config(format!("--{n} is required without --run")))
            };
            [get(a.chi, "chi")?, get(a.xi, "xi")?, get(a.kappa, "kappa")?]
        }
    };
    let est = |which, (v, lo, hi): (f64, f64, f64)| ExponentEstimate::from_interval(which, v, lo, hi);
    let report =
        check_relation(&est(Exponent::Chi, triple[0]), &est(Exponent::Xi, triple[1]), &est(Exponent::Kappa, triple[2]));
    println!("rhs,{}", fmt_f64(report.rhs));
    println!("rhs_ci,{},{}", fmt_f64(report.rhs_ci.0), fmt_f64(report.rhs_ci.1));
    println!("rhs_se,{}", fmt_f64(0.5 * (report.rhs_ci.1 - report.rhs_ci.0) / Z95));
    println!("residual,{}", fmt_f64(report.residual));
    println!("χ̂ vs κ̂ξ̂−(κ̂−1): {}", report.verdict());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Generate(a) => generate(a).map(|_| 0),
        Command::FreeEnergy(a) => free_energy_cmd(a).map(|_| 0),
        Command::SamplePaths(a) => sample_cmd(a).map(|_| 0),
        Command::Lpp(a) => lpp_cmd(a).map(|_| 0),
        Command::Estimate(a) => estimate_cmd(a),
        Command::CheckRelation(a) => relation_cmd(a).map(|_| 0),
        Command::Run(a) => {
            if a.flags.config.is_none() {
                return Err(LabError::Config("run needs --config".into()));
            }
            let draft = draft_from(&a.flags)?;
            finish_run(draft, a.report, a.svg)
        }
        Command::Report(a) => {
            let out = emit_report(&a.run, a.svg)?;
            println!("{}", out.report.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
