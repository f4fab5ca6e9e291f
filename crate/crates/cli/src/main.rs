//! `steklov`: command-line driver for weighted Steklov experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod parse;

use std::fs;
use std::io::Write as _;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use steklov::curve_bem::curve_steklov;
use steklov::degeneration::{degeneration_experiment, union_spectrum, DisjointUnionSpec};
use steklov::ellipse;
use steklov::functionals::{criticality_check, CriticalityReport};
use steklov::optimize::{
    maximize_normalized, minimize_functional, moduli_sweep, suggested_weight_degree, sweep_to_csv, Objective,
    OptimizationRun, OptimizeOptions, SweepFamily, DEFAULT_RESTARTS, DEFAULT_WEIGHT_DEGREE,
};
use steklov::weighted_eig::{convergence_study, weighted_spectrum, ConvergenceTable};
use steklov::Spec;

use parse::Target;

const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Exit status when a run completes but one of its checks fails.
const INVARIANT_EXIT: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "steklov", version, about = "Weighted Steklov spectra, critical ellipses and eigenvalue optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    output: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Seed for randomized restarts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Weighted spectrum of a domain.
    Spectrum(SpectrumArgs),
    /// Closed-form ellipse eigenpairs and their residuals.
    EllipseVerify(EllipseArgs),
    /// Optimize a normalized eigenvalue or a spectral functional over densities.
    Optimize(OptimizeArgs),
    /// Certified first-eigenvalue bounds over a grid of moduli.
    Sweep(SweepArgs),
    /// Degenerating densities against the disjoint union.
    Degenerate(DegenerateArgs),
    /// Spectrum of a disk with unit disks attached.
    Union(UnionArgs),
    /// Cluster conditions for a functional at a given density.
    CheckCriticality(CriticalityArgs),
    /// Normalized eigenvalues over a sequence of discretization sizes.
    Convergence(ConvergenceArgs),
    /// Run an experiment described by a JSON config file.
    #[serde(skip)]
    Run(RunArgs),
}

#[derive(Args, Debug, Serialize)]
struct SpectrumArgs {
    /// disk, annulus:RHO, moebius:EPS, circle:R, ellipse:Q or curve:FILE.
    #[arg(long, default_value = "disk")]
    domain: String,
    /// Density, e.g. const:1, fourier:1,0.2,0, log-fourier:..., critical; `|` separates circles.
    #[arg(long, default_value = "const:1")]
    weight: String,
    /// Number of eigenvalues.
    #[arg(long, default_value_t = 7)]
    k: usize,
    /// Trace degree (exact domains) or node count (curves).
    #[arg(long)]
    degree: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct EllipseArgs {
    #[arg(long, default_value = "1,2,3,4")]
    q: String,
    #[arg(long, default_value_t = 5)]
    nmax: usize,
    #[arg(long, default_value_t = 256)]
    samples: usize,
    /// Largest admissible residual.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct OptimizeArgs {
    #[arg(long, default_value = "disk")]
    domain: String,
    /// sigma-bar:K, ht-plus:T, ht-minus:T, hst:S,T, fmn:M,N or neg:K.
    #[arg(long, default_value = "sigma-bar:1")]
    objective: String,
    /// Fourier degree of log β.
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    trace_degree: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Skip the collar start on annuli and Moebius bands.
    #[arg(long)]
    no_collar: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FamilyArg {
    Annulus,
    Moebius,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Moduli as a list or START:STOP:STEP.
    #[arg(long, visible_aliases = ["rho-grid", "eps", "eps-grid"])]
    grid: String,
    /// Minimal weight degree; raised per modulus as needed.
    #[arg(long, default_value_t = DEFAULT_WEIGHT_DEGREE)]
    degree: usize,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
}

#[derive(Args, Debug, Serialize)]
struct DegenerateArgs {
    /// Number of unit disks attached.
    #[arg(long, default_value_t = 1)]
    attachments: usize,
    #[arg(long, default_value = "0.2,0.1,0.05,0.02")]
    eps_list: String,
    /// Number of eigenvalues compared.
    #[arg(long, default_value_t = 4)]
    m: usize,
    /// Drop the base disk (zero base density).
    #[arg(long)]
    no_base: bool,
}

#[derive(Args, Debug, Serialize)]
struct UnionArgs {
    #[arg(long, default_value_t = 1)]
    attachments: usize,
    #[arg(long)]
    no_base: bool,
    #[arg(long, default_value_t = 7)]
    k: usize,
    #[arg(long, default_value_t = 32)]
    degree: usize,
}

#[derive(Args, Debug, Serialize)]
struct CriticalityArgs {
    #[arg(long, default_value = "ellipse:2")]
    domain: String,
    #[arg(long, default_value = "critical")]
    weight: String,
    #[arg(long, default_value = "ht-plus:2")]
    objective: String,
    #[arg(long)]
    degree: Option<usize>,
    /// Fail when the largest defect exceeds this.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct ConvergenceArgs {
    #[arg(long, default_value = "disk")]
    domain: String,
    #[arg(long, default_value = "const:1")]
    weight: String,
    #[arg(long, default_value_t = 7)]
    k: usize,
    /// Trace degrees (exact domains) or node counts (curves).
    #[arg(long, default_value = "16,32,64")]
    degrees: String,
}

#[derive(Args, Debug)]
struct RunArgs {
    config: String,
}

/// JSON experiment description; `parameters` mirror the subcommand flags.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    command: String,
    #[serde(default)]
    parameters: serde_json::Map<String, Value>,
    #[serde(default)]
    output: Option<OutputConfig>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputConfig {
    path: Option<String>,
    format: Option<Format>,
}

/// Result of one command: body text per format and whether every check held.
struct Outcome {
    csv: String,
    json: Value,
    ok: bool,
}

impl Outcome {
    fn new(csv: String, json: Value) -> Self {
        Self { csv, json, ok: true }
    }
}

fn default_degree(target: &Target) -> usize {
    match target {
        Target::Exact(_) => 32,
        Target::Curve(_) => 256,
    }
}

fn spectrum_of(target: &Target, weight: &str, count: usize, degree: usize) -> Result<Spec> {
    Ok(match target {
        Target::Exact(d) => weighted_spectrum(d, &parse::weight(weight, target.components())?, degree, count)?,
        Target::Curve(c) => curve_steklov(c, &parse::curve_weight(weight, c)?, degree, count)?,
    })
}

/// `σ_0 ≈ 0` and the list is nondecreasing and finite.
fn spectrum_sane(s: &Spec) -> bool {
    let top = s.eigenvalues.last().copied().unwrap_or(0.0).abs().max(1.0);
    s.eigenvalues.iter().all(|v| v.is_finite())
        && s.eigenvalues.first().is_some_and(|v| v.abs() <= 1e-8 * top)
        && s.eigenvalues.windows(2).all(|w| w[0] <= w[1])
}

fn spectrum_cmd(a: &SpectrumArgs) -> Result<Outcome> {
    let target = parse::target(&a.domain)?;
    let degree = a.degree.unwrap_or_else(|| default_degree(&target));
    let s = spectrum_of(&target, &a.weight, a.k, degree)?;
    let mut out = Outcome::new(s.to_csv(), serde_json::to_value(&s)?);
    out.ok = spectrum_sane(&s);
    Ok(out)
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner().context("flushing CSV")?)?)
}

fn sci(x: f64) -> String {
    format!("{x:.17e}")
}

fn ellipse_cmd(a: &EllipseArgs) -> Result<Outcome> {
    let qs = parse::grid(&a.q)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut ok = true;
    for &q in &qs {
        for n in 1..=a.nmax {
            let p = ellipse::eigen_pair(n, q)?;
            let identity = p.boundary_identity_residual(a.samples);
            let laplacian = p.laplacian_residual();
            let product = (p.sigma * p.tau - (n * n) as f64 * q).abs() / ((n * n) as f64 * q);
            ok &= identity <= a.tol && laplacian <= a.tol && product <= a.tol;
            rows.push(vec![n.to_string(), q.to_string(), sci(p.sigma), sci(p.tau), sci(identity), sci(laplacian), sci(product)]);
            records.push(json!({
                "n": n, "q": q, "sigma": p.sigma, "tau": p.tau,
                "identity_residual": identity, "laplacian_residual": laplacian, "product_error": product,
            }));
        }
    }
    let header = ["n", "q", "sigma", "tau", "identity_residual", "laplacian_residual", "product_error"];
    Ok(Outcome { csv: csv_text(&header, rows)?, json: Value::Array(records), ok })
}

fn optimize_cmd(a: &OptimizeArgs, seed: u64) -> Result<Outcome> {
    let target = parse::target(&a.domain)?;
    let domain = target.exact()?;
    let objective = parse::objective(&a.objective)?;
    let mut opts = OptimizeOptions::<f64> {
        weight_degree: a.degree.unwrap_or_else(|| DEFAULT_WEIGHT_DEGREE.max(suggested_weight_degree(domain))),
        trace_degree: a.trace_degree,
        restarts: a.restarts,
        seed,
        collar_start: !a.no_collar,
        ..OptimizeOptions::default()
    };
    if let Some(m) = a.max_iterations {
        opts.schedule.max_iterations = m;
    }
    let run = match &objective {
        Objective::MaximizeNormalized { k } => maximize_normalized(domain, *k, &opts)?,
        Objective::MinimizeFunctional { functional } => minimize_functional(domain, functional, &opts)?,
    };
    let mut out = Outcome::new(run_summary(&run)?, serde_json::to_value(&run)?);
    out.ok = run.value.is_finite();
    Ok(out)
}

fn run_summary(run: &OptimizationRun<f64>) -> Result<String> {
    let header = [
        "value",
        "verified_value",
        "relative_agreement",
        "certified",
        "bound_kind",
        "status",
        "start",
        "first_order",
        "concentration",
        "weight_degree",
        "trace_degree",
        "verification_degree",
        "iterations",
    ];
    let c = &run.certificate;
    let row = vec![
        sci(run.value),
        sci(c.verified_value),
        sci(c.relative_agreement),
        c.agrees.to_string(),
        run.bound_kind.clone(),
        serde_json::to_value(run.status)?.as_str().unwrap_or_default().to_string(),
        run.start.clone(),
        sci(run.first_order),
        sci(run.concentration),
        run.weight_degree.to_string(),
        run.trace_degree.to_string(),
        c.verification_degree.to_string(),
        run.history.len().to_string(),
    ];
    let mut text = csv_text(&header, vec![row])?;
    for (label, v) in &run.references {
        text.push_str(&format!("# reference {label} = {}\n", sci(*v)));
    }
    Ok(text)
}

fn sweep_cmd(a: &SweepArgs, seed: u64) -> Result<Outcome> {
    let family = match a.family {
        FamilyArg::Annulus => SweepFamily::Annulus,
        FamilyArg::Moebius => SweepFamily::Moebius,
    };
    let grid = parse::grid(&a.grid)?;
    let opts = OptimizeOptions::<f64> { weight_degree: a.degree, restarts: a.restarts, seed, ..OptimizeOptions::default() };
    let rows = moduli_sweep(family, &grid, &opts)?;
    Ok(Outcome::new(sweep_to_csv(&rows), serde_json::to_value(&rows)?))
}

fn union_spec(attachments: usize, no_base: bool) -> DisjointUnionSpec<f64> {
    let mut spec = DisjointUnionSpec::disk_with_unit_disks(attachments);
    if no_base {
        spec.base = None;
    }
    spec
}

fn degenerate_cmd(a: &DegenerateArgs) -> Result<Outcome> {
    let spec = union_spec(a.attachments, a.no_base);
    let eps = parse::grid(&a.eps_list)?;
    let table = degeneration_experiment(&spec, &eps, a.m)?;
    let mut csv = table.to_csv();
    for f in &table.fits {
        csv.push_str(&format!(
            "# fit k={} error ~ {} / ln(1/eps), relative residual {}, monotone {}\n",
            f.k,
            sci(f.constant),
            sci(f.relative_residual),
            f.monotone
        ));
    }
    Ok(Outcome::new(csv, serde_json::to_value(&table)?))
}

fn union_cmd(a: &UnionArgs) -> Result<Outcome> {
    let s = union_spectrum(&union_spec(a.attachments, a.no_base), a.k, a.degree)?;
    let mut out = Outcome::new(s.to_csv(), serde_json::to_value(&s)?);
    out.ok = s.eigenvalues.iter().all(|v| v.is_finite());
    Ok(out)
}

fn criticality_cmd(a: &CriticalityArgs) -> Result<Outcome> {
    let target = parse::target(&a.domain)?;
    let f = match parse::objective(&a.objective)? {
        Objective::MinimizeFunctional { functional } => functional,
        Objective::MaximizeNormalized { k } => steklov::functionals::FunctionalSpec::SingleEigenvalueNeg { k },
    };
    let degree = a.degree.unwrap_or_else(|| default_degree(&target));
    let s = spectrum_of(&target, &a.weight, f.arity() + 4, degree)?;
    let report: CriticalityReport<f64> = criticality_check(&f, &s)?;
    let rows = report
        .entries
        .iter()
        .map(|e| {
            vec![
                e.index.to_string(),
                e.cluster.start.to_string(),
                e.cluster.end.to_string(),
                sci(e.lhs),
                sci(e.rhs),
                sci(e.defect),
            ]
        })
        .collect();
    let mut csv = csv_text(&["index", "cluster_start", "cluster_end", "lhs", "rhs", "defect"], rows)?;
    csv.push_str(&format!(
        "# fit_residual {} positive_semidefinite {} max_defect {}\n",
        sci(report.fit_residual),
        report.positive_semidefinite,
        sci(report.max_defect)
    ));
    let mut out = Outcome::new(csv, serde_json::to_value(&report)?);
    out.ok = a.tol.is_none_or(|t| report.max_defect <= t);
    Ok(out)
}

fn convergence_cmd(a: &ConvergenceArgs) -> Result<Outcome> {
    let target = parse::target(&a.domain)?;
    let degrees = parse::usizes(&a.degrees)?;
    let table = match &target {
        Target::Exact(d) => convergence_study(d, &parse::weight(&a.weight, 1.max(d.boundary_components()))?, a.k, &degrees)?,
        Target::Curve(c) => {
            let w = parse::curve_weight(&a.weight, c)?;
            let normalized = degrees
                .iter()
                .map(|&n| Ok(curve_steklov(c, &w, n, a.k)?.normalized))
                .collect::<Result<Vec<Vec<f64>>>>()?;
            let successive_change = normalized
                .windows(2)
                .map(|p| {
                    p[1].iter()
                        .zip(&p[0])
                        .skip(1)
                        .map(|(x, y)| (x - y).abs() / x.abs())
                        .fold(0.0, f64::max)
                })
                .collect();
            ConvergenceTable { degrees: degrees.clone(), normalized, successive_change }
        }
    };
    Ok(Outcome::new(table.to_csv(), serde_json::to_value(&table)?))
}

/// Flag list equivalent to a config's parameter map.
fn config_argv(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let mut argv = vec!["steklov".to_string(), cfg.command.clone()];
    for (key, value) in &cfg.parameters {
        let flag = format!("--{}", key.replace('_', "-"));
        let text = match value {
            Value::Bool(true) => {
                argv.push(flag);
                continue;
            }
            Value::Bool(false) | Value::Null => continue,
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.clone()),
                    Value::Number(n) => Ok(n.to_string()),
                    _ => bail!("parameter {key}: list items must be numbers or strings"),
                })
                .collect::<Result<Vec<_>>>()?
                .join(","),
            Value::Object(_) => bail!("parameter {key}: nested objects are not supported"),
        };
        argv.push(flag);
        argv.push(text);
    }
    if let Some(o) = &cfg.output {
        if let Some(p) = &o.path {
            argv.extend(["--output".into(), p.clone()]);
        }
        if let Some(f) = o.format {
            argv.extend(["--format".into(), serde_json::to_value(f)?.as_str().unwrap_or("csv").to_string()]);
        }
    }
    if let Some(s) = cfg.seed {
        argv.extend(["--seed".into(), s.to_string()]);
    }
    Ok(argv)
}

fn load_config(path: &str) -> Result<Cli> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {path}"))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text).with_context(|| format!("config {path} does not match the schema"))?;
    if cfg.command == "run" {
        bail!("a config cannot invoke `run`");
    }
    let cli = Cli::try_parse_from(config_argv(&cfg)?).map_err(|e| anyhow::anyhow!("config {path}: {e}"))?;
    Ok(cli)
}

fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Spectrum(a) => spectrum_cmd(a),
        Command::EllipseVerify(a) => ellipse_cmd(a),
        Command::Optimize(a) => optimize_cmd(a, cli.seed),
        Command::Sweep(a) => sweep_cmd(a, cli.seed),
        Command::Degenerate(a) => degenerate_cmd(a),
        Command::Union(a) => union_cmd(a),
        Command::CheckCriticality(a) => criticality_cmd(a),
        Command::Convergence(a) => convergence_cmd(a),
        Command::Run(_) => unreachable!("configs are expanded before dispatch"),
    }
}

fn render(cli: &Cli, out: &Outcome) -> Result<String> {
    let params = serde_json::to_value(&cli.command)?;
    Ok(match cli.format {
        Format::Csv => format!("# steklov {VERSION}\n# params {} seed={}\n{}", params, cli.seed, out.csv),
        Format::Json => {
            let doc = json!({ "version": VERSION, "params": params, "seed": cli.seed, "ok": out.ok, "result": out.json });
            format!("{}\n", serde_json::to_string_pretty(&doc)?)
        }
    })
}

fn main_inner() -> Result<bool> {
    let mut cli = Cli::parse();
    if let Command::Run(r) = &cli.command {
        cli = load_config(&r.config)?;
    }
    let out = execute(&cli)?;
    let text = render(&cli, &out)?;
    match &cli.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {path}"))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    if !out.ok {
        eprintln!("steklov: invariant check failed; see the output table");
    }
    Ok(out.ok)
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(INVARIANT_EXIT),
        Err(e) => {
            eprintln!("steklov: {e:#}");
            ExitCode::FAILURE
        }
    }
}
