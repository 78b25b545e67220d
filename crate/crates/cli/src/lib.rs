//! Subcommands of the `nipso` binary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use nipso_core::report::{fmt_num, to_json};
use nipso_core::simulation::{
    convergence_verdict, run_swarm, simulate_recurrence, ConvergenceVerdict,
};
use nipso_core::{
    fixed_point, full_report, run_sufficiency_sweep, CpsoParams, FipsParams, FixedPoint,
    MomentTrajectory, Objective, RunConfig, StabilityReport, SwarmRun, Topology, UpsoParams,
    Variant,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SEED_ENV: &str = "NIPSO_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "nipso",
    version,
    about = "Stability analysis for N-informer particle swarms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Order-1/order-2 verdicts and fixed points for one parameter set.
    Check(CheckArgs),
    /// Verdicts over a 2-D parameter grid, as CSV.
    Region(RegionArgs),
    /// Randomised sufficiency sweep of the order-2 criterion.
    Verify(VerifyArgs),
    /// Monte Carlo simulation of the particle recurrence.
    Simulate(SimulateArgs),
    /// Run an inertia-weight swarm on a benchmark objective.
    Swarm(SwarmArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantName {
    Cpso,
    Fips,
    Upso,
    Custom,
}

#[derive(Debug, Clone, Args)]
pub struct VariantArgs {
    #[arg(long, value_enum, default_value = "cpso")]
    pub variant: VariantName,
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c2: Option<f64>,
    /// FIPS acceleration ĉ.
    #[arg(long, allow_hyphen_values = true)]
    pub chat: Option<f64>,
    /// FIPS neighbourhood size |N|.
    #[arg(long)]
    pub nsize: Option<usize>,
    /// UPSO unification factor.
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<f64>,
    /// Spec file for `--variant custom`.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Informer limit means, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub informers: Vec<f64>,
}

fn need<T>(value: Option<T>, flag: &str, variant: &str) -> Result<T> {
    match value {
        Some(v) => Ok(v),
        None => bail!("--variant {variant} requires --{flag}"),
    }
}

impl VariantArgs {
    pub fn resolve(&self) -> Result<Variant> {
        Ok(match self.variant {
            VariantName::Cpso => Variant::Cpso(CpsoParams {
                w: need(self.w, "w", "cpso")?,
                c1: need(self.c1, "c1", "cpso")?,
                c2: need(self.c2, "c2", "cpso")?,
            }),
            VariantName::Fips => Variant::Fips(FipsParams {
                w: need(self.w, "w", "fips")?,
                c_hat: need(self.chat, "chat", "fips")?,
                n_size: need(self.nsize, "nsize", "fips")?,
            }),
            VariantName::Upso => Variant::Upso(UpsoParams {
                w: need(self.w, "w", "upso")?,
                c1: need(self.c1, "c1", "upso")?,
                c2: need(self.c2, "c2", "upso")?,
                u: need(self.u, "u", "upso")?,
            }),
            VariantName::Custom => {
                let path = need(self.spec.as_ref(), "spec", "custom")?;
                let cfg = RunConfig::from_file(path)?;
                match cfg.variant {
                    Variant::Custom(_) => cfg.variant,
                    other => bail!(
                        "{}: --variant custom expects a spec file, found variant `{}`",
                        path.display(),
                        other.name()
                    ),
                }
            }
        })
    }
}

/// Seed precedence: explicit flag, then run file, then the environment, then 0.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV}={v} is not an unsigned integer")),
        Err(_) => Ok(0),
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub params: VariantArgs,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    variant: &'a str,
    closed_form_order2: Option<bool>,
    report: &'a StabilityReport,
    fixed_point: Option<FixedPoint>,
}

pub fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> Result<()> {
    let variant = args.params.resolve()?;
    let spec = variant.spec(&args.params.informers)?;
    let report = full_report(&spec);
    let informers_known =
        !args.params.informers.is_empty() || matches!(variant, Variant::Custom(_));
    let fp = if informers_known && report.order1 && report.order2 {
        fixed_point(&spec).ok()
    } else {
        None
    };
    if args.json {
        let output = CheckOutput {
            variant: variant.name(),
            closed_form_order2: variant.criterion(),
            report: &report,
            fixed_point: fp,
        };
        writeln!(out, "{}", to_json(&output))?;
        return Ok(());
    }
    let m = &report.moments;
    writeln!(out, "variant = {}", variant.name())?;
    writeln!(out, "order1 = {}", report.order1)?;
    writeln!(out, "order2 = {}", report.order2)?;
    if let Some(c) = variant.criterion() {
        writeln!(out, "closed_form_order2 = {c}")?;
    }
    for (k, v) in [
        ("psi", report.psi),
        ("phi", report.phi),
        ("rho_a", report.rho_a),
        ("rho_b", report.rho_b),
        ("order1_margin", report.order1_margin),
        ("order2_margin", report.order2_margin),
        ("e_alpha", m.e_alpha),
        ("e_beta", m.e_beta),
        ("e_alpha2", m.e_alpha2),
        ("e_beta2", m.e_beta2),
        ("e_alphabeta", m.e_alphabeta),
    ] {
        writeln!(out, "{k} = {}", fmt_num(v))?;
    }
    writeln!(out, "order1_marginal = {}", report.order1_marginal)?;
    writeln!(out, "order2_marginal = {}", report.order2_marginal)?;
    writeln!(out, "necessary_conditions = {}", report.necessary_ok)?;
    if let Some(fp) = fp {
        writeln!(out, "fixed_point_mean = {}", fmt_num(fp.mean))?;
        writeln!(out, "fixed_point_variance = {}", fmt_num(fp.variance))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    W,
    C1,
    C2,
    Chat,
    U,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::W => "w",
            Axis::C1 => "c1",
            Axis::C2 => "c2",
            Axis::Chat => "chat",
            Axis::U => "u",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    /// Fixed parameters; swept ones may be omitted.
    #[command(flatten)]
    pub params: VariantArgs,
    #[arg(long, value_enum, default_value = "c1")]
    pub x_axis: Axis,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x_lo: f64,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    pub x_hi: f64,
    #[arg(long, value_enum, default_value = "c2")]
    pub y_axis: Axis,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub y_lo: f64,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    pub y_hi: f64,
    /// Cells per axis.
    #[arg(long, default_value_t = 300)]
    pub resolution: usize,
    /// Output CSV path; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionCell {
    pub ix: usize,
    pub iy: usize,
    pub x: f64,
    pub y: f64,
    pub order1: bool,
    pub order2: bool,
    pub rho_a: f64,
    pub rho_b: f64,
}

/// Centre of cell `i` of `n` equal cells on (lo, hi).
pub fn cell_centre(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    lo + (i as f64 + 0.5) * (hi - lo) / n as f64
}

fn set_axis(variant: &Variant, axis: Axis, value: f64) -> Result<Variant> {
    let mut v = variant.clone();
    let ok = match (&mut v, axis) {
        (Variant::Cpso(p), Axis::W) => {
            p.w = value;
            true
        }
        (Variant::Cpso(p), Axis::C1) => {
            p.c1 = value;
            true
        }
        (Variant::Cpso(p), Axis::C2) => {
            p.c2 = value;
            true
        }
        (Variant::Fips(p), Axis::W) => {
            p.w = value;
            true
        }
        (Variant::Fips(p), Axis::Chat) => {
            p.c_hat = value;
            true
        }
        (Variant::Upso(p), Axis::W) => {
            p.w = value;
            true
        }
        (Variant::Upso(p), Axis::C1) => {
            p.c1 = value;
            true
        }
        (Variant::Upso(p), Axis::C2) => {
            p.c2 = value;
            true
        }
        (Variant::Upso(p), Axis::U) => {
            p.u = value;
            true
        }
        _ => false,
    };
    if !ok {
        bail!(
            "axis `{}` is not a parameter of variant `{}`",
            axis.name(),
            variant.name()
        );
    }
    Ok(v)
}

fn axis_allowed(variant: VariantName, axis: Axis) -> bool {
    matches!(
        (variant, axis),
        (VariantName::Cpso, Axis::W | Axis::C1 | Axis::C2)
            | (VariantName::Fips, Axis::W | Axis::Chat)
            | (VariantName::Upso, Axis::W | Axis::C1 | Axis::C2 | Axis::U)
    )
}

/// The variant with placeholder values for the swept axes, so that only the
/// fixed parameters need to be given.
fn region_base(args: &RegionArgs) -> Result<Variant> {
    let mut p = args.params.clone();
    for axis in [args.x_axis, args.y_axis] {
        if !axis_allowed(p.variant, axis) {
            bail!(
                "axis `{}` is not a parameter of variant `{}`",
                axis.name(),
                format!("{:?}", p.variant).to_lowercase()
            );
        }
        let slot = match axis {
            Axis::W => &mut p.w,
            Axis::C1 => &mut p.c1,
            Axis::C2 => &mut p.c2,
            Axis::Chat => &mut p.chat,
            Axis::U => &mut p.u,
        };
        slot.get_or_insert(0.0);
    }
    p.resolve()
}

pub fn region_scan(args: &RegionArgs) -> Result<Vec<RegionCell>> {
    if args.x_axis == args.y_axis {
        bail!("x and y axes must differ");
    }
    let n = args.resolution;
    if n < 2 {
        bail!("resolution must be >= 2");
    }
    if !(args.x_lo < args.x_hi && args.y_lo < args.y_hi) {
        bail!("axis ranges need lo < hi");
    }
    let base = region_base(args)?;
    set_axis(
        &set_axis(&base, args.x_axis, args.x_lo)?,
        args.y_axis,
        args.y_lo,
    )?;
    (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (iy, ix) = (k / n, k % n);
            let x = cell_centre(args.x_lo, args.x_hi, n, ix);
            let y = cell_centre(args.y_lo, args.y_hi, n, iy);
            let variant = set_axis(&set_axis(&base, args.x_axis, x)?, args.y_axis, y)?;
            let report = full_report(&variant.spec(&[])?);
            Ok(RegionCell {
                ix,
                iy,
                x,
                y,
                order1: report.order1,
                order2: report.order2,
                rho_a: report.rho_a,
                rho_b: report.rho_b,
            })
        })
        .collect()
}

fn open_output<'a>(path: Option<&Path>, out: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(out),
    })
}

fn write_header(w: &mut dyn Write, kind: &str, seed: u64, config: &str) -> Result<()> {
    writeln!(w, "# nipso {kind}")?;
    writeln!(w, "# version = {VERSION}")?;
    writeln!(w, "# seed = {seed}")?;
    for line in config.lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

fn variant_config(v: &Variant) -> String {
    match v {
        Variant::Cpso(p) => format!("variant = cpso\nw = {}\nc1 = {}\nc2 = {}", p.w, p.c1, p.c2),
        Variant::Fips(p) => format!(
            "variant = fips\nw = {}\nchat = {}\nnsize = {}",
            p.w, p.c_hat, p.n_size
        ),
        Variant::Upso(p) => format!(
            "variant = upso\nw = {}\nc1 = {}\nc2 = {}\nu = {}",
            p.w, p.c1, p.c2, p.u
        ),
        Variant::Custom(spec) => {
            let mut s = format!("variant = custom\ntheta0 = {}", spec.theta0());
            for t in spec.terms() {
                s.push_str(&format!("\ninformer = {} @ {}", t.coefficient, t.informer));
            }
            s
        }
    }
}

pub fn cmd_region(args: &RegionArgs, out: &mut dyn Write) -> Result<()> {
    let cells = region_scan(args)?;
    let base = region_base(args)?;
    let config = format!(
        "{}\nx_axis = {} ({}, {})\ny_axis = {} ({}, {})\nresolution = {}\nswept axes override the fixed values above",
        variant_config(&base),
        args.x_axis.name(),
        args.x_lo,
        args.x_hi,
        args.y_axis.name(),
        args.y_lo,
        args.y_hi,
        args.resolution
    );
    let seed = resolve_seed(None, None)?;
    let mut sink = open_output(args.output.as_deref(), out)?;
    write_header(&mut sink, "region", seed, &config)?;
    let mut csv = csv::Writer::from_writer(sink);
    csv.write_record([
        args.x_axis.name(),
        args.y_axis.name(),
        "order1",
        "order2",
        "rho_a",
        "rho_b",
    ])?;
    for c in &cells {
        csv.write_record([
            fmt_num(c.x),
            fmt_num(c.y),
            c.order1.to_string(),
            c.order2.to_string(),
            fmt_num(c.rho_a),
            fmt_num(c.rho_b),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 10)]
    pub max_informers: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Defaults to $NIPSO_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub json: bool,
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<()> {
    if args.max_informers < 1 {
        bail!("--max-informers must be >= 1");
    }
    let seed = resolve_seed(args.seed, None)?;
    let report = run_sufficiency_sweep(args.max_informers, args.samples, seed);
    if args.json {
        writeln!(out, "{}", to_json(&report))?;
        return Ok(());
    }
    writeln!(out, "# seed = {seed}")?;
    writeln!(out, "informers,samples,passed,exhausted,pass_rate")?;
    for row in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.informers,
            row.samples,
            row.passed,
            row.exhausted,
            fmt_num(row.pass_rate())
        )?;
    }
    for row in &report.rows {
        for c in &row.counterexamples {
            writeln!(
                out,
                "counterexample I={}: {}",
                row.informers,
                serde_json::to_string(c)?
            )?;
        }
    }
    writeln!(out, "all_passed = {}", report.all_passed())?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Run file (`key = value`).
    pub config: PathBuf,
    /// Overrides the run file's `output_dir`.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Overrides the run file's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct SimulationSummary {
    pub version: &'static str,
    pub seed: u64,
    pub config: String,
    pub steps: usize,
    pub runs: usize,
    pub diverged: bool,
    pub diverged_runs: usize,
    pub tail_mean: f64,
    pub tail_mean_se: f64,
    pub tail_var: f64,
    pub predicted: Option<FixedPoint>,
    pub verdict: Option<ConvergenceVerdict>,
    pub passed: bool,
}

pub fn simulate_summary(
    cfg: &RunConfig,
    seed: u64,
) -> Result<(MomentTrajectory, SimulationSummary)> {
    let run = cfg.recurrence_run(seed)?;
    let traj = simulate_recurrence(&run)?;
    let predicted = fixed_point(&run.spec).ok();
    let verdict = predicted
        .as_ref()
        .map(|fp| convergence_verdict(&traj, fp, &cfg.tolerances));
    let summary = SimulationSummary {
        version: VERSION,
        seed,
        config: cfg.resolved(seed),
        steps: run.steps,
        runs: run.runs,
        diverged: traj.diverged,
        diverged_runs: traj.diverged_runs,
        tail_mean: traj.tail_mean,
        tail_mean_se: traj.tail_mean_se,
        tail_var: traj.tail_var,
        predicted,
        verdict,
        passed: verdict.is_some_and(|v| v.passed()),
    };
    Ok((traj, summary))
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = RunConfig::from_file(&args.config)?;
    let seed = resolve_seed(args.seed, cfg.seed)?;
    let dir = args.output_dir.clone().or_else(|| cfg.output_dir.clone());
    if let Some(d) = &dir {
        if !d.is_dir() {
            bail!("output directory {} does not exist", d.display());
        }
    }
    let (traj, summary) = simulate_summary(&cfg, seed)?;

    if let Some(d) = &dir {
        let path = d.join("trajectory.csv");
        let file =
            File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut sink = BufWriter::new(file);
        write_header(&mut sink, "trajectory", seed, &summary.config)?;
        let mut csv = csv::Writer::from_writer(sink);
        csv.write_record(["t", "mean", "variance"])?;
        for (t, (m, v)) in traj.mean_series.iter().zip(&traj.var_series).enumerate() {
            csv.write_record([t.to_string(), fmt_num(*m), fmt_num(*v)])?;
        }
        csv.flush()
            .with_context(|| format!("cannot write {}", path.display()))?;

        let path = d.join("summary.json");
        std::fs::write(&path, to_json(&summary) + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
    }

    writeln!(out, "seed = {seed}")?;
    writeln!(out, "diverged = {}", summary.diverged)?;
    writeln!(out, "diverged_runs = {}", summary.diverged_runs)?;
    writeln!(out, "tail_mean = {}", fmt_num(summary.tail_mean))?;
    writeln!(out, "tail_mean_se = {}", fmt_num(summary.tail_mean_se))?;
    writeln!(out, "tail_var = {}", fmt_num(summary.tail_var))?;
    match (&summary.predicted, &summary.verdict) {
        (Some(fp), Some(v)) => {
            writeln!(out, "predicted_mean = {}", fmt_num(fp.mean))?;
            writeln!(out, "predicted_variance = {}", fmt_num(fp.variance))?;
            writeln!(out, "mean_pass = {}", v.mean_pass)?;
            writeln!(out, "var_pass = {}", v.var_pass)?;
        }
        _ => writeln!(
            out,
            "predicted = none (parameters outside the stable region)"
        )?,
    }
    writeln!(
        out,
        "verdict = {}",
        if summary.passed { "pass" } else { "fail" }
    )?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopologyName {
    Global,
    Ring,
}

#[derive(Debug, Args)]
pub struct SwarmArgs {
    #[arg(long, default_value = "sphere")]
    pub objective: String,
    #[arg(long, default_value_t = 20)]
    pub particles: usize,
    #[arg(long, default_value_t = 10)]
    pub dims: usize,
    #[arg(long, value_enum, default_value = "global")]
    pub topology: TopologyName,
    #[arg(long, default_value_t = 0.7, allow_hyphen_values = true)]
    pub w: f64,
    #[arg(long, default_value_t = 1.4, allow_hyphen_values = true)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.4, allow_hyphen_values = true)]
    pub c2: f64,
    #[arg(long, default_value_t = 5000)]
    pub iterations: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-iteration CSV (iteration, mean_step, best_value).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn cmd_swarm(args: &SwarmArgs, out: &mut dyn Write) -> Result<()> {
    let seed = resolve_seed(args.seed, None)?;
    let objective: Objective = args.objective.parse()?;
    let run = SwarmRun {
        objective,
        swarm_size: args.particles,
        dimensions: args.dims,
        topology: match args.topology {
            TopologyName::Global => Topology::Global,
            TopologyName::Ring => Topology::Ring,
        },
        params: CpsoParams {
            w: args.w,
            c1: args.c1,
            c2: args.c2,
        },
        iterations: args.iterations,
        seed,
        bounds: None,
    };
    if run.iterations == 0 {
        bail!("--iterations must be >= 1");
    }
    let trace = run_swarm(&run)?;
    if let Some(path) = &args.output {
        let file =
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut sink = BufWriter::new(file);
        let config = format!(
            "objective = {objective}\nparticles = {}\ndims = {}\ntopology = {:?}\nw = {}\nc1 = {}\nc2 = {}\niterations = {}",
            run.swarm_size, run.dimensions, args.topology, args.w, args.c1, args.c2, run.iterations
        );
        write_header(&mut sink, "swarm", seed, &config)?;
        let mut csv = csv::Writer::from_writer(sink);
        csv.write_record(["iteration", "mean_step", "best_value"])?;
        for s in &trace.iterations {
            csv.write_record([
                s.iteration.to_string(),
                fmt_num(s.mean_step),
                fmt_num(s.best_value),
            ])?;
        }
        csv.flush()
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let last = trace.iterations.last().expect("at least one iteration");
    writeln!(out, "seed = {seed}")?;
    writeln!(out, "initial_width = {}", fmt_num(trace.initial_width))?;
    writeln!(
        out,
        "tail_median_step = {}",
        fmt_num(trace.tail_median_step(0.1))
    )?;
    writeln!(out, "final_step = {}", fmt_num(last.mean_step))?;
    writeln!(out, "best_value = {}", fmt_num(last.best_value))?;
    Ok(())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Check(a) => cmd_check(a, out),
        Command::Region(a) => cmd_region(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Swarm(a) => cmd_swarm(a, out),
    }
}
