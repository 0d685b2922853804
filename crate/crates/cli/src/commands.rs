//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use seqrisk::limit::{beta_moments, fit_limit_law, limit_distribution, BetaParams, GoodnessOfFitResult};
use seqrisk::validation::{amplification_report, one_shot_power_estimate, snapshot_validation, PowerEstimate};
use seqrisk::{run_cohort, simulate_path_stream, CohortConfig, UrnParameters};

use crate::config::{preset, ExperimentConfig, PRESETS};
use crate::io::{self, Format, Manifest};

#[derive(Debug, Parser)]
#[command(name = "seqrisk", version, about = "Simulate sequential risk assessments driven by a reinforcing urn")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "SEQRISK_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate individual trajectories.
    Path(PathArgs),
    /// Compare trajectory endpoints with the limit law.
    LimitCheck(LimitArgs),
    /// Simulate a cohort and write its trajectories and endpoints.
    Cohort(ExperimentArgs),
    /// Snapshot validation: AUC, calibration and parity at one time.
    Validate(ExperimentArgs),
    /// Disparity over time and its amplification.
    Amplify(ExperimentArgs),
    /// List the bundled presets.
    Presets,
}

#[derive(Debug, Args)]
pub struct UrnArgs {
    /// Initial blue (high-risk) mass.
    #[arg(long, default_value_t = 1.0)]
    pub b0: f64,
    /// Initial red (low-risk) mass.
    #[arg(long, default_value_t = 1.0)]
    pub r0: f64,
    /// Mass added per decision.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
}

impl UrnArgs {
    fn params(&self) -> Result<UrnParameters> {
        Ok(UrnParameters::new(self.b0, self.r0, self.k)?)
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub urn: UrnArgs,
    /// Decisions per path.
    #[arg(long = "T")]
    pub horizon: usize,
    /// Number of paths.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    #[command(flatten)]
    pub urn: UrnArgs,
    #[arg(long = "T", default_value_t = 1000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Significance of the KS test (0.05 or 0.01).
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Histogram bins over [0, 1].
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// TOML experiment file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Bundled experiment (see `seqrisk presets`).
    #[arg(long)]
    pub preset: Option<String>,
    /// Overrides `cohort.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `output.format`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl ExperimentArgs {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf, Format)> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => {
                let text = preset(name).with_context(|| format!("unknown preset `{name}`"))?;
                ExperimentConfig::parse(text)?
            }
            (None, None) => bail!("either --config or --preset is required"),
        };
        if let Some(seed) = self.seed {
            cfg.cohort.seed = seed;
        }
        if let Some(format) = self.format {
            cfg.output.format = format;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = Some(out.clone());
        }
        let dir = cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("out"));
        let format = cfg.output.format;
        Ok((cfg, dir, format))
    }
}

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    /// The statistical check the command performs did not pass.
    Failed,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    match cli.command {
        Command::Path(args) => cmd_path(&args),
        Command::LimitCheck(args) => cmd_limit_check(&args),
        Command::Cohort(args) => cmd_cohort(&args),
        Command::Validate(args) => cmd_validate(&args),
        Command::Amplify(args) => cmd_amplify(&args),
        Command::Presets => {
            for (name, text) in PRESETS {
                let summary = text.lines().next().unwrap_or("").trim_start_matches('#').trim();
                println!("{name:<14} {summary}");
            }
            Ok(Outcome::Passed)
        }
    }
}

struct Output {
    dir: PathBuf,
    manifest: Manifest,
}

impl Output {
    fn create(dir: &Path, manifest: Manifest) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    fn table<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<()> {
        let path = io::write_rows(&self.dir, stem, self.manifest.format, rows)?;
        self.record(&path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        io::write_json(&path, value)?;
        self.record(&path);
        Ok(())
    }

    fn record(&mut self, path: &Path) {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        self.manifest.files.push(name);
    }

    fn finish(mut self) -> Result<()> {
        self.manifest.files.push("manifest.json".into());
        io::write_json(&self.dir.join("manifest.json"), &self.manifest)?;
        println!("wrote {} files to {}", self.manifest.files.len(), self.dir.display());
        Ok(())
    }
}

#[derive(Serialize)]
struct UrnEcho {
    b0: f64,
    r0: f64,
    k: f64,
    horizon: usize,
    n: usize,
}

fn cmd_path(args: &PathArgs) -> Result<Outcome> {
    let params = args.urn.params()?;
    if args.horizon == 0 {
        bail!("--T must be at least 1");
    }
    if args.n == 0 {
        bail!("--n must be at least 1");
    }
    let seed = args.output.seed;
    let paths = (0..args.n as u64)
        .into_par_iter()
        .map(|s| simulate_path_stream(&params, args.horizon, seed, s))
        .collect::<seqrisk::Result<Vec<_>>>()?;
    let echo = UrnEcho {
        b0: args.urn.b0,
        r0: args.urn.r0,
        k: args.urn.k,
        horizon: args.horizon,
        n: args.n,
    };
    let manifest = Manifest::new("path", seed, args.output.format, serde_json::to_value(&echo)?);
    let mut out = Output::create(&args.output.out, manifest)?;
    out.table("trajectories", &io::path_rows(&paths))?;
    out.finish()?;
    Ok(Outcome::Passed)
}

#[derive(Serialize)]
struct LimitReport {
    params: UrnParameters,
    horizon: usize,
    paths: usize,
    seed: u64,
    sample_mean: f64,
    sample_variance: f64,
    limit_mean: f64,
    limit_variance: f64,
    fit: GoodnessOfFitResult,
}

fn histogram(endpoints: &[f64], bins: usize, law: &BetaParams) -> Result<Vec<io::HistogramRow>> {
    let mut counts = vec![0usize; bins];
    for &p in endpoints {
        counts[((p * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let width = 1.0 / bins as f64;
    let n = endpoints.len() as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            let lower = i as f64 * width;
            let upper = if i + 1 == bins { 1.0 } else { (i + 1) as f64 * width };
            Ok(io::HistogramRow {
                lower,
                upper,
                count,
                density: count as f64 / (n * (upper - lower)),
                limit_mass: law.cdf(upper)? - law.cdf(lower)?,
            })
        })
        .collect()
}

fn cmd_limit_check(args: &LimitArgs) -> Result<Outcome> {
    let params = args.urn.params()?;
    if args.bins == 0 {
        bail!("--bins must be at least 1");
    }
    let mut cfg = CohortConfig::single_group(args.n, args.horizon, params, args.output.seed);
    cfg.record_full_paths = false;
    cfg.validate()?;
    let result = run_cohort(&cfg)?;
    let endpoints = result.endpoints();
    let fit = fit_limit_law(&endpoints, &params, args.alpha)?;
    let law = limit_distribution(&params);
    let n = endpoints.len() as f64;
    let mean = endpoints.iter().sum::<f64>() / n;
    let var = endpoints.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let (limit_mean, limit_variance) = beta_moments(&law);
    let report = LimitReport {
        params,
        horizon: args.horizon,
        paths: args.n,
        seed: args.output.seed,
        sample_mean: mean,
        sample_variance: var,
        limit_mean,
        limit_variance,
        fit: fit.clone(),
    };
    let echo = UrnEcho {
        b0: args.urn.b0,
        r0: args.urn.r0,
        k: args.urn.k,
        horizon: args.horizon,
        n: args.n,
    };
    let manifest = Manifest::new("limit-check", args.output.seed, args.output.format, serde_json::to_value(&echo)?);
    let mut out = Output::create(&args.output.out, manifest)?;
    out.table("histogram", &histogram(&endpoints, args.bins, &law)?)?;
    out.table("endpoints", &io::endpoint_rows(&result))?;
    out.json("fit.json", &report)?;
    out.finish()?;
    println!(
        "Beta({:.4}, {:.4}): D = {:.5}, threshold = {:.5} at alpha = {} -> {}",
        law.alpha,
        law.beta,
        fit.statistic,
        fit.threshold,
        fit.significance,
        if fit.passed { "pass" } else { "FAIL" }
    );
    Ok(if fit.passed { Outcome::Passed } else { Outcome::Failed })
}

#[derive(Serialize)]
struct GroupSummary {
    name: String,
    count: usize,
    mean_endpoint: f64,
    variance_endpoint: f64,
    limit_mean: f64,
    limit_variance: f64,
}

fn experiment_manifest(command: &str, cfg: &ExperimentConfig, format: Format) -> Result<Manifest> {
    Ok(Manifest::new(command, cfg.cohort.seed, format, serde_json::to_value(cfg)?))
}

fn cmd_cohort(args: &ExperimentArgs) -> Result<Outcome> {
    let (cfg, dir, format) = args.load()?;
    let cohort = cfg.cohort_config()?;
    let result = run_cohort(&cohort)?;
    let groups = (0..result.group_count())
        .map(|g| {
            let ends = result.group_endpoints(g);
            let n = ends.len() as f64;
            let mean = ends.iter().sum::<f64>() / n;
            let var = if ends.len() > 1 {
                ends.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let (limit_mean, limit_variance) = beta_moments(&limit_distribution(cohort.group_params(g)));
            GroupSummary {
                name: cohort.groups[g].name.clone(),
                count: ends.len(),
                mean_endpoint: mean,
                variance_endpoint: var,
                limit_mean,
                limit_variance,
            }
        })
        .collect::<Vec<_>>();
    let mut out = Output::create(&dir, experiment_manifest("cohort", &cfg, format)?)?;
    if result.has_full_paths() {
        out.table("trajectories", &io::trajectory_rows(&result)?)?;
    }
    out.table("endpoints", &io::endpoint_rows(&result))?;
    out.json("summary.json", &groups)?;
    out.finish()?;
    for g in &groups {
        println!(
            "{}: n = {}, mean endpoint = {:.4}, variance = {:.4}",
            g.name, g.count, g.mean_endpoint, g.variance_endpoint
        );
    }
    Ok(Outcome::Passed)
}

fn cmd_validate(args: &ExperimentArgs) -> Result<Outcome> {
    let (cfg, dir, format) = args.load()?;
    let cohort = cfg.cohort_config()?;
    let spec = cfg.snapshot_spec()?;
    let result = run_cohort(&cohort)?;
    let report = snapshot_validation(&result, &spec)?;
    let power: Option<PowerEstimate> = match &cfg.power {
        Some(p) => {
            let mut power_cfg = cohort.clone();
            if let Some(n) = p.population {
                power_cfg.population = n;
                power_cfg.validate()?;
            }
            Some(one_shot_power_estimate(&power_cfg, &spec, p.repetitions, p.alpha, Default::default())?)
        }
        None => None,
    };
    let mut out = Output::create(&dir, experiment_manifest("validate", &cfg, format)?)?;
    out.table("calibration", &report.bins)?;
    out.json("validation.json", &report)?;
    if let Some(power) = &power {
        out.json("power.json", power)?;
    }
    out.finish()?;
    println!("t = {}: AUC = {:.4}", spec.time, report.auc);
    println!("max calibration gap = {:.4}", report.calibration_gap);
    println!("statistical parity gap = {:.4}", report.statistical_parity_gap);
    println!("predictive parity gap = {:.4}", report.predictive_parity_gap);
    if let Some(p) = power {
        println!("one-shot detection power = {:.3} ({}/{})", p.power, p.rejections, p.repetitions);
    }
    Ok(Outcome::Passed)
}

fn cmd_amplify(args: &ExperimentArgs) -> Result<Outcome> {
    let (cfg, dir, format) = args.load()?;
    let cohort = cfg.cohort_config()?;
    let spec = cfg.snapshot_spec()?;
    if !cohort.record_full_paths {
        return Err(seqrisk::Error::FullPathsRequired.into());
    }
    let result = run_cohort(&cohort)?;
    let report = amplification_report(&result, &spec, &cfg.bootstrap())?;
    let mut out = Output::create(&dir, experiment_manifest("amplify", &cfg, format)?)?;
    out.table("disparity", &io::disparity_rows(&report.curve))?;
    out.json("amplification.json", &report)?;
    out.finish()?;
    for pair in &report.pairs {
        println!(
            "{} vs {}: gap {:.4} at t = {} -> {:.4} at t = {}, ratio {:.3} [{:.3}, {:.3}], P(ratio > 1) = {:.3}",
            pair.group_a,
            pair.group_b,
            pair.snapshot_gap,
            pair.snapshot_time,
            pair.final_gap,
            pair.final_time,
            pair.ratio,
            pair.ratio_lower,
            pair.ratio_upper,
            pair.amplification_confidence
        );
    }
    Ok(Outcome::Passed)
}
