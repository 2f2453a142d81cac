use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;
use tcgp_core::analysis::{clusters, metrics, summarize};
use tcgp_core::minibatch::Clock;
use tcgp_core::simgen::{generate, SimSpec2D};
use tcgp_core::{
    normalize_dataset, run_gibbs, run_hybrid, transform_data, HybridDiagnostics, InitStrategy, PosteriorSamples,
};

use crate::config::{load_config, Design, RunConfig, SamplerKind, Signal};
use crate::error::{CliError, Result};
use crate::io::dataset::{read_dataset, write_dataset};
use crate::io::posterior::write_posterior;
use crate::io::summary::{read_summary, write_summary, SummaryFile};
use crate::io::truth::{read_truth, write_truth};
use crate::io::{create_dir, write_json};
use crate::report::{metrics_rows, write_cluster_csv, write_metrics_csv, write_slice_maps, ClusterRow};

#[derive(Debug, Parser)]
#[command(name = "tcgp", version, about = "Thresholded correlation Gaussian process for paired images")]
pub struct Cli {
    /// JSON run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and its ground truth
    Simulate(SimulateArgs),
    /// Fit the model and write posterior draws, summary and diagnostics
    Fit(FitArgs),
    /// Compare a summary's sign map with the ground truth
    Evaluate(EvaluateArgs),
    /// Cluster table and slice maps of a summary
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub design: Option<Design>,
    #[arg(long)]
    pub signal: Option<Signal>,
    /// Number of subjects
    #[arg(long)]
    pub n: Option<usize>,
    /// Side of the 2D grid
    #[arg(long)]
    pub side: Option<usize>,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    Prior,
    Correlation,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset header (default: OUT/data.json)
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub sampler: Option<SamplerKind>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub init: Option<InitArg>,
    /// Always rebuild the KL basis
    #[arg(long)]
    pub no_cache: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Smallest cluster reported, in voxels
    #[arg(long)]
    pub min_size: Option<usize>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // a second call in the same process keeps the first pool
        if rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() {
            log::debug!("thread pool already initialized");
        }
    }
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.simulate.seed = seed;
        cfg.fit.hyper.seed = seed;
    }
    create_dir(&cli.out)?;
    match cli.command {
        Command::Simulate(a) => {
            let s = &mut cfg.simulate;
            s.design = a.design.unwrap_or(s.design);
            s.signal = a.signal.unwrap_or(s.signal);
            s.n = a.n.unwrap_or(s.n);
            s.side = a.side.unwrap_or(s.side);
            if let Some(name) = a.name {
                s.name = name;
            }
            simulate(&cfg, &cli.out)
        }
        Command::Fit(a) => {
            let f = &mut cfg.fit;
            if a.dataset.is_some() {
                f.dataset = a.dataset;
            }
            f.sampler = a.sampler.unwrap_or(f.sampler);
            if let Some(n) = a.iterations {
                f.gibbs.n_iter = n;
                f.hybrid.n_iter = n;
            }
            if let Some(b) = a.burn_in {
                f.gibbs.burn_in = b;
                f.hybrid.burn_in = b;
            }
            if let Some(init) = a.init {
                let init = match init {
                    InitArg::Prior => InitStrategy::Prior,
                    InitArg::Correlation => InitStrategy::Correlation,
                };
                f.gibbs.init = init;
                f.hybrid.init = init;
            }
            f.no_cache |= a.no_cache;
            fit(&cfg, &cli.out)
        }
        Command::Evaluate(a) => {
            if a.summary.is_some() {
                cfg.evaluate.summary = a.summary;
            }
            if a.truth.is_some() {
                cfg.evaluate.truth = a.truth;
            }
            evaluate(&cfg, &cli.out)
        }
        Command::Report(a) => {
            if a.summary.is_some() {
                cfg.report.summary = a.summary;
            }
            cfg.report.min_size = a.min_size.unwrap_or(cfg.report.min_size);
            report(&cfg, &cli.out)
        }
    }
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let s = &cfg.simulate;
    s.validate()?;
    let (dims, regions) = match s.design {
        Design::TwoD => (
            vec![s.side, s.side],
            s.regions.clone().unwrap_or_else(SimSpec2D::regions),
        ),
        Design::ThreeD => (s.dims.clone().unwrap_or_default(), s.regions.clone().unwrap_or_default()),
    };
    let sim = generate(&dims, s.n, &regions, s.zetas(), s.seed)?;
    let header = write_dataset(out, &s.name, &sim.grid, &sim.data)?;
    let truth = write_truth(out, &dims, &sim.truth)?;
    info!("wrote {} and {}", header.display(), truth.display());
    Ok(())
}

/// Monotonic wall clock for the hybrid sampler's phase timings.
pub struct StdClock(Instant);

impl StdClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for StdClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Serialize)]
struct Trace<'a> {
    iteration: u64,
    first: &'a [f64],
    second: &'a [f64],
}

#[derive(Debug, Serialize)]
struct HybridReport<'a> {
    mean_acceptance: Option<f64>,
    acceptance: &'a [Option<f64>],
    full_iterations: usize,
    batch_iterations: usize,
    degenerate_omega_updates: usize,
    seconds_tau: f64,
    seconds_coef_omega_full: f64,
    seconds_coef_omega_batch: f64,
    seconds_e: f64,
    seconds_record: f64,
}

#[derive(Debug, Serialize)]
struct Diagnostics<'a> {
    sampler: SamplerKind,
    n: usize,
    m: usize,
    kept: usize,
    basis_len: usize,
    variance_fraction: f64,
    basis_from_cache: bool,
    basis_seconds: f64,
    sampling_seconds: f64,
    omega: &'a [f64],
    log_posterior: &'a [f64],
    hybrid: Option<HybridReport<'a>>,
    /// τ₁², τ₂² snapshots
    tau_trace: Vec<Trace<'a>>,
    /// e₊, e₋ snapshots
    e_trace: Vec<Trace<'a>>,
}

fn traces(t: &[(u64, Vec<f64>, Vec<f64>)]) -> Vec<Trace<'_>> {
    t.iter()
        .map(|(iteration, a, b)| Trace {
            iteration: *iteration,
            first: a,
            second: b,
        })
        .collect()
}

pub fn fit(cfg: &RunConfig, out: &Path) -> Result<()> {
    let f = &cfg.fit;
    f.validate()?;
    let dataset = f.dataset.clone().unwrap_or_else(|| out.join("data.json"));
    if !dataset.exists() {
        return Err(CliError::Data(format!("dataset {} does not exist", dataset.display())));
    }
    let (grid, ds) = read_dataset(&dataset)?;
    let data = transform_data(&normalize_dataset(&ds)?)?;

    let t0 = Instant::now();
    let cache_dir = (!f.no_cache).then(|| f.cache_dir.clone().unwrap_or_else(|| out.join("cache")));
    let (basis, cached) = crate::cache::load_or_build(cache_dir.as_deref(), &grid, &f.hyper)?;
    let basis_seconds = t0.elapsed().as_secs_f64();
    info!(
        "basis: L = {} ({:.1}% of variance){} in {basis_seconds:.1}s",
        basis.len(),
        100.0 * basis.variance_fraction(),
        if cached { ", from cache" } else { "" }
    );

    let t0 = Instant::now();
    let (samples, hybrid): (PosteriorSamples, Option<HybridDiagnostics>) = match f.sampler {
        SamplerKind::Gibbs => (run_gibbs(&data, &basis, &f.hyper, &f.gibbs)?, None),
        SamplerKind::Hybrid => {
            let (s, d) = run_hybrid(&data, &basis, &f.hyper, &f.hybrid, &StdClock::start())?;
            (s, Some(d))
        }
    };
    let sampling_seconds = t0.elapsed().as_secs_f64();
    info!("sampled {} kept draws in {sampling_seconds:.1}s", samples.kept);

    let summary = summarize(&samples, f.hyper.pip_threshold)?;
    write_posterior(&out.join("posterior"), &samples)?;
    write_summary(&out.join("summary.json"), &SummaryFile::new(&grid, &summary, f.hyper.pip_threshold))?;
    let diag = Diagnostics {
        sampler: f.sampler,
        n: data.n(),
        m: data.m(),
        kept: samples.kept,
        basis_len: basis.len(),
        variance_fraction: basis.variance_fraction(),
        basis_from_cache: cached,
        basis_seconds,
        sampling_seconds,
        omega: &samples.omega,
        log_posterior: &samples.log_posterior,
        hybrid: hybrid.as_ref().map(|d| HybridReport {
            mean_acceptance: d.mean_acceptance.is_finite().then_some(d.mean_acceptance),
            acceptance: &d.acceptance,
            full_iterations: d.full_iterations,
            batch_iterations: d.batch_iterations,
            degenerate_omega_updates: d.degenerate_omega_updates,
            seconds_tau: d.times.tau,
            seconds_coef_omega_full: d.times.coef_omega_full,
            seconds_coef_omega_batch: d.times.coef_omega_batch,
            seconds_e: d.times.e,
            seconds_record: d.times.record,
        }),
        tau_trace: traces(&samples.tau_trace),
        e_trace: traces(&samples.e_trace),
    };
    write_json(&out.join("diagnostics.json"), &diag)?;
    let pos = summary.sign_map.iter().filter(|&&s| s > 0).count();
    let neg = summary.sign_map.iter().filter(|&&s| s < 0).count();
    println!("selected {pos} positive and {neg} negative voxels of {}", data.m());
    Ok(())
}

pub fn evaluate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let e = &cfg.evaluate;
    let summary_path = e.summary.clone().unwrap_or_else(|| out.join("summary.json"));
    let truth_path = e.truth.clone().unwrap_or_else(|| out.join("truth.json"));
    let (grid, summary) = read_summary(&summary_path)?;
    let (dims, truth) = read_truth(&truth_path)?;
    if dims != grid.dims() || truth.sign.len() != grid.m() {
        return Err(CliError::Data(format!(
            "summary covers {} voxels on {:?}, truth {} voxels on {dims:?}",
            grid.m(),
            grid.dims(),
            truth.sign.len()
        )));
    }
    let rows = metrics_rows(&metrics(&summary.sign_map, &truth.sign)?);
    write_json(&out.join("metrics.json"), &rows)?;
    write_metrics_csv(&out.join("metrics.csv"), &rows)?;
    let show = |x: Option<f64>| x.map_or_else(|| "   NaN".to_string(), |v| format!("{v:.4}"));
    println!("sign      sensitivity specificity fdr");
    for r in &rows {
        println!("{:<9} {:>11} {:>11} {:.4}", r.sign, show(r.sensitivity), show(r.specificity), r.fdr);
    }
    Ok(())
}

pub fn report(cfg: &RunConfig, out: &Path) -> Result<()> {
    let r = &cfg.report;
    let summary_path = r.summary.clone().unwrap_or_else(|| out.join("summary.json"));
    let (grid, file) = read_summary(&summary_path)?;
    let summary = file.summary();
    let rows: Vec<ClusterRow> = clusters(&summary, &grid, r.min_size)?.iter().map(ClusterRow::from).collect();
    write_cluster_csv(&out.join("clusters.csv"), &rows, grid.ndim())?;
    write_json(&out.join("clusters.json"), &rows)?;
    let maps = write_slice_maps(&out.join("maps"), &summary, &grid)?;
    println!("{} clusters of at least {} voxels; {} map files", rows.len(), r.min_size, maps.len());
    Ok(())
}
