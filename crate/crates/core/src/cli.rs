//! Command-line front end: `simulate`, `fit`, `call` and `report`.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};

use crate::ecm::{median_spacing, run_ecm, EcmOptions, FitDiagnostics};
use crate::error::{Error, Result};
use crate::io;
use crate::mcmc::{run_mcmc, McmcOptions};
use crate::model::{GlobalParams, Hyperpriors, Mode, ModelVariant, ProbeTrack};
use crate::regions::{call_regions, rank_regions, DEFAULT_PROBE_LENGTH};
use crate::simulate::{sample_dataset, SimConfig};

pub const PROBES_FILE: &str = "probes.tsv";
pub const TRUTH_REGIONS_FILE: &str = "truth_regions.bed";
pub const TRUTH_PROBES_FILE: &str = "truth_probes.tsv";
pub const PARAMS_FILE: &str = "params.tsv";

#[derive(Debug, Parser)]
#[command(name = "tilehmm", version, about = "Peak calling on tiling arrays with a two-layer HMM")]
struct Cli {
    /// Worker threads for per-chromosome work (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic probe table with its ground truth.
    Simulate(SimulateArgs),
    /// Fit the model and write probability tracks and a parameter report.
    Fit(FitArgs),
    /// Call and rank regions from a probability track.
    Call(CallArgs),
    /// Print the diagnostics of a fit.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Auto,
    Hierarchical,
    Pooled,
}

impl VariantArg {
    fn resolve(self, n_t: usize, n_c: usize) -> ModelVariant {
        let mut v = ModelVariant::auto(n_t, n_c);
        match self {
            VariantArg::Auto => {}
            VariantArg::Hierarchical => v.mode = Mode::Hierarchical,
            VariantArg::Pooled => v.mode = Mode::Pooled,
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    Ecm,
    Mcmc,
    Both,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 10_000)]
    n_probes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of chromosomes, each with `n_probes` probes.
    #[arg(long, default_value_t = 1)]
    chromosomes: usize,
    #[arg(long, default_value_t = 1)]
    n_t: usize,
    #[arg(long, default_value_t = 1)]
    n_c: usize,
    #[arg(long, default_value_t = 35.0)]
    spacing: f64,
    #[arg(long, default_value_t = 0.2)]
    jitter: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::Auto)]
    variant: VariantArg,
    #[arg(long, default_value_t = 0.006)]
    p0: f64,
    #[arg(long, default_value_t = 0.948)]
    p1: f64,
    #[arg(long, default_value_t = 0.004)]
    mu: f64,
    #[arg(long, default_value_t = 3.19)]
    delta: f64,
    #[arg(long, default_value_t = 0.33)]
    sigma2: f64,
    #[arg(long, default_value_t = 0.33)]
    tau2: f64,
    #[arg(long, default_value_t = 0.05)]
    eta2: f64,
    #[arg(long, default_value_t = 0.25)]
    xi2: f64,
    #[arg(long, default_value_t = 0.0032)]
    pi1: f64,
    /// Expected peak length in bp; sets the switching rate.
    #[arg(long, default_value_t = 465.0)]
    peak_length: f64,
    #[arg(long, default_value_t = DEFAULT_PROBE_LENGTH)]
    probe_length: u64,
    #[arg(long, short)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Probe table.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Algorithm::Ecm)]
    algorithm: Algorithm,
    #[arg(long, value_enum, default_value_t = VariantArg::Auto)]
    variant: VariantArg,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10_500)]
    n_sweeps: usize,
    #[arg(long, default_value_t = 500)]
    burn_in: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    /// JSON file overriding the default hyperpriors.
    #[arg(long)]
    hyperpriors: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CallArgs {
    /// Probability track written by `fit`.
    #[arg(long, short)]
    track: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    cutoff: f64,
    #[arg(long, default_value_t = 1)]
    min_probes: usize,
    #[arg(long, default_value_t = DEFAULT_PROBE_LENGTH)]
    probe_length: u64,
    /// Output BED path; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Diagnostics JSON written by `fit`.
    diagnostics: PathBuf,
}

/// Summary of one fit, written next to its probability track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub algorithm: String,
    pub variant: ModelVariant,
    pub params: GlobalParams,
    pub hyperpriors: Hyperpriors,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub objective_trace: Vec<f64>,
    pub ecm: Option<FitDiagnostics>,
    pub acceptance_rate: Option<[f64; 2]>,
    pub proposal_scales: Option<[f64; 2]>,
    pub n_draws: Option<usize>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?))
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let lambda = GlobalParams::lambda_for_peak_length(a.peak_length, a.pi1);
    let params = GlobalParams {
        mu: a.mu,
        delta: a.delta,
        sigma2: a.sigma2,
        tau2: a.tau2,
        eta2: a.eta2,
        xi2: a.xi2,
        p0: a.p0,
        p1: a.p1,
        pi1: a.pi1,
        lambda,
    };
    let datasets = (0..a.chromosomes)
        .map(|c| {
            sample_dataset(&SimConfig {
                chromosome_id: format!("chr{}", c + 1),
                n_probes: a.n_probes,
                mean_spacing: a.spacing,
                spacing_jitter: a.jitter,
                params,
                variant: a.variant.resolve(a.n_t, a.n_c),
                n_t: a.n_t,
                n_c: a.n_c,
                seed: a.seed.wrapping_add(c as u64),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&a.out_dir)?;
    let tracks: Vec<ProbeTrack> = datasets.iter().map(|d| d.track.clone()).collect();
    let mut w = create(&a.out_dir.join(PROBES_FILE))?;
    io::write_probe_table(&mut w, &tracks)?;
    w.flush()?;
    let mut w = create(&a.out_dir.join(TRUTH_REGIONS_FILE))?;
    io::write_truth_regions(&mut w, &datasets, a.probe_length)?;
    w.flush()?;
    let mut w = create(&a.out_dir.join(TRUTH_PROBES_FILE))?;
    io::write_truth_probes(&mut w, &datasets)?;
    w.flush()?;
    info!("wrote {} probes to {}", a.n_probes * a.chromosomes, a.out_dir.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Internal(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn fit(a: &FitArgs) -> Result<()> {
    let tracks = io::parse_probe_table(open(&a.input)?)?;
    let first = &tracks[0];
    let variant = a.variant.resolve(first.n_treatment(), first.n_control());
    let hyper = match &a.hyperpriors {
        Some(path) => serde_json::from_reader(open(path)?)
            .map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))?,
        None => Hyperpriors::default_for_spacing(median_spacing(&tracks).unwrap_or(1.0)),
    };
    fs::create_dir_all(&a.out_dir)?;
    let mut rows: Vec<(&str, GlobalParams)> = Vec::new();

    if matches!(a.algorithm, Algorithm::Ecm | Algorithm::Both) {
        let options = EcmOptions { tol: a.tol, max_iter: a.max_iter, ..EcmOptions::default() };
        let result = run_ecm(&tracks, variant, &hyper, &options)?;
        info!("ECM: {} iterations, converged = {}", result.iterations, result.converged);
        let mut w = create(&a.out_dir.join("ecm_track.tsv"))?;
        io::write_probability_track(&mut w, &result.probability_tracks(&tracks))?;
        w.flush()?;
        write_json(
            &a.out_dir.join("ecm_diagnostics.json"),
            &FitReport {
                algorithm: "ecm".into(),
                variant,
                params: result.params,
                hyperpriors: hyper,
                iterations: Some(result.iterations),
                converged: Some(result.converged),
                objective_trace: result.trace.clone(),
                ecm: Some(result.diagnostics.clone()),
                acceptance_rate: None,
                proposal_scales: None,
                n_draws: None,
            },
        )?;
        rows.push(("ecm", result.params));
    }

    if matches!(a.algorithm, Algorithm::Mcmc | Algorithm::Both) {
        let options = McmcOptions {
            n_sweeps: a.n_sweeps,
            burn_in: a.burn_in,
            thin: a.thin,
            seed: a.seed,
            ..McmcOptions::default()
        };
        let summary = run_mcmc(&tracks, variant, &hyper, &options)?;
        let mean = summary.posterior_mean();
        let mut w = create(&a.out_dir.join("mcmc_track.tsv"))?;
        io::write_probability_track(&mut w, &summary.probability_tracks(&tracks))?;
        w.flush()?;
        let mut w = create(&a.out_dir.join("mcmc_draws.tsv"))?;
        io::write_param_draws(&mut w, &summary.param_draws)?;
        w.flush()?;
        write_json(
            &a.out_dir.join("mcmc_diagnostics.json"),
            &FitReport {
                algorithm: "mcmc".into(),
                variant,
                params: mean,
                hyperpriors: hyper,
                iterations: Some(options.n_sweeps),
                converged: None,
                objective_trace: Vec::new(),
                ecm: None,
                acceptance_rate: Some(summary.acceptance_rate),
                proposal_scales: Some(summary.scales),
                n_draws: Some(summary.param_draws.len()),
            },
        )?;
        rows.push(("mcmc", mean));
    }

    let mut w = create(&a.out_dir.join(PARAMS_FILE))?;
    io::write_param_report(&mut w, &rows)?;
    w.flush()?;
    Ok(())
}

fn call(a: &CallArgs) -> Result<()> {
    let tracks = io::parse_probability_track(open(&a.track)?)?;
    let mut regions = Vec::new();
    for t in &tracks {
        regions.extend(call_regions(t, a.cutoff, a.min_probes, a.probe_length)?);
    }
    let ranked = rank_regions(regions);
    match &a.output {
        Some(path) => {
            let mut w = create(path)?;
            io::write_region_bed(&mut w, &ranked)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            io::write_region_bed(&mut w, &ranked)?;
        }
    }
    Ok(())
}

fn report(a: &ReportArgs) -> Result<()> {
    let r: FitReport = serde_json::from_reader(open(&a.diagnostics)?)
        .map_err(|e| Error::InvalidParams(format!("{}: {e}", a.diagnostics.display())))?;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "algorithm\t{}", r.algorithm)?;
    writeln!(w, "variant\t{:?}", r.variant.mode)?;
    if let Some(n) = r.iterations {
        writeln!(w, "iterations\t{n}")?;
    }
    if let Some(c) = r.converged {
        writeln!(w, "converged\t{c}")?;
    }
    if let Some(d) = &r.ecm {
        writeln!(w, "variance_floor_hits\t{}", d.variance_floor_hits)?;
        writeln!(w, "degenerate_iterations\t{}", d.degenerate_iterations)?;
        writeln!(w, "transition_fallbacks\t{}", d.transition_fallbacks)?;
    }
    if let Some(acc) = r.acceptance_rate {
        writeln!(w, "acceptance_rate\t{}\t{}", io::format_sig(acc[0], 4), io::format_sig(acc[1], 4))?;
    }
    if let Some(n) = r.n_draws {
        writeln!(w, "draws\t{n}")?;
    }
    if !r.objective_trace.is_empty() {
        let cells: Vec<String> = r.objective_trace.iter().map(|v| io::format_sig(*v, io::OUTPUT_DIGITS)).collect();
        writeln!(w, "objective_trace\t{}", cells.join("\t"))?;
    }
    io::write_param_report(&mut w, &[(r.algorithm.as_str(), r.params)])?;
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Call(a) => call(a),
        Command::Report(a) => report(a),
    }
}

/// Run the command line and return the process exit code: 0 on success,
/// 2 for usage errors, 1 for runtime failures.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
