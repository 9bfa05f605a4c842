//! Command-line interface: closed-form analytics, single simulations,
//! built-in experiment designs, and the degree-saturation study.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 runtime error.
//! Every run echoes its fully resolved configuration (including the
//! effective seed) to stderr; feeding that JSON back through `--config`
//! reproduces the run exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analytic::{
    self, MeasureConvention, PopulationParams, PsiParts, RateParams, SpatialParams,
};
use crate::ctmc_sim::{self, FociSpec, InitialGraphRule, MigrationMode, SimConfig};
use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentDesign};
use crate::graph_state::read_state_file;
use crate::static_samplers::{ConstrainedChain, ConstrainedModel};

const WORKERS_ENV: &str = "CONTACTNET_WORKERS";

#[derive(Parser)]
#[command(
    name = "contactnet",
    about = "Simulator and analytics for a focus-mediated tie formation process",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form equilibrium quantities as one JSON object
    Analytic(AnalyticArgs),
    /// Run a single trajectory and print its graph summary as JSON
    Simulate(SimulateArgs),
    /// Run a built-in or file-defined experiment design to CSV + plot data
    Experiment(ExperimentArgs),
    /// Sweep N under the degree-capped sampler and emit the saturation CSV
    Saturation(SaturationArgs),
}

#[derive(Args)]
struct AnalyticArgs {
    /// Formation rate per at-risk pair (1/time)
    #[arg(long = "rf", default_value_t = 1.0)]
    r_f: f64,
    /// Dissolution rate per edge (1/time)
    #[arg(long = "rl")]
    r_ell: f64,
    /// Migration rate per vertex (1/time)
    #[arg(long = "rm", default_value_t = 0.0)]
    r_m: f64,
    /// Vertex count N
    #[arg(long = "N")]
    n: Option<usize>,
    /// Expected local population P = N/M
    #[arg(long = "P")]
    p: Option<f64>,
    /// Focus count M
    #[arg(long = "M")]
    m: Option<usize>,
    /// Elapsed time for the co-residence moments
    #[arg(long = "t", default_value_t = 1.0)]
    t: f64,
    /// System volume V (spatial variant)
    #[arg(long = "V")]
    system_volume: Option<f64>,
    /// Voxel volume v (spatial variant)
    #[arg(long = "v")]
    voxel_volume: Option<f64>,
    /// Hypercube linear dimension L (with --l and --k)
    #[arg(long = "L")]
    big_l: Option<f64>,
    /// Voxel linear dimension l
    #[arg(long = "l")]
    small_l: Option<f64>,
    /// Hypercube dimensionality k
    #[arg(long = "k")]
    dims: Option<u32>,
    /// Spatial measure convention
    #[arg(long, value_parser = parse_convention)]
    convention: Option<MeasureConvention>,
    /// Write the JSON report here instead of stdout
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_convention(s: &str) -> std::result::Result<MeasureConvention, String> {
    match s {
        "volume" => Ok(MeasureConvention::Volume),
        "relative-voxel" => Ok(MeasureConvention::RelativeVoxel),
        "voxel" => Ok(MeasureConvention::Voxel),
        other => Err(format!(
            "unknown convention `{other}` (expected volume, relative-voxel, voxel)"
        )),
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON run configuration; explicit flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Vertex count N
    #[arg(long = "N")]
    n: Option<usize>,
    /// Expected local population P (resolves M per run)
    #[arg(long = "P")]
    p: Option<f64>,
    /// Explicit focus count M
    #[arg(long = "M")]
    m: Option<usize>,
    /// Formation rate per at-risk pair, 1/time (defaults to the r_f = 1
    /// time-scale convention)
    #[arg(long = "rf")]
    r_f: Option<f64>,
    /// Dissolution rate per edge (1/time)
    #[arg(long = "rl")]
    r_ell: Option<f64>,
    /// Migration rate per vertex (1/time)
    #[arg(long = "rm")]
    r_m: Option<f64>,
    /// Simulation length in time units
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// uniform-all or exclude-current
    #[arg(long = "migration-mode", value_parser = parse_migration_mode)]
    migration_mode: Option<MigrationMode>,
    /// Initial graph: "empty", "bernoulli", or a state-file path
    #[arg(long)]
    init: Option<String>,
    /// Write the summary JSON here instead of stdout
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Dump the event log as line-delimited JSON
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Dump the final graph (and foci) as an edge-list state file
    #[arg(long = "dump-edges")]
    dump_edges: Option<PathBuf>,
    /// Suppress the resolved-config echo on stderr
    #[arg(long, short)]
    quiet: bool,
}

fn parse_migration_mode(s: &str) -> std::result::Result<MigrationMode, String> {
    match s {
        "uniform-all" => Ok(MigrationMode::UniformAll),
        "exclude-current" => Ok(MigrationMode::ExcludeCurrent),
        other => Err(format!(
            "unknown migration mode `{other}` (expected uniform-all or exclude-current)"
        )),
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// Built-in design name (figure1..figure4) or a design JSON file
    design: String,
    /// Replication scale factor (1 reproduces the full protocol)
    #[arg(long)]
    scale: Option<f64>,
    /// Drop grid cells with N above this cap (desk-scale default; raise it
    /// for full-grid reproduction)
    #[arg(long = "max-N", default_value_t = 800)]
    max_n: usize,
    /// Master seed for the replication streams
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the CSV and plot-data files
    #[arg(long = "output-dir", default_value = "results")]
    output_dir: PathBuf,
    /// Worker threads (default: CONTACTNET_WORKERS or all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Suppress progress lines on stderr
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct SaturationArgs {
    /// Tie probability
    #[arg(long, default_value_t = 0.12)]
    p: f64,
    /// Maximum degree cap
    #[arg(long = "d-max", default_value_t = 12)]
    d_max: u32,
    /// Comma-separated N grid
    #[arg(long = "N-grid", default_value = "25,50,100,200,350,500", value_delimiter = ',')]
    n_grid: Vec<usize>,
    /// Retained draws per N
    #[arg(long, default_value_t = 500)]
    draws: usize,
    /// Scale on the burnin/thinning protocol of 500/250 C(N,2) toggles
    #[arg(long = "burnin-scale", default_value_t = 0.1)]
    burnin_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of stdout
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Suppress progress lines on stderr
    #[arg(long, short)]
    quiet: bool,
}

/// Parse argv and run. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit code 0.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Analytic(args) => cmd_analytic(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Saturation(args) => cmd_saturation(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::UnknownDesign(_) | Error::Parse { .. } => 2,
        Error::Stalled | Error::Io { .. } => 3,
    }
}

#[derive(Serialize)]
struct SpatialReport {
    convention: &'static str,
    theta_e: f64,
    log_measure_rate: f64,
    psi: f64,
}

#[derive(Default, Serialize)]
struct AnalyticReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_degree_exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_degree_limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slow_local_density: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slow_mean_degree: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slow_mean_degree_limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slow_fast_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psi_exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_measure_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coresidence_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coresidence_var: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edge_prob_fast: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edge_prob_upper_bound: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    spatial_psi: Vec<SpatialReport>,
}

fn cmd_analytic(args: AnalyticArgs) -> Result<()> {
    let rates = RateParams::new(args.r_f, args.r_ell, args.r_m)?;
    let mut report = AnalyticReport::default();

    // Population: P directly, or N with M.
    let pop = match (args.n, args.p, args.m) {
        (Some(n), Some(p), _) => Some(PopulationParams::from_local_pop(n, p)?),
        (Some(n), None, Some(m)) => Some(PopulationParams::from_foci(n, m)?),
        _ => None,
    };
    let local_pop = args.p.or(pop.map(|q| q.expected_local_pop()));

    if let Some(p) = local_pop {
        report.mean_degree_limit = Some(analytic::mean_degree_fast_limit(&rates, p)?);
        report.slow_mean_degree_limit = Some(analytic::slow_mean_degree_limit(&rates, p)?);
    }
    report.slow_local_density = Some(analytic::slow_local_density(&rates)?);
    report.slow_fast_ratio = Some(analytic::slow_fast_ratio(&rates)?);
    if let Some(pop) = pop {
        report.mean_degree_exact = Some(analytic::mean_degree_fast(&rates, &pop)?);
        report.slow_mean_degree = Some(analytic::slow_mean_degree(&rates, &pop)?);
        let parts = analytic::psi_decomposition(&rates, &pop)?;
        report.theta_e = Some(parts.theta_e);
        report.log_measure_rate = Some(parts.log_measure_rate);
        report.psi = Some(parts.total());
        report.psi_exact = Some(analytic::psi_exact(&rates, &pop)?);
    }

    // Focus count for the per-dyad quantities: explicit M, or integral N/P.
    let m_int = args.m.or_else(|| {
        pop.and_then(|q| {
            let m = q.n_foci();
            (m.fract().abs() < 1e-9).then_some(m.round() as usize)
        })
    });
    if let Some(m) = m_int {
        report.edge_prob_fast = Some(analytic::edge_probability_fast_limit(&rates, m)?);
        if rates.migration > 0.0 {
            let (mean, var) = analytic::coresidence_moments(&rates, m, args.t)?;
            report.coresidence_mean = Some(mean);
            report.coresidence_var = Some(var);
        }
    }
    report.edge_prob_upper_bound = Some(analytic::edge_probability_upper_bound(&rates)?);

    let spatial = match (args.system_volume, args.voxel_volume, args.big_l, args.small_l, args.dims) {
        (Some(big_v), Some(small_v), ..) => Some(SpatialParams::new(big_v, small_v, None)?),
        (None, None, Some(big_l), Some(small_l), Some(k)) => {
            Some(SpatialParams::hypercube(big_l, small_l, k, None)?)
        }
        (None, None, None, None, None) => None,
        _ => {
            return Err(Error::domain(
                "spatial variant needs --V with --v, or --L with --l and --k",
            ))
        }
    };
    if let Some(spatial) = spatial {
        let conventions: Vec<MeasureConvention> = match args.convention {
            Some(c) => vec![c],
            None => MeasureConvention::ALL.to_vec(),
        };
        for convention in conventions {
            let parts: PsiParts = analytic::spatial_psi(&rates, &spatial, convention)?;
            report.spatial_psi.push(SpatialReport {
                convention: convention.name(),
                theta_e: parts.theta_e,
                log_measure_rate: parts.log_measure_rate,
                psi: parts.total(),
            });
        }
    }

    write_json(&report, args.output.as_deref())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut config: SimConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.clone(),
                line: e.line(),
                msg: e.to_string(),
            })?
        }
        None => SimConfig {
            n_vertices: 0, // must come from flags
            foci: FociSpec::Count(1),
            rates: RateParams {
                formation: 1.0,
                dissolution: f64::NAN,
                migration: f64::NAN,
            },
            horizon: 25.0,
            migration_mode: MigrationMode::UniformAll,
            initial_graph: InitialGraphRule::BernoulliAtAsymptoticMeanDegree,
            seed: 0,
        },
    };

    // Flags override config-file values.
    if let Some(n) = args.n {
        config.n_vertices = n;
    }
    match (args.p, args.m) {
        (Some(_), Some(_)) => {
            return Err(Error::domain("give either --P or --M, not both"));
        }
        (Some(p), None) => config.foci = FociSpec::ExpectedLocalPop(p),
        (None, Some(m)) => config.foci = FociSpec::Count(m),
        (None, None) => {}
    }
    if let Some(r) = args.r_f {
        config.rates.formation = r;
    }
    if let Some(r) = args.r_ell {
        config.rates.dissolution = r;
    }
    if let Some(r) = args.r_m {
        config.rates.migration = r;
    }
    if let Some(h) = args.horizon {
        config.horizon = h;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(mode) = args.migration_mode {
        config.migration_mode = mode;
    }
    if let Some(init) = &args.init {
        config.initial_graph = match init.as_str() {
            "empty" => InitialGraphRule::Empty,
            "bernoulli" | "bernoulli-at-asymptotic-mean-degree" => {
                InitialGraphRule::BernoulliAtAsymptoticMeanDegree
            }
            path => {
                let (foci, edges) = read_state_file(Path::new(path))?;
                // State-file foci are already 0-based here; the config form
                // carries them 1-based.
                InitialGraphRule::Explicit {
                    edges,
                    foci: foci.map(|f| f.iter().map(|&k| k + 1).collect()),
                }
            }
        };
    }
    if config.n_vertices == 0 {
        return Err(Error::domain("--N (or a config file) is required"));
    }
    if !config.rates.dissolution.is_finite() {
        return Err(Error::domain("--rl (or a config file) is required"));
    }
    if !config.rates.migration.is_finite() {
        return Err(Error::domain("--rm (or a config file) is required"));
    }
    config.validate()?;

    if !args.quiet {
        eprintln!(
            "resolved config: {}",
            serde_json::to_string(&config).expect("config serializes")
        );
    }

    let (out, trajectory) = if args.trajectory.is_some() {
        let (out, traj) = ctmc_sim::run_with_trajectory(&config)?;
        (out, Some(traj))
    } else {
        (ctmc_sim::run(&config)?, None)
    };

    if let Some(path) = &args.trajectory {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        trajectory
            .expect("trajectory recorded")
            .write_ldjson(&mut w)
            .map_err(|e| Error::io(path, e))?;
    }
    if let Some(path) = &args.dump_edges {
        crate::graph_state::write_state_file(path, None, out.graph.edges())?;
    }

    #[derive(Serialize)]
    struct SimulateReport<'a> {
        resolved_m: usize,
        summary: &'a crate::graph_stats::GraphSummary,
    }
    write_json(
        &SimulateReport {
            resolved_m: out.resolved_m,
            summary: &out.summary,
        },
        args.output.as_deref(),
    )
}

fn workers_from(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn in_worker_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::domain(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let mut design: ExperimentDesign = if Path::new(&args.design).is_file() {
        let path = Path::new(&args.design);
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?
    } else {
        experiments::builtin_design(&args.design)?
    };
    if let Some(scale) = args.scale {
        design.scale_factor = scale;
    }
    if let Some(seed) = args.seed {
        design.master_seed = seed;
    }
    design.validate()?;

    if !args.quiet {
        eprintln!(
            "resolved design: {}",
            serde_json::to_string(&design).expect("design serializes")
        );
        eprintln!(
            "cells: {}, replications per cell: {}",
            design.cells(Some(args.max_n)).len(),
            design.effective_replications()
        );
    }

    let quiet = args.quiet;
    let mut progress = |cell_id: usize, total: usize, cell: &experiments::CellResult| {
        if !quiet {
            eprintln!(
                "cell {}/{} [{}] mean_degree={:.4} triangles={:.2}",
                cell_id + 1,
                total,
                cell.params.label(),
                cell.mean_degree.mean,
                cell.triangles.mean
            );
        }
    };
    let result = in_worker_pool(workers_from(args.workers), || {
        experiments::run_design(&design, Some(args.max_n), Some(&mut progress))
    })??;

    fs::create_dir_all(&args.output_dir).map_err(|e| Error::io(&args.output_dir, e))?;
    let csv_path = args.output_dir.join(format!("{}.csv", design.name));
    experiments::emit_csv(&result, &csv_path)?;
    let plot_dir = args.output_dir.join(format!("{}_plot", design.name));
    experiments::emit_plotdata(&result, &plot_dir)?;
    if !quiet {
        eprintln!("wrote {} and {}/", csv_path.display(), plot_dir.display());
    }
    Ok(())
}

fn cmd_saturation(args: SaturationArgs) -> Result<()> {
    if args.draws == 0 {
        return Err(Error::domain("--draws must be at least 1"));
    }
    if !args.quiet {
        eprintln!(
            "resolved config: {{\"p\":{},\"d_max\":{},\"n_grid\":{:?},\"draws\":{},\"burnin_scale\":{},\"seed\":{}}}",
            args.p, args.d_max, args.n_grid, args.draws, args.burnin_scale, args.seed
        );
    }
    let mut csv = String::from("N,mean_degree,saturated_fraction,chernoff_fixed_point\n");
    for (idx, &n) in args.n_grid.iter().enumerate() {
        let model = ConstrainedModel::with_protocol_scale(n, args.p, args.d_max, args.burnin_scale)?;
        let seed = crate::rng::replication_seed(args.seed, idx as u64, 0);
        let mut chain = ConstrainedChain::new(model, seed);
        chain.run_burnin();
        let mut deg_sum = 0.0;
        let mut sat_sum = 0.0;
        for _ in 0..args.draws {
            chain.next_draw();
            deg_sum += chain.mean_degree();
            sat_sum += chain.saturated_fraction();
        }
        let mean_degree = deg_sum / args.draws as f64;
        let saturated = sat_sum / args.draws as f64;
        let fixed_point = analytic::saturation_fixed_point(args.p, args.d_max as usize, n)?;
        if !args.quiet {
            eprintln!(
                "N={n}: mean_degree={mean_degree:.4} saturated_fraction={saturated:.4}"
            );
        }
        let _ = writeln!(csv, "{n},{mean_degree},{saturated},{fixed_point}");
    }
    match &args.output {
        Some(path) => fs::write(path, csv).map_err(|e| Error::io(path, e)),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn write_json<T: Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    match output {
        Some(path) => {
            fs::write(path, text + "\n").map_err(|e| Error::io(path, e))?;
        }
        None => println!("{text}"),
    }
    Ok(())
}
