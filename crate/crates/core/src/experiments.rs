//! Declarative experiment designs, replication management, and figure-ready
//! output.
//!
//! A design crosses parameter grids factorially, runs a fixed number of
//! replications per cell with stream-indexed seeds derived from a master
//! seed, aggregates per-cell means with 95% confidence intervals, attaches
//! closed-form reference values, and emits one CSV row per replication plus
//! tab-separated plot series. Output is byte-identical across runs and
//! worker counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    self, PopulationParams, RateParams,
};
use crate::ctmc_sim::{
    self, FociSpec, InitialGraphRule, MigrationMode, SimConfig,
};
use crate::error::{Error, Result};
use crate::graph_stats::{summarize, GraphSummary};
use crate::rng::replication_seed;
use crate::static_samplers::{ConstrainedChain, ConstrainedModel};

/// Exact CSV header for per-replication rows.
pub const CSV_HEADER: &str = "design,cell_id,N,M,P,r_m,r_f,r_ell,horizon,rep,seed,edges,mean_degree,triangles,saturated_fraction,ref_mean_degree_exact,ref_mean_degree_limit,ref_mean_degree_slow,ref_triangles_bernoulli";

/// Parameter grid of a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignGrid {
    /// Dynamic-model cells: full factorial over N, P, and r_m.
    Factorial {
        n_values: Vec<usize>,
        p_values: Vec<f64>,
        r_m_values: Vec<f64>,
        #[serde(default)]
        migration_mode: MigrationMode,
    },
    /// Degree-capped sampler cells: one Metropolis chain per N, with
    /// replications playing the role of retained draws.
    Saturation {
        n_values: Vec<usize>,
        tie_prob: f64,
        d_max: u32,
        /// Scale on the burnin/thinning protocol of 500/250 C(N,2) toggles.
        burnin_scale: f64,
    },
}

/// A factorial simulation study at configurable scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDesign {
    pub name: String,
    pub grid: DesignGrid,
    pub r_f: f64,
    pub r_ell: f64,
    pub horizon: f64,
    /// Replications per cell at scale 1.
    pub replications: usize,
    /// Multiplier on `replications` (desk-scale default elsewhere: 0.1).
    pub scale_factor: f64,
    pub master_seed: u64,
}

impl ExperimentDesign {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::domain("replications must be at least 2"));
        }
        if !(self.scale_factor > 0.0) || !self.scale_factor.is_finite() {
            return Err(Error::domain("scale_factor must be positive"));
        }
        match &self.grid {
            DesignGrid::Factorial {
                n_values,
                p_values,
                r_m_values,
                ..
            } => {
                if n_values.is_empty() || p_values.is_empty() || r_m_values.is_empty() {
                    return Err(Error::domain("factorial grid must be non-empty"));
                }
                if p_values.iter().any(|&p| !(p >= 1.0))
                    || r_m_values.iter().any(|&r| !(r > 0.0))
                    || n_values.iter().any(|&n| n == 0)
                {
                    return Err(Error::domain("grid values must be positive"));
                }
            }
            DesignGrid::Saturation {
                n_values,
                tie_prob,
                d_max,
                burnin_scale,
            } => {
                if n_values.is_empty() {
                    return Err(Error::domain("saturation grid must be non-empty"));
                }
                for &n in n_values {
                    ConstrainedModel::with_protocol_scale(n, *tie_prob, *d_max, *burnin_scale)?;
                }
            }
        }
        Ok(())
    }

    /// Replications per cell after scaling (never below 2).
    pub fn effective_replications(&self) -> usize {
        ((self.replications as f64 * self.scale_factor).round() as usize).max(2)
    }

    /// Cells in deterministic order, optionally truncating the N grid.
    pub fn cells(&self, max_n: Option<usize>) -> Vec<CellParams> {
        let keep = |n: usize| max_n.is_none_or(|cap| n <= cap);
        let mut cells = Vec::new();
        match &self.grid {
            DesignGrid::Factorial {
                n_values,
                p_values,
                r_m_values,
                migration_mode,
            } => {
                for &n in n_values.iter().filter(|&&n| keep(n)) {
                    for &p in p_values {
                        for &r_m in r_m_values {
                            cells.push(CellParams::Dynamic {
                                n,
                                p,
                                r_m,
                                migration_mode: *migration_mode,
                            });
                        }
                    }
                }
            }
            DesignGrid::Saturation {
                n_values,
                tie_prob,
                d_max,
                burnin_scale,
            } => {
                for &n in n_values.iter().filter(|&&n| keep(n)) {
                    cells.push(CellParams::Saturation {
                        n,
                        tie_prob: *tie_prob,
                        d_max: *d_max,
                        burnin_scale: *burnin_scale,
                    });
                }
            }
        }
        cells
    }
}

/// Names of the built-in designs.
pub fn builtin_design_names() -> Vec<&'static str> {
    vec![
        "figure1_saturation",
        "figure2_convergence",
        "figure3_migration",
        "figure4_triangles",
    ]
}

/// All built-in designs.
pub fn builtin_designs() -> Vec<ExperimentDesign> {
    builtin_design_names()
        .into_iter()
        .map(|name| builtin_design(name).expect("built-in design"))
        .collect()
}

/// Look up a built-in design by name (short aliases `figure1`..`figure4`
/// accepted). Grids reproduce the reference studies exactly at
/// `scale_factor = 1`; the default scale of 0.1 reduces replications only.
pub fn builtin_design(name: &str) -> Result<ExperimentDesign> {
    let full_factorial = |design_name: &str| ExperimentDesign {
        name: design_name.to_string(),
        grid: DesignGrid::Factorial {
            n_values: vec![50, 100, 200, 400, 800, 1600],
            p_values: vec![5.0, 10.0, 20.0, 40.0],
            r_m_values: vec![1.0, 10.0, 25.0, 50.0, 100.0],
            migration_mode: MigrationMode::UniformAll,
        },
        r_f: 1.0,
        r_ell: 5.0,
        horizon: 25.0,
        replications: 1000,
        scale_factor: 0.1,
        master_seed: 0,
    };
    match name {
        "figure1" | "figure1_saturation" => Ok(ExperimentDesign {
            name: "figure1_saturation".to_string(),
            grid: DesignGrid::Saturation {
                n_values: vec![25, 50, 100, 200, 350, 500],
                tie_prob: 0.12,
                d_max: 12,
                burnin_scale: 0.1,
            },
            r_f: 1.0,
            r_ell: 5.0,
            horizon: 25.0,
            replications: 500,
            scale_factor: 0.1,
            master_seed: 0,
        }),
        "figure2" | "figure2_convergence" => Ok(full_factorial("figure2_convergence")),
        "figure3" | "figure3_migration" => Ok(ExperimentDesign {
            name: "figure3_migration".to_string(),
            grid: DesignGrid::Factorial {
                n_values: vec![500],
                p_values: vec![5.0, 10.0, 20.0],
                r_m_values: vec![
                    1.0 / 125.0,
                    1.0 / 25.0,
                    1.0 / 5.0,
                    1.0,
                    5.0,
                    25.0,
                    125.0,
                ],
                migration_mode: MigrationMode::UniformAll,
            },
            r_f: 1.0,
            r_ell: 5.0,
            horizon: 25.0,
            replications: 1000,
            scale_factor: 0.1,
            master_seed: 0,
        }),
        "figure4" | "figure4_triangles" => Ok(full_factorial("figure4_triangles")),
        other => Err(Error::UnknownDesign(other.to_string())),
    }
}

/// Parameters of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellParams {
    Dynamic {
        n: usize,
        p: f64,
        r_m: f64,
        migration_mode: MigrationMode,
    },
    Saturation {
        n: usize,
        tie_prob: f64,
        d_max: u32,
        burnin_scale: f64,
    },
}

impl CellParams {
    pub fn n(&self) -> usize {
        match *self {
            CellParams::Dynamic { n, .. } | CellParams::Saturation { n, .. } => n,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            CellParams::Dynamic { n, p, r_m, .. } => format!("N={n} P={p} r_m={r_m}"),
            CellParams::Saturation { n, tie_prob, d_max, .. } => {
                format!("N={n} p={tie_prob} d_max={d_max}")
            }
        }
    }
}

/// One replication's retained output.
#[derive(Debug, Clone, Serialize)]
pub struct RepRow {
    pub rep: usize,
    pub seed: u64,
    /// Focus count used (absent for saturation cells).
    pub resolved_m: Option<usize>,
    pub summary: GraphSummary,
}

/// Mean with normal-approximation 95% confidence interval.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Standard error of the mean: sample sd / sqrt(reps).
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Mean and 95% CI of a list of replication values.
pub fn aggregate(values: &[f64]) -> Result<Aggregate> {
    if values.len() < 2 {
        return Err(Error::domain("aggregation needs at least 2 replications"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    Ok(Aggregate {
        mean,
        se,
        ci_lo: mean - 1.96 * se,
        ci_hi: mean + 1.96 * se,
    })
}

/// Closed-form reference values attached to a dynamic cell.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CellRefs {
    pub mean_degree_exact: f64,
    pub mean_degree_limit: f64,
    pub mean_degree_slow: f64,
    pub triangles_bernoulli: f64,
}

/// All retained rows and aggregates of one cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub cell_id: usize,
    pub params: CellParams,
    /// Distribution of resolved focus counts across replications.
    pub m_counts: BTreeMap<usize, usize>,
    pub rows: Vec<RepRow>,
    pub mean_degree: Aggregate,
    pub triangles: Aggregate,
    pub saturated_fraction: Option<Aggregate>,
    pub refs: Option<CellRefs>,
}

/// A replication that failed, kept for the CSV footer.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub cell_id: usize,
    pub rep: usize,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignResult {
    pub design: ExperimentDesign,
    pub cells: Vec<CellResult>,
    pub failures: Vec<Failure>,
}

fn dynamic_cell_refs(design: &ExperimentDesign, n: usize, p: f64) -> Result<CellRefs> {
    let rates = RateParams::new(design.r_f, design.r_ell, 1.0)?;
    let pop = PopulationParams::from_local_pop(n, p)?;
    let exact = analytic::mean_degree_fast(&rates, &pop)?;
    let tie_p = exact / (n as f64 - 1.0);
    Ok(CellRefs {
        mean_degree_exact: exact,
        mean_degree_limit: analytic::mean_degree_fast_limit(&rates, p)?,
        mean_degree_slow: analytic::slow_mean_degree(&rates, &pop)?,
        triangles_bernoulli: crate::static_samplers::expected_triangles_bernoulli(n, tie_p)?,
    })
}

fn run_dynamic_cell(
    design: &ExperimentDesign,
    cell_id: usize,
    n: usize,
    p: f64,
    r_m: f64,
    migration_mode: MigrationMode,
) -> (Vec<RepRow>, Vec<Failure>) {
    let reps = design.effective_replications();
    let results: Vec<std::result::Result<RepRow, Failure>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let seed = replication_seed(design.master_seed, cell_id as u64, rep as u64);
            let config = SimConfig {
                n_vertices: n,
                foci: FociSpec::ExpectedLocalPop(p),
                rates: RateParams {
                    formation: design.r_f,
                    dissolution: design.r_ell,
                    migration: r_m,
                },
                horizon: design.horizon,
                migration_mode,
                initial_graph: InitialGraphRule::BernoulliAtAsymptoticMeanDegree,
                seed,
            };
            match ctmc_sim::run(&config) {
                Ok(out) => Ok(RepRow {
                    rep,
                    seed,
                    resolved_m: Some(out.resolved_m),
                    summary: out.summary,
                }),
                Err(e) => Err(Failure {
                    cell_id,
                    rep,
                    message: e.to_string(),
                }),
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(reps);
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(f) => failures.push(f),
        }
    }
    (rows, failures)
}

fn run_saturation_cell(
    design: &ExperimentDesign,
    cell_id: usize,
    n: usize,
    tie_prob: f64,
    d_max: u32,
    burnin_scale: f64,
) -> Result<Vec<RepRow>> {
    let draws = design.effective_replications();
    let seed = replication_seed(design.master_seed, cell_id as u64, 0);
    let model = ConstrainedModel::with_protocol_scale(n, tie_prob, d_max, burnin_scale)?;
    let mut chain = ConstrainedChain::new(model, seed);
    chain.run_burnin();
    let rows = (0..draws)
        .map(|rep| {
            let graph = chain.next_draw();
            RepRow {
                rep,
                seed,
                resolved_m: None,
                summary: summarize(&graph, Some(d_max)),
            }
        })
        .collect();
    Ok(rows)
}

fn build_cell_result(
    design: &ExperimentDesign,
    cell_id: usize,
    params: CellParams,
    rows: Vec<RepRow>,
) -> Result<CellResult> {
    let degrees: Vec<f64> = rows.iter().map(|r| r.summary.mean_degree).collect();
    let triangles: Vec<f64> = rows.iter().map(|r| r.summary.triangle_count as f64).collect();
    let saturated: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.summary.saturated_fraction)
        .collect();
    let mut m_counts = BTreeMap::new();
    for row in &rows {
        if let Some(m) = row.resolved_m {
            *m_counts.entry(m).or_insert(0) += 1;
        }
    }
    let refs = match params {
        CellParams::Dynamic { n, p, .. } => Some(dynamic_cell_refs(design, n, p)?),
        CellParams::Saturation { .. } => None,
    };
    Ok(CellResult {
        cell_id,
        params,
        m_counts,
        mean_degree: aggregate(&degrees)?,
        triangles: aggregate(&triangles)?,
        saturated_fraction: if saturated.len() >= 2 {
            Some(aggregate(&saturated)?)
        } else {
            None
        },
        rows,
        refs,
    })
}

/// Execute every cell of a design. `max_n` truncates the N grid;
/// `progress` is called once per completed cell.
pub fn run_design(
    design: &ExperimentDesign,
    max_n: Option<usize>,
    mut progress: Option<&mut dyn FnMut(usize, usize, &CellResult)>,
) -> Result<DesignResult> {
    design.validate()?;
    let cells = design.cells(max_n);
    if cells.is_empty() {
        return Err(Error::domain("design has no cells after applying max N"));
    }
    let mut results = Vec::with_capacity(cells.len());
    let mut failures = Vec::new();
    let total = cells.len();
    for (cell_id, params) in cells.into_iter().enumerate() {
        let rows = match params {
            CellParams::Dynamic {
                n,
                p,
                r_m,
                migration_mode,
            } => {
                let (rows, mut cell_failures) =
                    run_dynamic_cell(design, cell_id, n, p, r_m, migration_mode);
                failures.append(&mut cell_failures);
                rows
            }
            CellParams::Saturation {
                n,
                tie_prob,
                d_max,
                burnin_scale,
            } => run_saturation_cell(design, cell_id, n, tie_prob, d_max, burnin_scale)?,
        };
        if rows.len() < 2 {
            return Err(Error::domain(format!(
                "cell {cell_id} retained {} rows; need at least 2",
                rows.len()
            )));
        }
        let result = build_cell_result(design, cell_id, params, rows)?;
        if let Some(cb) = progress.as_deref_mut() {
            cb(cell_id, total, &result);
        }
        results.push(result);
    }
    Ok(DesignResult {
        design: design.clone(),
        cells: results,
        failures,
    })
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Render the per-replication CSV (exact header above; failed replications
/// as trailing `#` comment lines).
pub fn render_csv(result: &DesignResult) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    let design = &result.design;
    for cell in &result.cells {
        for row in &cell.rows {
            let (p_col, r_m_col, r_f_col, r_ell_col, horizon_col) = match cell.params {
                CellParams::Dynamic { p, r_m, .. } => (
                    p.to_string(),
                    r_m.to_string(),
                    design.r_f.to_string(),
                    design.r_ell.to_string(),
                    design.horizon.to_string(),
                ),
                CellParams::Saturation { .. } => {
                    (String::new(), String::new(), String::new(), String::new(), String::new())
                }
            };
            let refs = cell.refs.as_ref();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                design.name,
                cell.cell_id,
                cell.params.n(),
                fmt_opt(row.resolved_m),
                p_col,
                r_m_col,
                r_f_col,
                r_ell_col,
                horizon_col,
                row.rep,
                row.seed,
                row.summary.edge_count,
                row.summary.mean_degree,
                row.summary.triangle_count,
                fmt_opt(row.summary.saturated_fraction),
                fmt_opt(refs.map(|r| r.mean_degree_exact)),
                fmt_opt(refs.map(|r| r.mean_degree_limit)),
                fmt_opt(refs.map(|r| r.mean_degree_slow)),
                fmt_opt(refs.map(|r| r.triangles_bernoulli)),
            );
        }
    }
    for f in &result.failures {
        let _ = writeln!(
            out,
            "# failed: design={} cell={} rep={}: {}",
            design.name, f.cell_id, f.rep, f.message
        );
    }
    out
}

/// Write the CSV to a file.
pub fn emit_csv(result: &DesignResult, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, render_csv(result)).map_err(|e| Error::io(path, e))
}

fn write_series(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(w, "# {header}").map_err(io_err)?;
    for row in rows {
        let cols: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", cols.join("\t")).map_err(io_err)?;
    }
    Ok(())
}

fn series_key(x: f64) -> String {
    format!("{x}")
}

/// Emit plot-ready series files under `dir`.
///
/// Dynamic designs produce, per (P, r_m) combination, mean-degree and
/// triangle series against the varying axis (N when the N grid varies,
/// otherwise r_m), plus per-P reference series from the closed forms.
/// Saturation designs produce mean-degree and saturated-fraction series
/// against N plus the Chernoff fixed-point reference curve.
pub fn emit_plotdata(result: &DesignResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = &result.design.name;
    match &result.design.grid {
        DesignGrid::Factorial {
            n_values: _,
            p_values,
            r_m_values,
            ..
        } => {
            let n_axis = {
                let mut ns: Vec<usize> = result.cells.iter().map(|c| c.params.n()).collect();
                ns.dedup();
                ns.len() > 1
            };
            for &p in p_values {
                for &r_m in r_m_values {
                    let mut deg_rows = Vec::new();
                    let mut tri_rows = Vec::new();
                    for cell in &result.cells {
                        let CellParams::Dynamic { n, p: cp, r_m: cr, .. } = cell.params else {
                            continue;
                        };
                        if cp != p || cr != r_m {
                            continue;
                        }
                        let x = if n_axis { n as f64 } else { cr };
                        let d = &cell.mean_degree;
                        let t = &cell.triangles;
                        deg_rows.push(vec![x, d.mean, d.ci_lo, d.ci_hi]);
                        tri_rows.push(vec![x, t.mean, t.ci_lo, t.ci_hi]);
                    }
                    if deg_rows.is_empty() {
                        continue;
                    }
                    let axis = if n_axis { "N" } else { "r_m (log scale)" };
                    if n_axis {
                        let key = format!("P{}_rm{}", series_key(p), series_key(r_m));
                        write_series(
                            &dir.join(format!("deg_{key}.tsv")),
                            &format!("{name} mean_degree P={p} r_m={r_m} | columns: {axis} mean ci_lo ci_hi"),
                            &deg_rows,
                        )?;
                        write_series(
                            &dir.join(format!("tri_{key}.tsv")),
                            &format!("{name} triangles P={p} r_m={r_m} | columns: {axis} mean ci_lo ci_hi"),
                            &tri_rows,
                        )?;
                    } else {
                        // r_m on the x axis: one series per P, rows appended
                        // across the r_m loop below instead.
                    }
                }
                // Series against r_m (single-N designs).
                if !n_axis {
                    let mut deg_rows = Vec::new();
                    let mut tri_rows = Vec::new();
                    for cell in &result.cells {
                        let CellParams::Dynamic { p: cp, r_m: cr, .. } = cell.params else {
                            continue;
                        };
                        if cp != p {
                            continue;
                        }
                        let d = &cell.mean_degree;
                        let t = &cell.triangles;
                        deg_rows.push(vec![cr, d.mean, d.ci_lo, d.ci_hi]);
                        tri_rows.push(vec![cr, t.mean, t.ci_lo, t.ci_hi]);
                    }
                    let key = format!("P{}", series_key(p));
                    write_series(
                        &dir.join(format!("deg_{key}.tsv")),
                        &format!("{name} mean_degree P={p} | columns: r_m mean ci_lo ci_hi"),
                        &deg_rows,
                    )?;
                    write_series(
                        &dir.join(format!("tri_{key}.tsv")),
                        &format!("{name} triangles P={p} | columns: r_m mean ci_lo ci_hi"),
                        &tri_rows,
                    )?;
                }
                // Reference series per P.
                let mut ref_rows = Vec::new();
                for cell in &result.cells {
                    let CellParams::Dynamic { n, p: cp, .. } = cell.params else {
                        continue;
                    };
                    if cp != p {
                        continue;
                    }
                    if let Some(refs) = &cell.refs {
                        let x = if n_axis {
                            n as f64
                        } else if let CellParams::Dynamic { r_m, .. } = cell.params {
                            r_m
                        } else {
                            continue;
                        };
                        let row = vec![
                            x,
                            refs.mean_degree_exact,
                            refs.mean_degree_limit,
                            refs.mean_degree_slow,
                            refs.triangles_bernoulli,
                        ];
                        if !ref_rows.contains(&row) {
                            ref_rows.push(row);
                        }
                    }
                }
                let axis = if n_axis { "N" } else { "r_m" };
                write_series(
                    &dir.join(format!("ref_P{}.tsv", series_key(p))),
                    &format!("{name} references P={p} | columns: {axis} deg_exact deg_limit deg_slow triangles_bernoulli"),
                    &ref_rows,
                )?;
            }
        }
        DesignGrid::Saturation {
            tie_prob, d_max, ..
        } => {
            let mut deg_rows = Vec::new();
            let mut sat_rows = Vec::new();
            let mut ref_rows = Vec::new();
            for cell in &result.cells {
                let n = cell.params.n();
                let d = &cell.mean_degree;
                deg_rows.push(vec![n as f64, d.mean, d.ci_lo, d.ci_hi]);
                if let Some(s) = &cell.saturated_fraction {
                    sat_rows.push(vec![n as f64, s.mean, s.ci_lo, s.ci_hi]);
                }
                let fp = analytic::saturation_fixed_point(*tie_prob, *d_max as usize, n)
                    .unwrap_or(1.0);
                ref_rows.push(vec![n as f64, fp]);
            }
            write_series(
                &dir.join("mean_degree.tsv"),
                &format!("{name} mean_degree | columns: N mean ci_lo ci_hi"),
                &deg_rows,
            )?;
            write_series(
                &dir.join("saturated_fraction.tsv"),
                &format!("{name} saturated_fraction | columns: N mean ci_lo ci_hi"),
                &sat_rows,
            )?;
            write_series(
                &dir.join("ref_chernoff.tsv"),
                &format!("{name} chernoff_unsaturated_fixed_point | columns: N fixed_point"),
                &ref_rows,
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_design() -> ExperimentDesign {
        ExperimentDesign {
            name: "tiny".to_string(),
            grid: DesignGrid::Factorial {
                n_values: vec![20, 30],
                p_values: vec![5.0],
                r_m_values: vec![10.0],
                migration_mode: MigrationMode::UniformAll,
            },
            r_f: 1.0,
            r_ell: 5.0,
            horizon: 5.0,
            replications: 40,
            scale_factor: 0.1,
            master_seed: 99,
        }
    }

    #[test]
    fn builtin_grids_have_documented_shapes() {
        let fig3 = builtin_design("figure3").unwrap();
        assert_eq!(fig3.cells(None).len(), 21);
        if let DesignGrid::Factorial { r_m_values, .. } = &fig3.grid {
            assert_eq!(r_m_values.len(), 7);
            assert!((r_m_values[0] - 1.0 / 125.0).abs() < 1e-15);
            assert!((r_m_values[6] - 125.0).abs() < 1e-15);
        } else {
            panic!("figure3 should be factorial");
        }

        let fig2 = builtin_design("figure2_convergence").unwrap();
        assert_eq!(fig2.cells(None).len(), 120);
        let full_runs = fig2.cells(None).len() * fig2.replications;
        assert_eq!(full_runs, 120_000);
        assert_eq!(fig2.effective_replications(), 100);
        assert_eq!(fig2.cells(Some(400)).len(), 80);

        assert!(builtin_design("figure9").is_err());
        assert_eq!(builtin_design_names().len(), 4);
    }

    #[test]
    fn scale_factor_only_changes_replications() {
        let mut d = builtin_design("figure2").unwrap();
        d.scale_factor = 0.1;
        assert_eq!(d.effective_replications(), 100);
        assert_eq!(d.cells(None).len(), 120);
        d.scale_factor = 1.0;
        assert_eq!(d.effective_replications(), 1000);
        d.scale_factor = 0.001;
        assert_eq!(d.effective_replications(), 2);
    }

    #[test]
    fn aggregate_two_points() {
        let agg = aggregate(&[1.0, 3.0]).unwrap();
        assert_eq!(agg.mean, 2.0);
        // sample sd is sqrt(2); SE = sd/sqrt(2) = 1.
        assert!((agg.se - 1.0).abs() < 1e-15);
        assert!((agg.ci_lo - (2.0 - 1.96)).abs() < 1e-12);
        assert!(aggregate(&[1.0]).is_err());
    }

    #[test]
    fn zero_horizon_empty_rule_rows_match_seed_graph() {
        let design = ExperimentDesign {
            name: "t0".into(),
            grid: DesignGrid::Factorial {
                n_values: vec![10],
                p_values: vec![5.0],
                r_m_values: vec![1.0],
                migration_mode: MigrationMode::UniformAll,
            },
            r_f: 1.0,
            r_ell: 5.0,
            horizon: 0.0,
            replications: 2,
            scale_factor: 1.0,
            master_seed: 5,
        };
        // horizon 0 with Bernoulli seeding: each row is the seed graph.
        let result = run_design(&design, None, None).unwrap();
        for cell in &result.cells {
            for row in &cell.rows {
                let config = SimConfig {
                    n_vertices: 10,
                    foci: FociSpec::ExpectedLocalPop(5.0),
                    rates: RateParams::new(1.0, 5.0, 1.0).unwrap(),
                    horizon: 0.0,
                    migration_mode: MigrationMode::UniformAll,
                    initial_graph: InitialGraphRule::BernoulliAtAsymptoticMeanDegree,
                    seed: row.seed,
                };
                let direct = ctmc_sim::run(&config).unwrap();
                assert_eq!(row.summary, direct.summary);
            }
        }
    }

    #[test]
    fn run_design_is_deterministic_and_worker_independent() {
        let design = tiny_design();
        let a = render_csv(&run_design(&design, None, None).unwrap());
        let b = render_csv(&run_design(&design, None, None).unwrap());
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| render_csv(&run_design(&design, None, None).unwrap()));
        assert_eq!(a, c);
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let d = pool1.install(|| render_csv(&run_design(&design, None, None).unwrap()));
        assert_eq!(a, d);
    }

    #[test]
    fn csv_round_trips_through_parse() {
        let design = tiny_design();
        let result = run_design(&design, None, None).unwrap();
        let csv = render_csv(&result);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        // Re-aggregate the mean_degree column per cell and compare.
        let mut per_cell: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for line in lines.filter(|l| !l.starts_with('#')) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 19);
            let cell: usize = cols[1].parse().unwrap();
            per_cell.entry(cell).or_default().push(cols[12].parse().unwrap());
        }
        for cell in &result.cells {
            let values = &per_cell[&cell.cell_id];
            let agg = aggregate(values).unwrap();
            assert!((agg.mean - cell.mean_degree.mean).abs() < 1e-12);
            assert!((agg.se - cell.mean_degree.se).abs() < 1e-12);
        }
    }

    #[test]
    fn saturation_design_emits_fraction_and_plotdata() {
        let design = ExperimentDesign {
            name: "sat_tiny".into(),
            grid: DesignGrid::Saturation {
                n_values: vec![15, 25],
                tie_prob: 0.12,
                d_max: 3,
                burnin_scale: 0.05,
            },
            r_f: 1.0,
            r_ell: 5.0,
            horizon: 25.0,
            replications: 30,
            scale_factor: 1.0,
            master_seed: 7,
        };
        let result = run_design(&design, None, None).unwrap();
        assert_eq!(result.cells.len(), 2);
        for cell in &result.cells {
            assert!(cell.saturated_fraction.is_some());
            assert!(cell.refs.is_none());
            for row in &cell.rows {
                assert!(row.summary.saturated_fraction.is_some());
            }
        }
        let csv = render_csv(&result);
        // Saturation rows leave the dynamic-only columns empty.
        let line = csv.lines().nth(1).unwrap();
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[3], ""); // M
        assert_eq!(cols[4], ""); // P
        assert_eq!(cols[15], ""); // ref_mean_degree_exact

        let dir = std::env::temp_dir().join("contactnet-plotdata-test");
        let _ = fs::remove_dir_all(&dir);
        emit_plotdata(&result, &dir).unwrap();
        assert!(dir.join("mean_degree.tsv").exists());
        assert!(dir.join("saturated_fraction.tsv").exists());
        assert!(dir.join("ref_chernoff.tsv").exists());
    }

    #[test]
    fn factorial_plotdata_series_files_exist() {
        let design = tiny_design();
        let result = run_design(&design, None, None).unwrap();
        let dir = std::env::temp_dir().join("contactnet-plotdata-factorial");
        let _ = fs::remove_dir_all(&dir);
        emit_plotdata(&result, &dir).unwrap();
        assert!(dir.join("deg_P5_rm10.tsv").exists());
        assert!(dir.join("tri_P5_rm10.tsv").exists());
        assert!(dir.join("ref_P5.tsv").exists());
        let text = fs::read_to_string(dir.join("deg_P5_rm10.tsv")).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with('#'));
        assert_eq!(lines.count(), 2); // two N values
    }
}
