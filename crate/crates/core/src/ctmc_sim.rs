//! Event-driven continuous-time simulation of the contact formation process.
//!
//! Three event categories with piecewise-constant hazards between events:
//! tie formation on non-adjacent same-focus pairs, tie dissolution on
//! existing edges, and vertex migration between foci. Simulation uses the
//! direct method: draw an exponential waiting time at the total rate, pick
//! the category in proportion to its aggregate rate, then pick a uniform
//! target within the category.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::RateParams;
use crate::error::{Error, Result};
use crate::graph::SimpleGraph;
use crate::graph_state::{DynamicState, FocusRule};
use crate::graph_stats::{summarize, GraphSummary};
use crate::rng::{exp_time, rng_from_seed, SimRng};

/// Focus structure of a run: an explicit focus count, or an expected local
/// population P from which the count is resolved per replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FociSpec {
    Count(usize),
    ExpectedLocalPop(f64),
}

/// Destination law for migration events. Total per-vertex hazard is the
/// migration rate under either mode; only the destination differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MigrationMode {
    /// Uniform over all M foci; moving to the current focus is a no-op
    /// event. Co-location probability is exactly 1/M per event regardless
    /// of the starting position.
    UniformAll,
    /// Uniform over the other M-1 foci (hazard r_m/(M-1) toward each).
    /// With a single focus no migration can occur under this mode.
    ExcludeCurrent,
}

impl Default for MigrationMode {
    fn default() -> Self {
        MigrationMode::UniformAll
    }
}

/// Initial graph for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialGraphRule {
    Empty,
    /// Bernoulli graph at tie probability min(1, (r_f P / r_l) / (N-1)),
    /// seeding the run at the asymptotic mean degree.
    BernoulliAtAsymptoticMeanDegree,
    /// Explicit edge list, optionally with an explicit focus assignment
    /// (1-based focus ids, matching the text format). Explicit foci require
    /// an explicit focus count in `FociSpec`.
    Explicit {
        edges: Vec<(u32, u32)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        foci: Option<Vec<u32>>,
    },
}

impl Default for InitialGraphRule {
    fn default() -> Self {
        InitialGraphRule::BernoulliAtAsymptoticMeanDegree
    }
}

fn default_horizon() -> f64 {
    25.0
}

/// Everything that determines one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_vertices: usize,
    pub foci: FociSpec,
    pub rates: RateParams,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub migration_mode: MigrationMode,
    #[serde(default)]
    pub initial_graph: InitialGraphRule,
    #[serde(default)]
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_vertices == 0 {
            return Err(Error::domain("n_vertices must be at least 1"));
        }
        self.rates.validate()?;
        if !self.horizon.is_finite() || self.horizon < 0.0 {
            return Err(Error::domain(format!(
                "horizon must be finite and nonnegative, got {}",
                self.horizon
            )));
        }
        match self.foci {
            FociSpec::Count(m) => {
                if m == 0 {
                    return Err(Error::domain("focus count must be at least 1"));
                }
            }
            FociSpec::ExpectedLocalPop(p) => {
                if !(p >= 1.0) || p > self.n_vertices as f64 {
                    return Err(Error::domain(format!(
                        "expected local population must lie in [1, N], got {p}"
                    )));
                }
            }
        }
        if let InitialGraphRule::Explicit { foci: Some(_), .. } = &self.initial_graph {
            if !matches!(self.foci, FociSpec::Count(_)) {
                return Err(Error::domain(
                    "explicit initial foci require an explicit focus count",
                ));
            }
        }
        Ok(())
    }

    /// Expected local population implied by the focus spec.
    pub fn expected_local_pop(&self) -> f64 {
        match self.foci {
            FociSpec::Count(m) => self.n_vertices as f64 / m as f64,
            FociSpec::ExpectedLocalPop(p) => p,
        }
    }
}

/// Resolve an expected local population P into a focus count.
///
/// If N/P is an integer, that count is returned. Otherwise the count is
/// randomized between floor(N/P) and ceil(N/P) with the weight w on the
/// floor chosen so that w (N/M_lo) + (1-w)(N/M_hi) = P, preserving the
/// average local population across replications.
pub fn resolve_foci(n_vertices: usize, p: f64, rng: &mut impl Rng) -> Result<usize> {
    if !(p >= 1.0) || p > n_vertices as f64 {
        return Err(Error::domain(format!(
            "expected local population must lie in [1, N], got {p}"
        )));
    }
    let ratio = n_vertices as f64 / p;
    let rounded = ratio.round();
    if (ratio - rounded).abs() < 1e-9 * ratio.max(1.0) {
        return Ok(rounded as usize);
    }
    let m_lo = ratio.floor() as usize;
    let m_hi = m_lo + 1;
    let p_lo = n_vertices as f64 / m_lo as f64;
    let p_hi = n_vertices as f64 / m_hi as f64;
    let w = (p - p_hi) / (p_lo - p_hi);
    Ok(if rng.random::<f64>() < w { m_lo } else { m_hi })
}

/// Aggregate event rates of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTotals {
    pub formation: f64,
    pub dissolution: f64,
    pub migration: f64,
}

impl RateTotals {
    pub fn total(&self) -> f64 {
        self.formation + self.dissolution + self.migration
    }
}

/// Aggregate rates: r_f times the at-risk pair count, r_l times the edge
/// count, r_m times the vertex count (zero under `ExcludeCurrent` with a
/// single focus, where no destination exists).
pub fn total_rates(state: &DynamicState, rates: &RateParams, mode: MigrationMode) -> RateTotals {
    let migratable = if mode == MigrationMode::ExcludeCurrent && state.n_foci() == 1 {
        0
    } else {
        state.n_vertices()
    };
    RateTotals {
        formation: rates.formation * state.at_risk_total() as f64,
        dissolution: rates.dissolution * state.total_edges() as f64,
        migration: rates.migration * migratable as f64,
    }
}

/// One applied transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Event {
    Formation { u: u32, v: u32 },
    Dissolution { u: u32, v: u32 },
    Migration { vertex: u32, from: u32, to: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Formation,
    Dissolution,
    Migration,
}

/// Pick an event category with probability proportional to its aggregate
/// rate. Requires a strictly positive total.
pub fn sample_event_kind(totals: &RateTotals, rng: &mut impl Rng) -> EventKind {
    debug_assert!(totals.total() > 0.0);
    let x = rng.random::<f64>() * totals.total();
    if x < totals.formation {
        EventKind::Formation
    } else if x < totals.formation + totals.dissolution {
        EventKind::Dissolution
    } else {
        EventKind::Migration
    }
}

fn apply_event(
    state: &mut DynamicState,
    kind: EventKind,
    mode: MigrationMode,
    rng: &mut impl Rng,
) -> Event {
    match kind {
        EventKind::Formation => {
            let (u, v) = state
                .sample_at_risk_pair(rng)
                .expect("formation event with no at-risk pair");
            state.toggle_edge(u, v, true);
            Event::Formation { u, v }
        }
        EventKind::Dissolution => {
            let (u, v) = state
                .sample_uniform_edge(rng)
                .expect("dissolution event with no edges");
            state.toggle_edge(u, v, false);
            Event::Dissolution { u, v }
        }
        EventKind::Migration => {
            let m = state.n_foci();
            let vertex = rng.random_range(0..state.n_vertices()) as u32;
            let from = state.focus_of(vertex);
            let to = match mode {
                MigrationMode::UniformAll => rng.random_range(0..m) as u32,
                MigrationMode::ExcludeCurrent => {
                    debug_assert!(m > 1, "migration event with a single focus");
                    let d = rng.random_range(0..m - 1) as u32;
                    if d >= from {
                        d + 1
                    } else {
                        d
                    }
                }
            };
            state.migrate(vertex, to);
            Event::Migration { vertex, from, to }
        }
    }
}

/// Advance the state by one event. Returns the elapsed waiting time and the
/// event applied, or a stalled-process error when the total rate is zero
/// (impossible while r_m > 0 with more than one focus).
pub fn step(
    state: &mut DynamicState,
    rates: &RateParams,
    mode: MigrationMode,
    rng: &mut impl Rng,
) -> Result<(f64, Event)> {
    let totals = total_rates(state, rates, mode);
    if totals.total() <= 0.0 {
        return Err(Error::Stalled);
    }
    let dt = exp_time(rng, totals.total());
    let kind = sample_event_kind(&totals, rng);
    Ok((dt, apply_event(state, kind, mode, rng)))
}

/// Event log of one run, sufficient to replay it exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub n_vertices: usize,
    pub n_foci: usize,
    /// 0-based initial focus assignment.
    pub initial_foci: Vec<u32>,
    pub initial_edges: Vec<(u32, u32)>,
    pub events: Vec<(f64, Event)>,
}

impl Trajectory {
    /// Rebuild the final state by applying the event log to the initial
    /// state.
    pub fn replay(&self) -> Result<DynamicState> {
        let mut rng = rng_from_seed(0); // unused: explicit focus rule
        let mut state = DynamicState::new(
            self.n_vertices,
            self.n_foci,
            FocusRule::Explicit(&self.initial_foci),
            &self.initial_edges,
            &mut rng,
        )?;
        for &(_, event) in &self.events {
            match event {
                Event::Formation { u, v } => state.toggle_edge(u, v, true),
                Event::Dissolution { u, v } => state.toggle_edge(u, v, false),
                Event::Migration { vertex, to, .. } => state.migrate(vertex, to),
            }
        }
        Ok(state)
    }

    /// Line-delimited JSON: one header record, then one record per event.
    pub fn write_ldjson(&self, mut w: impl Write) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Header<'a> {
            n_vertices: usize,
            n_foci: usize,
            initial_foci: Vec<u32>, // 1-based in the emitted form
            initial_edges: &'a [(u32, u32)],
        }
        let header = Header {
            n_vertices: self.n_vertices,
            n_foci: self.n_foci,
            initial_foci: self.initial_foci.iter().map(|&k| k + 1).collect(),
            initial_edges: &self.initial_edges,
        };
        writeln!(w, "{}", serde_json::to_string(&header)?)?;
        #[derive(Serialize)]
        struct Record {
            t: f64,
            event: Event,
        }
        for &(t, event) in &self.events {
            writeln!(w, "{}", serde_json::to_string(&Record { t, event })?)?;
        }
        Ok(())
    }
}

/// Outcome of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Focus count actually used (resolved from P when randomized).
    pub resolved_m: usize,
    pub summary: GraphSummary,
    pub graph: SimpleGraph,
}

/// Simulate one trajectory to the horizon and summarize the final graph.
/// Deterministic: identical configs (including seed) give identical output.
pub fn run(config: &SimConfig) -> Result<RunOutput> {
    Ok(run_impl(config, false)?.0)
}

/// As [`run`], also returning the full event log.
pub fn run_with_trajectory(config: &SimConfig) -> Result<(RunOutput, Trajectory)> {
    let (out, traj) = run_impl(config, true)?;
    Ok((out, traj.expect("trajectory requested")))
}

fn run_impl(config: &SimConfig, record: bool) -> Result<(RunOutput, Option<Trajectory>)> {
    config.validate()?;
    let mut rng: SimRng = rng_from_seed(config.seed);
    let n = config.n_vertices;

    let m = match config.foci {
        FociSpec::Count(m) => m,
        FociSpec::ExpectedLocalPop(p) => resolve_foci(n, p, &mut rng)?,
    };

    let explicit_foci: Option<Vec<u32>> = match &config.initial_graph {
        InitialGraphRule::Explicit { foci: Some(foci), .. } => {
            let mut converted = Vec::with_capacity(foci.len());
            for &k in foci {
                if k == 0 || k as usize > m {
                    return Err(Error::domain(format!(
                        "focus id {k} out of range 1..={m}"
                    )));
                }
                converted.push(k - 1);
            }
            Some(converted)
        }
        _ => None,
    };

    let initial_edges: Vec<(u32, u32)> = match &config.initial_graph {
        InitialGraphRule::Empty => Vec::new(),
        InitialGraphRule::BernoulliAtAsymptoticMeanDegree => {
            let p_loc = n as f64 / m as f64;
            let p_tie = if n < 2 {
                0.0
            } else if config.rates.dissolution > 0.0 {
                (config.rates.formation * p_loc
                    / (config.rates.dissolution * (n as f64 - 1.0)))
                    .min(1.0)
            } else {
                return Err(Error::domain(
                    "Bernoulli seeding needs a positive dissolution rate",
                ));
            };
            crate::static_samplers::sample_bernoulli(n, p_tie, &mut rng)?
                .edges()
                .to_vec()
        }
        InitialGraphRule::Explicit { edges, .. } => edges.clone(),
    };

    let focus_rule = match &explicit_foci {
        Some(foci) => FocusRule::Explicit(foci),
        None => FocusRule::UniformIid,
    };
    let mut state = DynamicState::new(n, m, focus_rule, &initial_edges, &mut rng)?;

    let mut trajectory = record.then(|| Trajectory {
        n_vertices: n,
        n_foci: m,
        initial_foci: state.focus_assignment().to_vec(),
        initial_edges: state.edges().to_vec(),
        events: Vec::new(),
    });

    let mut t = 0.0;
    loop {
        let totals = total_rates(&state, &config.rates, config.migration_mode);
        let total = totals.total();
        if total <= 0.0 {
            break; // frozen state: nothing can ever fire again
        }
        let dt = exp_time(&mut rng, total);
        if dt >= config.horizon - t {
            break;
        }
        t += dt;
        let kind = sample_event_kind(&totals, &mut rng);
        let event = apply_event(&mut state, kind, config.migration_mode, &mut rng);
        if let Some(traj) = &mut trajectory {
            traj.events.push((t, event));
        }
    }

    let graph = state.to_graph();
    let summary = summarize(&graph, None);
    Ok((
        RunOutput {
            resolved_m: m,
            summary,
            graph,
        },
        trajectory,
    ))
}
