//! Closed-form equilibrium quantities for the contact formation process.
//!
//! Everything here is a pure function of its arguments: equilibrium mean
//! degrees in the fast- and slow-migration regimes, co-residence time
//! moments, the fast-limit edge probability, the logit decomposition that
//! recovers the sparse (per-edge weight N^-1) reference model, the
//! degree-saturation Chernoff bound with its fixed point, and the spatial
//! (voxel) variants of the decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn one() -> f64 {
    1.0
}

/// Event hazards of the dynamic process.
///
/// `formation` applies per non-adjacent same-focus pair, `dissolution` per
/// existing edge, `migration` per vertex. All are per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    #[serde(default = "one")]
    pub formation: f64,
    pub dissolution: f64,
    pub migration: f64,
}

impl RateParams {
    /// Validate: all rates finite and nonnegative. Individual operations
    /// additionally require strict positivity of the rates they divide by.
    pub fn new(formation: f64, dissolution: f64, migration: f64) -> Result<Self> {
        let rates = RateParams {
            formation,
            dissolution,
            migration,
        };
        rates.validate()?;
        Ok(rates)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("formation", self.formation),
            ("dissolution", self.dissolution),
            ("migration", self.migration),
        ] {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::domain(format!(
                    "{name} rate must be finite and nonnegative, got {r}"
                )));
            }
        }
        Ok(())
    }
}

/// Population structure: N vertices spread over M foci with expected local
/// population P = N/M (real-valued; M need not divide N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationParams {
    n_vertices: usize,
    n_foci: f64,
    expected_local_pop: f64,
}

impl PopulationParams {
    pub fn from_foci(n_vertices: usize, n_foci: usize) -> Result<Self> {
        if n_vertices == 0 || n_foci == 0 {
            return Err(Error::domain("N and M must be at least 1"));
        }
        Ok(PopulationParams {
            n_vertices,
            n_foci: n_foci as f64,
            expected_local_pop: n_vertices as f64 / n_foci as f64,
        })
    }

    pub fn from_local_pop(n_vertices: usize, expected_local_pop: f64) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::domain("N must be at least 1"));
        }
        if !expected_local_pop.is_finite()
            || expected_local_pop <= 0.0
            || expected_local_pop > n_vertices as f64
        {
            return Err(Error::domain(format!(
                "expected local population must lie in (0, N], got {expected_local_pop}"
            )));
        }
        Ok(PopulationParams {
            n_vertices,
            n_foci: n_vertices as f64 / expected_local_pop,
            expected_local_pop,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Focus count, real-valued so that P = N/M holds exactly.
    pub fn n_foci(&self) -> f64 {
        self.n_foci
    }

    pub fn expected_local_pop(&self) -> f64 {
        self.expected_local_pop
    }
}

fn require_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("{name} must be positive, got {x}")));
    }
    Ok(())
}

/// Equilibrium mean degree in the fast-migration regime at finite N:
/// ((N-1)/N) * [r_l/(r_f P) + 1/N]^-1.
pub fn mean_degree_fast(rates: &RateParams, pop: &PopulationParams) -> Result<f64> {
    if pop.n_vertices < 2 {
        return Err(Error::domain("mean_degree_fast requires N >= 2"));
    }
    require_positive("formation rate", rates.formation)?;
    require_positive("dissolution rate", rates.dissolution)?;
    let n = pop.n_vertices as f64;
    let p = pop.expected_local_pop;
    Ok((n - 1.0) / n / (rates.dissolution / (rates.formation * p) + 1.0 / n))
}

/// Large-N limit of the fast-regime mean degree: r_f P / r_l.
pub fn mean_degree_fast_limit(rates: &RateParams, expected_local_pop: f64) -> Result<f64> {
    require_positive("formation rate", rates.formation)?;
    require_positive("dissolution rate", rates.dissolution)?;
    require_positive("expected local population", expected_local_pop)?;
    Ok(rates.formation * expected_local_pop / rates.dissolution)
}

/// Equilibrium within-focus density when migration is negligible:
/// r_f / (r_f + r_l).
pub fn slow_local_density(rates: &RateParams) -> Result<f64> {
    require_positive("formation rate", rates.formation)?;
    if rates.dissolution < 0.0 || !rates.dissolution.is_finite() {
        return Err(Error::domain("dissolution rate must be nonnegative"));
    }
    Ok(rates.formation / (rates.formation + rates.dissolution))
}

/// Global mean degree in the slow-migration regime at finite N:
/// density * (N-1)/M.
pub fn slow_mean_degree(rates: &RateParams, pop: &PopulationParams) -> Result<f64> {
    let density = slow_local_density(rates)?;
    Ok(density * (pop.n_vertices as f64 - 1.0) / pop.n_foci)
}

/// Large-N limit of the slow-regime mean degree: density * P.
pub fn slow_mean_degree_limit(rates: &RateParams, expected_local_pop: f64) -> Result<f64> {
    require_positive("expected local population", expected_local_pop)?;
    Ok(slow_local_density(rates)? * expected_local_pop)
}

/// Ratio of slow- to fast-regime limiting mean degrees: r_l / (r_f + r_l).
///
/// Meaningful for M > 1; the two regimes coincide at M = 1.
pub fn slow_fast_ratio(rates: &RateParams) -> Result<f64> {
    require_positive("formation rate", rates.formation)?;
    require_positive("dissolution rate", rates.dissolution)?;
    Ok(rates.dissolution / (rates.formation + rates.dissolution))
}

/// Mean and variance of the co-residence time C_t accumulated by a vertex
/// pair over the prior `t` time units: (t/M, t/(r_m M)).
pub fn coresidence_moments(rates: &RateParams, n_foci: usize, t: f64) -> Result<(f64, f64)> {
    if n_foci == 0 {
        return Err(Error::domain("M must be at least 1"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("t must be nonnegative, got {t}")));
    }
    require_positive("migration rate", rates.migration)?;
    if t == 0.0 {
        return Ok((0.0, 0.0));
    }
    let m = n_foci as f64;
    Ok((t / m, t / (rates.migration * m)))
}

/// Probability that a dyad is tied at a random observation time in the
/// fast-migration limit, where C_t concentrates at t/M:
/// (r_f/M) / (r_l + r_f/M).
pub fn edge_probability_fast_limit(rates: &RateParams, n_foci: usize) -> Result<f64> {
    if n_foci == 0 {
        return Err(Error::domain("M must be at least 1"));
    }
    require_positive("formation rate", rates.formation)?;
    require_positive("dissolution rate", rates.dissolution)?;
    let local = rates.formation / n_foci as f64;
    Ok(local / (rates.dissolution + local))
}

/// Upper bound on the dyad tie probability over all co-residence histories:
/// 1 - r_l/(r_f + r_l), attained when the pair is never separated.
pub fn edge_probability_upper_bound(rates: &RateParams) -> Result<f64> {
    slow_local_density(rates)
}

/// The two components of the equilibrium logit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiParts {
    /// Edge parameter.
    pub theta_e: f64,
    /// Log of the per-edge reference weight.
    pub log_measure_rate: f64,
}

impl PsiParts {
    pub fn total(&self) -> f64 {
        self.theta_e + self.log_measure_rate
    }
}

/// Sparse-regime equilibrium logit: log(r_f P / r_l) - log N.
pub fn psi(rates: &RateParams, pop: &PopulationParams) -> Result<f64> {
    Ok(psi_decomposition(rates, pop)?.total())
}

/// Decomposition of `psi` into the edge parameter log(r_f P / r_l) and the
/// per-edge log reference weight -log N (so each edge carries weight 1/N).
pub fn psi_decomposition(rates: &RateParams, pop: &PopulationParams) -> Result<PsiParts> {
    let limit = mean_degree_fast_limit(rates, pop.expected_local_pop)?;
    Ok(PsiParts {
        theta_e: limit.ln(),
        log_measure_rate: -(pop.n_vertices as f64).ln(),
    })
}

/// Exact logit of the finite-N fast-regime density: logit(d / (N-1)).
///
/// The gap between this and [`psi`] quantifies the sparse-regime
/// approximation error.
pub fn psi_exact(rates: &RateParams, pop: &PopulationParams) -> Result<f64> {
    let d = mean_degree_fast(rates, pop)?;
    let n1 = pop.n_vertices as f64 - 1.0;
    if d >= n1 {
        return Err(Error::domain(format!(
            "mean degree {d} must be below N-1 = {n1} for the exact logit"
        )));
    }
    let density = d / n1;
    Ok((density / (1.0 - density)).ln())
}

/// Chernoff upper bound on the unsaturated fraction F_u, given tie
/// probability `p`, degree cap `d_max`, population `n`, and a hypothesized
/// unsaturated fraction `f_u`:
/// exp(-(p F_u (N-1) - d_max + 1)^2 / (2 p F_u (N-1))).
///
/// The bound only applies above the mean of the underlying binomial; below
/// it the function returns the vacuous bound 1.
pub fn saturation_bound(p: f64, d_max: usize, n: usize, f_u: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("p must lie in (0, 1), got {p}")));
    }
    if d_max < 1 {
        return Err(Error::domain("d_max must be at least 1"));
    }
    if n < 2 {
        return Err(Error::domain("saturation bound requires N >= 2"));
    }
    if !(f_u > 0.0 && f_u <= 1.0) {
        return Err(Error::domain(format!("F_u must lie in (0, 1], got {f_u}")));
    }
    let mean = p * f_u * (n as f64 - 1.0);
    let dev = mean - (d_max as f64 - 1.0);
    if dev < 0.0 {
        return Ok(1.0);
    }
    Ok((-dev * dev / (2.0 * mean)).exp())
}

/// Largest F_u in (0, 1] satisfying F_u <= saturation_bound(F_u), located by
/// bisection to absolute tolerance 1e-9.
///
/// The bound is non-increasing in F_u, so g(F) = bound(F) - F crosses zero
/// exactly once (or stays positive, in which case the fixed point is 1).
pub fn saturation_fixed_point(p: f64, d_max: usize, n: usize) -> Result<f64> {
    if saturation_bound(p, d_max, n, 1.0)? >= 1.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (1e-12_f64, 1.0_f64);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if saturation_bound(p, d_max, n, mid)? >= mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Spatial setting: a region of volume V discretized into voxels of volume
/// v, with optional hypercube geometry (linear dimensions L and l in k
/// dimensions, so V = L^k and v = l^k).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialParams {
    system_volume: f64,
    voxel_volume: f64,
    population_density: Option<f64>,
    linear_dims: Option<(f64, f64, u32)>,
}

impl SpatialParams {
    pub fn new(system_volume: f64, voxel_volume: f64, population_density: Option<f64>) -> Result<Self> {
        require_positive("system volume", system_volume)?;
        require_positive("voxel volume", voxel_volume)?;
        if voxel_volume > system_volume {
            return Err(Error::domain(format!(
                "voxel volume {voxel_volume} exceeds system volume {system_volume}"
            )));
        }
        if let Some(rho) = population_density {
            require_positive("population density", rho)?;
        }
        Ok(SpatialParams {
            system_volume,
            voxel_volume,
            population_density,
            linear_dims: None,
        })
    }

    /// Hypercube geometry: system of linear dimension `big_l`, voxels of
    /// linear dimension `small_l`, in `dims` dimensions.
    pub fn hypercube(big_l: f64, small_l: f64, dims: u32, population_density: Option<f64>) -> Result<Self> {
        require_positive("system linear dimension", big_l)?;
        require_positive("voxel linear dimension", small_l)?;
        if dims == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        let mut s = SpatialParams::new(big_l.powi(dims as i32), small_l.powi(dims as i32), population_density)?;
        s.linear_dims = Some((big_l, small_l, dims));
        Ok(s)
    }

    pub fn system_volume(&self) -> f64 {
        self.system_volume
    }

    pub fn voxel_volume(&self) -> f64 {
        self.voxel_volume
    }

    pub fn population_density(&self) -> Option<f64> {
        self.population_density
    }

    pub fn linear_dims(&self) -> Option<(f64, f64, u32)> {
        self.linear_dims
    }
}

/// Where the volume terms live in the spatial decomposition. All three
/// conventions leave the total logit unchanged; they only shift constants
/// between the edge parameter and the reference weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureConvention {
    /// theta_e = log(r_f v / r_l), per-edge log weight -log V.
    Volume,
    /// theta_e = log(r_f / r_l), per-edge log weight log(v/V).
    RelativeVoxel,
    /// theta_e = log(r_f / (V r_l)), per-edge log weight log v.
    Voxel,
}

impl MeasureConvention {
    pub const ALL: [MeasureConvention; 3] = [
        MeasureConvention::Volume,
        MeasureConvention::RelativeVoxel,
        MeasureConvention::Voxel,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MeasureConvention::Volume => "volume",
            MeasureConvention::RelativeVoxel => "relative-voxel",
            MeasureConvention::Voxel => "voxel",
        }
    }
}

/// Spatial decomposition of the equilibrium logit under the chosen
/// convention. The total is log(r_f v / r_l) - log V in every case.
pub fn spatial_psi(
    rates: &RateParams,
    spatial: &SpatialParams,
    convention: MeasureConvention,
) -> Result<PsiParts> {
    require_positive("formation rate", rates.formation)?;
    require_positive("dissolution rate", rates.dissolution)?;
    let (big_v, small_v) = (spatial.system_volume, spatial.voxel_volume);
    let (rf, rl) = (rates.formation, rates.dissolution);
    let parts = match convention {
        MeasureConvention::Volume => PsiParts {
            theta_e: (rf * small_v / rl).ln(),
            log_measure_rate: -big_v.ln(),
        },
        MeasureConvention::RelativeVoxel => PsiParts {
            theta_e: (rf / rl).ln(),
            log_measure_rate: (small_v / big_v).ln(),
        },
        MeasureConvention::Voxel => PsiParts {
            theta_e: (rf / (big_v * rl)).ln(),
            log_measure_rate: small_v.ln(),
        },
    };
    Ok(parts)
}
