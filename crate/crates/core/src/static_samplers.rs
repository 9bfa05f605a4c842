//! Cross-sectional reference-model samplers.
//!
//! Three families: homogeneous Bernoulli graphs, the sparse reference whose
//! per-dyad odds carry a 1/N weight so that mean degree stays constant as N
//! grows, and the degree-capped edge-only model sampled by Metropolis dyad
//! toggling.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{pair_count, SimpleGraph};
use crate::rng::{rng_from_seed, SimRng};

/// Homogeneous Bernoulli graph: each dyad present independently with
/// probability `p`. Sparse draws use geometric skips over the dyad sequence
/// rather than one coin per dyad.
pub fn sample_bernoulli(n_vertices: usize, p: f64, rng: &mut impl Rng) -> Result<SimpleGraph> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::domain(format!("p must lie in [0, 1], got {p}")));
    }
    if p == 0.0 || n_vertices < 2 {
        return Ok(SimpleGraph::empty(n_vertices));
    }
    let mut edges = Vec::new();
    if p == 1.0 {
        for u in 0..n_vertices as u32 {
            for v in (u + 1)..n_vertices as u32 {
                edges.push((u, v));
            }
        }
        return Ok(SimpleGraph::from_canonical_edges(n_vertices, edges));
    }
    // Batagelj-Brandes: jump ahead by Geometric(p) positions in the
    // row-by-row enumeration of dyads (v, w) with w < v.
    let log_q = (1.0 - p).ln();
    let mut v: usize = 1;
    let mut w: i64 = -1;
    while v < n_vertices {
        let u = 1.0 - rng.random::<f64>(); // (0, 1]
        let skip = (u.ln() / log_q).floor() as i64;
        w += 1 + skip;
        while w >= v as i64 && v < n_vertices {
            w -= v as i64;
            v += 1;
        }
        if v < n_vertices {
            edges.push((w as u32, v as u32));
        }
    }
    edges.sort_unstable();
    Ok(SimpleGraph::from_canonical_edges(n_vertices, edges))
}

/// Per-dyad tie probability of the sparse reference at mean-degree target
/// `d`: logit^-1(log d - log N) = d / (N + d).
pub fn sparse_reference_tie_probability(n_vertices: usize, mean_degree_target: f64) -> Result<f64> {
    if n_vertices == 0 {
        return Err(Error::domain("N must be at least 1"));
    }
    if !(mean_degree_target > 0.0) || !mean_degree_target.is_finite() {
        return Err(Error::domain(format!(
            "mean degree target must be positive, got {mean_degree_target}"
        )));
    }
    Ok(mean_degree_target / (n_vertices as f64 + mean_degree_target))
}

/// Expected mean degree implied by the sparse reference: (N-1) p.
pub fn sparse_reference_expected_mean_degree(
    n_vertices: usize,
    mean_degree_target: f64,
) -> Result<f64> {
    let p = sparse_reference_tie_probability(n_vertices, mean_degree_target)?;
    Ok((n_vertices as f64 - 1.0) * p)
}

/// Draw from the sparse (per-edge weight 1/N) reference model with the given
/// mean-degree target: a Bernoulli graph at the implied tie probability.
pub fn sample_krivitsky(
    n_vertices: usize,
    mean_degree_target: f64,
    rng: &mut impl Rng,
) -> Result<SimpleGraph> {
    let p = sparse_reference_tie_probability(n_vertices, mean_degree_target)?;
    sample_bernoulli(n_vertices, p, rng)
}

/// Expected triangle count of a Bernoulli graph: C(N, 3) p^3.
pub fn expected_triangles_bernoulli(n_vertices: usize, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::domain(format!("p must lie in [0, 1], got {p}")));
    }
    let n = n_vertices as f64;
    Ok(n * (n - 1.0) * (n - 2.0) / 6.0 * p.powi(3))
}

/// Edge-only model with a hard degree cap, sampled by Metropolis toggling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstrainedModel {
    pub n_vertices: usize,
    pub tie_prob: f64,
    pub d_max: u32,
    /// Toggle attempts discarded before the first retained draw.
    pub burnin: u64,
    /// Toggle attempts between retained draws (holds included).
    pub thinning: u64,
}

impl ConstrainedModel {
    pub fn new(n_vertices: usize, tie_prob: f64, d_max: u32, burnin: u64, thinning: u64) -> Result<Self> {
        if n_vertices < 2 {
            return Err(Error::domain("constrained model requires N >= 2"));
        }
        if !(tie_prob > 0.0 && tie_prob < 1.0) {
            return Err(Error::domain(format!(
                "tie probability must lie in (0, 1), got {tie_prob}"
            )));
        }
        if d_max < 1 || d_max as usize > n_vertices - 1 {
            return Err(Error::domain(format!(
                "d_max must lie in [1, N-1], got {d_max}"
            )));
        }
        Ok(ConstrainedModel {
            n_vertices,
            tie_prob,
            d_max,
            burnin,
            thinning,
        })
    }

    /// Burnin of 500 C(N,2) and thinning of 250 C(N,2) toggle attempts,
    /// scaled by `scale` (1.0 reproduces the reference protocol; the desk
    /// default elsewhere is 0.1).
    pub fn with_protocol_scale(n_vertices: usize, tie_prob: f64, d_max: u32, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::domain(format!("scale must be positive, got {scale}")));
        }
        let dyads = pair_count(n_vertices as u64) as f64;
        ConstrainedModel::new(
            n_vertices,
            tie_prob,
            d_max,
            (500.0 * dyads * scale).round() as u64,
            (250.0 * dyads * scale).round() as u64,
        )
    }
}

/// Metropolis chain over graphs with maximum degree <= d_max, stationary on
/// p^t_e (1-p)^(C(N,2)-t_e) restricted to that support.
///
/// Each step proposes a uniform dyad toggle. A toggle that would push either
/// endpoint past the cap is rejected (the chain holds); otherwise additions
/// are accepted with probability min(1, p/(1-p)) and deletions with
/// min(1, (1-p)/p).
pub struct ConstrainedChain {
    model: ConstrainedModel,
    rng: SimRng,
    present: Vec<bool>,
    degrees: Vec<u32>,
    edge_count: u64,
    saturated: u64,
    accept_add: f64,
    accept_del: f64,
}

impl ConstrainedChain {
    /// Start from the empty graph (always in the support).
    pub fn new(model: ConstrainedModel, seed: u64) -> Self {
        let n = model.n_vertices;
        let odds = model.tie_prob / (1.0 - model.tie_prob);
        ConstrainedChain {
            model,
            rng: rng_from_seed(seed),
            present: vec![false; pair_count(n as u64) as usize],
            degrees: vec![0; n],
            edge_count: 0,
            saturated: 0,
            accept_add: odds.min(1.0),
            accept_del: (1.0 / odds).min(1.0),
        }
    }

    #[inline]
    fn slot(&self, u: u32, v: u32) -> usize {
        debug_assert!(u < v);
        let v = v as u64;
        (u as u64 + v * (v - 1) / 2) as usize
    }

    /// One toggle attempt.
    pub fn step(&mut self) {
        let n = self.model.n_vertices as u32;
        let a = self.rng.random_range(0..n);
        let mut b = self.rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        let slot = self.slot(u, v);
        if self.present[slot] {
            if self.accept_del >= 1.0 || self.rng.random::<f64>() < self.accept_del {
                self.present[slot] = false;
                self.edge_count -= 1;
                for w in [u, v] {
                    if self.degrees[w as usize] == self.model.d_max {
                        self.saturated -= 1;
                    }
                    self.degrees[w as usize] -= 1;
                }
            }
        } else {
            if self.degrees[u as usize] >= self.model.d_max
                || self.degrees[v as usize] >= self.model.d_max
            {
                return; // hold: proposal leaves the support
            }
            if self.accept_add >= 1.0 || self.rng.random::<f64>() < self.accept_add {
                self.present[slot] = true;
                self.edge_count += 1;
                for w in [u, v] {
                    self.degrees[w as usize] += 1;
                    if self.degrees[w as usize] == self.model.d_max {
                        self.saturated += 1;
                    }
                }
            }
        }
    }

    pub fn run_burnin(&mut self) {
        for _ in 0..self.model.burnin {
            self.step();
        }
    }

    /// Advance by the thinning interval and return the resulting state.
    pub fn next_draw(&mut self) -> SimpleGraph {
        for _ in 0..self.model.thinning {
            self.step();
        }
        self.current_graph()
    }

    pub fn current_graph(&self) -> SimpleGraph {
        let n = self.model.n_vertices;
        let mut edges = Vec::with_capacity(self.edge_count as usize);
        for v in 1..n as u32 {
            for u in 0..v {
                if self.present[self.slot(u, v)] {
                    edges.push((u, v));
                }
            }
        }
        SimpleGraph::from_canonical_edges(n, edges)
    }

    pub fn edge_count(&self) -> u64 {
        self.edge_count
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edge_count as f64 / self.model.n_vertices as f64
    }

    pub fn saturated_fraction(&self) -> f64 {
        self.saturated as f64 / self.model.n_vertices as f64
    }
}

/// Burn in a fresh chain and retain `n_draws` states, one per thinning
/// interval.
pub fn sample_constrained(model: ConstrainedModel, n_draws: usize, seed: u64) -> Vec<SimpleGraph> {
    let mut chain = ConstrainedChain::new(model, seed);
    chain.run_burnin();
    (0..n_draws).map(|_| chain.next_draw()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_stats::summarize;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn bernoulli_degenerate_probabilities() {
        let mut rng = rng_from_seed(30);
        let empty = sample_bernoulli(10, 0.0, &mut rng).unwrap();
        assert_eq!(empty.edge_count(), 0);
        let full = sample_bernoulli(10, 1.0, &mut rng).unwrap();
        assert_eq!(full.edge_count(), 45);
    }

    #[test]
    fn bernoulli_rejects_bad_probability() {
        let mut rng = rng_from_seed(30);
        assert!(sample_bernoulli(10, -0.1, &mut rng).is_err());
        assert!(sample_bernoulli(10, 1.1, &mut rng).is_err());
    }

    #[test]
    fn bernoulli_edge_count_matches_binomial() {
        // Edge count ~ Binomial(4950, 0.1), mean 495, var 445.5.
        let (n, p, draws) = (100usize, 0.1, 10_000usize);
        let mut rng = rng_from_seed(31);
        let mut sum = 0u64;
        for _ in 0..draws {
            sum += sample_bernoulli(n, p, &mut rng).unwrap().edge_count() as u64;
        }
        let mean = sum as f64 / draws as f64;
        let se = (4950.0 * p * (1.0 - p) / draws as f64).sqrt();
        assert!(
            (mean - 495.0).abs() < 3.0 * se,
            "mean {mean} vs 495 (3se {})",
            3.0 * se
        );
    }

    #[test]
    fn bernoulli_skip_sampling_marginals_are_uniform() {
        // Every dyad should be included at the same rate; pool a chi-square
        // over all 45 dyads of a 10-vertex graph.
        let (n, p, draws) = (10usize, 0.35, 20_000usize);
        let mut rng = rng_from_seed(32);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            for &e in sample_bernoulli(n, p, &mut rng).unwrap().edges() {
                *counts.entry(e).or_insert(0u64) += 1;
            }
        }
        let expected = p * draws as f64;
        let mut chi2 = 0.0;
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                let c = *counts.get(&(u, v)).unwrap_or(&0) as f64;
                chi2 += (c - expected).powi(2) / (expected * (1.0 - p));
            }
        }
        let crit = ChiSquared::new(45.0).unwrap().inverse_cdf(0.999);
        assert!(chi2 < crit, "chi2 {chi2} >= {crit}");
    }

    #[test]
    fn sparse_reference_probability_and_limit() {
        // (N-1) d/(N+d) -> d as N grows.
        let d = 2.0;
        let implied = sparse_reference_expected_mean_degree(100_000, d).unwrap();
        assert!((implied - d).abs() / d < 1e-3);
        // d = N gives the uniform reference p = 1/2.
        assert!((sparse_reference_tie_probability(50, 50.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(sparse_reference_tie_probability(50, 0.0).is_err());
    }

    #[test]
    fn sparse_reference_mean_degree_stable_across_n() {
        let (d, draws) = (2.0, 1000usize);
        let mut rng = rng_from_seed(33);
        let stats = |n: usize, rng: &mut SimRng| {
            let means: Vec<f64> = (0..draws)
                .map(|_| summarize(&sample_krivitsky(n, d, rng).unwrap(), None).mean_degree)
                .collect();
            let mean = means.iter().sum::<f64>() / draws as f64;
            let var = means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws as f64 - 1.0);
            (mean, (var / draws as f64).sqrt())
        };
        let (m500, se500) = stats(500, &mut rng);
        let (m1000, se1000) = stats(1000, &mut rng);
        let gap = (m500 - m1000).abs();
        let tol = 3.0 * (se500.powi(2) + se1000.powi(2)).sqrt();
        assert!(gap < tol, "mean degree drifted with N: {m500} vs {m1000}");
    }

    #[test]
    fn krivitsky_dyads_are_uncorrelated() {
        let (n, d, draws) = (30usize, 3.0, 100_000usize);
        let mut rng = rng_from_seed(34);
        let (a, b) = ((0u32, 1u32), (2u32, 3u32));
        let mut xs = Vec::with_capacity(draws);
        let mut ys = Vec::with_capacity(draws);
        for _ in 0..draws {
            let g = sample_krivitsky(n, d, &mut rng).unwrap();
            let set: std::collections::HashSet<_> = g.edges().iter().copied().collect();
            xs.push(set.contains(&a) as u8 as f64);
            ys.push(set.contains(&b) as u8 as f64);
        }
        let nf = draws as f64;
        let (mx, my) = (
            xs.iter().sum::<f64>() / nf,
            ys.iter().sum::<f64>() / nf,
        );
        let cov = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / (nf - 1.0);
        // Independent indicators: SE of the covariance is about
        // sqrt(var_x var_y / n).
        let se = (mx * (1.0 - mx) * my * (1.0 - my) / nf).sqrt();
        assert!(cov.abs() < 3.0 * se, "cov {cov} vs 3se {}", 3.0 * se);
    }

    #[test]
    fn constrained_model_validation() {
        assert!(ConstrainedModel::new(10, 0.5, 0, 0, 0).is_err());
        assert!(ConstrainedModel::new(10, 0.5, 10, 0, 0).is_err());
        assert!(ConstrainedModel::new(10, 0.0, 3, 0, 0).is_err());
        assert!(ConstrainedModel::new(1, 0.5, 1, 0, 0).is_err());
        let m = ConstrainedModel::with_protocol_scale(10, 0.12, 3, 1.0).unwrap();
        assert_eq!(m.burnin, 500 * 45);
        assert_eq!(m.thinning, 250 * 45);
    }

    #[test]
    fn unconstrained_cap_recovers_bernoulli_mean() {
        // d_max = N-1 never binds, so edge counts match Binomial(C(N,2), p).
        let (n, p) = (30usize, 0.2);
        let model = ConstrainedModel::new(n, p, (n - 1) as u32, 50_000, 2_000).unwrap();
        let draws = 400usize;
        let mut chain = ConstrainedChain::new(model, 77);
        chain.run_burnin();
        let mut sum = 0f64;
        for _ in 0..draws {
            let g = chain.next_draw();
            assert!(g.degrees().iter().all(|&d| d <= (n - 1) as u32));
            sum += g.edge_count() as f64;
        }
        let mean = sum / draws as f64;
        let dyads = pair_count(n as u64) as f64;
        let expect = dyads * p;
        // Draws are not fully independent; allow 5 binomial SEs.
        let se = (dyads * p * (1.0 - p) / draws as f64).sqrt();
        assert!(
            (mean - expect).abs() < 5.0 * se,
            "mean {mean} vs {expect} (5se {})",
            5.0 * se
        );
    }

    #[test]
    fn matchings_are_sampled_uniformly() {
        // p = 1/2 and d_max = 1: stationary distribution is uniform over the
        // 10 graphs on 4 vertices with maximum degree <= 1.
        let model = ConstrainedModel::new(4, 0.5, 1, 2_000, 60).unwrap();
        let mut chain = ConstrainedChain::new(model, 101);
        chain.run_burnin();
        let draws = 100_000usize;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            let g = chain.next_draw();
            let mut mask = 0u8;
            for &(u, v) in g.edges() {
                let idx = (0..4)
                    .flat_map(|a| (a + 1..4).map(move |b| (a as u32, b as u32)))
                    .position(|d| d == (u, v))
                    .unwrap();
                mask |= 1 << idx;
            }
            *counts.entry(mask).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 10, "support should have 10 graphs");
        let expected = draws as f64 / 10.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let crit = ChiSquared::new(9.0).unwrap().inverse_cdf(0.999);
        assert!(chi2 < crit, "chi2 {chi2} >= {crit}");
    }

    #[test]
    fn constrained_chain_matches_enumerated_target() {
        // N=4, d_max=2, p=0.3: compare retained-draw frequencies with the
        // exactly enumerated stationary distribution over the support.
        let (p, d_max) = (0.3f64, 2u32);
        let dyads: Vec<(u32, u32)> = (0..4u32)
            .flat_map(|a| (a + 1..4).map(move |b| (a, b)))
            .collect();
        let mut weights = std::collections::HashMap::new();
        let mut total = 0.0;
        for mask in 0u8..64 {
            let mut deg = [0u32; 4];
            for (i, &(u, v)) in dyads.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    deg[u as usize] += 1;
                    deg[v as usize] += 1;
                }
            }
            if deg.iter().all(|&d| d <= d_max) {
                let t = mask.count_ones() as f64;
                let w = p.powf(t) * (1.0 - p).powf(6.0 - t);
                weights.insert(mask, w);
                total += w;
            }
        }
        let model = ConstrainedModel::new(4, p, d_max, 2_000, 60).unwrap();
        let mut chain = ConstrainedChain::new(model, 202);
        chain.run_burnin();
        let draws = 100_000usize;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            let g = chain.next_draw();
            assert!(g.degrees().iter().all(|&d| d <= d_max));
            let mut mask = 0u8;
            for &(u, v) in g.edges() {
                let idx = dyads.iter().position(|&d| d == (u, v)).unwrap();
                mask |= 1 << idx;
            }
            *counts.entry(mask).or_insert(0u64) += 1;
        }
        let mut chi2 = 0.0;
        for (&mask, &w) in &weights {
            let expect = w / total * draws as f64;
            let got = *counts.get(&mask).unwrap_or(&0) as f64;
            chi2 += (got - expect).powi(2) / expect;
        }
        let dof = (weights.len() - 1) as f64;
        let crit = ChiSquared::new(dof).unwrap().inverse_cdf(0.999);
        assert!(chi2 < crit, "chi2 {chi2} >= {crit} (dof {dof})");
    }

    #[test]
    fn expected_triangles_values() {
        assert_eq!(expected_triangles_bernoulli(50, 0.0).unwrap(), 0.0);
        assert!((expected_triangles_bernoulli(3, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let t = expected_triangles_bernoulli(50, 0.1).unwrap();
        assert!((t - 19.6).abs() < 1e-12);
    }
}
