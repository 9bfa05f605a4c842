//! Per-graph observables: mean degree, density, exact triangle count,
//! saturated fraction, degree histogram, and dyad-level dependence
//! diagnostics over collections of sampled graphs.

use std::collections::HashSet;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{canonical, pair_count, SimpleGraph};

/// Summary statistics of a single graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub n_vertices: usize,
    pub edge_count: u64,
    /// 2 * edge_count / N.
    pub mean_degree: f64,
    /// edge_count / C(N, 2); 0 for N < 2.
    pub density: f64,
    pub triangle_count: u64,
    /// Fraction of vertices with degree >= d_max; present only when a
    /// degree cap applies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saturated_fraction: Option<f64>,
    /// Count of vertices at each degree; sums to N.
    pub degree_histogram: Vec<u64>,
}

/// Compute every summary field. `d_max` enables the saturated fraction.
pub fn summarize(graph: &SimpleGraph, d_max: Option<u32>) -> GraphSummary {
    let n = graph.n_vertices();
    let edges = graph.edge_count() as u64;
    let degrees = graph.degrees();
    let max_deg = degrees.iter().copied().max().unwrap_or(0) as usize;
    let mut histogram = vec![0u64; max_deg + 1];
    for &d in &degrees {
        histogram[d as usize] += 1;
    }
    let pairs = pair_count(n as u64);
    GraphSummary {
        n_vertices: n,
        edge_count: edges,
        mean_degree: 2.0 * edges as f64 / n as f64,
        density: if pairs == 0 {
            0.0
        } else {
            edges as f64 / pairs as f64
        },
        triangle_count: count_triangles(graph),
        saturated_fraction: d_max.map(|cap| {
            degrees.iter().filter(|&&d| d >= cap).count() as f64 / n as f64
        }),
        degree_histogram: histogram,
    }
}

/// Exact triangle count: iterate edges and intersect the sorted neighbor
/// lists of the endpoints; every triangle is seen from each of its three
/// edges, so the incidence total is divided by 3.
pub fn count_triangles(graph: &SimpleGraph) -> u64 {
    let adj = graph.adjacency_lists();
    let mut incident = 0u64;
    for &(u, v) in graph.edges() {
        incident += sorted_intersection_size(&adj[u as usize], &adj[v as usize]);
    }
    debug_assert_eq!(incident % 3, 0);
    incident / 3
}

fn sorted_intersection_size(a: &[u32], b: &[u32]) -> u64 {
    let (mut i, mut j, mut count) = (0, 0, 0u64);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Sample covariance of two edge indicators across a graph collection.
#[derive(Debug, Clone, Serialize)]
pub struct DyadCovariance {
    pub dyad_a: (u32, u32),
    pub dyad_b: (u32, u32),
    pub covariance: f64,
    /// Standard error of the sample covariance under independent
    /// indicators: sqrt(var_x var_y / (n-1)). Calibrated for testing
    /// departures from zero; a product-moment estimate would collapse for
    /// sparse indicators whenever no co-occurrence happens to be observed.
    pub std_error: f64,
    /// Set when either indicator is constant across the collection, making
    /// the covariance trivially zero and the error estimate meaningless.
    pub degenerate: bool,
}

/// For each dyad pair, the sample covariance of the two edge indicators
/// across `samples`, with a standard-error estimate. Requires at least two
/// samples.
pub fn edge_dependence_diagnostic(
    samples: &[SimpleGraph],
    dyad_pairs: &[((u32, u32), (u32, u32))],
) -> Result<Vec<DyadCovariance>> {
    if samples.len() < 2 {
        return Err(Error::domain(
            "edge dependence diagnostic needs at least 2 samples",
        ));
    }
    let n = samples.len() as f64;
    let edge_sets: Vec<HashSet<(u32, u32)>> = samples
        .iter()
        .map(|g| g.edges().iter().copied().collect())
        .collect();
    let mut out = Vec::with_capacity(dyad_pairs.len());
    for &(a, b) in dyad_pairs {
        let (a, b) = (canonical(a.0, a.1), canonical(b.0, b.1));
        let xs: Vec<f64> = edge_sets
            .iter()
            .map(|s| if s.contains(&a) { 1.0 } else { 0.0 })
            .collect();
        let ys: Vec<f64> = edge_sets
            .iter()
            .map(|s| if s.contains(&b) { 1.0 } else { 0.0 })
            .collect();
        let x_mean = xs.iter().sum::<f64>() / n;
        let y_mean = ys.iter().sum::<f64>() / n;
        let var_x = xs.iter().map(|x| (x - x_mean).powi(2)).sum::<f64>() / (n - 1.0);
        let var_y = ys.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / (n - 1.0);
        let covariance = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - x_mean) * (y - y_mean))
            .sum::<f64>()
            / (n - 1.0);
        out.push(DyadCovariance {
            dyad_a: a,
            dyad_b: b,
            covariance,
            std_error: (var_x * var_y / (n - 1.0)).sqrt(),
            degenerate: var_x == 0.0 || var_y == 0.0,
        });
    }
    Ok(out)
}

/// Draw a uniform dyad from an N-vertex graph.
fn draw_dyad(n_vertices: usize, rng: &mut impl Rng) -> (u32, u32) {
    let u = rng.random_range(0..n_vertices as u32);
    let mut v = rng.random_range(0..n_vertices as u32 - 1);
    if v >= u {
        v += 1;
    }
    canonical(u, v)
}

/// Draw `count` pairs of distinct dyads uniformly from the C(N, 2) dyads of
/// an N-vertex graph.
pub fn sample_dyad_pairs(
    n_vertices: usize,
    count: usize,
    rng: &mut impl Rng,
) -> Vec<((u32, u32), (u32, u32))> {
    assert!(n_vertices >= 2, "need at least one dyad");
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = draw_dyad(n_vertices, rng);
        let b = draw_dyad(n_vertices, rng);
        if a != b {
            out.push((a, b));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::static_samplers::{expected_triangles_bernoulli, sample_bernoulli};
    use rand::Rng;

    fn complete(n: usize) -> SimpleGraph {
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                edges.push((u, v));
            }
        }
        SimpleGraph::new(n, edges).unwrap()
    }

    /// Cubic brute force over all vertex triples.
    fn triangles_brute(graph: &SimpleGraph) -> u64 {
        let set: HashSet<(u32, u32)> = graph.edges().iter().copied().collect();
        let n = graph.n_vertices() as u32;
        let mut count = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    if set.contains(&(i, j)) && set.contains(&(i, k)) && set.contains(&(j, k)) {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    #[test]
    fn empty_graph_summary() {
        let s = summarize(&SimpleGraph::empty(5), None);
        assert_eq!(s.mean_degree, 0.0);
        assert_eq!(s.triangle_count, 0);
        assert_eq!(s.density, 0.0);
        assert_eq!(s.degree_histogram, vec![5]);
        assert!(s.saturated_fraction.is_none());
    }

    #[test]
    fn complete_graph_summary() {
        let s = summarize(&complete(5), None);
        assert_eq!(s.edge_count, 10);
        assert_eq!(s.triangle_count, 10);
        assert_eq!(s.density, 1.0);
        assert_eq!(s.mean_degree, 4.0);
        assert_eq!(s.degree_histogram, vec![0, 0, 0, 0, 5]);
    }

    #[test]
    fn summary_identities_hold() {
        let mut rng = rng_from_seed(20);
        for _ in 0..50 {
            let n = rng.random_range(1..40usize);
            let g = sample_bernoulli(n, 0.2, &mut rng).unwrap();
            let s = summarize(&g, Some(3));
            assert_eq!(s.mean_degree, 2.0 * s.edge_count as f64 / n as f64);
            if n > 1 {
                let expect = s.mean_degree / (n as f64 - 1.0);
                assert!((s.density - expect).abs() < 1e-15);
            }
            assert_eq!(s.degree_histogram.iter().sum::<u64>(), n as u64);
        }
    }

    #[test]
    fn saturated_fraction_counts_capped_vertices() {
        // Star on 4 vertices: center degree 3, leaves degree 1.
        let g = SimpleGraph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let s = summarize(&g, Some(3));
        assert_eq!(s.saturated_fraction, Some(0.25));
        let s1 = summarize(&g, Some(1));
        assert_eq!(s1.saturated_fraction, Some(1.0));
    }

    #[test]
    fn single_triangle_and_path() {
        let tri = SimpleGraph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(count_triangles(&tri), 1);
        let path = SimpleGraph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(count_triangles(&path), 0);
    }

    #[test]
    fn triangle_count_matches_brute_force() {
        let mut rng = rng_from_seed(21);
        for _ in 0..100 {
            let n = rng.random_range(1..=12usize);
            let p = rng.random_range(0.0..1.0);
            let g = sample_bernoulli(n, p, &mut rng).unwrap();
            assert_eq!(count_triangles(&g), triangles_brute(&g), "n={n} p={p}");
        }
    }

    #[test]
    fn bernoulli_triangles_match_expectation() {
        let (n, p, draws) = (40usize, 0.2, 1000usize);
        let expect = expected_triangles_bernoulli(n, p).unwrap();
        assert!((expect - 79.04).abs() < 1e-9);
        let mut rng = rng_from_seed(22);
        let counts: Vec<f64> = (0..draws)
            .map(|_| count_triangles(&sample_bernoulli(n, p, &mut rng).unwrap()) as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / draws as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (draws as f64 - 1.0);
        let se = (var / draws as f64).sqrt();
        assert!(
            (mean - expect).abs() < 3.0 * se,
            "mean {mean} vs {expect} (3se {})",
            3.0 * se
        );
    }

    #[test]
    fn bernoulli_degree_distribution_is_binomial() {
        use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};
        let (n, p, draws) = (30usize, 0.2, 2000usize);
        let mut rng = rng_from_seed(25);
        let mut observed = vec![0u64; n];
        for _ in 0..draws {
            for d in sample_bernoulli(n, p, &mut rng).unwrap().degrees() {
                observed[d as usize] += 1;
            }
        }
        let total = (n * draws) as f64;
        let binom = Binomial::new(p, (n - 1) as u64).unwrap();
        // Pool tail bins to expected counts of at least 5.
        let mut chi2 = 0.0;
        let mut dof: i64 = -1;
        let (mut acc_obs, mut acc_exp) = (0.0, 0.0);
        for d in 0..n {
            acc_obs += observed[d] as f64;
            acc_exp += binom.pmf(d as u64) * total;
            let remaining: f64 =
                (d + 1..n).map(|k| binom.pmf(k as u64)).sum::<f64>() * total;
            if acc_exp >= 5.0 && remaining >= 5.0 {
                chi2 += (acc_obs - acc_exp).powi(2) / acc_exp;
                dof += 1;
                acc_obs = 0.0;
                acc_exp = 0.0;
            } else if remaining < 5.0 {
                acc_obs += (d + 1..n).map(|k| observed[k] as f64).sum::<f64>();
                chi2 += (acc_obs - (acc_exp + remaining)).powi(2) / (acc_exp + remaining);
                dof += 1;
                break;
            }
        }
        let crit = ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.999);
        assert!(chi2 < crit, "chi2 {chi2} >= {crit} at dof {dof}");
    }

    #[test]
    fn identical_samples_are_degenerate_with_zero_covariance() {
        let g = SimpleGraph::new(4, [(0, 1), (2, 3)]).unwrap();
        let samples = vec![g.clone(), g.clone(), g];
        let pairs = vec![((0, 1), (2, 3)), ((0, 2), (1, 3))];
        let table = edge_dependence_diagnostic(&samples, &pairs).unwrap();
        for row in table {
            assert_eq!(row.covariance, 0.0);
            assert!(row.degenerate);
        }
    }

    #[test]
    fn diagnostic_requires_two_samples() {
        let g = SimpleGraph::empty(4);
        assert!(edge_dependence_diagnostic(&[g], &[((0, 1), (2, 3))]).is_err());
    }

    #[test]
    fn independent_bernoulli_covariances_near_zero() {
        let mut rng = rng_from_seed(23);
        let samples: Vec<SimpleGraph> = (0..4000)
            .map(|_| sample_bernoulli(20, 0.3, &mut rng).unwrap())
            .collect();
        let pairs = sample_dyad_pairs(20, 100, &mut rng);
        let table = edge_dependence_diagnostic(&samples, &pairs).unwrap();
        let within = table
            .iter()
            .filter(|row| row.covariance.abs() <= 3.0 * row.std_error)
            .count();
        assert!(
            within as f64 >= 0.95 * table.len() as f64,
            "only {within}/{} covariances within 3 SE of zero",
            table.len()
        );
    }

    #[test]
    fn dyad_pair_sampler_produces_distinct_dyads() {
        let mut rng = rng_from_seed(24);
        for (a, b) in sample_dyad_pairs(10, 500, &mut rng) {
            assert!(a.0 < a.1 && b.0 < b.1);
            assert_ne!(a, b);
            assert!(a.1 < 10 && b.1 < 10);
        }
    }
}
