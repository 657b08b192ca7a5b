//! Spearman rank correlation between the upper triangles of two
//! edge-probability matrices.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{average_adjacency, discretize, estimate_prob_matrix, EstimatorConfig};
use crate::graph::AdjMatrix;
use crate::scalar::Scalar;
use crate::symmat::SymMatrix;

/// Midranks (1-based, ties averaged) of the `n (n - 1) / 2` upper-triangular
/// entries in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector {
    values: Vec<f64>,
}

impl RankVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Midranks of an arbitrary sequence.
pub fn midranks<T: Scalar>(values: &[T]) -> Vec<f64> {
    let mut order: Vec<u32> = (0..values.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| values[a as usize].partial_cmp(&values[b as usize]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let v = values[order[start] as usize];
        let mut end = start + 1;
        while end < order.len() && values[order[end] as usize] == v {
            end += 1;
        }
        // Positions start..end (0-based) share rank ((start + 1) + end) / 2.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx as usize] = rank;
        }
        start = end;
    }
    ranks
}

pub fn rank_upper_triangle<T: Scalar>(p: &SymMatrix<T>) -> RankVector {
    let upper: Vec<T> = p.upper_triangle().collect();
    RankVector {
        values: midranks(&upper),
    }
}

/// Value of the rank statistic for one pair of matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestStatistic {
    pub t: f64,
    pub n: usize,
    /// Set when either rank vector has zero variance; `t` is then 0.
    pub degenerate: bool,
}

/// Pearson correlation of two rank vectors of equal length.
pub fn rank_correlation(r: &RankVector, s: &RankVector, n: usize) -> TestStatistic {
    let m = r.len();
    let mean = (m as f64 + 1.0) / 2.0;
    let (mut cov, mut vr, mut vs) = (0.0, 0.0, 0.0);
    for (a, b) in r.values.iter().zip(&s.values) {
        let (da, db) = (a - mean, b - mean);
        cov += da * db;
        vr += da * da;
        vs += db * db;
    }
    if vr == 0.0 || vs == 0.0 {
        return TestStatistic {
            t: 0.0,
            n,
            degenerate: true,
        };
    }
    // sqrt(x * x) == x exactly, so identical inputs give t = 1 exactly.
    let t = (cov / (vr * vs).sqrt()).clamp(-1.0, 1.0);
    TestStatistic {
        t,
        n,
        degenerate: false,
    }
}

/// Spearman correlation of the upper triangles of `p` and `q`.
pub fn spearman_statistic<T: Scalar>(p: &SymMatrix<T>, q: &SymMatrix<T>) -> Result<TestStatistic> {
    if p.n() != q.n() {
        return Err(Error::Input(format!(
            "matrices have different sizes ({} and {})",
            p.n(),
            q.n()
        )));
    }
    if p.n() < 3 {
        return Err(Error::Input(format!(
            "the statistic needs at least 3 vertices (got {})",
            p.n()
        )));
    }
    if !p.is_finite() || !q.is_finite() {
        return Err(Error::Input("matrices have non-finite entries".into()));
    }
    Ok(rank_correlation(
        &rank_upper_triangle(p),
        &rank_upper_triangle(q),
        p.n(),
    ))
}

/// Statistic and the ranks resolved on each side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineResult {
    pub statistic: TestStatistic,
    pub rank_a: usize,
    pub rank_b: usize,
}

/// Estimate (and optionally discretise) one side from its averaged adjacency.
pub(crate) fn prepared_estimate<T: Scalar>(
    abar: &SymMatrix<T>,
    cfg: &EstimatorConfig,
) -> Result<(SymMatrix<T>, usize)> {
    let est = estimate_prob_matrix(abar, cfg)?;
    let p = match cfg.eta {
        Some(eta) => discretize(&est.p, eta)?,
        None => est.p,
    };
    Ok((p, est.rank))
}

pub(crate) fn statistic_from_averages<T: Scalar>(
    abar: &SymMatrix<T>,
    bbar: &SymMatrix<T>,
    cfg: &EstimatorConfig,
) -> Result<PipelineResult> {
    let (p, rank_a) = prepared_estimate(abar, cfg)?;
    let (q, rank_b) = prepared_estimate(bbar, cfg)?;
    Ok(PipelineResult {
        statistic: spearman_statistic(&p, &q)?,
        rank_a,
        rank_b,
    })
}

/// Average each sample, estimate, optionally discretise, then correlate.
pub fn statistic_pipeline<T: Scalar>(
    graphs_a: &[AdjMatrix],
    graphs_b: &[AdjMatrix],
    cfg: &EstimatorConfig,
) -> Result<PipelineResult> {
    let abar: SymMatrix<T> = average_adjacency(graphs_a)?;
    let bbar: SymMatrix<T> = average_adjacency(graphs_b)?;
    if abar.n() != bbar.n() {
        return Err(Error::Input(format!(
            "samples have different vertex counts ({} and {})",
            abar.n(),
            bbar.n()
        )));
    }
    statistic_from_averages(&abar, &bbar, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_upper(values: &[f64], n: usize) -> SymMatrix<f64> {
        let mut it = values.iter();
        SymMatrix::from_fn(n, |i, j| if i == j { 0.0 } else { *it.next().unwrap() })
    }

    /// O(M^2) midrank: 1 + #less + (#equal - 1) / 2.
    fn brute_midranks(x: &[f64]) -> Vec<f64> {
        x.iter()
            .map(|&v| {
                let less = x.iter().filter(|&&w| w < v).count() as f64;
                let eq = x.iter().filter(|&&w| w == v).count() as f64;
                less + (eq + 1.0) / 2.0
            })
            .collect()
    }

    #[test]
    fn distinct_values_rank_in_order() {
        let p = from_upper(&[0.1, 0.2, 0.3], 3);
        assert_eq!(rank_upper_triangle(&p).values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn ties_share_midranks() {
        let x = [0.2, 0.1, 0.2, 0.4];
        assert_eq!(midranks(&x), vec![2.5, 1.0, 2.5, 4.0]);
        assert_eq!(midranks(&x), brute_midranks(&x));
    }

    #[test]
    fn constant_matrix_has_central_ranks() {
        let n = 7;
        let m = n * (n - 1) / 2;
        let p = SymMatrix::from_fn(n, |i, j| if i == j { 0.0 } else { 0.1 });
        let r = rank_upper_triangle(&p);
        assert!(r.values().iter().all(|&v| v == (m as f64 + 1.0) / 2.0));
        let total: f64 = r.values().iter().sum();
        assert_eq!(total, (m * (m + 1)) as f64 / 2.0);
    }

    #[test]
    fn perfect_concordance_and_discordance() {
        let vals = [0.1, 0.4, 0.2, 0.9, 0.3, 0.5];
        let p = from_upper(&vals, 4);
        assert_eq!(spearman_statistic(&p, &p).unwrap().t, 1.0);
        let q = p.map_hollow(|x| 1.0 - x);
        let t = spearman_statistic(&p, &q).unwrap().t;
        assert!((t + 1.0).abs() < 1e-15);
    }

    #[test]
    fn six_entry_example_matches_rank_then_pearson() {
        let p = from_upper(&[0.1, 0.4, 0.2, 0.9, 0.3, 0.5], 4);
        let q = from_upper(&[0.2, 0.3, 0.1, 0.8, 0.5, 0.4], 4);
        // Ranks (1,4,2,6,3,5) and (2,3,1,6,5,4): sum d^2 = 1+1+1+0+4+1 = 8,
        // rho = 1 - 6*8 / (6*35) = 27/35.
        let t = spearman_statistic(&p, &q).unwrap().t;
        assert!((t - 27.0 / 35.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_variance_flags_and_zeroes() {
        let p = SymMatrix::from_fn(4, |i, j| if i == j { 0.0 } else { 0.3 });
        let q = from_upper(&[0.1, 0.4, 0.2, 0.9, 0.3, 0.5], 4);
        let s = spearman_statistic(&p, &q).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.t, 0.0);
    }

    #[test]
    fn size_errors() {
        let p = SymMatrix::<f64>::zeros(4);
        let q = SymMatrix::<f64>::zeros(5);
        assert!(matches!(spearman_statistic(&p, &q), Err(Error::Input(_))));
        let tiny = SymMatrix::<f64>::zeros(2);
        assert!(spearman_statistic(&tiny, &tiny).is_err());
    }

    #[test]
    fn identical_samples_give_one() {
        use crate::model::sample_graph;
        use crate::rng::rng_from_seed;
        let p = SymMatrix::<f64>::from_fn(30, |i, j| {
            if i == j { 0.0 } else { (-((i as f64 - j as f64) / 10.0).powi(2)).exp() }
        });
        let mut rng = rng_from_seed(1);
        let graphs: Vec<AdjMatrix> = (0..3).map(|_| sample_graph(&p, &mut rng).unwrap()).collect();
        let res = statistic_pipeline::<f64>(&graphs, &graphs, &EstimatorConfig::fixed(3)).unwrap();
        assert_eq!(res.statistic.t, 1.0);
        assert_eq!((res.rank_a, res.rank_b), (3, 3));
    }
}
