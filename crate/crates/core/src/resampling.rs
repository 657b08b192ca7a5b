//! Calibration of the rank statistic: permutation of graph labels, the
//! parametric bootstrap, and (for simulations) sampling from a known null
//! model.
//!
//! All procedures reject for small values of the statistic. Replication `k`
//! draws from its own stream seeded by `derive_seed(seed, [k])`, so reports
//! do not depend on the number of worker threads.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{edge_counts, average_from_counts, estimate_prob_matrix, EstimatorConfig};
use crate::graph::AdjMatrix;
use crate::model::{build_prob_matrix, sample_graph, GraphModel};
use crate::ranktest::{spearman_statistic, statistic_from_averages, statistic_pipeline, TestStatistic};
use crate::rng::{derive_seed, rng_from_seed, tag, SimRng};
use crate::scalar::Scalar;
use crate::symmat::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Permutation,
    Bootstrap,
    NullReference,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Permutation => "permutation",
            Method::Bootstrap => "bootstrap",
            Method::NullReference => "null_reference",
        })
    }
}

/// Resampled statistics, in replication order.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum NullSamples {
    Single(Vec<f64>),
    Paired { t_p: Vec<f64>, t_q: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub method: Method,
    pub t_observed: f64,
    pub observed_degenerate: bool,
    pub p_value: f64,
    pub null_samples: NullSamples,
    /// Replicate statistics whose rank variance vanished.
    pub degenerate_replicates: usize,
    pub n_reps: usize,
    pub seed: u64,
    pub n: usize,
    pub k_a: usize,
    pub k_b: usize,
    pub settings: EstimatorConfig,
}

/// `(1 + #{t_null <= t_obs}) / (N + 1)`.
pub fn p_value_lower_tail(t_observed: f64, null: &[f64]) -> f64 {
    let hits = null.iter().filter(|&&t| t <= t_observed).count();
    (1 + hits) as f64 / (null.len() + 1) as f64
}

/// Bootstrap p-value: the larger of the two within-population fractions of
/// replicate statistics lying strictly below `t_star`, capped at one.
/// Degenerate replicates never count; a degenerate `t_star` gives 1.
pub fn bootstrap_p_value(t_star: TestStatistic, t_p: &[TestStatistic], t_q: &[TestStatistic]) -> f64 {
    if t_star.degenerate {
        return 1.0;
    }
    let frac = |ts: &[TestStatistic]| {
        if ts.is_empty() {
            return 1.0;
        }
        let below = ts.iter().filter(|s| !s.degenerate && s.t < t_star.t).count();
        below as f64 / ts.len() as f64
    };
    frac(t_p).max(frac(t_q)).min(1.0)
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        Err(Error::Parameter("number of replications must be >= 1".into()))
    } else {
        Ok(())
    }
}

fn replicate_rng(seed: u64, k: usize) -> SimRng {
    rng_from_seed(derive_seed(seed, &[tag::REPLICATION, k as u64]))
}

fn common_n(a: &[AdjMatrix], b: &[AdjMatrix]) -> Result<usize> {
    let first = a
        .first()
        .or_else(|| b.first())
        .ok_or_else(|| Error::Input("no graphs supplied".into()))?;
    let n = first.n();
    if let Some(g) = a.iter().chain(b).find(|g| g.n() != n) {
        return Err(Error::Input(format!(
            "graphs have different vertex counts ({} and {})",
            n,
            g.n()
        )));
    }
    Ok(n)
}

/// Permutation test over graph labels. The pooled `m_a + m_b` graphs are
/// repartitioned into groups of the original sizes for each replication;
/// discretisation applies inside replications when `cfg.eta` is set.
pub fn permutation_test<T: Scalar>(
    graphs_a: &[AdjMatrix],
    graphs_b: &[AdjMatrix],
    cfg: &EstimatorConfig,
    reps: usize,
    seed: u64,
) -> Result<TestReport> {
    cfg.validate()?;
    check_reps(reps)?;
    if graphs_a.len() < 2 || graphs_b.len() < 2 {
        return Err(Error::Calibration(format!(
            "the permutation test needs at least 2 graphs per sample (got {} and {}); \
             use the bootstrap for single graphs",
            graphs_a.len(),
            graphs_b.len()
        )));
    }
    let n = common_n(graphs_a, graphs_b)?;
    let observed = statistic_pipeline::<T>(graphs_a, graphs_b, cfg)?;

    let pooled: Vec<&AdjMatrix> = graphs_a.iter().chain(graphs_b).collect();
    let (_, total) = edge_counts(&pooled)?;
    let (m_a, m_b) = (graphs_a.len(), graphs_b.len());

    let null: Vec<TestStatistic> = (0..reps)
        .into_par_iter()
        .map(|k| {
            let mut rng = replicate_rng(seed, k);
            let mut order: Vec<usize> = (0..pooled.len()).collect();
            order.shuffle(&mut rng);
            let group: Vec<&AdjMatrix> = order[..m_a].iter().map(|&i| pooled[i]).collect();
            let (_, counts_a) = edge_counts(&group)?;
            let counts_b: Vec<u32> = total.iter().zip(&counts_a).map(|(t, a)| t - a).collect();
            let abar = average_from_counts::<T>(n, &counts_a, m_a);
            let bbar = average_from_counts::<T>(n, &counts_b, m_b);
            Ok(statistic_from_averages(&abar, &bbar, cfg)?.statistic)
        })
        .collect::<Result<_>>()?;

    let samples: Vec<f64> = null.iter().map(|s| s.t).collect();
    Ok(TestReport {
        method: Method::Permutation,
        t_observed: observed.statistic.t,
        observed_degenerate: observed.statistic.degenerate,
        p_value: p_value_lower_tail(observed.statistic.t, &samples),
        degenerate_replicates: null.iter().filter(|s| s.degenerate).count(),
        null_samples: NullSamples::Single(samples),
        n_reps: reps,
        seed,
        n,
        k_a: observed.rank_a,
        k_b: observed.rank_b,
        settings: *cfg,
    })
}

/// Bootstrap estimates are always clipped and never discretised.
fn bootstrap_config(cfg: &EstimatorConfig) -> EstimatorConfig {
    EstimatorConfig {
        rank: cfg.rank,
        clip: true,
        eta: None,
    }
}

fn resampled_statistic<T: Scalar>(p: &SymMatrix<T>, cfg: &EstimatorConfig, rng: &mut SimRng) -> Result<TestStatistic> {
    let g1 = sample_graph(p, rng)?;
    let g2 = sample_graph(p, rng)?;
    let e1 = estimate_prob_matrix(&average_from_single::<T>(&g1), cfg)?;
    let e2 = estimate_prob_matrix(&average_from_single::<T>(&g2), cfg)?;
    spearman_statistic(&e1.p, &e2.p)
}

fn average_from_single<T: Scalar>(g: &AdjMatrix) -> SymMatrix<T> {
    let counts: Vec<u32> = g.upper().iter().map(|&b| b as u32).collect();
    average_from_counts(g.n(), &counts, 1)
}

/// Parametric bootstrap. Each sample is averaged first (a single graph per
/// side is the usual case), `P` and `Q` are estimated, and each replication
/// draws two fresh graphs from each estimate.
pub fn bootstrap_test<T: Scalar>(
    graphs_a: &[AdjMatrix],
    graphs_b: &[AdjMatrix],
    cfg: &EstimatorConfig,
    reps: usize,
    seed: u64,
) -> Result<TestReport> {
    cfg.validate()?;
    if graphs_a.is_empty() || graphs_b.is_empty() {
        return Err(Error::Input("each sample needs at least one graph".into()));
    }
    common_n(graphs_a, graphs_b)?;
    let boot = bootstrap_config(cfg);
    let abar = crate::estimator::average_adjacency::<T>(graphs_a)?;
    let bbar = crate::estimator::average_adjacency::<T>(graphs_b)?;
    let p_hat = estimate_prob_matrix(&abar, &boot)?;
    let q_hat = estimate_prob_matrix(&bbar, &boot)?;
    let mut report = bootstrap_from_estimates(&p_hat.p, &q_hat.p, cfg, reps, seed)?;
    report.k_a = p_hat.rank;
    report.k_b = q_hat.rank;
    Ok(report)
}

/// Bootstrap starting from given estimates `p_hat`, `q_hat` (entries in
/// `[0, 1]`). The reported ranks are left at 0.
pub fn bootstrap_from_estimates<T: Scalar>(
    p_hat: &SymMatrix<T>,
    q_hat: &SymMatrix<T>,
    cfg: &EstimatorConfig,
    reps: usize,
    seed: u64,
) -> Result<TestReport> {
    cfg.validate()?;
    check_reps(reps)?;
    let boot = bootstrap_config(cfg);
    let t_star = spearman_statistic(p_hat, q_hat)?;
    let pairs: Vec<(TestStatistic, TestStatistic)> = (0..reps)
        .into_par_iter()
        .map(|k| {
            let mut rng = replicate_rng(seed, k);
            let t_p = resampled_statistic(p_hat, &boot, &mut rng)?;
            let t_q = resampled_statistic(q_hat, &boot, &mut rng)?;
            Ok((t_p, t_q))
        })
        .collect::<Result<_>>()?;
    let (t_p, t_q): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let degenerate = t_p.iter().chain(&t_q).filter(|s| s.degenerate).count();
    Ok(TestReport {
        method: Method::Bootstrap,
        t_observed: t_star.t,
        observed_degenerate: t_star.degenerate,
        p_value: bootstrap_p_value(t_star, &t_p, &t_q),
        null_samples: NullSamples::Paired {
            t_p: t_p.iter().map(|s| s.t).collect(),
            t_q: t_q.iter().map(|s| s.t).collect(),
        },
        degenerate_replicates: degenerate,
        n_reps: reps,
        seed,
        n: p_hat.n(),
        k_a: 0,
        k_b: 0,
        settings: boot,
    })
}

/// Statistics of `reps` independent draws, where `draw` produces both samples
/// from the replication's stream.
pub fn null_reference_distribution<T, F>(
    cfg: &EstimatorConfig,
    reps: usize,
    seed: u64,
    draw: F,
) -> Result<Vec<TestStatistic>>
where
    T: Scalar,
    F: Fn(&mut SimRng) -> Result<(Vec<AdjMatrix>, Vec<AdjMatrix>)> + Sync,
{
    cfg.validate()?;
    check_reps(reps)?;
    (0..reps)
        .into_par_iter()
        .map(|k| {
            let mut rng = replicate_rng(seed, k);
            let (a, b) = draw(&mut rng)?;
            Ok(statistic_pipeline::<T>(&a, &b, cfg)?.statistic)
        })
        .collect()
}

/// Simulation-only calibration: the null distribution comes from fresh
/// samples of the known null models, with as many graphs per side as the
/// observed samples.
pub fn null_reference_test<T: Scalar>(
    null_p: &GraphModel<T>,
    null_q: &GraphModel<T>,
    graphs_a: &[AdjMatrix],
    graphs_b: &[AdjMatrix],
    cfg: &EstimatorConfig,
    reps: usize,
    seed: u64,
) -> Result<TestReport> {
    let n = common_n(graphs_a, graphs_b)?;
    if null_p.positions.n() != n || null_q.positions.n() != n {
        return Err(Error::Input("null models and samples differ in vertex count".into()));
    }
    let observed = statistic_pipeline::<T>(graphs_a, graphs_b, cfg)?;
    let p0 = build_prob_matrix(null_p);
    let q0 = build_prob_matrix(null_q);
    let (m_a, m_b) = (graphs_a.len(), graphs_b.len());
    let null = null_reference_distribution::<T, _>(cfg, reps, seed, |rng| {
        let a = (0..m_a).map(|_| sample_graph(&p0, rng)).collect::<Result<_>>()?;
        let b = (0..m_b).map(|_| sample_graph(&q0, rng)).collect::<Result<_>>()?;
        Ok((a, b))
    })?;
    let samples: Vec<f64> = null.iter().map(|s| s.t).collect();
    Ok(TestReport {
        method: Method::NullReference,
        t_observed: observed.statistic.t,
        observed_degenerate: observed.statistic.degenerate,
        p_value: p_value_lower_tail(observed.statistic.t, &samples),
        degenerate_replicates: null.iter().filter(|s| s.degenerate).count(),
        null_samples: NullSamples::Single(samples),
        n_reps: reps,
        seed,
        n,
        k_a: observed.rank_a,
        k_b: observed.rank_b,
        settings: *cfg,
    })
}
