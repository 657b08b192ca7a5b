//! Simulation experiments: power tables over grids of `(n, eps)` and the
//! empirical convergence check of the statistic.
//!
//! The generative model follows the standard setup: `X` is `n x 2` standard
//! normal, `P = rho exp(-|x_i - x_j|^2)` and `Q = rho exp(-|y_i - y_j|^2 / 4)`
//! with `Y = (1 + eps) X` (setting M1, always null) or `Y = X + Z`,
//! `Z ~ N(0, eps)` entrywise (setting M2). With [`Links::Shared`] both
//! samples use `exp(-r^2)`.
//!
//! Every trial owns a seed derived from the experiment seed and the cell, so
//! any trial can be replayed alone with [`replay_trial`] and results do not
//! depend on the thread count.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::procrustes_distance;
use crate::error::{Error, Result};
use crate::estimator::{discretize, estimate_prob_matrix, average_adjacency, EstimatorConfig};
use crate::graph::AdjMatrix;
use crate::model::{
    build_prob_matrix, generate_std_normal_positions, perturb_m1, perturb_m2, sample_graph, GraphModel,
    LatentPositions, LinkKernel,
};
use crate::ranktest::{spearman_statistic, statistic_pipeline, TestStatistic};
use crate::resampling::{bootstrap_test, null_reference_distribution, p_value_lower_tail, permutation_test};
use crate::rng::{derive_seed, rng_from_seed, tag};
use crate::symmat::SymMatrix;

const LATENT_DIM: usize = 2;

fn kernel_p() -> LinkKernel<f64> {
    LinkKernel::SqExponential { scale: 1.0 }
}

fn kernel_q() -> LinkKernel<f64> {
    LinkKernel::SqExponential { scale: 4.0 }
}

/// Link functions of the two populations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Links {
    /// `exp(-r^2)` for the first sample, `exp(-r^2 / 4)` for the second.
    #[default]
    Distinct,
    /// `exp(-r^2)` for both, so `eps = 0` gives identical distributions.
    Shared,
}

impl Links {
    fn kernels(self) -> (LinkKernel<f64>, LinkKernel<f64>) {
        match self {
            Links::Distinct => (kernel_p(), kernel_q()),
            Links::Shared => (kernel_p(), kernel_p()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setting {
    M1,
    M2,
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Setting::M1 => "M1",
            Setting::M2 => "M2",
        })
    }
}

/// Sparsity as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RhoRule {
    #[default]
    Dense,
    /// `rho = gamma log(n) / n`.
    GammaLog(f64),
}

impl RhoRule {
    pub fn rho(&self, n: usize) -> Result<f64> {
        match *self {
            RhoRule::Dense => Ok(1.0),
            RhoRule::GammaLog(gamma) => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::Parameter(format!("gamma = {gamma} must be > 0")));
                }
                let rho = gamma * (n as f64).ln() / n as f64;
                if !(rho > 0.0 && rho <= 1.0) {
                    return Err(Error::Parameter(format!(
                        "gamma log(n)/n = {rho} is outside (0, 1] for n = {n}"
                    )));
                }
                Ok(rho)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Calibration {
    /// Simulation-only: compare against statistics regenerated from the
    /// null model (`Y = X`) on each trial's own latent positions.
    NullReference,
    Permutation,
    Bootstrap,
}

fn default_m() -> usize {
    1
}

fn default_reps() -> usize {
    200
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub setting: Setting,
    pub n_list: Vec<usize>,
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub rho_rule: RhoRule,
    #[serde(default)]
    pub links: Links,
    /// Graphs per sample.
    #[serde(default = "default_m")]
    pub m: usize,
    pub calibration: Calibration,
    pub trials: usize,
    /// Resampling replications per trial (or null draws per `n` for the
    /// null-reference calibration).
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub estimator: EstimatorConfig,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Parameter(format!("alpha = {} outside (0, 1)", self.alpha)));
        }
        if self.trials < 1 || self.reps < 1 || self.m < 1 {
            return Err(Error::Parameter("trials, reps and m must all be >= 1".into()));
        }
        if self.n_list.is_empty() || self.eps_list.is_empty() {
            return Err(Error::Parameter("n_list and eps_list must be non-empty".into()));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 3) {
            return Err(Error::Parameter(format!("n = {n} is below the minimum of 3")));
        }
        if let Some(&e) = self.eps_list.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
            return Err(Error::Parameter(format!("eps = {e} must be finite and >= 0")));
        }
        if self.calibration == Calibration::Permutation && self.m < 2 {
            return Err(Error::Calibration(
                "the permutation calibration needs m >= 2 graphs per sample".into(),
            ));
        }
        for &n in &self.n_list {
            self.rho_rule.rho(n)?;
        }
        Ok(())
    }
}

/// Outcome of one end-to-end trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub t: f64,
    pub degenerate: bool,
    pub p_value: f64,
    pub reject: bool,
    pub d_n: f64,
    pub k_a: usize,
    pub k_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub setting: Setting,
    pub n: usize,
    pub eps: f64,
    pub rho: f64,
    /// `None` when the cell aborted; `error` then says why.
    pub power: Option<f64>,
    pub mean_t: Option<f64>,
    /// 5%, 50% and 95% quantiles of the observed statistic.
    pub t_quantiles: Option<[f64; 3]>,
    pub mean_dn: Option<f64>,
    pub trials: usize,
    pub reps: usize,
    pub seed: u64,
    pub trial_seeds: Vec<u64>,
    pub records: Vec<TrialRecord>,
    pub error: Option<String>,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerTable {
    pub rows: Vec<PowerRow>,
}

pub const CSV_HEADER: [&str; 10] = ["setting", "n", "eps", "rho", "power", "mean_t", "mean_dn", "trials", "N", "seed"];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl PowerTable {
    /// One line per cell with the fixed header; aborted cells have empty
    /// `power`, `mean_t` and `mean_dn` fields. Timing is not included so the
    /// output is reproducible byte for byte.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.setting.to_string(),
                r.n.to_string(),
                r.eps.to_string(),
                r.rho.to_string(),
                opt(r.power),
                opt(r.mean_t),
                opt(r.mean_dn),
                r.trials.to_string(),
                r.reps.to_string(),
                r.seed.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Seed of trial `trial` at size `n`. The same trial index shares its latent
/// positions (and, under M2, its noise direction) across every `eps`.
pub fn trial_seed(spec_seed: u64, n: usize, trial: usize) -> u64 {
    derive_seed(spec_seed, &[n as u64, trial as u64])
}

/// Latent positions and probability matrices of one trial.
pub struct TrialModel {
    pub x: LatentPositions<f64>,
    pub y: LatentPositions<f64>,
    pub p: SymMatrix<f64>,
    pub q: SymMatrix<f64>,
}

pub fn trial_model(setting: Setting, links: Links, n: usize, eps: f64, rho: f64, seed: u64) -> Result<TrialModel> {
    let mut rng = rng_from_seed(derive_seed(seed, &[tag::POSITIONS]));
    let x = generate_std_normal_positions(n, LATENT_DIM, &mut rng)?;
    let y = match setting {
        Setting::M1 => perturb_m1(&x, eps),
        Setting::M2 => {
            let mut noise = rng_from_seed(derive_seed(seed, &[tag::NOISE]));
            perturb_m2(&x, eps, &mut noise)?
        }
    };
    let (h, g) = links.kernels();
    let p = build_prob_matrix(&GraphModel::new(x.clone(), h, rho)?);
    let q = build_prob_matrix(&GraphModel::new(y.clone(), g, rho)?);
    Ok(TrialModel { x, y, p, q })
}

fn sample_many(p: &SymMatrix<f64>, m: usize, rng: &mut crate::rng::SimRng) -> Result<Vec<AdjMatrix>> {
    (0..m).map(|_| sample_graph(p, rng)).collect()
}

/// Null statistics of one trial: graphs are regenerated `reps` times from
/// the null pair `(X, h)`, `(X, g)` with the trial's own positions `X`.
fn null_reference_for_trial(spec: &ExperimentSpec, n: usize, rho: f64, seed: u64) -> Result<Vec<f64>> {
    let null = trial_model(Setting::M1, spec.links, n, 0.0, rho, seed)?;
    let m = spec.m;
    let stats = null_reference_distribution::<f64, _>(
        &spec.estimator,
        spec.reps,
        derive_seed(seed, &[tag::NULL_REFERENCE]),
        |rng| Ok((sample_many(&null.p, m, rng)?, sample_many(&null.q, m, rng)?)),
    )?;
    Ok(stats.into_iter().map(|s| s.t).collect())
}

fn run_cell_trial(
    spec: &ExperimentSpec,
    n: usize,
    eps: f64,
    rho: f64,
    trial: usize,
    null: Option<&[f64]>,
) -> Result<TrialRecord> {
    let seed = trial_seed(spec.seed, n, trial);
    let model = trial_model(spec.setting, spec.links, n, eps, rho, seed)?;
    let mut rng = rng_from_seed(derive_seed(seed, &[tag::GRAPHS, eps.to_bits()]));
    let a = sample_many(&model.p, spec.m, &mut rng)?;
    let b = sample_many(&model.q, spec.m, &mut rng)?;
    let cal_seed = derive_seed(seed, &[tag::CALIBRATION, eps.to_bits()]);
    let cfg = &spec.estimator;
    let (stat, p_value, k_a, k_b) = match spec.calibration {
        Calibration::NullReference => {
            let null = null.expect("null reference computed before the cells");
            let res = statistic_pipeline::<f64>(&a, &b, cfg)?;
            let p = p_value_lower_tail(res.statistic.t, null);
            (res.statistic, p, res.rank_a, res.rank_b)
        }
        Calibration::Permutation => {
            let r = permutation_test::<f64>(&a, &b, cfg, spec.reps, cal_seed)?;
            (stat_of(&r, n), r.p_value, r.k_a, r.k_b)
        }
        Calibration::Bootstrap => {
            let r = bootstrap_test::<f64>(&a, &b, cfg, spec.reps, cal_seed)?;
            (stat_of(&r, n), r.p_value, r.k_a, r.k_b)
        }
    };
    let d_n = procrustes_distance(&model.x, &model.y)?.distance;
    Ok(TrialRecord {
        trial,
        seed,
        t: stat.t,
        degenerate: stat.degenerate,
        p_value,
        reject: p_value < spec.alpha,
        d_n,
        k_a,
        k_b,
    })
}

/// One trial index at size `n`, evaluated for every `eps` in order.
fn run_trial(spec: &ExperimentSpec, n: usize, rho: f64, trial: usize) -> Vec<Result<TrialRecord>> {
    let null = match spec.calibration {
        Calibration::NullReference => {
            match null_reference_for_trial(spec, n, rho, trial_seed(spec.seed, n, trial)) {
                Ok(v) => Some(v),
                Err(e) => {
                    let msg = format!("null reference failed: {e}");
                    return spec.eps_list.iter().map(|_| Err(Error::Calibration(msg.clone()))).collect();
                }
            }
        }
        _ => None,
    };
    spec.eps_list
        .iter()
        .map(|&eps| run_cell_trial(spec, n, eps, rho, trial, null.as_deref()))
        .collect()
}

fn stat_of(r: &crate::resampling::TestReport, n: usize) -> TestStatistic {
    TestStatistic {
        t: r.t_observed,
        n,
        degenerate: r.observed_degenerate,
    }
}

/// Re-runs trial `trial` of cell `(n, eps)` alone. The result is identical to
/// the corresponding record of [`run_experiment`].
pub fn replay_trial(spec: &ExperimentSpec, n: usize, eps: f64, trial: usize) -> Result<TrialRecord> {
    spec.validate()?;
    let rho = spec.rho_rule.rho(n)?;
    let null = match spec.calibration {
        Calibration::NullReference => Some(null_reference_for_trial(spec, n, rho, trial_seed(spec.seed, n, trial))?),
        _ => None,
    };
    run_cell_trial(spec, n, eps, rho, trial, null.as_deref())
}

/// Empirical quantile by linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn summarize(
    spec: &ExperimentSpec,
    n: usize,
    eps: f64,
    rho: f64,
    outcome: Result<Vec<TrialRecord>>,
    secs: f64,
) -> PowerRow {
    let trial_seeds = (0..spec.trials).map(|t| trial_seed(spec.seed, n, t)).collect();
    let mut row = PowerRow {
        setting: spec.setting,
        n,
        eps,
        rho,
        power: None,
        mean_t: None,
        t_quantiles: None,
        mean_dn: None,
        trials: spec.trials,
        reps: spec.reps,
        seed: spec.seed,
        trial_seeds,
        records: Vec::new(),
        error: None,
        wall_clock_secs: secs,
    };
    match outcome {
        Ok(records) => {
            let k = records.len() as f64;
            let rejections = records.iter().filter(|r| r.reject).count();
            let mut ts: Vec<f64> = records.iter().map(|r| r.t).collect();
            ts.sort_by(f64::total_cmp);
            row.power = Some(rejections as f64 / k);
            row.mean_t = Some(ts.iter().sum::<f64>() / k);
            row.t_quantiles = Some([quantile(&ts, 0.05), quantile(&ts, 0.5), quantile(&ts, 0.95)]);
            row.mean_dn = Some(records.iter().map(|r| r.d_n).sum::<f64>() / k);
            row.records = records;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs every `(n, eps)` cell. A failing trial aborts only its cell, which
/// is reported with an error message and no power. The wall-clock time of a
/// row is that of all cells sharing its `n`, which are computed together.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<PowerTable> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &n in &spec.n_list {
        let rho = spec.rho_rule.rho(n)?;
        let start = Instant::now();
        let by_trial: Vec<Vec<Result<TrialRecord>>> =
            (0..spec.trials).into_par_iter().map(|t| run_trial(spec, n, rho, t)).collect();
        let secs = start.elapsed().as_secs_f64();
        let mut columns: Vec<Vec<Result<TrialRecord>>> = spec.eps_list.iter().map(|_| Vec::new()).collect();
        for trial in by_trial {
            for (col, rec) in columns.iter_mut().zip(trial) {
                col.push(rec);
            }
        }
        for (&eps, col) in spec.eps_list.iter().zip(columns) {
            let outcome = col.into_iter().collect::<Result<Vec<_>>>();
            rows.push(summarize(spec, n, eps, rho, outcome, secs));
        }
    }
    Ok(PowerTable { rows })
}

/// Discretisation step used by the convergence diagnostic at size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaSchedule {
    None,
    Fixed(f64),
    /// `eta_n = min(1, c n^(-exponent))`.
    Power { c: f64, exponent: f64 },
}

impl EtaSchedule {
    pub fn eta(&self, n: usize) -> Option<f64> {
        match *self {
            EtaSchedule::None => None,
            EtaSchedule::Fixed(eta) => Some(eta),
            EtaSchedule::Power { c, exponent } => Some((c * (n as f64).powf(-exponent)).min(1.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    pub n_list: Vec<usize>,
    pub kernel_p: LinkKernel<f64>,
    pub kernel_q: LinkKernel<f64>,
    /// Scaling `Y = (1 + eps) X`, so the null holds.
    #[serde(default)]
    pub eps: f64,
    #[serde(default = "default_m")]
    pub m: usize,
    pub estimator: EstimatorConfig,
    pub eta: EtaSchedule,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub eta: Option<f64>,
    pub median_gap: f64,
    pub gaps: Vec<f64>,
}

/// `|T(p_tilde, q_tilde) - T(p, q)|`.
pub fn statistic_gap(
    p: &SymMatrix<f64>,
    q: &SymMatrix<f64>,
    p_tilde: &SymMatrix<f64>,
    q_tilde: &SymMatrix<f64>,
) -> Result<f64> {
    Ok((spearman_statistic(p_tilde, q_tilde)?.t - spearman_statistic(p, q)?.t).abs())
}

fn estimate_side(graphs: &[AdjMatrix], cfg: &EstimatorConfig, eta: Option<f64>) -> Result<SymMatrix<f64>> {
    let abar = average_adjacency::<f64>(graphs)?;
    let p = estimate_prob_matrix(&abar, cfg)?.p;
    match eta {
        Some(eta) => discretize(&p, eta),
        None => Ok(p),
    }
}

/// Median gap between the statistic on discretised estimates and on the true
/// probability matrices, for each `n`.
pub fn convergence_diagnostic(spec: &ConvergenceSpec) -> Result<Vec<ConvergenceRow>> {
    spec.estimator.validate()?;
    spec.kernel_p.validate()?;
    spec.kernel_q.validate()?;
    if spec.trials < 1 || spec.m < 1 {
        return Err(Error::Parameter("trials and m must be >= 1".into()));
    }
    spec.n_list
        .iter()
        .map(|&n| {
            let eta = spec.eta.eta(n);
            let gaps = (0..spec.trials)
                .into_par_iter()
                .map(|t| {
                    let seed = derive_seed(spec.seed, &[n as u64, t as u64]);
                    let mut rng = rng_from_seed(seed);
                    let x = generate_std_normal_positions(n, LATENT_DIM, &mut rng)?;
                    let y = perturb_m1(&x, spec.eps);
                    let p = build_prob_matrix(&GraphModel::new(x, spec.kernel_p, 1.0)?);
                    let q = build_prob_matrix(&GraphModel::new(y, spec.kernel_q, 1.0)?);
                    let a = sample_many(&p, spec.m, &mut rng)?;
                    let b = sample_many(&q, spec.m, &mut rng)?;
                    let pt = estimate_side(&a, &spec.estimator, eta)?;
                    let qt = estimate_side(&b, &spec.estimator, eta)?;
                    statistic_gap(&p, &q, &pt, &qt)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mut sorted = gaps.clone();
            sorted.sort_by(f64::total_cmp);
            let median_gap = quantile(&sorted, 0.5);
            Ok(ConvergenceRow { n, eta, median_gap, gaps })
        })
        .collect()
}
