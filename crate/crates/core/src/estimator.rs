//! Edge-probability estimation: averaging, spectral truncation of the
//! average, rank selection and grid discretisation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{pair_count, AdjMatrix};
use crate::scalar::Scalar;
use crate::symmat::{eigendecompose, low_rank_approx, SymMatrix};

/// Default constant of the singular value threshold `c0 sqrt(n rho)`.
pub const DEFAULT_C0: f64 = 4.5;
/// Cap on the number of leading eigenvalues scanned by the profile-likelihood
/// elbow when no explicit limit is given.
pub const DEFAULT_MAX_RANK: usize = 50;

/// How the truncation rank is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RankSelection {
    Fixed(usize),
    /// Keep eigenvalues with `|lambda| >= c0 sqrt(n rho_hat)`.
    Threshold { c0: f64 },
    /// Elbow of the leading `|lambda|` sequence by a two-segment Gaussian
    /// profile likelihood. `None` scans `min(n - 1, 50)` values.
    ProfileLikelihood {
        #[serde(default)]
        max_rank: Option<usize>,
    },
}

impl RankSelection {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RankSelection::Fixed(k) if k < 1 => {
                Err(Error::Parameter("fixed rank must be >= 1".into()))
            }
            RankSelection::Threshold { c0 } if !(c0 > 0.0 && c0.is_finite()) => {
                Err(Error::Parameter(format!("threshold constant c0 = {c0} must be > 0")))
            }
            RankSelection::ProfileLikelihood { max_rank: Some(m) } if m < 2 => {
                Err(Error::Parameter("profile likelihood max_rank must be >= 2".into()))
            }
            _ => Ok(()),
        }
    }
}

fn default_clip() -> bool {
    true
}

/// Estimator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub rank: RankSelection,
    #[serde(default = "default_clip")]
    pub clip: bool,
    #[serde(default)]
    pub eta: Option<f64>,
}

impl EstimatorConfig {
    pub fn fixed(k: usize) -> Self {
        EstimatorConfig {
            rank: RankSelection::Fixed(k),
            clip: true,
            eta: None,
        }
    }

    pub fn with_eta(mut self, eta: Option<f64>) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.rank.validate()?;
        if let Some(eta) = self.eta {
            check_eta(eta)?;
        }
        Ok(())
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("discretisation step {eta} outside (0, 1]")))
    }
}

/// A truncated estimate together with the rank it used.
#[derive(Debug, Clone)]
pub struct Estimate<T> {
    pub p: SymMatrix<T>,
    pub rank: usize,
    pub rho_hat: T,
}

/// Per-pair edge counts over a list of graphs on the same vertex set.
pub(crate) fn edge_counts(graphs: &[&AdjMatrix]) -> Result<(usize, Vec<u32>)> {
    let first = graphs
        .first()
        .ok_or_else(|| Error::Input("no graphs supplied".into()))?;
    let n = first.n();
    let mut counts = vec![0u32; pair_count(n)];
    for g in graphs {
        if g.n() != n {
            return Err(Error::Input(format!(
                "graphs have different vertex counts ({} and {})",
                n,
                g.n()
            )));
        }
        for (c, &b) in counts.iter_mut().zip(g.upper()) {
            *c += b as u32;
        }
    }
    Ok((n, counts))
}

pub(crate) fn average_from_counts<T: Scalar>(n: usize, counts: &[u32], m: usize) -> SymMatrix<T> {
    let inv = T::one() / T::of(m as f64);
    let mut it = counts.iter();
    SymMatrix::from_fn(n, |i, j| {
        if i == j {
            T::zero()
        } else {
            T::of(*it.next().expect("count per pair") as f64) * inv
        }
    })
}

/// Entrywise mean of the adjacency matrices.
pub fn average_adjacency<T: Scalar>(graphs: &[AdjMatrix]) -> Result<SymMatrix<T>> {
    let refs: Vec<&AdjMatrix> = graphs.iter().collect();
    let (n, counts) = edge_counts(&refs)?;
    Ok(average_from_counts(n, &counts, graphs.len()))
}

/// Mean off-diagonal entry, used as the sparsity estimate.
pub fn estimate_rho<T: Scalar>(abar: &SymMatrix<T>) -> T {
    let m = pair_count(abar.n());
    if m == 0 {
        return T::zero();
    }
    let sum: f64 = abar.upper_triangle().map(|x| x.as_f64()).sum();
    T::of(sum / m as f64)
}

/// Two-segment Gaussian profile log-likelihood of splitting `x` after the
/// first `q` values, with a shared variance.
pub(crate) fn profile_log_likelihood(x: &[f64], q: usize) -> f64 {
    let (a, b) = x.split_at(q);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let ss: f64 = a.iter().map(|v| (v - ma).powi(2)).sum::<f64>()
        + b.iter().map(|v| (v - mb).powi(2)).sum::<f64>();
    let len = x.len() as f64;
    let var = (ss / len).max(f64::MIN_POSITIVE);
    -0.5 * len * (2.0 * std::f64::consts::PI * var).ln() - ss / (2.0 * var)
}

/// Number of components to keep for a spectrum ordered by decreasing
/// magnitude.
pub fn resolve_rank<T: Scalar>(spectrum: &[T], method: RankSelection, rho_hat: T) -> Result<usize> {
    method.validate()?;
    let n = spectrum.len();
    if n == 0 {
        return Err(Error::Input("empty spectrum".into()));
    }
    if let RankSelection::Fixed(k) = method {
        return Ok(k.min(n));
    }
    let magnitudes: Vec<f64> = spectrum.iter().map(|x| x.as_f64().abs()).collect();
    if magnitudes.iter().all(|&x| x == 0.0) {
        return Err(Error::Estimation {
            message: "spectrum is identically zero; no rank can be selected".into(),
            spectrum: spectrum.iter().map(|x| x.as_f64()).collect(),
        });
    }
    match method {
        RankSelection::Fixed(_) => unreachable!(),
        RankSelection::Threshold { c0 } => {
            let tau = c0 * (n as f64 * rho_hat.as_f64()).sqrt();
            let k = magnitudes.iter().filter(|&&x| x >= tau).count();
            Ok(k.max(1))
        }
        RankSelection::ProfileLikelihood { max_rank } => {
            let limit = max_rank
                .unwrap_or(DEFAULT_MAX_RANK.min(n.saturating_sub(1)))
                .min(n);
            if limit < 2 {
                return Ok(1);
            }
            let head = &magnitudes[..limit];
            let mut best = (1, f64::NEG_INFINITY);
            for q in 1..limit {
                let ll = profile_log_likelihood(head, q);
                if ll > best.1 {
                    best = (q, ll);
                }
            }
            Ok(best.0)
        }
    }
}

/// Rank-truncated estimate of the edge-probability matrix from an averaged
/// adjacency matrix. Clipping (when enabled) maps entries into `[0, 1]`; the
/// diagonal is always zero. Discretisation is left to the caller.
pub fn estimate_prob_matrix<T: Scalar>(abar: &SymMatrix<T>, cfg: &EstimatorConfig) -> Result<Estimate<T>> {
    cfg.validate()?;
    let rho_hat = estimate_rho(abar);
    let n = abar.n();
    let (raw, rank) = match cfg.rank {
        RankSelection::Fixed(k) => {
            let k = k.min(n);
            (low_rank_approx(abar, k)?, k)
        }
        method => {
            let dec = eigendecompose(abar)?;
            let k = resolve_rank(dec.values(), method, rho_hat)?;
            (dec.truncate(k), k)
        }
    };
    let p = if cfg.clip {
        raw.map_hollow(|x| x.max(T::zero()).min(T::one()))
    } else {
        raw.map_hollow(|x| x)
    };
    Ok(Estimate { p, rank, rho_hat })
}

/// Rounds every entry up to the grid `{0, eta, 2 eta, ...}`.
///
/// Values within `1e-12` above a grid point are treated as lying on it, so
/// representation error cannot promote an entry to the next cell.
pub fn discretize<T: Scalar>(p: &SymMatrix<T>, eta: f64) -> Result<SymMatrix<T>> {
    check_eta(eta)?;
    let step = T::of(eta);
    let nudge = T::of(1e-12).max(T::epsilon() * T::of(4.0));
    Ok(p.map(|x| {
        if x <= T::zero() {
            T::zero()
        } else {
            let cells = ((x - nudge) / step).ceil().max(T::zero());
            cells * step
        }
    }))
}
