//! Latent distance random graph model: latent positions, link kernels,
//! edge-probability matrices and Bernoulli sampling.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{pair_count, AdjMatrix};
use crate::scalar::Scalar;
use crate::symmat::SymMatrix;

/// `n` points in `R^d`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPositions<T> {
    n: usize,
    d: usize,
    rows: Vec<T>,
}

impl<T: Scalar> LatentPositions<T> {
    pub fn new(n: usize, d: usize, rows: Vec<T>) -> Result<Self> {
        if n < 2 || d < 1 {
            return Err(Error::Input(format!(
                "latent positions need n >= 2 and d >= 1 (got n = {n}, d = {d})"
            )));
        }
        if rows.len() != n * d {
            return Err(Error::Input(format!(
                "expected {} coordinates, got {}",
                n * d,
                rows.len()
            )));
        }
        if rows.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("latent positions must be finite".into()));
        }
        Ok(LatentPositions { n, d, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.rows
    }

    pub fn distance(&self, i: usize, j: usize) -> T {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .sum::<T>()
            .sqrt()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        LatentPositions {
            n: self.n,
            d: self.d,
            rows: self.rows.iter().map(|&x| f(x)).collect(),
        }
    }
}

/// Monotone non-increasing link `h(r)` from latent distance to connection
/// probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LinkKernel<T> {
    /// `exp(alpha - beta r) / (1 + exp(alpha - beta r))`
    Logistic { alpha: T, beta: T },
    /// `gamma exp(-r^2 / (2 phi))`
    Gaussian { gamma: T, phi: T },
    /// `exp(-r^2 / scale)`
    SqExponential { scale: T },
}

impl<T: Scalar> LinkKernel<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LinkKernel::Logistic { alpha, beta } => alpha.is_finite() && beta > T::zero() && beta.is_finite(),
            LinkKernel::Gaussian { gamma, phi } => {
                gamma > T::zero() && gamma <= T::one() && phi > T::zero() && phi.is_finite()
            }
            LinkKernel::SqExponential { scale } => scale > T::zero() && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid kernel parameters: {self:?}")))
        }
    }

    pub fn eval(&self, r: T) -> T {
        match *self {
            LinkKernel::Logistic { alpha, beta } => {
                let z = alpha - beta * r;
                // Written to avoid overflow for large |z|.
                if z >= T::zero() {
                    T::one() / (T::one() + (-z).exp())
                } else {
                    let ez = z.exp();
                    ez / (T::one() + ez)
                }
            }
            LinkKernel::Gaussian { gamma, phi } => gamma * (-(r * r) / (T::of(2.0) * phi)).exp(),
            LinkKernel::SqExponential { scale } => (-(r * r) / scale).exp(),
        }
    }
}

/// Latent positions, link and sparsity `rho` in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphModel<T> {
    pub positions: LatentPositions<T>,
    pub kernel: LinkKernel<T>,
    pub rho: T,
}

impl<T: Scalar> GraphModel<T> {
    pub fn new(positions: LatentPositions<T>, kernel: LinkKernel<T>, rho: T) -> Result<Self> {
        kernel.validate()?;
        if !(rho > T::zero() && rho <= T::one()) {
            return Err(Error::Parameter(format!("sparsity {rho} outside (0, 1]")));
        }
        Ok(GraphModel {
            positions,
            kernel,
            rho,
        })
    }
}

/// Edge probabilities `rho * h(|x_i - x_j|)` with a zero diagonal.
pub fn build_prob_matrix<T: Scalar>(model: &GraphModel<T>) -> SymMatrix<T> {
    let x = &model.positions;
    SymMatrix::from_fn(x.n(), |i, j| {
        if i == j {
            T::zero()
        } else {
            model.rho * model.kernel.eval(x.distance(i, j))
        }
    })
}

/// Draws one graph with independent `Bernoulli(p_ij)` upper-triangular
/// entries, mirrored and hollow.
pub fn sample_graph<T: Scalar, R: Rng + ?Sized>(p: &SymMatrix<T>, rng: &mut R) -> Result<AdjMatrix> {
    if let Some(bad) = p
        .upper_triangle()
        .find(|x| !(*x >= T::zero() && *x <= T::one()))
    {
        return Err(Error::Input(format!("edge probability {bad} outside [0, 1]")));
    }
    let n = p.n();
    let mut bits = Vec::with_capacity(pair_count(n));
    for prob in p.upper_triangle() {
        let u: f64 = rng.random();
        bits.push(u8::from(u < prob.as_f64()));
    }
    AdjMatrix::from_upper(n, bits)
}

/// `n x d` matrix of independent standard normal coordinates.
pub fn generate_std_normal_positions<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    d: usize,
    rng: &mut R,
) -> Result<LatentPositions<T>> {
    let rows = (0..n * d)
        .map(|_| T::of(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    LatentPositions::new(n, d, rows)
}

/// Pure rescaling `(1 + eps) X`; the null hypothesis holds for every `eps`.
pub fn perturb_m1<T: Scalar>(x: &LatentPositions<T>, eps: T) -> LatentPositions<T> {
    let s = T::one() + eps;
    x.map(|v| s * v)
}

/// `X + Z` with `Z` i.i.d. normal of variance `eps`.
///
/// One normal draw is consumed per coordinate for every `eps`, so a fixed
/// stream gives nested perturbations across `eps` values.
pub fn perturb_m2<T: Scalar, R: Rng + ?Sized>(
    x: &LatentPositions<T>,
    eps: T,
    rng: &mut R,
) -> Result<LatentPositions<T>> {
    if !(eps >= T::zero()) {
        return Err(Error::Parameter(format!("noise variance {eps} must be >= 0")));
    }
    let sd = eps.sqrt();
    let rows = x
        .as_slice()
        .iter()
        .map(|&v| v + sd * T::of(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    LatentPositions::new(x.n(), x.d(), rows)
}
