//! Procrustes distance between latent configurations under similarity
//! transformations (scale, orthogonal map, translation).

use crate::error::{Error, Result};
use crate::model::LatentPositions;
use crate::scalar::Scalar;

/// `y -> scale * y * rotation + translation`, acting on row vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTransform<T> {
    pub scale: T,
    /// `d x d` orthogonal matrix, row-major. May include a reflection.
    pub rotation: Vec<T>,
    pub translation: Vec<T>,
}

impl<T: Scalar> SimilarityTransform<T> {
    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, y: &LatentPositions<T>) -> Result<LatentPositions<T>> {
        let d = self.dim();
        if y.d() != d {
            return Err(Error::Input(format!(
                "transform acts on dimension {d}, positions have {}",
                y.d()
            )));
        }
        let mut rows = Vec::with_capacity(y.n() * d);
        for i in 0..y.n() {
            let yi = y.row(i);
            for c in 0..d {
                let mut acc = T::zero();
                for (r, &v) in yi.iter().enumerate() {
                    acc = acc + v * self.rotation[r * d + c];
                }
                rows.push(self.scale * acc + self.translation[c]);
            }
        }
        LatentPositions::new(y.n(), d, rows)
    }

    /// `max |W^T W - I|`.
    pub fn orthogonality_error(&self) -> T {
        let d = self.dim();
        let mut worst = T::zero();
        for a in 0..d {
            for b in 0..d {
                let mut dot = T::zero();
                for r in 0..d {
                    dot = dot + self.rotation[r * d + a] * self.rotation[r * d + b];
                }
                let target = if a == b { T::one() } else { T::zero() };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Minimal residual and the transform achieving it.
#[derive(Debug, Clone)]
pub struct ProcrustesFit<T> {
    pub distance: T,
    pub transform: SimilarityTransform<T>,
}

fn frobenius_residual<T: Scalar>(x: &LatentPositions<T>, fitted: &LatentPositions<T>) -> T {
    x.as_slice()
        .iter()
        .zip(fitted.as_slice())
        .map(|(a, b)| (*a - *b) * (*a - *b))
        .sum::<T>()
        .sqrt()
}

/// Thin SVD of a square row-major matrix by one-sided Jacobi rotations.
/// Returns `(u, sigma, v)` with `a = u diag(sigma) v^T`; `u` is completed to an
/// orthogonal matrix when `a` is rank deficient.
pub(crate) fn small_svd<T: Scalar>(a: &[T], d: usize) -> (Vec<T>, Vec<T>, Vec<T>) {
    let mut w = a.to_vec();
    let mut v = vec![T::zero(); d * d];
    for i in 0..d {
        v[i * d + i] = T::one();
    }
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..d {
            for q in (p + 1)..d {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for r in 0..d {
                    let (ap, aq) = (w[r * d + p], w[r * d + q]);
                    alpha = alpha + ap * ap;
                    beta = beta + aq * aq;
                    gamma = gamma + ap * aq;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::of(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for m in [&mut w, &mut v] {
                    for r in 0..d {
                        let (xp, xq) = (m[r * d + p], m[r * d + q]);
                        m[r * d + p] = c * xp - s * xq;
                        m[r * d + q] = s * xp + c * xq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<T> = (0..d)
        .map(|c| (0..d).map(|r| w[r * d + c] * w[r * d + c]).sum::<T>().sqrt())
        .collect();
    let smax = sigma.iter().fold(T::zero(), |m, &s| m.max(s));
    let tiny = smax * eps * T::of(d as f64 * 16.0);

    let mut u = vec![T::zero(); d * d];
    let mut filled = vec![false; d];
    for c in 0..d {
        if sigma[c] > tiny && sigma[c] > T::zero() {
            for r in 0..d {
                u[r * d + c] = w[r * d + c] / sigma[c];
            }
            filled[c] = true;
        }
    }
    // Complete the missing columns of u with Gram-Schmidt on e_1, e_2, ...
    let mut basis = 0;
    for c in 0..d {
        if filled[c] {
            continue;
        }
        loop {
            let mut cand = vec![T::zero(); d];
            cand[basis % d] = T::one();
            basis += 1;
            for _ in 0..2 {
                for k in 0..d {
                    if !filled[k] {
                        continue;
                    }
                    let dot: T = (0..d).map(|r| cand[r] * u[r * d + k]).sum();
                    for r in 0..d {
                        cand[r] = cand[r] - dot * u[r * d + k];
                    }
                }
            }
            let norm = cand.iter().map(|x| *x * *x).sum::<T>().sqrt();
            if norm > T::of(0.5) || basis > 4 * d {
                for r in 0..d {
                    u[r * d + c] = cand[r] / norm;
                }
                filled[c] = true;
                break;
            }
        }
    }
    (u, sigma, v)
}

/// Minimises `|X - s Y W - 1 t^T|_F` over scale `s`, orthogonal `W` and
/// translation `t` in closed form.
///
/// `W` ranges over the full orthogonal group, so the optimal scale is never
/// negative. When `Y` has all rows equal the scale is 0, `W` is the identity
/// and the distance is the spread of `X` about its mean.
pub fn procrustes_distance<T: Scalar>(
    x: &LatentPositions<T>,
    y: &LatentPositions<T>,
) -> Result<ProcrustesFit<T>> {
    if x.n() != y.n() || x.d() != y.d() {
        return Err(Error::Input(format!(
            "configurations differ in shape ({}x{} vs {}x{})",
            x.n(),
            x.d(),
            y.n(),
            y.d()
        )));
    }
    let (n, d) = (x.n(), x.d());
    let nf = T::of(n as f64);
    let mean = |z: &LatentPositions<T>| -> Vec<T> {
        (0..d)
            .map(|c| (0..n).map(|i| z.row(i)[c]).sum::<T>() / nf)
            .collect()
    };
    let (xm, ym) = (mean(x), mean(y));

    // cross = Yc^T Xc, d x d.
    let mut cross = vec![T::zero(); d * d];
    let mut y_ss = T::zero();
    for i in 0..n {
        let (xi, yi) = (x.row(i), y.row(i));
        for r in 0..d {
            let yr = yi[r] - ym[r];
            y_ss = y_ss + yr * yr;
            for c in 0..d {
                cross[r * d + c] = cross[r * d + c] + yr * (xi[c] - xm[c]);
            }
        }
    }

    let (scale, rotation) = if y_ss == T::zero() {
        let mut eye = vec![T::zero(); d * d];
        for i in 0..d {
            eye[i * d + i] = T::one();
        }
        (T::zero(), eye)
    } else {
        let (u, sigma, v) = small_svd(&cross, d);
        let mut w = vec![T::zero(); d * d];
        for r in 0..d {
            for c in 0..d {
                w[r * d + c] = (0..d).map(|k| u[r * d + k] * v[c * d + k]).sum();
            }
        }
        let trace: T = sigma.iter().copied().sum();
        (trace / y_ss, w)
    };

    // t = x_mean - s * y_mean W
    let translation: Vec<T> = (0..d)
        .map(|c| {
            let yw: T = (0..d).map(|r| ym[r] * rotation[r * d + c]).sum();
            xm[c] - scale * yw
        })
        .collect();
    let transform = SimilarityTransform {
        scale,
        rotation,
        translation,
    };
    let fitted = transform.apply(y)?;
    Ok(ProcrustesFit {
        distance: frobenius_residual(x, &fitted),
        transform,
    })
}
