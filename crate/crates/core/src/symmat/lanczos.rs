//! Lanczos iteration with full reorthogonalisation for the few eigenpairs of
//! largest magnitude.
//!
//! The Krylov basis is grown until every wanted Ritz pair has a residual
//! below `eps^0.75 * |theta_max|`. If the iteration breaks down (the start
//! vector spans an invariant subspace) or the basis reaches `n` vectors, the
//! caller falls back to the full decomposition.

use rand::Rng;
use rand_distr::StandardNormal;

use super::tridiag::tql2;
use super::order_spectrum;
use crate::rng::rng_from_seed;
use crate::scalar::Scalar;

const START_SEED: u64 = 0x1a2c_705e_ed00_0001;

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] = acc[0] + x[0] * y[0];
        acc[1] = acc[1] + x[1] * y[1];
        acc[2] = acc[2] + x[2] * y[2];
        acc[3] = acc[3] + x[3] * y[3];
    }
    let mut tail = T::zero();
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail = tail + *x * *y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi - alpha * *xi;
    }
}

/// Top-`k` eigenpairs (by magnitude) of the row-major dense symmetric matrix
/// `dense`. Returns `None` when the caller should use the full solver.
pub(crate) fn top_eigenpairs<T: Scalar>(
    dense: &[T],
    n: usize,
    k: usize,
) -> Option<(Vec<T>, Vec<Vec<T>>)> {
    if k == 0 || k >= n {
        return None;
    }
    let tol = T::epsilon().powf(T::of(0.75));
    let first_check = n.min((2 * k + 20).max(40));

    let mut rng = rng_from_seed(START_SEED);
    let mut q0: Vec<T> = (0..n)
        .map(|_| T::of(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let norm = dot(&q0, &q0).sqrt();
    q0.iter_mut().for_each(|x| *x = *x / norm);

    let mut basis: Vec<Vec<T>> = vec![q0];
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    let mut w = vec![T::zero(); n];
    let mut scale = T::zero();

    loop {
        let j = basis.len() - 1;
        let qj = &basis[j];
        for (wi, row) in w.iter_mut().zip(dense.chunks_exact(n)) {
            *wi = dot(row, qj);
        }
        let a = dot(qj, &w);
        alpha.push(a);
        axpy(a, qj, &mut w);
        if j > 0 {
            axpy(beta[j - 1], &basis[j - 1], &mut w);
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(c, q, &mut w);
            }
        }
        let b = dot(&w, &w).sqrt();
        scale = scale.max(a.abs() + b);
        let m = basis.len();

        let broke_down = b <= T::epsilon() * T::of(n as f64) * scale;
        if broke_down || m == n {
            return None;
        }
        beta.push(b);

        if m >= first_check && ((m - first_check) % 8 == 0) {
            if let Some(out) = ritz_pairs(&basis, &alpha, &beta, k, tol) {
                return Some(out);
            }
        }

        let next: Vec<T> = w.iter().map(|x| *x / b).collect();
        basis.push(next);
    }
}

/// Ritz pairs for the current basis if the `k` of largest magnitude have
/// converged.
fn ritz_pairs<T: Scalar>(
    basis: &[Vec<T>],
    alpha: &[T],
    beta: &[T],
    k: usize,
    tol: T,
) -> Option<(Vec<T>, Vec<Vec<T>>)> {
    let m = alpha.len();
    let n = basis[0].len();
    let mut d = alpha.to_vec();
    let mut e = vec![T::zero(); m];
    e[1..m].copy_from_slice(&beta[..(m - 1)]);
    let mut s = vec![T::zero(); m * m];
    for i in 0..m {
        s[i * m + i] = T::one();
    }
    if !tql2(&mut d, &mut e, &mut s, m) {
        return None;
    }
    let order = order_spectrum(&d);
    let theta_max = d[order[0]].abs();
    let last_beta = beta[m - 1];
    for &idx in order.iter().take(k) {
        let resid = (last_beta * s[idx * m + (m - 1)]).abs();
        if resid > tol * theta_max {
            return None;
        }
    }

    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let coeffs = &s[idx * m..(idx + 1) * m];
        let mut y = vec![T::zero(); n];
        for (c, q) in coeffs.iter().zip(basis) {
            for (yi, qi) in y.iter_mut().zip(q) {
                *yi = *yi + *c * *qi;
            }
        }
        let norm = dot(&y, &y).sqrt();
        y.iter_mut().for_each(|x| *x = *x / norm);
        values.push(d[idx]);
        vectors.push(y);
    }
    Some((values, vectors))
}
