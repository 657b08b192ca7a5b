//! Dense symmetric matrices stored as a packed upper triangle, with the
//! spectral primitives the estimators are built on.

mod lanczos;
mod tridiag;

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric `n x n` matrix holding only the upper triangle (diagonal
/// included), packed row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    n: usize,
    data: Vec<T>,
}

#[inline]
fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

#[inline]
fn row_start(n: usize, i: usize) -> usize {
    i * n - i * i.saturating_sub(1) / 2
}

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be positive");
        SymMatrix {
            n,
            data: vec![T::zero(); packed_len(n)],
        }
    }

    /// Builds a matrix from `f(i, j)` evaluated for `i <= j` only.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(n >= 1, "matrix dimension must be positive");
        let mut data = Vec::with_capacity(packed_len(n));
        for i in 0..n {
            for j in i..n {
                data.push(f(i, j));
            }
        }
        SymMatrix { n, data }
    }

    /// Wraps packed upper-triangular storage.
    pub fn from_packed(n: usize, data: Vec<T>) -> Result<Self> {
        if n == 0 || data.len() != packed_len(n) {
            return Err(Error::Input(format!(
                "packed storage of length {} does not match n = {}",
                data.len(),
                n
            )));
        }
        Ok(SymMatrix { n, data })
    }

    /// Reads a row-major dense matrix, rejecting asymmetric input.
    pub fn from_dense(n: usize, dense: &[T]) -> Result<Self> {
        if n == 0 || dense.len() != n * n {
            return Err(Error::Input(format!(
                "dense storage of length {} does not match n = {}",
                dense.len(),
                n
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if dense[i * n + j] != dense[j * n + i] {
                    return Err(Error::Input(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| dense[i * n + j]))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        row_start(self.n, i) + (j - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[self.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        let idx = self.index(i, j);
        self.data[idx] = value;
    }

    /// Packed upper triangle, diagonal included.
    pub fn packed(&self) -> &[T] {
        &self.data
    }

    /// Strictly upper-triangular entries in row-major order (`i < j`).
    pub fn upper_triangle(&self) -> impl Iterator<Item = T> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| {
            let start = row_start(n, i) + 1;
            self.data[start..start + (n - 1 - i)].iter().copied()
        })
    }

    pub fn diagonal(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.n).map(move |i| self.data[row_start(self.n, i)])
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Applies `f` to off-diagonal entries and sets the diagonal to zero.
    pub fn map_hollow(&self, f: impl Fn(T) -> T) -> Self {
        let mut out = self.map(f);
        for i in 0..self.n {
            out.data[row_start(self.n, i)] = T::zero();
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<T> {
        let n = self.n;
        let mut out = vec![T::zero(); n * n];
        for i in 0..n {
            let start = row_start(n, i);
            for (off, &x) in self.data[start..start + (n - i)].iter().enumerate() {
                let j = i + off;
                out[i * n + j] = x;
                out[j * n + i] = x;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        let n = self.n;
        let mut diag = T::zero();
        let mut off = T::zero();
        for i in 0..n {
            let start = row_start(n, i);
            diag = diag + self.data[start] * self.data[start];
            for &x in &self.data[start + 1..start + (n - i)] {
                off = off + x * x;
            }
        }
        (diag + off + off).sqrt()
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &Self) -> T {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let diff = SymMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| *a - *b)
                .collect(),
        };
        diff.frobenius_norm()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

/// Eigen-decomposition `M = V diag(values) V^T`.
///
/// Eigenvalues are sorted by decreasing magnitude, ties broken by the signed
/// value. Each eigenvector's first component above `sqrt(eps)` in magnitude
/// is positive.
#[derive(Debug, Clone)]
pub struct SpectralDecomp<T> {
    values: Vec<T>,
    /// Column-major `n x n`; column `k` is the eigenvector of `values[k]`.
    vectors: Vec<T>,
}

impl<T: Scalar> SpectralDecomp<T> {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn vector(&self, k: usize) -> &[T] {
        let n = self.n();
        &self.vectors[k * n..(k + 1) * n]
    }

    /// `sum_{k < rank} lambda_k v_k v_k^T`.
    pub fn truncate(&self, rank: usize) -> SymMatrix<T> {
        let rank = rank.min(self.n());
        let vecs: Vec<&[T]> = (0..rank).map(|k| self.vector(k)).collect();
        reconstruct(self.n(), &self.values[..rank], &vecs)
    }

    pub fn reconstruct(&self) -> SymMatrix<T> {
        self.truncate(self.n())
    }
}

/// Indices of `values` sorted by decreasing `|value|`, then decreasing value.
pub(crate) fn order_spectrum<T: Scalar>(values: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (values[a], values[b]);
        y.abs()
            .partial_cmp(&x.abs())
            .unwrap_or(Ordering::Equal)
            .then(y.partial_cmp(&x).unwrap_or(Ordering::Equal))
            .then(a.cmp(&b))
    });
    order
}

fn normalize_sign<T: Scalar>(v: &mut [T]) {
    let threshold = T::epsilon().sqrt();
    if let Some(first) = v.iter().find(|x| x.abs() > threshold) {
        if *first < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn reconstruct<T: Scalar>(n: usize, values: &[T], vectors: &[&[T]]) -> SymMatrix<T> {
    let mut data = vec![T::zero(); packed_len(n)];
    for (&lambda, v) in values.iter().zip(vectors) {
        for i in 0..n {
            let a = lambda * v[i];
            if a == T::zero() {
                continue;
            }
            let start = row_start(n, i);
            for (out, &vj) in data[start..start + (n - i)].iter_mut().zip(&v[i..]) {
                *out = *out + a * vj;
            }
        }
    }
    SymMatrix { n, data }
}

/// Full symmetric eigen-decomposition.
pub fn eigendecompose<T: Scalar>(m: &SymMatrix<T>) -> Result<SpectralDecomp<T>> {
    if !m.is_finite() {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    let n = m.n();
    let mut v = m.to_dense();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiag::tred2(&mut v, &mut d, &mut e, n);
    if !tridiag::tql2(&mut d, &mut e, &mut v, n) {
        return Err(Error::Estimation {
            message: "eigenvalue iteration did not converge".into(),
            spectrum: d.iter().map(|x| x.as_f64()).collect(),
        });
    }

    let order = order_spectrum(&d);
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n * n);
    for &k in &order {
        values.push(d[k]);
        let mut col = v[k * n..(k + 1) * n].to_vec();
        normalize_sign(&mut col);
        vectors.extend_from_slice(&col);
    }
    Ok(SpectralDecomp { values, vectors })
}

/// The `rank` eigenpairs of largest magnitude, ordered and sign-normalised
/// like [`eigendecompose`].
pub fn top_eigenpairs<T: Scalar>(m: &SymMatrix<T>, rank: usize) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let n = m.n();
    if rank == 0 || rank > n {
        return Err(Error::Parameter(format!(
            "rank {rank} outside 1..={n}"
        )));
    }
    if !m.is_finite() {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    if n >= 48 && 4 * rank <= n {
        if let Some((values, mut vectors)) = lanczos::top_eigenpairs(&m.to_dense(), n, rank) {
            vectors.iter_mut().for_each(|v| normalize_sign(v));
            return Ok((values, vectors));
        }
    }
    let full = eigendecompose(m)?;
    let values = full.values[..rank].to_vec();
    let vectors = (0..rank).map(|k| full.vector(k).to_vec()).collect();
    Ok((values, vectors))
}

/// Best rank-`rank` Frobenius approximation: the truncation to the
/// eigenpairs of largest magnitude.
pub fn low_rank_approx<T: Scalar>(m: &SymMatrix<T>, rank: usize) -> Result<SymMatrix<T>> {
    let (values, vectors) = top_eigenpairs(m, rank)?;
    let refs: Vec<&[T]> = vectors.iter().map(|v| v.as_slice()).collect();
    Ok(reconstruct(m.n(), &values, &refs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn random_sym(n: usize, seed: u64) -> SymMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        SymMatrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn packed_indexing_matches_dense() {
        let m = SymMatrix::from_fn(5, |i, j| (10 * i + j) as f64);
        let dense = m.to_dense();
        for i in 0..5 {
            for j in 0..5 {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                assert_eq!(m.get(i, j), (10 * a + b) as f64);
                assert_eq!(dense[i * 5 + j], m.get(i, j));
            }
        }
        let upper: Vec<f64> = m.upper_triangle().collect();
        assert_eq!(upper, vec![1., 2., 3., 4., 12., 13., 14., 23., 24., 34.]);
        let diag: Vec<f64> = m.diagonal().collect();
        assert_eq!(diag, vec![0., 11., 22., 33., 44.]);
    }

    #[test]
    fn from_dense_rejects_asymmetry() {
        let dense = [1.0, 2.0, 3.0, 1.0];
        assert!(matches!(
            SymMatrix::from_dense(2, &dense),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn identity_spectrum() {
        let m = SymMatrix::<f64>::from_fn(3, |i, j| if i == j { 1.0 } else { 0.0 });
        let dec = eigendecompose(&m).unwrap();
        assert_eq!(dec.values().len(), 3);
        for &l in dec.values() {
            assert!((l - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_ordered_by_magnitude() {
        let d = [3.0_f64, -2.0, 1.0];
        let m = SymMatrix::from_fn(3, |i, j| if i == j { d[i] } else { 0.0 });
        let dec = eigendecompose(&m).unwrap();
        let vals = dec.values();
        assert!((vals[0] - 3.0).abs() < 1e-14);
        assert!((vals[1] + 2.0).abs() < 1e-14);
        assert!((vals[2] - 1.0).abs() < 1e-14);
        // Eigenvector of -2 is e_2, sign-normalised to +.
        assert!((dec.vector(1)[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn magnitude_ties_broken_by_sign() {
        let d = [-2.0_f64, 2.0, 1.0];
        let m = SymMatrix::from_fn(3, |i, j| if i == j { d[i] } else { 0.0 });
        let dec = eigendecompose(&m).unwrap();
        assert!((dec.values()[0] - 2.0).abs() < 1e-14);
        assert!((dec.values()[1] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        for seed in 0..5 {
            let m = random_sym(6, seed);
            let dec = eigendecompose(&m).unwrap();
            let rec = dec.reconstruct();
            let err = rec.frobenius_distance(&m) / m.frobenius_norm();
            assert!(err <= 1e-8, "reconstruction error {err}");
            for a in 0..6 {
                for b in 0..6 {
                    let dot: f64 = dec.vector(a).iter().zip(dec.vector(b)).map(|(x, y)| x * y).sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = random_sym(4, 1);
        m.set(1, 2, f64::NAN);
        assert!(matches!(eigendecompose(&m), Err(Error::Input(_))));
    }

    #[test]
    fn rank_out_of_range() {
        let m = random_sym(4, 2);
        assert!(matches!(low_rank_approx(&m, 0), Err(Error::Parameter(_))));
        assert!(matches!(low_rank_approx(&m, 5), Err(Error::Parameter(_))));
    }

    #[test]
    fn full_rank_is_identity_map() {
        let m = random_sym(7, 3);
        let out = low_rank_approx(&m, 7).unwrap();
        assert!(out.max_abs_diff(&m) <= 1e-8);
    }

    #[test]
    fn exact_low_rank_recovered() {
        let mut rng = rng_from_seed(9);
        let u: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = SymMatrix::from_fn(10, |i, j| 2.0 * u[i] * u[j] - 0.5 * w[i] * w[j]);
        let out = low_rank_approx(&m, 2).unwrap();
        assert!(out.max_abs_diff(&m) <= 1e-8);
    }

    #[test]
    fn krylov_path_matches_full_decomposition() {
        for (n, k, seed) in [(60, 3, 1u64), (120, 5, 2), (200, 3, 3)] {
            let m = random_sym(n, seed);
            let (values, vectors) = top_eigenpairs(&m, k).unwrap();
            let full = eigendecompose(&m).unwrap();
            for r in 0..k {
                assert!((values[r] - full.values()[r]).abs() <= 1e-9 * full.values()[0].abs());
                let diff = vectors[r]
                    .iter()
                    .zip(full.vector(r))
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                assert!(diff <= 1e-6, "n={n} k={k} r={r}: eigenvector diff {diff}");
            }
            let fast = low_rank_approx(&m, k).unwrap();
            let slow = full.truncate(k);
            assert!(fast.max_abs_diff(&slow) <= 1e-8);
        }
    }

    #[test]
    fn single_precision_decomposition() {
        let m = SymMatrix::<f32>::from_fn(5, |i, j| ((i + 2 * j) % 5) as f32 * 0.25 + if i == j { 2.0 } else { 0.0 });
        let dec = eigendecompose(&m).unwrap();
        let err = dec.reconstruct().frobenius_distance(&m) / m.frobenius_norm();
        assert!(err < 1e-5);
    }
}
