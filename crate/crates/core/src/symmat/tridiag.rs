//! Householder tridiagonalisation and implicit QL iteration for dense
//! symmetric matrices (the classic EISPACK `tred2`/`tql2` pair).
//!
//! Matrices are column-major: entry `(row, col)` lives at `col * n + row`.

use crate::scalar::Scalar;

#[inline]
fn at(n: usize, row: usize, col: usize) -> usize {
    col * n + row
}

/// Reduces the symmetric matrix held in `v` to tridiagonal form.
///
/// On return `d` holds the diagonal, `e[1..]` the subdiagonal (`e[0] = 0`)
/// and `v` the accumulated orthogonal transformation.
pub(crate) fn tred2<T: Scalar>(v: &mut [T], d: &mut [T], e: &mut [T], n: usize) {
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[at(n, n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for dk in d.iter().take(i) {
            scale = scale + dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(n, i - 1, j)];
                v[at(n, i, j)] = zero;
                v[at(n, j, i)] = zero;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk = *dk / scale;
                h = h + *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }

            for j in 0..i {
                f = d[j];
                v[at(n, j, i)] = f;
                g = e[j] + v[at(n, j, j)] * f;
                let col = &v[j * n..j * n + i];
                for k in (j + 1)..i {
                    g = g + col[k] * d[k];
                    e[k] = e[k] + col[k] * f;
                }
                e[j] = g;
            }

            f = zero;
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = &mut v[j * n..j * n + i];
                for k in j..i {
                    col[k] = col[k] - (f * e[k] + g * d[k]);
                }
                d[j] = v[at(n, i - 1, j)];
                v[at(n, i, j)] = zero;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[at(n, n - 1, i)] = v[at(n, i, i)];
        v[at(n, i, i)] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[at(n, k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g = g + v[at(n, k, i + 1)] * v[at(n, k, j)];
                }
                let col = &mut v[j * n..j * n + i + 1];
                for k in 0..=i {
                    col[k] = col[k] - g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(n, k, i + 1)] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[at(n, n - 1, j)];
        v[at(n, n - 1, j)] = zero;
    }
    v[at(n, n - 1, n - 1)] = T::one();
    e[0] = zero;
}

/// Diagonalises a symmetric tridiagonal matrix by implicit QL iteration,
/// applying the rotations to the columns of `v`.
///
/// Uses the `tred2` layout: `e[i]` couples rows `i - 1` and `i`. Returns
/// `false` if some eigenvalue failed to converge.
pub(crate) fn tql2<T: Scalar>(d: &mut [T], e: &mut [T], v: &mut [T], n: usize) -> bool {
    let zero = T::zero();
    let one = T::one();
    let two = T::of(2.0);
    if n == 0 {
        return true;
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    let max_iter = 60 * n.max(8);

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            // e[n - 1] is zero, so this cannot happen for finite input.
            return false;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return false;
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (left, right) = v.split_at_mut((i + 1) * n);
                    let col_i = &mut left[i * n..];
                    let col_i1 = &mut right[..n];
                    for (a, b) in col_i.iter_mut().zip(col_i1.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = zero;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let mut v = vec![2.0_f64, 1.0, 1.0, 2.0];
        let mut d = vec![0.0; 2];
        let mut e = vec![0.0; 2];
        tred2(&mut v, &mut d, &mut e, 2);
        assert!(tql2(&mut d, &mut e, &mut v, 2));
        let mut vals = d.clone();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn one_by_one() {
        let mut v = vec![5.0_f64];
        let mut d = vec![0.0];
        let mut e = vec![0.0];
        tred2(&mut v, &mut d, &mut e, 1);
        assert!(tql2(&mut d, &mut e, &mut v, 1));
        assert_eq!(d[0], 5.0);
        assert_eq!(v[0], 1.0);
    }
}
