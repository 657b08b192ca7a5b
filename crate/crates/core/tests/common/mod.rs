#![allow(dead_code)]

use ldrg::rng::{rng_from_seed, SimRng};
use ldrg::symmat::SymMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> SimRng {
    rng_from_seed(seed)
}

pub fn random_symmetric(n: usize, rng: &mut SimRng) -> SymMatrix<f64> {
    SymMatrix::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn random_hollow(n: usize, rng: &mut SimRng) -> SymMatrix<f64> {
    SymMatrix::from_fn(n, |i, j| if i == j { 0.0 } else { rng.random::<f64>() })
}

pub fn from_upper(values: &[f64], n: usize) -> SymMatrix<f64> {
    let mut it = values.iter();
    SymMatrix::from_fn(n, |i, j| if i == j { 0.0 } else { *it.next().unwrap() })
}

/// Midrank by counting: 1 + #less + (#equal - 1) / 2.
pub fn brute_midranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&w| w < v).count() as f64;
            let eq = x.iter().filter(|&&w| w == v).count() as f64;
            less + (eq + 1.0) / 2.0
        })
        .collect()
}

/// Sample Pearson correlation with n - 1 normalisation.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0);
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / (n - 1.0);
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / (n - 1.0);
    cov / (va.sqrt() * vb.sqrt())
}

pub fn brute_spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&brute_midranks(a), &brute_midranks(b))
}

/// Dense row-major copy as nested vectors.
pub fn dense(m: &SymMatrix<f64>) -> Vec<Vec<f64>> {
    let n = m.n();
    (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect()
}

fn centred(rows: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = rows.len() as f64;
    let mx = rows.iter().map(|r| r[0]).sum::<f64>() / n;
    let my = rows.iter().map(|r| r[1]).sum::<f64>() / n;
    rows.iter().map(|r| [r[0] - mx, r[1] - my]).collect()
}

fn residual(x: &[[f64; 2]], y: &[[f64; 2]], s: f64, theta: f64, flip: bool) -> f64 {
    let (c, sn) = (theta.cos(), theta.sin());
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let by = if flip { -b[1] } else { b[1] };
            let u = s * (b[0] * c - by * sn);
            let v = s * (b[0] * sn + by * c);
            (a[0] - u).powi(2) + (a[1] - v).powi(2)
        })
        .sum()
}

fn golden(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let m = (a + b) / 2.0;
    (m, f(m))
}

/// Planar Procrustes distance by direct search: centring for the
/// translation, a grid over the rotation angle and both reflections, then
/// golden-section refinement of the angle with the scale searched
/// numerically at each angle.
pub fn procrustes_oracle(x: &[[f64; 2]], y: &[[f64; 2]]) -> f64 {
    let (xc, yc) = (centred(x), centred(y));
    let nx: f64 = xc.iter().map(|r| r[0] * r[0] + r[1] * r[1]).sum::<f64>().sqrt();
    let ny: f64 = yc.iter().map(|r| r[0] * r[0] + r[1] * r[1]).sum::<f64>().sqrt();
    let s_max = 2.0 * nx / ny.max(1e-300);
    let best_s = |theta: f64, flip: bool| golden(0.0, s_max, |s| residual(&xc, &yc, s, theta, flip)).1;
    let steps = 720;
    let step = std::f64::consts::TAU / steps as f64;
    let mut best = f64::INFINITY;
    for flip in [false, true] {
        let (mut arg, mut val) = (0.0, f64::INFINITY);
        for k in 0..steps {
            let th = k as f64 * step;
            let v = best_s(th, flip);
            if v < val {
                arg = th;
                val = v;
            }
        }
        let (_, refined) = golden(arg - step, arg + step, |th| best_s(th, flip));
        best = best.min(refined.min(val));
    }
    best.max(0.0).sqrt()
}
