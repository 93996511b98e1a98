//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use migcopula::process::{simulate, ModelSpec};
use migcopula::quad::gauss_legendre;
use migcopula::rng::{derive_seed, UniformStream};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

/// File contents without `#` header lines.
pub fn strip_header(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// Kendall's tau-a by Knight's merge-sort algorithm (no ties assumed).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let discordant = count_inversions(&mut ys, &mut buf);
    let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
    (pairs - 2.0 * discordant as f64) / pairs
}

fn count_inversions(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (l, r) = v.split_at_mut(mid);
        count_inversions(l, &mut buf[..mid]) + count_inversions(r, &mut buf[mid..])
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf[k] = v[i];
            i += 1;
        } else {
            buf[k] = v[j];
            inv += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    inv
}

/// Poisson variate by sequential inversion.
pub fn poisson_draw(rng: &mut UniformStream, lambda: f64) -> i64 {
    let u = rng.next_open01();
    let mut k = 0;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    while u > cdf && k < 10_000 {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
    }
    k
}

/// Gauss-Legendre nodes and weights mapped to (a, b).
pub fn gl_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    x.iter()
        .zip(&w)
        .map(|(&x, &w)| (0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w))
        .collect()
}

/// Tensor Gauss-Legendre integral over the unit square.
pub fn integrate_unit_square<F: Fn(f64, f64) -> f64>(n: usize, f: F) -> f64 {
    let nodes = gl_on(n, 0.0, 1.0);
    let mut total = 0.0;
    for &(x, wx) in &nodes {
        for &(y, wy) in &nodes {
            total += wx * wy * f(x, y);
        }
    }
    total
}

/// Central difference with step `h`.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Entropy-style expectation `sum p ln p` of Poisson(lambda).
pub fn poisson_expected_log_pmf(lambda: f64) -> f64 {
    let mut total = 0.0;
    let mut ln_p = -lambda;
    for k in 0..2000 {
        if k > 0 {
            ln_p += lambda.ln() - (k as f64).ln();
        }
        let p = ln_p.exp();
        total += p * ln_p;
        if k as f64 > lambda && p < 1e-300 {
            break;
        }
    }
    total
}

/// `n` independent draws from the stationary margin: the endpoints of
/// separately seeded paths after a burn-in of 200 steps.
pub fn stationary_draws(spec: &ModelSpec, n: usize, seed: u64) -> Vec<f64> {
    (0..n as u64)
        .map(|i| simulate(spec, 2, 200, derive_seed(seed, i), None).unwrap().u[1])
        .collect()
}
