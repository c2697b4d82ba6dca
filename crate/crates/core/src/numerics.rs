//! Summation helpers shared by the pairing routines.

use num_complex::Complex64;
use rayon::prelude::*;

/// Compensated (Kahan-Babuska) accumulator for complex sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: Complex64,
    comp: Complex64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: Complex64) {
        self.sum.re = neumaier(self.sum.re, x.re, &mut self.comp.re);
        self.sum.im = neumaier(self.sum.im, x.im, &mut self.comp.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

#[inline]
fn neumaier(sum: f64, x: f64, comp: &mut f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *comp += (sum - t) + x;
    } else {
        *comp += (x - t) + sum;
    }
    t
}

/// Fixed chunk length for parallel reductions. Partial sums are formed per
/// chunk and merged in chunk order, independent of the thread count.
pub const CHUNK: usize = 4096;

/// Sums `f(i)` over `0..len` (each call may contribute several terms through
/// the accumulator) with a reproducible reduction order.
pub fn ordered_sum<F>(len: usize, f: F) -> (Complex64, usize)
where
    F: Fn(usize, &mut KahanSum) -> usize + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partials: Vec<(Complex64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = KahanSum::new();
            let mut terms = 0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(len) {
                terms += f(i, &mut acc);
            }
            (acc.value(), terms)
        })
        .collect();
    let mut total = KahanSum::new();
    let mut terms = 0;
    for (v, t) in partials {
        total.add(v);
        terms += t;
    }
    (total.value(), terms)
}

/// Upper bound for `sum_{j >= 0} exp(-alpha (x0 + j)^2)` with `alpha > 0`.
pub fn gaussian_tail_sum(alpha: f64, x0: f64) -> f64 {
    let mut x = x0;
    let mut acc = 0.0;
    // Walk until the terms are monotone decreasing, then close with a
    // geometric bound: exp(-a(x+j)^2) <= exp(-a x^2) exp(-2 a x j).
    while x <= 0.0 || 2.0 * alpha * x < 1.0 {
        acc += (-alpha * x * x).exp();
        x += 1.0;
    }
    let ratio = (-2.0 * alpha * x).exp();
    acc + (-alpha * x * x).exp() / (1.0 - ratio)
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    use std::f64::consts::PI;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                (p0, p1) = (p1, ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k);
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
                break;
            }
        }
        nodes[i] = x;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre quadrature of `f` over `[lo, hi]`.
pub fn integrate<F: Fn(f64) -> Complex64>(
    f: F,
    lo: f64,
    hi: f64,
    panels: usize,
    order: usize,
) -> Complex64 {
    let (nodes, weights) = gauss_legendre(order);
    let step = (hi - lo) / panels as f64;
    let mut acc = KahanSum::new();
    for p in 0..panels {
        let a = lo + p as f64 * step;
        for (x, w) in nodes.iter().zip(&weights) {
            acc.add(f(a + 0.5 * step * (x + 1.0)) * (w * 0.5 * step));
        }
    }
    acc.value()
}
