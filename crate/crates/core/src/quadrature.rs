//! Gauss–Legendre rules, plain and composite.

use alloc::vec::Vec;

use crate::math::{cos, PI};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = cos(PI * (i as f64 + 0.75) / (nf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (p, pm1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

/// `[0, first, first·ratio, ..., last]`, the final break clamped to `last`.
pub fn geometric_breaks(first: f64, last: f64, ratio: f64) -> Vec<f64> {
    assert!(first > 0.0 && last > first && ratio > 1.0, "bad geometric panel spec");
    let mut b = alloc::vec![0.0, first];
    let mut x = first;
    while x < last {
        x = (x * ratio).min(last);
        b.push(x);
    }
    b
}

/// A 1-D quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// `order`-point Gauss–Legendre on each of the panels delimited by
    /// consecutive `breaks`.
    pub fn composite(breaks: &[f64], order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(order * breaks.len().saturating_sub(1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        Rule { nodes, weights }
    }

    /// `panels` equal panels on `[a, b]`, `order` nodes each.
    pub fn uniform(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let panels = panels.max(1);
        let breaks: Vec<f64> = (0..=panels)
            .map(|i| a + (b - a) * i as f64 / panels as f64)
            .collect();
        Self::composite(&breaks, order)
    }

    /// Panels `[0, first]`, then geometric panels with the given `ratio` up to
    /// `last`. Suited to radial integrands with power-law tails.
    pub fn geometric(first: f64, last: f64, ratio: f64, order: usize) -> Self {
        Self::composite(&geometric_breaks(first, last, ratio), order)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
