//! Composite Gauss–Legendre quadrature with adaptive panel bisection.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let nf = order as f64;
        for i in 0..(order + 1) / 2 {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, lo: f64, hi: f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }
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
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrates `f` over the union of `panels`, bisecting any panel whose
/// single-panel and two-half-panel estimates disagree by more than
/// `rel_tol · |total|`.
pub fn adaptive_panels<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    f: &F,
    panels: &[(f64, f64)],
    rel_tol: f64,
    max_depth: usize,
) -> Result<f64> {
    let coarse: Vec<f64> = panels.iter().map(|&(a, b)| rule.integrate(f, a, b)).collect();
    let scale = coarse.iter().map(|v| v.abs()).sum::<f64>();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let abs_tol = rel_tol * scale;
    let mut total = 0.0;
    let mut worst = 0.0_f64;
    for (&(a, b), &whole) in panels.iter().zip(&coarse) {
        let (value, err) = refine(rule, f, a, b, whole, abs_tol, max_depth);
        total += value;
        worst = worst.max(err);
    }
    if worst > abs_tol {
        return Err(Error::QuadratureNotConverged {
            estimate: worst,
            value: total,
        });
    }
    Ok(total)
}

fn refine<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let left = rule.integrate(f, a, mid);
    let right = rule.integrate(f, mid, b);
    let err = (left + right - whole).abs();
    if err <= tol || depth == 0 {
        return (left + right, err);
    }
    let (l, el) = refine(rule, f, a, mid, left, 0.5 * tol, depth - 1);
    let (r, er) = refine(rule, f, mid, b, right, 0.5 * tol, depth - 1);
    (l + r, el.max(er))
}
