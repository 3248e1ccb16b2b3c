//! Gauss–Legendre rules and adaptive panel integration.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
        Self { nodes, weights }
    }

    /// Integrate `f` over `[a, b]` with this rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Integral of `f` and of `|f|` over `[a, b]`.
    pub fn integrate_with_magnitude<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> (f64, f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let (mut v, mut m) = (0.0, 0.0);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let y = w * f(mid + half * x);
            v += y;
            m += y.abs();
        }
        (v * half, m * half.abs())
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    /// Sum of panel-level disagreement estimates.
    pub residual: f64,
}

/// Adaptive bisection with a fixed Gauss–Legendre rule on each panel.
///
/// A panel is accepted when the rule on the whole panel and on its two halves
/// agree to `abs_tol + rel_tol * |value|`.
pub fn adaptive<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_depth: u32,
    f: &mut F,
) -> Result<Integral> {
    let whole = rule.integrate(a, b, &mut *f);
    let mut acc = Integral {
        value: 0.0,
        residual: 0.0,
    };
    let mut failed = false;
    recurse(
        rule, a, b, whole, rel_tol, abs_tol, max_depth, f, &mut acc, &mut failed,
    );
    if failed {
        return Err(Error::Tolerance {
            residual: acc.residual,
            tolerance: abs_tol.max(rel_tol * acc.value.abs()),
        });
    }
    Ok(acc)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    rel_tol: f64,
    abs_tol: f64,
    depth: u32,
    f: &mut F,
    acc: &mut Integral,
    failed: &mut bool,
) {
    let m = 0.5 * (a + b);
    let (left, ml) = rule.integrate_with_magnitude(a, m, &mut *f);
    let (right, mr) = rule.integrate_with_magnitude(m, b, &mut *f);
    let refined = left + right;
    let diff = (refined - whole).abs();
    // Differences below the rounding level of the summands carry no signal.
    let roundoff = 64.0 * f64::EPSILON * (ml + mr);
    let tol = abs_tol.max(rel_tol * refined.abs()).max(roundoff);
    if diff <= tol || depth == 0 {
        if depth == 0 && diff > tol {
            *failed = true;
        }
        acc.value += refined;
        acc.residual += diff;
        return;
    }
    let sub_abs = 0.5 * abs_tol;
    recurse(
        rule, a, m, left, rel_tol, sub_abs, depth - 1, f, acc, failed,
    );
    recurse(
        rule, m, b, right, rel_tol, sub_abs, depth - 1, f, acc, failed,
    );
}

/// Deterministic pairwise summation; the result does not depend on how the
/// terms were produced, only on their order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(8);
        // degree 15 is the highest exact degree for 8 nodes
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let s: f64 = gl.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_oscillation() {
        let gl = GaussLegendre::new(10);
        let r = adaptive(&gl, 0.0, 50.0, 1e-12, 1e-14, 30, &mut |x: f64| (3.0 * x).cos()).unwrap();
        assert!((r.value - (150.0f64).sin() / 3.0).abs() < 1e-11);
    }

    #[test]
    fn adaptive_reports_failure() {
        let gl = GaussLegendre::new(2);
        let r = adaptive(&gl, 0.0, 1.0, 1e-15, 0.0, 1, &mut |x: f64| (200.0 * x).sin());
        assert!(matches!(r, Err(Error::Tolerance { .. })));
    }

    #[test]
    fn pairwise_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sqrt()).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-9);
    }
}
