//! Special functions and quadrature rules the rest of the crate consumes:
//! physicists' Hermite polynomials (plain, normalized, and Gaussian-weighted
//! overflow-safe forms), Laguerre polynomials, Gauss–Hermite rules, and the
//! log-factorial.
//!
//! Everything here is a pure function of its arguments; `QuadratureRule` is
//! immutable after construction.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Maximum supported Gauss–Hermite order.
pub const MAX_QUADRATURE_ORDER: usize = 200;

/// Gauss–Hermite rule for the weight e^{−x²} on (−∞, ∞).
///
/// Nodes are strictly increasing and exactly antisymmetric about 0; weights
/// are positive and sum to √π. A rule of order q integrates x^k e^{−x²}
/// exactly for k ≤ 2q−1.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Σ w_i f(x_i), approximating ∫ f(x) e^{−x²} dx. Mirror nodes are
    /// summed pairwise, so odd integrands cancel exactly instead of leaving
    /// rounding residue from large opposing terms.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let n = self.nodes.len();
        let mut acc = 0.0;
        for i in 0..n / 2 {
            let j = n - 1 - i;
            acc += self.weights[i] * (f(self.nodes[i]) + f(self.nodes[j]));
        }
        if n % 2 == 1 {
            acc += self.weights[n / 2] * f(self.nodes[n / 2]);
        }
        acc
    }
}

/// Physicists' Hermite polynomial H_n(x) by the three-term recurrence
/// H_{n+1} = 2x·H_n − 2n·H_{n−1}. Overflows to ±inf for large n·x; use
/// [`hermite_scaled`] for eigenfunction work.
pub fn hermite(n: u32, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Orthonormalized Hermite polynomial H_n(x)/√(2ⁿ n! √π), without the
/// Gaussian factor. This is the natural integrand form against a Gauss–
/// Hermite rule, which supplies e^{−x²} itself.
pub fn hermite_normalized(n: u32, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Harmonic-oscillator eigenfunction shape in dimensionless units:
/// e^{−x²/2}·H_n(x)/√(2ⁿ n! √π), so that ∫ result² dx = 1.
///
/// Evaluated with the normalized recurrence plus a running base-2 exponent,
/// so it neither overflows nor loses the answer to premature underflow for
/// n ≤ 200, |x| ≤ 50 (where the true value is representable at all).
pub fn hermite_scaled(n: u32, x: f64) -> f64 {
    const RESCALE_AT: f64 = 1e150;
    const RESCALE_SHIFT: i32 = 500;
    let mut prev = 0.0f64;
    let mut cur = PI.powf(-0.25);
    let mut exp2_acc: i64 = 0;
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_AT {
            let down = 2.0f64.powi(-RESCALE_SHIFT);
            cur *= down;
            prev *= down;
            exp2_acc += RESCALE_SHIFT as i64;
        }
    }
    if cur == 0.0 {
        return 0.0;
    }
    let gauss_exp2 = -0.5 * x * x * std::f64::consts::LOG2_E;
    if exp2_acc == 0 && gauss_exp2 > -900.0 {
        // fast path: no rescaling happened and the Gaussian is representable
        return cur * (-0.5 * x * x).exp();
    }
    // merge mantissa magnitude into the exponent to survive extreme ranges
    let total = cur.abs().log2() + exp2_acc as f64 + gauss_exp2;
    cur.signum() * total.exp2()
}

/// Laguerre polynomial L_n(x) by (n+1)·L_{n+1} = (2n+1−x)·L_n − n·L_{n−1}.
pub fn laguerre(n: u32, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// ln(n!), accurate to better than 1e−12 relative for n ≤ 10⁶.
pub fn log_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n <= 34 {
        // exact integer product fits in u128
        let mut acc: u128 = 1;
        for k in 2..=n as u128 {
            acc *= k;
        }
        return (acc as f64).ln();
    }
    // Stirling series for ln Γ(x) at x = n+1
    let x = (n + 1) as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// Ĥ_{n−1}(x) and Ĥ_n(x) from one pass of the normalized recurrence.
fn hermite_normalized_pair(n: u32, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (prev, cur)
}

/// Gauss–Hermite nodes and weights of the given order (weight e^{−x²}).
/// Eigenvalues of the Jacobi matrix (Golub–Welsch) seed a Newton polish on
/// the stable normalized recurrence; weights come from the closed form
/// w_i = 1/(n·Ĥ_{n−1}(x_i)²). Nodes are symmetrized exactly about 0.
pub fn gauss_hermite(order: usize) -> Result<QuadratureRule> {
    if order == 0 || order > MAX_QUADRATURE_ORDER {
        return Err(Error::Parameter(format!(
            "Gauss-Hermite order must be in 1..={MAX_QUADRATURE_ORDER}, got {order}"
        )));
    }
    let mut jacobi = nalgebra::DMatrix::<f64>::zeros(order, order);
    for i in 0..order - 1 {
        let b = ((i + 1) as f64 / 2.0).sqrt();
        jacobi[(i, i + 1)] = b;
        jacobi[(i + 1, i)] = b;
    }
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().cloned().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = order as u32;
    let dscale = (2.0 * order as f64).sqrt(); // Ĥ_n'(x) = √(2n)·Ĥ_{n−1}(x)
    for node in nodes.iter_mut() {
        for _ in 0..4 {
            let (hm1, hn) = hermite_normalized_pair(n, *node);
            let step = hn / (dscale * hm1);
            *node -= step;
            if step.abs() <= 1e-16 * (1.0 + node.abs()) {
                break;
            }
        }
    }
    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let (hm1, _) = hermite_normalized_pair(n, x);
            1.0 / (order as f64 * hm1 * hm1)
        })
        .collect();
    // enforce exact symmetry node[i] = -node[order-1-i], w[i] = w[order-1-i]
    for i in 0..order / 2 {
        let j = order - 1 - i;
        let node = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -node;
        nodes[j] = node;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}
