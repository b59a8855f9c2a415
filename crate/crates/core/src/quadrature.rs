//! One-dimensional Gaussian quadrature rules.
//!
//! Nodes are eigenvalues of the symmetric tridiagonal Jacobi matrix of the
//! orthonormal recurrence (Golub-Welsch). Eigenvalues are isolated by Sturm
//! bisection and polished with a few Newton steps, weights come from the
//! orthonormal polynomial values at each node. No linear algebra dependency,
//! fully deterministic, accurate to close to machine precision for the orders
//! used here (at most 64 points).

use crate::error::{Error, Result};

/// Largest supported rule order.
pub const MAX_RULE_ORDER: usize = 64;

/// Gauss-Hermite rule for the standard normal weight: integrates
/// polynomials of degree up to `2m - 1` exactly against N(0, 1).
/// Weights are positive and sum to 1.
pub fn hermite_rule(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 || m > MAX_RULE_ORDER {
        return Err(Error::invalid(
            "nodes",
            format!("rule order must be in 1..={MAX_RULE_ORDER}, got {m}"),
        ));
    }
    let offdiag: Vec<f64> = (1..m).map(|j| (j as f64).sqrt()).collect();
    let (mut nodes, mut weights) = golub_welsch(&offdiag, 1.0);
    symmetrize(&mut nodes, &mut weights, &offdiag, 1.0);
    Ok((nodes, weights))
}

/// Gauss-Legendre rule on [-1, 1] with unit weight function; weights sum
/// to 2. Exact for polynomials of degree up to `2m - 1`.
pub fn legendre_rule(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 || m > MAX_RULE_ORDER {
        return Err(Error::invalid(
            "nodes",
            format!("rule order must be in 1..={MAX_RULE_ORDER}, got {m}"),
        ));
    }
    let offdiag: Vec<f64> = (1..m)
        .map(|j| {
            let j = j as f64;
            j / (4.0 * j * j - 1.0).sqrt()
        })
        .collect();
    let (mut nodes, mut weights) = golub_welsch(&offdiag, 2.0);
    symmetrize(&mut nodes, &mut weights, &offdiag, 2.0);
    Ok((nodes, weights))
}

/// A Legendre rule mapped onto `[a, b]`.
pub fn legendre_rule_on(a: f64, b: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (nodes, weights) = legendre_rule(m)?;
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    Ok((
        nodes.iter().map(|t| mid + half * t).collect(),
        weights.iter().map(|w| w * half).collect(),
    ))
}

/// Nodes and weights for the measure whose orthonormal three-term recurrence
/// has zero diagonal and the given off-diagonal, scaled to `total_mass`.
fn golub_welsch(offdiag: &[f64], total_mass: f64) -> (Vec<f64>, Vec<f64>) {
    let m = offdiag.len() + 1;
    if m == 1 {
        return (vec![0.0], vec![total_mass]);
    }
    // Gershgorin bound on the spectrum.
    let mut radius: f64 = 0.0;
    for i in 0..m {
        let left = if i > 0 { offdiag[i - 1].abs() } else { 0.0 };
        let right = if i < m - 1 { offdiag[i].abs() } else { 0.0 };
        radius = radius.max(left + right);
    }
    radius += 1.0;

    let mut nodes = Vec::with_capacity(m);
    for i in 0..m {
        let mut lo = -radius;
        let mut hi = radius;
        for _ in 0..120 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-15 * radius {
                break;
            }
            if sturm_count(offdiag, mid) <= i {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        // Newton polish on the top orthonormal polynomial.
        for _ in 0..4 {
            let (value, derivative) = ortho_top(offdiag, x);
            if derivative.abs() < 1e-300 {
                break;
            }
            let step = value / derivative;
            if !step.is_finite() {
                break;
            }
            x -= step;
            if step.abs() <= 1e-16 * (1.0 + x.abs()) {
                break;
            }
        }
        nodes.push(x);
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let weights = nodes
        .iter()
        .map(|&x| total_mass / ortho_norm_sq(offdiag, x))
        .collect();
    (nodes, weights)
}

/// Number of eigenvalues of the Jacobi matrix strictly below `lambda`.
/// Negative pivots of the LDL^T factorization of `J - lambda I`; an exact
/// zero pivot is perturbed toward the negative side.
fn sturm_count(offdiag: &[f64], lambda: f64) -> usize {
    let m = offdiag.len() + 1;
    let mut count = 0;
    let mut d = 0.0;
    for i in 0..m {
        d = if i == 0 {
            -lambda
        } else {
            -lambda - offdiag[i - 1] * offdiag[i - 1] / d
        };
        if d.abs() < 1e-300 {
            d = -1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Value and derivative of the degree-m polynomial of the recurrence; the
/// top-level scaling is arbitrary (only the roots matter), so the final
/// division uses 1.
fn ortho_top(offdiag: &[f64], x: f64) -> (f64, f64) {
    let m = offdiag.len() + 1;
    let mut p_prev = 0.0;
    let mut p = 1.0;
    let mut dp_prev = 0.0;
    let mut dp = 0.0;
    for k in 0..m {
        let b_prev = if k == 0 { 0.0 } else { offdiag[k - 1] };
        let b_next = if k < m - 1 { offdiag[k] } else { 1.0 };
        let next = (x * p - b_prev * p_prev) / b_next;
        let dnext = (p + x * dp - b_prev * dp_prev) / b_next;
        p_prev = p;
        p = next;
        dp_prev = dp;
        dp = dnext;
    }
    (p, dp)
}

/// Sum of squares of the orthonormal polynomials of degree < m at `x`.
fn ortho_norm_sq(offdiag: &[f64], x: f64) -> f64 {
    let mut p_prev = 0.0;
    let mut p: f64 = 1.0;
    let mut total = 1.0;
    for (k, &b) in offdiag.iter().enumerate() {
        let b_prev = if k == 0 { 0.0 } else { offdiag[k - 1] };
        let next = (x * p - b_prev * p_prev) / b;
        p_prev = p;
        p = next;
        total += p * p;
    }
    total
}

/// Forces the symmetry `x_i = -x_{m-1-i}` that both rules here satisfy
/// analytically, then renormalizes the weights to the exact total mass.
fn symmetrize(nodes: &mut [f64], weights: &mut [f64], offdiag: &[f64], total_mass: f64) {
    let m = nodes.len();
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let s = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -s;
        nodes[j] = s;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    for (x, w) in nodes.iter().zip(weights.iter_mut()) {
        *w = total_mass / ortho_norm_sq(offdiag, *x);
    }
    let sum: f64 = weights.iter().sum();
    let correction = total_mass / sum;
    for w in weights.iter_mut() {
        *w *= correction;
    }
}
