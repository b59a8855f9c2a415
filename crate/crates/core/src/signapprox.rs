//! Best-L1 polynomial approximation of the sign function under weights
//! that arise as push-forwards of the Gaussian through a univariate
//! polynomial, plus the experiment suite built on top of it.
//!
//! Everything is integrated in x-space: for a weight "push-forward of
//! N(0,1) by p", the objective `E|q(Y) - sign(Y)|` with `Y = p(X)` is
//! computed as `integral of |q(p(x)) - sign(p(x))| phi(x) dx`. The
//! substitution dodges the push-forward density's singularities at
//! critical values of `p`; the integrand is piecewise smooth with breaks
//! only at sign changes, so composite Gauss-Legendre panels split at the
//! real roots of `p` converge fast.

use serde::{Deserialize, Serialize};

use crate::algebra::{MultiIndex, Polynomial};
use crate::distributions::{
    bracket_roots, lsl_certificate, GridSpec, LslCertificate, PushforwardConfig, UnivariateWeight,
};
use crate::error::{Error, Result};
use crate::lp::lad_fit;
use crate::quadrature::legendre_rule_on;
use crate::sign;
use crate::sums::Neumaier;

/// Largest fit degree; beyond this even the Chebyshev-basis LP turns
/// ill-conditioned on tight grids.
pub const MAX_FIT_DEGREE: u32 = 30;

/// Smallest total node count for the x-space quadrature grid.
pub const MIN_GRID_NODES: usize = 64;

/// Gauss-Legendre order used inside each panel.
const PANEL_ORDER: usize = 16;

/// `1 / sqrt(2 pi)`.
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn standard_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// A best-L1 sign approximation instance: the weight is the push-forward
/// of N(0,1) through `p` (`p = x` gives the plain Gaussian), the fit runs
/// over polynomials of degree at most `degree`, and the x-space quadrature
/// uses about `nodes` points on `[-range, range]`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SignApproxProblem {
    pub p: Polynomial,
    pub degree: u32,
    pub range: f64,
    pub nodes: usize,
}

impl SignApproxProblem {
    /// Problem with the default grid: `range = 12`, `nodes = 4096`.
    pub fn new(p: Polynomial, degree: u32) -> SignApproxProblem {
        SignApproxProblem {
            p,
            degree,
            range: 12.0,
            nodes: 4096,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.p.dimension() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.p.dimension(),
            });
        }
        if self.degree > MAX_FIT_DEGREE {
            return Err(Error::invalid(
                "degree",
                format!("fit degree is capped at {MAX_FIT_DEGREE}"),
            ));
        }
        if self.nodes < MIN_GRID_NODES {
            return Err(Error::invalid(
                "nodes",
                format!("grid needs at least {MIN_GRID_NODES} nodes"),
            ));
        }
        if !(self.range > 0.0) || !self.range.is_finite() {
            return Err(Error::invalid("range", "must be positive and finite"));
        }
        if self.p.degree() == 0 {
            return Err(Error::invalid(
                "p",
                "constant polynomials push forward to a point mass",
            ));
        }
        Ok(())
    }
}

/// Outcome of a best-L1 fit: the minimizing polynomial in the original
/// y variable, its weighted L1 error on the grid, and the change in error
/// when the grid is doubled (a quadrature-stability indicator).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SignApproxResult {
    pub q: Polynomial,
    pub error: f64,
    pub grid_residual: f64,
    /// False when the LP stopped at a usable but not fully closed gap.
    pub converged: bool,
}

/// Real roots of `p` inside `[-range, range]`: the sign-jump locations.
fn sign_change_splits(p: &Polynomial, range: f64) -> Result<Vec<f64>> {
    if p.degree() == 0 {
        return Ok(Vec::new());
    }
    let config = PushforwardConfig {
        root_range: range,
        bracket_cells: 4096,
        derivative_floor: 1e-10,
    };
    bracket_roots(p, 0.0, &config)
}

/// Composite Gauss-Legendre grid on `[-range, range]` with panel
/// boundaries at `splits`, weighted by the standard normal density.
/// Nodes are spread over panels proportionally to length, in chunks of a
/// fixed-order rule, so the total is close to `nodes`.
fn gaussian_grid(splits: &[f64], range: f64, nodes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut bounds = vec![-range];
    for &s in splits {
        if s > -range && s < range && s - bounds.last().unwrap() > 1e-12 {
            bounds.push(s);
        }
    }
    bounds.push(range);

    let total = 2.0 * range;
    let mut xs = Vec::with_capacity(nodes + PANEL_ORDER * bounds.len());
    let mut ws = Vec::with_capacity(xs.capacity());
    for pair in bounds.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let len = b - a;
        let share = len / total * nodes as f64;
        let panels = ((share / PANEL_ORDER as f64).ceil() as usize).max(1);
        for j in 0..panels {
            let pa = a + len * j as f64 / panels as f64;
            let pb = a + len * (j + 1) as f64 / panels as f64;
            let (px, pw) = legendre_rule_on(pa, pb, PANEL_ORDER)?;
            for (x, w) in px.into_iter().zip(pw) {
                xs.push(x);
                ws.push(w * standard_normal_pdf(x));
            }
        }
    }
    Ok((xs, ws))
}

/// Univariate composition `q(p(x))` by Horner's rule in the coefficient
/// list of `q`.
fn compose_univariate(q: &Polynomial, p: &Polynomial) -> Result<Polynomial> {
    if q.dimension() != 1 || p.dimension() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: q.dimension().max(p.dimension()),
        });
    }
    let d = q.degree() as usize;
    let mut coeffs = vec![0.0f64; d + 1];
    for (alpha, c) in q.terms() {
        coeffs[alpha.exponents()[0] as usize] = c;
    }
    let mut out = Polynomial::constant(1, coeffs[d]);
    for k in (0..d).rev() {
        out = out.mul(p)?.add(&Polynomial::constant(1, coeffs[k]))?;
    }
    Ok(out)
}

/// Weighted L1 distance between `q(p(x))` and `sign(p(x))` under the
/// standard normal on `[-range, range]`:
/// `integral of |q(p(x)) - sign(p(x))| phi(x) dx`.
///
/// Panels are split at every kink of the integrand (roots of `p` and of
/// `q(p(x)) -+ 1`), so the quadrature sees only smooth pieces and the
/// result is accurate to close to machine precision.
pub fn pushforward_l1_objective(
    p: &Polynomial,
    q: &Polynomial,
    range: f64,
    nodes: usize,
) -> Result<f64> {
    if p.dimension() != 1 || q.dimension() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: p.dimension().max(q.dimension()),
        });
    }
    if nodes < MIN_GRID_NODES {
        return Err(Error::invalid(
            "nodes",
            format!("grid needs at least {MIN_GRID_NODES} nodes"),
        ));
    }
    if !(range > 0.0) || !range.is_finite() {
        return Err(Error::invalid("range", "must be positive and finite"));
    }
    let composed = compose_univariate(q, p)?;
    let mut splits = sign_change_splits(p, range)?;
    for shift in [-1.0, 1.0] {
        let shifted = composed.add(&Polynomial::constant(1, shift))?;
        if !shifted.is_zero() && shifted.degree() > 0 {
            splits.extend(sign_change_splits(&shifted, range)?);
        }
    }
    splits.sort_by(|a, b| a.total_cmp(b));

    let (xs, ws) = gaussian_grid(&splits, range, nodes)?;
    let p_eval = p.compile();
    let q_eval = q.compile();
    let mut acc = Neumaier::new();
    for (&x, &w) in xs.iter().zip(&ws) {
        let y = p_eval.eval_unchecked(&[x]);
        acc.add(w * (q_eval.eval_unchecked(&[y]) - sign(y)).abs());
    }
    Ok(acc.total())
}

/// Chebyshev polynomials `T_0 .. T_d` in one variable, by the recurrence
/// `T_{k+1} = 2 u T_k - T_{k-1}`.
fn chebyshev_basis(d: u32) -> Result<Vec<Polynomial>> {
    let mut basis = vec![Polynomial::constant(1, 1.0)];
    if d >= 1 {
        basis.push(Polynomial::variable(1, 0));
    }
    let two_u = Polynomial::from_terms(1, [(MultiIndex::new(vec![1]), 2.0)])?;
    for k in 2..=d as usize {
        let next = two_u.mul(&basis[k - 1])?.sub(&basis[k - 2])?;
        basis.push(next);
    }
    Ok(basis)
}

/// Thin QR by modified Gram-Schmidt with re-orthogonalization, in place:
/// `data` (column-major, m rows) becomes Q with orthonormal columns and the
/// return value holds R (upper triangular, column-major packed dense).
/// Columns whose remainder collapses below `1e-12` of their original norm
/// are zeroed and their diagonal entry set to 0: numerically dependent.
fn orthonormalize_columns(data: &mut [Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = data.len();
    let mut r = vec![vec![0.0f64; cols]; cols];
    for k in 0..cols {
        let original: f64 = data[k].iter().map(|v| v * v).sum::<f64>().sqrt();
        for _pass in 0..2 {
            for j in 0..k {
                let (qj, vk) = {
                    let (head, tail) = data.split_at_mut(k);
                    (&head[j], &mut tail[0])
                };
                let dot: f64 = qj.iter().zip(vk.iter()).map(|(a, b)| a * b).sum();
                for (v, &q) in vk.iter_mut().zip(qj.iter()) {
                    *v -= dot * q;
                }
                r[j][k] += dot;
            }
        }
        let norm: f64 = data[k].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-12 * original.max(f64::MIN_POSITIVE) {
            for v in data[k].iter_mut() {
                *v = 0.0;
            }
            r[k][k] = 0.0;
        } else {
            for v in data[k].iter_mut() {
                *v /= norm;
            }
            r[k][k] = norm;
        }
    }
    r
}

fn solve_on_grid(
    problem: &SignApproxProblem,
    splits: &[f64],
    nodes: usize,
) -> Result<(Polynomial, f64, bool)> {
    let (xs, ws) = gaussian_grid(splits, problem.range, nodes)?;
    let p_eval = problem.p.compile();
    let ys: Vec<f64> = xs.iter().map(|&x| p_eval.eval_unchecked(&[x])).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &y in &ys {
        lo = lo.min(y);
        hi = hi.max(y);
    }
    if !(hi > lo) {
        return Err(Error::invalid("p", "push-forward support is a single point"));
    }

    // Chebyshev columns in the scaled variable u = (2y - lo - hi)/(hi - lo),
    // each row carrying its quadrature weight so the LP objective is exactly
    // the weighted L1 error. Under heavy-tailed push-forwards the Gaussian
    // bulk occupies a sliver of [-1, 1] and the raw columns turn collinear,
    // so they are orthonormalized (weighted QR) before the solve and the
    // coefficients mapped back through R afterwards.
    let cols = problem.degree as usize + 1;
    let m = ys.len();
    let mut columns = vec![vec![0.0f64; m]; cols];
    let mut rhs = Vec::with_capacity(m);
    for (i, (&y, &w)) in ys.iter().zip(&ws).enumerate() {
        let u = (2.0 * y - lo - hi) / (hi - lo);
        let mut t_prev = 1.0;
        let mut t_cur = u;
        columns[0][i] = w;
        if cols > 1 {
            columns[1][i] = w * u;
        }
        for column in columns.iter_mut().skip(2) {
            let t_next = 2.0 * u * t_cur - t_prev;
            column[i] = w * t_next;
            t_prev = t_cur;
            t_cur = t_next;
        }
        rhs.push(w * sign(y));
    }
    let r = orthonormalize_columns(&mut columns);
    let kept: Vec<usize> = (0..cols).filter(|&k| r[k][k] > 0.0).collect();

    let mut rows = vec![vec![0.0f64; kept.len()]; m];
    for (slot, &k) in kept.iter().enumerate() {
        for (row, &v) in rows.iter_mut().zip(&columns[k]) {
            row[slot] = v;
        }
    }
    let sol = lad_fit(&rows, &rhs)?;

    // Back-substitute d = R c over the kept columns, dependent columns 0.
    let mut coeffs = vec![0.0f64; cols];
    for (slot, &k) in kept.iter().enumerate().rev() {
        let mut value = sol.coefficients[slot];
        for &later in kept.iter().skip(slot + 1) {
            value -= r[k][later] * coeffs[later];
        }
        coeffs[k] = value / r[k][k];
    }

    // Assemble q(y) = sum_k c_k T_k(u(y)) back in the y variable.
    let basis = chebyshev_basis(problem.degree)?;
    let mut q_u = Polynomial::zero(1);
    for (t, &c) in basis.iter().zip(&coeffs) {
        q_u = q_u.add(&t.scaled(c))?;
    }
    let a = 2.0 / (hi - lo);
    let b = -(hi + lo) / (hi - lo);
    let q = q_u.compose_affine(a, b)?;
    Ok((q, sol.objective, sol.converged))
}

/// Minimizes the weighted L1 distance to `sign` over polynomials of
/// degree at most `problem.degree`, as a linear program over Chebyshev
/// coefficients on the grid. `grid_residual` is the error drift when the
/// node count doubles on the same panel structure.
pub fn best_sign_l1(problem: &SignApproxProblem) -> Result<SignApproxResult> {
    problem.validate()?;
    let splits = sign_change_splits(&problem.p, problem.range)?;
    let (q, error, converged) = solve_on_grid(problem, &splits, problem.nodes)?;
    let (_, refined, _) = solve_on_grid(problem, &splits, problem.nodes * 2)?;
    Ok(SignApproxResult {
        q,
        error,
        grid_residual: (error - refined).abs(),
        converged,
    })
}

/// One row of the experiment suite, ready for CSV emission.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SuiteRow {
    pub p_id: String,
    pub degree: u32,
    pub error: f64,
    pub grid_residual: f64,
    pub grid_nodes: usize,
    pub range: f64,
}

/// The built-in push-forward suite: a log-concave control and three
/// polynomials whose push-forwards resist low-degree sign approximation.
pub fn suite_polynomials() -> Vec<(&'static str, Polynomial)> {
    let uni = |coeffs: &[(u16, f64)]| {
        Polynomial::from_terms(
            1,
            coeffs
                .iter()
                .map(|&(e, c)| (MultiIndex::new(vec![e]), c)),
        )
        .unwrap()
    };
    vec![
        ("linear", uni(&[(1, 1.0), (0, -0.3)])),
        ("cubic", uni(&[(3, 1.0)])),
        // x (x - 1) (x - 2)
        ("cubic-roots", uni(&[(3, 1.0), (2, -3.0), (1, 2.0)])),
        // -x (x - 1) (x - 2) (x - 3) (x - 4) (x - 5)
        (
            "sextic",
            uni(&[
                (6, -1.0),
                (5, 15.0),
                (4, -85.0),
                (3, 225.0),
                (2, -274.0),
                (1, 120.0),
            ]),
        ),
    ]
}

/// Runs [`best_sign_l1`] for every suite polynomial and degree, in order.
pub fn impossibility_suite(degrees: &[u32], range: f64, nodes: usize) -> Result<Vec<SuiteRow>> {
    if degrees.is_empty() {
        return Err(Error::EmptyInput("degrees"));
    }
    if degrees.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("degrees", "must be strictly ascending"));
    }
    let mut rows = Vec::with_capacity(degrees.len() * 4);
    for (id, p) in suite_polynomials() {
        for &degree in degrees {
            let result = best_sign_l1(&SignApproxProblem {
                p: p.clone(),
                degree,
                range,
                nodes,
            })?;
            rows.push(SuiteRow {
                p_id: id.to_string(),
                degree,
                error: result.error,
                grid_residual: result.grid_residual,
                grid_nodes: nodes,
                range,
            });
        }
    }
    Ok(rows)
}

/// Grid certificate that the push-forward of N(0,1) by `p`, restricted to
/// `(-inf, 1]`, dominates `C * exp(-|y|^gamma)`: the one-sided heavy-tail
/// lower bound that obstructs low-degree sign approximation. Requires
/// `gamma < 1/2` and a grid that stays at or below 1.
pub fn onesided_lsl_verify(
    p: &Polynomial,
    gamma_exp: f64,
    grid: &GridSpec,
    floor: f64,
) -> Result<LslCertificate> {
    if !(gamma_exp > 0.0 && gamma_exp < 0.5) {
        return Err(Error::invalid("gamma", "one-sided certificates need 0 < gamma < 1/2"));
    }
    if grid.end > 1.0 + 1e-12 {
        return Err(Error::invalid("grid", "one-sided certificates live on (-inf, 1]"));
    }
    let weight = UnivariateWeight::PushforwardGaussian {
        poly: p.clone(),
        config: PushforwardConfig::default(),
    };
    lsl_certificate(&weight, gamma_exp, grid, floor)
}
