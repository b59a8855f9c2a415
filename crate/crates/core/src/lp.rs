//! Least-absolute-deviation fitting by a primal-dual interior-point method.
//!
//! `min_c sum_i |(Phi c)_i - z_i|` is solved as the linear program
//!
//! ```text
//! min 1'u + 1'v   s.t.  Phi c + u - v = z,  u >= 0,  v >= 0,
//! ```
//!
//! whose dual is `max z'y` over `Phi'y = 0, -1 <= y <= 1`. The solver is a
//! Mehrotra predictor-corrector iteration on this pair. Each step reduces to
//! a `p x p` positive-definite normal system, so the cost per iteration is
//! `O(m p^2)` and the column count `p`, not the sample count `m`, is the
//! limiting dimension.

use crate::error::{Error, Result};
use crate::sums::Neumaier;

/// Iteration cap; the solver reports a stall rather than looping further.
pub const MAX_ITERATIONS: u32 = 200;

/// Relative duality-gap target for declaring convergence.
pub const GAP_TOLERANCE: f64 = 1e-8;

/// Looser gap at which a capped run is still returned (flagged) instead of
/// being treated as a failure.
const USABLE_GAP: f64 = 1e-6;

/// Fraction-to-boundary step damping.
const STEP_DAMPING: f64 = 0.9995;

/// A least-absolute-deviation fit.
#[derive(Clone, Debug, PartialEq)]
pub struct LadSolution {
    /// Basis coefficients `c`.
    pub coefficients: Vec<f64>,
    /// `sum_i |(Phi c)_i - z_i|` at the returned coefficients.
    pub objective: f64,
    /// Dual objective `z'y`; sandwiches the optimum together with
    /// `objective`.
    pub dual_objective: f64,
    /// Dual variable per row, in `[-1, 1]` with `Phi'y ~ 0`.
    pub dual: Vec<f64>,
    /// Relative duality gap at exit.
    pub gap: f64,
    pub iterations: u32,
    /// False when the iteration cap was reached with a usable but
    /// not fully converged gap.
    pub converged: bool,
}

struct Dense {
    rows: usize,
    cols: usize,
    /// Row-major `rows x cols`.
    a: Vec<f64>,
}

impl Dense {
    fn mat_vec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.rows {
            let row = &self.a[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(x).map(|(&a, &b)| a * b).sum();
        }
    }

    fn mat_t_vec(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.rows {
            let row = &self.a[i * self.cols..(i + 1) * self.cols];
            let xi = x[i];
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * xi;
            }
        }
    }

    /// `Phi' diag(1/d) Phi`, lower triangle filled, row-major `cols x cols`.
    fn normal_matrix(&self, inv_d: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.rows {
            let row = &self.a[i * self.cols..(i + 1) * self.cols];
            let w = inv_d[i];
            for j in 0..self.cols {
                let aj = row[j] * w;
                if aj == 0.0 {
                    continue;
                }
                for t in 0..=j {
                    out[j * self.cols + t] += aj * row[t];
                }
            }
        }
    }
}

/// In-place Cholesky of the lower triangle; false when a pivot is not
/// strictly positive.
fn cholesky_factor(m: &mut [f64], p: usize) -> bool {
    for j in 0..p {
        let mut d = m[j * p + j];
        for t in 0..j {
            d -= m[j * p + t] * m[j * p + t];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let root = d.sqrt();
        m[j * p + j] = root;
        for i in (j + 1)..p {
            let mut s = m[i * p + j];
            for t in 0..j {
                s -= m[i * p + t] * m[j * p + t];
            }
            m[i * p + j] = s / root;
        }
    }
    true
}

fn cholesky_solve(l: &[f64], p: usize, b: &mut [f64]) {
    for i in 0..p {
        let mut s = b[i];
        for t in 0..i {
            s -= l[i * p + t] * b[t];
        }
        b[i] = s / l[i * p + i];
    }
    for i in (0..p).rev() {
        let mut s = b[i];
        for t in (i + 1)..p {
            s -= l[t * p + i] * b[t];
        }
        b[i] = s / l[i * p + i];
    }
}

/// Factors the normal matrix, escalating a diagonal ridge when it is not
/// numerically positive definite (rank-deficient designs).
fn factor_with_ridge(normal: &[f64], p: usize) -> Result<Vec<f64>> {
    let diag_mean = (0..p).map(|j| normal[j * p + j]).sum::<f64>() / p as f64;
    let base = diag_mean.max(1e-300);
    let mut ridge = 0.0;
    for _ in 0..8 {
        let mut attempt = normal.to_vec();
        if ridge > 0.0 {
            for j in 0..p {
                attempt[j * p + j] += ridge;
            }
        }
        if cholesky_factor(&mut attempt, p) {
            return Ok(attempt);
        }
        ridge = if ridge == 0.0 { base * 1e-12 } else { ridge * 100.0 };
    }
    Err(Error::Numerical(
        "normal matrix is not positive definite even with ridge".into(),
    ))
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

/// Largest `alpha <= 1` keeping `x + alpha dx >= 0` componentwise.
fn step_to_boundary(x: &[f64], dx: &[f64]) -> f64 {
    let mut alpha = 1.0f64;
    for (&xi, &di) in x.iter().zip(dx) {
        if di < 0.0 {
            alpha = alpha.min(-xi / di);
        }
    }
    alpha
}

/// Solves `min_c sum_i |(phi_rows c)_i - z_i|`.
///
/// `phi_rows` holds one design row per sample. Columns are internally
/// rescaled to unit norm, so wildly mixed column scales are fine. Designs
/// without full column rank are handled by a diagonal ridge and return one
/// of the optimal coefficient vectors.
pub fn lad_fit(phi_rows: &[Vec<f64>], z: &[f64]) -> Result<LadSolution> {
    let m = phi_rows.len();
    if m == 0 {
        return Err(Error::EmptyInput("design rows"));
    }
    let p = phi_rows[0].len();
    if p == 0 {
        return Err(Error::EmptyInput("design columns"));
    }
    if z.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: z.len(),
        });
    }
    let mut a = Vec::with_capacity(m * p);
    for row in phi_rows {
        if row.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("design contains a non-finite entry".into()));
        }
        a.extend_from_slice(row);
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("targets contain a non-finite entry".into()));
    }

    // Column equilibration.
    let mut col_scale = vec![1.0f64; p];
    for (j, scale) in col_scale.iter_mut().enumerate() {
        let norm = (0..m).map(|i| a[i * p + j] * a[i * p + j]).sum::<f64>().sqrt();
        if norm > 1e-300 {
            *scale = norm;
        }
    }
    for i in 0..m {
        for j in 0..p {
            a[i * p + j] /= col_scale[j];
        }
    }

    // Target scaling; a zero target is solved by zero coefficients.
    let z_scale = max_abs(z);
    if z_scale <= 1e-300 {
        return Ok(LadSolution {
            coefficients: vec![0.0; p],
            objective: 0.0,
            dual_objective: 0.0,
            dual: vec![0.0; m],
            gap: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let zs: Vec<f64> = z.iter().map(|&v| v / z_scale).collect();

    let phi = Dense { rows: m, cols: p, a };

    // Feasible start: c = 0, y = 0 makes both residuals vanish exactly.
    let mut c = vec![0.0f64; p];
    let mut u: Vec<f64> = zs.iter().map(|&v| v.max(0.0) + 1.0).collect();
    let mut v: Vec<f64> = zs.iter().map(|&v| (-v).max(0.0) + 1.0).collect();
    let mut y = vec![0.0f64; m];

    let mut phi_c = vec![0.0f64; m];
    let mut r_dual = vec![0.0f64; p];
    let mut normal = vec![0.0f64; p * p];
    let mut gap = f64::INFINITY;

    let finish = |c: Vec<f64>,
                  y: Vec<f64>,
                  phi: &Dense,
                  gap: f64,
                  iterations: u32,
                  converged: bool| {
        let mut fitted = vec![0.0f64; m];
        phi.mat_vec(&c, &mut fitted);
        let mut obj = Neumaier::new();
        for i in 0..m {
            obj.add((fitted[i] - zs[i]).abs());
        }
        let mut dual_obj = Neumaier::new();
        for i in 0..m {
            dual_obj.add(zs[i] * y[i]);
        }
        let coefficients: Vec<f64> = c
            .iter()
            .zip(&col_scale)
            .map(|(&cj, &s)| cj * z_scale / s)
            .collect();
        LadSolution {
            coefficients,
            objective: obj.total() * z_scale,
            dual_objective: dual_obj.total() * z_scale,
            dual: y,
            gap,
            iterations,
            converged,
        }
    };

    for iter in 0..MAX_ITERATIONS {
        phi.mat_vec(&c, &mut phi_c);
        // Primal residual z - Phi c - u + v and dual residual -Phi'y.
        let r_primal: Vec<f64> = (0..m).map(|i| zs[i] - phi_c[i] - u[i] + v[i]).collect();
        phi.mat_t_vec(&y, &mut r_dual);
        for rd in r_dual.iter_mut() {
            *rd = -*rd;
        }

        let g: Vec<f64> = y.iter().map(|&yi| 1.0 - yi).collect();
        let h: Vec<f64> = y.iter().map(|&yi| 1.0 + yi).collect();
        let mut mu_acc = Neumaier::new();
        for i in 0..m {
            mu_acc.add(u[i] * g[i]);
            mu_acc.add(v[i] * h[i]);
        }
        let mu = mu_acc.total() / (2 * m) as f64;

        let mut pobj = Neumaier::new();
        for i in 0..m {
            pobj.add((phi_c[i] - zs[i]).abs());
        }
        let mut dobj = Neumaier::new();
        for i in 0..m {
            dobj.add(zs[i] * y[i]);
        }
        let pobj = pobj.total();
        let dobj = dobj.total();
        gap = (pobj - dobj).abs() / (1.0 + pobj.abs());

        if gap <= GAP_TOLERANCE
            && max_abs(&r_primal) <= 1e-8 * (1.0 + max_abs(&zs))
            && max_abs(&r_dual) <= 1e-8
        {
            return Ok(finish(c, y, &phi, gap, iter, true));
        }

        // Normal system Phi' D^{-1} Phi with D = u/g + v/h.
        let inv_d: Vec<f64> = (0..m)
            .map(|i| 1.0 / (u[i] / g[i] + v[i] / h[i]))
            .collect();
        // Complementarity can collapse to machine zero while the duality gap
        // is still open when the normal systems are too ill-conditioned to
        // produce useful directions; continuing from there only manufactures
        // division-by-zero garbage.
        if mu < 1e-14 && gap > GAP_TOLERANCE {
            if gap <= USABLE_GAP {
                return Ok(finish(c, y, &phi, gap, iter, false));
            }
            return Err(Error::SolverStalled {
                gap,
                iterations: iter as usize,
            });
        }

        phi.normal_matrix(&inv_d, &mut normal);
        if normal.iter().any(|x| !x.is_finite()) {
            if gap <= USABLE_GAP {
                return Ok(finish(c, y, &phi, gap, iter, false));
            }
            return Err(Error::SolverStalled {
                gap,
                iterations: iter as usize,
            });
        }
        let factor = match factor_with_ridge(&normal, p) {
            Ok(f) => f,
            // Indefiniteness this late usually means the complementarity
            // products have collapsed below working precision; the iterate
            // itself is fine whenever the gap already is.
            Err(_) if gap <= USABLE_GAP => {
                return Ok(finish(c, y, &phi, gap, iter, false));
            }
            Err(err) => return Err(err),
        };

        // Given complementarity right sides r_u, r_v, the reduced right side
        // is r_p - r_u/g + r_v/h and the back substitutions are
        // dy = (rhs - Phi dc)/D, du = (r_u + u dy)/g, dv = (r_v - v dy)/h.
        let solve_direction = |r_u: &[f64], r_v: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
            let rhs_rows: Vec<f64> = (0..m)
                .map(|i| r_primal[i] - r_u[i] / g[i] + r_v[i] / h[i])
                .collect();
            let weighted: Vec<f64> = (0..m).map(|i| rhs_rows[i] * inv_d[i]).collect();
            let mut rhs_c = vec![0.0f64; p];
            phi.mat_t_vec(&weighted, &mut rhs_c);
            for j in 0..p {
                rhs_c[j] -= r_dual[j];
            }
            let mut dc = rhs_c;
            cholesky_solve(&factor, p, &mut dc);
            let mut phi_dc = vec![0.0f64; m];
            phi.mat_vec(&dc, &mut phi_dc);
            let dy: Vec<f64> = (0..m).map(|i| (rhs_rows[i] - phi_dc[i]) * inv_d[i]).collect();
            let du: Vec<f64> = (0..m).map(|i| (r_u[i] + u[i] * dy[i]) / g[i]).collect();
            let dv: Vec<f64> = (0..m).map(|i| (r_v[i] - v[i] * dy[i]) / h[i]).collect();
            (dc, du, dv, dy)
        };

        // Predictor: pure Newton toward complementarity zero.
        let r_u_aff: Vec<f64> = (0..m).map(|i| -u[i] * g[i]).collect();
        let r_v_aff: Vec<f64> = (0..m).map(|i| -v[i] * h[i]).collect();
        let (_dc_aff, du_aff, dv_aff, dy_aff) = solve_direction(&r_u_aff, &r_v_aff);

        let alpha_p_aff = step_to_boundary(&u, &du_aff).min(step_to_boundary(&v, &dv_aff));
        let neg_dy: Vec<f64> = dy_aff.iter().map(|&d| -d).collect();
        let alpha_d_aff = step_to_boundary(&g, &neg_dy).min(step_to_boundary(&h, &dy_aff));

        let mut mu_aff_acc = Neumaier::new();
        for i in 0..m {
            mu_aff_acc.add(
                (u[i] + alpha_p_aff * du_aff[i]) * (g[i] - alpha_d_aff * dy_aff[i]),
            );
            mu_aff_acc.add(
                (v[i] + alpha_p_aff * dv_aff[i]) * (h[i] + alpha_d_aff * dy_aff[i]),
            );
        }
        let mu_aff = mu_aff_acc.total() / (2 * m) as f64;
        let sigma = if mu > 0.0 {
            ((mu_aff / mu).max(0.0).min(1.0)).powi(3)
        } else {
            0.0
        };

        // Corrector with centering and the Mehrotra second-order term.
        let r_u_cor: Vec<f64> = (0..m)
            .map(|i| sigma * mu - u[i] * g[i] + du_aff[i] * dy_aff[i])
            .collect();
        let r_v_cor: Vec<f64> = (0..m)
            .map(|i| sigma * mu - v[i] * h[i] - dv_aff[i] * dy_aff[i])
            .collect();
        let (dc, du, dv, dy) = solve_direction(&r_u_cor, &r_v_cor);

        let alpha_p =
            (STEP_DAMPING * step_to_boundary(&u, &du).min(step_to_boundary(&v, &dv))).min(1.0);
        let neg_dy_cor: Vec<f64> = dy.iter().map(|&d| -d).collect();
        let alpha_d = (STEP_DAMPING
            * step_to_boundary(&g, &neg_dy_cor).min(step_to_boundary(&h, &dy)))
        .min(1.0);

        for j in 0..p {
            c[j] += alpha_p * dc[j];
        }
        for i in 0..m {
            u[i] += alpha_p * du[i];
            v[i] += alpha_p * dv[i];
            y[i] += alpha_d * dy[i];
        }
    }

    if gap <= USABLE_GAP {
        return Ok(finish(c, y, &phi, gap, MAX_ITERATIONS, false));
    }
    Err(Error::SolverStalled {
        gap,
        iterations: MAX_ITERATIONS as usize,
    })
}
