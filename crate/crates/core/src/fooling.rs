//! Fooling experiments: how far a discrete distribution's polynomial
//! threshold expectations sit from their Gaussian counterparts, and the
//! block lift that spreads each coordinate over `N` nearly independent
//! replicas while keeping low-degree moments close.
//!
//! The lift sends a point `x` in `R^n` to `x_hat` in `R^{nN}` with
//! `x_hat[i*N + j] = x[i] / sqrt(N) + Z[i][j]`, where each `Z[i]` is an
//! independent centered Gaussian block. Averaging a block back through
//! `sum_j x_hat[i*N + j] / sqrt(N)` recovers `x[i]` exactly because the
//! block sums to zero. A polynomial `p` rides along as `p_delta`: compose
//! `p` with that averaging map and multilinearize the result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::algebra::{enumerate_multi_indices, MultiIndex, Polynomial};
use crate::distributions::{draw_centered_block, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::sums::Neumaier;
use crate::tester::{gaussian_moment, moment_slack};
use crate::sign;

/// Smallest Monte Carlo sample count accepted by the Gaussian estimators.
pub const MIN_MC_SAMPLES: u64 = 1_000;

/// Smallest trial count accepted by [`verify_pdelta_closeness`].
pub const MIN_CLOSENESS_TRIALS: usize = 100;

/// Evaluation cells allowed in the lift slack scan:
/// `mc_samples * support_size * #indices`.
const LIFT_SLACK_CELL_CAP: u128 = 100_000_000;

/// z-value of the two-sided 99% normal interval; Monte Carlo estimates are
/// reported with half-width `Z_99 / sqrt(m)` (the summands lie in `[-1, 1]`,
/// so their standard deviation is at most 1).
const Z_99: f64 = 2.58;

/// Exact threshold-function expectation under a discrete distribution:
/// `sum_j w_j sign(p(x_j))`, with `sign(0) = +1`.
pub fn ptf_expectation_discrete(p: &Polynomial, dist: &DiscreteDistribution) -> Result<f64> {
    if p.dimension() != dist.dimension() {
        return Err(Error::DimensionMismatch {
            expected: dist.dimension(),
            got: p.dimension(),
        });
    }
    let compiled = p.compile();
    let mut acc = Neumaier::new();
    for (point, &w) in dist.points().iter().zip(dist.weights()) {
        acc.add(w * sign(compiled.eval_unchecked(point)));
    }
    Ok(acc.total())
}

/// Monte Carlo estimate of `E[sign(p(Y))]` for `Y ~ N(0, I_n)`, returned as
/// `(estimate, half_width)` with the 99% half-width `2.58 / sqrt(m)`.
///
/// Requires `m >= 1000`; smaller runs produce intervals too wide to report.
pub fn ptf_expectation_gaussian(p: &Polynomial, m: u64, seed: u64) -> Result<(f64, f64)> {
    if m < MIN_MC_SAMPLES {
        return Err(Error::invalid(
            "m",
            "Monte Carlo estimates need at least 1000 samples",
        ));
    }
    let n = p.dimension();
    let compiled = p.compile();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point = vec![0.0f64; n];
    let mut acc = Neumaier::new();
    for _ in 0..m {
        for v in point.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        acc.add(sign(compiled.eval_unchecked(&point)));
    }
    Ok((acc.total() / m as f64, Z_99 / (m as f64).sqrt()))
}

/// Gap between a threshold function's discrete and Gaussian expectations,
/// next to the distribution's moment slack at the polynomial's degree.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FoolingReport {
    /// Rendering of the threshold polynomial (callers may relabel).
    pub ptf_id: String,
    /// `|E_D[sign p] - estimated E_N[sign p]|`.
    pub gap: f64,
    /// Exact moment slack of the distribution at degree `k`.
    pub slack: f64,
    /// Degree at which the slack was measured: the degree of `p`.
    pub k: u32,
    /// 99% half-width of the Gaussian-side Monte Carlo estimate.
    pub estimator_error: f64,
    /// Exact discrete expectation `sum_j w_j sign(p(x_j))`.
    pub discrete_expectation: f64,
    /// Monte Carlo estimate of `E[sign(p(Y))]`, `Y ~ N(0, I)`.
    pub gaussian_estimate: f64,
}

/// Measures how well `dist` fools the threshold function `sign(p)`:
/// the exact discrete expectation against a Monte Carlo Gaussian estimate,
/// with the distribution's moment slack at `p`'s degree for context.
pub fn fooling_gap(
    p: &Polynomial,
    dist: &DiscreteDistribution,
    mc_samples: u64,
    seed: u64,
) -> Result<FoolingReport> {
    let discrete = ptf_expectation_discrete(p, dist)?;
    let (gaussian, half_width) = ptf_expectation_gaussian(p, mc_samples, seed)?;
    let k = p.degree();
    let slack = moment_slack(dist, k)?.slack;
    Ok(FoolingReport {
        ptf_id: format!("{p:?}"),
        gap: (discrete - gaussian).abs(),
        slack,
        k,
        estimator_error: half_width,
        discrete_expectation: discrete,
        gaussian_estimate: gaussian,
    })
}

fn validate_block_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid("block_size", "lift blocks need size >= 2"));
    }
    Ok(())
}

/// Lifts each point of `points` from `R^n` to `R^{nN}`: coordinate `i`
/// becomes the block `x[i] / sqrt(N) + Z[i][..]` with an independent
/// centered Gaussian block `Z[i]` per point and coordinate. The output is
/// block-major: lifted coordinate `i * N + j` is replica `j` of input
/// coordinate `i`. Requires `N >= 2`.
pub fn hat_lift(points: &[Vec<f64>], block_size: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    validate_block_size(block_size)?;
    let n = points.first().map(Vec::len).unwrap_or(0);
    if n == 0 {
        return Err(Error::invalid("points", "need at least one coordinate"));
    }
    let scale = 1.0 / (block_size as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut block = vec![0.0f64; block_size];
    let mut out = Vec::with_capacity(points.len());
    for point in points {
        if point.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: point.len(),
            });
        }
        let mut lifted = Vec::with_capacity(n * block_size);
        for &x in point {
            draw_centered_block(&mut rng, &mut block);
            let shifted = x * scale;
            lifted.extend(block.iter().map(|&z| shifted + z));
        }
        out.push(lifted);
    }
    Ok(out)
}

/// The multilinear companion of `p` on the lifted space: substitute
/// `x[i] = sum_j y[i*N + j] / sqrt(N)` and multilinearize. Requires
/// `N >= 1`; the composition is rejected when its output would exceed the
/// shared size cap.
pub fn build_p_delta(p: &Polynomial, block_size: usize) -> Result<Polynomial> {
    if block_size == 0 {
        return Err(Error::invalid("block_size", "lift blocks need size >= 1"));
    }
    let n = p.dimension();
    let out_dim = n
        .checked_mul(block_size)
        .ok_or_else(|| Error::invalid("block_size", "lifted dimension overflows"))?;
    let scale = 1.0 / (block_size as f64).sqrt();
    let mut rows = vec![vec![0.0f64; out_dim]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for j in 0..block_size {
            row[i * block_size + j] = scale;
        }
    }
    Ok(p.compose_linear(&rows)?.multilinearized())
}

/// A batch of lifted points together with the lifted companion polynomial.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LiftResult {
    pub block_size: usize,
    pub lifted_points: Vec<Vec<f64>>,
    pub p_delta: Polynomial,
}

/// Convenience wrapper: lift `points` and build `p_delta` in one call.
pub fn lift_with_pdelta(
    points: &[Vec<f64>],
    p: &Polynomial,
    block_size: usize,
    seed: u64,
) -> Result<LiftResult> {
    let n = points.first().map(Vec::len).unwrap_or(0);
    if n != p.dimension() {
        return Err(Error::DimensionMismatch {
            expected: p.dimension(),
            got: n,
        });
    }
    Ok(LiftResult {
        block_size,
        lifted_points: hat_lift(points, block_size, seed)?,
        p_delta: build_p_delta(p, block_size)?,
    })
}

/// Draws `trials` Gaussian points, lifts each, and reports the fraction
/// where `|p(X) - p_delta(X_hat)| > delta`.
///
/// `p` must have unit coefficient norm (so `delta` is on a meaningful
/// scale) and `trials >= 100`.
pub fn verify_pdelta_closeness(
    p: &Polynomial,
    block_size: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    validate_block_size(block_size)?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid("delta", "must be positive and finite"));
    }
    if trials < MIN_CLOSENESS_TRIALS {
        return Err(Error::invalid(
            "trials",
            "closeness checks need at least 100 trials",
        ));
    }
    if (p.coeff_norms().l2 - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(
            "p",
            "closeness is measured for unit-norm polynomials; normalize first",
        ));
    }
    let n = p.dimension();
    let p_delta = build_p_delta(p, block_size)?;
    let compiled = p.compile();
    let compiled_delta = p_delta.compile();
    let scale = 1.0 / (block_size as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point = vec![0.0f64; n];
    let mut lifted = vec![0.0f64; n * block_size];
    let mut block = vec![0.0f64; block_size];
    let mut failures = 0usize;
    for _ in 0..trials {
        for (i, v) in point.iter_mut().enumerate() {
            *v = StandardNormal.sample(&mut rng);
            draw_centered_block(&mut rng, &mut block);
            let shifted = *v * scale;
            for (j, &z) in block.iter().enumerate() {
                lifted[i * block_size + j] = shifted + z;
            }
        }
        let diff = compiled.eval_unchecked(&point) - compiled_delta.eval_unchecked(&lifted);
        if diff.abs() > delta {
            failures += 1;
        }
    }
    Ok(failures as f64 / trials as f64)
}

/// Moment slack of the lifted distribution, estimated by Monte Carlo over
/// the Gaussian blocks (exact over the base support), next to the bound it
/// should satisfy.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LiftSlackReport {
    /// Estimated `max |E[X_hat^beta] - E_N[Y^beta]|` over `|beta| <= k`.
    pub estimate: f64,
    /// Index attaining the estimate.
    pub worst_beta: MultiIndex,
    /// Exact moment slack of the base distribution at degree `k`.
    pub base_slack: f64,
    /// Lift amplification factor `(2k)^{k/2}`.
    pub amplification: f64,
    /// 99% Monte Carlo half-width, maximized over indices.
    pub half_width: f64,
    /// `amplification * base_slack + half_width`; the estimate should stay
    /// at or below this.
    pub bound: f64,
    pub block_size: usize,
    pub k: u32,
}

/// Estimates the lifted distribution's moment slack at degree `k` and
/// compares it against `(2k)^{k/2} * slack(D, k)` plus Monte Carlo error.
///
/// For each replication the base support is enumerated exactly and only the
/// Gaussian blocks are sampled, so the estimator is unbiased with variance
/// from the blocks alone.
pub fn lift_slack_check(
    dist: &DiscreteDistribution,
    block_size: usize,
    k: u32,
    mc_samples: u64,
    seed: u64,
) -> Result<LiftSlackReport> {
    validate_block_size(block_size)?;
    if mc_samples < MIN_MC_SAMPLES {
        return Err(Error::invalid(
            "mc_samples",
            "Monte Carlo estimates need at least 1000 samples",
        ));
    }
    let n = dist.dimension();
    let lifted_dim = n * block_size;
    let indices = enumerate_multi_indices(lifted_dim, k)?;
    let cells = mc_samples as u128 * dist.support_size() as u128 * indices.len() as u128;
    if cells > LIFT_SLACK_CELL_CAP {
        return Err(Error::SizeExceeded {
            what: "lift slack evaluation cells",
            requested: cells,
            cap: LIFT_SLACK_CELL_CAP,
        });
    }
    let base = moment_slack(dist, k)?;
    let factors: Vec<Vec<(usize, u16)>> = indices
        .iter()
        .map(|beta| beta.iter_nonzero().collect())
        .collect();

    let scale = 1.0 / (block_size as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut block = vec![0.0f64; block_size];
    let mut lifted = vec![0.0f64; lifted_dim];
    let mut sums = vec![Neumaier::new(); indices.len()];
    let mut sq_sums = vec![Neumaier::new(); indices.len()];
    let mut rep_vals = vec![0.0f64; indices.len()];
    for _ in 0..mc_samples {
        for v in rep_vals.iter_mut() {
            *v = 0.0;
        }
        for (point, &w) in dist.points().iter().zip(dist.weights()) {
            for (i, &x) in point.iter().enumerate() {
                draw_centered_block(&mut rng, &mut block);
                let shifted = x * scale;
                for (j, &z) in block.iter().enumerate() {
                    lifted[i * block_size + j] = shifted + z;
                }
            }
            for (val, factor) in rep_vals.iter_mut().zip(&factors) {
                let mut monomial = 1.0;
                for &(i, e) in factor {
                    monomial *= lifted[i].powi(e as i32);
                }
                *val += w * monomial;
            }
        }
        for ((acc, sq), &val) in sums.iter_mut().zip(sq_sums.iter_mut()).zip(&rep_vals) {
            acc.add(val);
            sq.add(val * val);
        }
    }

    let m = mc_samples as f64;
    let mut estimate = 0.0f64;
    let mut worst_beta = MultiIndex::zeros(lifted_dim);
    let mut half_width = 0.0f64;
    for ((beta, acc), sq) in indices.iter().zip(&sums).zip(&sq_sums) {
        let mean = acc.total() / m;
        let dev = (mean - gaussian_moment(beta)).abs();
        if dev > estimate {
            estimate = dev;
            worst_beta = beta.clone();
        }
        let variance = (sq.total() / m - mean * mean).max(0.0);
        half_width = half_width.max(Z_99 * (variance / m).sqrt());
    }
    let amplification = (2.0 * k as f64).powf(k as f64 / 2.0);
    Ok(LiftSlackReport {
        estimate,
        worst_beta,
        base_slack: base.slack,
        amplification,
        half_width,
        bound: amplification * base.slack + half_width,
        block_size,
        k,
    })
}

/// Monte Carlo estimate of the small-ball probability
/// `P(|p(Y)| < epsilon)` for `Y ~ N(0, I_n)`.
pub fn small_ball_probability(
    p: &Polynomial,
    epsilon: f64,
    mc_samples: u64,
    seed: u64,
) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid("epsilon", "must be positive and finite"));
    }
    if mc_samples < MIN_MC_SAMPLES {
        return Err(Error::invalid(
            "mc_samples",
            "Monte Carlo estimates need at least 1000 samples",
        ));
    }
    let n = p.dimension();
    let compiled = p.compile();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point = vec![0.0f64; n];
    let mut hits = 0u64;
    for _ in 0..mc_samples {
        for v in point.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        if compiled.eval_unchecked(&point).abs() < epsilon {
            hits += 1;
        }
    }
    Ok(hits as f64 / mc_samples as f64)
}
