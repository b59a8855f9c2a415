//! Sample generators, finite-support distributions, and the univariate
//! weight functions used by the sign-approximation pipeline.
//!
//! Everything random is driven by `ChaCha8` seeded explicitly, so identical
//! calls produce identical output on every platform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::algebra::Polynomial;
use crate::error::{Error, Result};
use crate::sums::{compensated_sum, Neumaier};
use crate::tester;

/// Tolerance on `sum(weights) - 1` when validating a distribution.
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Cap on the support size of tensor-product quadrature distributions.
const MAX_PRODUCT_SUPPORT: u128 = 1_000_000;

/// Largest total degree accepted by the exact block moment routine; the
/// pairing count grows as `(degree - 1)!!`.
const MAX_BLOCK_MOMENT_DEGREE: u32 = 8;

/// 1 / sqrt(pi), the normalizer of `exp(-x^2)`.
const INV_SQRT_PI: f64 = 0.5641895835477563;

/// A finite-support probability distribution on `R^n`.
///
/// Weights are strictly positive and sum to one within `1e-12`; both are
/// enforced at construction and after deserialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistRepr", into = "DistRepr")]
pub struct DiscreteDistribution {
    dimension: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistRepr {
    n: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl From<DiscreteDistribution> for DistRepr {
    fn from(d: DiscreteDistribution) -> DistRepr {
        DistRepr {
            n: d.dimension,
            points: d.points,
            weights: d.weights,
        }
    }
}

impl TryFrom<DistRepr> for DiscreteDistribution {
    type Error = Error;

    fn try_from(repr: DistRepr) -> Result<DiscreteDistribution> {
        let dist = DiscreteDistribution::new(repr.points, repr.weights)?;
        if dist.dimension != repr.n {
            return Err(Error::DimensionMismatch {
                expected: repr.n,
                got: dist.dimension,
            });
        }
        Ok(dist)
    }
}

impl DiscreteDistribution {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<DiscreteDistribution> {
        let first = points.first().ok_or(Error::EmptyInput("support points"))?;
        let dimension = first.len();
        if dimension == 0 {
            return Err(Error::EmptyInput("support point coordinates"));
        }
        if weights.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        for point in &points {
            if point.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: point.len(),
                });
            }
            if point.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical("support point is not finite".into()));
            }
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights", "must all be strictly positive"));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid(
                "weights",
                "must sum to 1 within 1e-12",
            ));
        }
        Ok(DiscreteDistribution {
            dimension,
            points,
            weights,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn support_size(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Exact expectation of a function given by its values on the support.
    pub fn expectation_of_values(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.points.len() {
            return Err(Error::DimensionMismatch {
                expected: self.points.len(),
                got: values.len(),
            });
        }
        let mut acc = Neumaier::new();
        for (&w, &v) in self.weights.iter().zip(values) {
            acc.add(w * v);
        }
        Ok(acc.total())
    }
}

/// `m` independent draws from `N(0, I_n)`, one row per draw.
pub fn sample_gaussian(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect()
}

/// `m` independent draws from a finite-support distribution.
pub fn sample_discrete(dist: &DiscreteDistribution, m: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cdf = Vec::with_capacity(dist.support_size());
    let mut running = 0.0;
    for &w in dist.weights() {
        running += w;
        cdf.push(running);
    }
    let total = *cdf.last().expect("non-empty support");
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let u: f64 = rng.gen::<f64>() * total;
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        out.push(dist.points[idx].clone());
    }
    Ok(out)
}

/// Tensor product of the `nodes`-point Gauss-Hermite rule across `n`
/// coordinates, as a finite distribution with `nodes^n` support points.
///
/// Matches every moment of `N(0, I_n)` of degree at most `2 * nodes - 1`
/// in each coordinate. Support points are enumerated with the last
/// coordinate cycling fastest.
pub fn gauss_hermite_product(n: usize, nodes: usize) -> Result<DiscreteDistribution> {
    if n == 0 {
        return Err(Error::invalid("n", "dimension must be at least 1"));
    }
    let support = (nodes as u128)
        .checked_pow(n as u32)
        .ok_or(Error::SizeExceeded {
            what: "tensor quadrature support",
            requested: u128::MAX,
            cap: MAX_PRODUCT_SUPPORT,
        })?;
    if support > MAX_PRODUCT_SUPPORT {
        return Err(Error::SizeExceeded {
            what: "tensor quadrature support",
            requested: support,
            cap: MAX_PRODUCT_SUPPORT,
        });
    }
    let (xs, ws) = crate::quadrature::hermite_rule(nodes)?;
    let count = support as usize;
    let mut points = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    let mut digits = vec![0usize; n];
    for _ in 0..count {
        points.push(digits.iter().map(|&d| xs[d]).collect());
        weights.push(digits.iter().map(|&d| ws[d]).product());
        for pos in (0..n).rev() {
            digits[pos] += 1;
            if digits[pos] < nodes {
                break;
            }
            digits[pos] = 0;
        }
    }
    // Quadrature weights sum to 1 only up to rounding; renormalize so the
    // distribution invariant holds exactly enough.
    let total = compensated_sum(weights.iter().copied());
    for w in &mut weights {
        *w /= total;
    }
    DiscreteDistribution::new(points, weights)
}

/// Reweights a moment-matching distribution until its worst moment deviation
/// from the Gaussian lands in `[eta/2, eta]`.
///
/// The support is left untouched; only the weights move, along the direction
/// `x_1^2 - mean(x_1^2)` (the first even moment in graded-lex order), with
/// the sign of the tilt chosen by the seed's parity. Fails when the base
/// distribution already deviates by more than `1e-9`, when the support
/// cannot move that moment at all, or when positivity of the weights caps
/// the deviation below `eta/2`.
pub fn perturb_weights(
    base: &DiscreteDistribution,
    k: u32,
    eta: f64,
    seed: u64,
) -> Result<DiscreteDistribution> {
    if !(eta >= 1e-12) || !eta.is_finite() {
        return Err(Error::invalid("eta", "must be at least 1e-12"));
    }
    if k < 2 {
        return Err(Error::invalid(
            "k",
            "degree must be at least 2 so the tilted moment is visible",
        ));
    }
    let base_slack = tester::moment_slack(base, k)?.slack;
    if base_slack > 1e-9 {
        return Err(Error::invalid(
            "base",
            "must match Gaussian moments to 1e-9 before perturbation",
        ));
    }

    // Tilt direction: g_j = x_{j,1}^2 - E[x_1^2], mean zero under the base
    // weights, so first-order mass is conserved.
    let mut mean_sq = Neumaier::new();
    for (point, &w) in base.points().iter().zip(base.weights()) {
        mean_sq.add(w * point[0] * point[0]);
    }
    let mu = mean_sq.total();
    let direction: Vec<f64> = base
        .points()
        .iter()
        .map(|p| p[0] * p[0] - mu)
        .collect();
    if direction.iter().all(|g| g.abs() < 1e-12) {
        return Err(Error::Infeasible(
            "support cannot move the first even moment".into(),
        ));
    }

    let sign = if seed % 2 == 0 { 1.0 } else { -1.0 };
    // Positivity bound: w_j (1 + t s g_j) > 0 for all j.
    let mut t_cap = f64::INFINITY;
    for &g in &direction {
        let slope = sign * g;
        if slope < 0.0 {
            t_cap = t_cap.min(-1.0 / slope);
        }
    }
    let t_cap = if t_cap.is_finite() {
        t_cap * (1.0 - 1e-9)
    } else {
        1e12
    };

    let tilted = |t: f64| -> Result<(f64, DiscreteDistribution)> {
        let raw: Vec<f64> = base
            .weights()
            .iter()
            .zip(&direction)
            .map(|(&w, &g)| w * (1.0 + t * sign * g))
            .collect();
        let total = compensated_sum(raw.iter().copied());
        let weights: Vec<f64> = raw.into_iter().map(|w| w / total).collect();
        let dist = DiscreteDistribution::new(base.points().to_vec(), weights)?;
        let slack = tester::moment_slack(&dist, k)?.slack;
        Ok((slack, dist))
    };

    let (cap_slack, cap_dist) = tilted(t_cap)?;
    if cap_slack < eta {
        if cap_slack >= eta / 2.0 {
            return Ok(cap_dist);
        }
        return Err(Error::Infeasible(format!(
            "weight positivity caps the deviation at {cap_slack:.3e}, below eta/2"
        )));
    }

    // The slack grows continuously from ~0 at t = 0, so bisection lands in
    // the target window [3 eta/4, eta].
    let mut lo = 0.0f64;
    let mut hi = t_cap;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (slack, dist) = tilted(mid)?;
        if slack > eta {
            hi = mid;
        } else if slack < 0.75 * eta {
            lo = mid;
        } else {
            return Ok(dist);
        }
    }
    Err(Error::Numerical(
        "weight tilt bisection failed to land in the target window".into(),
    ))
}

/// Size of one centered Gaussian block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub size: usize,
}

impl BlockSpec {
    pub fn new(size: usize) -> Result<BlockSpec> {
        if size == 0 {
            return Err(Error::invalid("size", "block size must be at least 1"));
        }
        Ok(BlockSpec { size })
    }
}

/// One centered Gaussian block drawn from an existing stream: `W - mean(W)`
/// for `W ~ N(0, I_size)`, written into `out`.
pub(crate) fn draw_centered_block(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    let mean = out.iter().sum::<f64>() / out.len() as f64;
    for v in out.iter_mut() {
        *v -= mean;
    }
}

/// `m` draws of a centered Gaussian block: `W - mean(W)` for
/// `W ~ N(0, I_N)`. Coordinates have variance `1 - 1/N` and pairwise
/// covariance `-1/N`, and every row sums to zero.
pub fn sample_gaussian_block(spec: BlockSpec, m: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    BlockSpec::new(spec.size)?;
    let n = spec.size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let mut row = vec![0.0f64; n];
        draw_centered_block(&mut rng, &mut row);
        out.push(row);
    }
    Ok(out)
}

/// Exact moment `E[Z^beta]` of a centered Gaussian block of size `N`.
///
/// `Z` is jointly Gaussian with covariance `1 - 1/N` on the diagonal and
/// `-1/N` off it, so the moment is the pairing (Wick) sum over the monomial's
/// variables. Degrees above eight are refused; the pairing count is `7!!`
/// there already.
pub fn gaussian_block_moment(spec: BlockSpec, beta: &crate::algebra::MultiIndex) -> Result<f64> {
    BlockSpec::new(spec.size)?;
    if beta.dimension() != spec.size {
        return Err(Error::DimensionMismatch {
            expected: spec.size,
            got: beta.dimension(),
        });
    }
    let degree = beta.degree();
    if degree > MAX_BLOCK_MOMENT_DEGREE {
        return Err(Error::SizeExceeded {
            what: "block moment degree",
            requested: degree as u128,
            cap: MAX_BLOCK_MOMENT_DEGREE as u128,
        });
    }
    if degree % 2 == 1 {
        return Ok(0.0);
    }
    let mut vars: Vec<usize> = Vec::with_capacity(degree as usize);
    for (i, e) in beta.iter_nonzero() {
        for _ in 0..e {
            vars.push(i);
        }
    }
    Ok(wick_pairing(&vars, spec.size as f64))
}

fn wick_pairing(vars: &[usize], n: f64) -> f64 {
    if vars.is_empty() {
        return 1.0;
    }
    let a = vars[0];
    let mut total = 0.0;
    for t in 1..vars.len() {
        let b = vars[t];
        let cov = if a == b { 1.0 - 1.0 / n } else { -1.0 / n };
        let mut rest = Vec::with_capacity(vars.len() - 2);
        rest.extend_from_slice(&vars[1..t]);
        rest.extend_from_slice(&vars[t + 1..]);
        total += cov * wick_pairing(&rest, n);
    }
    total
}

/// Density of the symmetric exponential-power weight
/// `w_gamma(x) = C exp(-|x|^gamma)` with `C = gamma / (2 Gamma(1/gamma))`.
pub fn w_gamma_density(gamma_exp: f64, x: f64) -> Result<f64> {
    if !(gamma_exp > 0.0) || !gamma_exp.is_finite() {
        return Err(Error::invalid("gamma", "exponent must be positive and finite"));
    }
    let norm = gamma_exp / (2.0 * gamma(1.0 / gamma_exp));
    Ok(norm * (-x.abs().powf(gamma_exp)).exp())
}

/// Controls for push-forward density evaluation: the root search interval
/// `[-root_range, root_range]`, the bracketing resolution, and the
/// derivative magnitude below which the density is reported as infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushforwardConfig {
    pub root_range: f64,
    pub bracket_cells: usize,
    pub derivative_floor: f64,
}

impl Default for PushforwardConfig {
    fn default() -> Self {
        PushforwardConfig {
            root_range: 12.0,
            bracket_cells: 4096,
            derivative_floor: 1e-10,
        }
    }
}

/// Density at `y` of the push-forward of the weight `exp(-x^2) / sqrt(pi)`
/// through a univariate polynomial `p`:
///
/// `w(y) = (1/sqrt(pi)) * sum over roots x of p(x) = y of exp(-x^2) / |p'(x)|`.
///
/// Roots are located by sign-change bracketing on the configured interval
/// followed by bisection. Returns `+inf` when some root sits where `|p'|`
/// falls below the configured floor (a critical value of `p`), and `0.0`
/// when `p(x) = y` has no root in the interval.
pub fn pushforward_density_1d(
    p: &Polynomial,
    y: f64,
    config: &PushforwardConfig,
) -> Result<f64> {
    if p.dimension() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: p.dimension(),
        });
    }
    if p.degree() == 0 {
        return Err(Error::invalid(
            "p",
            "constant polynomials push forward to a point mass",
        ));
    }
    if !(config.root_range > 0.0) || config.bracket_cells < 2 {
        return Err(Error::invalid("config", "root range and cells must be positive"));
    }
    let dp = p.derivative(0)?;
    let roots = bracket_roots(p, y, config)?;
    let mut acc = Neumaier::new();
    for x in roots {
        let slope = dp.eval(&[x])?.abs();
        if slope < config.derivative_floor {
            return Ok(f64::INFINITY);
        }
        acc.add((-x * x).exp() / slope);
    }
    Ok(INV_SQRT_PI * acc.total())
}

/// All roots of `p(x) = y` in the configured interval, found by sign-change
/// bracketing and bisection, left to right.
pub(crate) fn bracket_roots(
    p: &Polynomial,
    y: f64,
    config: &PushforwardConfig,
) -> Result<Vec<f64>> {
    let r = config.root_range;
    let cells = config.bracket_cells;
    let q = |x: f64| -> Result<f64> { Ok(p.eval(&[x])? - y) };
    let mut roots: Vec<f64> = Vec::new();
    let push = |roots: &mut Vec<f64>, x: f64| {
        if roots.last().map_or(true, |&last| (x - last).abs() > 1e-9) {
            roots.push(x);
        }
    };
    let grid_x = |i: usize| -> f64 { -r + 2.0 * r * i as f64 / cells as f64 };
    let mut prev_x = grid_x(0);
    let mut prev_q = q(prev_x)?;
    if prev_q == 0.0 {
        push(&mut roots, prev_x);
    }
    for i in 1..=cells {
        let x = grid_x(i);
        let qx = q(x)?;
        if qx == 0.0 {
            push(&mut roots, x);
        } else if prev_q != 0.0 && (prev_q < 0.0) != (qx < 0.0) {
            let (mut lo, mut hi) = (prev_x, x);
            let mut q_lo = prev_q;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if hi - lo < 1e-12 * mid.abs().max(1.0) {
                    break;
                }
                let q_mid = q(mid)?;
                if q_mid == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (q_mid < 0.0) == (q_lo < 0.0) {
                    lo = mid;
                    q_lo = q_mid;
                } else {
                    hi = mid;
                }
            }
            push(&mut roots, 0.5 * (lo + hi));
        }
        prev_x = x;
        prev_q = qx;
    }
    Ok(roots)
}

/// A univariate weight function the sign-approximation pipeline can
/// evaluate pointwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum UnivariateWeight {
    /// `C exp(-|x|^gamma)`.
    WGamma { gamma: f64 },
    /// Push-forward of `exp(-x^2)/sqrt(pi)` through a univariate polynomial.
    PushforwardGaussian {
        poly: Polynomial,
        config: PushforwardConfig,
    },
}

impl UnivariateWeight {
    pub fn density(&self, x: f64) -> Result<f64> {
        match self {
            UnivariateWeight::WGamma { gamma } => w_gamma_density(*gamma, x),
            UnivariateWeight::PushforwardGaussian { poly, config } => {
                pushforward_density_1d(poly, x, config)
            }
        }
    }
}

/// Axis grid for certificate scans.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GridSpacing {
    /// Equally spaced points.
    Uniform,
    /// Equally spaced in a symmetric log transform: linear on `[-1, 1]`,
    /// logarithmic beyond, so tails get resolved without starving the core.
    SymLog,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub count: usize,
    pub spacing: GridSpacing,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.count < 2 {
            return Err(Error::invalid("count", "grid needs at least 2 points"));
        }
        if !(self.start < self.end) {
            return Err(Error::invalid("start/end", "grid needs start < end"));
        }
        let transform = |x: f64| -> f64 {
            match self.spacing {
                GridSpacing::Uniform => x,
                GridSpacing::SymLog => {
                    if x.abs() <= 1.0 {
                        x
                    } else {
                        x.signum() * (1.0 + x.abs().ln())
                    }
                }
            }
        };
        let inverse = |u: f64| -> f64 {
            match self.spacing {
                GridSpacing::Uniform => u,
                GridSpacing::SymLog => {
                    if u.abs() <= 1.0 {
                        u
                    } else {
                        u.signum() * (u.abs() - 1.0).exp()
                    }
                }
            }
        };
        let ua = transform(self.start);
        let ub = transform(self.end);
        let last = self.count - 1;
        Ok((0..self.count)
            .map(|i| {
                if i == 0 {
                    self.start
                } else if i == last {
                    self.end
                } else {
                    inverse(ua + (ub - ua) * i as f64 / last as f64)
                }
            })
            .collect())
    }
}

/// Grid certificate for a pointwise lower bound `w >= C * w_gamma`.
///
/// `constant` is the minimum of `w(x) / w_gamma(x)` over the grid, ignoring
/// points where `w` is reported infinite (those only strengthen a lower
/// bound, but are counted). `holds` means the constant clears the floor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LslCertificate {
    pub constant: f64,
    pub holds: bool,
    pub floor: f64,
    /// Grid point attaining the minimum ratio.
    pub worst_x: f64,
    /// Grid points where the weight evaluated to infinity.
    pub infinite_points: usize,
}

pub fn lsl_certificate(
    weight: &UnivariateWeight,
    gamma_exp: f64,
    grid: &GridSpec,
    floor: f64,
) -> Result<LslCertificate> {
    if !(floor > 0.0) || !floor.is_finite() {
        return Err(Error::invalid("floor", "must be positive and finite"));
    }
    let points = grid.points()?;
    let mut constant = f64::INFINITY;
    let mut worst_x = points[0];
    let mut infinite_points = 0usize;
    for &x in &points {
        let num = weight.density(x)?;
        if num.is_infinite() {
            infinite_points += 1;
            continue;
        }
        if !num.is_finite() {
            return Err(Error::Numerical(format!("weight is NaN at x = {x}")));
        }
        let den = w_gamma_density(gamma_exp, x)?;
        if den <= 0.0 {
            continue;
        }
        let ratio = num / den;
        if ratio < constant {
            constant = ratio;
            worst_x = x;
        }
    }
    if !constant.is_finite() && infinite_points == points.len() {
        return Err(Error::Numerical(
            "weight was infinite on the whole grid".into(),
        ));
    }
    Ok(LslCertificate {
        holds: constant > floor,
        constant,
        floor,
        worst_x,
        infinite_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::MultiIndex;
    use crate::tester::{gaussian_moment, moment_slack};

    fn poly1(coeffs: &[(u16, f64)]) -> Polynomial {
        Polynomial::from_terms(
            1,
            coeffs
                .iter()
                .map(|&(e, c)| (MultiIndex::new(vec![e]), c)),
        )
        .unwrap()
    }

    #[test]
    fn distribution_validation() {
        assert!(DiscreteDistribution::new(vec![], vec![]).is_err());
        assert!(
            DiscreteDistribution::new(vec![vec![0.0], vec![1.0]], vec![0.5]).is_err()
        );
        assert!(
            DiscreteDistribution::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5])
                .is_err()
        );
        assert!(
            DiscreteDistribution::new(vec![vec![0.0], vec![1.0]], vec![1.5, -0.5]).is_err()
        );
        assert!(
            DiscreteDistribution::new(vec![vec![0.0], vec![1.0]], vec![0.6, 0.6]).is_err()
        );
        let ok = DiscreteDistribution::new(vec![vec![0.0], vec![1.0]], vec![0.25, 0.75]);
        assert!(ok.is_ok());
    }

    #[test]
    fn distribution_round_trips_through_json() {
        let dist = gauss_hermite_product(2, 2).unwrap();
        let json = serde_json::to_string(&dist).unwrap();
        let back: DiscreteDistribution = serde_json::from_str(&json).unwrap();
        assert_eq!(dist, back);
        // Tampered weights fail validation on the way back in.
        let bad = json.replace("0.25", "0.35");
        assert!(serde_json::from_str::<DiscreteDistribution>(&bad).is_err());
    }

    #[test]
    fn two_node_rule_is_symmetric_unit_pair() {
        let rule = gauss_hermite_product(1, 2).unwrap();
        assert_eq!(rule.support_size(), 2);
        let mut xs: Vec<f64> = rule.points().iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] + 1.0).abs() < 1e-12);
        assert!((xs[1] - 1.0).abs() < 1e-12);
        assert!(rule.weights().iter().all(|&w| (w - 0.5).abs() < 1e-12));
    }

    #[test]
    fn product_rule_matches_gaussian_moments_to_design_degree() {
        let rule = gauss_hermite_product(2, 3).unwrap();
        assert_eq!(rule.support_size(), 9);
        let report = moment_slack(&rule, 5).unwrap();
        assert!(report.slack < 1e-12, "slack {}", report.slack);
    }

    #[test]
    fn product_rule_support_ordering_cycles_last_coordinate_fastest() {
        let rule = gauss_hermite_product(2, 2).unwrap();
        let pts = rule.points();
        // First coordinate constant across the first two points.
        assert!((pts[0][0] - pts[1][0]).abs() < 1e-15);
        assert!((pts[0][1] + pts[1][1]).abs() < 1e-12);
    }

    #[test]
    fn product_rule_support_cap() {
        assert!(matches!(
            gauss_hermite_product(7, 10),
            Err(Error::SizeExceeded { .. })
        ));
    }

    #[test]
    fn gaussian_sampling_is_deterministic_per_seed() {
        let a = sample_gaussian(3, 5, 42);
        let b = sample_gaussian(3, 5, 42);
        assert_eq!(a, b);
        let c = sample_gaussian(3, 5, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn gaussian_sample_moments_look_standard() {
        let m = 40000;
        let samples = sample_gaussian(2, m, 7);
        let table = crate::tester::empirical_moments(&samples, 2).unwrap();
        for (alpha, value) in table.iter() {
            let dev = (value - gaussian_moment(alpha)).abs();
            assert!(dev < 0.05, "moment {alpha:?} off by {dev}");
        }
    }

    #[test]
    fn discrete_sampling_respects_weights() {
        let dist =
            DiscreteDistribution::new(vec![vec![-1.0], vec![2.0]], vec![0.25, 0.75]).unwrap();
        let samples = sample_discrete(&dist, 40000, 3).unwrap();
        let hits = samples.iter().filter(|s| s[0] == 2.0).count();
        let frac = hits as f64 / samples.len() as f64;
        assert!((frac - 0.75).abs() < 0.01, "frac {frac}");
        assert!(samples.iter().all(|s| s[0] == 2.0 || s[0] == -1.0));
    }

    #[test]
    fn perturbation_lands_in_the_target_window() {
        let base = gauss_hermite_product(1, 6).unwrap();
        let eta = 1e-3;
        for seed in [0u64, 1] {
            let tilted = perturb_weights(&base, 4, eta, seed).unwrap();
            let slack = moment_slack(&tilted, 4).unwrap().slack;
            assert!(
                slack >= eta / 2.0 && slack <= eta,
                "seed {seed}: slack {slack}"
            );
            // Support stays put; only weights change.
            assert_eq!(tilted.points(), base.points());
        }
    }

    #[test]
    fn perturbation_seed_parity_flips_the_tilt() {
        let base = gauss_hermite_product(1, 6).unwrap();
        let up = perturb_weights(&base, 2, 1e-3, 0).unwrap();
        let down = perturb_weights(&base, 2, 1e-3, 1).unwrap();
        let second = |d: &DiscreteDistribution| {
            d.points()
                .iter()
                .zip(d.weights())
                .map(|(p, &w)| w * p[0] * p[0])
                .sum::<f64>()
        };
        assert!(second(&up) > 1.0);
        assert!(second(&down) < 1.0);
    }

    #[test]
    fn perturbation_rejects_bad_inputs() {
        let base = gauss_hermite_product(1, 6).unwrap();
        assert!(perturb_weights(&base, 4, 1e-13, 0).is_err());
        assert!(perturb_weights(&base, 1, 1e-3, 0).is_err());
        // A two-point rule has x^2 constant on the support: the tilt
        // direction vanishes identically.
        let rigid = gauss_hermite_product(1, 2).unwrap();
        assert!(matches!(
            perturb_weights(&rigid, 2, 1e-3, 0),
            Err(Error::Infeasible(_))
        ));
        // A base that is already far from Gaussian is refused.
        let off = DiscreteDistribution::new(vec![vec![0.0]], vec![1.0]).unwrap();
        assert!(perturb_weights(&off, 2, 1e-3, 0).is_err());
    }

    #[test]
    fn block_rows_are_centered_with_the_right_covariance() {
        let spec = BlockSpec::new(4).unwrap();
        let m = 20000;
        let rows = sample_gaussian_block(spec, m, 9).unwrap();
        assert_eq!(rows.len(), m);
        for row in &rows {
            assert_eq!(row.len(), 4);
            let sum: f64 = row.iter().sum();
            assert!(sum.abs() < 1e-12, "row sum {sum}");
        }
        let mut var = Neumaier::new();
        let mut cov = Neumaier::new();
        for row in &rows {
            var.add(row[0] * row[0]);
            cov.add(row[0] * row[1]);
        }
        let var = var.total() / m as f64;
        let cov = cov.total() / m as f64;
        assert!((var - 0.75).abs() < 0.03, "var {var}");
        assert!((cov + 0.25).abs() < 0.03, "cov {cov}");
    }

    #[test]
    fn block_moments_match_closed_forms() {
        let spec = BlockSpec::new(4).unwrap();
        let n = 4.0f64;
        let v = 1.0 - 1.0 / n;
        let c = -1.0 / n;
        let m2 = gaussian_block_moment(spec, &MultiIndex::new(vec![2, 0, 0, 0])).unwrap();
        assert!((m2 - v).abs() < 1e-15);
        let m11 = gaussian_block_moment(spec, &MultiIndex::new(vec![1, 1, 0, 0])).unwrap();
        assert!((m11 - c).abs() < 1e-15);
        let m4 = gaussian_block_moment(spec, &MultiIndex::new(vec![4, 0, 0, 0])).unwrap();
        assert!((m4 - 3.0 * v * v).abs() < 1e-15);
        let m22 = gaussian_block_moment(spec, &MultiIndex::new(vec![2, 2, 0, 0])).unwrap();
        assert!((m22 - (v * v + 2.0 * c * c)).abs() < 1e-15);
        let odd = gaussian_block_moment(spec, &MultiIndex::new(vec![1, 2, 0, 0])).unwrap();
        assert_eq!(odd, 0.0);
    }

    #[test]
    fn block_moments_agree_with_monte_carlo() {
        let spec = BlockSpec::new(3).unwrap();
        let beta = MultiIndex::new(vec![2, 1, 1]);
        let exact = gaussian_block_moment(spec, &beta).unwrap();
        let rows = sample_gaussian_block(spec, 200000, 5).unwrap();
        let mut acc = Neumaier::new();
        for row in &rows {
            acc.add(row[0] * row[0] * row[1] * row[2]);
        }
        let mc = acc.total() / rows.len() as f64;
        assert!((mc - exact).abs() < 0.02, "mc {mc} exact {exact}");
    }

    #[test]
    fn block_moment_degree_cap() {
        let spec = BlockSpec::new(2).unwrap();
        assert!(matches!(
            gaussian_block_moment(spec, &MultiIndex::new(vec![6, 4])),
            Err(Error::SizeExceeded { .. })
        ));
        assert!(gaussian_block_moment(spec, &MultiIndex::new(vec![4, 4])).is_ok());
    }

    #[test]
    fn w_gamma_special_cases() {
        // gamma = 2 is the Gaussian with variance 1/2: density 1/sqrt(pi)
        // at zero. gamma = 1 is the Laplace with density 1/2 at zero.
        assert!((w_gamma_density(2.0, 0.0).unwrap() - INV_SQRT_PI).abs() < 1e-15);
        assert!((w_gamma_density(1.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(w_gamma_density(0.0, 0.0).is_err());
    }

    #[test]
    fn w_gamma_mass_matches_incomplete_gamma() {
        // Mass of w_gamma on [a, b] with 0 < a is
        // (P(1/gamma, b^gamma) - P(1/gamma, a^gamma)) / 2 with P the
        // regularized lower incomplete gamma; compare against a trapezoid.
        use statrs::function::gamma::gamma_lr;
        let gamma_exp = 0.4;
        let (a, b) = (1.0f64, 60.0f64);
        let cells = 200000;
        let h = (b - a) / cells as f64;
        let mut acc = Neumaier::new();
        for i in 0..=cells {
            let x = a + h * i as f64;
            let scale = if i == 0 || i == cells { 0.5 } else { 1.0 };
            acc.add(scale * w_gamma_density(gamma_exp, x).unwrap());
        }
        let numeric = acc.total() * h;
        let inv = 1.0 / gamma_exp;
        let exact = 0.5 * (gamma_lr(inv, b.powf(gamma_exp)) - gamma_lr(inv, a.powf(gamma_exp)));
        assert!((numeric - exact).abs() < 1e-6, "{numeric} vs {exact}");
    }

    #[test]
    fn laplace_weight_mass_is_exponential() {
        // gamma = 1 on [-X, X] has mass 1 - exp(-X) exactly.
        let x_max = 30.0f64;
        let cells = 60000;
        let h = 2.0 * x_max / cells as f64;
        let mut acc = Neumaier::new();
        for i in 0..=cells {
            let x = -x_max + h * i as f64;
            let scale = if i == 0 || i == cells { 0.5 } else { 1.0 };
            acc.add(scale * w_gamma_density(1.0, x).unwrap());
        }
        let numeric = acc.total() * h;
        let exact = 1.0 - (-x_max).exp();
        assert!((numeric - exact).abs() < 1e-5, "{numeric} vs {exact}");
    }

    #[test]
    fn pushforward_through_identity_recovers_base_weight() {
        let p = poly1(&[(1, 1.0)]);
        let config = PushforwardConfig::default();
        for &y in &[0.0, 0.5, -1.7, 3.0] {
            let w = pushforward_density_1d(&p, y, &config).unwrap();
            let expected = INV_SQRT_PI * (-y * y).exp();
            assert!((w - expected).abs() < 1e-9, "y = {y}: {w} vs {expected}");
        }
    }

    #[test]
    fn pushforward_through_cube_has_closed_form_ratio() {
        // For p(x) = x^3: w(y) = exp(-y^(2/3)) / (3 sqrt(pi) y^(2/3)), so
        // w(8)/w(1) = exp(-3)/4.
        let p = poly1(&[(3, 1.0)]);
        let config = PushforwardConfig::default();
        let w8 = pushforward_density_1d(&p, 8.0, &config).unwrap();
        let w1 = pushforward_density_1d(&p, 1.0, &config).unwrap();
        let ratio = w8 / w1;
        let expected = (-3.0f64).exp() / 4.0;
        assert!((ratio - expected).abs() < 1e-9, "ratio {ratio}");
    }

    #[test]
    fn pushforward_handles_missing_roots_and_critical_values() {
        let p = poly1(&[(2, 1.0)]);
        let config = PushforwardConfig::default();
        // No preimage below the minimum of x^2.
        assert_eq!(pushforward_density_1d(&p, -1.0, &config).unwrap(), 0.0);
        // At the critical value the derivative vanishes at the root.
        assert!(pushforward_density_1d(&p, 0.0, &config)
            .unwrap()
            .is_infinite());
        // Above it both branches contribute: w(y) = exp(-y)/(sqrt(pi) sqrt(y)).
        let w4 = pushforward_density_1d(&p, 4.0, &config).unwrap();
        let expected = INV_SQRT_PI * (-4.0f64).exp() / 2.0;
        assert!((w4 - expected).abs() < 1e-9);
        // Constants are rejected.
        assert!(pushforward_density_1d(&poly1(&[(0, 2.0)]), 0.0, &config).is_err());
    }

    #[test]
    fn pushforward_sums_over_all_branches() {
        // p(x) = x^3 - 2x at y = 0 has preimages -sqrt(2), 0, sqrt(2) with
        // |p'| = 4, 2, 4: density is (1/sqrt(pi)) (exp(-2)/2 + 1/2).
        let p = poly1(&[(3, 1.0), (1, -2.0)]);
        let config = PushforwardConfig::default();
        let w0 = pushforward_density_1d(&p, 0.0, &config).unwrap();
        let expected = INV_SQRT_PI * 0.5 * ((-2.0f64).exp() + 1.0);
        assert!((w0 - expected).abs() < 1e-9, "{w0} vs {expected}");

        // At y = 10 only one branch survives; its location comes from the
        // depressed-cubic closed form x = cbrt(5 + s) + cbrt(5 - s) with
        // s = sqrt(25 - 8/27).
        let s = (25.0 - 8.0 / 27.0f64).sqrt();
        let root = (5.0 + s).cbrt() + (5.0 - s).cbrt();
        let w10 = pushforward_density_1d(&p, 10.0, &config).unwrap();
        let expected10 = INV_SQRT_PI * (-root * root).exp() / (3.0 * root * root - 2.0);
        assert!((w10 - expected10).abs() < 1e-9, "{w10} vs {expected10}");
    }

    #[test]
    fn symlog_grid_keeps_endpoints_and_monotonicity() {
        let grid = GridSpec {
            start: -100.0,
            end: 100.0,
            count: 101,
            spacing: GridSpacing::SymLog,
        };
        let pts = grid.points().unwrap();
        assert_eq!(pts.len(), 101);
        assert_eq!(pts[0], -100.0);
        assert_eq!(pts[100], 100.0);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        // Symmetric range gives a symmetric grid.
        for i in 0..pts.len() {
            assert!((pts[i] + pts[pts.len() - 1 - i]).abs() < 1e-9);
        }
        // More than half the points land in [-10, 10]: tails are coarse.
        let inner = pts.iter().filter(|&&x| x.abs() <= 10.0).count();
        assert!(inner > 50, "inner {inner}");

        let uniform = GridSpec {
            start: 0.0,
            end: 1.0,
            count: 5,
            spacing: GridSpacing::Uniform,
        };
        assert_eq!(uniform.points().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(GridSpec { count: 1, ..uniform }.points().is_err());
    }

    #[test]
    fn lsl_certificate_for_gaussian_vs_heavier_tail() {
        // exp(-x^2) against exp(-|x|^0.5): the Gaussian tail dies much
        // faster, so no positive constant works on a wide grid.
        let w = UnivariateWeight::WGamma { gamma: 2.0 };
        let grid = GridSpec {
            start: -12.0,
            end: 12.0,
            count: 2001,
            spacing: GridSpacing::SymLog,
        };
        let cert = lsl_certificate(&w, 0.5, &grid, 1e-12).unwrap();
        assert!(!cert.holds, "constant {}", cert.constant);
        assert!(cert.worst_x.abs() > 11.0);

        // Against itself the constant is exactly 1.
        let self_cert = lsl_certificate(&w, 2.0, &grid, 1e-12).unwrap();
        assert!(self_cert.holds);
        assert!((self_cert.constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lsl_certificate_fails_on_one_sided_support() {
        // The push-forward through x^2 lives on [0, inf): any grid point on
        // the negative axis gives ratio zero.
        let w = UnivariateWeight::PushforwardGaussian {
            poly: poly1(&[(2, 1.0)]),
            config: PushforwardConfig::default(),
        };
        let grid = GridSpec {
            start: -4.0,
            end: 4.0,
            count: 41,
            spacing: GridSpacing::Uniform,
        };
        let cert = lsl_certificate(&w, 0.5, &grid, 1e-12).unwrap();
        assert!(!cert.holds);
        assert_eq!(cert.constant, 0.0);
        assert!(cert.worst_x < 0.0);
    }
}
