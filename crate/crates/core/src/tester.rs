//! Moment-matching tester for standard Gaussian data.
//!
//! The tester compares every empirical moment of degree at most `k` against
//! the corresponding moment of `N(0, I_n)` and accepts exactly when the worst
//! absolute deviation is at most the tolerance `eta`. It never looks at
//! labels, only at the points, so any downstream guarantee conditioned on
//! acceptance holds for arbitrary label noise.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::algebra::{enumerate_multi_indices, MultiIndex};
use crate::distributions::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::sums::Neumaier;

/// Largest sample budget representable without an overflow flag.
const BUDGET_CAP: f64 = 9.223372036854775e18; // 2^63

/// Guard on `support size * moment count` for exact distribution moments.
const SLACK_CELL_CAP: u128 = 100_000_000;

/// Moment of `N(0,1)` for `x^a`: zero for odd `a`, `(a-1)!!` for even `a`.
///
/// Grows roughly like `(a/e)^(a/2)`, so exponents beyond a few hundred
/// overflow `f64`; the tester only ever needs `a <= k`.
pub fn gaussian_univariate_moment(exponent: u16) -> f64 {
    if exponent % 2 == 1 {
        return 0.0;
    }
    let mut product = 1.0;
    let mut factor = exponent as i64 - 1;
    while factor > 1 {
        product *= factor as f64;
        factor -= 2;
    }
    product
}

/// Moment of `N(0, I_n)` for the monomial `x^alpha`: the coordinates are
/// independent, so the moment factors into univariate moments.
pub fn gaussian_moment(alpha: &MultiIndex) -> f64 {
    let mut product = 1.0;
    for &e in alpha.exponents() {
        if e % 2 == 1 {
            return 0.0;
        }
        product *= gaussian_univariate_moment(e);
    }
    product
}

/// All moments of degree at most `degree` for a point set, keyed by
/// multi-index in graded lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    dimension: usize,
    degree: u32,
    entries: BTreeMap<MultiIndex, f64>,
}

impl MomentTable {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        self.entries.get(alpha).copied()
    }

    /// Entries in graded lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.entries.iter().map(|(a, &v)| (a, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn check_samples(samples: &[Vec<f64>]) -> Result<usize> {
    let first = samples
        .first()
        .ok_or(Error::EmptyInput("sample set"))?;
    let dimension = first.len();
    if dimension == 0 {
        return Err(Error::EmptyInput("sample coordinates"));
    }
    for row in samples {
        if row.len() != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("sample contains a non-finite coordinate".into()));
        }
    }
    Ok(dimension)
}

/// Empirical moments `mean of x^alpha` over all `|alpha| <= degree`.
///
/// Each moment is accumulated with compensated summation in the given sample
/// order, so results are reproducible and permuting the samples moves any
/// moment by at most a few ulps.
pub fn empirical_moments(samples: &[Vec<f64>], degree: u32) -> Result<MomentTable> {
    let dimension = check_samples(samples)?;
    let indices = enumerate_multi_indices(dimension, degree)?;
    let compiled: Vec<Vec<(usize, u16)>> = indices
        .iter()
        .map(|alpha| alpha.iter_nonzero().collect())
        .collect();

    let mut acc = vec![Neumaier::new(); indices.len()];
    let stride = degree as usize + 1;
    let mut powers = vec![1.0f64; dimension * stride];
    for row in samples {
        // Power table: powers[i * stride + e] = x_i^e.
        for (i, &x) in row.iter().enumerate() {
            let base = i * stride;
            powers[base] = 1.0;
            for e in 1..stride {
                powers[base + e] = powers[base + e - 1] * x;
            }
        }
        for (t, factors) in compiled.iter().enumerate() {
            let mut monomial = 1.0;
            for &(i, e) in factors {
                monomial *= powers[i * stride + e as usize];
            }
            acc[t].add(monomial);
        }
    }

    let m = samples.len() as f64;
    let entries = indices
        .into_iter()
        .zip(acc)
        .map(|(alpha, sum)| (alpha, sum.total() / m))
        .collect();
    Ok(MomentTable {
        dimension,
        degree,
        entries,
    })
}

/// Outcome of a tester run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TesterVerdict {
    pub accepted: bool,
    /// Multi-index attaining the worst deviation; ties go to the first such
    /// index in graded lexicographic order.
    pub worst_alpha: MultiIndex,
    pub worst_dev: f64,
    pub k: u32,
    pub eta: f64,
    /// Number of samples examined.
    pub m: usize,
}

/// Accept iff every empirical moment of degree at most `k` is within `eta`
/// of the corresponding `N(0, I_n)` moment. The comparison is inclusive: a
/// worst deviation exactly equal to `eta` still accepts.
pub fn tamm_accept(samples: &[Vec<f64>], k: u32, eta: f64) -> Result<TesterVerdict> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid("eta", "must be a positive finite tolerance"));
    }
    let table = empirical_moments(samples, k)?;
    let mut worst_alpha = MultiIndex::zeros(table.dimension());
    let mut worst_dev = 0.0f64;
    for (alpha, value) in table.iter() {
        let dev = (value - gaussian_moment(alpha)).abs();
        if dev > worst_dev {
            worst_dev = dev;
            worst_alpha = alpha.clone();
        }
    }
    Ok(TesterVerdict {
        accepted: worst_dev <= eta,
        worst_alpha,
        worst_dev,
        k,
        eta,
        m: samples.len(),
    })
}

/// Worst absolute deviation of a discrete distribution's exact moments from
/// the Gaussian moments, over all `|alpha| <= k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlackReport {
    pub slack: f64,
    pub worst_alpha: MultiIndex,
}

/// Exact moment slack `max |E_D x^alpha - E_N x^alpha|` for `|alpha| <= k`.
pub fn moment_slack(dist: &DiscreteDistribution, k: u32) -> Result<SlackReport> {
    let n = dist.dimension();
    let indices = enumerate_multi_indices(n, k)?;
    let cells = indices.len() as u128 * dist.support_size() as u128;
    if cells > SLACK_CELL_CAP {
        return Err(Error::SizeExceeded {
            what: "moment slack evaluation cells",
            requested: cells,
            cap: SLACK_CELL_CAP,
        });
    }

    let mut worst_alpha = MultiIndex::zeros(n);
    let mut slack = 0.0f64;
    for alpha in &indices {
        let factors: Vec<(usize, u16)> = alpha.iter_nonzero().collect();
        let mut acc = Neumaier::new();
        for (point, &w) in dist.points().iter().zip(dist.weights()) {
            let mut monomial = 1.0;
            for &(i, e) in &factors {
                monomial *= point[i].powi(e as i32);
            }
            acc.add(w * monomial);
        }
        let dev = (acc.total() - gaussian_moment(alpha)).abs();
        if dev > slack {
            slack = dev;
            worst_alpha = alpha.clone();
        }
    }
    Ok(SlackReport { slack, worst_alpha })
}

/// Sample budget `ceil(c * (2kn)^k / eta^2)`, with an overflow flag when the
/// count exceeds `2^63`. `log10_samples` is always finite and usable even
/// when the integer value saturates.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SampleBudget {
    pub samples: u64,
    pub overflow: bool,
    pub log10_samples: f64,
}

/// Round up, but forgive floating-point noise: values within a relative
/// 1e-9 of an integer round to that integer instead of the next one.
fn ceil_stable(value: f64) -> f64 {
    let nearest = value.round();
    if (value - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest
    } else {
        value.ceil()
    }
}

pub fn required_samples(n: usize, k: u32, eta: f64, c: f64) -> Result<SampleBudget> {
    if n == 0 {
        return Err(Error::invalid("n", "dimension must be at least 1"));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid("eta", "must be a positive finite tolerance"));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::invalid("c", "multiplier must be positive and finite"));
    }
    let base = 2.0 * k as f64 * n as f64;
    let log10 = if k == 0 {
        c.log10() - 2.0 * eta.log10()
    } else {
        c.log10() + k as f64 * base.log10() - 2.0 * eta.log10()
    };
    if log10 > BUDGET_CAP.log10() {
        return Ok(SampleBudget {
            samples: u64::MAX,
            overflow: true,
            log10_samples: log10,
        });
    }
    let raw = c * base.powi(k as i32) / (eta * eta);
    let rounded = ceil_stable(raw).max(1.0);
    if rounded > BUDGET_CAP {
        return Ok(SampleBudget {
            samples: u64::MAX,
            overflow: true,
            log10_samples: log10,
        });
    }
    Ok(SampleBudget {
        samples: rounded as u64,
        overflow: false,
        log10_samples: log10,
    })
}

/// Parameters the agnostic-learning guarantee asks for, reported both as
/// integers (when they fit) and in log10 (always).
///
/// `k = ceil(c1 * eps^(-4 d 7^d))` and `eta = (n k)^(-c2 k)` grow so fast
/// that for most inputs only the logarithms are representable; `eta` is
/// reported as `0.0` with `underflow` set when it drops below `f64` range.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TheoryParameters {
    pub d: u32,
    pub epsilon: f64,
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
    /// Tester degree; `None` when it exceeds `2^63`.
    pub k: Option<u64>,
    pub log10_k: f64,
    /// Tester tolerance; `0.0` when it underflows `f64`.
    pub eta: f64,
    pub eta_underflow: bool,
    pub log10_eta: f64,
    /// Sample budget at multiplier 1; `None` when it exceeds `2^63`.
    pub m: Option<u64>,
    pub log10_m: f64,
}

pub fn theory_parameters(d: u32, epsilon: f64, n: usize, c1: f64, c2: f64) -> Result<TheoryParameters> {
    if d == 0 {
        return Err(Error::invalid("d", "degree must be at least 1"));
    }
    if n == 0 {
        return Err(Error::invalid("n", "dimension must be at least 1"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid("epsilon", "must lie in (0, 1]"));
    }
    if !(c1 > 0.0) || !c1.is_finite() || !(c2 > 0.0) || !c2.is_finite() {
        return Err(Error::invalid("c1/c2", "constants must be positive and finite"));
    }

    let exponent = 4.0 * d as f64 * 7f64.powi(d as i32);
    let log10_k_raw = c1.log10() - exponent * epsilon.log10();
    let k_raw = c1 * epsilon.powf(-exponent);
    let (k, k_f, log10_k) = if k_raw.is_finite() && k_raw <= BUDGET_CAP {
        let k_int = ceil_stable(k_raw).max(1.0);
        (Some(k_int as u64), k_int, k_int.log10())
    } else if k_raw.is_finite() {
        (None, k_raw, log10_k_raw)
    } else {
        (None, f64::INFINITY, log10_k_raw)
    };

    // eta = (n k)^(-c2 k), evaluated in logs; k beyond f64 range forces
    // log10_eta to -inf, which is the honest answer.
    let log10_eta = -c2 * k_f * ((n as f64).log10() + log10_k);
    let eta = 10f64.powf(log10_eta);
    let eta_underflow = eta == 0.0;

    // m = (2 k n)^k / eta^2 at multiplier 1, also in logs first.
    let log10_m = k_f * ((2.0 * n as f64).log10() + log10_k) - 2.0 * log10_eta;
    let m = if let Some(k_int) = k {
        if !eta_underflow && k_int <= u32::MAX as u64 && log10_m <= BUDGET_CAP.log10() {
            let budget = required_samples(n, k_int as u32, eta, 1.0)?;
            if budget.overflow {
                None
            } else {
                Some(budget.samples)
            }
        } else {
            None
        }
    } else {
        None
    };

    Ok(TheoryParameters {
        d,
        epsilon,
        n,
        c1,
        c2,
        k,
        log10_k,
        eta,
        eta_underflow,
        log10_eta,
        m,
        log10_m,
    })
}
