//! Sparse multivariate polynomials over `f64` keyed by exponent multi-indices.
//!
//! Multi-indices are ordered graded-lexicographically: lower total degree
//! first, and within one degree the index whose first differing exponent is
//! larger comes first. `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...` is the
//! order for two variables. Every iteration, enumeration, and serialization
//! in this crate follows that order, which is what makes output files and
//! tie-breaking deterministic.
//!
//! Coefficients with absolute value below [`COEFF_PRUNE_EPS`] are dropped
//! after every arithmetic operation so that noise does not accumulate into
//! phantom terms.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Coefficients smaller than this in absolute value are treated as zero.
pub const COEFF_PRUNE_EPS: f64 = 1e-14;

/// Cap on `output terms x dimension` for composition, to bound memory.
const COMPOSE_CELL_CAP: u128 = 100_000_000;

/// Exponent vector of one monomial. Immutable once built.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u16>);

impl MultiIndex {
    pub fn new(exponents: Vec<u16>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zeros(dimension: usize) -> Self {
        MultiIndex(vec![0; dimension])
    }

    /// The index of the monomial `x_i` (zero-based `i`).
    pub fn unit(dimension: usize, i: usize) -> Self {
        let mut e = vec![0; dimension];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    /// Total degree, the sum of all exponents.
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn max_exponent(&self) -> u16 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn exponents(&self) -> &[u16] {
        &self.0
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (usize, u16)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| (i, e))
    }

    pub fn is_multilinear(&self) -> bool {
        self.0.iter().all(|&e| e <= 1)
    }

    fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.0.len(), other.0.len());
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a + b)
                .collect(),
        )
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {
                // Same degree: the index with the larger exponent at the
                // first differing position sorts first.
                for (a, b) in self.0.iter().zip(&other.0) {
                    match b.cmp(a) {
                        Ordering::Equal => continue,
                        unequal => return unequal,
                    }
                }
                Ordering::Equal
            }
            unequal => unequal,
        }
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Ok(MultiIndex(Vec::<u16>::deserialize(deserializer)?))
    }
}

/// Binomial coefficient in u128 with overflow detection.
fn binomial_u128(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)?;
        acc /= i + 1;
    }
    Some(acc)
}

/// Number of monomials in `n` variables of total degree at most `k`,
/// i.e. `C(n + k, k)`. Errors when the count overflows the platform integer.
pub fn multi_index_count(n: usize, k: u32) -> Result<usize> {
    let count = binomial_u128(n as u128 + k as u128, k as u128).ok_or(Error::SizeExceeded {
        what: "multi-index count",
        requested: u128::MAX,
        cap: usize::MAX as u128,
    })?;
    if count > usize::MAX as u128 {
        return Err(Error::SizeExceeded {
            what: "multi-index count",
            requested: count,
            cap: usize::MAX as u128,
        });
    }
    Ok(count as usize)
}

/// All multi-indices in `n` variables with total degree at most `k`, in
/// graded-lexicographic order.
pub fn enumerate_multi_indices(n: usize, k: u32) -> Result<Vec<MultiIndex>> {
    if n == 0 {
        return Err(Error::invalid("n", "dimension must be at least 1"));
    }
    if k > u16::MAX as u32 {
        return Err(Error::invalid("k", "degree exceeds exponent storage"));
    }
    let count = multi_index_count(n, k)?;
    let mut out = Vec::with_capacity(count);
    let mut scratch = vec![0u16; n];
    for degree in 0..=k {
        fill_degree(&mut out, &mut scratch, 0, degree as u16);
    }
    debug_assert_eq!(out.len(), count);
    Ok(out)
}

fn fill_degree(out: &mut Vec<MultiIndex>, scratch: &mut Vec<u16>, position: usize, remaining: u16) {
    if position + 1 == scratch.len() {
        scratch[position] = remaining;
        out.push(MultiIndex(scratch.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        scratch[position] = e;
        fill_degree(out, scratch, position + 1, remaining - e);
    }
    scratch[position] = 0;
}

/// L1 and L2 norms of a coefficient vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoeffNorms {
    pub l1: f64,
    pub l2: f64,
}

/// Sparse polynomial in `dimension` variables.
#[derive(Clone, PartialEq)]
pub struct Polynomial {
    dimension: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(dimension: usize) -> Self {
        Polynomial {
            dimension,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dimension: usize, c: f64) -> Self {
        let mut p = Polynomial::zero(dimension);
        p.add_term(MultiIndex::zeros(dimension), c);
        p
    }

    /// The monomial `x_i` (zero-based `i`).
    pub fn variable(dimension: usize, i: usize) -> Self {
        assert!(i < dimension, "variable index out of range");
        let mut p = Polynomial::zero(dimension);
        p.add_term(MultiIndex::unit(dimension, i), 1.0);
        p
    }

    /// Builds a polynomial from `(multi-index, coefficient)` pairs.
    /// Coinciding indices are accumulated, near-zero results pruned.
    pub fn from_terms<I>(dimension: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut p = Polynomial::zero(dimension);
        for (alpha, c) in terms {
            if alpha.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: alpha.dimension(),
                });
            }
            if !c.is_finite() {
                return Err(Error::Numerical("non-finite coefficient".into()));
            }
            p.add_term(alpha, c);
        }
        p.prune();
        Ok(p)
    }

    fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        let entry = self.terms.entry(alpha).or_insert(0.0);
        *entry += c;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.abs() >= COEFF_PRUNE_EPS);
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|a| a.degree()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Terms in graded-lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn coeff_norms(&self) -> CoeffNorms {
        let l1 = self.terms.values().map(|c| c.abs()).sum();
        let l2 = self
            .terms
            .values()
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt();
        CoeffNorms { l1, l2 }
    }

    /// Scales coefficients so the L2 norm is exactly 1.
    pub fn normalized(&self) -> Result<Polynomial> {
        let l2 = self.coeff_norms().l2;
        if l2 == 0.0 {
            return Err(Error::ZeroPolynomial);
        }
        Ok(self.scaled(1.0 / l2))
    }

    pub fn scaled(&self, factor: f64) -> Polynomial {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= factor;
        }
        out.prune();
        out
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.dimension != other.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: other.dimension,
            });
        }
        let mut out = self.clone();
        for (alpha, &c) in &other.terms {
            out.add_term(alpha.clone(), c);
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.add(&other.scaled(-1.0))
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.dimension != other.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: other.dimension,
            });
        }
        let mut out = Polynomial::zero(self.dimension);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                out.add_term(a.add(b), ca * cb);
            }
        }
        out.prune();
        Ok(out)
    }

    /// Evaluates the polynomial at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        let mut total = 0.0;
        for (alpha, &c) in &self.terms {
            let mut term = c;
            for (i, e) in alpha.iter_nonzero() {
                term *= x[i].powi(e as i32);
            }
            total += term;
        }
        Ok(total)
    }

    /// Flattened term list for evaluation-heavy loops. Skips the per-term
    /// zero-exponent scan that `eval` pays on wide polynomials.
    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            dimension: self.dimension,
            terms: self
                .terms
                .iter()
                .map(|(a, &c)| (a.iter_nonzero().collect(), c))
                .collect(),
        }
    }

    /// Substitutes `x = A y`: returns `q(y) = p(A y)` where `A` has one row
    /// per input variable of `p` and all rows share the output dimension.
    ///
    /// Each power of a row is expanded with exact multinomial coefficients
    /// rather than repeated multiplication.
    pub fn compose_linear(&self, a: &[Vec<f64>]) -> Result<Polynomial> {
        if a.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: a.len(),
            });
        }
        let out_dim = a.first().map(|r| r.len()).unwrap_or(0);
        if out_dim == 0 {
            return Err(Error::invalid("a", "output dimension must be at least 1"));
        }
        for row in a {
            if row.len() != out_dim {
                return Err(Error::DimensionMismatch {
                    expected: out_dim,
                    got: row.len(),
                });
            }
        }
        let degree = self.degree();
        let bound = binomial_u128(out_dim as u128 + degree as u128, degree as u128)
            .unwrap_or(u128::MAX)
            .saturating_mul(out_dim as u128);
        if bound > COMPOSE_CELL_CAP {
            return Err(Error::SizeExceeded {
                what: "composition output cells",
                requested: bound,
                cap: COMPOSE_CELL_CAP,
            });
        }

        let mut out = Polynomial::zero(out_dim);
        for (alpha, &c) in &self.terms {
            // Product over variables of (row_i . y)^{alpha_i}.
            let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
            acc.insert(MultiIndex::zeros(out_dim), c);
            for (i, e) in alpha.iter_nonzero() {
                let factor = linear_form_power(&a[i], e);
                if factor.is_empty() {
                    acc.clear();
                    break;
                }
                let mut next: BTreeMap<MultiIndex, f64> = BTreeMap::new();
                for (ka, &va) in &acc {
                    for (kb, &vb) in &factor {
                        *next.entry(ka.add(kb)).or_insert(0.0) += va * vb;
                    }
                }
                acc = next;
            }
            for (key, val) in acc {
                out.add_term(key, val);
            }
        }
        out.prune();
        Ok(out)
    }

    /// Univariate only: returns `p(a y + b)`.
    pub fn compose_affine(&self, a: f64, b: f64) -> Result<Polynomial> {
        if self.dimension != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.dimension,
            });
        }
        // Horner: fold coefficients from the top degree down.
        let degree = self.degree() as usize;
        let mut coeffs = vec![0.0; degree + 1];
        for (alpha, c) in self.terms() {
            coeffs[alpha.exponents()[0] as usize] = c;
        }
        let linear = Polynomial::from_terms(
            1,
            [
                (MultiIndex::new(vec![1]), a),
                (MultiIndex::new(vec![0]), b),
            ],
        )?;
        let mut out = Polynomial::constant(1, coeffs[degree]);
        for d in (0..degree).rev() {
            out = out.mul(&linear)?;
            out.add_term(MultiIndex::zeros(1), coeffs[d]);
            out.prune();
        }
        Ok(out)
    }

    /// Rewrites every term into a multilinear one: a term whose largest
    /// exponent is at least three is dropped, and in a term with largest
    /// exponent two every squared variable is replaced by the constant 1
    /// (exponents above one flatten to zero, exponents equal to one stay).
    /// Coinciding rewritten terms accumulate.
    pub fn multilinearized(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.dimension);
        for (alpha, &c) in &self.terms {
            match alpha.max_exponent() {
                0 | 1 => out.add_term(alpha.clone(), c),
                2 => {
                    let reduced = MultiIndex(
                        alpha
                            .exponents()
                            .iter()
                            .map(|&e| if e == 1 { 1 } else { 0 })
                            .collect(),
                    );
                    out.add_term(reduced, c);
                }
                _ => {}
            }
        }
        out.prune();
        out
    }

    pub fn is_multilinear(&self) -> bool {
        self.terms.keys().all(|a| a.is_multilinear())
    }

    /// Partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Result<Polynomial> {
        if var >= self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: var,
            });
        }
        let mut out = Polynomial::zero(self.dimension);
        for (alpha, &c) in &self.terms {
            let e = alpha.exponents()[var];
            if e == 0 {
                continue;
            }
            let mut exps = alpha.exponents().to_vec();
            exps[var] = e - 1;
            out.add_term(MultiIndex::new(exps), c * e as f64);
        }
        out.prune();
        Ok(out)
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let rendered: Vec<String> = self
            .terms
            .iter()
            .map(|(a, c)| {
                let vars: Vec<String> = a
                    .iter_nonzero()
                    .map(|(i, e)| {
                        if e == 1 {
                            format!("x{}", i + 1)
                        } else {
                            format!("x{}^{}", i + 1, e)
                        }
                    })
                    .collect();
                if vars.is_empty() {
                    format!("{c}")
                } else {
                    format!("{c}*{}", vars.join("*"))
                }
            })
            .collect();
        write!(f, "{}", rendered.join(" + "))
    }
}

/// Expansion of `(row . y)^e` by multinomial coefficients over the nonzero
/// entries of `row`.
fn linear_form_power(row: &[f64], e: u16) -> BTreeMap<MultiIndex, f64> {
    let mut out = BTreeMap::new();
    let nonzero: Vec<(usize, f64)> = row
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, &v)| (i, v))
        .collect();
    if nonzero.is_empty() {
        return out; // (0)^e = 0 for e >= 1
    }
    let mut alpha = vec![0u16; row.len()];
    distribute(&nonzero, 0, e, 1.0, &mut alpha, &mut out);
    out
}

fn distribute(
    nonzero: &[(usize, f64)],
    position: usize,
    remaining: u16,
    coeff: f64,
    alpha: &mut Vec<u16>,
    out: &mut BTreeMap<MultiIndex, f64>,
) {
    let (var, value) = nonzero[position];
    if position + 1 == nonzero.len() {
        alpha[var] = remaining;
        let c = coeff * value.powi(remaining as i32);
        *out.entry(MultiIndex(alpha.clone())).or_insert(0.0) += c;
        alpha[var] = 0;
        return;
    }
    for e in 0..=remaining {
        // Running multinomial: choose e of the remaining slots for this
        // variable.
        let choose = binomial_f64(remaining as u64, e as u64);
        alpha[var] = e;
        distribute(
            nonzero,
            position + 1,
            remaining - e,
            coeff * choose * value.powi(e as i32),
            alpha,
            out,
        );
        alpha[var] = 0;
    }
}

fn binomial_f64(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Term list with explicit (variable, exponent) pairs, for tight eval loops.
pub struct CompiledPoly {
    dimension: usize,
    terms: Vec<(Vec<(usize, u16)>, f64)>,
}

impl CompiledPoly {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Evaluation without a dimension check; the caller guarantees
    /// `x.len() == self.dimension()`.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        let mut total = 0.0;
        for (vars, c) in &self.terms {
            let mut term = *c;
            for &(i, e) in vars {
                term *= x[i].powi(e as i32);
            }
            total += term;
        }
        total
    }
}

// Serialized shape: {"n": ..., "terms": [{"alpha": [...], "c": ...}, ...]}
// with terms in graded-lexicographic order.
#[derive(Serialize, Deserialize)]
struct PolyRepr {
    n: usize,
    terms: Vec<TermRepr>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    alpha: MultiIndex,
    c: f64,
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = PolyRepr {
            n: self.dimension,
            terms: self
                .terms
                .iter()
                .map(|(a, &c)| TermRepr {
                    alpha: a.clone(),
                    c,
                })
                .collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(deserializer)?;
        Polynomial::from_terms(repr.n, repr.terms.into_iter().map(|t| (t.alpha, t.c)))
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}
