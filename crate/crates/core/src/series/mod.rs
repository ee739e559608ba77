//! Truncated transseries in the monomials x^a l^b l2^c.
//!
//! Here l = -1/log x, u = 1/l = -log x and l2 = l(l). Coefficients and the
//! x-exponents are exact rationals, the l and l2 exponents are integers.

mod antiderive;
mod blocks;
mod poly;

use std::collections::BTreeMap;
use std::fmt;

use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use antiderive::{
    antiderive_block, antiderive_monomial, antiderive_x_ell, laurent_expand, laurent_coeffs,
    taylor_increment, taylor_increment_blocks, taylor_increment_terms, taylor_terms_needed, BlockKind, IntegralBlock,
};
pub use blocks::BlockSeries;
pub use poly::{PolyU, RationalU};
pub(crate) use poly::{lcm_denoms, ratio_to_f64};

pub type Coeff = BigRational;
pub type XExp = Rational64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("no leading term: the series is zero")]
    NoLeadingTerm,
    #[error("cannot invert: {0}")]
    NotInvertible(String),
    #[error("expansion did not terminate within {0} terms")]
    NonTerminating(usize),
    #[error("expansion needs an l-cutoff (M) but none was given")]
    NeedsEllCutoff,
    #[error("block at x^{0} is not a finite Laurent polynomial in l")]
    NotABlockSeries(XExp),
    #[error("zero rational function has no Laurent expansion")]
    ZeroLaurent,
    #[error("displacement has order {0}, need x-order > 1")]
    NotParabolic(String),
}

/// Exponent (g0, g1, g2) of x^g0 l^g1 l2^g2. The derived order is
/// lexicographic, which is the monomial order: smaller means larger monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExponentTriple {
    pub g0: XExp,
    pub g1: i64,
    pub g2: i64,
}

impl ExponentTriple {
    pub fn new(g0: XExp, g1: i64, g2: i64) -> Self {
        ExponentTriple { g0, g1, g2 }
    }

    pub fn x(g0: i64) -> Self {
        Self::new(XExp::from_integer(g0), 0, 0)
    }

    pub fn zero() -> Self {
        Self::x(0)
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.g0 + o.g0, self.g1 + o.g1, self.g2 + o.g2)
    }

    pub fn neg(self) -> Self {
        Self::new(-self.g0, -self.g1, -self.g2)
    }

    pub fn is_zero(&self) -> bool {
        self.g0.is_zero() && self.g1 == 0 && self.g2 == 0
    }
}

impl fmt::Display for ExponentTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.g0, self.g1, self.g2)
    }
}

/// Finite, order-sorted sum of monomials plus truncation metadata.
///
/// `x_cutoff = Some(n)`: every coefficient with g0 <= n is exact and nothing
/// beyond n is stored. `ell_cutoff = Some(m)`: each block keeps at most m
/// l-exponents past its leading one. Blocks that were cut carry an exclusive
/// bound in `ell_caps`; coefficients below it are exact.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Transseries {
    terms: BTreeMap<ExponentTriple, Coeff>,
    x_cutoff: Option<XExp>,
    ell_cutoff: Option<u32>,
    ell_caps: BTreeMap<XExp, i64>,
}

fn min_opt<T: Ord + Copy>(a: Option<T>, b: Option<T>) -> Option<T> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, None) => a,
        (None, b) => b,
    }
}

impl Transseries {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        Self::monomial(c, ExponentTriple::zero())
    }

    pub fn monomial(c: Coeff, e: ExponentTriple) -> Self {
        let mut t = Self::zero();
        if !c.is_zero() {
            t.terms.insert(e, c);
        }
        t
    }

    pub fn x() -> Self {
        Self::monomial(Coeff::one(), ExponentTriple::x(1))
    }

    pub fn ell() -> Self {
        Self::monomial(Coeff::one(), ExponentTriple::new(XExp::zero(), 1, 0))
    }

    pub fn ell2() -> Self {
        Self::monomial(Coeff::one(), ExponentTriple::new(XExp::zero(), 0, 1))
    }

    /// u = 1/l = -log x
    pub fn u() -> Self {
        Self::monomial(Coeff::one(), ExponentTriple::new(XExp::zero(), -1, 0))
    }

    pub fn from_terms(it: impl IntoIterator<Item = (ExponentTriple, Coeff)>) -> Self {
        let mut t = Self::zero();
        for (e, c) in it {
            t.add_term(e, c);
        }
        t
    }

    fn add_term(&mut self, e: ExponentTriple, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e).or_insert_with(Coeff::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn with_x_cutoff(mut self, n: Option<XExp>) -> Self {
        self.x_cutoff = min_opt(self.x_cutoff, n);
        self.apply_cutoffs();
        self
    }

    pub fn with_ell_cutoff(mut self, m: Option<u32>) -> Self {
        self.ell_cutoff = min_opt(self.ell_cutoff, m);
        self.apply_cutoffs();
        self
    }

    /// Mark the series as known only through x^n without discarding the
    /// meaning of the existing terms.
    pub fn with_cutoffs(self, n: Option<XExp>, m: Option<u32>) -> Self {
        self.with_x_cutoff(n).with_ell_cutoff(m)
    }

    pub fn terms(&self) -> &BTreeMap<ExponentTriple, Coeff> {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ExponentTriple, &Coeff)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &ExponentTriple) -> Coeff {
        self.terms.get(e).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn x_cutoff(&self) -> Option<XExp> {
        self.x_cutoff
    }

    pub fn ell_cutoff(&self) -> Option<u32> {
        self.ell_cutoff
    }

    /// Exclusive bound on trusted l-exponents in the block x^g0, if cut.
    pub fn ell_cap(&self, g0: XExp) -> Option<i64> {
        self.ell_caps.get(&g0).copied()
    }

    pub fn ell_caps(&self) -> &BTreeMap<XExp, i64> {
        &self.ell_caps
    }

    /// True when no truncation has happened in either direction.
    pub fn is_exact(&self) -> bool {
        self.x_cutoff.is_none() && self.ell_caps.is_empty()
    }

    pub fn leading_term(&self) -> Result<(ExponentTriple, Coeff), SeriesError> {
        self.terms
            .iter()
            .next()
            .map(|(e, c)| (*e, c.clone()))
            .ok_or(SeriesError::NoLeadingTerm)
    }

    pub fn order(&self) -> Option<ExponentTriple> {
        self.terms.keys().next().copied()
    }

    pub fn x_order(&self) -> Option<XExp> {
        self.order().map(|e| e.g0)
    }

    /// Distinct x-exponents, increasing.
    pub fn block_exponents(&self) -> Vec<XExp> {
        let mut v: Vec<XExp> = self.terms.keys().map(|e| e.g0).collect();
        v.dedup();
        v
    }

    /// The terms sharing x^g0.
    pub fn block(&self, g0: XExp) -> Vec<(ExponentTriple, Coeff)> {
        let lo = ExponentTriple::new(g0, i64::MIN, i64::MIN);
        let hi = ExponentTriple::new(g0, i64::MAX, i64::MAX);
        self.terms.range(lo..=hi).map(|(e, c)| (*e, c.clone())).collect()
    }

    pub fn has_ell2(&self) -> bool {
        self.terms.keys().any(|e| e.g2 != 0)
    }

    fn block_lead(&self, g0: XExp) -> Option<i64> {
        let lo = ExponentTriple::new(g0, i64::MIN, i64::MIN);
        let hi = ExponentTriple::new(g0, i64::MAX, i64::MAX);
        self.terms.range(lo..=hi).next().map(|(e, _)| e.g1)
    }

    /// Declare the block x^g0 trusted only below l^cap.
    /// Restrict to what `target` can hold: its x cutoff and its l caps.
    pub(crate) fn clamp_to(mut self, target: &Self) -> Self {
        self.x_cutoff = min_opt(self.x_cutoff, target.x_cutoff);
        for (g0, cap) in &target.ell_caps {
            let slot = self.ell_caps.entry(*g0).or_insert(*cap);
            *slot = (*slot).min(*cap);
        }
        self.apply_cutoffs();
        self
    }

    pub(crate) fn cap_block(&mut self, g0: XExp, cap: i64) {
        let slot = self.ell_caps.entry(g0).or_insert(cap);
        *slot = (*slot).min(cap);
        self.apply_cutoffs();
    }

    fn apply_cutoffs(&mut self) {
        if let Some(n) = self.x_cutoff {
            self.terms.retain(|e, _| e.g0 <= n);
            self.ell_caps.retain(|g0, _| *g0 <= n);
        }
        if let Some(m) = self.ell_cutoff {
            for g0 in self.block_exponents() {
                let lead = self.block_lead(g0).unwrap();
                let cap = lead + m as i64;
                let slot = self.ell_caps.entry(g0).or_insert(cap);
                *slot = (*slot).min(cap);
            }
        }
        if !self.ell_caps.is_empty() {
            let caps = &self.ell_caps;
            self.terms.retain(|e, _| caps.get(&e.g0).is_none_or(|c| e.g1 < *c));
        }
    }

    pub fn neg(&self) -> Self {
        let mut t = self.clone();
        for c in t.terms.values_mut() {
            *c = -c.clone();
        }
        t
    }

    pub fn scale(&self, k: &Coeff) -> Self {
        if k.is_zero() {
            let mut z = self.clone();
            z.terms.clear();
            return z;
        }
        let mut t = self.clone();
        for c in t.terms.values_mut() {
            *c *= k;
        }
        t
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut t = Transseries {
            terms: self.terms.clone(),
            x_cutoff: min_opt(self.x_cutoff, o.x_cutoff),
            ell_cutoff: min_opt(self.ell_cutoff, o.ell_cutoff),
            ell_caps: self.ell_caps.clone(),
        };
        for (g0, cap) in &o.ell_caps {
            let slot = t.ell_caps.entry(*g0).or_insert(*cap);
            *slot = (*slot).min(*cap);
        }
        for (e, c) in &o.terms {
            t.add_term(*e, c.clone());
        }
        t.apply_cutoffs();
        t
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    /// Multiply by c * x^e.g0 l^e.g1 l2^e.g2.
    pub fn mul_monomial(&self, c: &Coeff, e: ExponentTriple) -> Self {
        let mut t = Transseries {
            terms: BTreeMap::new(),
            x_cutoff: self.x_cutoff.map(|n| n + e.g0),
            ell_cutoff: self.ell_cutoff,
            ell_caps: self.ell_caps.iter().map(|(g0, cap)| (*g0 + e.g0, cap + e.g1)).collect(),
        };
        if !c.is_zero() {
            for (k, v) in &self.terms {
                t.terms.insert(k.add(e), v * c);
            }
        }
        t
    }

    pub fn mul(&self, o: &Self) -> Self {
        // Reliability in x: unknown tails of one factor meet the lowest order
        // of the other.
        let reach = |cut: Option<XExp>, other: &Self| -> Option<XExp> {
            let c = cut?;
            match other.x_order() {
                Some(o) => Some(c + o),
                None => other.x_cutoff.map(|d| c + d),
            }
        };
        let x_cut = min_opt(reach(self.x_cutoff, o), reach(o.x_cutoff, self));
        let mut caps: BTreeMap<XExp, i64> = BTreeMap::new();
        if !self.ell_caps.is_empty() || !o.ell_caps.is_empty() {
            let keys = |s: &Self| {
                let mut k: Vec<XExp> = s.block_exponents();
                k.extend(s.ell_caps.keys().copied());
                k.sort();
                k.dedup();
                k
            };
            let lead_or_cap = |s: &Self, g0: XExp| s.block_lead(g0).or(s.ell_cap(g0));
            for a in keys(self) {
                for b in keys(o) {
                    let (la, lb) = (lead_or_cap(self, a), lead_or_cap(o, b));
                    let c1 = self.ell_cap(a).zip(lb).map(|(ca, lb)| ca + lb);
                    let c2 = o.ell_cap(b).zip(la).map(|(cb, la)| cb + la);
                    if let Some(c) = min_opt(c1, c2) {
                        let slot = caps.entry(a + b).or_insert(c);
                        *slot = (*slot).min(c);
                    }
                }
            }
        }
        let mut t = Transseries {
            terms: BTreeMap::new(),
            x_cutoff: x_cut,
            ell_cutoff: min_opt(self.ell_cutoff, o.ell_cutoff),
            ell_caps: caps,
        };
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e = ea.add(*eb);
                if x_cut.is_some_and(|n| e.g0 > n) {
                    continue;
                }
                if t.ell_caps.get(&e.g0).is_some_and(|c| e.g1 >= *c) {
                    continue;
                }
                t.add_term(e, ca * cb);
            }
        }
        t.apply_cutoffs();
        t
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Termwise d/dx using dl/dx = l^2/x and dl2/dx = l2^2 l/x.
    pub fn derive(&self) -> Self {
        let mut t = Transseries {
            terms: BTreeMap::new(),
            x_cutoff: self.x_cutoff.map(|n| n - 1),
            ell_cutoff: self.ell_cutoff,
            ell_caps: self
                .ell_caps
                .iter()
                .map(|(g0, c)| (g0 - 1, if g0.is_zero() { c + 1 } else { *c }))
                .collect(),
        };
        let one = XExp::one();
        for (e, c) in &self.terms {
            let g0 = e.g0 - one;
            if !e.g0.is_zero() {
                let k = Coeff::new((*e.g0.numer()).into(), (*e.g0.denom()).into());
                t.add_term(ExponentTriple::new(g0, e.g1, e.g2), c * k);
            }
            if e.g1 != 0 {
                t.add_term(ExponentTriple::new(g0, e.g1 + 1, e.g2), c * Coeff::from_integer(e.g1.into()));
            }
            if e.g2 != 0 {
                t.add_term(
                    ExponentTriple::new(g0, e.g1 + 1, e.g2 + 1),
                    c * Coeff::from_integer(e.g2.into()),
                );
            }
        }
        t.apply_cutoffs();
        t
    }

    /// 1/self, expanded through x^limit. Requires the part of self past its
    /// leading monomial to be either of higher x-order, or of the same x-order
    /// with higher l-order (then an l-cutoff is required).
    pub fn inverse(&self, limit: XExp) -> Result<Self, SeriesError> {
        let (lead, c) = self.leading_term().map_err(|_| SeriesError::NotInvertible("zero".into()))?;
        let inv_c = c.recip();
        let eps = self.mul_monomial(&inv_c, lead.neg()).sub(&Self::one());
        if eps.is_zero() && self.is_exact() {
            return Ok(Self::monomial(inv_c, lead.neg()));
        }
        if let Some(o) = eps.order() {
            if o.g0.is_zero() && o.g1 == 0 {
                return Err(SeriesError::NotInvertible(
                    "correction differs from the leading term only in l2".into(),
                ));
            }
            if o.g0.is_zero() && eps.ell_cutoff.is_none() {
                return Err(SeriesError::NeedsEllCutoff);
            }
        }
        let eps = eps.with_x_cutoff(Some(limit + lead.g0));
        let neg = eps.neg();
        let mut sum = Self::one().with_cutoffs(eps.x_cutoff, eps.ell_cutoff);
        let mut p = Self::one();
        const MAX_TERMS: usize = 100_000;
        for _ in 0..MAX_TERMS {
            p = p.mul(&neg).clamp_to(&sum);
            if p.is_zero() {
                return Ok(sum.mul_monomial(&inv_c, lead.neg()));
            }
            sum = sum.add(&p);
        }
        Err(SeriesError::NonTerminating(MAX_TERMS))
    }

    /// Drop everything strictly above x^n.
    pub fn truncate_x(&self, n: XExp) -> Self {
        self.clone().with_x_cutoff(Some(n))
    }

    /// Same terms, regardless of cutoff metadata.
    pub fn same_terms(&self, o: &Self) -> bool {
        self.terms == o.terms
    }

    pub fn constant_term(&self) -> Coeff {
        self.coeff(&ExponentTriple::zero())
    }
}

impl fmt::Display for Transseries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            write_term(f, &c.abs(), e)?;
        }
        Ok(())
    }
}

fn write_exp(f: &mut fmt::Formatter<'_>, base: &str, k: XExp) -> fmt::Result {
    if k.is_one() {
        write!(f, "{base}")
    } else {
        write!(f, "{base}^{k}")
    }
}

/// Canonical text for |c| * monomial.
pub(crate) fn write_term(f: &mut fmt::Formatter<'_>, c: &Coeff, e: &ExponentTriple) -> fmt::Result {
    let mut parts = 0;
    if !c.is_one() || e.is_zero() {
        write!(f, "{c}")?;
        parts += 1;
    }
    let mut factor = |f: &mut fmt::Formatter<'_>, base: &str, k: XExp| -> fmt::Result {
        if k.is_zero() {
            return Ok(());
        }
        if parts > 0 {
            write!(f, "*")?;
        }
        parts += 1;
        write_exp(f, base, k)
    };
    factor(f, "x", e.g0)?;
    factor(f, "l", XExp::from_integer(e.g1))?;
    factor(f, "l2", XExp::from_integer(e.g2))
}

pub(crate) fn xexp_to_coeff(q: XExp) -> Coeff {
    Coeff::new((*q.numer()).into(), (*q.denom()).into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Coeff {
        Coeff::new(n.into(), d.into())
    }
    fn e(g0: i64, g1: i64, g2: i64) -> ExponentTriple {
        ExponentTriple::new(XExp::from_integer(g0), g1, g2)
    }
    fn t(items: &[(i64, i64, i64, i64)]) -> Transseries {
        Transseries::from_terms(items.iter().map(|&(c, a, b, d)| (e(a, b, d), q(c, 1))))
    }

    #[test]
    fn leading_terms() {
        assert_eq!(t(&[(1, 1, 0, 0), (-1, 2, -1, 0)]).leading_term().unwrap(), (e(1, 0, 0), q(1, 1)));
        assert_eq!(t(&[(5, 0, 0, 0)]).leading_term().unwrap(), (e(0, 0, 0), q(5, 1)));
        assert_eq!(t(&[(1, 2, 3, 0), (1, 2, 1, 0)]).leading_term().unwrap(), (e(2, 1, 0), q(1, 1)));
        assert_eq!(Transseries::zero().leading_term(), Err(SeriesError::NoLeadingTerm));
    }

    #[test]
    fn products() {
        assert_eq!(Transseries::x().mul(&Transseries::x()), t(&[(1, 2, 0, 0)]));
        assert_eq!(t(&[(1, 1, 1, 0)]).mul(&t(&[(1, 1, -1, 0)])), t(&[(1, 2, 0, 0)]));
        assert_eq!(
            t(&[(1, 0, 0, 0), (1, 0, 1, 0)]).mul(&t(&[(1, 0, 0, 0), (-1, 0, 1, 0)])),
            t(&[(1, 0, 0, 0), (-1, 0, 2, 0)])
        );
    }

    #[test]
    fn derivatives() {
        assert_eq!(Transseries::x().derive(), Transseries::one());
        // d/dx (x^-1 l) = -x^-2 l + x^-2 l^2
        assert_eq!(t(&[(1, -1, 1, 0)]).derive(), t(&[(-1, -2, 1, 0), (1, -2, 2, 0)]));
        // d/dx l2^-1 = -x^-1 l
        assert_eq!(t(&[(1, 0, 0, -1)]).derive(), t(&[(-1, -1, 1, 0)]));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        // g = -l/x and l2^-1 = log(-log x), differentiated numerically.
        let ell = |x: f64| -1.0 / x.ln();
        for &x in &[1e-2, 1e-3] {
            let h = x * 1e-6;
            let g = |x: f64| -ell(x) / x;
            let fd = (g(x + h) - g(x - h)) / (2.0 * h);
            let sym = ell(x) / (x * x) - ell(x).powi(2) / (x * x); // derive(-x^-1 l)
            assert!(((fd - sym) / sym).abs() < 1e-6);
            let k = |x: f64| (-x.ln()).ln();
            let fd = (k(x + h) - k(x - h)) / (2.0 * h);
            let sym = -ell(x) / x;
            assert!(((fd - sym) / sym).abs() < 1e-6);
        }
    }

    #[test]
    fn x_cutoff_tracks_negative_orders() {
        let a = t(&[(1, -1, 0, 0)]);
        let b = t(&[(1, 0, 0, 0), (1, 1, 0, 0), (1, 5, 0, 0)]).with_x_cutoff(Some(XExp::from_integer(5)));
        let p = a.mul(&b);
        assert_eq!(p.x_cutoff(), Some(XExp::from_integer(4)));
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn ell_caps_survive_cancellation() {
        // (l + l^2 + l^3 | M=3) - l  keeps the cap at l^4 instead of growing it.
        let a = t(&[(1, 0, 1, 0), (1, 0, 2, 0), (1, 0, 3, 0), (1, 0, 4, 0)]).with_ell_cutoff(Some(3));
        assert_eq!(a.len(), 3);
        let b = a.sub(&t(&[(1, 0, 1, 0)]));
        assert_eq!(b.ell_cap(XExp::zero()), Some(4));
        assert_eq!(b.len(), 2);
    }

    #[test]
    fn inverse_geometric() {
        let s = t(&[(1, 0, 0, 0), (1, 1, 0, 0)]);
        let inv = s.inverse(XExp::from_integer(4)).unwrap();
        assert_eq!(inv, t(&[(1, 0, 0, 0), (-1, 1, 0, 0), (1, 2, 0, 0), (-1, 3, 0, 0), (1, 4, 0, 0)]).with_x_cutoff(Some(XExp::from_integer(4))));
        let ell_sum = t(&[(1, 0, 0, 0), (-1, 0, 1, 0)]).with_ell_cutoff(Some(4));
        let inv = ell_sum.inverse(XExp::zero()).unwrap();
        assert_eq!(inv.len(), 4);
        assert!(inv.terms().values().all(|c| c.is_one()));
    }

    #[test]
    fn display_is_canonical() {
        let s = Transseries::from_terms([
            (ExponentTriple::new(XExp::new(1, 2), 0, -1), q(3, 2)),
            (e(2, -1, 0), q(-1, 1)),
            (e(1, 0, 0), q(1, 1)),
        ]);
        assert_eq!(s.to_string(), "3/2*x^1/2*l2^-1 + x - x^2*l^-1");
        assert_eq!(Transseries::zero().to_string(), "0");
        assert_eq!(t(&[(-5, 0, 0, 0)]).to_string(), "-5");
    }
}
