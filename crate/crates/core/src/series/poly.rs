//! Polynomials and rational functions in u = -log x with exact coefficients.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::Coeff;

/// Dense polynomial in u, lowest degree first. Trailing zeros are trimmed so
/// the zero polynomial is the empty vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PolyU {
    coeffs: Vec<Coeff>,
}

impl PolyU {
    pub fn new(mut coeffs: Vec<Coeff>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        PolyU { coeffs }
    }

    pub fn zero() -> Self {
        PolyU { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        Self::new(vec![c])
    }

    /// c * u^k
    pub fn monomial(c: Coeff, k: usize) -> Self {
        let mut v = vec![Coeff::zero(); k + 1];
        v[k] = c;
        Self::new(v)
    }

    pub fn from_ints(cs: &[i64]) -> Self {
        Self::new(cs.iter().map(|&c| Coeff::from_integer(c.into())).collect())
    }

    pub fn coeffs(&self) -> &[Coeff] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Coeff {
        self.coeffs.get(k).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> Option<&Coeff> {
        self.coeffs.last()
    }

    /// Lowest power of u with a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn add(&self, o: &PolyU) -> PolyU {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }

    pub fn sub(&self, o: &PolyU) -> PolyU {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> PolyU {
        PolyU { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn scale(&self, c: &Coeff) -> PolyU {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, o: &PolyU) -> PolyU {
        if self.is_zero() || o.is_zero() {
            return PolyU::zero();
        }
        let mut out = vec![Coeff::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, n: u32) -> PolyU {
        let mut acc = PolyU::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// d/du
    pub fn derivative(&self) -> PolyU {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Coeff::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    /// Euclidean division. Panics on a zero divisor.
    pub fn div_rem(&self, d: &PolyU) -> (PolyU, PolyU) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.lead().unwrap().clone();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (PolyU::zero(), self.clone());
        }
        let mut q = vec![Coeff::zero(); rem.len() - dd];
        for k in (0..q.len()).rev() {
            let c = &rem[k + dd] / &lead;
            if c.is_zero() {
                continue;
            }
            for (j, dc) in d.coeffs.iter().enumerate() {
                rem[k + j] -= &c * dc;
            }
            q[k] = c;
        }
        rem.truncate(dd);
        (PolyU::new(q), PolyU::new(rem))
    }

    pub fn monic(&self) -> PolyU {
        match self.lead() {
            Some(l) => {
                let inv = l.recip();
                self.scale(&inv)
            }
            None => PolyU::zero(),
        }
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, o: &PolyU) -> PolyU {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    pub fn eval(&self, u: &Coeff) -> Coeff {
        let mut acc = Coeff::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * u + c;
        }
        acc
    }

    pub fn eval_f64(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * u + ratio_to_f64(c);
        }
        acc
    }

    /// Square-free part (monic).
    pub fn squarefree(&self) -> PolyU {
        if self.degree().unwrap_or(0) == 0 {
            return self.monic();
        }
        let g = self.gcd(&self.derivative());
        self.div_rem(&g).0.monic()
    }

    /// Number of distinct real roots in the half-open interval (lo, hi].
    pub fn count_roots(&self, lo: &Coeff, hi: &Coeff) -> usize {
        if self.degree().unwrap_or(0) == 0 {
            return 0;
        }
        let chain = sturm_chain(&self.squarefree());
        let v = |x: &Coeff| sign_changes(chain.iter().map(|p| p.eval(x)));
        v(lo).saturating_sub(v(hi))
    }

    /// Real roots inside (lo, hi], isolated by Sturm bisection and refined to
    /// width below `width`. Returned as midpoints of the isolating intervals.
    pub fn real_roots_in(&self, lo: &Coeff, hi: &Coeff, width: &Coeff) -> Vec<Coeff> {
        let sf = self.squarefree();
        if sf.degree().unwrap_or(0) == 0 {
            return Vec::new();
        }
        let chain = sturm_chain(&sf);
        let v = |x: &Coeff| sign_changes(chain.iter().map(|p| p.eval(x)));
        let mut out = Vec::new();
        let mut stack = vec![(lo.clone(), hi.clone(), v(lo).saturating_sub(v(hi)))];
        let two = Coeff::from_integer(2.into());
        while let Some((a, b, n)) = stack.pop() {
            if n == 0 {
                continue;
            }
            if n == 1 && &b - &a < *width {
                out.push((&a + &b) / &two);
                continue;
            }
            let m = (&a + &b) / &two;
            let vm = v(&m);
            stack.push((a.clone(), m.clone(), v(&a).saturating_sub(vm)));
            stack.push((m, b.clone(), vm.saturating_sub(v(&b))));
        }
        out.sort();
        out
    }

    /// Cauchy bound on the absolute value of any root.
    pub fn root_bound(&self) -> Coeff {
        let Some(lead) = self.lead() else { return Coeff::zero() };
        let m = self.coeffs[..self.coeffs.len() - 1]
            .iter()
            .map(|c| (c / lead).abs())
            .max()
            .unwrap_or_else(Coeff::zero);
        m + Coeff::one()
    }

    /// Coefficients after substituting u = 1/l and multiplying by l^deg,
    /// i.e. the reversed coefficient list.
    pub fn reversed(&self) -> Vec<Coeff> {
        self.coeffs.iter().rev().cloned().collect()
    }
}

fn sturm_chain(p: &PolyU) -> Vec<PolyU> {
    let mut chain = vec![p.clone(), p.derivative()];
    loop {
        let n = chain.len();
        if chain[n - 1].is_zero() {
            chain.pop();
            break;
        }
        let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
        if r.is_zero() {
            break;
        }
        chain.push(r.neg());
    }
    chain
}

fn sign_changes(vals: impl Iterator<Item = Coeff>) -> usize {
    let mut last: Option<bool> = None;
    let mut n = 0;
    for v in vals {
        if v.is_zero() {
            continue;
        }
        let s = v.is_positive();
        if let Some(l) = last {
            if l != s {
                n += 1;
            }
        }
        last = Some(s);
    }
    n
}

pub(crate) fn ratio_to_f64(c: &Coeff) -> f64 {
    use num_traits::ToPrimitive;
    c.to_f64().unwrap_or(f64::NAN)
}

impl fmt::Display for PolyU {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            match (k, a.is_one()) {
                (0, _) => write!(f, "{a}")?,
                (1, true) => write!(f, "u")?,
                (1, false) => write!(f, "{a}*u")?,
                (_, true) => write!(f, "u^{k}")?,
                (_, false) => write!(f, "{a}*u^{k}")?,
            }
        }
        Ok(())
    }
}

/// Rational function num/den in u. The denominator is monic and coprime to
/// the numerator, so structural equality is mathematical equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalU {
    num: PolyU,
    den: PolyU,
}

impl RationalU {
    pub fn new(num: PolyU, den: PolyU) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return Self::zero();
        }
        let g = num.gcd(&den);
        let (mut n, _) = num.div_rem(&g);
        let (mut d, _) = den.div_rem(&g);
        let lead = d.lead().unwrap().clone();
        if !lead.is_one() {
            let inv = lead.recip();
            n = n.scale(&inv);
            d = d.scale(&inv);
        }
        RationalU { num: n, den: d }
    }

    pub fn zero() -> Self {
        RationalU { num: PolyU::zero(), den: PolyU::one() }
    }

    pub fn one() -> Self {
        Self::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        RationalU { num: PolyU::constant(c), den: PolyU::one() }
    }

    pub fn from_poly(p: PolyU) -> Self {
        RationalU { num: p, den: PolyU::one() }
    }

    /// c * u^k for any integer k.
    pub fn u_power(c: Coeff, k: i64) -> Self {
        if k >= 0 {
            Self::from_poly(PolyU::monomial(c, k as usize))
        } else {
            Self::new(PolyU::constant(c), PolyU::monomial(Coeff::one(), (-k) as usize))
        }
    }

    pub fn num(&self) -> &PolyU {
        &self.num
    }

    pub fn den(&self) -> &PolyU {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn add(&self, o: &RationalU) -> RationalU {
        if self.den == o.den {
            return Self::new(self.num.add(&o.num), self.den.clone());
        }
        Self::new(
            self.num.mul(&o.den).add(&o.num.mul(&self.den)),
            self.den.mul(&o.den),
        )
    }

    pub fn sub(&self, o: &RationalU) -> RationalU {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> RationalU {
        RationalU { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn scale(&self, c: &Coeff) -> RationalU {
        if c.is_zero() {
            return Self::zero();
        }
        RationalU { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn mul(&self, o: &RationalU) -> RationalU {
        Self::new(self.num.mul(&o.num), self.den.mul(&o.den))
    }

    pub fn div(&self, o: &RationalU) -> RationalU {
        assert!(!o.is_zero(), "division by zero rational function");
        Self::new(self.num.mul(&o.den), self.den.mul(&o.num))
    }

    pub fn pow(&self, n: u32) -> RationalU {
        Self::new(self.num.pow(n), self.den.pow(n))
    }

    /// d/du
    pub fn derivative(&self) -> RationalU {
        Self::new(
            self.num.derivative().mul(&self.den).sub(&self.num.mul(&self.den.derivative())),
            self.den.mul(&self.den),
        )
    }

    /// Order in l = 1/u at l = 0: deg(den) - deg(num).
    pub fn ell_order(&self) -> Option<i64> {
        Some(self.den.degree()? as i64 - self.num.degree()? as i64)
    }

    pub fn eval(&self, u: &Coeff) -> Option<Coeff> {
        let d = self.den.eval(u);
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval(u) / d)
        }
    }

    /// Positive real poles u > lo, as f64 approximations.
    pub fn poles_above(&self, lo: &Coeff) -> Vec<f64> {
        let hi = self.den.root_bound();
        if hi <= *lo {
            return Vec::new();
        }
        let width = Coeff::new(BigInt::one(), BigInt::from(1u64 << 40));
        self.den
            .real_roots_in(lo, &hi, &width)
            .iter()
            .map(ratio_to_f64)
            .collect()
    }
}

impl fmt::Display for RationalU {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

/// Least common multiple of the denominators of a list of rationals.
pub(crate) fn lcm_denoms<'a>(it: impl IntoIterator<Item = &'a Coeff>) -> BigInt {
    it.into_iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
}
