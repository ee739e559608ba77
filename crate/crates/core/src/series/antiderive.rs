//! Laurent expansion in l, integration by parts, and the Taylor increment.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{xexp_to_coeff, BlockSeries, Coeff, ExponentTriple, RationalU, SeriesError, Transseries, XExp};

/// Laurent coefficients of Q(1/l) at l = 0: returns (n0, c, exact) with
/// Q = sum_k c[k] l^(n0+k) + O(l^(n0+m)). `exact` means the expansion is
/// finite and fully contained in `c`.
pub fn laurent_coeffs(q: &RationalU, m: u32) -> Result<(i64, Vec<Coeff>, bool), SeriesError> {
    if q.is_zero() {
        return Err(SeriesError::ZeroLaurent);
    }
    let p = q.num().degree().unwrap() as i64;
    let d = q.den().degree().unwrap() as i64;
    let trim = |mut v: Vec<Coeff>| {
        while v.len() > 1 && v.last().is_some_and(|c| c.is_zero()) {
            v.pop();
        }
        v
    };
    // a monomial denominator u^k reverses to a constant
    let nr = trim(q.num().reversed());
    let dr = trim(q.den().reversed());
    let d0 = dr[0].clone();
    let m = m as usize;
    let len = if dr.len() == 1 { m.min(nr.len()) } else { m };
    let mut out: Vec<Coeff> = Vec::with_capacity(len);
    for k in 0..len {
        let mut acc = nr.get(k).cloned().unwrap_or_else(Coeff::zero);
        for j in 1..=k.min(dr.len() - 1) {
            acc -= &dr[j] * &out[k - j];
        }
        out.push(acc / &d0);
    }
    let exact = dr.len() == 1 && nr.len() <= m;
    if exact {
        while out.last().is_some_and(|c| c.is_zero()) {
            out.pop();
        }
    }
    Ok((d - p, out, exact))
}

/// Q(1/l) as a pure l-series with `m` terms from its leading exponent.
pub fn laurent_expand(q: &RationalU, m: u32) -> Result<Transseries, SeriesError> {
    let (n0, cs, exact) = laurent_coeffs(q, m)?;
    let mut t = Transseries::from_terms(
        cs.into_iter()
            .enumerate()
            .map(|(k, c)| (ExponentTriple::new(XExp::zero(), n0 + k as i64, 0), c)),
    );
    if !exact {
        t.cap_block(XExp::zero(), n0 + m as i64);
    }
    Ok(t)
}

/// Antiderivative without constant of x^a l^n, at most `m` terms.
pub fn antiderive_x_ell(a: XExp, n: i64, m: u32) -> Transseries {
    let zero = XExp::zero();
    if a == -XExp::one() {
        return if n == 1 {
            Transseries::monomial(-Coeff::one(), ExponentTriple::new(zero, 0, -1))
        } else {
            Transseries::monomial(
                Coeff::new(BigInt::one(), BigInt::from(n - 1)),
                ExponentTriple::new(zero, n - 1, 0),
            )
        };
    }
    let b = a + 1;
    let bc = xexp_to_coeff(b);
    let mut out = Transseries::zero();
    let mut c = bc.recip();
    for j in 0..m.max(1) as i64 {
        out = out.add(&Transseries::monomial(c.clone(), ExponentTriple::new(b, n + j, 0)));
        if n + j == 0 {
            return out;
        }
        c = -(&c * Coeff::from_integer(BigInt::from(n + j))) / &bc;
    }
    out.cap_block(b, n + m.max(1) as i64);
    out
}

/// Antiderivative of x^(-alpha) l^(-m), truncated at `terms` l-terms.
pub fn antiderive_monomial(alpha: XExp, m: i64, terms: u32) -> Transseries {
    antiderive_x_ell(-alpha, -m, terms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Infinite,
    Infinitesimal,
}

/// One block of a Fatou coordinate: the antiderivative of x^(beta-1) Q(u).
/// `expansion` holds the full monomials, including the x^beta factor and,
/// for beta = 0, the l2^-1 monomial coming from the l^1 part of Q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegralBlock {
    pub beta: XExp,
    /// Exponent of integration; equal to `beta` for every block built here.
    pub alpha_int: XExp,
    pub generator: RationalU,
    pub expansion: Transseries,
    pub kind: BlockKind,
}

impl IntegralBlock {
    /// The l-series f with expansion = x^beta f(l), plus any l2 monomial.
    pub fn ell_series(&self) -> Transseries {
        self.expansion.mul_monomial(&Coeff::one(), ExponentTriple::new(-self.beta, 0, 0))
    }

    /// Coefficient of l2^-1 in the expansion.
    pub fn ell2_coeff(&self) -> Coeff {
        self.expansion.coeff(&ExponentTriple::new(XExp::zero(), 0, -1))
    }

    /// The derivative x^(beta-1) Q(u) as an exact block series.
    pub fn derivative_blocks(&self) -> BlockSeries {
        BlockSeries::block(self.beta - 1, self.generator.clone())
    }
}

/// Integrate x^(beta-1) Q(u) termwise after expanding Q in l with `m` terms.
pub fn antiderive_block(beta: XExp, q: &RationalU, m: u32) -> Result<IntegralBlock, SeriesError> {
    let (n0, cs, exact) = laurent_coeffs(q, m)?;
    let a = beta - 1;
    let mut out = Transseries::zero();
    for (k, c) in cs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        out = out.add(&antiderive_x_ell(a, n0 + k as i64, m).scale(c));
    }
    if !exact {
        let cap = if beta.is_zero() { n0 + m as i64 - 1 } else { n0 + m as i64 };
        out.cap_block(beta, cap);
    }
    let kind = if beta < XExp::zero() {
        BlockKind::Infinite
    } else if beta > XExp::zero() {
        BlockKind::Infinitesimal
    } else if out.terms().keys().any(|e| e.g1 <= 0 || e.g2 != 0) {
        BlockKind::Infinite
    } else {
        BlockKind::Infinitesimal
    };
    Ok(IntegralBlock { beta, alpha_int: beta, generator: q.clone(), expansion: out, kind })
}

/// Number of Taylor terms j with ord(psi') - (j-1) + j*a <= n, i.e. terms of
/// sum_j psi^(j) (f - x)^j / j! that reach x-order n, where `o` is the order
/// of psi' * g and `a` the order of g.
pub fn taylor_terms_needed(o: XExp, a: XExp, n: XExp) -> usize {
    if n < o {
        return 0;
    }
    let r = (n - o) / (a - 1);
    (r.floor().to_integer() + 1) as usize
}

/// sum_{j>=1} psi^(j) (f - x)^j / j! for psi' given exactly and
/// `disp` = f - x, kept through x-order `cutoff`.
pub fn taylor_increment_blocks(
    psi_prime: &BlockSeries,
    disp: &BlockSeries,
    cutoff: XExp,
) -> Result<BlockSeries, SeriesError> {
    let terms = taylor_increment_terms(psi_prime, disp, cutoff)?;
    Ok(terms.iter().fold(BlockSeries::zero().with_x_cutoff(Some(cutoff)), |s, t| s.add(t)))
}

/// The individual terms psi^(j) (f - x)^j / j! of the increment.
pub fn taylor_increment_terms(
    psi_prime: &BlockSeries,
    disp: &BlockSeries,
    cutoff: XExp,
) -> Result<Vec<BlockSeries>, SeriesError> {
    let a = disp.x_order().ok_or_else(|| SeriesError::NotParabolic("zero".into()))?;
    if a <= XExp::one() {
        return Err(SeriesError::NotParabolic(a.to_string()));
    }
    let Some(o) = psi_prime.x_order() else {
        return Ok(vec![BlockSeries::zero().with_x_cutoff(Some(cutoff))]);
    };
    let jmax = taylor_terms_needed(o + a, a, cutoff);
    let disp = disp.clone().with_x_cutoff(Some(cutoff - o + XExp::one()));
    let mut terms = Vec::with_capacity(jmax);
    let mut deriv = psi_prime.clone();
    let mut power = BlockSeries::one();
    let mut fact = Coeff::one();
    for j in 1..=jmax {
        if j > 1 {
            deriv = deriv.derive();
        }
        power = power.mul(&disp).with_x_cutoff(Some(cutoff - deriv.x_order().unwrap_or(o) ));
        fact *= Coeff::from_integer(BigInt::from(j));
        let term = deriv.mul(&power).scale(&fact.recip()).with_x_cutoff(Some(cutoff));
        terms.push(term);
    }
    Ok(terms)
}

/// Psi(f) - Psi contributed by one block, for g = x - f, as an l-expanded
/// series with `m` terms per block, through x^n.
pub fn taylor_increment(
    psi_block: &IntegralBlock,
    g: &Transseries,
    n: XExp,
    m: u32,
) -> Result<Transseries, SeriesError> {
    let g = BlockSeries::from_transseries(g)?;
    let inc = taylor_increment_blocks(&psi_block.derivative_blocks(), &g.neg(), n)?;
    Ok(inc.to_transseries(m))
}

#[cfg(test)]
mod tests {
    use super::super::PolyU;
    use super::*;

    fn q(n: i64, d: i64) -> Coeff {
        Coeff::new(n.into(), d.into())
    }
    fn xe(n: i64) -> XExp {
        XExp::from_integer(n)
    }
    fn ell(k: i64) -> ExponentTriple {
        ExponentTriple::new(XExp::zero(), k, 0)
    }

    #[test]
    fn monomial_antiderivatives() {
        let r = antiderive_monomial(xe(2), 0, 5);
        assert_eq!(r, Transseries::monomial(q(-1, 1), ExponentTriple::x(-1)));
        let r = antiderive_monomial(xe(1), 2, 5);
        assert_eq!(r, Transseries::monomial(q(-1, 3), ell(-3)));
        let r = antiderive_monomial(xe(1), -1, 7);
        assert_eq!(r, Transseries::monomial(q(-1, 1), ExponentTriple::new(XExp::zero(), 0, -1)));
        // int x^-2 l dx = -x^-1 (l + l^2 + 2 l^3 + 6 l^4)
        let r = antiderive_monomial(xe(2), -1, 4);
        let want: Vec<Coeff> = vec![q(-1, 1), q(-1, 1), q(-2, 1), q(-6, 1)];
        let got: Vec<Coeff> = (1..=4).map(|k| r.coeff(&ExponentTriple::new(xe(-1), k, 0))).collect();
        assert_eq!(got, want);
        assert_eq!(r.len(), 4);
        assert_eq!(r.ell_cap(xe(-1)), Some(5));
    }

    #[test]
    fn laurent_examples() {
        let inv_u = RationalU::new(PolyU::one(), PolyU::from_ints(&[0, 1]));
        assert_eq!(laurent_expand(&inv_u, 6).unwrap(), Transseries::monomial(q(1, 1), ell(1)));
        let geo = RationalU::new(PolyU::one(), PolyU::from_ints(&[-1, 1]));
        let t = laurent_expand(&geo, 5).unwrap();
        assert_eq!(t.len(), 5);
        assert!((1..=5).all(|k| t.coeff(&ell(k)) == q(1, 1)));
        // u^2/(u+1) = l^-1 - 1 + l - l^2 + ...
        let r = RationalU::new(PolyU::from_ints(&[0, 0, 1]), PolyU::from_ints(&[1, 1]));
        let t = laurent_expand(&r, 6).unwrap();
        let got: Vec<Coeff> = (-1..5).map(|k| t.coeff(&ell(k))).collect();
        assert_eq!(got, [1, -1, 1, -1, 1, -1].map(|c| q(c, 1)));
        // multiply back by u + 1 = l^-1 + 1
        let back = t.mul(&Transseries::from_terms([(ell(-1), q(1, 1)), (ell(0), q(1, 1))]));
        assert_eq!(back.coeff(&ell(-2)), q(1, 1));
        assert!((-1..4).all(|k| back.coeff(&ell(k)).is_zero()));
    }

    #[test]
    fn block_examples() {
        let b = antiderive_block(xe(-1), &RationalU::one(), 6).unwrap();
        assert_eq!(b.expansion, Transseries::monomial(q(-1, 1), ExponentTriple::x(-1)));
        assert_eq!(b.kind, BlockKind::Infinite);
        // int u dx = x u + x + ...: x l^-1 then x with coefficient 1
        let b = antiderive_block(xe(1), &RationalU::u_power(q(1, 1), 1), 6).unwrap();
        assert_eq!(b.expansion.coeff(&ExponentTriple::new(xe(1), -1, 0)), q(1, 1));
        assert_eq!(b.expansion.coeff(&ExponentTriple::new(xe(1), 0, 0)), q(1, 1));
        assert_eq!(b.expansion.len(), 2);
        // generator -1/u at beta = -1 gives x^-1 (l + l^2 + 2 l^3 + 6 l^4 + ...)
        let b = antiderive_block(xe(-1), &RationalU::u_power(q(-1, 1), -1), 6).unwrap();
        let got: Vec<Coeff> = (1..=6).map(|k| b.expansion.coeff(&ExponentTriple::new(xe(-1), k, 0))).collect();
        assert_eq!(got, [1, 1, 2, 6, 24, 120].map(|c| q(c, 1)));
    }

    #[test]
    fn taylor_term_count() {
        // g of order 3, psi = x^-1: ord(psi' g) = 1, N = 6
        assert_eq!(taylor_terms_needed(xe(1), xe(3), xe(6)), 3);
    }

    #[test]
    fn abel_exact_for_inverse_x() {
        // Psi = 1/x, f = x - x^2 + x^3 - ... (= x/(1+x)): increment is 1.
        let psi = antiderive_block(xe(-1), &RationalU::constant(q(-1, 1)), 4).unwrap();
        let n = xe(6);
        let g = Transseries::from_terms((2..=9).map(|k| (ExponentTriple::x(k), q(if k % 2 == 0 { 1 } else { -1 }, 1))));
        let g = g.with_x_cutoff(Some(xe(9)));
        let inc = taylor_increment(&psi, &g, n, 4).unwrap();
        assert!(inc.same_terms(&Transseries::one()), "{inc}");
    }
}
