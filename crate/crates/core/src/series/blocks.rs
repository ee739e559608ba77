//! Series of exact blocks x^b R(u) with R rational in u.
//!
//! Derivatives, products and inverses of such sums stay in the same class, so
//! the Abel solver can run without ever truncating in l.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::antiderive::laurent_coeffs;
use super::{min_opt, xexp_to_coeff, Coeff, ExponentTriple, PolyU, RationalU, SeriesError, Transseries, XExp};

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BlockSeries {
    blocks: BTreeMap<XExp, RationalU>,
    /// Blocks with exponent <= cutoff are exact; nothing beyond is stored.
    x_cutoff: Option<XExp>,
}

impl BlockSeries {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::block(XExp::zero(), RationalU::one())
    }

    pub fn block(beta: XExp, r: RationalU) -> Self {
        let mut b = Self::zero();
        if !r.is_zero() {
            b.blocks.insert(beta, r);
        }
        b
    }

    pub fn from_blocks(it: impl IntoIterator<Item = (XExp, RationalU)>) -> Self {
        let mut s = Self::zero();
        for (b, r) in it {
            s.add_block(b, r);
        }
        s
    }

    fn add_block(&mut self, beta: XExp, r: RationalU) {
        if r.is_zero() {
            return;
        }
        match self.blocks.get_mut(&beta) {
            Some(cur) => {
                let sum = cur.add(&r);
                if sum.is_zero() {
                    self.blocks.remove(&beta);
                } else {
                    *cur = sum;
                }
            }
            None => {
                self.blocks.insert(beta, r);
            }
        }
    }

    pub fn with_x_cutoff(mut self, n: Option<XExp>) -> Self {
        self.x_cutoff = min_opt(self.x_cutoff, n);
        if let Some(n) = self.x_cutoff {
            self.blocks.retain(|b, _| *b <= n);
        }
        self
    }

    pub fn x_cutoff(&self) -> Option<XExp> {
        self.x_cutoff
    }

    pub fn blocks(&self) -> &BTreeMap<XExp, RationalU> {
        &self.blocks
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn leading(&self) -> Option<(XExp, &RationalU)> {
        self.blocks.iter().next().map(|(b, r)| (*b, r))
    }

    pub fn x_order(&self) -> Option<XExp> {
        self.blocks.keys().next().copied()
    }

    pub fn neg(&self) -> Self {
        BlockSeries {
            blocks: self.blocks.iter().map(|(b, r)| (*b, r.neg())).collect(),
            x_cutoff: self.x_cutoff,
        }
    }

    pub fn scale(&self, c: &Coeff) -> Self {
        let mut s = BlockSeries { blocks: BTreeMap::new(), x_cutoff: self.x_cutoff };
        if !c.is_zero() {
            s.blocks = self.blocks.iter().map(|(b, r)| (*b, r.scale(c))).collect();
        }
        s
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut s = self.clone();
        for (b, r) in &o.blocks {
            s.add_block(*b, r.clone());
        }
        s.with_x_cutoff(o.x_cutoff)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    /// Multiply by x^shift R(u).
    pub fn mul_block(&self, shift: XExp, r: &RationalU) -> Self {
        let mut s = BlockSeries { blocks: BTreeMap::new(), x_cutoff: self.x_cutoff.map(|c| c + shift) };
        if !r.is_zero() {
            for (b, q) in &self.blocks {
                s.blocks.insert(*b + shift, q.mul(r));
            }
        }
        s
    }

    pub fn mul(&self, o: &Self) -> Self {
        let reach = |cut: Option<XExp>, other: &Self| -> Option<XExp> {
            let c = cut?;
            match other.x_order() {
                Some(ord) => Some(c + ord),
                None => other.x_cutoff.map(|d| c + d),
            }
        };
        let cut = min_opt(reach(self.x_cutoff, o), reach(o.x_cutoff, self));
        let mut s = BlockSeries { blocks: BTreeMap::new(), x_cutoff: cut };
        for (ba, ra) in &self.blocks {
            for (bb, rb) in &o.blocks {
                let b = *ba + *bb;
                if cut.is_some_and(|c| b > c) {
                    continue;
                }
                s.add_block(b, ra.mul(rb));
            }
        }
        s
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// d/dx (x^g Q(u)) = x^(g-1) (g Q(u) - Q'(u)), since du/dx = -1/x.
    pub fn derive(&self) -> Self {
        let mut s = BlockSeries { blocks: BTreeMap::new(), x_cutoff: self.x_cutoff.map(|c| c - 1) };
        for (g, q) in &self.blocks {
            let r = q.scale(&xexp_to_coeff(*g)).sub(&q.derivative());
            s.add_block(*g - 1, r);
        }
        s
    }

    /// 1/self through x^limit (capped by what the input supports).
    pub fn inverse(&self, limit: XExp) -> Result<Self, SeriesError> {
        let (beta, r0) = self
            .leading()
            .map(|(b, r)| (b, r.clone()))
            .ok_or_else(|| SeriesError::NotInvertible("zero".into()))?;
        let r0_inv = RationalU::one().div(&r0);
        let eps = self.mul_block(-beta, &r0_inv).sub(&Self::one());
        if eps.is_zero() && self.x_cutoff.is_none() {
            return Ok(Self::block(-beta, r0_inv));
        }
        let eps = eps.with_x_cutoff(Some(limit + beta));
        let neg = eps.neg();
        let mut sum = Self::one().with_x_cutoff(eps.x_cutoff);
        let mut p = Self::one();
        loop {
            p = p.mul(&neg).with_x_cutoff(sum.x_cutoff);
            if p.is_zero() {
                break;
            }
            sum = sum.add(&p);
        }
        Ok(sum.mul_block(-beta, &r0_inv))
    }

    /// Exact conversion: every block must be an l2-free Laurent polynomial
    /// in l with no truncation in l.
    pub fn from_transseries(t: &Transseries) -> Result<Self, SeriesError> {
        let mut s = BlockSeries { blocks: BTreeMap::new(), x_cutoff: t.x_cutoff() };
        for g0 in t.block_exponents() {
            if t.ell_cap(g0).is_some() {
                return Err(SeriesError::NotABlockSeries(g0));
            }
            let mut r = RationalU::zero();
            for (e, c) in t.block(g0) {
                if e.g2 != 0 {
                    return Err(SeriesError::NotABlockSeries(g0));
                }
                // l^k = u^-k
                r = r.add(&RationalU::u_power(c, -e.g1));
            }
            s.add_block(g0, r);
        }
        if t.ell_caps().keys().any(|g0| t.block(*g0).is_empty()) {
            let g0 = *t.ell_caps().keys().next().unwrap();
            return Err(SeriesError::NotABlockSeries(g0));
        }
        Ok(s)
    }

    /// Expand each block in l, keeping `m` terms per block.
    pub fn to_transseries(&self, m: u32) -> Transseries {
        let mut out = Transseries::zero().with_x_cutoff(self.x_cutoff);
        for (b, r) in &self.blocks {
            let (n0, coeffs, exact) = laurent_coeffs(r, m).expect("nonzero block");
            let mut blk = Transseries::from_terms(
                coeffs
                    .into_iter()
                    .enumerate()
                    .map(|(k, c)| (ExponentTriple::new(*b, n0 + k as i64, 0), c)),
            );
            if !exact {
                blk.cap_block(*b, n0 + m as i64);
            }
            out = out.add(&blk);
        }
        out
    }

    /// Exact when every block is a polynomial in u.
    pub fn is_polynomial_in_u(&self) -> bool {
        self.blocks.values().all(|r| r.is_polynomial())
    }

    pub fn block_at(&self, beta: XExp) -> RationalU {
        self.blocks.get(&beta).cloned().unwrap_or_else(RationalU::zero)
    }

    /// Constant c times x^b.
    pub fn monomial(c: Coeff, b: XExp) -> Self {
        Self::block(b, RationalU::constant(c))
    }

    pub fn x() -> Self {
        Self::monomial(Coeff::one(), XExp::one())
    }

    /// The polynomial-in-u blocks, or `None` if some block is not one.
    pub fn polynomial_blocks(&self) -> Option<Vec<(XExp, PolyU)>> {
        self.blocks
            .iter()
            .map(|(b, r)| r.is_polynomial().then(|| (*b, r.num().clone())))
            .collect()
    }
}
