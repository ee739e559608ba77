//! Integral sums of Fatou blocks.
//!
//! A block with derivative x^(beta-1) Q(u) is summed as
//! int_d^x s^(beta-1) Q(u(s)) ds. With s = exp(-1/t), t = l(s), this is
//! int e^(-beta/t) Q(1/t) / t^2 dt, smooth in t. Dividing by x^beta gives
//! the normalized sum whose asymptotic expansion in y = l(x) is the block's
//! l-series.

use num_traits::Zero;

use super::germ::eval_ell;
use super::quad::{geometric_breaks, GaussLegendre};
use super::real::{coeff, Real};
use super::NumericError;
use crate::formal::FatouExpansion;
use crate::series::{xexp_to_coeff, BlockKind, Coeff, IntegralBlock, PolyU, RationalU, XExp};

/// Q(u) as evaluable coefficients.
#[derive(Clone, Debug)]
struct RatEval<T> {
    num: Vec<T>,
    den: Vec<T>,
}

impl<T: Real> RatEval<T> {
    fn new(r: &RationalU) -> Self {
        let c = |p: &PolyU| p.coeffs().iter().map(coeff::<T>).collect();
        RatEval { num: c(r.num()), den: c(r.den()) }
    }

    fn horner(cs: &[T], u: &T) -> T {
        cs.iter().rev().fold(T::zero(), |acc, c| acc * u.clone() + c.clone())
    }

    fn eval(&self, u: &T) -> T {
        Self::horner(&self.num, u) / Self::horner(&self.den, u)
    }
}

/// The x^0 block Q = P(u) + c/u + S(u) with S = O(u^-2): the polynomial
/// part integrates to -int P du exactly, c/u to c log l, and S from l = 0.
#[derive(Clone, Debug)]
struct ZeroSplit<T> {
    /// Coefficients of -int P du (no constant).
    poly_int: Vec<T>,
    c: T,
    s: Option<RatEval<T>>,
}

#[derive(Clone, Debug)]
pub struct PreparedBlock<T> {
    pub beta: XExp,
    pub kind: BlockKind,
    beta_t: T,
    q: RatEval<T>,
    zero: Option<ZeroSplit<T>>,
    /// Positive real poles of Q in u.
    poles: Vec<f64>,
}

fn split_zero_block(q: &RationalU) -> (PolyU, Coeff, RationalU) {
    let (p, rem) = q.num().div_rem(q.den());
    let (dd, rd) = (q.den().degree().unwrap_or(0), rem.degree());
    let c = match rd {
        Some(r) if r + 1 == dd => rem.lead().unwrap() / q.den().lead().unwrap(),
        _ => Coeff::zero(),
    };
    // S = rem/den - c/u
    let s = RationalU::new(rem, q.den().clone()).sub(&RationalU::u_power(c.clone(), -1));
    (p, c, s)
}

impl<T: Real> PreparedBlock<T> {
    pub fn new(b: &IntegralBlock) -> Self {
        let zero = b.beta.is_zero().then(|| {
            let (p, c, s) = split_zero_block(&b.generator);
            let mut poly_int = vec![T::zero()];
            for (k, a) in p.coeffs().iter().enumerate() {
                poly_int.push(coeff::<T>(&(-a / Coeff::from_integer((k as i64 + 1).into()))));
            }
            ZeroSplit { poly_int, c: coeff(&c), s: (!s.is_zero()).then(|| RatEval::new(&s)) }
        });
        PreparedBlock {
            beta: b.beta,
            kind: b.kind,
            beta_t: coeff(&xexp_to_coeff(b.beta)),
            q: RatEval::new(&b.generator),
            zero,
            poles: b.generator.poles_above(&Coeff::zero()),
        }
    }

    /// Integrand in t: e^(-beta/t) Q(1/t) / t^2, optionally times e^(beta/y).
    fn integrand(&self, t: &T, shift: Option<&T>) -> T {
        let u = t.recip();
        let mut e = -(self.beta_t.clone() * u.clone());
        if let Some(s) = shift {
            e = e + self.beta_t.clone() * s.clone();
        }
        let w = if self.beta.is_zero() { T::one() } else { e.exp() };
        w * self.q.eval(&u) * u.clone() * u
    }

    fn check_poles(&self, t_lo: f64, t_hi: f64) -> Result<(), NumericError> {
        let (u_lo, u_hi) = (1.0 / t_hi.max(1e-300), if t_lo > 0.0 { 1.0 / t_lo } else { f64::INFINITY });
        match self.poles.iter().find(|&&p| p >= u_lo && p <= u_hi) {
            Some(&u) => Err(NumericError::GeneratorPole { u, x: (-u).exp() }),
            None => Ok(()),
        }
    }
}

/// Where divergent (beta < 0) blocks start: any 0 < d < 1; constants only.
#[derive(Clone, Debug)]
pub struct SumContext<T> {
    pub gl: GaussLegendre<T>,
    /// Lower order rule for the short intervals [l(x), l(f(x))].
    pub gl_short: GaussLegendre<T>,
    /// l(d) for the lower end of divergent blocks.
    pub t_d: T,
}

impl<T: Real> SumContext<T> {
    pub fn new(points: usize, d: &T) -> Result<Self, NumericError> {
        Ok(SumContext {
            gl: GaussLegendre::new(points),
            gl_short: GaussLegendre::new(points.div_ceil(2)),
            t_d: eval_ell(d, 1)?,
        })
    }

    /// f(y) = integral sum divided by x^beta, at y = l(x), to absolute
    /// error `tol`. Not used for the x^0 block.
    pub fn normalized_sum(&self, b: &PreparedBlock<T>, y: &T, tol: &T) -> Result<T, NumericError> {
        let shift = y.recip();
        let yf = y.to_f64();
        let beta = b.beta_t.to_f64();
        let h = T::from_f64(yf * yf / (4.0 * beta.abs().max(1.0)));
        let breaks = if b.beta > XExp::zero() {
            // e^(beta/y - beta/t) is below the working precision beyond this
            let cut = (T::digits() as f64 + 10.0) * std::f64::consts::LN_10;
            let t_lo = T::from_f64(1.0 / (1.0 / yf + cut / beta));
            b.check_poles(t_lo.to_f64(), yf)?;
            geometric_breaks(&t_lo, y, &h)
        } else {
            b.check_poles(yf.min(self.t_d.to_f64()), yf.max(self.t_d.to_f64()))?;
            geometric_breaks(&self.t_d, y, &h)
        };
        let (v, _) = self.gl.integrate(|t: &T| Ok(b.integrand(t, Some(&shift))), &breaks, tol)?;
        Ok(v)
    }

    /// The block's integral sum at x.
    pub fn block_value(&self, b: &PreparedBlock<T>, x: &T, tol: &T) -> Result<T, NumericError> {
        let y = eval_ell(x, 1)?;
        if let Some(z) = &b.zero {
            let u = y.recip();
            let mut v = RatEval::horner(&z.poly_int, &u);
            if !z.c.is_zero() {
                v = v + z.c.clone() * y.ln();
            }
            if let Some(s) = &z.s {
                b.check_poles(0.0, y.to_f64())?;
                let breaks = [T::zero(), y.clone()];
                // S(1/t)/t^2 is bounded at t = 0
                let (iv, _) = self.gl.integrate(
                    |t: &T| {
                        if t.is_zero() {
                            return Ok(T::zero());
                        }
                        let u = t.recip();
                        Ok(s.eval(&u) * u.clone() * u)
                    },
                    &breaks,
                    tol,
                )?;
                v = v + iv;
            }
            return Ok(v);
        }
        let xb = (b.beta_t.clone() * x.ln()).exp();
        let ntol = tol.clone() / xb.clone().max(T::one());
        Ok(xb * self.normalized_sum(b, &y, &ntol)?)
    }

    /// int_x^z of the summed block derivatives, i.e. the increment of the
    /// blocks' integral sums from x to z, independent of d.
    pub fn increment(&self, blocks: &[PreparedBlock<T>], x: &T, z: &T, tol: &T) -> Result<T, NumericError> {
        let (ty, tz) = (eval_ell(x, 1)?, eval_ell(z, 1)?);
        for b in blocks {
            b.check_poles(ty.to_f64().min(tz.to_f64()), ty.to_f64().max(tz.to_f64()))?;
        }
        // e^(-beta u) = (e^(-u/q))^(beta q) with q the common denominator
        let q = blocks.iter().fold(1i64, |q, b| num_integer::lcm(q, *b.beta.denom()));
        let powers: Vec<i64> = blocks.iter().map(|b| *b.beta.numer() * (q / *b.beta.denom())).collect();
        let qt = T::from_i64(q);
        let f = |t: &T| {
            let u = t.recip();
            let e = (-(u.clone() / qt.clone())).exp();
            let mut acc = T::zero();
            for (b, &k) in blocks.iter().zip(&powers) {
                let w = if k == 0 { T::one() } else { e.powi(k) };
                acc = acc + w * b.q.eval(&u);
            }
            Ok(acc * u.clone() * u)
        };
        let (v, _) = self.gl_short.integrate(f, &[ty, tz], tol)?;
        Ok(v)
    }
}

/// Integral sum of a single block at y = l(x), normalized by x^beta for
/// beta != 0; `d` is where divergent blocks start.
pub fn integral_sum<T: Real>(block: &IntegralBlock, y: &T, d: &T, tol: &T) -> Result<T, NumericError> {
    let ctx = SumContext::new(super::quad::DEFAULT_POINTS, d)?;
    let b = PreparedBlock::new(block);
    if block.beta.is_zero() {
        let x = (-y.recip()).exp();
        return ctx.block_value(&b, &x, tol);
    }
    ctx.normalized_sum(&b, y, tol)
}

/// Sum of the principal blocks' integral sums at x (the l2 term included
/// in the x^0 block).
pub fn principal_part_value<T: Real>(fexp: &FatouExpansion, x: &T, d: &T, tol: &T) -> Result<T, NumericError> {
    let ctx = SumContext::new(super::quad::DEFAULT_POINTS, d)?;
    let mut acc = T::zero();
    for b in fexp.principal_blocks() {
        acc = acc + ctx.block_value(&PreparedBlock::new(b), x, tol)?;
    }
    Ok(acc)
}

/// delta(x) = 1 - (Psi_inf(f(x)) - Psi_inf(x)) as a short integral.
pub fn delta_residual<T: Real>(
    germ: &super::GermEvaluator<T>,
    fexp: &FatouExpansion,
    x: &T,
    tol: &T,
) -> Result<T, NumericError> {
    let ctx = SumContext::new(super::quad::DEFAULT_POINTS, &T::from_f64((-1f64).exp()))?;
    let blocks: Vec<_> = fexp.principal_blocks().iter().map(PreparedBlock::new).collect();
    let fx = germ.step(x)?;
    Ok(T::one() - ctx.increment(&blocks, x, &fx, tol)?)
}

/// Partial sum of the block's l-series at y (for asymptotic comparisons).
pub fn ell_partial_sum<T: Real>(block: &IntegralBlock, y: &T) -> T {
    let s = block.ell_series();
    let mut acc = T::zero();
    for (e, c) in s.terms() {
        if e.g2 == 0 && e.g0.is_zero() {
            acc = acc + coeff::<T>(c) * y.powi(e.g1);
        }
    }
    acc
}
