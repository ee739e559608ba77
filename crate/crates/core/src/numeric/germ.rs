//! Numeric values of l, of expressions and transseries, and of germs.

use super::ode::integrate_flow;
use super::real::{coeff, Real};
use super::NumericError;
use crate::parse::{BinOp, DulacGermSpec, Expr, Func, NumericSource, Var};
use crate::series::{xexp_to_coeff, Transseries};

/// l_0 = x, l_1 = -1/log x, l_2 = l_1(l_1(x)).
pub fn eval_ell<T: Real>(x: &T, k: u8) -> Result<T, NumericError> {
    let one = T::one();
    match k {
        0 => Ok(x.clone()),
        1 => {
            if *x <= T::zero() || *x >= one {
                return Err(NumericError::Domain(format!("l(x) needs 0 < x < 1, got {}", x.to_sci(6))));
            }
            Ok(-x.ln().recip())
        }
        2 => {
            let l = eval_ell(x, 1)?;
            if l >= one {
                return Err(NumericError::Domain(format!("l2(x) needs 0 < x < 1/e, got {}", x.to_sci(6))));
            }
            eval_ell(&l, 1)
        }
        _ => Err(NumericError::Domain(format!("l_{k} is not supported"))),
    }
}

/// Evaluate an expression at x. `flow(...)` has no pointwise meaning here;
/// germs given as flows go through [`GermEvaluator`].
pub fn eval_expr<T: Real>(e: &Expr, x: &T) -> Result<T, NumericError> {
    Ok(match e {
        Expr::Num(c) => coeff(c),
        Expr::Var(Var::X) => x.clone(),
        Expr::Var(Var::L) => eval_ell(x, 1)?,
        Expr::Var(Var::L2) => eval_ell(x, 2)?,
        Expr::Var(Var::U) => eval_ell(x, 1)?.recip(),
        Expr::Neg(a) => -eval_expr(a, x)?,
        Expr::Bin(op, a, b) => {
            let (a, b) = (eval_expr(a, x)?, eval_expr(b, x)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b.is_zero() {
                        return Err(NumericError::Domain("division by zero".into()));
                    }
                    a / b
                }
            }
        }
        Expr::Pow(b, q) => {
            let b = eval_expr(b, x)?;
            if q.is_integer() {
                let n: i64 = q.to_integer().try_into().map_err(|_| NumericError::Domain("exponent too large".into()))?;
                b.powi(n)
            } else if b > T::zero() {
                b.powf(&coeff(q))
            } else {
                return Err(NumericError::Domain("fractional power of a non-positive number".into()));
            }
        }
        Expr::Call(f, a) => {
            let v = eval_expr(a, x)?;
            match f {
                Func::Log if v > T::zero() => v.ln(),
                Func::Log => return Err(NumericError::Domain("log of a non-positive number".into())),
                Func::Exp => v.exp(),
                Func::Sqrt if v >= T::zero() => v.sqrt(),
                Func::Sqrt => return Err(NumericError::Domain("sqrt of a negative number".into())),
                Func::Flow => return Err(NumericError::Unsupported("nested flow(...) in a numeric expression".into())),
            }
        }
    })
}

/// Sum of c x^g0 l^g1 l2^g2 over the terms.
pub fn eval_transseries<T: Real>(t: &Transseries, x: &T) -> Result<T, NumericError> {
    let lx = x.ln();
    let l = eval_ell(x, 1)?;
    let needs_l2 = t.has_ell2();
    let l2 = if needs_l2 { eval_ell(x, 2)? } else { T::zero() };
    let mut acc = T::zero();
    for (e, c) in t.terms() {
        let mut v = coeff::<T>(c);
        if !num_traits::Zero::is_zero(&e.g0) {
            v = v * (coeff::<T>(&xexp_to_coeff(e.g0)) * lx.clone()).exp();
        }
        if e.g1 != 0 {
            v = v * l.powi(e.g1);
        }
        if e.g2 != 0 {
            v = v * l2.powi(e.g2);
        }
        acc = acc + v;
    }
    Ok(acc)
}

/// How f(x) is computed.
#[derive(Clone, Debug)]
pub enum GermSource {
    ClosedForm(Expr),
    /// Time-one map of x' = xi(x).
    OdeFlow { xi: Expr },
    /// Truncated expansion used as a stand-in.
    SeriesProxy(Transseries),
}

#[derive(Clone, Debug)]
pub struct GermEvaluator<T> {
    pub source: GermSource,
    /// f is used on (0, domain).
    pub domain: T,
    pub ode_tol: T,
}

impl<T: Real> GermEvaluator<T> {
    pub fn new(source: GermSource, domain: T, ode_tol: T) -> Self {
        GermEvaluator { source, domain, ode_tol }
    }

    /// Pick the numeric source of a parsed germ; without one, the series
    /// truncated at (n, m) stands in.
    pub fn from_spec(g: &DulacGermSpec, n: crate::series::XExp, m: u32, domain: T, ode_tol: T) -> Self {
        let source = match &g.numeric {
            Some(NumericSource::ClosedForm(e)) => GermSource::ClosedForm(e.clone()),
            Some(NumericSource::Ode(xi)) => GermSource::OdeFlow { xi: xi.clone() },
            None => GermSource::SeriesProxy(g.to_transseries(m).truncate_x(n)),
        };
        GermEvaluator::new(source, domain, ode_tol)
    }

    pub fn eval(&self, x: &T) -> Result<T, NumericError> {
        match &self.source {
            GermSource::ClosedForm(e) => eval_expr(e, x),
            GermSource::SeriesProxy(t) => eval_transseries(t, x),
            GermSource::OdeFlow { xi } => integrate_flow(|y: &T| eval_expr(xi, y), x, &T::one(), &self.ode_tol),
        }
    }

    /// f(x), checked to satisfy 0 < f(x) < x.
    pub fn step(&self, x: &T) -> Result<T, NumericError> {
        let y = self.eval(x)?;
        if !(y > T::zero() && y < *x) || !y.is_finite() {
            return Err(NumericError::Domain(format!(
                "f({}) = {} violates 0 < f(x) < x",
                x.to_sci(8),
                y.to_sci(8)
            )));
        }
        Ok(y)
    }

    /// Sample 0 < f(x) < x at geometrically spaced points of (0, domain).
    pub fn check_domain(&self, samples: usize) -> Result<(), NumericError> {
        let mut x = self.domain.clone() * T::from_f64(0.999);
        let ratio = T::from_f64(0.5);
        for _ in 0..samples {
            self.step(&x)?;
            x = x * ratio.clone();
        }
        Ok(())
    }
}
