//! Expression AST, recursive-descent parser and formal evaluation.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::lexer::{lex, Tok, Token};
use super::{ParseError, ParseErrorKind};
use crate::series::{Coeff, ExponentTriple, SeriesError, Transseries, XExp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    /// l = -1/log x
    L,
    /// l2 = l(l)
    L2,
    /// u = 1/l = -log x
    U,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Log,
    Exp,
    Sqrt,
    /// Time-one map of the vector field given as argument.
    Flow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Coeff),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Coeff),
    Call(Func, Box<Expr>),
}

/// Truncation used when an expression has to be expanded into a series.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SeriesCtx {
    pub x_limit: Option<XExp>,
    pub ell_terms: Option<u32>,
}

impl SeriesCtx {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn truncated(n: XExp, m: u32) -> Self {
        SeriesCtx { x_limit: Some(n), ell_terms: Some(m) }
    }
}

struct Parser<'a> {
    toks: &'a [Token],
    i: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> usize {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::new(self.pos(), ParseErrorKind::Syntax(msg.into())))
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let at = self.pos();
        let e = self.exponent()?;
        if *self.peek() == Tok::Caret {
            return self.err("chained powers need parentheses");
        }
        Ok(Expr::Pow(Box::new(base), e.map_err(|k| ParseError::new(at, k))?))
    }

    /// A signed rational literal p or p/q, or a parenthesised constant.
    fn exponent(&mut self) -> Result<Result<Coeff, ParseErrorKind>, ParseError> {
        let mut sign = Coeff::one();
        while matches!(self.peek(), Tok::Minus | Tok::Plus) {
            if self.bump() == Tok::Minus {
                sign = -sign;
            }
        }
        match self.peek().clone() {
            Tok::Num(p) => {
                self.bump();
                if *self.peek() == Tok::Slash {
                    if let Tok::Num(q) = &self.toks[self.i + 1].tok {
                        let q = q.clone();
                        self.bump();
                        self.bump();
                        if q.is_zero() {
                            return Ok(Err(ParseErrorKind::Syntax("zero denominator in exponent".into())));
                        }
                        return Ok(Ok(sign * p / q));
                    }
                }
                Ok(Ok(sign * p))
            }
            _ => {
                let e = self.atom()?;
                Ok(constant_value(&e).map(|c| sign * c))
            }
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(c) => Ok(Expr::Num(c)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let func = match name.as_str() {
                    "x" => return Ok(Expr::Var(Var::X)),
                    "l" => return Ok(Expr::Var(Var::L)),
                    "l2" => return Ok(Expr::Var(Var::L2)),
                    "u" => return Ok(Expr::Var(Var::U)),
                    "log" | "ln" => Func::Log,
                    "exp" => Func::Exp,
                    "sqrt" => Func::Sqrt,
                    "flow" => Func::Flow,
                    s if s.len() > 1 && s.starts_with('l') && s[1..].chars().all(|c| c.is_ascii_digit()) => {
                        return Err(ParseError::new(pos, ParseErrorKind::LogDepth(s.to_string())));
                    }
                    s => {
                        return Err(ParseError::new(pos, ParseErrorKind::Syntax(format!("unknown identifier '{s}'"))));
                    }
                };
                self.expect(Tok::LParen, "'(' after function name")?;
                let arg = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Tok::End => Err(ParseError::new(pos, ParseErrorKind::Syntax("unexpected end of input".into()))),
            t => Err(ParseError::new(pos, ParseErrorKind::Syntax(format!("unexpected token {t:?}")))),
        }
    }
}

fn constant_value(e: &Expr) -> Result<Coeff, ParseErrorKind> {
    let s = e.to_series(SeriesCtx::exact()).map_err(|_| ParseErrorKind::NonRationalExponent)?;
    if s.is_zero() {
        return Ok(Coeff::zero());
    }
    if s.len() == 1 && s.order() == Some(ExponentTriple::zero()) {
        return Ok(s.constant_term());
    }
    Err(ParseErrorKind::NonRationalExponent)
}

/// Parse one expression.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks: &toks, i: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.err("unexpected trailing input");
    }
    Ok(e)
}

fn ev_err(kind: ParseErrorKind) -> ParseError {
    ParseError { pos: None, kind }
}

impl From<SeriesError> for ParseError {
    fn from(e: SeriesError) -> Self {
        ev_err(ParseErrorKind::Series(e))
    }
}

/// Exact r-th root of a rational, if it exists.
fn rational_root(c: &Coeff, r: u32) -> Option<Coeff> {
    if r == 1 {
        return Some(c.clone());
    }
    let neg = c.is_negative();
    if neg && r % 2 == 0 {
        return None;
    }
    let root = |n: &BigInt| {
        let k = n.abs().nth_root(r);
        (k.pow(r) == n.abs()).then_some(k)
    };
    let n = root(c.numer())?;
    let d = root(c.denom())?;
    let v = Coeff::new(n, d);
    Some(if neg { -v } else { v })
}

fn rational_pow(c: &Coeff, q: &Coeff) -> Option<Coeff> {
    let p = q.numer().to_i32()?;
    let r = q.denom().to_u32()?;
    let base = rational_root(c, r)?;
    if base.is_zero() && p < 0 {
        return None;
    }
    Some(num_traits::pow::Pow::pow(&base, p))
}

fn monomial_pow(e: ExponentTriple, q: &Coeff) -> Option<ExponentTriple> {
    let g0 = Coeff::new((*e.g0.numer()).into(), (*e.g0.denom()).into()) * q;
    let g1 = Coeff::from_integer(e.g1.into()) * q;
    let g2 = Coeff::from_integer(e.g2.into()) * q;
    if !g1.is_integer() || !g2.is_integer() {
        return None;
    }
    Some(ExponentTriple::new(
        XExp::new(g0.numer().to_i64()?, g0.denom().to_i64()?),
        g1.to_integer().to_i64()?,
        g2.to_integer().to_i64()?,
    ))
}

impl Expr {
    /// Expand into a transseries. With `x_limit = None` only expressions with
    /// finite expansions are accepted.
    pub fn to_series(&self, ctx: SeriesCtx) -> Result<Transseries, ParseError> {
        let Some(limit) = ctx.x_limit else {
            return self.ev(ctx);
        };
        // Negative-order factors (divisions by x^k) eat into the cutoff; widen
        // the working order until the requested one is reached.
        let mut margin = XExp::zero();
        for _ in 0..8 {
            let work = SeriesCtx { x_limit: Some(limit + margin), ..ctx };
            let s = self.ev(work)?;
            match s.x_cutoff() {
                Some(c) if c < limit => margin += limit - c,
                _ => return Ok(s.with_x_cutoff(Some(limit))),
            }
        }
        Err(ev_err(ParseErrorKind::Series(SeriesError::NonTerminating(8))))
    }

    fn cut(&self, s: Transseries, ctx: SeriesCtx) -> Transseries {
        s.with_x_cutoff(ctx.x_limit)
    }

    fn ev(&self, ctx: SeriesCtx) -> Result<Transseries, ParseError> {
        Ok(match self {
            Expr::Num(c) => Transseries::constant(c.clone()),
            Expr::Var(Var::X) => Transseries::x(),
            Expr::Var(Var::L) => Transseries::ell(),
            Expr::Var(Var::L2) => Transseries::ell2(),
            Expr::Var(Var::U) => Transseries::u(),
            Expr::Neg(a) => a.ev(ctx)?.neg(),
            Expr::Bin(op, a, b) => {
                let (sa, sb) = (a.ev(ctx)?, b.ev(ctx)?);
                match op {
                    BinOp::Add => self.cut(sa.add(&sb), ctx),
                    BinOp::Sub => self.cut(sa.sub(&sb), ctx),
                    BinOp::Mul => self.cut(sa.mul(&sb), ctx),
                    BinOp::Div => self.cut(divide(&sa, &sb, ctx)?, ctx),
                }
            }
            Expr::Pow(b, q) => self.cut(power(&b.ev(ctx)?, q, ctx)?, ctx),
            Expr::Call(Func::Sqrt, a) => self.cut(power(&a.ev(ctx)?, &Coeff::new(1.into(), 2.into()), ctx)?, ctx),
            Expr::Call(Func::Log, a) => self.cut(log_series(&a.ev(ctx)?, ctx)?, ctx),
            Expr::Call(Func::Exp, a) => self.cut(exp_series(&a.ev(ctx)?, ctx)?, ctx),
            Expr::Call(Func::Flow, a) => {
                let n = ctx.x_limit.ok_or_else(|| ev_err(ParseErrorKind::NeedsTruncation))?;
                let xi = a.ev(SeriesCtx { x_limit: Some(n + 2), ..ctx })?;
                crate::formal::lie_exp_time_one(&xi, n, ctx.ell_terms)
                    .map_err(|e| ev_err(ParseErrorKind::Generator(e.to_string())))?
            }
        })
    }

    /// True if the expression contains a `flow(...)` call.
    pub fn has_flow(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Pow(a, _) => a.has_flow(),
            Expr::Bin(_, a, b) => a.has_flow() || b.has_flow(),
            Expr::Call(Func::Flow, _) => true,
            Expr::Call(_, a) => a.has_flow(),
        }
    }

    /// The argument of a top-level `flow(...)`.
    pub fn flow_generator(&self) -> Option<&Expr> {
        match self {
            Expr::Call(Func::Flow, a) => Some(a),
            _ => None,
        }
    }
}

fn split_lead(s: &Transseries) -> Result<(ExponentTriple, Coeff, Transseries), ParseError> {
    let (e, c) = s.leading_term().map_err(|_| ev_err(ParseErrorKind::Series(SeriesError::NotInvertible("zero".into()))))?;
    let eps = s.mul_monomial(&c.recip(), e.neg()).sub(&Transseries::one());
    Ok((e, c, eps))
}

fn divide(a: &Transseries, b: &Transseries, ctx: SeriesCtx) -> Result<Transseries, ParseError> {
    if b.len() == 1 && b.is_exact() {
        let (e, c) = b.leading_term()?;
        return Ok(a.mul_monomial(&c.recip(), e.neg()));
    }
    if b.is_zero() {
        return Err(ev_err(ParseErrorKind::Series(SeriesError::NotInvertible("division by zero".into()))));
    }
    let limit = ctx.x_limit.ok_or_else(|| ev_err(ParseErrorKind::NeedsTruncation))?;
    let lim_inv = limit - a.x_order().unwrap_or(XExp::zero());
    // only truncate in l when the correction sits in the same x-block
    let inv = match b.inverse(lim_inv) {
        Err(SeriesError::NeedsEllCutoff) => b.clone().with_ell_cutoff(ctx.ell_terms).inverse(lim_inv)?,
        r => r?,
    };
    Ok(a.mul(&inv))
}

/// sum_k coef(k) eps^k with eps of positive order, stopping when the powers
/// vanish under truncation.
fn series_in(
    eps: &Transseries,
    ctx: SeriesCtx,
    mut coef: impl FnMut(usize) -> Coeff,
) -> Result<Transseries, ParseError> {
    if eps.is_zero() && eps.is_exact() {
        return Ok(Transseries::constant(coef(0)));
    }
    let o = eps.order().unwrap_or(ExponentTriple::x(1));
    if o <= ExponentTriple::zero() {
        return Err(ev_err(ParseErrorKind::Series(SeriesError::NotInvertible(
            "expansion variable is not small".into(),
        ))));
    }
    if o.g0.is_zero() && o.g1 == 0 {
        return Err(ev_err(ParseErrorKind::Series(SeriesError::NotInvertible(
            "expansion in l2 alone does not terminate".into(),
        ))));
    }
    if ctx.x_limit.is_none() || (o.g0.is_zero() && ctx.ell_terms.is_none()) {
        return Err(ev_err(ParseErrorKind::NeedsTruncation));
    }
    let ell = if o.g0.is_zero() { ctx.ell_terms } else { None };
    let eps = eps.clone().with_cutoffs(ctx.x_limit, ell);
    let mut sum = Transseries::constant(coef(0)).with_cutoffs(eps.x_cutoff(), eps.ell_cutoff());
    let mut p = Transseries::one();
    for k in 1..100_000 {
        p = p.mul(&eps).clamp_to(&sum);
        if p.is_zero() {
            return Ok(sum);
        }
        sum = sum.add(&p.scale(&coef(k)));
    }
    Err(ev_err(ParseErrorKind::Series(SeriesError::NonTerminating(100_000))))
}

fn power(b: &Transseries, q: &Coeff, ctx: SeriesCtx) -> Result<Transseries, ParseError> {
    if q.is_integer() && !q.is_negative() {
        let n = q.to_integer().to_u32().ok_or(ev_err(ParseErrorKind::NonRationalExponent))?;
        return Ok(b.pow(n));
    }
    if b.is_zero() {
        return Err(ev_err(ParseErrorKind::Series(SeriesError::NotInvertible("zero to a negative power".into()))));
    }
    let (e, c, eps) = split_lead(b)?;
    let e_q = monomial_pow(e, q).ok_or(ev_err(ParseErrorKind::NonRationalExponent))?;
    let c_q = rational_pow(&c, q).ok_or(ev_err(ParseErrorKind::NonRationalExponent))?;
    let inner_ctx = SeriesCtx { x_limit: ctx.x_limit.map(|n| n - e_q.g0), ..ctx };
    // binomial series (1 + eps)^q
    let mut binom = Coeff::one();
    let body = series_in(&eps, inner_ctx, |k| {
        if k > 0 {
            binom = &binom * (q - Coeff::from_integer((k - 1).into())) / Coeff::from_integer(k.into());
        }
        binom.clone()
    })?;
    Ok(body.mul_monomial(&c_q, e_q))
}

fn log_series(s: &Transseries, ctx: SeriesCtx) -> Result<Transseries, ParseError> {
    let (e, c, eps) = split_lead(s)?;
    if !c.is_one() {
        return Err(ev_err(ParseErrorKind::NonRationalExponent));
    }
    if e.g2 != 0 {
        return Err(ev_err(ParseErrorKind::LogDepth("log(l2)".into())));
    }
    let g0 = Coeff::new((*e.g0.numer()).into(), (*e.g0.denom()).into());
    // log x = -u, log l = -log u = -l2^-1
    let lead = Transseries::from_terms([
        (ExponentTriple::new(XExp::zero(), -1, 0), -g0),
        (ExponentTriple::new(XExp::zero(), 0, -1), -Coeff::from_integer(e.g1.into())),
    ]);
    let tail = series_in(&eps, ctx, |k| {
        if k == 0 {
            Coeff::zero()
        } else {
            let v = Coeff::new(BigInt::one(), BigInt::from(k));
            if k % 2 == 0 {
                -v
            } else {
                v
            }
        }
    })?;
    Ok(lead.add(&tail))
}

fn exp_series(s: &Transseries, ctx: SeriesCtx) -> Result<Transseries, ParseError> {
    let mut mono = ExponentTriple::zero();
    let mut small = Transseries::zero().with_cutoffs(s.x_cutoff(), s.ell_cutoff());
    for (e, c) in s.terms() {
        if *e > ExponentTriple::zero() {
            small = small.add(&Transseries::monomial(c.clone(), *e));
        } else if *e == ExponentTriple::new(XExp::zero(), -1, 0) {
            // exp(a u) = x^-a
            let a = XExp::new(c.numer().to_i64().unwrap_or(i64::MAX), c.denom().to_i64().unwrap_or(1));
            mono = mono.add(ExponentTriple::new(-a, 0, 0));
        } else if *e == ExponentTriple::new(XExp::zero(), 0, -1) && c.is_integer() {
            // exp(b log u) = l^-b
            mono = mono.add(ExponentTriple::new(XExp::zero(), -c.to_integer().to_i64().unwrap_or(0), 0));
        } else {
            return Err(ev_err(ParseErrorKind::Series(SeriesError::NotInvertible(format!(
                "exp of a series containing {e} leaves the class"
            )))));
        }
    }
    let mut fact = Coeff::one();
    let inner_ctx = SeriesCtx { x_limit: ctx.x_limit.map(|n| n - mono.g0), ..ctx };
    let body = series_in(&small, inner_ctx, |k| {
        if k > 0 {
            fact = &fact * Coeff::from_integer(k.into());
        }
        fact.recip()
    })?;
    Ok(body.mul_monomial(&Coeff::one(), mono))
}

fn write_coeff(f: &mut fmt::Formatter<'_>, c: &Coeff) -> fmt::Result {
    if c.is_integer() && !c.is_negative() {
        write!(f, "{c}")
    } else {
        write!(f, "({c})")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => write_coeff(f, c),
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::L) => write!(f, "l"),
            Expr::Var(Var::L2) => write!(f, "l2"),
            Expr::Var(Var::U) => write!(f, "u"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Bin(op, a, b) => {
                let o = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({a} {o} {b})")
            }
            Expr::Pow(a, q) => {
                write!(f, "({a})^")?;
                write_coeff(f, q)
            }
            Expr::Call(func, a) => {
                let name = match func {
                    Func::Log => "log",
                    Func::Exp => "exp",
                    Func::Sqrt => "sqrt",
                    Func::Flow => "flow",
                };
                write!(f, "{name}({a})")
            }
        }
    }
}
