//! Parabolic Dulac germ specifications and the `.germ` file format.

use std::fmt;

use num_traits::One;

use super::expr::{parse_expr, Expr, SeriesCtx};
use super::{ParseError, ParseErrorKind};
use crate::series::{BlockSeries, ExponentTriple, RationalU, Transseries, XExp};

/// Where the numeric layer gets values of the germ from.
#[derive(Clone, Debug, PartialEq)]
pub enum NumericSource {
    ClosedForm(Expr),
    /// Time-one map of x' = xi(x).
    Ode(Expr),
}

impl fmt::Display for NumericSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericSource::ClosedForm(e) => write!(f, "{e}"),
            NumericSource::Ode(e) => write!(f, "ode:{e}"),
        }
    }
}

/// f = x - sum_{i>=1} x^a_i P_i(u). `blocks[0]` is the identity (1, 1);
/// the remaining entries are the blocks of the displacement g = x - f.
#[derive(Clone, Debug)]
pub struct DulacGermSpec {
    pub blocks: Vec<(XExp, RationalU)>,
    /// Blocks up to this x-order are exact; `None` when the list is the
    /// complete expansion.
    pub x_cutoff: Option<XExp>,
    /// Expression the blocks were expanded from, kept so the germ can be
    /// re-expanded to a higher order on demand.
    pub source: Option<Expr>,
    pub numeric: Option<NumericSource>,
}

impl PartialEq for DulacGermSpec {
    fn eq(&self, o: &Self) -> bool {
        self.blocks == o.blocks && self.x_cutoff == o.x_cutoff
    }
}

fn not_parabolic(msg: impl Into<String>) -> ParseError {
    ParseError::kind(ParseErrorKind::NotParabolic(msg.into()))
}

impl DulacGermSpec {
    /// Build from an expanded series. Blocks may be rational in u; use
    /// [`DulacGermSpec::is_strict_dulac`] to ask for polynomial blocks.
    pub fn from_transseries(t: &Transseries) -> Result<Self, ParseError> {
        if t.has_ell2() {
            return Err(ParseError::kind(ParseErrorKind::NotDulac("l2 terms".into())));
        }
        let b = BlockSeries::from_transseries(t)?;
        Self::from_block_series(&b)
    }

    pub fn from_block_series(b: &BlockSeries) -> Result<Self, ParseError> {
        let one = XExp::one();
        match b.leading() {
            Some((a, r)) if a == one && *r == RationalU::one() => {}
            Some((a, r)) => return Err(not_parabolic(format!("leading block is x^{a}*({r}), expected x"))),
            None => return Err(not_parabolic("zero germ")),
        }
        let g = BlockSeries::x().sub(b);
        if let Some((a, r)) = g.leading() {
            if a <= one {
                return Err(not_parabolic(format!("x^1 block is x*({}), expected x", RationalU::one().sub(r))));
            }
        } else if b.x_cutoff().is_none() {
            return Err(not_parabolic("the identity is not a parabolic germ"));
        }
        let mut blocks = vec![(one, RationalU::one())];
        blocks.extend(g.blocks().iter().map(|(a, r)| (*a, r.clone())));
        Ok(DulacGermSpec { blocks, x_cutoff: b.x_cutoff(), source: None, numeric: None })
    }

    /// Every displacement block is a polynomial in u.
    pub fn is_strict_dulac(&self) -> bool {
        self.blocks.iter().all(|(_, r)| r.is_polynomial())
    }

    /// g = x - f as exact blocks.
    pub fn displacement(&self) -> BlockSeries {
        BlockSeries::from_blocks(self.blocks[1..].iter().cloned()).with_x_cutoff(self.x_cutoff)
    }

    /// f itself.
    pub fn germ_blocks(&self) -> BlockSeries {
        BlockSeries::x().sub(&self.displacement())
    }

    /// Leading block (a, G) of the displacement.
    pub fn parabolic_order(&self) -> Option<(XExp, &RationalU)> {
        self.blocks.get(1).map(|(a, r)| (*a, r))
    }

    pub fn exponents(&self) -> Vec<XExp> {
        self.blocks.iter().map(|(a, _)| *a).collect()
    }

    /// The same germ with blocks known at least through x^n, re-expanding
    /// the source expression if needed. `m` bounds l-expansions inside it.
    pub fn expanded_to(&self, n: XExp, m: u32) -> Result<Self, ParseError> {
        match self.x_cutoff {
            None => return Ok(self.clone()),
            Some(c) if c >= n => return Ok(self.clone()),
            _ => {}
        }
        let Some(src) = &self.source else { return Ok(self.clone()) };
        let t = src.to_series(SeriesCtx::truncated(n, m))?;
        let mut g = Self::from_transseries(&t)?;
        g.source = self.source.clone();
        g.numeric = self.numeric.clone();
        Ok(g)
    }

    pub fn to_transseries(&self, m: u32) -> Transseries {
        self.germ_blocks().to_transseries(m)
    }
}

impl fmt::Display for DulacGermSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.germ_blocks();
        let laurent = t.blocks().values().all(|r| r.den().coeffs().len() == r.den().degree().unwrap_or(0) + 1
            && r.den().valuation() == r.den().degree());
        let terms: Vec<(ExponentTriple, _)> = if laurent {
            t.to_transseries(u32::MAX).terms().iter().map(|(e, c)| (*e, c.clone())).collect()
        } else {
            Vec::new()
        };
        if terms.is_empty() && !t.is_zero() {
            // rational blocks: print each block as x^a*(R(u))
            for (i, (a, r)) in t.blocks().iter().enumerate() {
                if i > 0 {
                    write!(f, " + ")?;
                }
                write!(f, "x^{a}*({r})")?;
            }
            return Ok(());
        }
        write!(f, "{}", Transseries::from_terms(terms))
    }
}

/// Parse an exact Dulac germ such as `x - x^2*u`. Closed forms that need an
/// expansion order (like `x/(1+x)`) are expanded to x^`default_order` and
/// kept re-expandable through the stored source.
pub fn parse_dulac(text: &str) -> Result<DulacGermSpec, ParseError> {
    let e = parse_expr(text)?;
    germ_from_expr(e, None)
}

const DEFAULT_ORDER: i64 = 8;
const DEFAULT_ELL_TERMS: u32 = 8;

fn germ_from_expr(e: Expr, numeric: Option<NumericSource>) -> Result<DulacGermSpec, ParseError> {
    let t = match e.to_series(SeriesCtx::exact()) {
        Ok(t) => t,
        Err(ParseError { kind: ParseErrorKind::NeedsTruncation, .. }) => {
            e.to_series(SeriesCtx::truncated(XExp::from_integer(DEFAULT_ORDER), DEFAULT_ELL_TERMS))?
        }
        Err(err) => return Err(err),
    };
    let mut g = DulacGermSpec::from_transseries(&t)?;
    g.source = Some(e);
    g.numeric = numeric;
    Ok(g)
}

/// A `.germ` document: `#` comment lines, one expression (possibly over
/// several lines), and an optional `# numeric: <expr>` or
/// `# numeric: ode:<xi>` trailer.
pub fn parse_germ_file(text: &str) -> Result<DulacGermSpec, ParseError> {
    let mut body = String::new();
    let mut numeric = None;
    let mut offset = 0usize;
    let mut body_start = None;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(spec) = rest.strip_prefix("numeric:") {
                let spec = spec.trim();
                let at = offset + line.find(spec).unwrap_or(0);
                let shift = |mut e: ParseError, by: usize| {
                    e.pos = e.pos.map(|p| p + by);
                    e
                };
                numeric = Some(if let Some(xi) = spec.strip_prefix("ode:") {
                    NumericSource::Ode(parse_expr(xi).map_err(|e| shift(e, at + 4))?)
                } else {
                    NumericSource::ClosedForm(parse_expr(spec).map_err(|e| shift(e, at))?)
                });
            }
        } else if !trimmed.is_empty() {
            body_start.get_or_insert(offset);
            body.push_str(line);
            body.push(' ');
        }
        offset += line.len();
    }
    let start = body_start.unwrap_or(0);
    let e = parse_expr(&body).map_err(|mut err| {
        err.pos = err.pos.map(|p| p + start);
        err
    })?;
    if numeric.is_none() {
        numeric = match e.flow_generator() {
            Some(xi) => Some(NumericSource::Ode(xi.clone())),
            None if !e.has_flow() => Some(NumericSource::ClosedForm(e.clone())),
            None => None,
        };
    }
    germ_from_expr(e, numeric)
}

/// Render a germ as a `.germ` document.
pub fn to_germ_file(g: &DulacGermSpec) -> String {
    let mut s = format!("{g}\n");
    if let Some(n) = &g.numeric {
        s.push_str(&format!("# numeric: {n}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{Coeff, PolyU};

    fn xe(n: i64) -> XExp {
        XExp::from_integer(n)
    }

    #[test]
    fn dulac_examples() {
        let g = parse_dulac("x - x^2").unwrap();
        assert_eq!(g.exponents(), vec![xe(1), xe(2)]);
        assert_eq!(g.blocks[1].1, RationalU::one());
        let g = parse_dulac("x - x^2*u").unwrap();
        assert_eq!(g.blocks[1].1, RationalU::from_poly(PolyU::from_ints(&[0, 1])));
        let e = parse_dulac("x*l - x").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::NotParabolic(_)));
        let e = parse_dulac("2*x - x^2").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::NotParabolic(_)));
        let e = parse_dulac("x").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::NotParabolic(_)));
    }

    #[test]
    fn both_log_spellings_agree() {
        assert_eq!(parse_dulac("x - x^2*l^-1").unwrap(), parse_dulac("x - x^2*u").unwrap());
        assert_eq!(parse_dulac("x + x^2*log(x)").unwrap(), parse_dulac("x - x^2*u").unwrap());
    }

    #[test]
    fn closed_form_is_reexpandable() {
        let g = parse_dulac("x/(1+x)").unwrap();
        assert_eq!(g.x_cutoff, Some(xe(DEFAULT_ORDER)));
        let h = g.expanded_to(xe(12), 8).unwrap();
        assert_eq!(h.x_cutoff, Some(xe(12)));
        assert_eq!(h.blocks.len(), 12);
        assert_eq!(h.blocks[11].1, RationalU::constant(Coeff::from_integer((1).into())));
    }

    #[test]
    fn germ_file_with_trailer() {
        let g = parse_germ_file("# cubic\nx - x^2\n# numeric: x/(1+x)\n").unwrap();
        assert!(matches!(g.numeric, Some(NumericSource::ClosedForm(_))));
        let g = parse_germ_file("flow(x^2/log(x))\n").unwrap();
        assert!(matches!(g.numeric, Some(NumericSource::Ode(_))));
        let e = parse_germ_file("# a\nx - * x\n").unwrap_err();
        assert_eq!(e.pos, Some(8));
        let round = parse_germ_file(&to_germ_file(&g)).unwrap();
        assert_eq!(round.blocks, g.blocks);
    }
}
