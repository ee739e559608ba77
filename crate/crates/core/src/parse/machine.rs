//! Canonical text and the line-oriented machine format.
//!
//! ```text
//! transseries 1
//! x_cutoff 6
//! ell_cutoff none
//! ell_caps 0
//! terms 2
//! 1 1 0 0
//! -1 2 -1 0
//! ```
//! Each term record is `coefficient g0 g1 g2`; rationals are written `p/q`.

use std::fmt::Write as _;
use std::str::FromStr;

use num_traits::Zero;

use super::{parse_transseries, ParseError, ParseErrorKind};
use crate::series::{Coeff, ExponentTriple, Transseries, XExp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    /// Human-readable canonical expression, parseable back.
    Text,
    Machine,
}

pub fn serialize(t: &Transseries, format: Format) -> String {
    match format {
        Format::Text => t.to_string(),
        Format::Machine => {
            let mut s = String::from("transseries 1\n");
            let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
            let _ = writeln!(s, "x_cutoff {}", opt(t.x_cutoff().map(|c| c.to_string())));
            let _ = writeln!(s, "ell_cutoff {}", opt(t.ell_cutoff().map(|c| c.to_string())));
            let _ = writeln!(s, "ell_caps {}", t.ell_caps().len());
            for (g0, cap) in t.ell_caps() {
                let _ = writeln!(s, "{g0} {cap}");
            }
            let _ = writeln!(s, "terms {}", t.len());
            for (e, c) in t.terms() {
                let _ = writeln!(s, "{c} {} {} {}", e.g0, e.g1, e.g2);
            }
            s
        }
    }
}

fn bad(line: usize, msg: &str) -> ParseError {
    ParseError::kind(ParseErrorKind::Syntax(format!("machine format line {}: {msg}", line + 1)))
}

fn field<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, ParseError> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| bad(line, &format!("expected {what}")))
}

fn opt_field<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<Option<T>, ParseError> {
    match tok {
        Some("none") => Ok(None),
        t => field(t, line, what).map(Some),
    }
}

/// Inverse of [`serialize`] with [`Format::Machine`]; also accepts the text
/// format for convenience.
pub fn parse_machine(text: &str) -> Result<Transseries, ParseError> {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if lines.first().map(|l| l.split_whitespace().next()) != Some(Some("transseries")) {
        return parse_transseries(text);
    }
    let mut i = 1;
    let kv = |key: &str, i: &mut usize| -> Result<(usize, Vec<&str>), ParseError> {
        let l = *lines.get(*i).ok_or_else(|| bad(*i, &format!("missing {key}")))?;
        let mut it = l.split_whitespace();
        if it.next() != Some(key) {
            return Err(bad(*i, &format!("expected {key}")));
        }
        *i += 1;
        Ok((*i - 1, it.collect()))
    };
    let (ln, v) = kv("x_cutoff", &mut i)?;
    let x_cut: Option<XExp> = opt_field(v.first().copied(), ln, "x cutoff")?;
    let (ln, v) = kv("ell_cutoff", &mut i)?;
    let ell_cut: Option<u32> = opt_field(v.first().copied(), ln, "l cutoff")?;
    let (ln, v) = kv("ell_caps", &mut i)?;
    let ncaps: usize = field(v.first().copied(), ln, "count")?;
    let mut caps = Vec::new();
    for _ in 0..ncaps {
        let l = *lines.get(i).ok_or_else(|| bad(i, "missing cap record"))?;
        let mut it = l.split_whitespace();
        caps.push((field::<XExp>(it.next(), i, "g0")?, field::<i64>(it.next(), i, "cap")?));
        i += 1;
    }
    let (ln, v) = kv("terms", &mut i)?;
    let nterms: usize = field(v.first().copied(), ln, "count")?;
    let mut terms = Vec::new();
    for _ in 0..nterms {
        let l = *lines.get(i).ok_or_else(|| bad(i, "missing term record"))?;
        let mut it = l.split_whitespace();
        let c: Coeff = field(it.next(), i, "coefficient")?;
        let e = ExponentTriple::new(field(it.next(), i, "g0")?, field(it.next(), i, "g1")?, field(it.next(), i, "g2")?);
        if c.is_zero() {
            return Err(bad(i, "zero coefficient"));
        }
        terms.push((e, c));
        i += 1;
    }
    if i != lines.len() {
        return Err(bad(i, "trailing data"));
    }
    let mut t = Transseries::from_terms(terms).with_x_cutoff(x_cut);
    for (g0, cap) in caps {
        t.cap_block(g0, cap);
    }
    Ok(t.with_ell_cutoff(ell_cut))
}
