//! Vector-field route: the time-one map of x' = xi(x) and its Fatou
//! coordinate, the antiderivative of 1/xi.

use num_traits::{One, Zero};

use super::{FatouExpansion, FormalError, SolverOptions, SupportLattice};
use crate::parse::{DulacGermSpec, Expr, Func, SeriesCtx};
use crate::series::{antiderive_block, BlockSeries, Coeff, SeriesError, Transseries, XExp};

fn generator_order(xi: &Transseries) -> Result<XExp, FormalError> {
    let lead = xi.order().ok_or_else(|| FormalError::NotParabolic("zero generator".into()))?;
    if lead.g0 <= XExp::one() {
        return Err(FormalError::NotParabolic(format!("generator has x-order {} <= 1", lead.g0)));
    }
    Ok(lead.g0)
}

/// id + sum_k (xi d/dx)^k id / k! through x^n. Exact in u when xi converts
/// to blocks; otherwise the computation runs on l-series with `m` terms.
pub fn lie_exp_time_one(xi: &Transseries, n: XExp, m: Option<u32>) -> Result<Transseries, FormalError> {
    generator_order(xi)?;
    if xi.has_ell2() {
        return Err(FormalError::NotParabolic("generator contains l2".into()));
    }
    if let Ok(b) = BlockSeries::from_transseries(xi) {
        let cut = b.x_cutoff().map_or(n, |c| c.min(n));
        let b = b.with_x_cutoff(Some(cut));
        let mut sum = BlockSeries::x().add(&b);
        let mut h = b.clone();
        let mut k = 1u32;
        while h.x_order().is_some_and(|o| o <= n) {
            k += 1;
            h = b.mul(&h.derive()).scale(&Coeff::from_integer(k.into()).recip());
            sum = sum.add(&h);
        }
        let sum = sum.with_x_cutoff(Some(n));
        // Laurent blocks expand exactly; others need the l budget
        let laurent = sum.blocks().values().all(|r| r.den().coeffs().iter().filter(|c| !c.is_zero()).count() == 1);
        let terms = if laurent { u32::MAX } else { m.ok_or(SeriesError::NeedsEllCutoff)? };
        return Ok(sum.to_transseries(terms));
    }
    let m = m.ok_or(FormalError::Series(SeriesError::NeedsEllCutoff))?;
    let xi = xi.clone().with_ell_cutoff(Some(m));
    let mut sum = Transseries::x().add(&xi);
    let mut h = xi.clone();
    let mut k = 1u32;
    while h.x_order().is_some_and(|o| o <= n) {
        k += 1;
        h = xi.mul(&h.derive()).scale(&Coeff::from_integer(k.into()).recip());
        sum = sum.add(&h);
    }
    Ok(sum.truncate_x(n))
}

/// Fatou coordinate of the time-one map of xi: blockwise antiderivative of
/// 1/xi, inverted exactly through x^(n-1).
pub fn fatou_of_generator(xi: &Transseries, opts: &SolverOptions) -> Result<FatouExpansion, FormalError> {
    let alpha = generator_order(xi)?;
    let b = BlockSeries::from_transseries(xi)?;
    let inv = b.inverse(opts.n - 1)?;
    let mut blocks = Vec::new();
    for (g, q) in inv.blocks() {
        if *g > opts.n - 1 {
            break;
        }
        blocks.push(antiderive_block(*g + 1, q, opts.m)?);
    }
    let r0 = blocks.iter().filter(|b| b.beta <= XExp::zero()).count();
    let rho = blocks.iter().find(|b| b.beta.is_zero()).map(|b| b.ell2_coeff()).unwrap_or_else(Coeff::zero);
    let exps: Vec<XExp> = b.blocks().keys().copied().collect();
    let mut lattice = SupportLattice::from_displacement(&exps);
    for blk in &blocks {
        lattice.observe(blk.beta + alpha - 1);
    }
    Ok(FatouExpansion::assemble(blocks, rho, r0, lattice, None, None, alpha, opts, opts.n + alpha - 1))
}

/// Generator of the formal normal form with invariants (a, alpha, m, b):
/// a x^alpha l^m / (1 + (a alpha/2) x^(alpha-1) l^m - (a m/2 + b/a) x^(alpha-1) l^(m+1)).
pub fn normal_form_generator(a: Coeff, alpha: XExp, m: i64, b: Coeff) -> Expr {
    let num = |c: Coeff| Expr::Num(c);
    let xpow = |p: XExp| Expr::Pow(Box::new(Expr::Var(crate::parse::Var::X)), crate::series::xexp_to_coeff(p));
    let lpow = |k: i64| Expr::Pow(Box::new(Expr::Var(crate::parse::Var::L)), Coeff::from_integer(k.into()));
    let mul = |p: Expr, q: Expr| Expr::Bin(crate::parse::BinOp::Mul, Box::new(p), Box::new(q));
    let two = Coeff::from_integer(2.into());
    let c1 = &a * crate::series::xexp_to_coeff(alpha) / &two;
    let c2 = &a * Coeff::from_integer(m.into()) / &two + &b / &a;
    let top = mul(num(a.clone()), mul(xpow(alpha), lpow(m)));
    let t1 = mul(num(c1), mul(xpow(alpha - 1), lpow(m)));
    let t2 = mul(num(c2), mul(xpow(alpha - 1), lpow(m + 1)));
    let den = Expr::Bin(
        crate::parse::BinOp::Sub,
        Box::new(Expr::Bin(crate::parse::BinOp::Add, Box::new(num(Coeff::one())), Box::new(t1))),
        Box::new(t2),
    );
    Expr::Bin(crate::parse::BinOp::Div, Box::new(top), Box::new(den))
}

#[derive(Clone, Debug)]
pub struct CrossCheck {
    /// Time-one map of the generator through x^n.
    pub germ: DulacGermSpec,
    pub solver: FatouExpansion,
    pub generator: FatouExpansion,
    /// solver - generator, when that difference is a constant.
    pub constant: Option<Coeff>,
    pub agrees: bool,
}

/// Solve the Abel equation for the time-one map of xi and compare with the
/// antiderivative of 1/xi, exactly, block by block.
pub fn cross_check_generator(xi: &Expr, n: i64, m: u32) -> Result<CrossCheck, FormalError> {
    let opts = SolverOptions::new(n, m);
    let ctx = SeriesCtx::truncated(opts.n + 2, m);
    let xi_series = xi.to_series(ctx)?;
    let alpha = generator_order(&xi_series)?;
    let flow = Expr::Call(Func::Flow, Box::new(xi.clone()));
    // enough of the germ for the solver's probe order
    let need = opts.n + alpha + alpha;
    let t = flow.to_series(SeriesCtx::truncated(need, m))?;
    let mut germ = DulacGermSpec::from_transseries(&t)?;
    germ.source = Some(flow);
    let solver = super::formal_fatou(&germ, &opts)?;
    let xi_exact = match xi.to_series(SeriesCtx::exact()) {
        Ok(s) => s,
        Err(_) => xi.to_series(SeriesCtx::truncated(opts.n + alpha, m))?,
    };
    let generator = fatou_of_generator(&xi_exact, &opts)?;
    let same_blocks = solver.blocks.len() == generator.blocks.len()
        && solver
            .blocks
            .iter()
            .zip(&generator.blocks)
            .all(|(p, q)| p.beta == q.beta && p.generator == q.generator);
    let diff = solver.series().sub(&generator.series());
    let constant = if diff.terms().keys().all(|e| e.is_zero()) { Some(diff.constant_term()) } else { None };
    let agrees = same_blocks && constant.is_some();
    Ok(CrossCheck { germ, solver, generator, constant, agrees })
}
