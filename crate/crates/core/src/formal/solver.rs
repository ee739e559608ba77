//! Block-by-block solution of the formal Abel equation Psi(f) - Psi = 1.
//!
//! With g = x - f = x^a G(u) + ..., each step takes the leading block
//! x^b R(u) of the right-hand side delta, sets Psi' = -x^(b-a) R/G so the
//! first Taylor term cancels it, and subtracts the full Taylor increment
//! sum_j Psi^(j) (f - x)^j / j! from delta. Everything stays an exact
//! rational function in u; M only matters for the printed expansions.

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{residual_triple, FatouExpansion, FormalError, SolverOptions, SupportLattice};
use crate::parse::DulacGermSpec;
use crate::series::{antiderive_block, taylor_increment_terms, BlockSeries, Coeff, IntegralBlock, XExp};

/// One solver step. `rhs_cutoff` is the x-order through which delta is
/// tracked; the germ must be known through `rhs_cutoff + a`.
pub fn solve_block_step(
    delta: &BlockSeries,
    germ: &DulacGermSpec,
    rhs_cutoff: XExp,
    m: u32,
) -> Result<(IntegralBlock, BlockSeries), FormalError> {
    step(delta, germ, rhs_cutoff, m, None)
}

/// With `rng`, the Taylor terms are summed in a shuffled order.
fn step(
    delta: &BlockSeries,
    germ: &DulacGermSpec,
    rhs_cutoff: XExp,
    m: u32,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(IntegralBlock, BlockSeries), FormalError> {
    let (beta, r) = delta.leading().ok_or(FormalError::ZeroRhs)?;
    let (a, g_lead) = germ.parabolic_order().ok_or(FormalError::NotParabolic("identity".into()))?;
    if beta > rhs_cutoff {
        return Err(FormalError::RhsBeyondTruncation { order: beta, cutoff: rhs_cutoff });
    }
    let q = r.div(g_lead).neg();
    let psi_prime = BlockSeries::block(beta - a, q.clone());
    let block = antiderive_block(beta - a + 1, &q, m)?;
    let disp = germ.displacement().neg();
    let mut terms = taylor_increment_terms(&psi_prime, &disp, rhs_cutoff)?;
    if let Some(rng) = rng {
        terms.shuffle(rng);
    }
    let inc = terms.iter().fold(BlockSeries::zero().with_x_cutoff(Some(rhs_cutoff)), |s, t| s.add(t));
    if inc.x_cutoff().is_some_and(|c| c < rhs_cutoff) {
        return Err(FormalError::GermTooShort { need: rhs_cutoff + a, have: germ.x_cutoff.unwrap_or(rhs_cutoff) });
    }
    let next = delta.sub(&inc).with_x_cutoff(Some(rhs_cutoff));
    debug_assert!(next.blocks().get(&beta).is_none(), "leading block not cancelled");
    Ok((block, next))
}

/// Formal Fatou coordinate through x^n.
pub fn formal_fatou(germ: &DulacGermSpec, opts: &SolverOptions) -> Result<FatouExpansion, FormalError> {
    let (a, _) = germ.parabolic_order().ok_or(FormalError::NotParabolic("identity".into()))?;
    if a <= XExp::one() {
        return Err(FormalError::NotParabolic(format!("displacement order {a} is not above 1")));
    }
    let n = opts.n;
    let lattice0 = SupportLattice::from_displacement(&germ.exponents()[1..]);
    let rhs_cutoff = n + a - 1;
    // One lattice step past the cutoff so the residual order is observable.
    let probe = rhs_cutoff + lattice0.min_step().unwrap_or(XExp::one());
    let germ = germ.expanded_to(probe + a, opts.m)?;
    if germ.x_cutoff.is_some_and(|c| c < probe + a) {
        return Err(FormalError::GermTooShort { need: probe + a, have: germ.x_cutoff.unwrap() });
    }
    let mut lattice = SupportLattice::from_displacement(&germ.exponents()[1..]);
    let mut delta = BlockSeries::one().with_x_cutoff(Some(probe));
    let mut blocks = Vec::new();
    let mut rng = opts.seed.map(ChaCha8Rng::seed_from_u64);
    let mut r0 = 0;
    let mut principal_residual = None;
    let principal_bound = a - 1;
    loop {
        let Some((beta, _)) = delta.leading() else { break };
        if beta > rhs_cutoff {
            break;
        }
        if !lattice.observe(beta) {
            return Err(FormalError::OffLattice(beta));
        }
        if blocks.len() >= opts.max_blocks {
            return Err(FormalError::Budget(opts.max_blocks));
        }
        let (block, next) = step(&delta, &germ, probe, opts.m, rng.as_mut())?;
        blocks.push(block);
        delta = next;
        if beta <= principal_bound {
            r0 = blocks.len();
            principal_residual = delta.leading().map(|(b, r)| residual_triple(b, r));
        }
    }
    if r0 == 0 {
        principal_residual = delta.leading().map(|(b, r)| residual_triple(b, r));
    }
    let residual_order = delta.leading().map(|(b, r)| residual_triple(b, r));
    if let Some((b, _)) = delta.leading() {
        lattice.observe(b);
    }
    let rho = blocks
        .iter()
        .find(|b| b.beta.is_zero())
        .map(|b| b.ell2_coeff())
        .unwrap_or_else(Coeff::zero);
    Ok(FatouExpansion::assemble(
        blocks,
        rho,
        r0,
        lattice,
        residual_order,
        principal_residual,
        a,
        opts,
        rhs_cutoff,
    ))
}
