//! Formal Fatou coordinates: the block solver, the support lattice and the
//! vector-field route through the Lie exponential.

mod lattice;
mod lie;
mod solver;

use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

pub use lattice::SupportLattice;
pub use lie::{cross_check_generator, fatou_of_generator, lie_exp_time_one, normal_form_generator, CrossCheck};
pub use solver::{formal_fatou, solve_block_step};

use crate::parse::{serialize, Format, ParseError};
use crate::series::{
    BlockKind, Coeff, ExponentTriple, IntegralBlock, RationalU, SeriesError, Transseries, XExp,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormalError {
    #[error("not parabolic: {0}")]
    NotParabolic(String),
    #[error("right-hand side is zero")]
    ZeroRhs,
    #[error("RHS order {order} exceeded truncation {cutoff}")]
    RhsBeyondTruncation { order: XExp, cutoff: XExp },
    #[error("germ known through x^{have} but x^{need} is required")]
    GermTooShort { need: XExp, have: XExp },
    #[error("did not terminate in budget of {0} blocks")]
    Budget(usize),
    #[error("block order {0} is outside the support lattice")]
    OffLattice(XExp),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Keep Fatou blocks of x-order <= n.
    pub n: XExp,
    /// l-terms per printed block.
    pub m: u32,
    /// Ceiling on the number of blocks, a guard against runaway loops.
    pub max_blocks: usize,
    /// Additive constant reported with the expansion.
    pub constant: Coeff,
    /// Sum the independent Taylor terms of each step in an order shuffled
    /// by this seed; the result must not depend on it.
    pub seed: Option<u64>,
}

impl SolverOptions {
    pub fn new(n: i64, m: u32) -> Self {
        SolverOptions { n: XExp::from_integer(n), m, max_blocks: 10_000, constant: Coeff::zero(), seed: None }
    }
}

/// A positive real pole of a block generator, in u and in x = exp(-u).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorPole {
    pub block: usize,
    pub u: f64,
    pub x: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FatouExpansion {
    pub blocks: Vec<IntegralBlock>,
    /// Coefficient of l2^-1.
    pub rho: Coeff,
    /// Number of leading blocks making up the principal part.
    pub critical_index: usize,
    pub lattice: SupportLattice,
    /// Order of the first unresolved RHS term, `None` if it is zero through
    /// the probe order.
    pub residual_order: Option<ExponentTriple>,
    /// Order of the RHS left after the principal blocks, i.e. of delta.
    pub principal_residual_order: Option<ExponentTriple>,
    /// x-order a of the displacement x - f.
    pub parabolic_order: XExp,
    pub n: XExp,
    pub m: u32,
    pub rhs_cutoff: XExp,
    pub constant: Coeff,
    pub generator_poles: Vec<GeneratorPole>,
}

pub(crate) fn residual_triple(b: XExp, r: &RationalU) -> ExponentTriple {
    ExponentTriple::new(b, r.ell_order().unwrap_or(0), 0)
}

impl FatouExpansion {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        blocks: Vec<IntegralBlock>,
        rho: Coeff,
        critical_index: usize,
        lattice: SupportLattice,
        residual_order: Option<ExponentTriple>,
        principal_residual_order: Option<ExponentTriple>,
        a: XExp,
        opts: &SolverOptions,
        rhs_cutoff: XExp,
    ) -> Self {
        let zero = Coeff::zero();
        let generator_poles = blocks
            .iter()
            .enumerate()
            .flat_map(|(i, b)| {
                b.generator.poles_above(&zero).into_iter().map(move |u| GeneratorPole { block: i, u, x: (-u).exp() })
            })
            .collect();
        FatouExpansion {
            blocks,
            rho,
            critical_index,
            lattice,
            residual_order,
            principal_residual_order,
            parabolic_order: a,
            n: opts.n,
            m: opts.m,
            rhs_cutoff,
            constant: opts.constant.clone(),
            generator_poles,
        }
    }

    /// The whole expansion as one transseries, constant included.
    pub fn series(&self) -> Transseries {
        let mut s = Transseries::constant(self.constant.clone());
        for b in &self.blocks {
            s = s.add(&b.expansion);
        }
        s
    }

    pub fn with_constant(mut self, c: Coeff) -> Self {
        self.constant = c;
        self
    }

    pub fn principal_blocks(&self) -> &[IntegralBlock] {
        &self.blocks[..self.critical_index]
    }

    pub fn infinitesimal_blocks(&self) -> &[IntegralBlock] {
        &self.blocks[self.critical_index..]
    }

    /// Copy keeping only the blocks of x-order <= n.
    pub fn truncated(&self, n: XExp) -> Self {
        let mut f = self.clone();
        f.blocks.retain(|b| b.beta <= n);
        f.critical_index = f.critical_index.min(f.blocks.len());
        f.n = f.n.min(n);
        f
    }

    pub fn summary(&self) -> FatouSummary {
        let s = |c: &Coeff| c.to_string();
        let triple = |e: &ExponentTriple| [e.g0.to_string(), e.g1.to_string(), e.g2.to_string()];
        FatouSummary {
            parabolic_order: self.parabolic_order.to_string(),
            n: self.n.to_string(),
            m: self.m,
            rhs_cutoff: self.rhs_cutoff.to_string(),
            r0: self.critical_index,
            rho: s(&self.rho),
            constant: s(&self.constant),
            lattice_generators: self.lattice.generators.iter().map(|g| g.to_string()).collect(),
            residual_order: self.residual_order.as_ref().map(triple),
            principal_residual_order: self.principal_residual_order.as_ref().map(triple),
            generator_poles: self.generator_poles.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockSummary {
                    beta: b.beta.to_string(),
                    kind: b.kind,
                    generator_num: b.generator.num().coeffs().iter().map(s).collect(),
                    generator_den: b.generator.den().coeffs().iter().map(s).collect(),
                    ell_cap: b.expansion.ell_cap(b.beta),
                    expansion: b
                        .expansion
                        .terms()
                        .iter()
                        .map(|(e, c)| TermRecord { coeff: s(c), g0: e.g0.to_string(), g1: e.g1, g2: e.g2 })
                        .collect(),
                })
                .collect(),
            series: self.series().to_string(),
        }
    }

    /// JSON summary document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("summary serializes")
    }

    /// The expansion in the machine transseries format.
    pub fn to_machine(&self) -> String {
        serialize(&self.series(), Format::Machine)
    }

    /// Blocks whose kind disagrees with their position relative to r0.
    pub fn kind_mismatches(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(i, b)| (*i < self.critical_index) != (b.kind == BlockKind::Infinite))
            .map(|(i, _)| i)
            .collect()
    }

    /// Highest |coefficient| among the l2 monomials, and how many there are.
    pub fn ell2_monomials(&self) -> Vec<(ExponentTriple, Coeff)> {
        self.series().terms().iter().filter(|(e, _)| e.g2 != 0).map(|(e, c)| (*e, c.clone())).collect()
    }

    pub fn rho_is_zero(&self) -> bool {
        !self.rho.is_positive() && !self.rho.is_negative()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TermRecord {
    pub coeff: String,
    pub g0: String,
    pub g1: i64,
    pub g2: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockSummary {
    pub beta: String,
    pub kind: BlockKind,
    /// Coefficients of the generator Q(u), lowest degree first.
    pub generator_num: Vec<String>,
    pub generator_den: Vec<String>,
    pub ell_cap: Option<i64>,
    pub expansion: Vec<TermRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FatouSummary {
    pub parabolic_order: String,
    pub n: String,
    pub m: u32,
    pub rhs_cutoff: String,
    pub r0: usize,
    pub rho: String,
    pub constant: String,
    pub lattice_generators: Vec<String>,
    pub residual_order: Option<[String; 3]>,
    pub principal_residual_order: Option<[String; 3]>,
    pub generator_poles: Vec<GeneratorPole>,
    pub blocks: Vec<BlockSummary>,
    pub series: String,
}
