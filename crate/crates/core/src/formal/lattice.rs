use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::series::{lcm_denoms, xexp_to_coeff, XExp};

/// Finitely generated additive monoid containing every right-hand-side
/// order the block solver can meet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportLattice {
    pub generators: Vec<XExp>,
    pub seen: BTreeSet<XExp>,
}

impl SupportLattice {
    /// Generators {a_i - a} and {a_i - 1} over the displacement exponents
    /// a_i (the first being a), positive ones only, reduced to a minimal set.
    pub fn from_displacement(exps: &[XExp]) -> Self {
        let Some(&a) = exps.first() else {
            return SupportLattice { generators: Vec::new(), seen: BTreeSet::new() };
        };
        let one = XExp::from_integer(1);
        let mut raw: Vec<XExp> = exps
            .iter()
            .flat_map(|&ai| [ai - a, ai - one])
            .filter(|g| *g > XExp::zero())
            .collect();
        raw.sort();
        raw.dedup();
        Self::from_generators(raw)
    }

    pub fn from_generators(mut raw: Vec<XExp>) -> Self {
        raw.retain(|g| *g > XExp::zero());
        raw.sort();
        raw.dedup();
        let mut gens: Vec<XExp> = Vec::new();
        for g in raw {
            if !in_span(&gens, g) {
                gens.push(g);
            }
        }
        SupportLattice { generators: gens, seen: BTreeSet::new() }
    }

    /// Nonnegative integer combination of the generators?
    pub fn contains(&self, b: XExp) -> bool {
        in_span(&self.generators, b)
    }

    /// Record an observed order; returns whether it is a member.
    pub fn observe(&mut self, b: XExp) -> bool {
        self.seen.insert(b);
        self.contains(b)
    }

    /// Smallest positive generator.
    pub fn min_step(&self) -> Option<XExp> {
        self.generators.first().copied()
    }
}

fn in_span(gens: &[XExp], b: XExp) -> bool {
    if b.is_zero() {
        return true;
    }
    if b < XExp::zero() || gens.is_empty() {
        return false;
    }
    let cs: Vec<_> = gens.iter().chain(std::iter::once(&b)).map(|g| xexp_to_coeff(*g)).collect();
    let l: BigInt = lcm_denoms(cs.iter());
    let scale = |q: &XExp| (xexp_to_coeff(*q) * num_rational::BigRational::from_integer(l.clone())).to_integer().to_usize();
    let Some(target) = scale(&b) else { return false };
    if target > 10_000_000 {
        return false;
    }
    let steps: Vec<usize> = gens.iter().filter_map(scale).filter(|s| *s > 0).collect();
    let mut reach = vec![false; target + 1];
    reach[0] = true;
    for i in 1..=target {
        reach[i] = steps.iter().any(|&s| s <= i && reach[i - s]);
    }
    reach[target]
}
