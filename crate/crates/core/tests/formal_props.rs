use fatou_core::formal::*;
use fatou_core::parse::*;
use fatou_core::series::*;
use num_traits::{One, Zero};
use proptest::prelude::*;

const FIXTURES: &[(&str, i64)] = &[
    ("x - x^2", 6),
    ("x - x^2*u", 3),
    ("x - x^2 - x^3", 5),
    ("x - x^2 + x^(5/2)", 4),
    ("x - x^3 + x^4*u", 5),
    ("x - x^2*l + x^3", 3),
    ("x/(1+x)", 6),
    ("x - 2*x^(3/2) + x^2*u", 3),
];

fn xe(n: i64) -> XExp {
    XExp::from_integer(n)
}

fn solve(src: &str, n: i64) -> (DulacGermSpec, FatouExpansion) {
    let g = parse_dulac(src).unwrap();
    let f = formal_fatou(&g, &SolverOptions::new(n, 6)).unwrap();
    (g, f)
}

/// Taylor(Psi, f) - Psi - 1 from the blocks, each block's increment taken
/// separately.
fn abel_residual(g: &DulacGermSpec, f: &FatouExpansion, cutoff: XExp) -> BlockSeries {
    let g = g.expanded_to(cutoff + xe(4), 8).unwrap();
    let disp = g.displacement().neg();
    let mut acc = BlockSeries::one().neg().with_x_cutoff(Some(cutoff));
    for b in &f.blocks {
        acc = acc.add(&taylor_increment_blocks(&b.derivative_blocks(), &disp, cutoff).unwrap());
    }
    acc
}

#[test]
fn abel_residual_is_beyond_the_truncation() {
    for &(src, n) in FIXTURES {
        let (g, f) = solve(src, n);
        let a = f.parabolic_order;
        let cutoff = f.rhs_cutoff + xe(1);
        let r = abel_residual(&g, &f, cutoff);
        if let Some((b, _)) = r.leading() {
            assert!(b > xe(n) - (a - 1), "{src}: residual order {b}");
            assert!(b > f.rhs_cutoff, "{src}: residual order {b} within the cutoff {}", f.rhs_cutoff);
            if let Some(e) = &f.residual_order {
                assert_eq!(e.g0, b, "{src}");
            }
        }
    }
}

#[test]
fn abel_residual_through_the_ell_expansion() {
    // the same check through l-expanded series and the Transseries product
    for &(src, n) in FIXTURES {
        let (g, f) = solve(src, n);
        let cutoff = f.rhs_cutoff;
        let gt = g.expanded_to(cutoff + xe(4), 8).unwrap().displacement().to_transseries(8);
        let mut acc = Transseries::one().neg();
        for b in &f.blocks {
            acc = acc.add(&taylor_increment(b, &gt, cutoff, 8).unwrap());
        }
        assert!(acc.terms().keys().all(|e| e.g0 > cutoff), "{src}: {acc}");
    }
}

#[test]
fn seeded_runs_agree() {
    for &(src, n) in FIXTURES {
        let (g, f) = solve(src, n);
        for seed in [1u64, 7, 1234] {
            let opts = SolverOptions { seed: Some(seed), ..SolverOptions::new(n, 6) };
            let h = formal_fatou(&g, &opts).unwrap();
            assert_eq!(h.series(), f.series(), "{src} seed {seed}");
            assert_eq!(h.blocks, f.blocks);
            assert_eq!(h.rho, f.rho);
        }
    }
}

#[test]
fn structural_invariants() {
    for &(src, n) in FIXTURES {
        let (g, f) = solve(src, n);
        let a = f.parabolic_order;
        assert!(f.blocks.windows(2).all(|w| w[0].beta < w[1].beta), "{src}");
        let l2 = f.ell2_monomials();
        assert!(l2.len() <= 1 && l2.iter().all(|(e, _)| e.g2 == -1), "{src}");
        assert!(f.series().terms().keys().all(|e| e.g2 == 0 || (e.g2 == -1 && e.g0.is_zero() && e.g1 == 0)));
        assert_eq!(f.rho_is_zero(), l2.is_empty());
        // block orders come from right-hand sides in the lattice
        let gens = SupportLattice::from_displacement(&g.exponents()[1..]).generators;
        for b in &f.blocks {
            let rhs = b.beta + a - 1;
            assert!(brute_span(&gens, rhs), "{src}: {rhs} not in span of {gens:?}");
            assert!(f.lattice.contains(rhs));
        }
        for (i, b) in f.blocks.iter().enumerate() {
            let want = if i < f.critical_index { BlockKind::Infinite } else { BlockKind::Infinitesimal };
            assert_eq!(b.kind, want, "{src} block {i}");
        }
    }
}

fn brute_span(gens: &[XExp], b: XExp) -> bool {
    if b.is_zero() {
        return true;
    }
    gens.iter().any(|g| *g <= b && brute_span(gens, b - g))
}

#[test]
fn lattice_examples() {
    let l = SupportLattice::from_displacement(&[xe(2)]);
    assert_eq!(l.generators, vec![xe(1)]);
    let l = SupportLattice::from_displacement(&[xe(2), XExp::new(5, 2)]);
    assert_eq!(l.generators, vec![XExp::new(1, 2)]);
    let l = SupportLattice::from_displacement(&[XExp::new(3, 2), xe(2)]);
    assert_eq!(l.generators, vec![XExp::new(1, 2)]);
}

#[test]
fn first_step_examples() {
    // delta = 1, f = x - x^2 u: Psi' = -x^-2 l
    let g = parse_dulac("x - x^2*u").unwrap().expanded_to(xe(8), 8).unwrap();
    let (b, _) = solve_block_step(&BlockSeries::one().with_x_cutoff(Some(xe(4))), &g, xe(4), 8).unwrap();
    assert_eq!(b.beta, xe(-1));
    let want = RationalU::new(PolyU::from_ints(&[-1]), PolyU::from_ints(&[0, 1]));
    assert_eq!(b.generator, want);
    for (k, c) in [(1, 1), (2, 1), (3, 2), (4, 6), (5, 24)] {
        assert_eq!(b.expansion.coeff(&ExponentTriple::new(xe(-1), k, 0)), Coeff::from_integer(c.into()));
    }
    // delta = x^(1/2) u against x - x^2: a block of order -1/2
    let g = parse_dulac("x - x^2").unwrap();
    let delta = BlockSeries::block(XExp::new(1, 2), RationalU::from_poly(PolyU::from_ints(&[0, 1])))
        .with_x_cutoff(Some(xe(3)));
    let (b, next) = solve_block_step(&delta, &g, xe(3), 8).unwrap();
    assert_eq!(b.beta, XExp::new(-1, 2));
    assert_eq!(b.derivative_blocks(), BlockSeries::block(XExp::new(-3, 2), RationalU::from_poly(PolyU::from_ints(&[0, -1]))));
    assert!(next.leading().is_none_or(|(o, _)| o > XExp::new(1, 2)));
    // delta = 1, f = x - x^2: the block x^-1 leaves 1 - 1/(1 - x)
    let (b, next) = solve_block_step(&BlockSeries::one().with_x_cutoff(Some(xe(6))), &g, xe(6), 8).unwrap();
    assert_eq!(b.expansion.to_string(), "x^-1");
    let want = BlockSeries::from_blocks((1..=6).map(|k| (xe(k), RationalU::constant(-Coeff::one()))));
    assert_eq!(next, want.with_x_cutoff(Some(xe(6))));
    // and x/(1+x) leaves nothing
    let m = parse_dulac("x/(1+x)").unwrap().expanded_to(xe(8), 8).unwrap();
    let (_, next) = solve_block_step(&BlockSeries::one().with_x_cutoff(Some(xe(6))), &m, xe(6), 8).unwrap();
    assert!(next.is_zero());
}

#[test]
fn solver_errors() {
    let g = parse_dulac("x - x^2").unwrap();
    let e = solve_block_step(&BlockSeries::monomial(Coeff::one(), xe(5)).with_x_cutoff(Some(xe(6))), &g, xe(4), 4);
    assert!(matches!(e, Err(FormalError::RhsBeyondTruncation { .. })));
    let opts = SolverOptions { max_blocks: 2, ..SolverOptions::new(6, 4) };
    assert!(matches!(formal_fatou(&parse_dulac("x - x^2 - x^3").unwrap(), &opts), Err(FormalError::Budget(2))));
}

#[test]
fn generator_family_cross_checks() {
    for xi in ["x^2", "x^3", "x^2*l^-1", "-x^2 - x^3", "x^2 + x^(5/2)", "x^2 + x^3*l"] {
        let cc = cross_check_generator(&parse_expr(xi).unwrap(), 4, 6).unwrap();
        assert!(cc.agrees, "{xi}: {} vs {}", cc.solver.series(), cc.generator.series());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // x - c2 x^2 - c3 x^3 u^k: solver output is independent of the seed and
    // leaves a residual beyond the cutoff
    #[test]
    fn random_germs(c2 in 1i64..4, c3 in -3i64..4, k in 0usize..3, seed in any::<u64>()) {
        let mut p = vec![0i64; k + 1];
        p[k] = c3;
        let g = DulacGermSpec::from_block_series(&BlockSeries::from_blocks([
            (xe(1), RationalU::one()),
            (xe(2), RationalU::constant(Coeff::from_integer((-c2).into()))),
            (xe(3), RationalU::from_poly(PolyU::from_ints(&p)).neg()),
        ])).unwrap();
        let f = formal_fatou(&g, &SolverOptions::new(3, 5)).unwrap();
        let h = formal_fatou(&g, &SolverOptions { seed: Some(seed), ..SolverOptions::new(3, 5) }).unwrap();
        prop_assert_eq!(f.series(), h.series());
        let r = abel_residual(&g, &f, f.rhs_cutoff + xe(1));
        prop_assert!(r.leading().is_none_or(|(b, _)| b > f.rhs_cutoff));
        prop_assert_eq!(f.blocks[0].expansion.coeff(&ExponentTriple::new(xe(-1), 0, 0)), Coeff::new(1.into(), c2.into()));
    }
}
