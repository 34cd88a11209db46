use std::f64::consts::TAU;
use std::sync::Arc;

use mefkit::complex::{self, CellComplex};
use mefkit::dynamics::{self, EquicontinuityParams, FiniteAction, GridFunction, TorusSystem};
use mefkit::lattice::{self, Tolerance};
use mefkit::quotient;
use mefkit::random::{self, Rng8};
use mefkit::rational::Rotation;
use mefkit::spectral::character;
use mefkit::Execution;
use num_complex::Complex64;
use num_integer::Integer;
use proptest::prelude::*;
use rand::Rng;

fn random_rotation(rng: &mut Rng8) -> Rotation {
    Rotation::parse(&format!("0.{:010}", rng.gen_range(1..10_000_000_000u64))).unwrap()
}

fn random_system(rng: &mut Rng8, grid: usize) -> TorusSystem {
    match rng.gen_range(0..4) {
        0 => TorusSystem::rotation(vec![random_rotation(rng)], grid).unwrap(),
        1 => TorusSystem::rotation(vec![random_rotation(rng), random_rotation(rng)], grid).unwrap(),
        2 => TorusSystem::warped_product(random_rotation(rng), grid).unwrap(),
        _ => TorusSystem::doubling(grid).unwrap(),
    }
}

fn random_grid_function(rng: &mut Rng8, dim: usize, grid: usize) -> GridFunction {
    let total = grid.pow(dim as u32);
    let values = (0..total).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    GridFunction::new(dim, grid, values).unwrap()
}

/// Zero outside two blobs, so the parts are nontrivial.
fn two_bumps(rng: &mut Rng8, dim: usize, grid: usize) -> GridFunction {
    let centers: Vec<Vec<f64>> = (0..2).map(|_| (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
    let width = rng.gen_range(0.05..0.2);
    GridFunction::from_fn(dim, grid, |x| {
        let bump = |c: &[f64]| {
            let d = x.iter().zip(c).map(|(a, b)| ((a - b).rem_euclid(1.0)).min((b - a).rem_euclid(1.0))).fold(0.0, f64::max);
            (1.0 - d / width).max(0.0)
        };
        Complex64::new(bump(&centers[0]) + 0.5 * bump(&centers[1]), 0.0)
    })
}

/// Cycle rotations and reflections, or torus translations and the axis swap.
fn random_action(rng: &mut Rng8) -> FiniteAction {
    if rng.gen_bool(0.5) {
        let n = rng.gen_range(3..=20);
        let k = Arc::new(complex::cycle(n).unwrap());
        let gens = (0..rng.gen_range(1..=2))
            .map(|_| {
                let s = rng.gen_range(0..n);
                if rng.gen_bool(0.5) { (0..n).map(|v| (v + s) % n).collect() } else { (0..n).map(|v| (n + s - v) % n).collect() }
            })
            .collect();
        FiniteAction::new(k, gens).unwrap()
    } else {
        let r = rng.gen_range(3..=6);
        let k = Arc::new(complex::torus_grid(2, r).unwrap());
        let (a, b) = (rng.gen_range(0..r), rng.gen_range(0..r));
        let shift: Vec<usize> = (0..r * r).map(|v| (v % r + a) % r + ((v / r + b) % r) * r).collect();
        let swap: Vec<usize> = (0..r * r).map(|v| v / r + (v % r) * r).collect();
        FiniteAction::new(k, vec![shift, swap]).unwrap()
    }
}

fn params(grid: usize) -> EquicontinuityParams {
    let mut p = EquicontinuityParams::defaults(grid);
    p.horizon = 24;
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generators_are_monotone_and_preserve_parts(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let act = random_action(&mut rng);
        let k: &CellComplex = act.complex();
        let f = random::random_function(&mut rng, k, 0.5);
        let parts = lattice::irr(k, &f, Tolerance::EXACT).unwrap();
        for i in 0..act.generators().len() {
            prop_assert!(quotient::is_monotone_fibers(&act.generator_map(i).unwrap()).unwrap());
            let g = act.pullback(i, &f).unwrap();
            prop_assert_eq!(lattice::irr(k, &g, Tolerance::EXACT).unwrap().len(), parts.len());
            for p in &parts {
                let q = act.pullback(i, p).unwrap();
                prop_assert!(lattice::is_irreducible(k, &q, Tolerance::EXACT).unwrap());
            }
        }
    }

    #[test]
    fn cyclic_orbits_have_equal_size(n in 3usize..40, shift in 0usize..40) {
        let act = FiniteAction::cycle_rotation(n, shift % n).unwrap();
        let classes = dynamics::orbit_partition(&act).classes();
        let size = n / n.gcd(&(shift % n)).max(1);
        let expected = if shift % n == 0 { 1 } else { size };
        prop_assert!(classes.iter().all(|c| c.len() == expected));
        prop_assert_eq!(dynamics::is_invariant_constant(&act), classes.len() == 1);
        let trivial = dynamics::maximal_trivial_factor(&act).unwrap();
        prop_assert_eq!(trivial.codomain().vertex_count(), classes.len());
    }

    #[test]
    fn omega_is_bounded_and_monotone_in_delta(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let sys = random_system(&mut rng, 16);
        let f = random_grid_function(&mut rng, sys.dim(), 16);
        let tables = dynamics::modulus_tables(&sys, std::slice::from_ref(&f), &params(16)).unwrap();
        let sup = f.sup_norm();
        for row in &tables[0].omega {
            prop_assert!(row.iter().all(|&w| (0.0..=2.0 * sup + 1e-12).contains(&w)));
            prop_assert!(row.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn character_families_meet_the_closed_form(seed in any::<u64>(), dim in 1usize..=2) {
        let mut rng = random::rng(seed);
        let grid = 32;
        let sys = TorusSystem::rotation((0..dim).map(|_| random_rotation(&mut rng)).collect(), grid).unwrap();
        let ks: Vec<Vec<i64>> = (0..rng.gen_range(1..4)).map(|_| (0..dim).map(|_| rng.gen_range(-3..=3)).collect()).collect();
        let family: Vec<GridFunction> = ks.iter().map(|k| character(k, grid)).collect();
        let offsets: Vec<Vec<i64>> = (0..3i64.pow(dim as u32))
            .map(|c| (0..dim).map(|i| (c / 3i64.pow(i as u32)) % 3 - 1).collect())
            .collect();
        let bound = ks
            .iter()
            .flat_map(|k| offsets.iter().map(move |o| {
                let phase = TAU * k.iter().zip(o).map(|(a, b)| (a * b) as f64).sum::<f64>() / grid as f64;
                (Complex64::from_polar(1.0, phase) - 1.0).norm()
            }))
            .fold(0.0, f64::max);
        let mut p = params(grid);
        p.threshold = bound + 1e-12;
        let est = dynamics::family_equicontinuity(&sys, &family, &p).unwrap();
        prop_assert!(est.verdict, "best {} bound {}", est.best_bound, bound);
    }

    #[test]
    fn irreducible_parts_give_the_same_verdict(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let sys = random_system(&mut rng, 16);
        let family: Vec<GridFunction> = (0..2).map(|_| two_bumps(&mut rng, sys.dim(), 16)).collect();
        let res = dynamics::irr_equicontinuity_check(&sys, &family, &params(16), Tolerance::GRID).unwrap();
        prop_assert!(res.agree);
        prop_assert_eq!(res.family.verdict, res.irreducible_parts.verdict);
    }

    #[test]
    fn execution_modes_agree(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let sys = random_system(&mut rng, 16);
        let f = random_grid_function(&mut rng, sys.dim(), 16);
        let mut p = params(16);
        p.execution = Execution::Sequential;
        let seq = dynamics::modulus_tables(&sys, std::slice::from_ref(&f), &p).unwrap();
        p.execution = Execution::Parallel;
        let par = dynamics::modulus_tables(&sys, std::slice::from_ref(&f), &p).unwrap();
        prop_assert_eq!(seq, par);
        prop_assert_eq!(
            dynamics::pullback_with(&sys, &f, Execution::Sequential).unwrap(),
            dynamics::pullback_with(&sys, &f, Execution::Parallel).unwrap()
        );
    }
}

#[test]
fn rotation_is_equicontinuous_and_doubling_is_not() {
    let grid = 64;
    let mut rng = random::rng(3);
    let family: Vec<GridFunction> = (0..2).map(|_| two_bumps(&mut rng, 1, grid)).collect();
    let rotation = TorusSystem::rotation(vec![Rotation::parse("0.6180339887").unwrap()], grid).unwrap();
    let doubling = TorusSystem::doubling(grid).unwrap();
    let p = EquicontinuityParams::defaults(grid);
    for (sys, expected) in [(rotation, true), (doubling, false)] {
        let res = dynamics::irr_equicontinuity_check(&sys, &family, &p, Tolerance::GRID).unwrap();
        assert_eq!((res.family.verdict, res.irreducible_parts.verdict), (expected, expected));
    }
    let zero = GridFunction::constant(1, grid, Complex64::new(0.0, 0.0));
    let sys = TorusSystem::doubling(grid).unwrap();
    assert!(dynamics::family_equicontinuity(&sys, &[zero], &p).unwrap().verdict);
}
