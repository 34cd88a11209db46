use mefkit::complex::VertexSet;
use mefkit::lattice::{self, LatticeFunction, Tolerance};
use mefkit::random;
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parts_reconstruct_exactly_and_are_orthogonal(seed in any::<u64>(), zero_rate in 0.0f64..0.8) {
        let mut rng = random::rng(seed);
        let k = random::random_complex(&mut rng, 48);
        let f = random::random_function(&mut rng, &k, zero_rate);
        let parts = lattice::irreducible_decomposition(&k, &f, Tolerance::EXACT).unwrap();
        let sum = lattice::reconstruct(&parts).unwrap().unwrap_or_else(|| LatticeFunction::zero(&k));
        prop_assert_eq!(sum.values(), f.values());
        for (i, a) in parts.iter().enumerate() {
            prop_assert!(lattice::is_irreducible(&k, a, Tolerance::EXACT).unwrap());
            for b in &parts[i + 1..] {
                prop_assert!(lattice::orthogonal(a, b).unwrap());
            }
        }
        let mins: Vec<usize> = parts.iter().map(|p| VertexSet::min(&p.support(Tolerance::EXACT)).unwrap()).collect();
        prop_assert!(mins.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn decomposition_is_unique(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let k = random::random_complex(&mut rng, 8);
        let f = random::random_function(&mut rng, &k, 0.35);
        let supp = f.support(Tolerance::EXACT);
        let vertices = supp.as_slice().to_vec();
        let expected: Vec<VertexSet> = lattice::irr(&k, &f, Tolerance::EXACT)
            .unwrap()
            .iter()
            .map(|p| p.support(Tolerance::EXACT))
            .collect();
        let mut found = 0;
        for labels in random::set_partitions(vertices.len()) {
            let blocks = labels.iter().max().map_or(0, |m| m + 1);
            let sets: Vec<VertexSet> = (0..blocks)
                .map(|b| vertices.iter().zip(&labels).filter(|(_, &l)| l == b).map(|(&v, _)| v).collect())
                .collect();
            let admissible = sets.iter().all(|s| {
                k.is_connected_set(s) && lattice::is_clopen_in_support(&k, &f, s, Tolerance::EXACT).unwrap()
            });
            if admissible {
                found += 1;
                let mut sorted = sets.clone();
                sorted.sort_by_key(|s| s.min());
                prop_assert_eq!(&sorted, &expected);
            }
        }
        prop_assert_eq!(found, 1);
    }

    #[test]
    fn absolute_value_has_the_same_parts(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let k = random::random_complex(&mut rng, 48);
        let f = random::random_function(&mut rng, &k, 0.4);
        let supports = |g: &LatticeFunction| -> Vec<VertexSet> {
            lattice::irr(&k, g, Tolerance::EXACT).unwrap().iter().map(|p| p.support(Tolerance::EXACT)).collect()
        };
        prop_assert_eq!(supports(&f), supports(&f.abs()));
    }

    #[test]
    fn truncations_increase_to_each_part(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let k = random::random_complex(&mut rng, 32);
        let raw = random::random_function(&mut rng, &k, 0.3).abs();
        let f = LatticeFunction::real(&k, &raw.values().iter().map(|z| z.re).collect::<Vec<_>>()).unwrap();
        let min_positive = f.values().iter().map(|z| z.re).filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min);
        for g in lattice::irr(&k, &f, Tolerance::EXACT).unwrap() {
            let x = VertexSet::min(&g.support(Tolerance::EXACT)).unwrap();
            let mut previous: Option<LatticeFunction> = None;
            for n in 1..=200usize {
                let fn_ = f.shifted_positive_part(2.0 / n as f64).unwrap();
                if fn_.values()[x].re <= 0.0 {
                    continue;
                }
                let parts = lattice::irr(&k, &fn_, Tolerance::EXACT).unwrap();
                let gn = parts.into_iter().find(|p| p.support(Tolerance::EXACT).contains(x)).unwrap();
                for (a, b) in gn.values().iter().zip(g.values()) {
                    prop_assert!(a.re <= b.re);
                }
                if let Some(prev) = &previous {
                    for (a, b) in prev.values().iter().zip(gn.values()) {
                        prop_assert!(a.re <= b.re);
                    }
                }
                if 2.0 / (n as f64) < min_positive {
                    prop_assert!(gn.sub(&g).unwrap().sup_norm() <= 2.0 / n as f64 + 1e-12);
                }
                previous = Some(gn);
            }
        }
    }

    #[test]
    fn tolerance_drops_small_values_only(seed in any::<u64>(), eps in 0.0f64..0.5) {
        let mut rng = random::rng(seed);
        let k = random::random_complex(&mut rng, 48);
        let f = random::random_function(&mut rng, &k, 0.2);
        let tol = Tolerance::new(eps).unwrap();
        let parts = lattice::irreducible_decomposition(&k, &f, tol).unwrap();
        let sum = lattice::reconstruct(&parts).unwrap().unwrap_or_else(|| LatticeFunction::zero(&k));
        prop_assert!(sum.sub(&f).unwrap().sup_norm() <= eps);
        prop_assert!(parts.iter().all(|p| p.sup_norm() > eps));
    }
}

#[test]
fn constant_on_two_circles_splits_in_two() {
    let k = mefkit::fixtures::complex("two_circles").unwrap();
    let f = LatticeFunction::constant(&k, Complex64::new(1.0, 0.0));
    assert_eq!(lattice::irr(&k, &f, Tolerance::EXACT).unwrap().len(), 2);
    assert!(Tolerance::new(-1.0).is_err());
}
