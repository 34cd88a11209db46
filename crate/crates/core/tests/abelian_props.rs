use mefkit::abelian::{self, GroupOrder, IntMatrix};
use mefkit::random;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::Rng;

fn det_i128(m: &[Vec<i128>]) -> i128 {
    match m.len() {
        0 => 1,
        1 => m[0][0],
        n => (0..n)
            .map(|c| {
                let minor: Vec<Vec<i128>> =
                    m[1..].iter().map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, &x)| x).collect()).collect();
                let sign = if c % 2 == 0 { 1 } else { -1 };
                sign * m[0][c] * det_i128(&minor)
            })
            .sum(),
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n).filter(|b| b.count_ones() as usize == k).map(|b| (0..n).filter(|&i| b >> i & 1 == 1).collect()).collect()
}

/// gcd of all `k × k` minors.
fn minor_gcd(m: &[Vec<i64>], k: usize) -> i128 {
    let (rows, cols) = (m.len(), m[0].len());
    let mut g = 0i128;
    for rs in subsets(rows, k) {
        for cs in subsets(cols, k) {
            let sub: Vec<Vec<i128>> = rs.iter().map(|&r| cs.iter().map(|&c| m[r][c] as i128).collect()).collect();
            g = g.gcd(&det_i128(&sub));
        }
    }
    g
}

fn to_i64(m: &IntMatrix) -> Vec<Vec<i64>> {
    m.to_rows_i64().expect("small entries")
}

fn matrix_strategy(max_rows: usize, max_cols: usize, bound: i64) -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(move |(r, c)| prop::collection::vec(prop::collection::vec(-bound..=bound, c), r))
}

fn unimodular(rng: &mut random::Rng8, n: usize) -> Vec<Vec<i64>> {
    let mut u: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    if n < 2 {
        return u;
    }
    for _ in 0..6 {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a == b {
            u.swap(a, (a + 1) % n);
            continue;
        }
        let c = rng.gen_range(-2..=2);
        for j in 0..n {
            u[a][j] += c * u[b][j];
        }
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn smith_form_matches_minor_gcds(rows in matrix_strategy(4, 4, 9)) {
        let m = IntMatrix::from_rows(&rows).unwrap();
        let s = abelian::smith_normal_form(&m);
        prop_assert_eq!(s.u.mul(&m).mul(&s.v), s.d.clone());
        prop_assert_eq!(s.u.det().abs(), BigInt::from(1));
        prop_assert_eq!(s.v.det().abs(), BigInt::from(1));
        prop_assert_eq!(s.v.mul(&s.v_inverse), IntMatrix::identity(s.v.rows()));
        for r in 0..s.d.rows() {
            for c in 0..s.d.cols() {
                prop_assert!(r == c || s.d.get(r, c).is_zero());
                prop_assert!(!s.d.get(r, c).is_negative());
            }
        }
        let factors = s.invariant_factors();
        prop_assert!(factors.windows(2).all(|w| w[1].is_multiple_of(&w[0])));
        let mut product = BigInt::from(1);
        for k in 1..=rows.len().min(rows[0].len()) {
            let g = minor_gcd(&rows, k);
            if k <= factors.len() {
                product *= &factors[k - 1];
                prop_assert_eq!(BigInt::from(g), product.clone());
            } else {
                prop_assert_eq!(g, 0);
            }
        }
        prop_assert_eq!(abelian::rank(&m), factors.len());
    }

    #[test]
    fn kernel_order_matches_torsion_count(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = random::rng(seed);
        let bound = [0, 12, 4, 2][n];
        let m = random::random_int_matrix(&mut rng, n, n, bound);
        let det = m.det().abs();
        prop_assume!(!det.is_zero());
        let d: i64 = i64::try_from(&det).unwrap();
        prop_assume!((d as u64).pow(n as u32) <= 200_000);
        let rows = to_i64(&m);
        let mut count = 0u64;
        let mut c = vec![0i64; n];
        for _ in 0..(d as u64).pow(n as u32) {
            if rows.iter().all(|row| row.iter().zip(&c).map(|(a, x)| a * x).sum::<i64>().rem_euclid(d) == 0) {
                count += 1;
            }
            for x in c.iter_mut() {
                *x += 1;
                if *x < d {
                    break;
                }
                *x = 0;
            }
        }
        let class = abelian::classify_torus_hom(&m);
        prop_assert!(class.kernel_finite && class.surjective);
        prop_assert_eq!(&class.kernel_order, &GroupOrder::Finite(det.clone()));
        prop_assert_eq!(BigInt::from(count), det);
    }

    #[test]
    fn kernel_finite_iff_rank_is_full(rows in matrix_strategy(4, 4, 3)) {
        let m = IntMatrix::from_rows(&rows).unwrap();
        let class = abelian::classify_torus_hom(&m);
        let (n, dim) = (m.rows(), m.cols());
        prop_assert_eq!(class.kernel_finite, class.rank == dim);
        prop_assert_eq!(class.surjective, class.rank == n);
        prop_assert_eq!(class.image_torus_dim, class.rank);
        if class.surjective && class.kernel_finite {
            prop_assert_eq!(n, dim);
        }
        prop_assert_eq!(matches!(class.kernel_order, GroupOrder::Infinite), !class.kernel_finite);
    }

    #[test]
    fn lattice_rank_ignores_unimodular_change(seed in any::<u64>(), count in 0usize..5, dim in 1usize..4) {
        let mut rng = random::rng(seed);
        let vectors: Vec<Vec<i64>> = (0..count).map(|_| (0..dim).map(|_| rng.gen_range(-6..=6)).collect()).collect();
        let u = unimodular(&mut rng, count);
        let changed: Vec<Vec<i64>> = u
            .iter()
            .map(|coeffs| (0..dim).map(|j| coeffs.iter().zip(&vectors).map(|(c, v)| c * v[j]).sum()).collect())
            .collect();
        let a = abelian::lattice_rank_in(dim, &vectors).unwrap();
        let b = abelian::lattice_rank_in(dim, &changed).unwrap();
        prop_assert_eq!(&a, &b);
        for v in &vectors {
            let x = abelian::lattice_coordinates(&a.basis, v).expect("generator lies in the lattice");
            let back: Vec<BigInt> = (0..dim).map(|j| x.iter().enumerate().map(|(i, xi)| xi * a.basis.get(i, j)).sum()).collect();
            prop_assert_eq!(back, v.iter().map(|&e| BigInt::from(e)).collect::<Vec<_>>());
        }
    }
}

#[test]
fn lattice_rank_examples() {
    let l = abelian::lattice_rank(&[vec![2, 4], vec![1, 2]]).unwrap();
    assert_eq!((l.rank, to_i64(&l.basis)), (1, vec![vec![1, 2]]));
    assert_eq!(abelian::lattice_rank_in(3, &[]).unwrap().rank, 0);
}
