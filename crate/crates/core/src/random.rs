//! Seeded random instances for fuzzing and the self-test suites.

use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::abelian::IntMatrix;
use crate::complex::{self, CellComplex};
use crate::lattice::LatticeFunction;
use crate::quotient::{self, Partition, QuotientMap};
use crate::DisjointSets;

pub use rand::SeedableRng;
pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph on `n` vertices.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> CellComplex {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    CellComplex::new(n, &edges, &[]).expect("simple graph")
}

/// A random complex with at most `max_vertices` vertices: sparse graphs,
/// cycles, wedges, torus grids and disjoint unions of these.
pub fn random_complex(rng: &mut ChaCha8Rng, max_vertices: usize) -> CellComplex {
    let max = max_vertices.max(1);
    let pick = |rng: &mut ChaCha8Rng, lo: usize, hi: usize| rng.gen_range(lo..=hi.max(lo));
    let k = match rng.gen_range(0..6) {
        0 if max >= 3 => complex::cycle(pick(rng, 3, max.min(24))).unwrap(),
        1 if max >= 9 => {
            let limit = (max as f64).sqrt().floor() as usize;
            let r = pick(rng, 3, limit.min(6));
            complex::torus_grid(2, r).unwrap()
        }
        2 if max >= 7 => {
            let arc = pick(rng, 3, 5);
            let n = pick(rng, 1, ((max - 1) / (arc - 1)).min(4));
            complex::wedge_circles(n, arc).unwrap()
        }
        3 if max >= 8 => complex::cube_surface(),
        4 if max >= 6 => {
            let a = random_complex(rng, max / 2);
            let b = random_complex(rng, max - a.vertex_count());
            a.disjoint_union(&b)
        }
        _ => {
            let n = pick(rng, 1, max);
            let p = rng.gen_range(0.5..3.0) / n as f64;
            random_graph(rng, n, p.min(1.0))
        }
    };
    debug_assert!(k.vertex_count() <= max);
    k
}

/// Values that vanish with probability `zero_rate`, otherwise complex with
/// parts in `[-1, 1]`.
pub fn random_function(rng: &mut ChaCha8Rng, k: &CellComplex, zero_rate: f64) -> LatticeFunction {
    let values = (0..k.vertex_count())
        .map(|_| {
            if rng.gen_bool(zero_rate) {
                Complex64::new(0.0, 0.0)
            } else {
                let z = Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                if z.norm() == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    z
                }
            }
        })
        .collect();
    LatticeFunction::new(k, values).expect("finite values")
}

/// A random quotient of a random complex: contracts random edges, then
/// sometimes merges arbitrary vertex pairs so that fibers may disconnect.
pub fn random_quotient(rng: &mut ChaCha8Rng, max_vertices: usize) -> QuotientMap {
    let k = Arc::new(random_complex(rng, max_vertices));
    random_quotient_of(rng, k)
}

pub fn random_quotient_of(rng: &mut ChaCha8Rng, k: Arc<CellComplex>) -> QuotientMap {
    let n = k.vertex_count();
    let mut sets = DisjointSets::new(n);
    let mut edges = k.edges().to_vec();
    edges.shuffle(rng);
    let contract = if edges.is_empty() { 0 } else { rng.gen_range(0..=edges.len().min(n / 2 + 1)) };
    for &(u, v) in edges.iter().take(contract) {
        sets.union(u, v);
    }
    if rng.gen_bool(0.5) {
        for _ in 0..rng.gen_range(1..=2) {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            sets.union(u, v);
        }
    }
    let (labels, _) = sets.canonical_labels();
    let partition = Partition::from_labels(&labels).expect("dense labels");
    quotient::quotient_by_partition(k, &partition).expect("quotient by a partition")
}

/// Entries uniform in `[-bound, bound]`.
pub fn random_int_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: i64) -> IntMatrix {
    let data: Vec<Vec<i64>> = (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-bound..=bound)).collect()).collect();
    IntMatrix::from_rows(&data).expect("rectangular")
}

/// Every set partition of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for label in 0..=max + 1 {
            prefix.push(label);
            extend(prefix, max.max(label), n, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut prefix = vec![0];
    extend(&mut prefix, 0, n, &mut out);
    out
}
