//! Reproducible self-test suites, one per acceptance criterion. Reports hold
//! no timings, so equal seeds give byte-identical JSON.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;

use crate::abelian::{self, GroupOrder, IntMatrix};
use crate::complex::{self, CellComplex, VertexSet};
use crate::dynamics::{self, EquicontinuityParams, GridFunction, TorusSystem};
use crate::fixtures;
use crate::lattice::{self, LatticeFunction, Tolerance};
use crate::quotient::{self, PreimageMode, QuotientMap};
use crate::random;
use crate::rational::Rotation;
use crate::spectral::{self, MefParams, SpectralError, ROTATION_TOL, WARPED_TOL};

pub const DEFAULT_SEED: u64 = 20240607;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }

    fn count(name: impl Into<String>, failures: usize, total: usize) -> Self {
        Self::new(name, failures == 0, format!("{}/{total} passed", total - failures))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub criterion: u8,
    pub description: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub struct Suite {
    pub name: &'static str,
    pub criterion: u8,
    pub description: &'static str,
    run: fn(u64) -> Vec<Check>,
}

impl Suite {
    pub fn run(&self, seed: u64) -> SuiteReport {
        let checks = (self.run)(seed);
        SuiteReport {
            suite: self.name.to_string(),
            criterion: self.criterion,
            description: self.description.to_string(),
            seed,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

pub const SUITES: &[Suite] = &[
    Suite { name: "betti", criterion: 1, description: "exact Betti numbers of the fixture complexes", run: betti },
    Suite { name: "decomposition", criterion: 2, description: "irreducible decomposition: reconstruction, orthogonality, irreducibility, uniqueness", run: decomposition },
    Suite { name: "monotone-equivalence", criterion: 3, description: "agreement of the fiber, preimage and algebraic monotonicity criteria", run: monotone_equivalence },
    Suite { name: "hull", criterion: 4, description: "monotone hull factorization p = phat . q", run: hull },
    Suite { name: "irr-equicontinuity", criterion: 5, description: "equicontinuity of a family agrees with that of its irreducible parts", run: irr_equicontinuity },
    Suite { name: "mef", criterion: 6, description: "equicontinuous factor of the warped product, rotation and identity systems", run: mef },
    Suite { name: "bound", criterion: 7, description: "m <= b1/b0 and point spectrum rank <= b1 on every system fixture", run: bound },
    Suite { name: "snf", criterion: 8, description: "Smith normal form identities and torus homomorphism kernels", run: snf },
    Suite { name: "determinism", criterion: 9, description: "repeated runs with one seed give byte-identical reports", run: determinism },
];

pub fn suite(name: &str) -> Option<&'static Suite> {
    SUITES.iter().find(|s| s.name == name)
}

pub fn run_all(seed: u64) -> Vec<SuiteReport> {
    SUITES.iter().map(|s| s.run(seed)).collect()
}

fn betti(_seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let mut expect = |name: String, k: &CellComplex, b1: usize| {
        let got = k.betti1();
        out.push(Check::new(name, got == b1, format!("b0 = {}, b1 = {got}, expected b1 = {b1}", k.betti0())));
    };
    expect("torus_grid(2,4)".into(), &complex::torus_grid(2, 4).unwrap(), 2);
    expect("cube_surface".into(), &complex::cube_surface(), 0);
    for n in 1..=5 {
        expect(format!("wedge_circles({n},4)"), &complex::wedge_circles(n, 4).unwrap(), n);
    }
    expect("C8".into(), &complex::cycle(8).unwrap(), 1);
    for (name, b1) in [("torus_2_4", 2), ("cube_surface", 0), ("wedge_3_4", 3), ("c8", 1), ("two_circles", 2)] {
        expect(format!("fixture {name}"), &fixtures::complex(name).unwrap(), b1);
    }
    out
}

/// Number of ways to split the support of `f` into blocks that are connected
/// and clopen in the support, and whether the only one is `irr(f)`.
fn decompositions(k: &CellComplex, f: &LatticeFunction) -> (usize, bool) {
    let supp: Vec<usize> = f.support(Tolerance::EXACT).iter().collect();
    let parts = lattice::irr(k, f, Tolerance::EXACT).unwrap();
    let expected: Vec<VertexSet> = parts.iter().map(|p| p.support(Tolerance::EXACT)).collect();
    let mut valid = 0;
    let mut matches = true;
    for labels in random::set_partitions(supp.len()) {
        let count = labels.iter().max().map_or(0, |m| m + 1);
        let blocks: Vec<VertexSet> =
            (0..count).map(|b| VertexSet::new(supp.iter().zip(&labels).filter(|(_, &l)| l == b).map(|(&v, _)| v))).collect();
        let ok = blocks
            .iter()
            .all(|b| k.is_connected_set(b) && lattice::is_clopen_in_support(k, f, b, Tolerance::EXACT).unwrap());
        if ok {
            valid += 1;
            let mut sorted = blocks.clone();
            sorted.sort_by_key(|b| b.min());
            matches &= sorted == expected;
        }
    }
    (valid, matches)
}

fn decomposition(seed: u64) -> Vec<Check> {
    let mut rng = random::rng(seed);
    let total = 500;
    let (mut recon, mut orth, mut irred, mut count) = (0, 0, 0, 0);
    for _ in 0..total {
        let k = random::random_complex(&mut rng, 32);
        let rate = rng.gen_range(0.1..0.7);
        let f = random::random_function(&mut rng, &k, rate);
        let parts = lattice::irreducible_decomposition(&k, &f, Tolerance::EXACT).unwrap();
        let sum = lattice::reconstruct(&parts).unwrap().unwrap_or_else(|| LatticeFunction::zero(&k));
        recon += usize::from(sum.values() != f.values());
        let orthogonal = parts.iter().enumerate().all(|(i, a)| parts[i + 1..].iter().all(|b| lattice::orthogonal(a, b).unwrap()));
        orth += usize::from(!orthogonal);
        irred += usize::from(!parts.iter().all(|p| lattice::is_irreducible(&k, p, Tolerance::EXACT).unwrap()));
        let comps = k.connected_components(&f.support(Tolerance::EXACT)).unwrap().len();
        count += usize::from(comps != parts.len());
    }
    let mut out = vec![
        Check::count("reconstruction error 0 at eps = 0", recon, total),
        Check::count("parts pairwise orthogonal", orth, total),
        Check::count("parts irreducible", irred, total),
        Check::count("part count = support component count", count, total),
    ];
    for n in [5, 6] {
        let k = complex::cycle(n).unwrap();
        let (mut bad, mut supports) = (0, 0);
        for mask in 0u32..1 << n {
            let values: Vec<Complex64> =
                (0..n).map(|v| if mask >> v & 1 == 1 { Complex64::new(1.0 + v as f64, 0.5) } else { Complex64::zero() }).collect();
            let f = LatticeFunction::new(&k, values).unwrap();
            let (valid, matches) = decompositions(&k, &f);
            supports += 1;
            bad += usize::from(valid != 1 || !matches);
        }
        out.push(Check::count(format!("unique decomposition, every support of C{n}"), bad, supports));
    }
    out
}

struct Agreement {
    total: usize,
    disagreements: usize,
    monotone: usize,
}

fn criteria_agree(p: &QuotientMap, seed: u64, acc: &mut Agreement) {
    let a = quotient::is_monotone_fibers(p).unwrap();
    let b = quotient::is_monotone_connected_preimages(p, PreimageMode::Auto { seed }).unwrap().monotone;
    let e = quotient::is_monotone_algebraic(p, 16, seed).unwrap().monotone;
    acc.total += 1;
    acc.monotone += usize::from(a);
    acc.disagreements += usize::from(a != b || a != e);
}

fn monotone_equivalence(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for n in [5, 6] {
        let k = Arc::new(complex::cycle(n).unwrap());
        let mut acc = Agreement { total: 0, disagreements: 0, monotone: 0 };
        let mut invalid = 0;
        for (i, labels) in random::set_partitions(n).into_iter().enumerate() {
            let partition = quotient::Partition::from_labels(&labels).unwrap();
            let p = quotient::quotient_by_partition(k.clone(), &partition).unwrap();
            if p.validate().is_err() {
                invalid += 1;
                continue;
            }
            criteria_agree(&p, seed ^ i as u64, &mut acc);
        }
        out.push(Check::new(
            format!("all partitions of C{n}"),
            acc.disagreements == 0 && invalid == 0,
            format!("{}/{} agree, {} monotone, {invalid} invalid", acc.total - acc.disagreements, acc.total, acc.monotone),
        ));
    }
    let mut rng = random::rng(seed);
    let mut acc = Agreement { total: 0, disagreements: 0, monotone: 0 };
    for i in 0..200 {
        let p = random::random_quotient(&mut rng, 64);
        criteria_agree(&p, seed.wrapping_add(i), &mut acc);
    }
    out.push(Check::new(
        "200 random quotients",
        acc.disagreements == 0,
        format!("{}/{} agree, {} monotone", acc.total - acc.disagreements, acc.total, acc.monotone),
    ));
    out
}

fn hull_ok(p: &QuotientMap, seed: u64) -> bool {
    let h = quotient::monotone_hull(p).unwrap();
    let composed = quotient::compose(&h.phat, &h.q).unwrap();
    let factorizes = composed.assignment() == p.assignment() && **composed.codomain() == **p.codomain();
    let q_monotone = quotient::is_monotone_fibers(&h.q).unwrap()
        && quotient::is_monotone_connected_preimages(&h.q, PreimageMode::Auto { seed }).unwrap().monotone
        && quotient::is_monotone_algebraic(&h.q, 8, seed).unwrap().monotone;
    let mut expected: Vec<VertexSet> =
        p.fibers().iter().flat_map(|f| p.domain().connected_components(f).unwrap()).collect();
    expected.sort_by_key(|c| c.min());
    let mut got = h.q.fibers();
    got.sort_by_key(|c| c.min());
    factorizes && q_monotone && got == expected && h.q.validate().is_ok() && h.phat.validate().is_ok()
}

fn hull(seed: u64) -> Vec<Check> {
    let mut rng = random::rng(seed);
    let total = 200;
    let failures = (0..total).filter(|&i| !hull_ok(&random::random_quotient(&mut rng, 64), seed ^ i as u64)).count();
    let doubling = fixtures::map("doubling_c8").unwrap();
    let h = quotient::monotone_hull(&doubling).unwrap();
    let identity = h.q.assignment().iter().enumerate().all(|(i, &l)| i == l) && fixtures::same_cells(h.q.codomain(), doubling.domain());
    let arc = fixtures::map("arc_collapse_c8").unwrap();
    let ha = quotient::monotone_hull(&arc).unwrap();
    vec![
        Check::count("phat . q = p, q monotone, fibers of q = components of fibers of p", failures, total),
        Check::new("doubling map hull is the identity", identity && hull_ok(&doubling, seed), format!("q = {:?}", h.q.assignment())),
        Check::new("monotone map is its own hull", ha.q.assignment() == arc.assignment(), format!("q = {:?}", ha.q.assignment())),
    ]
}

/// Separated smooth bumps: heights in `[0.5, 1]`, widths in `[0.1, L - 0.1]`
/// where `L = 1/bumps`, so supports are at least `0.05` apart.
pub fn bump_function(rng: &mut random::Rng8, grid: usize, bumps: usize) -> GridFunction {
    let arc = 1.0 / bumps as f64;
    let shape: Vec<(f64, f64, Complex64)> = (0..bumps)
        .map(|b| {
            let w = rng.gen_range(0.1..=arc - 0.1);
            let slack = (arc - w - 0.05) / 2.0;
            let c = b as f64 * arc + arc / 2.0 + rng.gen_range(-slack..=slack);
            let h = rng.gen_range(0.5..=1.0);
            (c, w, Complex64::from_polar(h, rng.gen_range(0.0..TAU)))
        })
        .collect();
    GridFunction::from_fn(1, grid, |x| {
        let mut acc = Complex64::zero();
        for &(c, w, amp) in &shape {
            let mut d = (x[0] - c).abs();
            d = d.min(1.0 - d);
            if d < w / 2.0 {
                let s = (PI * d / w).cos().powi(2);
                if s > 1e-6 {
                    acc += amp * s;
                }
            }
        }
        acc
    })
}

fn random_decimal(rng: &mut random::Rng8) -> Rotation {
    let digits: u64 = rng.gen_range(500_000_000..9_500_000_000);
    Rotation::parse(&format!("0.{digits:010}")).unwrap()
}

fn irr_equicontinuity(seed: u64) -> Vec<Check> {
    let mut rng = random::rng(seed);
    let grid = 256;
    let params = EquicontinuityParams::defaults(grid);
    let (mut disagree, mut rot_true, mut dbl_false, mut rotations, mut doublings) = (0, 0, 0, 0, 0);
    let total = 50;
    for i in 0..total {
        let sys = if i % 2 == 0 {
            rotations += 1;
            TorusSystem::rotation(vec![random_decimal(&mut rng)], grid).unwrap()
        } else {
            doublings += 1;
            let b = if i % 4 == 1 { Rotation::zero() } else { random_decimal(&mut rng) };
            TorusSystem::new(vec![vec![2]], vec![b], vec![dynamics::Warp::Identity], grid).unwrap()
        };
        let members = rng.gen_range(1..=3);
        let family: Vec<GridFunction> = (0..members).map(|_| {
            let bumps = rng.gen_range(2..=3);
            bump_function(&mut rng, grid, bumps)
        }).collect();
        let res = dynamics::irr_equicontinuity_check(&sys, &family, &params, Tolerance::GRID).unwrap();
        disagree += usize::from(!res.agree);
        if i % 2 == 0 {
            rot_true += usize::from(res.family.verdict && res.irreducible_parts.verdict);
        } else {
            dbl_false += usize::from(!res.family.verdict && !res.irreducible_parts.verdict);
        }
    }
    vec![
        Check::count("family verdict = irreducible-parts verdict", disagree, total),
        Check::new("rotations: both equicontinuous", rot_true == rotations, format!("{rot_true}/{rotations}")),
        Check::new("doubling maps: both not equicontinuous", dbl_false == doublings, format!("{dbl_false}/{doublings}")),
    ]
}

fn mef(_seed: u64) -> Vec<Check> {
    let model = complex::torus_grid(2, 4).unwrap();
    let a = 0.6180339887;
    let warped = TorusSystem::warped_product(Rotation::parse("0.6180339887").unwrap(), 256).unwrap();
    let mut out = Vec::new();
    match spectral::mef_extract(&warped, &model, &MefParams::new(5, WARPED_TOL)) {
        Ok(r) => {
            let phase_err = r.rotation.first().map_or(f64::INFINITY, |t| (t - a).abs());
            let only_rotation = r.passing.iter().all(|h| h.k[1] == 0) && r.passing.len() == 11;
            out.push(Check::new("warped product: m = 1", r.m == 1, format!("m = {}, basis {:?}", r.m, r.frequency_lattice_basis)));
            out.push(Check::new("warped product: phase within 1e-6 of a", phase_err <= 1e-6, format!("error {phase_err:.3e}")));
            out.push(Check::new(
                "warped product: bound 1 <= b1/b0 = 2",
                r.bound_ok && r.bound_b1 == 2 && r.bound_b0 == 1,
                format!("b1 = {}, b0 = {}", r.bound_b1, r.bound_b0),
            ));
            out.push(Check::new(
                "warped product: passing set is {(k,0)}",
                only_rotation,
                format!("{} hits, residual margin {:.3e} / {:.3e}", r.passing.len(), r.max_hit_residual, r.min_reject_residual.unwrap_or(f64::INFINITY)),
            ));
            out.push(Check::new("warped product: applicable", r.applicable, r.invariance.note.clone()));
        }
        Err(e) => out.push(Check::new("warped product", false, e.to_string())),
    }
    let rot = fixtures::system("rotation_t2").unwrap();
    match spectral::mef_extract(&rot, &model, &MefParams::new(5, ROTATION_TOL)) {
        Ok(r) => out.push(Check::new("rotation on T^2: m = 2", r.m == 2 && r.applicable, format!("m = {}", r.m))),
        Err(e) => out.push(Check::new("rotation on T^2: m = 2", false, e.to_string())),
    }
    let id = fixtures::system("identity_t2").unwrap();
    match spectral::mef_extract(&id, &model, &MefParams::new(3, ROTATION_TOL)) {
        Ok(r) => out.push(Check::new("identity: applicable = false", !r.applicable, r.invariance.note.clone())),
        Err(e) => out.push(Check::new("identity: applicable = false", false, e.to_string())),
    }
    out
}

fn bound(_seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for fx in fixtures::SYSTEMS {
        let sys = fixtures::system(fx.name).unwrap();
        let model = fixtures::complex(fx.model).unwrap();
        let check = match spectral::mef_extract(&sys, &model, &MefParams::new(fx.kmax, fx.tol)) {
            Ok(r) => match spectral::point_spectrum_group(&r) {
                Ok(ps) => Check::new(
                    fx.name,
                    r.bound_ok && ps.rank <= r.bound_b1,
                    format!("m = {}, b1 = {}, b0 = {}, rank = {}, applicable = {}", r.m, r.bound_b1, r.bound_b0, ps.rank, r.applicable),
                ),
                Err(e) => Check::new(fx.name, false, e.to_string()),
            },
            Err(SpectralError::BoundViolation(r)) => {
                Check::new(fx.name, false, format!("violation: m = {}, b1 = {}, b0 = {}", r.m, r.bound_b1, r.bound_b0))
            }
            Err(e) => Check::new(fx.name, false, e.to_string()),
        };
        out.push(check);
    }
    out
}

fn snf_holds(m: &IntMatrix) -> bool {
    let s = abelian::smith_normal_form(m);
    if s.u.mul(m).mul(&s.v) != s.d || !s.u.is_unimodular() || !s.v.is_unimodular() {
        return false;
    }
    let (r, c) = (m.rows(), m.cols());
    let mut diag = Vec::new();
    for i in 0..r {
        for j in 0..c {
            let x = s.d.get(i, j);
            if i == j {
                diag.push(x.clone());
            } else if !x.is_zero() {
                return false;
            }
        }
    }
    diag.iter().all(|d| !d.is_negative()) && diag.windows(2).all(|w| w[1].is_multiple_of(&w[0]) || (w[0].is_zero() && w[1].is_zero()))
}

/// Points `y/d`, `y ∈ [0, d)^n`, with `M y ≡ 0 mod d`.
pub fn torsion_points(m: &[Vec<i64>], d: i64) -> u64 {
    let n = m.len();
    let total = (d as u64).pow(n as u32);
    let mut count = 0;
    let mut y = vec![0i64; n];
    for code in 0..total {
        let mut c = code;
        for yi in y.iter_mut() {
            *yi = (c % d as u64) as i64;
            c /= d as u64;
        }
        if m.iter().all(|row| row.iter().zip(&y).map(|(a, b)| a * b).sum::<i64>().rem_euclid(d) == 0) {
            count += 1;
        }
    }
    count
}

fn snf(seed: u64) -> Vec<Check> {
    let mut rng = random::rng(seed);
    let total = 500;
    let (mut snf_bad, mut dichotomy_bad) = (0, 0);
    for _ in 0..total {
        let (r, c) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
        let m = random::random_int_matrix(&mut rng, r, c, 20);
        snf_bad += usize::from(!snf_holds(&m));
        let h = abelian::classify_torus_hom(&m);
        let rank = abelian::rank(&m);
        let ok = h.kernel_finite == (rank == c) && h.surjective == (rank == r) && (!(h.surjective && h.kernel_finite) || r == c);
        dichotomy_bad += usize::from(!ok);
    }
    let mut kernel_bad = 0;
    let mut found = 0;
    while found < 100 {
        let n = rng.gen_range(1..=3);
        let m = random::random_int_matrix(&mut rng, n, n, 6);
        let det = m.det().abs();
        if det.is_zero() || det > BigInt::from(50) {
            continue;
        }
        found += 1;
        let d = det.to_i64().unwrap();
        let rows = m.to_rows_i64().unwrap();
        let enumerated = torsion_points(&rows, d);
        let h = abelian::classify_torus_hom(&m);
        kernel_bad += usize::from(h.kernel_order != GroupOrder::Finite(BigInt::from(enumerated)) || enumerated != d as u64);
    }
    vec![
        Check::count("U.M.V = D, U and V unimodular, divisibility chain", snf_bad, total),
        Check::count("kernel finite <=> rank = m; surjective <=> rank = n", dichotomy_bad, total),
        Check::count("kernel order = |det| = torsion point count", kernel_bad, 100),
    ]
}

/// Suites compared by the determinism check; the remaining ones are covered
/// by their own acceptance runs.
pub const DETERMINISM_SUITES: &[&str] = &["betti", "decomposition", "monotone-equivalence", "hull", "irr-equicontinuity", "mef", "bound", "snf"];

fn determinism(seed: u64) -> Vec<Check> {
    DETERMINISM_SUITES
        .iter()
        .map(|&name| {
            let s = suite(name).unwrap();
            let a = serde_json::to_string(&s.run(seed)).unwrap();
            let b = serde_json::to_string(&s.run(seed)).unwrap();
            Check::new(format!("{name} twice"), a == b, format!("{} bytes", a.len()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_suites_pass() {
        for name in ["betti", "mef"] {
            let r = suite(name).unwrap().run(DEFAULT_SEED);
            assert!(r.passed, "{r:#?}");
        }
    }

    #[test]
    fn torsion_oracle() {
        assert_eq!(torsion_points(&[vec![2, 0], vec![0, 3]], 6), 6);
        assert_eq!(torsion_points(&[vec![2]], 2), 2);
    }
}
