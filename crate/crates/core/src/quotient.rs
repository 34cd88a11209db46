//! Quotient maps between complexes and the equivalent monotonicity criteria:
//! connected fibers, connected preimages of connected sets, and closure of
//! the fiber-constant algebra under taking irreducible parts. Also the
//! component-of-fiber relation `Rc(p)` and the monotone hull it induces.

use std::collections::HashSet;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{CellComplex, VertexSet};
use crate::lattice::{self, LatticeError, LatticeFunction, Tolerance};

/// Codomains up to this size get exhaustive connected-subset enumeration.
pub const EXHAUSTIVE_CODOMAIN_LIMIT: usize = 20;
/// Random connected subsets drawn in sampled mode.
pub const DEFAULT_RANDOM_SUBSETS: usize = 1000;

/// One way in which an assignment fails to be a quotient map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuotientViolation {
    NotSurjective { missing: Vec<usize> },
    AdjacencyViolation { edge: (usize, usize), image: (usize, usize) },
    EdgeNotInImage { edge: (usize, usize) },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuotientError {
    #[error("assignment has {got} entries but the domain has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("vertex index {index} out of range for {vertex_count} vertices")]
    IndexOutOfRange { index: usize, vertex_count: usize },
    #[error("not a valid quotient map: {0:?}")]
    InvalidQuotient(Vec<QuotientViolation>),
    #[error("codomain has {0} vertices; exhaustive enumeration supports at most {EXHAUSTIVE_CODOMAIN_LIMIT}")]
    CodomainTooLargeForExhaustive(usize),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("maps do not compose: codomain of the inner map differs from the domain of the outer map")]
    ComplexMismatch,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// A partition of `0..n` into nonempty classes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    class_of: Vec<usize>,
    class_count: usize,
}

impl Partition {
    /// Builds a partition from class labels, renumbering classes in order of
    /// their smallest element. Labels must be dense: every label below the
    /// maximum must be used.
    pub fn from_labels(labels: &[usize]) -> Result<Self, QuotientError> {
        let count = labels.iter().max().map_or(0, |&m| m + 1);
        let mut used = vec![false; count];
        for &l in labels {
            used[l] = true;
        }
        if let Some(l) = used.iter().position(|u| !u) {
            return Err(QuotientError::InvalidPartition(format!("class {l} is empty")));
        }
        Ok(Self::canonical(labels, count))
    }

    fn canonical(labels: &[usize], count: usize) -> Self {
        let mut relabel = vec![usize::MAX; count];
        let mut next = 0;
        let class_of = labels
            .iter()
            .map(|&l| {
                if relabel[l] == usize::MAX {
                    relabel[l] = next;
                    next += 1;
                }
                relabel[l]
            })
            .collect();
        Self { class_of, class_count: next }
    }

    pub fn from_classes(n: usize, classes: &[VertexSet]) -> Result<Self, QuotientError> {
        let mut labels = vec![usize::MAX; n];
        for (c, class) in classes.iter().enumerate() {
            if class.is_empty() {
                return Err(QuotientError::InvalidPartition(format!("class {c} is empty")));
            }
            for v in class.iter() {
                if v >= n {
                    return Err(QuotientError::IndexOutOfRange { index: v, vertex_count: n });
                }
                if labels[v] != usize::MAX {
                    return Err(QuotientError::InvalidPartition(format!("vertex {v} is in two classes")));
                }
                labels[v] = c;
            }
        }
        if let Some(v) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(QuotientError::InvalidPartition(format!("vertex {v} is in no class")));
        }
        Ok(Self::canonical(&labels, classes.len()))
    }

    pub fn discrete(n: usize) -> Self {
        Self { class_of: (0..n).collect(), class_count: n }
    }

    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn class_of(&self, v: usize) -> usize {
        self.class_of[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.class_of
    }

    pub fn classes(&self) -> Vec<VertexSet> {
        let mut members = vec![Vec::new(); self.class_count];
        for (v, &c) in self.class_of.iter().enumerate() {
            members[c].push(v);
        }
        members.into_iter().map(VertexSet::new).collect()
    }

    /// Every class of `self` lies inside a class of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut image = vec![usize::MAX; self.class_count];
        for v in 0..self.len() {
            let c = self.class_of[v];
            if image[c] == usize::MAX {
                image[c] = other.class_of[v];
            } else if image[c] != other.class_of[v] {
                return false;
            }
        }
        true
    }
}

/// A vertex assignment `K → L`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientMap {
    domain: Arc<CellComplex>,
    codomain: Arc<CellComplex>,
    assignment: Vec<usize>,
}

/// On-disk layout of `map.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapFile {
    pub domain: String,
    pub codomain: String,
    pub assignment: Vec<usize>,
}

impl QuotientMap {
    /// Checks shape only; use [`QuotientMap::validate`] for the quotient
    /// invariants.
    pub fn new(
        domain: Arc<CellComplex>,
        codomain: Arc<CellComplex>,
        assignment: Vec<usize>,
    ) -> Result<Self, QuotientError> {
        if assignment.len() != domain.vertex_count() {
            return Err(QuotientError::LengthMismatch { expected: domain.vertex_count(), got: assignment.len() });
        }
        if let Some(&index) = assignment.iter().find(|&&l| l >= codomain.vertex_count()) {
            return Err(QuotientError::IndexOutOfRange { index, vertex_count: codomain.vertex_count() });
        }
        Ok(Self { domain, codomain, assignment })
    }

    pub fn identity(k: Arc<CellComplex>) -> Self {
        let n = k.vertex_count();
        Self { domain: k.clone(), codomain: k, assignment: (0..n).collect() }
    }

    pub fn domain(&self) -> &Arc<CellComplex> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<CellComplex> {
        &self.codomain
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn apply(&self, v: usize) -> usize {
        self.assignment[v]
    }

    /// All violations of surjectivity, adjacency compatibility and the
    /// requirement that every codomain edge is an image of a domain edge.
    pub fn validate(&self) -> Result<(), Vec<QuotientViolation>> {
        let mut violations = Vec::new();
        let mut hit = vec![false; self.codomain.vertex_count()];
        for &l in &self.assignment {
            hit[l] = true;
        }
        let missing: Vec<usize> = (0..hit.len()).filter(|&l| !hit[l]).collect();
        if !missing.is_empty() {
            violations.push(QuotientViolation::NotSurjective { missing });
        }
        let mut covered = vec![false; self.codomain.edges().len()];
        for &(u, v) in self.domain.edges() {
            let (a, b) = (self.assignment[u], self.assignment[v]);
            if a == b {
                continue;
            }
            match self.codomain.edge_position(a, b) {
                Some(e) => covered[e] = true,
                None => violations.push(QuotientViolation::AdjacencyViolation { edge: (u, v), image: (a, b) }),
            }
        }
        for (e, &c) in covered.iter().enumerate() {
            if !c {
                violations.push(QuotientViolation::EdgeNotInImage { edge: self.codomain.edges()[e] });
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    fn require_valid(&self) -> Result<(), QuotientError> {
        self.validate().map_err(QuotientError::InvalidQuotient)
    }

    pub fn fiber(&self, l: usize) -> Result<VertexSet, QuotientError> {
        if l >= self.codomain.vertex_count() {
            return Err(QuotientError::IndexOutOfRange { index: l, vertex_count: self.codomain.vertex_count() });
        }
        Ok(self.assignment.iter().enumerate().filter(|&(_, &a)| a == l).map(|(v, _)| v).collect())
    }

    pub fn fibers(&self) -> Vec<VertexSet> {
        let mut members = vec![Vec::new(); self.codomain.vertex_count()];
        for (v, &l) in self.assignment.iter().enumerate() {
            members[l].push(v);
        }
        members.into_iter().map(VertexSet::new).collect()
    }

    pub fn fiber_partition(&self) -> Partition {
        Partition::canonical(&self.assignment, self.codomain.vertex_count())
    }

    pub fn preimage(&self, set: &VertexSet) -> VertexSet {
        let inside = set.mask(self.codomain.vertex_count());
        self.assignment.iter().enumerate().filter(|&(_, &l)| inside[l]).map(|(v, _)| v).collect()
    }

    /// Koopman operator `g ↦ g ∘ p`.
    pub fn pullback(&self, g: &LatticeFunction) -> Result<LatticeFunction, QuotientError> {
        if g.complex_id() != self.codomain.id() || g.len() != self.codomain.vertex_count() {
            return Err(LatticeError::ComplexMismatch.into());
        }
        let values = self.assignment.iter().map(|&l| g.values()[l]).collect();
        Ok(LatticeFunction::new(&self.domain, values)?)
    }

    /// Whether `f` on the domain takes a single value on every fiber.
    pub fn is_fiber_constant(&self, f: &LatticeFunction) -> bool {
        let mut seen: Vec<Option<Complex64>> = vec![None; self.codomain.vertex_count()];
        for (v, &l) in self.assignment.iter().enumerate() {
            let x = f.values()[v];
            match seen[l] {
                None => seen[l] = Some(x),
                Some(y) if y != x => return false,
                _ => {}
            }
        }
        true
    }

    pub fn to_file(&self, domain: &str, codomain: &str) -> MapFile {
        MapFile { domain: domain.into(), codomain: codomain.into(), assignment: self.assignment.clone() }
    }
}

/// Criterion (a): every fiber induces a connected subgraph.
pub fn is_monotone_fibers(p: &QuotientMap) -> Result<bool, QuotientError> {
    p.require_valid()?;
    Ok(p.fibers().iter().all(|f| p.domain.is_connected_set(f)))
}

/// How criterion (b) chooses the connected codomain sets it checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PreimageMode {
    /// Exhaustive when the codomain is small enough, sampled otherwise.
    Auto { seed: u64 },
    Exhaustive,
    /// Singletons, edges and `random_subsets` random connected sets.
    Sampled { random_subsets: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreimageVerdict {
    pub monotone: bool,
    pub exhaustive: bool,
    pub sets_checked: usize,
    /// A connected codomain set with disconnected preimage.
    pub witness: Option<VertexSet>,
}

struct PreimageChecker<'a> {
    p: &'a QuotientMap,
    fibers: Vec<VertexSet>,
    inside: Vec<bool>,
    checked: usize,
}

impl<'a> PreimageChecker<'a> {
    fn new(p: &'a QuotientMap) -> Self {
        Self { p, fibers: p.fibers(), inside: vec![false; p.domain.vertex_count()], checked: 0 }
    }

    fn connected_preimage(&mut self, set: impl Iterator<Item = usize> + Clone) -> bool {
        self.checked += 1;
        for l in set.clone() {
            for v in self.fibers[l].iter() {
                self.inside[v] = true;
            }
        }
        let comps = self.p.domain.components_within(&self.inside).len();
        for l in set {
            for v in self.fibers[l].iter() {
                self.inside[v] = false;
            }
        }
        comps == 1
    }
}

fn bits(mask: u32) -> impl Iterator<Item = usize> + Clone {
    (0..32).filter(move |&i| mask & (1 << i) != 0)
}

/// Calls `visit` on every connected vertex subset of a graph with at most 32
/// vertices given by adjacency masks, each exactly once. Stops early when
/// `visit` returns `false`; returns whether enumeration completed.
pub(crate) fn for_each_connected_subset(adj: &[u32], mut visit: impl FnMut(u32) -> bool) -> bool {
    fn extend(
        set: u32,
        mut ext: u32,
        closed_nbhd: u32,
        above: u32,
        adj: &[u32],
        visit: &mut dyn FnMut(u32) -> bool,
    ) -> bool {
        if !visit(set) {
            return false;
        }
        while ext != 0 {
            let w = ext.trailing_zeros() as usize;
            ext &= !(1 << w);
            let exclusive = adj[w] & !closed_nbhd & above;
            if !extend(set | (1 << w), ext | exclusive, closed_nbhd | adj[w], above, adj, visit) {
                return false;
            }
        }
        true
    }
    let n = adj.len();
    assert!(n <= 32);
    for v in 0..n {
        let above = if v + 1 >= 32 { 0 } else { !0u32 << (v + 1) };
        let above = if n >= 32 { above } else { above & ((1u32 << n) - 1) };
        if !extend(1 << v, adj[v] & above, adj[v] | (1 << v), above, adj, &mut visit) {
            return false;
        }
    }
    true
}

fn random_connected_subset(k: &CellComplex, rng: &mut ChaCha8Rng) -> VertexSet {
    let n = k.vertex_count();
    let target = rng.gen_range(1..=n);
    let start = rng.gen_range(0..n);
    let mut inside = vec![false; n];
    inside[start] = true;
    let mut members = vec![start];
    let mut frontier: Vec<usize> = k.neighbors(start).to_vec();
    while members.len() < target && !frontier.is_empty() {
        let w = frontier.swap_remove(rng.gen_range(0..frontier.len()));
        if inside[w] {
            continue;
        }
        inside[w] = true;
        members.push(w);
        frontier.extend(k.neighbors(w).iter().copied().filter(|&x| !inside[x]));
    }
    VertexSet::new(members)
}

/// Criterion (b): the preimage of every connected codomain set is connected.
pub fn is_monotone_connected_preimages(p: &QuotientMap, mode: PreimageMode) -> Result<PreimageVerdict, QuotientError> {
    p.require_valid()?;
    let m = p.codomain.vertex_count();
    let exhaustive = match mode {
        PreimageMode::Exhaustive if m > EXHAUSTIVE_CODOMAIN_LIMIT => {
            return Err(QuotientError::CodomainTooLargeForExhaustive(m))
        }
        PreimageMode::Exhaustive => true,
        PreimageMode::Auto { .. } => m <= EXHAUSTIVE_CODOMAIN_LIMIT,
        PreimageMode::Sampled { .. } => false,
    };
    let mut checker = PreimageChecker::new(p);
    let mut witness = None;
    if exhaustive {
        let adj: Vec<u32> = (0..m)
            .map(|l| p.codomain.neighbors(l).iter().fold(0u32, |acc, &x| acc | (1 << x)))
            .collect();
        for_each_connected_subset(&adj, |set| {
            if checker.connected_preimage(bits(set)) {
                true
            } else {
                witness = Some(bits(set).collect());
                false
            }
        });
    } else {
        let (random_subsets, seed) = match mode {
            PreimageMode::Sampled { random_subsets, seed } => (random_subsets, seed),
            PreimageMode::Auto { seed } => (DEFAULT_RANDOM_SUBSETS, seed),
            PreimageMode::Exhaustive => unreachable!(),
        };
        let singletons = (0..m).map(|l| VertexSet::new([l]));
        let edges = p.codomain.edges().iter().map(|&(a, b)| VertexSet::new([a, b]));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let random: Vec<VertexSet> =
            (0..random_subsets).map(|_| random_connected_subset(&p.codomain, &mut rng)).collect();
        for set in singletons.chain(edges).chain(random) {
            if !checker.connected_preimage(set.iter()) {
                witness = Some(set);
                break;
            }
        }
    }
    Ok(PreimageVerdict { monotone: witness.is_none(), exhaustive, sets_checked: checker.checked, witness })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraicVerdict {
    pub monotone: bool,
    /// Codomain vertices whose pulled-back indicator has a part that is not
    /// fiber-constant.
    pub failing_indicators: Vec<usize>,
    pub samples: usize,
    pub failing_samples: usize,
}

fn parts_fiber_constant(p: &QuotientMap, f: &LatticeFunction) -> Result<bool, QuotientError> {
    Ok(lattice::irr(&p.domain, f, Tolerance::EXACT)?.iter().all(|g| p.is_fiber_constant(g)))
}

/// Criteria (e)/(f): the fiber-constant algebra `T_p(C(L))` contains the
/// irreducible parts of its members. Pulled-back vertex indicators form a
/// complete witness family; `samples` random fiber-constant functions are
/// checked in addition.
pub fn is_monotone_algebraic(p: &QuotientMap, samples: usize, seed: u64) -> Result<AlgebraicVerdict, QuotientError> {
    p.require_valid()?;
    let m = p.codomain.vertex_count();
    let mut failing_indicators = Vec::new();
    for l in 0..m {
        let ind = LatticeFunction::indicator(&p.codomain, &VertexSet::new([l]))?;
        if !parts_fiber_constant(p, &p.pullback(&ind)?)? {
            failing_indicators.push(l);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failing_samples = 0;
    for _ in 0..samples {
        let values = (0..m)
            .map(|_| {
                if rng.gen_bool(0.35) {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                }
            })
            .collect();
        let g = LatticeFunction::new(&p.codomain, values)?;
        if !parts_fiber_constant(p, &p.pullback(&g)?)? {
            failing_samples += 1;
        }
    }
    Ok(AlgebraicVerdict {
        monotone: failing_indicators.is_empty() && failing_samples == 0,
        failing_indicators,
        samples,
        failing_samples,
    })
}

/// `Rc(p)`: two vertices are related when they lie in the same connected
/// component of their common fiber.
pub fn rc_partition(p: &QuotientMap) -> Result<Partition, QuotientError> {
    p.require_valid()?;
    let n = p.domain.vertex_count();
    let mut labels = vec![0; n];
    let mut next = 0;
    for fiber in p.fibers() {
        for comp in p.domain.components_within(&fiber.mask(n)) {
            for v in comp.iter() {
                labels[v] = next;
            }
            next += 1;
        }
    }
    Ok(Partition::canonical(&labels, next))
}

/// The factorization `p = phat ∘ q` through the monotone hull.
#[derive(Debug, Clone, PartialEq)]
pub struct Hull {
    pub q: QuotientMap,
    pub phat: QuotientMap,
}

/// Quotient by `Rc(p)` and the induced map onto the codomain of `p`.
pub fn monotone_hull(p: &QuotientMap) -> Result<Hull, QuotientError> {
    let rc = rc_partition(p)?;
    let q = quotient_by_partition(p.domain.clone(), &rc)?;
    let mut phat_assignment = vec![0; rc.class_count()];
    for v in 0..p.domain.vertex_count() {
        phat_assignment[rc.class_of(v)] = p.assignment[v];
    }
    let phat = QuotientMap::new(q.codomain.clone(), p.codomain.clone(), phat_assignment)?;
    Ok(Hull { q, phat })
}

pub(crate) fn square_key(sq: &[usize; 4]) -> [usize; 4] {
    let mut best: Option<[usize; 4]> = None;
    for start in 0..4 {
        for dir in [1usize, 3] {
            let cand = [sq[start], sq[(start + dir) % 4], sq[(start + 2 * dir) % 4], sq[(start + 3 * dir) % 4]];
            if best.map_or(true, |b| cand < b) {
                best = Some(cand);
            }
        }
    }
    best.unwrap()
}

/// `K → K/P`: one codomain vertex per class, codomain edges the images of
/// domain edges with distinct endpoints, and codomain squares the images of
/// domain squares landing on four distinct vertices.
pub fn quotient_by_partition(k: Arc<CellComplex>, partition: &Partition) -> Result<QuotientMap, QuotientError> {
    if partition.len() != k.vertex_count() {
        return Err(QuotientError::InvalidPartition(format!(
            "partition covers {} vertices but the complex has {}",
            partition.len(),
            k.vertex_count()
        )));
    }
    let label = |v: usize| partition.class_of(v);
    let mut seen_edges = HashSet::new();
    let mut edges = Vec::new();
    for &(u, v) in k.edges() {
        let (a, b) = (label(u), label(v));
        if a != b {
            let e = if a < b { (a, b) } else { (b, a) };
            if seen_edges.insert(e) {
                edges.push(e);
            }
        }
    }
    let mut seen_squares = HashSet::new();
    let mut squares = Vec::new();
    for sq in k.squares() {
        let img = sq.map(label);
        let distinct = (0..4).all(|i| (i + 1..4).all(|j| img[i] != img[j]));
        if distinct && seen_squares.insert(square_key(&img)) {
            squares.push(img);
        }
    }
    let codomain = CellComplex::new(partition.class_count().max(1), &edges, &squares)
        .map_err(|e| QuotientError::InvalidPartition(e.to_string()))?;
    QuotientMap::new(k, Arc::new(codomain), partition.labels().to_vec())
}

/// `outer ∘ inner`.
pub fn compose(outer: &QuotientMap, inner: &QuotientMap) -> Result<QuotientMap, QuotientError> {
    if *inner.codomain != *outer.domain {
        return Err(QuotientError::ComplexMismatch);
    }
    let assignment = inner.assignment.iter().map(|&l| outer.assignment[l]).collect();
    QuotientMap::new(inner.domain.clone(), outer.codomain.clone(), assignment)
}

/// `v ↦ v mod m` from the cycle `C_{k·m}` onto `C_m`.
pub fn cycle_cover(total: usize, m: usize) -> Result<QuotientMap, QuotientError> {
    let k = Arc::new(
        crate::complex::cycle(total).map_err(|e| QuotientError::InvalidPartition(e.to_string()))?,
    );
    let labels: Vec<usize> = (0..total).map(|v| v % m).collect();
    quotient_by_partition(k, &Partition::from_labels(&labels)?)
}

/// Collapses the vertices of `class` to one point.
pub fn collapse(k: Arc<CellComplex>, class: &VertexSet) -> Result<QuotientMap, QuotientError> {
    k.check_vertex_set(class).map_err(|e| QuotientError::InvalidPartition(e.to_string()))?;
    let Some(target) = class.min() else {
        return Ok(QuotientMap::identity(k));
    };
    let labels: Vec<usize> = (0..k.vertex_count()).map(|v| if class.contains(v) { target } else { v }).collect();
    let mut relabel = vec![usize::MAX; labels.len()];
    let mut next = 0;
    let dense: Vec<usize> = labels
        .iter()
        .map(|&l| {
            if relabel[l] == usize::MAX {
                relabel[l] = next;
                next += 1;
            }
            relabel[l]
        })
        .collect();
    quotient_by_partition(k, &Partition::from_labels(&dense)?)
}
