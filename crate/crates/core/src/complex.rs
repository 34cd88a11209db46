//! Finite cubical complexes (vertices, edges, square 2-cells) used as models
//! of compact, locally connected spaces, together with their connected
//! components and exact Betti numbers `b0` and `b1`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComplexError {
    #[error("a complex needs at least one vertex")]
    NoVertices,
    #[error("edge {{{0},{0}}} is a self-loop")]
    SelfLoop(usize),
    #[error("edge {{{0},{1}}} appears more than once")]
    DuplicateEdge(usize, usize),
    #[error("vertex index {index} out of range for {vertex_count} vertices")]
    IndexOutOfRange { index: usize, vertex_count: usize },
    #[error("square {square:?} uses boundary pair {{{u},{v}}} which is not an edge")]
    SquareBoundaryMissing { square: [usize; 4], u: usize, v: usize },
    #[error("square {0:?} repeats a vertex")]
    DegenerateSquare([usize; 4]),
    #[error("grid resolution {0} is too small (need at least 3)")]
    ResolutionTooSmall(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Structural fingerprint of a complex. Two complexes with equal contents
/// share an id; functions and maps use it to check they live on the same
/// space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ComplexId(pub u64);

impl fmt::Display for ComplexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// On-disk layout of `complex.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexFile {
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub squares: Vec<[usize; 4]>,
}

/// Sorted, duplicate-free set of vertex indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSet(Vec<usize>);

impl VertexSet {
    pub fn new<I: IntoIterator<Item = usize>>(members: I) -> Self {
        let mut v: Vec<usize> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn full(vertex_count: usize) -> Self {
        Self((0..vertex_count).collect())
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::iter::Copied<std::slice::Iter<'_, usize>> {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn min(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.iter().all(|v| other.contains(v))
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        VertexSet::new(self.iter().chain(other.iter()))
    }

    /// Membership mask of length `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for v in self.iter() {
            m[v] = true;
        }
        m
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        VertexSet::new(iter)
    }
}

/// A validated 2-dimensional cubical complex.
///
/// Edges are stored as sorted pairs in input order. Squares keep their cyclic
/// vertex order, which fixes the orientation used by the boundary map.
#[derive(Debug, Clone)]
pub struct CellComplex {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
    squares: Vec<[usize; 4]>,
    adjacency: Vec<Vec<usize>>,
    edge_index: HashMap<(usize, usize), usize>,
    id: ComplexId,
}

impl PartialEq for CellComplex {
    fn eq(&self, other: &Self) -> bool {
        self.vertex_count == other.vertex_count
            && self.edges == other.edges
            && self.squares == other.squares
    }
}

impl Eq for CellComplex {}

fn sorted_pair(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

fn fingerprint(vertex_count: usize, edges: &[(usize, usize)], squares: &[[usize; 4]]) -> ComplexId {
    // FNV-1a over the structural data; stable across runs and platforms.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    feed(vertex_count as u64);
    feed(edges.len() as u64);
    for &(u, v) in edges {
        feed(u as u64);
        feed(v as u64);
    }
    feed(squares.len() as u64);
    for s in squares {
        for &v in s {
            feed(v as u64);
        }
    }
    ComplexId(h)
}

impl CellComplex {
    /// Validates and builds a complex.
    pub fn new(
        vertex_count: usize,
        edges: &[(usize, usize)],
        squares: &[[usize; 4]],
    ) -> Result<Self, ComplexError> {
        if vertex_count == 0 {
            return Err(ComplexError::NoVertices);
        }
        let check = |index: usize| {
            if index >= vertex_count {
                Err(ComplexError::IndexOutOfRange { index, vertex_count })
            } else {
                Ok(())
            }
        };
        let mut normalized = Vec::with_capacity(edges.len());
        let mut edge_index = HashMap::with_capacity(edges.len());
        for &(u, v) in edges {
            check(u)?;
            check(v)?;
            if u == v {
                return Err(ComplexError::SelfLoop(u));
            }
            let e = sorted_pair(u, v);
            if edge_index.insert(e, normalized.len()).is_some() {
                return Err(ComplexError::DuplicateEdge(e.0, e.1));
            }
            normalized.push(e);
        }
        for sq in squares {
            for &v in sq {
                check(v)?;
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    if sq[i] == sq[j] {
                        return Err(ComplexError::DegenerateSquare(*sq));
                    }
                }
            }
            for i in 0..4 {
                let (u, v) = (sq[i], sq[(i + 1) % 4]);
                if !edge_index.contains_key(&sorted_pair(u, v)) {
                    return Err(ComplexError::SquareBoundaryMissing { square: *sq, u, v });
                }
            }
        }
        let mut adjacency = vec![Vec::new(); vertex_count];
        for &(u, v) in &normalized {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        let id = fingerprint(vertex_count, &normalized, squares);
        Ok(Self {
            vertex_count,
            edges: normalized,
            squares: squares.to_vec(),
            adjacency,
            edge_index,
            id,
        })
    }

    pub fn from_file(file: &ComplexFile) -> Result<Self, ComplexError> {
        let edges: Vec<(usize, usize)> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::new(file.vertices, &edges, &file.squares)
    }

    pub fn to_file(&self) -> ComplexFile {
        ComplexFile {
            vertices: self.vertex_count,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
            squares: self.squares.clone(),
        }
    }

    pub fn id(&self) -> ComplexId {
        self.id
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn squares(&self) -> &[[usize; 4]] {
        &self.squares
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_index.contains_key(&sorted_pair(u, v))
    }

    pub fn edge_position(&self, u: usize, v: usize) -> Option<usize> {
        self.edge_index.get(&sorted_pair(u, v)).copied()
    }

    pub fn check_vertex_set(&self, set: &VertexSet) -> Result<(), ComplexError> {
        match set.as_slice().last() {
            Some(&index) if index >= self.vertex_count => Err(ComplexError::IndexOutOfRange {
                index,
                vertex_count: self.vertex_count,
            }),
            _ => Ok(()),
        }
    }

    /// Connected components of the subgraph induced on `set`, each sorted,
    /// listed in order of their smallest vertex. Squares play no role: their
    /// boundaries are already edges.
    pub fn connected_components(&self, set: &VertexSet) -> Result<Vec<VertexSet>, ComplexError> {
        self.check_vertex_set(set)?;
        Ok(self.components_within(&set.mask(self.vertex_count)))
    }

    pub(crate) fn components_within(&self, inside: &[bool]) -> Vec<VertexSet> {
        let mut seen = vec![false; self.vertex_count];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..self.vertex_count {
            if !inside[start] || seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for &w in &self.adjacency[v] {
                    if inside[w] && !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            out.push(VertexSet::new(comp));
        }
        out
    }

    /// Whether the induced subgraph on `set` is connected. The empty set is
    /// not connected.
    pub fn is_connected_set(&self, set: &VertexSet) -> bool {
        if set.is_empty() {
            return false;
        }
        self.components_within(&set.mask(self.vertex_count)).len() == 1
    }

    pub fn betti0(&self) -> usize {
        self.components_within(&vec![true; self.vertex_count]).len()
    }

    /// Signed boundary of every square as a sparse column over the edges.
    /// An edge traversed from its lower to its higher vertex gets `+1`.
    pub fn square_boundaries(&self) -> Vec<Vec<(usize, i64)>> {
        self.squares
            .iter()
            .map(|sq| {
                let mut col: BTreeMap<usize, i64> = BTreeMap::new();
                for i in 0..4 {
                    let (u, v) = (sq[i], sq[(i + 1) % 4]);
                    let e = self.edge_index[&sorted_pair(u, v)];
                    *col.entry(e).or_insert(0) += if u < v { 1 } else { -1 };
                }
                col.into_iter().filter(|&(_, c)| c != 0).collect()
            })
            .collect()
    }

    /// Rank of the square boundary map over the rationals.
    pub fn boundary2_rank(&self) -> usize {
        rank_over_rationals(self.square_boundaries())
    }

    /// First Betti number `E - V + b0 - rank(d2)`, computed exactly.
    pub fn betti1(&self) -> usize {
        let cycle_rank = self.edges.len() + self.betti0() - self.vertex_count;
        cycle_rank - self.boundary2_rank()
    }

    /// Disjoint union; vertices of `other` are shifted by `self.vertex_count()`.
    pub fn disjoint_union(&self, other: &CellComplex) -> CellComplex {
        let shift = self.vertex_count;
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|&(u, v)| (u + shift, v + shift)));
        let mut squares = self.squares.clone();
        squares.extend(other.squares.iter().map(|s| s.map(|v| v + shift)));
        CellComplex::new(self.vertex_count + other.vertex_count, &edges, &squares)
            .expect("disjoint union of valid complexes is valid")
    }
}

/// Exact rank over Q of a sparse integer matrix given by columns.
///
/// Fraction-free column reduction: each column is reduced against earlier
/// pivots keyed by their lowest nonzero row, and divided by the gcd of its
/// entries after every step so coefficients stay small.
pub fn rank_over_rationals(columns: Vec<Vec<(usize, i64)>>) -> usize {
    let mut pivots: HashMap<usize, BTreeMap<usize, BigInt>> = HashMap::new();
    for col in columns {
        let mut col: BTreeMap<usize, BigInt> =
            col.into_iter().filter(|&(_, c)| c != 0).map(|(r, c)| (r, BigInt::from(c))).collect();
        loop {
            let Some((&low, coeff)) = col.iter().next_back() else {
                break;
            };
            let Some(pivot) = pivots.get(&low) else {
                pivots.insert(low, col);
                break;
            };
            let pivot_coeff = &pivot[&low];
            let g = pivot_coeff.gcd(coeff);
            let scale_col = pivot_coeff / &g;
            let scale_pivot = coeff / &g;
            let mut next: BTreeMap<usize, BigInt> = BTreeMap::new();
            for (&r, c) in &col {
                next.insert(r, c * &scale_col);
            }
            for (&r, c) in pivot {
                let entry = next.entry(r).or_insert_with(BigInt::zero);
                *entry -= c * &scale_pivot;
            }
            next.retain(|_, c| !c.is_zero());
            let content = next.values().fold(BigInt::zero(), |acc, c| acc.gcd(c));
            if !content.is_zero() && !content.is_one() {
                for c in next.values_mut() {
                    *c = &*c / &content;
                }
            }
            debug_assert!(next.keys().next_back().map_or(true, |&r| r < low));
            col = next;
        }
    }
    pivots.len()
}

/// Cycle graph on `n ≥ 3` vertices, `{i, i+1 mod n}`.
pub fn cycle(n: usize) -> Result<CellComplex, ComplexError> {
    if n < 3 {
        return Err(ComplexError::InvalidParameter("a cycle needs at least 3 vertices"));
    }
    let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    CellComplex::new(n, &edges, &[])
}

/// Boundary of the unit cube: 8 vertices, 12 edges, 6 squares.
pub fn cube_surface() -> CellComplex {
    let mut edges = Vec::new();
    for v in 0..8usize {
        for bit in 0..3 {
            let w = v ^ (1 << bit);
            if v < w {
                edges.push((v, w));
            }
        }
    }
    let mut squares = Vec::new();
    for axis in 0..3 {
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2usize {
            let base = side << axis;
            squares.push([base, base | (1 << a), base | (1 << a) | (1 << b), base | (1 << b)]);
        }
    }
    CellComplex::new(8, &edges, &squares).expect("cube surface is valid")
}

/// Grid model of the `n`-torus: vertices `Z_res^n`, edges between points
/// differing by one step along an axis, and one square per axis-pair
/// plaquette.
pub fn torus_grid(n: usize, resolution: usize) -> Result<CellComplex, ComplexError> {
    if n == 0 {
        return Err(ComplexError::InvalidParameter("torus dimension must be at least 1"));
    }
    if resolution < 3 {
        return Err(ComplexError::ResolutionTooSmall(resolution));
    }
    let total = resolution
        .checked_pow(n as u32)
        .ok_or(ComplexError::InvalidParameter("torus grid too large"))?;
    let stride: Vec<usize> = (0..n).map(|i| resolution.pow(i as u32)).collect();
    let step = |v: usize, axis: usize| {
        let coord = (v / stride[axis]) % resolution;
        if coord + 1 == resolution {
            v - coord * stride[axis]
        } else {
            v + stride[axis]
        }
    };
    let mut edges = Vec::with_capacity(n * total);
    let mut squares = Vec::new();
    for v in 0..total {
        for i in 0..n {
            edges.push((v, step(v, i)));
        }
        for i in 0..n {
            for j in i + 1..n {
                let vi = step(v, i);
                squares.push([v, vi, step(vi, j), step(v, j)]);
            }
        }
    }
    CellComplex::new(total, &edges, &squares)
}

/// `n` cycles of `arc_len` vertices each, all sharing vertex 0.
pub fn wedge_circles(n: usize, arc_len: usize) -> Result<CellComplex, ComplexError> {
    if n == 0 {
        return Err(ComplexError::InvalidParameter("wedge needs at least one circle"));
    }
    if arc_len < 3 {
        return Err(ComplexError::InvalidParameter("each circle needs at least 3 vertices"));
    }
    let vertex_count = 1 + n * (arc_len - 1);
    let mut edges = Vec::with_capacity(n * arc_len);
    for c in 0..n {
        let first = 1 + c * (arc_len - 1);
        let mut prev = 0;
        for k in 0..arc_len - 1 {
            edges.push((prev, first + k));
            prev = first + k;
        }
        edges.push((prev, 0));
    }
    CellComplex::new(vertex_count, &edges, &[])
}
