//! Actions on finite complexes and grid-sampled maps of the torus.
//!
//! A [`FiniteAction`] is a set of complex automorphisms; the generated group
//! acts by monotone maps. A [`TorusSystem`] is `x ↦ w(Ax + a mod 1)` with
//! per-coordinate warps `w_i`, sampled on the `N^n` grid `x = m/N`.

use std::collections::HashSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abelian::IntMatrix;
use crate::complex::{self, CellComplex, ComplexError};
use crate::exec::Execution;
use crate::lattice::{self, LatticeError, LatticeFunction, Tolerance};
use crate::quotient::{self, Hull, Partition, QuotientError, QuotientMap};
use crate::rational::{RationalError, Rotation, RotationKind};
use crate::DisjointSets;

/// Largest number of grid points a system may sample.
pub const MAX_GRID_POINTS: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("generator {generator} is not an automorphism: {reason}")]
    NotAutomorphism { generator: usize, reason: String },
    #[error("generator {generator} does not map fiber {fiber} onto a fiber")]
    NotEquivariant { generator: usize, fiber: usize },
    #[error("grid function sampled on {got:?} but the system grid is {expected:?}")]
    GridMismatch { expected: (usize, usize), got: (usize, usize) },
    #[error("delta list is empty")]
    EmptyDeltas,
    #[error("function family is empty")]
    EmptyFamily,
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Quotient(#[from] QuotientError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Rational(#[from] RationalError),
}

// ---------------------------------------------------------------------------
// Finite actions

/// Automorphisms of a complex, given as vertex permutations.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteAction {
    complex: Arc<CellComplex>,
    generators: Vec<Vec<usize>>,
}

impl FiniteAction {
    pub fn new(complex: Arc<CellComplex>, generators: Vec<Vec<usize>>) -> Result<Self, DynamicsError> {
        let n = complex.vertex_count();
        let squares: HashSet<[usize; 4]> = complex.squares().iter().map(quotient::square_key).collect();
        for (gi, g) in generators.iter().enumerate() {
            let fail = |reason: String| DynamicsError::NotAutomorphism { generator: gi, reason };
            if g.len() != n {
                return Err(fail(format!("has {} entries for {n} vertices", g.len())));
            }
            let mut hit = vec![false; n];
            for &v in g {
                if v >= n {
                    return Err(fail(format!("image {v} out of range")));
                }
                if std::mem::replace(&mut hit[v], true) {
                    return Err(fail(format!("vertex {v} is hit twice")));
                }
            }
            if let Some(&(u, v)) = complex.edges().iter().find(|&&(u, v)| !complex.has_edge(g[u], g[v])) {
                return Err(fail(format!("edge ({u},{v}) maps to the non-edge ({},{})", g[u], g[v])));
            }
            if let Some(sq) = complex.squares().iter().find(|sq| !squares.contains(&quotient::square_key(&sq.map(|v| g[v])))) {
                return Err(fail(format!("square {sq:?} does not map to a square")));
            }
        }
        Ok(Self { complex, generators })
    }

    pub fn trivial(complex: Arc<CellComplex>) -> Self {
        Self { complex, generators: Vec::new() }
    }

    /// `v ↦ v + shift` on the cycle `C_n`.
    pub fn cycle_rotation(n: usize, shift: usize) -> Result<Self, DynamicsError> {
        let k = Arc::new(complex::cycle(n)?);
        Self::new(k, vec![(0..n).map(|v| (v + shift) % n).collect()])
    }

    pub fn complex(&self) -> &Arc<CellComplex> {
        &self.complex
    }

    pub fn generators(&self) -> &[Vec<usize>] {
        &self.generators
    }

    /// Generator `i` as a (bijective, hence monotone) quotient map.
    pub fn generator_map(&self, i: usize) -> Result<QuotientMap, DynamicsError> {
        Ok(QuotientMap::new(self.complex.clone(), self.complex.clone(), self.generators[i].clone())?)
    }

    /// `f ∘ g_i`.
    pub fn pullback(&self, i: usize, f: &LatticeFunction) -> Result<LatticeFunction, DynamicsError> {
        Ok(self.generator_map(i)?.pullback(f)?)
    }
}

/// Orbits of the generated group, by closure under the generators.
pub fn orbit_partition(act: &FiniteAction) -> Partition {
    let n = act.complex.vertex_count();
    let mut sets = DisjointSets::new(n);
    for g in &act.generators {
        for (v, &w) in g.iter().enumerate() {
            sets.union(v, w);
        }
    }
    let (labels, _) = sets.canonical_labels();
    Partition::from_labels(&labels).expect("canonical labels are dense")
}

/// Quotient by the orbit relation. The action descends to the identity.
pub fn maximal_trivial_factor(act: &FiniteAction) -> Result<QuotientMap, DynamicsError> {
    Ok(quotient::quotient_by_partition(act.complex.clone(), &orbit_partition(act))?)
}

/// Every invariant function is constant iff there is a single orbit.
pub fn is_invariant_constant(act: &FiniteAction) -> bool {
    orbit_partition(act).class_count() == 1
}

/// Monotone hull of an equivariant map with the generators it induces on the
/// hull's codomain and on the codomain of `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivariantHull {
    pub hull: Hull,
    pub descended: Vec<Vec<usize>>,
    pub codomain_generators: Vec<Vec<usize>>,
}

impl EquivariantHull {
    pub fn descended_action(&self) -> Result<FiniteAction, DynamicsError> {
        FiniteAction::new(self.hull.q.codomain().clone(), self.descended.clone())
    }
}

pub fn equivariant_monotone_hull(act: &FiniteAction, p: &QuotientMap) -> Result<EquivariantHull, DynamicsError> {
    if **p.domain() != *act.complex {
        return Err(QuotientError::ComplexMismatch.into());
    }
    let fibers = p.fibers();
    let mut codomain_generators = Vec::with_capacity(act.generators.len());
    for (gi, g) in act.generators.iter().enumerate() {
        let mut perm = vec![usize::MAX; fibers.len()];
        for (l, fiber) in fibers.iter().enumerate() {
            let fail = DynamicsError::NotEquivariant { generator: gi, fiber: l };
            let target = p.apply(g[fiber.min().ok_or(fail.clone())?]);
            if fiber.iter().any(|v| p.apply(g[v]) != target) || fibers[target].len() != fiber.len() {
                return Err(fail);
            }
            perm[l] = target;
        }
        codomain_generators.push(perm);
    }
    let hull = quotient::monotone_hull(p)?;
    let rc = hull.q.assignment();
    let classes = hull.q.codomain().vertex_count();
    let mut reps = vec![usize::MAX; classes];
    for (v, &c) in rc.iter().enumerate().rev() {
        reps[c] = v;
    }
    let descended = act
        .generators
        .iter()
        .map(|g| reps.iter().map(|&v| rc[g[v]]).collect())
        .collect();
    Ok(EquivariantHull { hull, descended, codomain_generators })
}

// ---------------------------------------------------------------------------
// Torus systems

/// Increasing bijection of `[0, 1)` fixing 0, applied after the affine part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WarpRepr", into = "WarpRepr")]
pub enum Warp {
    Identity,
    Square,
    /// Values at `j/M`, `j = 0..=M`, linearly interpolated.
    Table(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WarpRepr {
    Name(String),
    Table { table: Vec<f64> },
}

impl TryFrom<WarpRepr> for Warp {
    type Error = String;
    fn try_from(r: WarpRepr) -> Result<Self, String> {
        match r {
            WarpRepr::Name(n) => match n.as_str() {
                "identity" => Ok(Warp::Identity),
                "square" => Ok(Warp::Square),
                other => Err(format!("unknown warp {other:?}")),
            },
            WarpRepr::Table { table } => Ok(Warp::Table(table)),
        }
    }
}

impl From<Warp> for WarpRepr {
    fn from(w: Warp) -> Self {
        match w {
            Warp::Identity => WarpRepr::Name("identity".into()),
            Warp::Square => WarpRepr::Name("square".into()),
            Warp::Table(table) => WarpRepr::Table { table },
        }
    }
}

impl Warp {
    pub fn apply(&self, t: f64) -> f64 {
        match self {
            Warp::Identity => t,
            Warp::Square => t * t,
            Warp::Table(v) => {
                let m = v.len() - 1;
                let u = t * m as f64;
                let j = (u.floor() as usize).min(m - 1);
                let s = u - j as f64;
                let y = v[j] + s * (v[j + 1] - v[j]);
                if y >= 1.0 {
                    0.0
                } else {
                    y
                }
            }
        }
    }

    fn validate(&self) -> Result<(), String> {
        if let Warp::Table(v) = self {
            if v.len() < 2 {
                return Err("warp table needs at least two values".into());
            }
            if v[0] != 0.0 || v[v.len() - 1] != 1.0 {
                return Err("warp table must start at 0 and end at 1".into());
            }
            if v.windows(2).any(|w| !(w[1] > w[0])) || v.iter().any(|x| !x.is_finite()) {
                return Err("warp table must be strictly increasing".into());
            }
        }
        Ok(())
    }

    /// True when `w(t) ≠ t` for all `t` in `(0, 1)`.
    pub fn has_no_interior_fixed_point(&self) -> bool {
        match self {
            Warp::Identity => false,
            Warp::Square => true,
            Warp::Table(v) => {
                let m = (v.len() - 1) as f64;
                let signs: Vec<f64> = v[1..v.len() - 1].iter().enumerate().map(|(j, &y)| y - (j + 1) as f64 / m).collect();
                signs.iter().all(|&s| s > 0.0) || signs.iter().all(|&s| s < 0.0)
            }
        }
    }
}

/// On-disk layout of `system.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub dim: usize,
    pub matrix: Vec<Vec<i64>>,
    pub rotation: Vec<Rotation>,
    #[serde(default)]
    pub warps: Vec<Warp>,
    pub grid: usize,
}

/// `φ(x)_i = w_i((Ax + a)_i mod 1)` sampled on the `N^n` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusSystem {
    dim: usize,
    matrix: Vec<Vec<i64>>,
    rotation: Vec<Rotation>,
    shift: Vec<f64>,
    warps: Vec<Warp>,
    grid: usize,
    invertible: bool,
}

impl TorusSystem {
    pub fn new(
        matrix: Vec<Vec<i64>>,
        rotation: Vec<Rotation>,
        warps: Vec<Warp>,
        grid: usize,
    ) -> Result<Self, DynamicsError> {
        let dim = matrix.len();
        let bad = |m: String| Err(DynamicsError::InvalidSystem(m));
        if dim == 0 {
            return bad("dimension must be at least 1".into());
        }
        if matrix.iter().any(|r| r.len() != dim) {
            return bad(format!("matrix must be {dim}x{dim}"));
        }
        if rotation.len() != dim || warps.len() != dim {
            return bad(format!("rotation and warps need {dim} entries"));
        }
        if grid < 8 {
            return bad(format!("grid {grid} is below the minimum 8"));
        }
        if grid.checked_pow(dim as u32).map_or(true, |t| t > MAX_GRID_POINTS) {
            return bad(format!("grid {grid}^{dim} exceeds {MAX_GRID_POINTS} points"));
        }
        for w in &warps {
            w.validate().map_err(DynamicsError::InvalidSystem)?;
        }
        let det = IntMatrix::from_rows(&matrix).expect("square matrix").det();
        let shift = rotation.iter().map(Rotation::value).collect();
        Ok(Self { dim, matrix, rotation, shift, warps, grid, invertible: det.abs().is_one() })
    }

    pub fn from_file(file: &SystemFile) -> Result<Self, DynamicsError> {
        let warps = if file.warps.is_empty() { vec![Warp::Identity; file.dim] } else { file.warps.clone() };
        if file.matrix.len() != file.dim {
            return Err(DynamicsError::InvalidSystem(format!("dim is {} but the matrix has {} rows", file.dim, file.matrix.len())));
        }
        Self::new(file.matrix.clone(), file.rotation.clone(), warps, file.grid)
    }

    pub fn to_file(&self) -> SystemFile {
        SystemFile {
            dim: self.dim,
            matrix: self.matrix.clone(),
            rotation: self.rotation.clone(),
            warps: self.warps.clone(),
            grid: self.grid,
        }
    }

    fn identity_matrix(dim: usize) -> Vec<Vec<i64>> {
        (0..dim).map(|i| (0..dim).map(|j| i64::from(i == j)).collect()).collect()
    }

    /// Translation by `rotation`.
    pub fn rotation(rotation: Vec<Rotation>, grid: usize) -> Result<Self, DynamicsError> {
        let dim = rotation.len();
        Self::new(Self::identity_matrix(dim), rotation, vec![Warp::Identity; dim], grid)
    }

    pub fn identity(dim: usize, grid: usize) -> Result<Self, DynamicsError> {
        Self::rotation(vec![Rotation::zero(); dim], grid)
    }

    /// `x ↦ 2x` on the circle.
    pub fn doubling(grid: usize) -> Result<Self, DynamicsError> {
        Self::new(vec![vec![2]], vec![Rotation::zero()], vec![Warp::Identity], grid)
    }

    /// `(x, y) ↦ (x + a, y²)` on the 2-torus.
    pub fn warped_product(a: Rotation, grid: usize) -> Result<Self, DynamicsError> {
        Self::new(Self::identity_matrix(2), vec![a, Rotation::zero()], vec![Warp::Identity, Warp::Square], grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.matrix
    }

    pub fn rotation_vector(&self) -> &[Rotation] {
        &self.rotation
    }

    pub fn warps(&self) -> &[Warp] {
        &self.warps
    }

    pub fn is_invertible(&self) -> bool {
        self.invertible
    }

    pub fn is_affine_identity(&self) -> bool {
        self.matrix == Self::identity_matrix(self.dim)
    }

    /// Whether the maps form a group action or only a semigroup action.
    pub fn action_kind(&self) -> &'static str {
        if self.invertible {
            "invertible: group action"
        } else {
            "non-invertible: semigroup action"
        }
    }

    pub fn point_count(&self) -> usize {
        self.grid.pow(self.dim as u32)
    }

    pub fn grid_point(&self, index: usize) -> Vec<f64> {
        grid_point(self.dim, self.grid, index)
    }

    /// `φ(x)` in closed form.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(self.dim);
        self.apply_into(x, &mut y);
        y
    }

    fn apply_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for i in 0..self.dim {
            let s: f64 = self.matrix[i].iter().zip(x).map(|(&a, &xj)| a as f64 * xj).sum::<f64>() + self.shift[i];
            let t = s - s.floor();
            out.push(self.warps[i].apply(if t >= 1.0 { 0.0 } else { t }));
        }
    }
}

fn grid_point(dim: usize, grid: usize, mut index: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(dim);
    for _ in 0..dim {
        x.push((index % grid) as f64 / grid as f64);
        index /= grid;
    }
    x
}

// ---------------------------------------------------------------------------
// Grid functions

/// Complex samples on the grid `m/N`, coordinate `i` at stride `N^i` (the
/// vertex order of [`complex::torus_grid`]).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    dim: usize,
    grid: usize,
    values: Vec<Complex64>,
}

/// On-disk layout of a grid function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunctionFile {
    pub dim: usize,
    pub grid: usize,
    pub values: Vec<[f64; 2]>,
}

impl GridFunction {
    pub fn new(dim: usize, grid: usize, values: Vec<Complex64>) -> Result<Self, DynamicsError> {
        let expected = grid.checked_pow(dim as u32).unwrap_or(usize::MAX);
        if dim == 0 || grid == 0 || values.len() != expected {
            return Err(DynamicsError::InvalidParameter(format!(
                "{} samples do not fill a {grid}^{dim} grid",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LatticeError::NonFinite(i).into());
        }
        Ok(Self { dim, grid, values })
    }

    pub fn from_fn(dim: usize, grid: usize, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let total = grid.pow(dim as u32);
        let values = (0..total).map(|i| f(&grid_point(dim, grid, i))).collect();
        Self { dim, grid, values }
    }

    pub fn constant(dim: usize, grid: usize, c: Complex64) -> Self {
        Self { dim, grid, values: vec![c; grid.pow(dim as u32)] }
    }

    pub fn from_file(file: &GridFunctionFile) -> Result<Self, DynamicsError> {
        Self::new(file.dim, file.grid, file.values.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
    }

    pub fn to_file(&self) -> GridFunctionFile {
        GridFunctionFile { dim: self.dim, grid: self.grid, values: self.values.iter().map(|z| [z.re, z.im]).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Periodic multilinear interpolation.
    pub fn interpolate(&self, x: &[f64]) -> Complex64 {
        let n = self.grid;
        let mut base = [0usize; 8];
        let mut frac = [0f64; 8];
        let mut stride = 1;
        let mut strides = [0usize; 8];
        let mut idx0 = 0;
        for i in 0..self.dim.min(8) {
            let u = x[i] * n as f64;
            let fl = u.floor();
            let c = (fl as i64).rem_euclid(n as i64) as usize;
            base[i] = c;
            frac[i] = u - fl;
            strides[i] = stride;
            idx0 += c * stride;
            stride *= n;
        }
        if self.dim > 8 {
            return self.values[idx0];
        }
        let mut acc = Complex64::zero();
        for corner in 0..1usize << self.dim {
            let mut w = 1.0;
            let mut idx = 0;
            for i in 0..self.dim {
                let up = corner >> i & 1 == 1;
                w *= if up { frac[i] } else { 1.0 - frac[i] };
                let c = if up { (base[i] + 1) % n } else { base[i] };
                idx += c * strides[i];
            }
            if w != 0.0 {
                acc += self.values[idx] * w;
            }
        }
        acc
    }

    pub fn to_lattice(&self, k: &CellComplex) -> Result<LatticeFunction, DynamicsError> {
        Ok(LatticeFunction::new(k, self.values.clone())?)
    }

    pub fn from_lattice(dim: usize, grid: usize, f: &LatticeFunction) -> Result<Self, DynamicsError> {
        Self::new(dim, grid, f.values().to_vec())
    }

    fn require_grid(&self, sys: &TorusSystem) -> Result<(), DynamicsError> {
        if (self.dim, self.grid) != (sys.dim, sys.grid) {
            return Err(DynamicsError::GridMismatch { expected: (sys.dim, sys.grid), got: (self.dim, self.grid) });
        }
        Ok(())
    }
}

/// Koopman pullback `f ∘ φ`, with `φ` exact and `f` interpolated.
pub fn pullback(sys: &TorusSystem, f: &GridFunction) -> Result<GridFunction, DynamicsError> {
    pullback_with(sys, f, Execution::default())
}

pub fn pullback_with(sys: &TorusSystem, f: &GridFunction, exec: Execution) -> Result<GridFunction, DynamicsError> {
    f.require_grid(sys)?;
    let values = exec.map_range(sys.point_count(), |i| f.interpolate(&sys.apply(&sys.grid_point(i))));
    Ok(GridFunction { dim: f.dim, grid: f.grid, values })
}

// ---------------------------------------------------------------------------
// Equicontinuity

/// `omega[j][d]`: largest oscillation of `f ∘ φ^j` over grid pairs at sup
/// distance at most `deltas[d]`, for `j = 0..horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusTable {
    pub deltas: Vec<f64>,
    pub horizon: usize,
    pub omega: Vec<Vec<f64>>,
}

impl ModulusTable {
    fn zeros(deltas: &[f64], horizon: usize) -> Self {
        Self { deltas: deltas.to_vec(), horizon, omega: vec![vec![0.0; deltas.len()]; horizon] }
    }

    /// `max_j omega[j][d]`.
    pub fn uniform_bound(&self, d: usize) -> f64 {
        self.omega.iter().map(|row| row[d]).fold(0.0, f64::max)
    }

    pub fn best_bound(&self) -> f64 {
        (0..self.deltas.len()).map(|d| self.uniform_bound(d)).fold(f64::INFINITY, f64::min)
    }

    pub fn verdict(&self, threshold: f64) -> bool {
        self.best_bound() <= threshold
    }

    /// Elementwise maximum; the table of a family.
    pub fn max_with(&mut self, other: &ModulusTable) {
        for (a, b) in self.omega.iter_mut().zip(&other.omega) {
            for (x, y) in a.iter_mut().zip(b) {
                *x = x.max(*y);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquicontinuityParams {
    pub horizon: usize,
    pub deltas: Vec<f64>,
    pub threshold: f64,
    pub execution: Execution,
}

impl EquicontinuityParams {
    pub const DEFAULT_HORIZON: usize = 64;
    pub const DEFAULT_THRESHOLD: f64 = 0.25;

    /// Horizon 64, threshold 0.25, deltas `2^i / N` for `i = 0..4`.
    pub fn defaults(grid: usize) -> Self {
        Self {
            horizon: Self::DEFAULT_HORIZON,
            deltas: (0..4).map(|i| (1u32 << i) as f64 / grid as f64).collect(),
            threshold: Self::DEFAULT_THRESHOLD,
            execution: Execution::default(),
        }
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        if self.deltas.is_empty() {
            return Err(DynamicsError::EmptyDeltas);
        }
        if self.horizon == 0 {
            return Err(DynamicsError::InvalidParameter("horizon must be at least 1".into()));
        }
        if self.deltas.iter().any(|d| !d.is_finite() || *d < 0.0) || !self.threshold.is_finite() || self.threshold < 0.0 {
            return Err(DynamicsError::InvalidParameter("deltas and threshold must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equicontinuity {
    pub table: ModulusTable,
    pub best_bound: f64,
    pub threshold: f64,
    pub verdict: bool,
}

impl Equicontinuity {
    fn of(table: ModulusTable, threshold: f64) -> Self {
        let best_bound = table.best_bound();
        Self { verdict: best_bound <= threshold, best_bound, threshold, table }
    }
}

/// Nonzero grid offsets up to sign, with their sup norm.
fn half_offsets(dim: usize, r: usize) -> Vec<(Vec<i64>, usize)> {
    let side = 2 * r + 1;
    let total = side.pow(dim as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let o: Vec<i64> = (0..dim)
            .map(|_| {
                let d = (c % side) as i64 - r as i64;
                c /= side;
                d
            })
            .collect();
        if o.iter().rev().find(|&&d| d != 0).is_some_and(|&d| d > 0) {
            let norm = o.iter().map(|d| d.unsigned_abs() as usize).max().unwrap_or(0);
            out.push((o, norm));
        }
    }
    out
}

/// Grid steps within distance `delta`.
fn radius(delta: f64, grid: usize) -> usize {
    (delta * grid as f64 + 1e-9).floor() as usize
}

/// Modulus tables of every family member, sharing the orbit computation.
pub fn modulus_tables(
    sys: &TorusSystem,
    family: &[GridFunction],
    params: &EquicontinuityParams,
) -> Result<Vec<ModulusTable>, DynamicsError> {
    params.validate()?;
    for f in family {
        f.require_grid(sys)?;
    }
    let exec = params.execution;
    let (n, dim) = (sys.grid, sys.dim);
    let radii: Vec<usize> = params.deltas.iter().map(|&d| radius(d, n).min(n / 2)).collect();
    let rmax = radii.iter().copied().max().unwrap_or(0);
    let offsets = half_offsets(dim, rmax);
    let total = sys.point_count();
    let shift_index = |i: usize, o: &[i64]| {
        let mut idx = 0;
        let mut rest = i;
        let mut stride = 1;
        for &d in o {
            let c = (rest % n) as i64;
            rest /= n;
            idx += ((c + d).rem_euclid(n as i64) as usize) * stride;
            stride *= n;
        }
        idx
    };
    let neighbor: Vec<Vec<usize>> = exec.map_slice(&offsets, |(o, _)| (0..total).map(|i| shift_index(i, o)).collect());

    let mut tables: Vec<ModulusTable> = family.iter().map(|_| ModulusTable::zeros(&params.deltas, params.horizon)).collect();
    let mut points: Vec<Vec<f64>> = (0..total).map(|i| sys.grid_point(i)).collect();
    for j in 0..params.horizon {
        if j > 0 {
            points = exec.map_slice(&points, |x| sys.apply(x));
        }
        for (f, table) in family.iter().zip(tables.iter_mut()) {
            let h: Vec<Complex64> = exec.map_slice(&points, |x| f.interpolate(x));
            let per_offset: Vec<f64> = exec.map_slice(&neighbor, |nb| {
                nb.iter().enumerate().map(|(i, &k)| (h[i] - h[k]).norm()).fold(0.0, f64::max)
            });
            for (d, &r) in radii.iter().enumerate() {
                table.omega[j][d] = offsets
                    .iter()
                    .zip(&per_offset)
                    .filter(|((_, norm), _)| *norm <= r)
                    .map(|(_, &m)| m)
                    .fold(0.0, f64::max);
            }
        }
    }
    Ok(tables)
}

pub fn equicontinuity_estimate(
    sys: &TorusSystem,
    f: &GridFunction,
    params: &EquicontinuityParams,
) -> Result<Equicontinuity, DynamicsError> {
    family_equicontinuity(sys, std::slice::from_ref(f), params)
}

/// Joint estimate for a family: the elementwise maximum of member tables.
/// The empty family has the zero table.
pub fn family_equicontinuity(
    sys: &TorusSystem,
    family: &[GridFunction],
    params: &EquicontinuityParams,
) -> Result<Equicontinuity, DynamicsError> {
    let tables = modulus_tables(sys, family, params)?;
    let mut joint = ModulusTable::zeros(&params.deltas, params.horizon);
    for t in &tables {
        joint.max_with(t);
    }
    Ok(Equicontinuity::of(joint, params.threshold))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrEquicontinuity {
    pub members: usize,
    pub parts: usize,
    pub family: Equicontinuity,
    pub irreducible_parts: Equicontinuity,
    pub agree: bool,
}

/// Compares the verdict of a family with the verdict of all irreducible
/// parts of its members, computed on the grid complex.
pub fn irr_equicontinuity_check(
    sys: &TorusSystem,
    family: &[GridFunction],
    params: &EquicontinuityParams,
    tol: Tolerance,
) -> Result<IrrEquicontinuity, DynamicsError> {
    if family.is_empty() {
        return Err(DynamicsError::EmptyFamily);
    }
    let k = complex::torus_grid(sys.dim, sys.grid)?;
    let mut parts = Vec::new();
    for f in family {
        f.require_grid(sys)?;
        for part in lattice::irr(&k, &f.to_lattice(&k)?, tol)? {
            parts.push(GridFunction::from_lattice(sys.dim, sys.grid, &part)?);
        }
    }
    let fam = family_equicontinuity(sys, family, params)?;
    let irr = family_equicontinuity(sys, &parts, params)?;
    Ok(IrrEquicontinuity { members: family.len(), parts: parts.len(), agree: fam.verdict == irr.verdict, family: fam, irreducible_parts: irr })
}

// ---------------------------------------------------------------------------
// Invariant functions on torus systems

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvarianceMethod {
    /// Pure rotation: rational independence of `1, a_1, …, a_n`.
    RationalIndependence,
    /// `A = I` with warped coordinates that have no interior fixed point and
    /// no rotation, and rationally independent rotation coordinates.
    WarpedProduct,
    /// Forward-orbit density of one generic grid point.
    OrbitDensity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceParams {
    pub steps: usize,
    /// Defaults to `2/N`.
    pub eps_net: Option<f64>,
    pub relation_height: u64,
    pub max_denominator: u64,
}

impl Default for InvarianceParams {
    fn default() -> Self {
        Self { steps: 5000, eps_net: None, relation_height: 16, max_denominator: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceVerdict {
    pub constant: bool,
    pub method: InvarianceMethod,
    pub heuristic: bool,
    pub note: String,
}

fn to_big(r: &Rotation) -> BigRational {
    let e = r.exact();
    BigRational::new(BigInt::from(*e.numer()), BigInt::from(*e.denom()))
}

/// Fractions are rational; decimals count as rational when their reduced
/// denominator is at most `max_den`.
fn treated_as_rational(q: &BigRational, all_fractions: bool, max_den: u64) -> bool {
    all_fractions || q.denom() <= &BigInt::from(max_den)
}

fn exact_invariance(sys: &TorusSystem, params: &InvarianceParams) -> Option<InvarianceVerdict> {
    if !sys.is_affine_identity() {
        return None;
    }
    let mut free = Vec::new();
    let mut warped = 0;
    for i in 0..sys.dim {
        match &sys.warps[i] {
            Warp::Identity => free.push(i),
            w => {
                if !sys.rotation[i].is_zero() || !w.has_no_interior_fixed_point() {
                    return None;
                }
                warped += 1;
            }
        }
    }
    let method = if warped > 0 { InvarianceMethod::WarpedProduct } else { InvarianceMethod::RationalIndependence };
    let verdict = |constant: bool, note: String| Some(InvarianceVerdict { constant, method, heuristic: false, note });
    let r = free.len();
    if r == 0 {
        return verdict(true, "every coordinate contracts to 0 under its warp".into());
    }
    let coords: Vec<(BigRational, bool)> =
        free.iter().map(|&i| (to_big(&sys.rotation[i]), sys.rotation[i].kind() == RotationKind::Fraction)).collect();
    for (pos, (q, fraction)) in coords.iter().enumerate() {
        if treated_as_rational(q, *fraction, params.max_denominator) {
            return verdict(false, format!("rotation coordinate {} = {} is rational", free[pos], sys.rotation[free[pos]]));
        }
    }
    // Exhaustive integer relation search, height capped so the box stays
    // below about 10^6 vectors.
    let mut h = params.relation_height.max(1);
    while h > 1 && (2 * h + 1).checked_pow(r as u32).map_or(true, |t| t > 1_000_000) {
        h -= 1;
    }
    let side = 2 * h + 1;
    let total = side.checked_pow(r as u32).unwrap_or(u64::MAX).min(1_000_000);
    for code in 0..total {
        let mut c = code;
        let k: Vec<i64> = (0..r)
            .map(|_| {
                let d = (c % side) as i64 - h as i64;
                c /= side;
                d
            })
            .collect();
        if !k.iter().rev().find(|&&d| d != 0).is_some_and(|&d| d > 0) {
            continue;
        }
        let mut s = BigRational::zero();
        let mut fractions_only = true;
        for (&ki, (q, fraction)) in k.iter().zip(&coords) {
            if ki != 0 {
                s += q * BigRational::from_integer(BigInt::from(ki));
                fractions_only &= *fraction;
            }
        }
        if treated_as_rational(&s, fractions_only, params.max_denominator) {
            return verdict(false, format!("integer relation {k:?} among the rotation coordinates"));
        }
    }
    verdict(
        true,
        format!(
            "1 and the {r} rotation coordinate(s) are rationally independent: no relation of height <= {h}, decimal denominators above {}",
            params.max_denominator
        ),
    )
}

/// Prime factor of the denominator used for exact orbits.
const ORBIT_PRIME: i128 = 1_000_003;

/// Forward orbit of a jittered start point. Warp-free systems whose rotation
/// denominators are small iterate exactly on `(1/D) Z^n`; floating-point
/// iteration would collapse expanding maps such as `x ↦ 2x` onto 0.
enum Orbit<'a> {
    Exact { sys: &'a TorusSystem, y: Vec<i128>, shift: Vec<i128>, denom: i128 },
    Float { sys: &'a TorusSystem, x: Vec<f64>, next: Vec<f64> },
}

impl<'a> Orbit<'a> {
    fn start(sys: &'a TorusSystem) -> Self {
        let x: Vec<f64> = (0..sys.dim)
            .map(|i| {
                let t = 0.5 / sys.grid as f64 + (i + 1) as f64 * 0.754_877_666_246_692_7;
                t - t.floor()
            })
            .collect();
        let lcm = sys.rotation.iter().try_fold(1i128, |acc, r| {
            let d = r.denominator();
            let l = acc / num_integer::gcd(acc, d) * d;
            (l <= 1_000_000_000_000).then_some(l)
        });
        let max_entry = sys.matrix.iter().flatten().map(|a| a.unsigned_abs() as i128).max().unwrap_or(0);
        match lcm {
            Some(l) if sys.warps.iter().all(|w| *w == Warp::Identity) && max_entry * sys.dim as i128 <= 1 << 20 => {
                let denom = l * ORBIT_PRIME;
                let y = x.iter().map(|&t| (t * denom as f64) as i128 % denom).collect();
                let shift = sys
                    .rotation
                    .iter()
                    .map(|r| {
                        let e = r.exact();
                        (e.numer() * (denom / e.denom())).rem_euclid(denom)
                    })
                    .collect();
                Orbit::Exact { sys, y, shift, denom }
            }
            _ => Orbit::Float { sys, x, next: Vec::with_capacity(sys.dim) },
        }
    }

    fn point(&self) -> Vec<f64> {
        match self {
            Orbit::Exact { y, denom, .. } => y.iter().map(|&v| v as f64 / *denom as f64).collect(),
            Orbit::Float { x, .. } => x.clone(),
        }
    }

    fn advance(&mut self) {
        match self {
            Orbit::Exact { sys, y, shift, denom } => {
                let next: Vec<i128> = (0..sys.dim)
                    .map(|i| {
                        let s = sys.matrix[i].iter().zip(y.iter()).fold(shift[i], |acc, (&a, &v)| (acc + a as i128 * v).rem_euclid(*denom));
                        s.rem_euclid(*denom)
                    })
                    .collect();
                *y = next;
            }
            Orbit::Float { sys, x, next } => {
                sys.apply_into(x, next);
                std::mem::swap(x, next);
            }
        }
    }
}

/// Whether the forward orbit of a jittered grid point comes within `eps_net`
/// (sup distance on the torus) of every grid point within `steps` iterations.
pub fn orbit_density(sys: &TorusSystem, steps: usize, eps_net: f64) -> bool {
    let n = sys.grid;
    let total = sys.point_count();
    let mut covered = vec![false; total];
    let mut count = 0;
    let nf = n as f64;
    let mut orbit = Orbit::start(sys);
    for _ in 0..=steps {
        let x = orbit.point();
        let ranges: Vec<(i64, i64)> =
            x.iter().map(|&xi| (((xi - eps_net) * nf - 1e-9).ceil() as i64, ((xi + eps_net) * nf + 1e-9).floor() as i64)).collect();
        let lens: Vec<i64> = ranges.iter().map(|&(lo, hi)| (hi - lo + 1).clamp(0, n as i64)).collect();
        let cells: i64 = lens.iter().product();
        for code in 0..cells {
            let mut c = code;
            let mut idx = 0;
            let mut stride = 1;
            for (&(lo, _), &len) in ranges.iter().zip(&lens) {
                let m = (lo + c % len).rem_euclid(n as i64) as usize;
                c /= len;
                idx += m * stride;
                stride *= n;
            }
            if !std::mem::replace(&mut covered[idx], true) {
                count += 1;
            }
        }
        if count == total {
            return true;
        }
        orbit.advance();
    }
    false
}

/// Decides whether every invariant continuous function is constant: exactly
/// for `A = I` systems, otherwise by the orbit-density heuristic.
pub fn is_invariant_constant_torus(sys: &TorusSystem, params: &InvarianceParams) -> InvarianceVerdict {
    if let Some(v) = exact_invariance(sys, params) {
        return v;
    }
    let eps = params.eps_net.unwrap_or(2.0 / sys.grid as f64);
    let constant = orbit_density(sys, params.steps, eps);
    InvarianceVerdict {
        constant,
        method: InvarianceMethod::OrbitDensity,
        heuristic: true,
        note: format!("orbit of a generic point {} {eps}-dense within {} steps", if constant { "is" } else { "is not" }, params.steps),
    }
}
