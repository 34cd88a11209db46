//! Exact integer linear algebra: Smith normal form, ranks and bases of
//! integer lattices, and the classification of homomorphisms
//! `F × T^m → F' × T^n` of compact abelian Lie groups.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbelianError {
    #[error("vectors have different lengths ({0} and {1})")]
    DimensionMismatch(usize, usize),
    #[error("matrix rows have different lengths")]
    RaggedMatrix,
    #[error("finite map is not a homomorphism: {0}")]
    NotAHomomorphism(String),
    #[error("finite group of order {0} exceeds the enumeration limit {FINITE_GROUP_LIMIT}")]
    FiniteGroupTooLarge(u64),
    #[error("cannot parse {0:?}")]
    Parse(String),
}

/// Largest finite group handled by enumeration.
pub const FINITE_GROUP_LIMIT: u64 = 10_000;

/// Dense matrix of arbitrary-precision integers.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<serde_json::Value>> =
            (0..self.rows).map(|r| (0..self.cols).map(|c| big_to_json(self.get(r, c))).collect()).collect();
        rows.serialize(s)
    }
}

pub(crate) fn big_to_json(x: &BigInt) -> serde_json::Value {
    match x.to_i64() {
        Some(v) => serde_json::Value::from(v),
        None => serde_json::Value::String(x.to_string()),
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Result<Self, AbelianError> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(AbelianError::RaggedMatrix);
        }
        let data = rows.iter().flat_map(|r| r.iter().cloned().map(Into::into)).collect();
        Ok(Self { rows: rows.len(), cols, data })
    }

    /// Parses `"[[2,0],[0,3]]"`.
    pub fn parse(text: &str) -> Result<Self, AbelianError> {
        let rows: Vec<Vec<i64>> =
            serde_json::from_str(text).map_err(|_| AbelianError::Parse(text.to_string()))?;
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &BigInt {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: BigInt) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> Vec<BigInt> {
        self.data[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    pub fn to_rows_i64(&self) -> Option<Vec<Vec<i64>>> {
        (0..self.rows).map(|r| (0..self.cols).map(|c| self.get(r, c).to_i64()).collect()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matrix product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * out.cols + j;
                    out.data[idx] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if a.get(k, k).is_zero() {
                let Some(p) = (k + 1..n).find(|&r| !a.get(r, k).is_zero()) else {
                    return BigInt::zero();
                };
                a.swap_rows(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (a.get(i, j) * a.get(k, k) - a.get(i, k) * a.get(k, j)) / &prev;
                    a.set(i, j, v);
                }
            }
            prev = a.get(k, k).clone();
        }
        sign * a.get(n - 1, n - 1)
    }

    pub fn is_unimodular(&self) -> bool {
        self.rows == self.cols && self.det().abs().is_one()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for r in 0..self.rows {
                self.data.swap(r * self.cols + a, r * self.cols + b);
            }
        }
    }

    /// `row[dst] += k * row[src]`
    fn add_row(&mut self, dst: usize, src: usize, k: &BigInt) {
        for c in 0..self.cols {
            let v = self.get(src, c) * k;
            self.data[dst * self.cols + c] += v;
        }
    }

    /// `col[dst] += k * col[src]`
    fn add_col(&mut self, dst: usize, src: usize, k: &BigInt) {
        for r in 0..self.rows {
            let v = self.get(r, src) * k;
            self.data[r * self.cols + dst] += v;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let idx = r * self.cols + c;
            self.data[idx] = -std::mem::take(&mut self.data[idx]);
        }
    }
}

/// `U · M · V = D` with unimodular `U`, `V`; `v_inverse` is `V⁻¹`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Smith {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
    pub v_inverse: IntMatrix,
}

impl Smith {
    /// Nonzero diagonal entries `d_1 | d_2 | …`.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        (0..self.d.rows.min(self.d.cols)).map(|i| self.d.get(i, i).clone()).take_while(|x| !x.is_zero()).collect()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors().len()
    }
}

/// Smith normal form by gcd-driven row and column reduction, always pivoting
/// on the entry of smallest absolute value.
pub fn smith_normal_form(m: &IntMatrix) -> Smith {
    let (rows, cols) = (m.rows, m.cols);
    let mut d = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    let mut vi = IntMatrix::identity(cols);

    // col[dst] += k*col[src] on D and V; row[src] -= k*row[dst] on V⁻¹
    let col_op = |d: &mut IntMatrix, v: &mut IntMatrix, vi: &mut IntMatrix, dst: usize, src: usize, k: &BigInt| {
        d.add_col(dst, src, k);
        v.add_col(dst, src, k);
        vi.add_row(src, dst, &-k);
    };
    let col_swap = |d: &mut IntMatrix, v: &mut IntMatrix, vi: &mut IntMatrix, a: usize, b: usize| {
        d.swap_cols(a, b);
        v.swap_cols(a, b);
        vi.swap_rows(a, b);
    };

    for t in 0..rows.min(cols) {
        loop {
            // smallest nonzero entry of the trailing block
            let mut best: Option<(usize, usize)> = None;
            for r in t..rows {
                for c in t..cols {
                    let x = d.get(r, c);
                    if !x.is_zero() && best.map_or(true, |(br, bc)| x.abs() < d.get(br, bc).abs()) {
                        best = Some((r, c));
                    }
                }
            }
            let Some((pr, pc)) = best else {
                break;
            };
            d.swap_rows(t, pr);
            u.swap_rows(t, pr);
            col_swap(&mut d, &mut v, &mut vi, t, pc);

            let mut clean = true;
            for r in t + 1..rows {
                let q = d.get(r, t).div_floor(d.get(t, t));
                if !q.is_zero() {
                    d.add_row(r, t, &-&q);
                    u.add_row(r, t, &-&q);
                }
                if !d.get(r, t).is_zero() {
                    clean = false;
                }
            }
            for c in t + 1..cols {
                let q = d.get(t, c).div_floor(d.get(t, t));
                if !q.is_zero() {
                    col_op(&mut d, &mut v, &mut vi, c, t, &-&q);
                }
                if !d.get(t, c).is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // pivot must divide the trailing block
            let bad = (t + 1..rows)
                .flat_map(|r| (t + 1..cols).map(move |c| (r, c)))
                .find(|&(r, c)| !d.get(r, c).is_multiple_of(d.get(t, t)));
            match bad {
                Some((r, _)) => {
                    d.add_row(t, r, &BigInt::one());
                    u.add_row(t, r, &BigInt::one());
                }
                None => break,
            }
        }
        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    Smith { u, d, v, v_inverse: vi }
}

/// Rank over Q.
pub fn rank(m: &IntMatrix) -> usize {
    smith_normal_form(m).rank()
}

/// Row-style Hermite normal form of the row lattice, zero rows dropped:
/// echelon, positive pivots, entries above each pivot reduced into
/// `[0, pivot)`.
pub fn hermite_rows(m: &IntMatrix) -> IntMatrix {
    let mut a = m.clone();
    let mut r = 0;
    let mut pivots = Vec::new();
    for c in 0..a.cols {
        if r == a.rows {
            break;
        }
        loop {
            let best = (r..a.rows)
                .filter(|&i| !a.get(i, c).is_zero())
                .min_by(|&i, &j| a.get(i, c).abs().cmp(&a.get(j, c).abs()));
            let Some(p) = best else {
                break;
            };
            a.swap_rows(r, p);
            let mut done = true;
            for i in r + 1..a.rows {
                let q = a.get(i, c).div_floor(a.get(r, c));
                if !q.is_zero() {
                    a.add_row(i, r, &-q);
                }
                if !a.get(i, c).is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if a.get(r, c).is_zero() {
            continue;
        }
        if a.get(r, c).is_negative() {
            a.negate_row(r);
        }
        for i in 0..r {
            let q = a.get(i, c).div_floor(a.get(r, c));
            if !q.is_zero() {
                a.add_row(i, r, &-q);
            }
        }
        pivots.push(c);
        r += 1;
    }
    let rows: Vec<Vec<BigInt>> = (0..r).map(|i| a.row(i)).collect();
    let mut out = IntMatrix::zeros(r, a.cols);
    for (i, row) in rows.into_iter().enumerate() {
        for (c, x) in row.into_iter().enumerate() {
            out.set(i, c, x);
        }
    }
    out
}

/// Rank and basis of the sublattice of `Z^n` generated by `vectors`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeBasis {
    pub dim: usize,
    pub rank: usize,
    /// Rows form a basis, in Hermite normal form.
    pub basis: IntMatrix,
}

/// Rank of the generated lattice and an integer basis, obtained as the
/// nonzero rows of `D·V⁻¹` from the Smith form and put into Hermite form.
pub fn lattice_rank(vectors: &[Vec<i64>]) -> Result<LatticeBasis, AbelianError> {
    lattice_rank_in(vectors.first().map_or(0, |v| v.len()), vectors)
}

/// [`lattice_rank`] inside `Z^dim`, so that an empty generating set still
/// records its ambient dimension.
pub fn lattice_rank_in(dim: usize, vectors: &[Vec<i64>]) -> Result<LatticeBasis, AbelianError> {
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(AbelianError::DimensionMismatch(dim, v.len()));
    }
    if vectors.is_empty() {
        return Ok(LatticeBasis { dim, rank: 0, basis: IntMatrix::zeros(0, dim) });
    }
    let m = IntMatrix::from_rows(vectors)?;
    let snf = smith_normal_form(&m);
    let factors = snf.invariant_factors();
    let mut raw = IntMatrix::zeros(factors.len(), dim);
    for (i, f) in factors.iter().enumerate() {
        for c in 0..dim {
            raw.set(i, c, f * snf.v_inverse.get(i, c));
        }
    }
    let basis = hermite_rows(&raw);
    Ok(LatticeBasis { dim, rank: basis.rows, basis })
}

/// Integer coefficients `x` with `x · basis = k`, found by transforming to
/// the Smith form of the basis; `None` when `k` is outside the lattice.
pub fn lattice_coordinates(basis: &IntMatrix, k: &[i64]) -> Option<Vec<BigInt>> {
    if k.len() != basis.cols {
        return None;
    }
    if basis.rows == 0 {
        return k.iter().all(|&x| x == 0).then(Vec::new);
    }
    // basis = U⁻¹ D V⁻¹, so x·basis = k  ⇔  (x U⁻¹) D = k V
    let snf = smith_normal_form(basis);
    let kv = IntMatrix::from_rows(&[k.to_vec()]).ok()?.mul(&snf.v);
    let r = snf.rank();
    let mut y = IntMatrix::zeros(1, basis.rows);
    for i in 0..basis.cols {
        let target = kv.get(0, i);
        if i < r {
            let di = snf.d.get(i, i);
            if !target.is_multiple_of(di) {
                return None;
            }
            y.set(0, i, target / di);
        } else if !target.is_zero() {
            return None;
        }
    }
    let x = y.mul(&snf.u);
    Some(x.row(0))
}

/// Kernel or group order that may be infinite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupOrder {
    Finite(BigInt),
    Infinite,
}

impl Serialize for GroupOrder {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            GroupOrder::Finite(n) => big_to_json(n).serialize(s),
            GroupOrder::Infinite => s.serialize_str("infinite"),
        }
    }
}

/// Finite abelian group in invariant-factor form `Z/d1 × Z/d2 × …`,
/// `d1 | d2 | …`, every `d_i ≥ 2`. The trivial group has no factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FiniteAbelian {
    invariant_factors: Vec<u64>,
}

impl FiniteAbelian {
    pub fn trivial() -> Self {
        Self { invariant_factors: Vec::new() }
    }

    /// Normalizes an arbitrary product of cyclic groups.
    pub fn from_cyclic_orders(orders: &[u64]) -> Self {
        if orders.is_empty() {
            return Self::trivial();
        }
        let rows: Vec<Vec<i64>> = (0..orders.len())
            .map(|i| (0..orders.len()).map(|j| if i == j { orders[i] as i64 } else { 0 }).collect())
            .collect();
        let snf = smith_normal_form(&IntMatrix::from_rows(&rows).expect("square"));
        Self::from_diagonal(&snf.invariant_factors())
    }

    fn from_diagonal(d: &[BigInt]) -> Self {
        Self {
            invariant_factors: d
                .iter()
                .filter_map(|x| x.to_u64())
                .filter(|&x| x >= 2)
                .collect(),
        }
    }

    pub fn invariant_factors(&self) -> &[u64] {
        &self.invariant_factors
    }

    pub fn order(&self) -> u64 {
        self.invariant_factors.iter().product()
    }

    /// Reads invariant factors from counts of elements killed by each
    /// prime power, as obtained by enumeration.
    fn from_element_orders(orders: &[u64]) -> Self {
        let n = orders.len() as u64;
        let mut primes = Vec::new();
        let mut rest = n;
        let mut p = 2;
        while p * p <= rest {
            if rest % p == 0 {
                primes.push(p);
                while rest % p == 0 {
                    rest /= p;
                }
            }
            p += 1;
        }
        if rest > 1 {
            primes.push(rest);
        }
        // exponent multiset per prime: #{a_i ≥ k} = log_p(c_k / c_{k-1})
        let mut cyclic = Vec::new();
        for p in primes {
            let mut prev = 1u64;
            let mut at_least = Vec::new();
            let mut pk = p;
            loop {
                let c = orders.iter().filter(|&&o| pk % o == 0).count() as u64;
                if c == prev {
                    break;
                }
                let mut ratio = c / prev;
                let mut e = 0;
                while ratio > 1 {
                    ratio /= p;
                    e += 1;
                }
                at_least.push(e);
                prev = c;
                pk *= p;
            }
            // at_least[k-1] = number of cyclic p-factors of exponent ≥ k
            let count = at_least.first().copied().unwrap_or(0);
            for i in 0..count {
                let exp = at_least.iter().filter(|&&c| c > i).count() as u32;
                cyclic.push(p.pow(exp));
            }
        }
        Self::from_cyclic_orders(&cyclic)
    }
}

impl fmt::Display for FiniteAbelian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.invariant_factors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.invariant_factors.iter().map(|d| format!("Z/{d}")).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// Verdict for a homomorphism `F × T^m → F_target × T^n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HomClassification {
    pub domain_torus_dim: usize,
    pub target_torus_dim: usize,
    pub rank: usize,
    pub surjective: bool,
    pub kernel_finite: bool,
    pub kernel_order: GroupOrder,
    /// Torsion part `∏ Z/d_i` of the kernel of the torus part.
    pub kernel_finite_part: FiniteAbelian,
    pub image_torus_dim: usize,
    /// Component group `F'` of the image.
    pub image_finite_part: FiniteAbelian,
    pub torus_invariant_factors: Vec<u64>,
}

/// Classifies `x ↦ Mx mod 1` from `T^m` to `T^n` for an `n × m` matrix `M`.
///
/// With `M = U⁻¹ D V⁻¹` the kernel is `∏ Z/d_i × T^(m−r)` and the image is
/// the subtorus of dimension `r = rank M`, so the image is connected.
pub fn classify_torus_hom(m: &IntMatrix) -> HomClassification {
    let snf = smith_normal_form(m);
    let factors = snf.invariant_factors();
    let r = factors.len();
    let (n, dm) = (m.rows(), m.cols());
    let kernel_finite = r == dm;
    let kernel_order = if kernel_finite {
        GroupOrder::Finite(factors.iter().fold(BigInt::one(), |acc, d| acc * d))
    } else {
        GroupOrder::Infinite
    };
    HomClassification {
        domain_torus_dim: dm,
        target_torus_dim: n,
        rank: r,
        surjective: r == n,
        kernel_finite,
        kernel_order,
        kernel_finite_part: FiniteAbelian::from_diagonal(&factors),
        image_torus_dim: r,
        image_finite_part: FiniteAbelian::trivial(),
        torus_invariant_factors: factors.iter().filter_map(|d| d.to_u64()).collect(),
    }
}

/// An explicit homomorphism between products of cyclic groups, given by the
/// images of the standard generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteHom {
    pub source: Vec<u64>,
    pub target: Vec<u64>,
    /// `images[i]` is the image of generator `i` in target coordinates.
    pub images: Vec<Vec<i64>>,
}

fn parse_group(text: &str) -> Result<Vec<u64>, AbelianError> {
    let text = text.trim();
    if text == "1" || text == "0" || text.is_empty() {
        return Ok(Vec::new());
    }
    text.split('x')
        .map(|part| {
            part.trim()
                .strip_prefix("Z/")
                .and_then(|d| d.trim().parse::<u64>().ok())
                .filter(|&d| d >= 1)
                .ok_or_else(|| AbelianError::Parse(text.to_string()))
        })
        .collect()
}

impl FiniteHom {
    /// Parses `"Z/4->Z/2:1->1"`: source and target as `x`-separated cyclic
    /// factors, then `;`-separated entries `i->c1,c2,…` giving the image of
    /// the 1-based generator `i`. Unlisted generators map to zero.
    pub fn parse(text: &str) -> Result<Self, AbelianError> {
        let err = || AbelianError::Parse(text.to_string());
        let (groups, table) = text.split_once(':').unwrap_or((text, ""));
        let (src, dst) = groups.split_once("->").ok_or_else(err)?;
        let source = parse_group(src)?;
        let target = parse_group(dst)?;
        let mut images = vec![vec![0i64; target.len()]; source.len()];
        for entry in table.split(';').map(str::trim).filter(|e| !e.is_empty()) {
            let (g, img) = entry.split_once("->").ok_or_else(err)?;
            let g: usize = g.trim().parse().map_err(|_| err())?;
            if g == 0 || g > source.len() {
                return Err(err());
            }
            let img: Vec<i64> =
                img.split(',').map(|c| c.trim().parse::<i64>().map_err(|_| err())).collect::<Result<_, _>>()?;
            if img.len() != target.len() {
                return Err(err());
            }
            images[g - 1] = img;
        }
        Ok(Self { source, target, images })
    }

    pub fn identity(orders: &[u64]) -> Self {
        let n = orders.len();
        Self {
            source: orders.to_vec(),
            target: orders.to_vec(),
            images: (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect(),
        }
    }

    fn validate(&self) -> Result<u64, AbelianError> {
        if self.images.len() != self.source.len() || self.images.iter().any(|i| i.len() != self.target.len()) {
            return Err(AbelianError::NotAHomomorphism("image table has the wrong shape".into()));
        }
        let order = self.source.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d));
        let order = match order {
            Some(o) if o <= FINITE_GROUP_LIMIT => o,
            Some(o) => return Err(AbelianError::FiniteGroupTooLarge(o)),
            None => return Err(AbelianError::FiniteGroupTooLarge(u64::MAX)),
        };
        for (i, (&d, img)) in self.source.iter().zip(&self.images).enumerate() {
            for (j, (&c, &t)) in img.iter().zip(&self.target).enumerate() {
                if (d as i128 * c as i128).rem_euclid(t as i128) != 0 {
                    return Err(AbelianError::NotAHomomorphism(format!(
                        "generator {} has order {d} but {d}·{c} ≠ 0 in Z/{t} (component {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(order)
    }

    fn apply(&self, coeffs: &[u64]) -> Vec<u64> {
        self.target
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let s: i128 = coeffs.iter().zip(&self.images).map(|(&c, img)| c as i128 * img[j] as i128).sum();
                s.rem_euclid(t as i128) as u64
            })
            .collect()
    }
}

fn element_order(x: &[u64], group: &[u64]) -> u64 {
    x.iter().zip(group).fold(1u64, |acc, (&c, &t)| acc.lcm(&(t / t.gcd(&c))))
}

/// Enumerative facts about a finite homomorphism.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiniteHomSummary {
    pub source_order: u64,
    pub target_order: u64,
    pub image: FiniteAbelian,
    pub image_order: u64,
    pub kernel_order: u64,
    pub surjective: bool,
}

pub fn enumerate_finite_hom(hom: &FiniteHom) -> Result<FiniteHomSummary, AbelianError> {
    let source_order = hom.validate()?;
    let target_order: u64 = hom.target.iter().product();
    let mut image: HashSet<Vec<u64>> = HashSet::new();
    let mut kernel = 0u64;
    let mut coeffs = vec![0u64; hom.source.len()];
    for _ in 0..source_order {
        let img = hom.apply(&coeffs);
        if img.iter().all(|&c| c == 0) {
            kernel += 1;
        }
        image.insert(img);
        for (c, &d) in coeffs.iter_mut().zip(&hom.source) {
            *c += 1;
            if *c < d {
                break;
            }
            *c = 0;
        }
    }
    let orders: Vec<u64> = image.iter().map(|x| element_order(x, &hom.target)).collect();
    let structure = FiniteAbelian::from_element_orders(&orders);
    debug_assert_eq!(structure.order(), image.len() as u64);
    Ok(FiniteHomSummary {
        source_order,
        target_order,
        image_order: image.len() as u64,
        image: structure,
        kernel_order: kernel,
        surjective: image.len() as u64 == target_order,
    })
}

/// Classifies `(f, x) ↦ (φ(f), Mx)` from `F × T^m` to `F_target × T^n`.
pub fn classify_product_hom(finite: &FiniteHom, m: &IntMatrix) -> Result<(HomClassification, FiniteHomSummary), AbelianError> {
    let summary = enumerate_finite_hom(finite)?;
    let mut c = classify_torus_hom(m);
    c.surjective = c.surjective && summary.surjective;
    if let GroupOrder::Finite(k) = &c.kernel_order {
        c.kernel_order = GroupOrder::Finite(k * BigInt::from(summary.kernel_order));
    }
    c.image_finite_part = summary.image.clone();
    assert!(summary.image_order <= summary.source_order, "|F'| ≤ |F| violated");
    Ok((c, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn check_snf(m: &IntMatrix) -> Smith {
        let s = smith_normal_form(m);
        assert_eq!(s.u.mul(m).mul(&s.v), s.d, "U M V = D for {m}");
        assert!(s.u.is_unimodular());
        assert!(s.v.is_unimodular());
        assert_eq!(s.v.mul(&s.v_inverse), IntMatrix::identity(m.cols()));
        s
    }

    #[test]
    fn snf_examples() {
        let s = check_snf(&mat(&[&[2, 4], &[6, 8]]));
        assert_eq!(s.d, mat(&[&[2, 0], &[0, 4]]));
        let s = check_snf(&IntMatrix::identity(3));
        assert_eq!(s.d, IntMatrix::identity(3));
        let s = check_snf(&mat(&[&[0]]));
        assert_eq!(s.d, mat(&[&[0]]));
        let s = check_snf(&mat(&[&[2, 0], &[0, 3]]));
        assert_eq!(s.d, mat(&[&[1, 0], &[0, 6]]));
        let s = check_snf(&mat(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]));
        assert_eq!(s.invariant_factors(), vec![BigInt::from(1), BigInt::from(3)]);
    }

    #[test]
    fn determinants() {
        assert_eq!(mat(&[&[2, 4], &[6, 8]]).det(), BigInt::from(-8));
        assert_eq!(mat(&[&[0, 1], &[1, 0]]).det(), BigInt::from(-1));
        assert_eq!(mat(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 10]]).det(), BigInt::from(-3));
    }

    #[test]
    fn torus_homs() {
        let c = classify_torus_hom(&mat(&[&[2]]));
        assert!(c.surjective && c.kernel_finite);
        assert_eq!(c.kernel_order, GroupOrder::Finite(BigInt::from(2)));
        let c = classify_torus_hom(&mat(&[&[1, 0]]));
        assert!(c.surjective && !c.kernel_finite);
        assert_eq!(c.kernel_order, GroupOrder::Infinite);
        let c = classify_torus_hom(&mat(&[&[2, 0], &[0, 3]]));
        assert!(c.surjective);
        assert_eq!(c.kernel_order, GroupOrder::Finite(BigInt::from(6)));
        assert_eq!(c.kernel_finite_part.invariant_factors(), &[6]);
        let c = classify_torus_hom(&mat(&[&[1], &[0]]));
        assert!(!c.surjective && c.kernel_finite);
        assert_eq!(c.image_torus_dim, 1);
    }

    #[test]
    fn product_homs() {
        let id = FiniteHom::identity(&[2]);
        let (c, s) = classify_product_hom(&id, &mat(&[&[1]])).unwrap();
        assert!(c.surjective);
        assert_eq!(c.kernel_order, GroupOrder::Finite(BigInt::one()));
        assert_eq!(s.image.invariant_factors(), &[2]);

        let red = FiniteHom::parse("Z/4->Z/2:1->1").unwrap();
        let (c, s) = classify_product_hom(&red, &mat(&[&[1]])).unwrap();
        assert!(c.surjective);
        assert_eq!(c.kernel_order, GroupOrder::Finite(BigInt::from(2)));
        assert_eq!((s.image_order, s.source_order), (2, 4));

        let zero = FiniteHom::parse("Z/2->Z/2:").unwrap();
        let (c, _) = classify_product_hom(&zero, &mat(&[&[1]])).unwrap();
        assert!(!c.surjective);
    }

    #[test]
    fn finite_hom_errors() {
        assert!(matches!(FiniteHom::parse("Z/3->Z/2:1->1").map(|h| enumerate_finite_hom(&h)), Ok(Err(AbelianError::NotAHomomorphism(_)))));
        let big = FiniteHom::identity(&[101, 101]);
        assert_eq!(enumerate_finite_hom(&big).unwrap_err(), AbelianError::FiniteGroupTooLarge(10201));
        assert!(FiniteHom::parse("Z/4").is_err());
        assert!(FiniteHom::parse("Z/4->Z/2:3->1").is_err());
    }

    #[test]
    fn image_structure_from_enumeration() {
        // Z/4 x Z/6 -> Z/12 x Z/2, generators to (3,0) and (2,1): the cyclic
        // images meet only in 0, so the map is onto
        let h = FiniteHom::parse("Z/4xZ/6->Z/12xZ/2:1->3,0;2->2,1").unwrap();
        let s = enumerate_finite_hom(&h).unwrap();
        assert_eq!((s.image_order, s.kernel_order), (24, 1));
        assert!(s.surjective);
        assert_eq!(s.image.invariant_factors(), &[2, 12]);
        // generators to (3,0) and (4,0): image Z/12 x 0
        let h = FiniteHom::parse("Z/4xZ/6->Z/12xZ/2:1->3,0;2->4,0").unwrap();
        let s = enumerate_finite_hom(&h).unwrap();
        assert_eq!((s.image_order, s.kernel_order), (12, 2));
        assert!(!s.surjective);
        assert_eq!(s.image.invariant_factors(), &[12]);
        // Z/2 x Z/2 -> Z/2 x Z/4 via (1,0), (0,2)
        let h = FiniteHom::parse("Z/2xZ/2->Z/2xZ/4:1->1,0;2->0,2").unwrap();
        assert_eq!(enumerate_finite_hom(&h).unwrap().image.invariant_factors(), &[2, 2]);
        assert_eq!(FiniteAbelian::from_cyclic_orders(&[2, 3]).invariant_factors(), &[6]);
        assert_eq!(FiniteAbelian::from_cyclic_orders(&[4, 6]).invariant_factors(), &[2, 12]);
    }

    #[test]
    fn lattice_ranks() {
        let b = lattice_rank(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(b.rank, 2);
        assert_eq!(b.basis, IntMatrix::identity(2));
        let b = lattice_rank(&[vec![2, 4], vec![1, 2]]).unwrap();
        assert_eq!(b.rank, 1);
        assert_eq!(b.basis, mat(&[&[1, 2]]));
        assert_eq!(lattice_rank(&[]).unwrap().rank, 0);
        assert_eq!(lattice_rank(&[vec![1], vec![1, 2]]).unwrap_err(), AbelianError::DimensionMismatch(1, 2));
        let b = lattice_rank(&[vec![2, 0], vec![0, 4], vec![2, 4]]).unwrap();
        assert_eq!(b.basis, mat(&[&[2, 0], &[0, 4]]));
        assert!(lattice_coordinates(&b.basis, &[2, 4]).is_some());
        assert!(lattice_coordinates(&b.basis, &[1, 0]).is_none());
        assert!(lattice_coordinates(&b.basis, &[0, 2]).is_none());
        assert_eq!(
            lattice_coordinates(&b.basis, &[4, -8]).unwrap(),
            vec![BigInt::from(2), BigInt::from(-2)]
        );
    }

    #[test]
    fn matrix_parsing() {
        assert_eq!(IntMatrix::parse("[[2,0],[0,3]]").unwrap(), mat(&[&[2, 0], &[0, 3]]));
        assert!(IntMatrix::parse("[[1],[1,2]]").is_err());
        assert!(IntMatrix::parse("nope").is_err());
    }
}
