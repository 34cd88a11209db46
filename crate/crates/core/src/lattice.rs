//! Functions on the vertices of a complex as a finite model of `C(K)`:
//! supports, orthogonality, irreducibility and the irreducible decomposition.
//!
//! A function is irreducible when its support is connected; its irreducible
//! parts are the restrictions `1_O f` to the connected components `O` of the
//! support, and they sum back to `f`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{CellComplex, ComplexError, ComplexId, VertexSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("function has {got} values but the complex has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("value at vertex {0} is not finite")]
    NonFinite(usize),
    #[error("functions live on different complexes")]
    ComplexMismatch,
    #[error("vertex {0} is not in the support")]
    NotASubset(usize),
    #[error("lattice operation needs a real-valued function (vertex {0} has nonzero imaginary part)")]
    NotRealValued(usize),
    #[error("tolerance must be a nonnegative finite number, got {0}")]
    InvalidTolerance(f64),
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

/// Threshold turning "f ≠ 0" into "|f| > eps".
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tolerance(f64);

impl Tolerance {
    /// Exact support, for combinatorial inputs.
    pub const EXACT: Tolerance = Tolerance(0.0);
    /// Default for floating-point grid functions.
    pub const GRID: Tolerance = Tolerance(1e-9);

    pub fn new(eps: f64) -> Result<Self, LatticeError> {
        if eps.is_finite() && eps >= 0.0 {
            Ok(Self(eps))
        } else {
            Err(LatticeError::InvalidTolerance(eps))
        }
    }

    pub fn eps(self) -> f64 {
        self.0
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::EXACT
    }
}

/// A complex-valued function on the vertices of a fixed complex.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    complex: ComplexId,
    values: Vec<Complex64>,
}

impl LatticeFunction {
    pub fn new(complex: &CellComplex, values: Vec<Complex64>) -> Result<Self, LatticeError> {
        Self::on(complex.id(), complex.vertex_count(), values)
    }

    /// Builds a function on the complex with the given id and vertex count.
    pub fn on(complex: ComplexId, vertex_count: usize, values: Vec<Complex64>) -> Result<Self, LatticeError> {
        if values.len() != vertex_count {
            return Err(LatticeError::LengthMismatch { expected: vertex_count, got: values.len() });
        }
        if let Some(v) = values.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LatticeError::NonFinite(v));
        }
        Ok(Self { complex, values })
    }

    pub fn real(complex: &CellComplex, values: &[f64]) -> Result<Self, LatticeError> {
        Self::new(complex, values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zero(complex: &CellComplex) -> Self {
        Self { complex: complex.id(), values: vec![Complex64::new(0.0, 0.0); complex.vertex_count()] }
    }

    pub fn constant(complex: &CellComplex, c: Complex64) -> Self {
        Self { complex: complex.id(), values: vec![c; complex.vertex_count()] }
    }

    pub fn indicator(complex: &CellComplex, set: &VertexSet) -> Result<Self, LatticeError> {
        complex.check_vertex_set(set)?;
        let mut f = Self::zero(complex);
        for v in set.iter() {
            f.values[v] = Complex64::new(1.0, 0.0);
        }
        Ok(f)
    }

    pub fn complex_id(&self) -> ComplexId {
        self.complex
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn support(&self, tol: Tolerance) -> VertexSet {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() > tol.eps())
            .map(|(v, _)| v)
            .collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|z| z.im == 0.0)
    }

    /// `1_M · f`.
    pub fn masked(&self, set: &VertexSet) -> Self {
        let mut values = vec![Complex64::new(0.0, 0.0); self.values.len()];
        for v in set.iter() {
            values[v] = self.values[v];
        }
        Self { complex: self.complex, values }
    }

    /// `|f|`, defined for complex values.
    pub fn abs(&self) -> Self {
        Self {
            complex: self.complex,
            values: self.values.iter().map(|z| Complex64::new(z.norm(), 0.0)).collect(),
        }
    }

    fn same_complex(&self, other: &Self) -> Result<(), LatticeError> {
        if self.complex != other.complex || self.values.len() != other.values.len() {
            Err(LatticeError::ComplexMismatch)
        } else {
            Ok(())
        }
    }

    fn real_values(&self) -> Result<Vec<f64>, LatticeError> {
        self.values
            .iter()
            .enumerate()
            .map(|(v, z)| if z.im == 0.0 { Ok(z.re) } else { Err(LatticeError::NotRealValued(v)) })
            .collect()
    }

    fn from_real(&self, values: impl Iterator<Item = f64>) -> Self {
        Self { complex: self.complex, values: values.map(|x| Complex64::new(x, 0.0)).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self, LatticeError> {
        self.same_complex(other)?;
        Ok(Self {
            complex: self.complex,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LatticeError> {
        self.same_complex(other)?;
        Ok(Self {
            complex: self.complex,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self, LatticeError> {
        self.same_complex(other)?;
        Ok(Self {
            complex: self.complex,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        })
    }

    /// Pointwise maximum `f ∨ g` of real-valued functions.
    pub fn sup(&self, other: &Self) -> Result<Self, LatticeError> {
        self.same_complex(other)?;
        let (a, b) = (self.real_values()?, other.real_values()?);
        Ok(self.from_real(a.iter().zip(&b).map(|(x, y)| x.max(*y))))
    }

    /// Pointwise minimum `f ∧ g` of real-valued functions.
    pub fn inf(&self, other: &Self) -> Result<Self, LatticeError> {
        self.same_complex(other)?;
        let (a, b) = (self.real_values()?, other.real_values()?);
        Ok(self.from_real(a.iter().zip(&b).map(|(x, y)| x.min(*y))))
    }

    /// `f₊ = f ∨ 0`.
    pub fn positive_part(&self) -> Result<Self, LatticeError> {
        let a = self.real_values()?;
        Ok(self.from_real(a.into_iter().map(|x| x.max(0.0))))
    }

    /// `(f − c·1)₊` for a real constant `c`.
    pub fn shifted_positive_part(&self, c: f64) -> Result<Self, LatticeError> {
        let a = self.real_values()?;
        Ok(self.from_real(a.into_iter().map(|x| (x - c).max(0.0))))
    }
}

fn check_complex(k: &CellComplex, f: &LatticeFunction) -> Result<(), LatticeError> {
    if f.complex != k.id() || f.values.len() != k.vertex_count() {
        Err(LatticeError::ComplexMismatch)
    } else {
        Ok(())
    }
}

pub fn support(f: &LatticeFunction, tol: Tolerance) -> VertexSet {
    f.support(tol)
}

/// Whether `M ⊆ [f ≠ 0]` is a union of connected components of the support,
/// i.e. no support edge leaves `M`.
pub fn is_clopen_in_support(
    k: &CellComplex,
    f: &LatticeFunction,
    m: &VertexSet,
    tol: Tolerance,
) -> Result<bool, LatticeError> {
    check_complex(k, f)?;
    k.check_vertex_set(m)?;
    let supp = f.support(tol).mask(k.vertex_count());
    if let Some(v) = m.iter().find(|&v| !supp[v]) {
        return Err(LatticeError::NotASubset(v));
    }
    let inside = m.mask(k.vertex_count());
    Ok(k.edges().iter().all(|&(u, v)| !(supp[u] && supp[v]) || inside[u] == inside[v]))
}

/// `f = 0` is reducible; otherwise `f` is irreducible iff its support is
/// connected.
pub fn is_irreducible(k: &CellComplex, f: &LatticeFunction, tol: Tolerance) -> Result<bool, LatticeError> {
    check_complex(k, f)?;
    Ok(k.is_connected_set(&f.support(tol)))
}

/// Irreducible parts `1_O f`, one per connected component `O` of the support,
/// ordered by the smallest vertex of `O`.
pub fn irr(k: &CellComplex, f: &LatticeFunction, tol: Tolerance) -> Result<Vec<LatticeFunction>, LatticeError> {
    check_complex(k, f)?;
    let supp = f.support(tol).mask(k.vertex_count());
    Ok(k.components_within(&supp).iter().map(|o| f.masked(o)).collect())
}

/// The unique irreducible decomposition of `f`. With `eps > 0` values of
/// modulus at most `eps` are dropped, so the parts reconstruct `f` up to `eps`
/// in sup-norm.
pub fn irreducible_decomposition(
    k: &CellComplex,
    f: &LatticeFunction,
    tol: Tolerance,
) -> Result<Vec<LatticeFunction>, LatticeError> {
    irr(k, f, tol)
}

/// `f ⊥ g` iff `f·g` vanishes identically.
pub fn orthogonal(f: &LatticeFunction, g: &LatticeFunction) -> Result<bool, LatticeError> {
    f.same_complex(g)?;
    Ok(f.values.iter().zip(&g.values).all(|(a, b)| a * b == Complex64::new(0.0, 0.0)))
}

/// Pointwise sum of `parts`; `None` for an empty list.
pub fn reconstruct(parts: &[LatticeFunction]) -> Result<Option<LatticeFunction>, LatticeError> {
    let mut it = parts.iter();
    let Some(first) = it.next() else {
        return Ok(None);
    };
    let mut acc = first.clone();
    for p in it {
        acc = acc.add(p)?;
    }
    Ok(Some(acc))
}

/// On-disk layout of `function.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionFile {
    pub complex: String,
    pub values: Vec<[f64; 2]>,
}

impl FunctionFile {
    pub fn to_function(&self, k: &CellComplex) -> Result<LatticeFunction, LatticeError> {
        LatticeFunction::new(k, self.values.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
    }
}

/// Printable form of one irreducible part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartSummary {
    pub support: VertexSet,
    pub values: BTreeMap<usize, [f64; 2]>,
}

impl PartSummary {
    pub fn of(part: &LatticeFunction, tol: Tolerance) -> Self {
        let support = part.support(tol);
        let values = support.iter().map(|v| (v, [part.values[v].re, part.values[v].im])).collect();
        Self { support, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::cycle;

    fn c8() -> CellComplex {
        cycle(8).unwrap()
    }

    fn real(k: &CellComplex, v: &[f64]) -> LatticeFunction {
        LatticeFunction::real(k, v).unwrap()
    }

    #[test]
    fn supports() {
        let k = c8();
        assert!(LatticeFunction::zero(&k).support(Tolerance::new(0.3).unwrap()).is_empty());
        let ind = LatticeFunction::indicator(&k, &VertexSet::new([0, 1])).unwrap();
        assert_eq!(support(&ind, Tolerance::EXACT), VertexSet::new([0, 1]));
        let small = real(&k, &[0.05, 0., 0., 0., 0., 0., 0., 0.]);
        assert!(small.support(Tolerance::new(0.1).unwrap()).is_empty());
        assert!(Tolerance::new(-1.0).is_err());
    }

    #[test]
    fn clopen_subsets() {
        let k = c8();
        let one = real(&k, &[1.0; 8]);
        let t = Tolerance::EXACT;
        assert!(is_clopen_in_support(&k, &one, &VertexSet::full(8), t).unwrap());
        assert!(!is_clopen_in_support(&k, &one, &VertexSet::new([0, 1, 2]), t).unwrap());
        let arcs = real(&k, &[1., 2., 0., 0., 3., 4., 0., 0.]);
        assert!(is_clopen_in_support(&k, &arcs, &VertexSet::new([4, 5]), t).unwrap());
        assert!(!is_clopen_in_support(&k, &arcs, &VertexSet::new([4]), t).unwrap());
        assert_eq!(
            is_clopen_in_support(&k, &arcs, &VertexSet::new([2]), t).unwrap_err(),
            LatticeError::NotASubset(2)
        );
    }

    #[test]
    fn irreducibility() {
        let k = c8();
        let t = Tolerance::EXACT;
        assert!(!is_irreducible(&k, &LatticeFunction::zero(&k), t).unwrap());
        assert!(is_irreducible(&k, &real(&k, &[0., 1., 2., 1., 0., 0., 0., 0.]), t).unwrap());
        assert!(!is_irreducible(&k, &real(&k, &[0., 1., 0., 0., 1., 0., 0., 0.]), t).unwrap());
    }

    #[test]
    fn irr_of_two_arcs() {
        let k = c8();
        let f = real(&k, &[1., 2., 0., 0., 3., 4., 0., 0.]);
        let parts = irr(&k, &f, Tolerance::EXACT).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0], f.masked(&VertexSet::new([0, 1])));
        assert_eq!(parts[1], f.masked(&VertexSet::new([4, 5])));
        assert!(orthogonal(&parts[0], &parts[1]).unwrap());
        assert!(!orthogonal(&f, &f).unwrap());
        assert!(irr(&k, &LatticeFunction::zero(&k), Tolerance::EXACT).unwrap().is_empty());
    }

    #[test]
    fn arc_wrapping_through_zero_is_one_part() {
        let k = c8();
        let f = real(&k, &[1., 0., 0., 0., 0., 0., 2., 3.]);
        let parts = irreducible_decomposition(&k, &f, Tolerance::EXACT).unwrap();
        assert_eq!(parts, vec![f.clone()]);
    }

    #[test]
    fn three_bumps_reconstruct_up_to_eps() {
        let k = cycle(12).unwrap();
        let vals = [0.5, 1.0, 1e-12, 0., 2.0, 0., 0., 3.0, 1.5, 0., 1e-11, 0.];
        let f = real(&k, &vals);
        let tol = Tolerance::GRID;
        let parts = irreducible_decomposition(&k, &f, tol).unwrap();
        assert_eq!(parts.len(), 3);
        let sum = reconstruct(&parts).unwrap().unwrap();
        assert!(f.sub(&sum).unwrap().sup_norm() <= tol.eps());
    }

    #[test]
    fn mismatched_complexes() {
        let a = LatticeFunction::zero(&c8());
        let b = LatticeFunction::zero(&cycle(5).unwrap());
        assert_eq!(orthogonal(&a, &b).unwrap_err(), LatticeError::ComplexMismatch);
        assert_eq!(irr(&cycle(5).unwrap(), &a, Tolerance::EXACT).unwrap_err(), LatticeError::ComplexMismatch);
    }

    #[test]
    fn lattice_ops_need_real_values() {
        let k = c8();
        let mut v = vec![Complex64::new(1.0, 0.0); 8];
        v[3] = Complex64::new(0.0, 1.0);
        let f = LatticeFunction::new(&k, v).unwrap();
        assert_eq!(f.positive_part().unwrap_err(), LatticeError::NotRealValued(3));
        assert!(f.abs().positive_part().is_ok());
        let g = real(&k, &[-1., 2., 0., 3., -4., 0., 1., 1.]);
        assert_eq!(g.positive_part().unwrap(), real(&k, &[0., 2., 0., 3., 0., 0., 1., 1.]));
        assert_eq!(g.shifted_positive_part(1.0).unwrap(), real(&k, &[0., 1., 0., 2., 0., 0., 0., 0.]));
        let h = real(&k, &[0.; 8]);
        assert_eq!(g.sup(&h).unwrap(), g.positive_part().unwrap());
        assert_eq!(g.inf(&h).unwrap(), real(&k, &[-1., 0., 0., 0., -4., 0., 0., 0.]));
    }

    #[test]
    fn non_finite_values_rejected() {
        assert_eq!(
            LatticeFunction::real(&c8(), &[0., 0., f64::NAN, 0., 0., 0., 0., 0.]).unwrap_err(),
            LatticeError::NonFinite(2)
        );
    }
}
