//! Character eigenfunctions of torus systems and the rotation factor they
//! span.

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abelian::{self, AbelianError};
use crate::complex::CellComplex;
use crate::dynamics::{self, DynamicsError, GridFunction, InvarianceParams, InvarianceVerdict, TorusSystem};
use crate::exec::Execution;
use crate::rational;

/// Default acceptance tolerance for rotations.
pub const ROTATION_TOL: f64 = 1e-6;
/// Default acceptance tolerance for warped systems.
pub const WARPED_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("frequency {k:?} needs |k_i| < grid/2 = {half}")]
    FrequencyTooHigh { k: Vec<i64>, half: f64 },
    #[error("frequency has {got} entries but the system has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tolerance must be finite and nonnegative")]
    InvalidTolerance,
    #[error(
        "bound violated: m = {} exceeds b1/b0 = {}/{} for an applicable system",
        .0.m, .0.bound_b1, .0.bound_b0
    )]
    BoundViolation(Box<MEFReport>),
    #[error("point spectrum rank {rank} exceeds b1 = {b1}")]
    RankExceedsBound { rank: usize, b1: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Abelian(#[from] AbelianError),
}

/// Samples of `x ↦ exp(2πi k·x)`.
pub fn character(k: &[i64], grid: usize) -> GridFunction {
    GridFunction::from_fn(k.len().max(1), grid, |x| Complex64::from_polar(1.0, TAU * dot(k, x)))
}

fn dot(k: &[i64], x: &[f64]) -> f64 {
    k.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenHit {
    pub k: Vec<i64>,
    pub lambda: Complex64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum EigenOutcome {
    Hit(EigenHit),
    Reject { k: Vec<i64>, residual: f64 },
}

impl EigenOutcome {
    pub fn residual(&self) -> f64 {
        match self {
            EigenOutcome::Hit(h) => h.residual,
            EigenOutcome::Reject { residual, .. } => *residual,
        }
    }

    pub fn hit(&self) -> Option<&EigenHit> {
        match self {
            EigenOutcome::Hit(h) => Some(h),
            EigenOutcome::Reject { .. } => None,
        }
    }
}

fn check_frequency(sys: &TorusSystem, k: &[i64]) -> Result<(), SpectralError> {
    if k.len() != sys.dim() {
        return Err(SpectralError::DimensionMismatch { expected: sys.dim(), got: k.len() });
    }
    let half = sys.grid() as f64 / 2.0;
    if k.iter().any(|&ki| ki.unsigned_abs() as f64 >= half) {
        return Err(SpectralError::FrequencyTooHigh { k: k.to_vec(), half });
    }
    Ok(())
}

/// Projects `χ_k ∘ φ` onto `χ_k`, normalizes the coefficient to unit modulus
/// and accepts when the RMS residual is at most `tol`.
pub fn eigen_test(sys: &TorusSystem, k: &[i64], tol: f64) -> Result<EigenOutcome, SpectralError> {
    if !tol.is_finite() || tol < 0.0 {
        return Err(SpectralError::InvalidTolerance);
    }
    check_frequency(sys, k)?;
    Ok(eigen_outcome(sys, k, tol))
}

fn eigen_outcome(sys: &TorusSystem, k: &[i64], tol: f64) -> EigenOutcome {
    let total = sys.point_count();
    let samples: Vec<(Complex64, Complex64)> = (0..total)
        .map(|i| {
            let x = sys.grid_point(i);
            let g = Complex64::from_polar(1.0, TAU * dot(k, &sys.apply(&x)));
            (g, Complex64::from_polar(1.0, TAU * dot(k, &x)))
        })
        .collect();
    let c: Complex64 = samples.iter().map(|(g, chi)| g * chi.conj()).sum::<Complex64>() / total as f64;
    let lambda = if c.norm() > 1e-12 { c / c.norm() } else { Complex64::new(0.0, 0.0) };
    let residual = (samples.iter().map(|(g, chi)| (g - lambda * chi).norm_sqr()).sum::<f64>() / total as f64).sqrt();
    if lambda.norm() > 0.0 && residual <= tol {
        EigenOutcome::Hit(EigenHit { k: k.to_vec(), lambda, residual })
    } else {
        EigenOutcome::Reject { k: k.to_vec(), residual }
    }
}

/// All passing frequencies in the box `|k|∞ ≤ kmax` and the lattice they
/// generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassingLattice {
    pub kmax: usize,
    pub tol: f64,
    pub tested: usize,
    pub hits: Vec<EigenHit>,
    pub basis: Vec<Vec<i64>>,
    pub rank: usize,
    /// Largest residual among hits (0 when there are none).
    pub max_hit_residual: f64,
    /// Smallest residual among rejects, if any.
    pub min_reject_residual: Option<f64>,
    pub symmetric: bool,
    /// Sums `k + k'` of hits inside the box that did not pass.
    pub closure_gaps: usize,
}

impl PassingLattice {
    pub fn lambda(&self, k: &[i64]) -> Option<Complex64> {
        self.hits.iter().find(|h| h.k == k).map(|h| h.lambda)
    }
}

fn frequency_box(dim: usize, kmax: usize) -> Vec<Vec<i64>> {
    let side = 2 * kmax + 1;
    let total = side.pow(dim as u32);
    let mut out: Vec<Vec<i64>> = (0..total)
        .map(|mut c| {
            (0..dim)
                .map(|_| {
                    let d = (c % side) as i64 - kmax as i64;
                    c /= side;
                    d
                })
                .collect()
        })
        .collect();
    out.sort();
    out
}

pub fn passing_lattice(sys: &TorusSystem, kmax: usize, tol: f64) -> Result<PassingLattice, SpectralError> {
    passing_lattice_with(sys, kmax, tol, Execution::default())
}

pub fn passing_lattice_with(sys: &TorusSystem, kmax: usize, tol: f64, exec: Execution) -> Result<PassingLattice, SpectralError> {
    if !tol.is_finite() || tol < 0.0 {
        return Err(SpectralError::InvalidTolerance);
    }
    check_frequency(sys, &vec![kmax as i64; sys.dim()])?;
    let ks = frequency_box(sys.dim(), kmax);
    let outcomes = exec.map_slice(&ks, |k| eigen_outcome(sys, k, tol));
    let hits: Vec<EigenHit> = outcomes.iter().filter_map(|o| o.hit().cloned()).collect();
    let max_hit_residual = hits.iter().map(|h| h.residual).fold(0.0, f64::max);
    let min_reject_residual =
        outcomes.iter().filter(|o| o.hit().is_none()).map(EigenOutcome::residual).reduce(f64::min);
    let index: HashMap<&[i64], &EigenHit> = hits.iter().map(|h| (h.k.as_slice(), h)).collect();
    let symmetric = hits.iter().all(|h| {
        let neg: Vec<i64> = h.k.iter().map(|x| -x).collect();
        index.get(neg.as_slice()).is_some_and(|m| (m.lambda - h.lambda.conj()).norm() <= 1e-9)
    });
    let mut closure_gaps = 0;
    for a in &hits {
        for b in &hits {
            let s: Vec<i64> = a.k.iter().zip(&b.k).map(|(x, y)| x + y).collect();
            if s.iter().all(|x| x.unsigned_abs() as usize <= kmax) && !index.contains_key(s.as_slice()) {
                closure_gaps += 1;
            }
        }
    }
    let vectors: Vec<Vec<i64>> = hits.iter().map(|h| h.k.clone()).collect();
    let lb = abelian::lattice_rank_in(sys.dim(), &vectors)?;
    let basis = lb.basis.to_rows_i64().expect("basis of a bounded box fits in i64");
    Ok(PassingLattice {
        kmax,
        tol,
        tested: ks.len(),
        hits,
        rank: lb.rank,
        basis,
        max_hit_residual,
        min_reject_residual,
        symmetric,
        closure_gaps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MefParams {
    pub kmax: usize,
    pub tol: f64,
    pub invariance: InvarianceParams,
    pub execution: Execution,
}

impl MefParams {
    pub fn new(kmax: usize, tol: f64) -> Self {
        Self { kmax, tol, invariance: InvarianceParams::default(), execution: Execution::default() }
    }
}

/// The rotation factor `F × T^m` read off from passing characters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MEFReport {
    pub dim: usize,
    pub grid: usize,
    pub kmax: usize,
    pub tol: f64,
    pub action: String,
    pub passing: Vec<EigenHit>,
    pub frequency_lattice_basis: Vec<Vec<i64>>,
    pub m: usize,
    /// `b0` of the model; only the order of the finite part is recovered.
    pub finite_order: usize,
    /// Phases `arg λ / 2π` in `[0, 1)` at the basis frequencies.
    pub rotation: Vec<f64>,
    /// Exact fractions for the phases, when the input rotation is rational
    /// with denominator at most the grid size.
    pub rotation_fractions: Option<Vec<String>>,
    pub bound_b1: usize,
    pub bound_b0: usize,
    pub bound_ok: bool,
    pub applicable: bool,
    pub invariance: InvarianceVerdict,
    pub max_hit_residual: f64,
    pub min_reject_residual: Option<f64>,
    pub symmetric: bool,
    pub closure_gaps: usize,
    pub notes: Vec<String>,
}

fn phase(z: Complex64) -> f64 {
    let t = z.arg() / TAU;
    let t = t - t.floor();
    if t >= 1.0 {
        0.0
    } else {
        t
    }
}

/// Builds the report; fails with [`SpectralError::BoundViolation`] when the
/// system satisfies the invariance hypothesis but `m > b1/b0`.
pub fn mef_extract(sys: &TorusSystem, model: &CellComplex, params: &MefParams) -> Result<MEFReport, SpectralError> {
    let invariance = dynamics::is_invariant_constant_torus(sys, &params.invariance);
    let pl = passing_lattice_with(sys, params.kmax, params.tol, params.execution)?;
    let (b0, b1) = (model.betti0(), model.betti1());
    let m = pl.rank;
    let lambdas: Vec<Complex64> = pl
        .basis
        .iter()
        .map(|row| pl.lambda(row).unwrap_or_else(|| eigen_outcome(sys, row, f64::INFINITY).hit().map_or(Complex64::new(0.0, 0.0), |h| h.lambda)))
        .collect();
    let rotation: Vec<f64> = lambdas.iter().map(|&z| phase(z)).collect();
    let rational_input = sys.rotation_vector().iter().all(|r| r.denominator() <= sys.grid() as i128);
    let rotation_fractions = rational_input
        .then(|| {
            rotation
                .iter()
                .map(|&t| rational::recover_fraction(t, sys.grid() as i64, 1e-9).map(|(p, q)| format!("{p}/{q}")))
                .collect::<Option<Vec<_>>>()
        })
        .flatten();
    let mut notes = vec![
        "verdicts quantify over the semigroup generated by the given map".to_string(),
        "the group structure of the finite part beyond its order is not recovered".to_string(),
    ];
    if !invariance.constant {
        notes.push("invariance hypothesis fails: m and rotation are advisory only".to_string());
    }
    if invariance.heuristic {
        notes.push("invariance verdict is heuristic (orbit density)".to_string());
    }
    let report = MEFReport {
        dim: sys.dim(),
        grid: sys.grid(),
        kmax: params.kmax,
        tol: params.tol,
        action: sys.action_kind().to_string(),
        passing: pl.hits,
        frequency_lattice_basis: pl.basis,
        m,
        finite_order: b0,
        rotation,
        rotation_fractions,
        bound_b1: b1,
        bound_b0: b0,
        bound_ok: m * b0 <= b1,
        applicable: invariance.constant,
        invariance,
        max_hit_residual: pl.max_hit_residual,
        min_reject_residual: pl.min_reject_residual,
        symmetric: pl.symmetric,
        closure_gaps: pl.closure_gaps,
        notes,
    };
    if report.applicable && !report.bound_ok {
        return Err(SpectralError::BoundViolation(Box::new(report)));
    }
    Ok(report)
}

/// Free generators of the point spectrum as represented by the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSpectrum {
    pub generators: usize,
    pub rank: usize,
    pub bound_b1: usize,
    /// `λ` at each basis frequency.
    pub eigenvalues: Vec<Complex64>,
}

pub fn point_spectrum_group(report: &MEFReport) -> Result<PointSpectrum, SpectralError> {
    let rank = report.frequency_lattice_basis.len();
    if rank > report.bound_b1 {
        return Err(SpectralError::RankExceedsBound { rank, b1: report.bound_b1 });
    }
    let eigenvalues = report.rotation.iter().map(|&t| Complex64::from_polar(1.0, TAU * t)).collect();
    Ok(PointSpectrum { generators: rank, rank, bound_b1: report.bound_b1, eigenvalues })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex;
    use crate::rational::Rotation;

    fn golden() -> Rotation {
        Rotation::parse("0.6180339887").unwrap()
    }

    #[test]
    fn characters() {
        let c = character(&[0], 8);
        assert!(c.values().iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let c = character(&[1], 4);
        let expect = [Complex64::new(1.0, 0.0), Complex64::i(), Complex64::new(-1.0, 0.0), -Complex64::i()];
        for (a, b) in c.values().iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn eigen_examples() {
        let rot = TorusSystem::rotation(vec![golden()], 256).unwrap();
        for k in -5..=5 {
            let hit = eigen_test(&rot, &[k], 1e-9).unwrap();
            let hit = hit.hit().expect("rotation characters are eigenfunctions");
            assert!(hit.residual < 1e-10);
            assert!((hit.lambda - Complex64::from_polar(1.0, TAU * k as f64 * 0.6180339887)).norm() < 1e-9);
        }
        let dbl = TorusSystem::doubling(256).unwrap();
        let out = eigen_test(&dbl, &[1], 0.01).unwrap();
        assert!(out.hit().is_none());
        assert!((out.residual() - 1.0).abs() < 1e-9);
        let w = TorusSystem::warped_product(golden(), 256).unwrap();
        let out = eigen_test(&w, &[0, 1], WARPED_TOL).unwrap();
        assert!(out.hit().is_none() && out.residual() > 0.3, "{}", out.residual());
        assert!(matches!(eigen_test(&rot, &[128], 0.1), Err(SpectralError::FrequencyTooHigh { .. })));
        assert!(matches!(eigen_test(&rot, &[1, 1], 0.1), Err(SpectralError::DimensionMismatch { .. })));
    }

    #[test]
    fn passing_sets() {
        let rot = TorusSystem::rotation(vec![golden()], 256).unwrap();
        let pl = passing_lattice(&rot, 8, ROTATION_TOL).unwrap();
        assert_eq!(pl.hits.len(), 17);
        assert_eq!((pl.rank, pl.basis.clone()), (1, vec![vec![1]]));
        assert!(pl.symmetric);
        let w = TorusSystem::warped_product(golden(), 256).unwrap();
        let pl = passing_lattice(&w, 5, WARPED_TOL).unwrap();
        assert_eq!(pl.hits.iter().map(|h| h.k.clone()).collect::<Vec<_>>(), (-5..=5).map(|k| vec![k, 0]).collect::<Vec<_>>());
        assert_eq!(pl.basis, vec![vec![1, 0]]);
        assert!(pl.min_reject_residual.unwrap() > 0.3);
        let t2 = TorusSystem::rotation(vec![golden(), Rotation::parse("0.4142135624").unwrap()], 64).unwrap();
        let pl = passing_lattice(&t2, 3, ROTATION_TOL).unwrap();
        assert_eq!((pl.hits.len(), pl.rank), (49, 2));
    }

    #[test]
    fn mef_reports() {
        let rot = TorusSystem::rotation(vec![golden()], 256).unwrap();
        let r = mef_extract(&rot, &complex::cycle(8).unwrap(), &MefParams::new(8, ROTATION_TOL)).unwrap();
        assert_eq!((r.m, r.bound_b0, r.bound_b1, r.bound_ok, r.applicable), (1, 1, 1, true, true));
        assert!((r.rotation[0] - 0.6180339887).abs() < 1e-9);
        assert_eq!(point_spectrum_group(&r).unwrap().rank, 1);

        let w = TorusSystem::warped_product(golden(), 256).unwrap();
        let model = complex::torus_grid(2, 4).unwrap();
        let r = mef_extract(&w, &model, &MefParams::new(5, WARPED_TOL)).unwrap();
        assert_eq!((r.m, r.bound_b1, r.bound_ok, r.applicable), (1, 2, true, true));
        assert!((r.rotation[0] - 0.6180339887).abs() < 1e-6);

        let id = TorusSystem::identity(2, 64).unwrap();
        let r = mef_extract(&id, &model, &MefParams::new(3, ROTATION_TOL)).unwrap();
        assert!(!r.applicable);
        assert_eq!(r.rotation_fractions, Some(vec!["0/1".to_string(), "0/1".to_string()]));

        let t2 = TorusSystem::rotation(vec![golden(), Rotation::parse("0.4142135624").unwrap()], 64).unwrap();
        let err = mef_extract(&t2, &complex::cycle(8).unwrap(), &MefParams::new(2, ROTATION_TOL)).unwrap_err();
        assert!(matches!(err, SpectralError::BoundViolation(ref r) if r.m == 2));

        let q = TorusSystem::rotation(vec![Rotation::parse("3/8").unwrap()], 64).unwrap();
        let r = mef_extract(&q, &complex::cycle(8).unwrap(), &MefParams::new(3, ROTATION_TOL)).unwrap();
        assert_eq!(r.rotation_fractions, Some(vec!["3/8".to_string()]));
        assert!(!r.applicable);
    }
}
