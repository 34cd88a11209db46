//! Finite combinatorial and grid models of compact spaces, monotone quotient
//! maps, and the equicontinuous factors of torus systems.
//!
//! * [`complex`]: cubical complexes with exact `b0`, `b1`.
//! * [`lattice`]: functions on vertices, supports and irreducible parts.
//! * [`quotient`]: quotient maps, monotonicity criteria, monotone hulls.
//! * [`dynamics`]: finite actions, torus systems, equicontinuity estimates.
//! * [`spectral`]: character eigenfunctions and equicontinuous factor extraction.
//! * [`abelian`]: Smith normal form and torus homomorphisms.
//!
//! [`fixtures`], [`random`] and [`selftest`] provide the named examples,
//! seeded generators and reproducible check suites.

pub mod abelian;
pub mod complex;
pub mod dynamics;
mod exec;
pub mod fixtures;
pub mod lattice;
pub mod quotient;
pub mod random;
pub mod rational;
pub mod selftest;
pub mod spectral;
mod unionfind;

pub use exec::Execution;
pub use unionfind::DisjointSets;
