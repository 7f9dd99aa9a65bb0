//! Magnetic confinement criteria, lattice magnetic Schrödinger operators and
//! Weyl endpoint classification of radial reductions.

pub mod criterion;
pub mod domains;
pub mod error;
pub mod exterior;
pub mod fields;
pub mod lattice;
pub mod radial;
pub mod spherical;

pub use criterion::{scan_margin, singular_point_criterion, CriterionReport, ScanOptions, Verdict};
pub use domains::{AffineFunctional, Anchor, Domain, Polytope, Ray, RaySample};
pub use error::{Error, Result};
pub use exterior::{spectral_norm, CoVector, PotentialField, SpectralDecomposition, TwoForm};
pub use fields::{FieldSpec, OneForm, Polynomial};
pub use lattice::{assemble, LatticeOperator, Quadrature};
pub use radial::{esa_verdict_radial, EsaVerdict, Weyl};
