//! Numerical workbench for tri-additive s-functional inequalities.
//!
//! The crate realises three concrete finite-dimensional complex Banach
//! algebras ([`algebra`]), tri-maps on them built from exact trilinear
//! tensors plus structured perturbations ([`trimap`]), evaluators for the two
//! s-functional inequalities and the derivation/homomorphism defects
//! ([`inequality`]), the direct-method limit `lim 2^n f(x/2^n, z, a)` together
//! with the stability and hyperstability verifiers ([`hyers`]), and seeded
//! experiment orchestration with self-auditing reports ([`experiment`]).

pub mod algebra;
pub mod error;
pub mod experiment;
pub mod hyers;
pub mod inequality;
pub mod plot;
pub mod rng;
pub mod trimap;

pub use algebra::{AlgebraDescriptor, AlgebraKind, Element, DEFAULT_TOL};
pub use error::{Error, Result};
pub use experiment::{emit_report, read_report, run_suite, ExperimentConfig, MapRecipe, Suite, Tolerances, Verdict, VerificationReport};
pub use hyers::{BoundKind, Direction, HyersConfig, HyersResult, Regime, TailModel};
pub use inequality::{IneqEvaluation, SampleTuple, Variant};
pub use num_complex::Complex64;
pub use trimap::{PerturbationKind, PerturbationSpec, StabilityParams, TriEval, TriMap, TrilinearTensor};
