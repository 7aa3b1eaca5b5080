//! Numerical toolkit for finite-dimensional open quantum systems evolving
//! under a detailed-balance GKSL master equation, together with the
//! thermodynamic and information-geometric quantities that enter
//! entropy-based quantum speed limits.
//!
//! The crate is organized bottom-up:
//!
//! - [`operator`] — dense Hermitian algebra: spectral decompositions,
//!   trace norms, expectations, variances, the operator sign function.
//! - [`gksl`] — the master equation itself: Bohr-frequency-resolved jump
//!   operators, the dissipator and its diagonal/off-diagonal split, the
//!   bath-induced effective Hamiltonian, and a fixed-step RK4 integrator.
//! - [`thermo`] — stochastic thermodynamics in the instantaneous eigenbasis
//!   of the state: transition rate matrices, entropy/heat fluxes, entropy
//!   production rate, activity, and the mobility family.
//! - [`fisher`] — monotone-metric machinery: f-inner products, logarithmic
//!   derivatives, Fisher information of state families and of unitary
//!   (asymmetry) generators, and the quantum/classical variance split.
//! - [`ensemble`] — a derivative-free optimizer over pure-state ensembles
//!   used as an independent check of the minimal-variance characterization
//!   of the SLD Fisher information.
//! - [`bounds`] — pointwise evaluation of the speed-limit bounds and their
//!   ordering chain.
//! - [`sample`] — seeded random Hermitian operators, density matrices, and
//!   detailed-balance models for benchmarking and property tests.
//!
//! Units: ħ = 1 throughout; energies and rates share a single frequency
//! unit and times are its inverse.

pub mod bounds;
pub mod ensemble;
pub mod fisher;
pub mod gksl;
pub mod operator;
pub mod sample;
pub mod thermo;
pub mod tolerances;

pub use bounds::{bound_report, BoundError, BoundReport};
pub use gksl::{evolve, LindbladModel, Trajectory};
pub use operator::{HermitianOperator, SpectralState, C64};
