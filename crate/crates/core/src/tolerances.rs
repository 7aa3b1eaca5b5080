//! Numerical tolerances used across the crate, collected in one place so
//! that validation code and tests agree on the same thresholds.

/// Anti-Hermitian residual above which a matrix is rejected instead of
/// being symmetrized away. Integrator drift stays many orders below this;
/// anything larger indicates corrupted input.
pub const HERMITICITY_REJECT: f64 = 1e-8;

/// Max-entry residual for exact structural identities checked after an
/// eigendecomposition (reconstruction, basis unitarity).
pub const SPECTRAL_RESIDUAL: f64 = 1e-10;

/// Most negative eigenvalue tolerated in a density matrix.
pub const STATE_POSITIVITY: f64 = -1e-10;

/// Allowed deviation of a density-matrix trace from one.
pub const STATE_TRACE: f64 = 1e-9;

/// Positivity floor along integrated trajectories. Looser than
/// [`STATE_POSITIVITY`] because RK4 steps transiently undershoot.
pub const TRAJECTORY_POSITIVITY: f64 = -1e-8;

/// Trace drift beyond which an integrated state is renormalized.
pub const TRACE_RENORM: f64 = 1e-12;

/// Absolute tolerance when grouping energy gaps into Bohr frequencies.
pub const BOHR_GROUPING: f64 = 1e-9;

/// Relative residual allowed in the detailed-balance condition
/// γ(−ω) = γ(ω)·e^(−βω).
pub const DETAILED_BALANCE: f64 = 1e-9;

/// Max-entry residual allowed in the adjoint pairing L(ω)† = L(−ω).
pub const ADJOINT_PAIRING: f64 = 1e-10;

/// Resolved jump components with max entry below this are dropped.
pub const JUMP_PRUNE: f64 = 1e-14;

/// Populations closer than this are treated as degenerate when splitting
/// the dissipator and building the effective Hamiltonian.
pub const DEGENERACY_GAP: f64 = 1e-10;

/// Off-diagonal dissipator element connecting equal populations that is
/// too large to attribute to roundoff; triggers the degeneracy error.
pub const DEGENERACY_RESIDUAL: f64 = 1e-8;

/// Rate-matrix entries below this are pruned (they would otherwise feed
/// 0/0 into logarithmic means and the entropy production sum).
pub const RATE_PRUNE: f64 = 1e-15;

/// Floor applied to populations inside ln p before they enter the entropy
/// flux.
pub const LOG_POPULATION_FLOOR: f64 = 1e-14;

/// Diagonal flux |⟨n|ρ̇|n⟩| into a floored population above which the
/// entropy flux is reported as divergent rather than finite.
pub const DIVERGENT_FLUX: f64 = 1e-6;

/// Forward probability flux above which a vanishing reverse flux makes the
/// entropy production rate divergent.
pub const DIVERGENT_PRODUCTION: f64 = 1e-12;

/// Eigenvalues of an operator smaller than this in magnitude map to zero
/// under the operator sign function.
pub const SIGN_NULL: f64 = 1e-12;

/// Slack on the speed-limit inequality chain; absorbs accumulated
/// eigensolver error. Violations beyond this are hard failures.
pub const CHAIN_SLACK: f64 = 1e-9;

/// Agreement required between the rate-matrix and flux forms of the
/// entropy production rate when both are finite.
pub const SIGMA_DUAL_AGREEMENT: f64 = 1e-6;
