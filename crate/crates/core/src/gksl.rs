//! Detailed-balance GKSL dynamics.
//!
//! A [`LindbladModel`] holds a time-independent Hamiltonian, a set of raw
//! jump operators, and bath rates resolved by Bohr frequency. Construction
//! decomposes each raw jump L into components L(ω) = Σ Pₙ L Pₘ over energy
//! eigenprojectors with gap ω = εₘ − εₙ, completes the set so that
//! L(ω)† = L(−ω) always holds, and validates the detailed-balance
//! condition γ(−ω) = γ(ω)·e^(−βω), which makes the Gibbs state stationary.
//!
//! The dissipator splits, in the eigenbasis of the instantaneous state ρ,
//! into a diagonal piece (classical population flow) and an off-diagonal
//! piece that acts like a commutator with a bath-induced effective
//! Hamiltonian. [`resolve_dynamics`] computes the whole bundle at one
//! state, fixing the basis inside degenerate eigenvalue blocks so the
//! split is well defined there too.
//!
//! Ref: Breuer & Petruccione, "The Theory of Open Quantum Systems" (2002).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::operator::{commutator, max_abs, HermitianOperator, OperatorError, SpectralState, C64};
use crate::tolerances as tol;

/// A raw (unresolved) jump operator, one dissipation channel.
#[derive(Debug, Clone)]
pub struct JumpOperator {
    pub label: String,
    pub matrix: DMatrix<C64>,
}

impl JumpOperator {
    pub fn new(label: impl Into<String>, matrix: DMatrix<C64>) -> Self {
        Self {
            label: label.into(),
            matrix,
        }
    }
}

/// One bath rate γ_α(ω), keyed by channel index and Bohr frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEntry {
    pub channel: usize,
    pub frequency: f64,
    pub rate: f64,
}

/// A Bohr-frequency component of a raw jump operator, with its rate.
#[derive(Debug, Clone)]
pub struct ResolvedJump {
    /// Index into the raw jump list.
    pub channel: usize,
    /// Signed Bohr frequency ω of this component.
    pub frequency: f64,
    /// Bath rate γ(ω) ≥ 0.
    pub rate: f64,
    /// The component operator L(ω) in the computational basis.
    pub operator: DMatrix<C64>,
    /// Index of the reverse component (−ω, same channel); self for ω = 0.
    pub partner: usize,
    adjoint: DMatrix<C64>,
    ldl: DMatrix<C64>,
}

impl ResolvedJump {
    pub fn adjoint(&self) -> &DMatrix<C64> {
        &self.adjoint
    }
}

/// Errors raised during model construction.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("jump '{label}' is {rows}x{cols}, expected {dim}x{dim}")]
    JumpDimension {
        label: String,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("inverse temperature must be finite, got {beta}")]
    InvalidBeta { beta: f64 },
    #[error("rate for channel {channel} at ω = {frequency} matches no Bohr frequency")]
    UnmatchedRateFrequency { channel: usize, frequency: f64 },
    #[error("duplicate rate for channel {channel} at ω = {frequency}")]
    DuplicateRate { channel: usize, frequency: f64 },
    #[error("rate for channel {channel} at ω = {frequency} must be finite and ≥ 0, got {rate}")]
    InvalidRate {
        channel: usize,
        frequency: f64,
        rate: f64,
    },
    #[error(
        "detailed balance violated for channel {channel} at ω = {frequency}: \
         relative residual {residual:.3e}"
    )]
    DetailedBalance {
        channel: usize,
        frequency: f64,
        residual: f64,
    },
    #[error(
        "adjoint pairing L(ω)† = L(−ω) violated for channel {channel} at ω = {frequency}: \
         residual {residual:.3e}"
    )]
    AdjointPairing {
        channel: usize,
        frequency: f64,
        residual: f64,
    },
    #[error("rate channel index {channel} out of range ({count} jump operators)")]
    UnknownChannel { channel: usize, count: usize },
}

/// Errors raised while evaluating the dissipator split at a state.
#[derive(Debug, Error)]
pub enum GkslError {
    #[error(
        "dissipator couples degenerate populations (gap {gap:.3e}) with element \
         {element:.3e}; no commutator with ρ can produce it"
    )]
    Degeneracy { gap: f64, element: f64 },
}

/// GKSL model: Hamiltonian, jump channels resolved by Bohr frequency, and
/// a detailed-balance bath at inverse temperature β.
///
/// Immutable after construction; evaluation methods are pure.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    hamiltonian: HermitianOperator,
    jumps: Vec<JumpOperator>,
    beta: f64,
    bohr_frequencies: Vec<f64>,
    resolved: Vec<ResolvedJump>,
}

/// Gap clustering of the Hamiltonian spectrum: non-negative representative
/// frequencies plus, for each ordered index pair, the signed frequency of
/// its gap.
struct GapTable {
    /// Distinct gap magnitudes, ascending; the first entry is 0.
    magnitudes: Vec<f64>,
    /// Signed frequency per ordered pair (n, m): ω = ε(m) − ε(n) snapped
    /// to a representative.
    pair_frequency: DMatrix<f64>,
}

fn cluster_gaps(energies: &DVector<f64>) -> GapTable {
    let n = energies.len();
    let mut mags: Vec<f64> = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            mags.push((energies[b] - energies[a]).abs());
        }
    }
    mags.sort_by(|a, b| a.partial_cmp(b).expect("finite energies"));
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for &g in &mags {
        match clusters.last_mut() {
            Some(c) if g - *c.last().expect("non-empty cluster") <= tol::BOHR_GROUPING => {
                c.push(g)
            }
            _ => clusters.push(vec![g]),
        }
    }
    let mut magnitudes: Vec<f64> = clusters
        .iter()
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    if magnitudes[0] <= tol::BOHR_GROUPING {
        magnitudes[0] = 0.0;
    }
    let nearest = |g: f64| -> f64 {
        magnitudes
            .iter()
            .copied()
            .min_by(|a, b| {
                (a - g).abs()
                    .partial_cmp(&(b - g).abs())
                    .expect("finite gaps")
            })
            .expect("at least the zero cluster")
    };
    let pair_frequency = DMatrix::from_fn(n, n, |a, b| {
        let gap = energies[b] - energies[a];
        let w = nearest(gap.abs());
        if w == 0.0 {
            0.0
        } else if gap > 0.0 {
            w
        } else {
            -w
        }
    });
    GapTable {
        magnitudes,
        pair_frequency,
    }
}

impl LindbladModel {
    /// Decompose the raw jumps by Bohr frequency and validate the bath.
    ///
    /// Jump components are computed as L(ω) = Σ Pₙ L Pₘ over eigenpairs
    /// with εₘ − εₙ = ω (grouped within [`tol::BOHR_GROUPING`]). For every
    /// component present at ω whose reverse at −ω is absent, the adjoint
    /// L(ω)† is inserted there, so the resolved set always satisfies
    /// L(ω)† = L(−ω); if both are present but disagree, construction
    /// fails. Rates may be omitted for components that should stay inert
    /// (γ = 0).
    pub fn new(
        hamiltonian: HermitianOperator,
        jumps: Vec<JumpOperator>,
        rates: &[RateEntry],
        beta: f64,
    ) -> Result<Self, ModelError> {
        if !beta.is_finite() {
            return Err(ModelError::InvalidBeta { beta });
        }
        let dim = hamiltonian.dim();
        for j in &jumps {
            if j.matrix.nrows() != dim || j.matrix.ncols() != dim {
                return Err(ModelError::JumpDimension {
                    label: j.label.clone(),
                    rows: j.matrix.nrows(),
                    cols: j.matrix.ncols(),
                    dim,
                });
            }
        }

        let eig = hamiltonian.eigen();
        let gaps = cluster_gaps(&eig.values);
        let signed_frequencies: Vec<f64> = {
            let mut f: Vec<f64> = gaps
                .magnitudes
                .iter()
                .flat_map(|&w| if w == 0.0 { vec![0.0] } else { vec![w, -w] })
                .collect();
            f.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            f
        };

        // Validate and index the rate table against the Bohr frequencies.
        let snap = |freq: f64| -> Option<f64> {
            signed_frequencies
                .iter()
                .copied()
                .find(|w| (w - freq).abs() <= tol::BOHR_GROUPING)
        };
        let mut rate_of: Vec<(usize, f64, f64)> = Vec::new();
        for r in rates {
            if r.channel >= jumps.len() {
                return Err(ModelError::UnknownChannel {
                    channel: r.channel,
                    count: jumps.len(),
                });
            }
            if !r.rate.is_finite() || r.rate < 0.0 {
                return Err(ModelError::InvalidRate {
                    channel: r.channel,
                    frequency: r.frequency,
                    rate: r.rate,
                });
            }
            let w = snap(r.frequency).ok_or(ModelError::UnmatchedRateFrequency {
                channel: r.channel,
                frequency: r.frequency,
            })?;
            if rate_of.iter().any(|&(c, f, _)| c == r.channel && f == w) {
                return Err(ModelError::DuplicateRate {
                    channel: r.channel,
                    frequency: r.frequency,
                });
            }
            rate_of.push((r.channel, w, r.rate));
        }
        let lookup_rate = |channel: usize, w: f64| -> f64 {
            rate_of
                .iter()
                .find(|&&(c, f, _)| c == channel && f == w)
                .map(|&(_, _, g)| g)
                .unwrap_or(0.0)
        };

        // Resolve each channel into eigenbasis component matrices keyed by
        // signed frequency, then complete adjoint pairs.
        let basis = &eig.vectors;
        let mut resolved: Vec<ResolvedJump> = Vec::new();
        for (channel, jump) in jumps.iter().enumerate() {
            let tilde = basis.adjoint() * &jump.matrix * basis;
            let mut components: Vec<(f64, DMatrix<C64>)> = Vec::new();
            for &w in &signed_frequencies {
                let mut comp = DMatrix::<C64>::zeros(dim, dim);
                for a in 0..dim {
                    for b in 0..dim {
                        if gaps.pair_frequency[(a, b)] == w {
                            comp[(a, b)] = tilde[(a, b)];
                        }
                    }
                }
                if max_abs(&comp) > tol::JUMP_PRUNE {
                    components.push((w, comp));
                }
            }

            // Adjoint completion / consistency per frequency pair.
            let mut completed: Vec<(f64, DMatrix<C64>)> = Vec::new();
            for (w, comp) in &components {
                completed.push((*w, comp.clone()));
            }
            for (w, comp) in &components {
                if *w == 0.0 {
                    let residual = max_abs(&(comp - comp.adjoint()));
                    if residual > tol::ADJOINT_PAIRING {
                        return Err(ModelError::AdjointPairing {
                            channel,
                            frequency: 0.0,
                            residual,
                        });
                    }
                    continue;
                }
                match components.iter().find(|(v, _)| *v == -*w) {
                    Some((_, reverse)) => {
                        let residual = max_abs(&(reverse - comp.adjoint()));
                        if residual > tol::ADJOINT_PAIRING {
                            return Err(ModelError::AdjointPairing {
                                channel,
                                frequency: *w,
                                residual,
                            });
                        }
                    }
                    None => completed.push((-*w, comp.adjoint())),
                }
            }
            completed.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));

            let base_index = resolved.len();
            let partner_of = |w: f64, list: &[(f64, DMatrix<C64>)]| -> usize {
                list.iter()
                    .position(|(v, _)| *v == -w)
                    .expect("completion guarantees the reverse component")
            };
            for (w, comp_tilde) in &completed {
                let operator = basis * comp_tilde * basis.adjoint();
                let adjoint = operator.adjoint();
                let ldl = &adjoint * &operator;
                resolved.push(ResolvedJump {
                    channel,
                    frequency: *w,
                    rate: lookup_rate(channel, *w),
                    operator,
                    partner: base_index + partner_of(*w, &completed),
                    adjoint,
                    ldl,
                });
            }
        }

        let model = Self {
            hamiltonian,
            jumps,
            beta,
            bohr_frequencies: signed_frequencies,
            resolved,
        };
        model.check_detailed_balance()?;
        Ok(model)
    }

    /// Build a model whose negative-frequency rates follow from detailed
    /// balance: γ(ω) for ω ≥ 0 comes from `base_rate(channel, ω)` and
    /// γ(−ω) = γ(ω)·e^(−βω).
    pub fn with_thermal_rates(
        hamiltonian: HermitianOperator,
        jumps: Vec<JumpOperator>,
        beta: f64,
        mut base_rate: impl FnMut(usize, f64) -> f64,
    ) -> Result<Self, ModelError> {
        let dry = Self::new(hamiltonian.clone(), jumps.clone(), &[], beta)?;
        let mut rates = Vec::new();
        for r in &dry.resolved {
            if r.frequency < 0.0 {
                continue;
            }
            let gamma = base_rate(r.channel, r.frequency);
            rates.push(RateEntry {
                channel: r.channel,
                frequency: r.frequency,
                rate: gamma,
            });
            if r.frequency > 0.0 {
                rates.push(RateEntry {
                    channel: r.channel,
                    frequency: -r.frequency,
                    rate: gamma * (-beta * r.frequency).exp(),
                });
            }
        }
        Self::new(hamiltonian, jumps, &rates, beta)
    }

    fn check_detailed_balance(&self) -> Result<(), ModelError> {
        for r in &self.resolved {
            if r.frequency <= 0.0 {
                continue;
            }
            let reverse = &self.resolved[r.partner];
            let expected = r.rate * (-self.beta * r.frequency).exp();
            let scale = expected.max(reverse.rate);
            let residual = (reverse.rate - expected).abs();
            let floor = 1e-15 * r.rate.max(reverse.rate).max(1.0);
            if scale > 0.0 && residual > tol::DETAILED_BALANCE * scale + floor {
                return Err(ModelError::DetailedBalance {
                    channel: r.channel,
                    frequency: r.frequency,
                    residual: residual / scale,
                });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn jumps(&self) -> &[JumpOperator] {
        &self.jumps
    }

    /// Distinct signed Bohr frequencies of the Hamiltonian, ascending.
    pub fn bohr_frequencies(&self) -> &[f64] {
        &self.bohr_frequencies
    }

    pub fn resolved_jumps(&self) -> &[ResolvedJump] {
        &self.resolved
    }

    /// Dissipator D[ρ] = Σ γ(ω) (L ρ L† − ½{L†L, ρ}) at the matrix level.
    pub fn dissipator_matrix(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let dim = self.dim();
        let mut d = DMatrix::<C64>::zeros(dim, dim);
        for r in &self.resolved {
            if r.rate == 0.0 {
                continue;
            }
            let gain = &r.operator * rho * &r.adjoint;
            let loss = (&r.ldl * rho + rho * &r.ldl).scale(0.5);
            d += (gain - loss).scale(r.rate);
        }
        d
    }

    /// Dissipator evaluated at a state; Hermitian and traceless.
    pub fn dissipator(&self, state: &SpectralState) -> HermitianOperator {
        assert_eq!(self.dim(), state.dim(), "dissipator: dimension mismatch");
        HermitianOperator::new(self.dissipator_matrix(state.rho().matrix()))
            .expect("dissipator output is Hermitian by construction")
    }

    /// Master-equation right-hand side at the matrix level.
    pub fn rhs_matrix(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let minus_i = C64::new(0.0, -1.0);
        commutator(self.hamiltonian.matrix(), rho).map(|z| z * minus_i)
            + self.dissipator_matrix(rho)
    }

    /// ρ̇ = −i[H, ρ] + D[ρ]; Hermitian and traceless.
    pub fn rhs(&self, state: &SpectralState) -> HermitianOperator {
        assert_eq!(self.dim(), state.dim(), "rhs: dimension mismatch");
        HermitianOperator::new(self.rhs_matrix(state.rho().matrix()))
            .expect("master-equation RHS is Hermitian by construction")
    }

    /// Diagonal/off-diagonal split of the dissipator in the (degeneracy
    /// resolved) eigenbasis of the state. See [`resolve_dynamics`].
    pub fn dissipator_split(
        &self,
        state: &SpectralState,
    ) -> Result<(HermitianOperator, HermitianOperator), GkslError> {
        let dyn_ = resolve_dynamics(self, state)?;
        Ok((dyn_.diagonal_part, dyn_.offdiagonal_part))
    }

    /// Bath-induced effective Hamiltonian H_D with −i[H_D, ρ] equal to the
    /// off-diagonal dissipator part. See [`resolve_dynamics`].
    pub fn effective_hamiltonian(
        &self,
        state: &SpectralState,
    ) -> Result<HermitianOperator, GkslError> {
        Ok(resolve_dynamics(self, state)?.effective_hamiltonian)
    }
}

/// Everything the generator does at one state, expressed in a canonical
/// eigenbasis of ρ:
///
/// - `state` carries the same ρ with its basis rotated, inside each
///   degenerate eigenvalue block, to diagonalize the projected dissipator
///   (so the off-diagonal part never connects equal populations);
/// - `diagonal_part` + `offdiagonal_part` = `dissipator` exactly;
/// - `effective_hamiltonian` satisfies −i[H_D, ρ] = `offdiagonal_part`.
#[derive(Debug, Clone)]
pub struct ResolvedDynamics {
    pub state: SpectralState,
    pub rho_dot: HermitianOperator,
    pub dissipator: HermitianOperator,
    pub diagonal_part: HermitianOperator,
    pub offdiagonal_part: HermitianOperator,
    pub effective_hamiltonian: HermitianOperator,
}

/// Group indices of a descending-sorted population vector into degenerate
/// blocks (consecutive gap ≤ [`tol::DEGENERACY_GAP`]).
fn degenerate_blocks(populations: &DVector<f64>) -> Vec<(usize, usize)> {
    let n = populations.len();
    let mut blocks = Vec::new();
    let mut start = 0;
    for k in 1..=n {
        if k == n || populations[k - 1] - populations[k] > tol::DEGENERACY_GAP {
            blocks.push((start, k));
            start = k;
        }
    }
    blocks
}

/// Evaluate the dissipator split and effective Hamiltonian at a state.
///
/// Within each degenerate eigenvalue block of ρ the eigenbasis is rotated
/// to diagonalize the projected dissipator before splitting; this keeps
/// D = D_d + D_nd exact and leaves nothing in D_nd that the commutator
/// −i[H_D, ρ] could not reproduce. The error path triggers only if an
/// off-diagonal dissipator element still connects equal populations after
/// the rotation.
pub fn resolve_dynamics(
    model: &LindbladModel,
    state: &SpectralState,
) -> Result<ResolvedDynamics, GkslError> {
    assert_eq!(model.dim(), state.dim(), "resolve_dynamics: dimension mismatch");
    let dim = state.dim();
    let d = model.dissipator_matrix(state.rho().matrix());
    let populations = state.populations();
    let blocks = degenerate_blocks(&populations);

    let state = if blocks.iter().any(|&(a, b)| b - a > 1) {
        let mut basis = state.basis().clone();
        for &(a, b) in &blocks {
            if b - a < 2 {
                continue;
            }
            let cols = basis.columns(a, b - a).into_owned();
            let sub = cols.adjoint() * &d * &cols;
            // Hermitian sub-block of a Hermitian matrix (up to roundoff).
            let rot = HermitianOperator::new(sub)
                .expect("projected dissipator block is Hermitian")
                .eigen()
                .vectors;
            let rotated = cols * rot;
            for (offset, col) in (a..b).enumerate() {
                basis.set_column(col, &rotated.column(offset));
            }
        }
        state.with_basis(basis)
    } else {
        state.clone()
    };

    let d_tilde = state.to_eigenbasis(&d);
    let mut hd_tilde = DMatrix::<C64>::zeros(dim, dim);
    for m in 0..dim {
        for n in 0..dim {
            if m == n {
                continue;
            }
            let gap = populations[n] - populations[m];
            if gap.abs() <= tol::DEGENERACY_GAP {
                let element = d_tilde[(m, n)].norm();
                if element > tol::DEGENERACY_RESIDUAL {
                    return Err(GkslError::Degeneracy {
                        gap: gap.abs(),
                        element,
                    });
                }
                continue;
            }
            hd_tilde[(m, n)] = C64::new(0.0, 1.0) * d_tilde[(m, n)] / C64::new(gap, 0.0);
        }
    }

    let diag_tilde = DMatrix::from_diagonal(&d_tilde.diagonal());
    let diagonal_part = HermitianOperator::new(state.from_eigenbasis(&diag_tilde))
        .expect("diagonal dissipator part is Hermitian");
    let dissipator =
        HermitianOperator::new(d.clone()).expect("dissipator output is Hermitian by construction");
    let offdiagonal_part = HermitianOperator::new(&d - diagonal_part.matrix())
        .expect("off-diagonal dissipator part is Hermitian");
    let effective_hamiltonian = HermitianOperator::new(state.from_eigenbasis(&hd_tilde))
        .expect("effective Hamiltonian is Hermitian by construction");
    let rho_dot = HermitianOperator::new(model.rhs_matrix(state.rho().matrix()))
        .expect("master-equation RHS is Hermitian by construction");

    Ok(ResolvedDynamics {
        state,
        rho_dot,
        dissipator,
        diagonal_part,
        offdiagonal_part,
        effective_hamiltonian,
    })
}

/// Errors raised by the integrator.
#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("time step must be positive and finite, got {dt}")]
    InvalidStep { dt: f64 },
    #[error("time span ({t0}, {t1}) is empty")]
    EmptySpan { t0: f64, t1: f64 },
    #[error(
        "state lost positivity at t = {time:.6} (min eigenvalue {min_eigenvalue:.3e}); \
         reduce the time step"
    )]
    PositivityLoss { time: f64, min_eigenvalue: f64 },
    #[error("non-finite state entries at t = {time:.6}")]
    NonFinite { time: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// One stored sample of an integrated trajectory. `rho_dot` is always the
/// analytic right-hand side evaluated at the stored state, never a finite
/// difference: the speed-limit bounds are instantaneous statements about
/// the generator.
#[derive(Debug, Clone)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub state: SpectralState,
    pub rho_dot: HermitianOperator,
}

/// Fixed-step trajectory of the master equation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub dt: f64,
    pub t_span: (f64, f64),
}

/// Integrate the master equation with classical fixed-step RK4.
///
/// After each step the state is re-symmetrized and its trace renormalized
/// when drift exceeds [`tol::TRACE_RENORM`]. Positivity is enforced at the
/// looser trajectory tolerance [`tol::TRAJECTORY_POSITIVITY`].
pub fn evolve(
    model: &LindbladModel,
    rho0: &SpectralState,
    t_span: (f64, f64),
    dt: f64,
) -> Result<Trajectory, EvolveError> {
    assert_eq!(model.dim(), rho0.dim(), "evolve: dimension mismatch");
    if !(dt.is_finite() && dt > 0.0) {
        return Err(EvolveError::InvalidStep { dt });
    }
    let (t0, t1) = t_span;
    if !(t1 - t0).is_finite() || t1 <= t0 {
        return Err(EvolveError::EmptySpan { t0, t1 });
    }
    let steps = (((t1 - t0) / dt) - 1e-9).ceil().max(1.0) as usize;

    let mut rho = rho0.rho().matrix().clone();
    let mut points = Vec::with_capacity(steps + 1);
    points.push(trajectory_point(model, t0, &rho)?);

    for k in 1..=steps {
        let time = t0 + k as f64 * dt;
        let k1 = model.rhs_matrix(&rho);
        let k2 = model.rhs_matrix(&(&rho + k1.scale(dt / 2.0)));
        let k3 = model.rhs_matrix(&(&rho + k2.scale(dt / 2.0)));
        let k4 = model.rhs_matrix(&(&rho + k3.scale(dt)));
        rho += (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0);

        rho = (&rho + rho.adjoint()).scale(0.5);
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(EvolveError::NonFinite { time });
        }
        let trace: f64 = rho.diagonal().iter().map(|z| z.re).sum();
        if (trace - 1.0).abs() > tol::TRACE_RENORM {
            log::debug!("renormalizing trace drift {:.3e} at t = {time:.6}", trace - 1.0);
            rho /= C64::new(trace, 0.0);
        }
        points.push(trajectory_point(model, time, &rho)?);
    }

    Ok(Trajectory {
        points,
        dt,
        t_span,
    })
}

fn trajectory_point(
    model: &LindbladModel,
    time: f64,
    rho: &DMatrix<C64>,
) -> Result<TrajectoryPoint, EvolveError> {
    let op = HermitianOperator::new(rho.clone())?;
    let state = SpectralState::new_unchecked_positivity(op);
    let min = state.eigenvalues().min();
    if min < tol::TRAJECTORY_POSITIVITY {
        return Err(EvolveError::PositivityLoss {
            time,
            min_eigenvalue: min,
        });
    }
    let rho_dot = HermitianOperator::new(model.rhs_matrix(rho))?;
    Ok(TrajectoryPoint {
        time,
        state,
        rho_dot,
    })
}
