//! Stochastic thermodynamics in the instantaneous eigenbasis of the state.
//!
//! The transition rate matrix W(ω,α)[m,n] = γ_α(ω)·|⟨m|L(ω,α)|n⟩|² turns
//! the quantum dissipator into a classical jump process between the
//! eigenlevels of ρ. Entropy production, activity, and the mobility family
//! are all primed sums over its forward/reverse flux pairs
//! a = W(ω)[m,n]·pₙ and b = W(−ω)[n,m]·pₘ, where "primed" excludes the
//! stay-put terms (m = n with ω = 0).
//!
//! Divergences are real physics here, not overflow: a forward flux into an
//! empty level produces an infinite entropy production rate. Such values
//! are reported as IEEE infinities and never clamped to large floats, so
//! callers can distinguish a divergent point from a big finite one.

use nalgebra::{DMatrix, DVector};

use crate::gksl::LindbladModel;
use crate::operator::{HermitianOperator, SpectralState};
use crate::tolerances as tol;

/// Logarithmic mean f(a, b) = (a − b)/ln(a/b), extended by continuity:
/// f(a, a) = a and f(a, 0) = f(0, b) = 0. Always between min(a,b) and
/// max(a,b), and below the arithmetic mean.
///
/// Panics on negative or non-finite input (fluxes are non-negative by
/// construction).
pub fn log_mean(a: f64, b: f64) -> f64 {
    assert!(
        a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite(),
        "log_mean requires finite non-negative arguments, got ({a}, {b})"
    );
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    if (a - b).abs() <= 1e-13 * (a + b) {
        // ln(a/b) loses precision here; the logarithmic mean tends to the
        // arithmetic one in this limit.
        return 0.5 * (a + b);
    }
    (a - b) / (a / b).ln()
}

/// One directed flux pair of the rate matrix, in the eigenbasis of ρ.
#[derive(Debug, Clone, Copy)]
pub struct FluxPair {
    pub channel: usize,
    pub frequency: f64,
    /// Source eigenlevel n.
    pub from: usize,
    /// Target eigenlevel m.
    pub to: usize,
    /// W(ω,α)[m,n] — the bare transition rate.
    pub rate: f64,
    /// Forward probability flux a = W(ω,α)[m,n]·pₙ.
    pub forward: f64,
    /// Reverse probability flux b = W(−ω,α)[n,m]·pₘ.
    pub reverse: f64,
}

impl FluxPair {
    /// Stay-put term excluded from every primed sum.
    pub fn is_stay_put(&self) -> bool {
        self.to == self.from && self.frequency == 0.0
    }

    /// Level-diagonal term (excluded from M′ and M_X regardless of ω).
    pub fn is_diagonal(&self) -> bool {
        self.to == self.from
    }
}

struct JumpRates {
    channel: usize,
    frequency: f64,
    /// w[(m, n)] = W(ω,α)[m,n], pruned.
    w: DMatrix<f64>,
    partner: usize,
}

/// Transition rates between eigenlevels of a state under a model.
///
/// Entries below [`tol::RATE_PRUNE`] are pruned pairwise (an entry is
/// kept if either direction of its pair survives), so every stored entry
/// has its reverse entry available.
#[derive(Debug)]
pub struct RateMatrix {
    dim: usize,
    populations: DVector<f64>,
    jumps: Vec<JumpRates>,
}

impl std::fmt::Debug for JumpRates {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JumpRates")
            .field("channel", &self.channel)
            .field("frequency", &self.frequency)
            .field("partner", &self.partner)
            .finish()
    }
}

/// Build the rate matrix W(ω,α)[m,n] = γ_α(ω)|⟨m|L(ω,α)|n⟩|² in the
/// eigenbasis of `state`.
///
/// When ρ has degenerate eigenvalues the matrix elements depend on the
/// basis chosen inside each block; pass the basis produced by
/// [`crate::gksl::resolve_dynamics`] so that all downstream quantities
/// share one convention.
pub fn rate_matrix(model: &LindbladModel, state: &SpectralState) -> RateMatrix {
    assert_eq!(model.dim(), state.dim(), "rate_matrix: dimension mismatch");
    let dim = state.dim();
    let resolved = model.resolved_jumps();

    let mut raw: Vec<DMatrix<f64>> = Vec::with_capacity(resolved.len());
    for r in resolved {
        let tilde = state.to_eigenbasis(&r.operator);
        raw.push(DMatrix::from_fn(dim, dim, |m, n| {
            r.rate * tilde[(m, n)].norm_sqr()
        }));
    }
    // Pairwise pruning: zero an entry only when its reverse is tiny too.
    for idx in 0..resolved.len() {
        let partner = resolved[idx].partner;
        for m in 0..dim {
            for n in 0..dim {
                if raw[idx][(m, n)] < tol::RATE_PRUNE && raw[partner][(n, m)] < tol::RATE_PRUNE {
                    raw[idx][(m, n)] = 0.0;
                }
            }
        }
    }

    let jumps = resolved
        .iter()
        .zip(raw)
        .map(|(r, w)| JumpRates {
            channel: r.channel,
            frequency: r.frequency,
            w,
            partner: r.partner,
        })
        .collect();

    RateMatrix {
        dim,
        populations: state.populations(),
        jumps,
    }
}

impl RateMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn populations(&self) -> &DVector<f64> {
        &self.populations
    }

    /// Iterate every directed entry with its reverse flux attached. Each
    /// unordered transition appears twice, once per direction, matching
    /// the paper convention of summing over all (ω, α, n, m).
    pub fn pairs(&self) -> impl Iterator<Item = FluxPair> + '_ {
        self.jumps.iter().flat_map(move |j| {
            let reverse_w = &self.jumps[j.partner].w;
            (0..self.dim).flat_map(move |m| {
                (0..self.dim).filter_map(move |n| {
                    let rate = j.w[(m, n)];
                    let rev = reverse_w[(n, m)];
                    if rate == 0.0 && rev == 0.0 {
                        return None;
                    }
                    Some(FluxPair {
                        channel: j.channel,
                        frequency: j.frequency,
                        from: n,
                        to: m,
                        rate,
                        forward: rate * self.populations[n],
                        reverse: rev * self.populations[m],
                    })
                })
            })
        })
    }

    /// True when no transition survives (all rates zero or pruned).
    pub fn is_empty(&self) -> bool {
        self.pairs().next().is_none()
    }

    /// Residual of the total flux balance Σ′ a = Σ′ b (zero up to roundoff
    /// because the resolved jump set is closed under (ω, L) → (−ω, L†)).
    pub fn flux_balance_residual(&self) -> f64 {
        let mut fwd = 0.0;
        let mut rev = 0.0;
        for p in self.pairs().filter(|p| !p.is_stay_put()) {
            fwd += p.forward;
            rev += p.reverse;
        }
        (fwd - rev).abs()
    }

    /// Activity A = ½ Σ′ (a + b): how frequently the state transitions.
    pub fn activity(&self) -> f64 {
        self.pairs()
            .filter(|p| !p.is_stay_put())
            .map(|p| p.forward + p.reverse)
            .sum::<f64>()
            / 2.0
    }

    /// Mobility M = Σ′ f(a, b) over the full primed index set.
    pub fn mobility(&self) -> f64 {
        self.pairs()
            .filter(|p| !p.is_stay_put())
            .map(|p| log_mean(p.forward, p.reverse))
            .sum()
    }

    /// Improved mobility M′: same sum restricted to level-changing terms
    /// (m ≠ n). Never exceeds M.
    pub fn mobility_offdiagonal(&self) -> f64 {
        self.pairs()
            .filter(|p| !p.is_diagonal())
            .map(|p| log_mean(p.forward, p.reverse))
            .sum()
    }

    /// Observable-weighted mobility
    /// M_X = 4 Σ_{ω,α,n≠m} |⟨m|X|m⟩|²·f(a, b), with the diagonal elements
    /// of X taken in the same eigenbasis the rate matrix was built in.
    ///
    /// `state` must be the state this rate matrix was built from; the
    /// population fingerprint is checked to catch basis mixups.
    pub fn mobility_weighted(&self, state: &SpectralState, x: &HermitianOperator) -> f64 {
        assert_eq!(self.dim, x.dim(), "mobility_weighted: dimension mismatch");
        assert!(
            state.populations() == self.populations,
            "mobility_weighted: rate matrix was built from a different state"
        );
        let x_tilde = state.to_eigenbasis(x.matrix());
        let diag: Vec<f64> = (0..self.dim).map(|m| x_tilde[(m, m)].re).collect();
        4.0 * self
            .pairs()
            .filter(|p| !p.is_diagonal())
            .map(|p| diag[p.to] * diag[p.to] * log_mean(p.forward, p.reverse))
            .sum::<f64>()
    }

    /// Entropy production rate in the rate-matrix form
    /// σ̇ = Σ′ a·ln(a/b), with 0·ln 0 = 0.
    ///
    /// Returns +∞ when a forward flux has no reverse flux (growth into an
    /// empty level): the production is physically divergent there.
    pub fn entropy_production(&self) -> f64 {
        let mut total = 0.0;
        for p in self.pairs().filter(|p| !p.is_stay_put()) {
            if p.forward <= 0.0 {
                continue;
            }
            if p.reverse <= 0.0 {
                if p.forward > tol::DIVERGENT_PRODUCTION {
                    return f64::INFINITY;
                }
                continue;
            }
            total += p.forward * (p.forward / p.reverse).ln();
        }
        total
    }
}

/// Von Neumann entropy flux Ṡ = −Tr[ρ̇ ln ρ], computed in the eigenbasis
/// of ρ as −Σ ⟨n|ρ̇|n⟩·ln pₙ with populations floored at
/// [`tol::LOG_POPULATION_FLOOR`].
///
/// If a floored level carries significant diagonal flux the result is the
/// signed infinity of the divergence instead of a finite number.
pub fn entropy_flux(state: &SpectralState, rho_dot: &HermitianOperator) -> f64 {
    assert_eq!(state.dim(), rho_dot.dim(), "entropy_flux: dimension mismatch");
    let tilde = state.to_eigenbasis(rho_dot.matrix());
    let populations = state.populations();
    let mut total = 0.0;
    for n in 0..state.dim() {
        let flux = tilde[(n, n)].re;
        let p = populations[n];
        if p < tol::LOG_POPULATION_FLOOR {
            if flux.abs() > tol::DIVERGENT_FLUX {
                // −flux·ln(0⁺): +∞ for inflow, −∞ for outflow.
                return if flux > 0.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                };
            }
            log::debug!("entropy_flux: population {p:.3e} floored at level {n}");
            total -= flux * tol::LOG_POPULATION_FLOOR.ln();
        } else {
            total -= flux * p.ln();
        }
    }
    total
}

/// Heat flux Q̇ = Tr[ρ̇ H].
pub fn heat_flux(rho_dot: &HermitianOperator, hamiltonian: &HermitianOperator) -> f64 {
    assert_eq!(
        rho_dot.dim(),
        hamiltonian.dim(),
        "heat_flux: dimension mismatch"
    );
    (rho_dot.matrix() * hamiltonian.matrix())
        .diagonal()
        .iter()
        .map(|z| z.re)
        .sum()
}

/// Entropy production rate computed along both routes.
#[derive(Debug, Clone, Copy)]
pub struct EntropyProduction {
    /// Rate-matrix form Σ′ a·ln(a/b); the primary value.
    pub rate_form: f64,
    /// Flux form Ṡ − βQ̇; must agree with `rate_form` within
    /// [`tol::SIGMA_DUAL_AGREEMENT`] whenever both are finite.
    pub flux_form: f64,
}

impl EntropyProduction {
    /// Primary value, clamped at zero against −1e-10-scale roundoff.
    pub fn value(&self) -> f64 {
        debug_assert!(
            self.rate_form >= -1e-10,
            "entropy production rate {} below the second-law floor",
            self.rate_form
        );
        self.rate_form.max(0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.rate_form.is_finite()
    }

    /// |rate_form − flux_form| when both are finite, else 0.
    pub fn dual_residual(&self) -> f64 {
        if self.rate_form.is_finite() && self.flux_form.is_finite() {
            (self.rate_form - self.flux_form).abs()
        } else {
            0.0
        }
    }
}

/// Entropy production rate σ̇ = Ṡ − βQ̇, evaluated both from the rate
/// matrix and from the fluxes. Detailed balance of the underlying model is
/// assumed (it is enforced at model construction).
pub fn entropy_production_rate(
    state: &SpectralState,
    rho_dot: &HermitianOperator,
    hamiltonian: &HermitianOperator,
    beta: f64,
    rates: &RateMatrix,
) -> EntropyProduction {
    let rate_form = rates.entropy_production();
    let flux_form = entropy_flux(state, rho_dot) - beta * heat_flux(rho_dot, hamiltonian);
    EntropyProduction {
        rate_form,
        flux_form,
    }
}
