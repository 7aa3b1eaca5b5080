//! Minimal average pure-state variance over ensembles of a mixed state.
//!
//! Every decomposition ρ = Σ qᵢ|φᵢ⟩⟨φᵢ| arises from an isometry acting on
//! the canonical purification: with ρ = Σ pⱼ|j⟩⟨j|, the subnormalized
//! members are |φ̃ᵢ⟩ = Σⱼ Uᵢⱼ·√pⱼ·|j⟩ for a K×r matrix U with orthonormal
//! columns (r the rank, K the number of members). The average variance
//!
//!   Σᵢ qᵢ·V(φᵢ, H) = Tr[ρH²] − Σᵢ |⟨φ̃ᵢ|H|φ̃ᵢ⟩|²/qᵢ
//!
//! is minimized over U by derivative-free random restarts with an adaptive
//! local step. One quarter of the SLD asymmetry Fisher information is the
//! exact minimum, which makes this a fully independent oracle for that
//! value: every candidate evaluated here is a valid ensemble, so the
//! returned value can undershoot the true minimum only by roundoff.
//!
//! Desk-scale only (dim ≤ 6); the member count is capped at dim².

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::operator::{HermitianOperator, SpectralState, C64};

/// Populations below this do not contribute ensemble members.
const RANK_FLOOR: f64 = 1e-12;

/// Step size below which a restart is declared converged.
const STEP_FLOOR: f64 = 1e-8;

const RESTARTS: usize = 8;

/// Default optimizer budget (objective evaluations across all restarts).
pub const DEFAULT_BUDGET: usize = 6000;

/// Result of the ensemble minimization.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleMinimum {
    /// Best average pure-state variance found.
    pub value: f64,
    /// Whether at least one restart reached the internal step-size floor
    /// before exhausting its share of the budget.
    pub converged: bool,
    /// Objective evaluations spent.
    pub evaluations: usize,
}

struct Objective {
    /// H in the eigenbasis of ρ, restricted to the support block.
    h_support: DMatrix<C64>,
    /// √pⱼ over the support.
    sqrt_p: DVector<f64>,
    /// Tr[ρH²], the ensemble-independent part.
    second_moment: f64,
}

impl Objective {
    fn eval(&self, u: &DMatrix<C64>) -> f64 {
        // Subnormalized members as rows of C = U·diag(√p).
        let members = u.nrows();
        let r = self.sqrt_p.len();
        let mut recovered = 0.0;
        for i in 0..members {
            let mut q = 0.0;
            let mut mean = C64::new(0.0, 0.0);
            // ⟨φ̃ᵢ|H|φ̃ᵢ⟩ = Σⱼₖ conj(Cᵢⱼ)·Hⱼₖ·Cᵢₖ
            for j in 0..r {
                let cj = u[(i, j)] * self.sqrt_p[j];
                q += cj.norm_sqr();
                let mut hrow = C64::new(0.0, 0.0);
                for k in 0..r {
                    hrow += self.h_support[(j, k)] * (u[(i, k)] * self.sqrt_p[k]);
                }
                mean += cj.conj() * hrow;
            }
            if q > 1e-14 {
                recovered += mean.norm_sqr() / q;
            }
        }
        self.second_moment - recovered
    }
}

fn random_isometry(rng: &mut ChaCha12Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    g.qr().q()
}

fn perturbed(rng: &mut ChaCha12Rng, u: &DMatrix<C64>, step: f64) -> DMatrix<C64> {
    let g = DMatrix::from_fn(u.nrows(), u.ncols(), |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * step, im * step)
    });
    (u + g).qr().q()
}

/// Minimize the average pure-state variance of H over ensembles of the
/// state. Deterministic for a fixed seed.
///
/// Returns the best value found (an upper bound on the true minimum up to
/// roundoff), a convergence flag, and the evaluation count. For pure
/// states the only ensemble is the state itself and no search is run.
///
/// Panics if `dim > 6` or `budget == 0` (desk-scale oracle contract).
pub fn min_ensemble_variance(
    state: &SpectralState,
    h: &HermitianOperator,
    budget: usize,
    seed: u64,
) -> EnsembleMinimum {
    assert!(state.dim() <= 6, "ensemble oracle is desk-scale (dim ≤ 6)");
    assert!(budget >= 1, "budget must be at least 1");
    assert_eq!(state.dim(), h.dim(), "min_ensemble_variance: dimension mismatch");

    let populations = state.populations();
    let support: Vec<usize> = (0..state.dim())
        .filter(|&j| populations[j] > RANK_FLOOR)
        .collect();
    let r = support.len();
    if r <= 1 {
        // Pure state: every ensemble member equals the state itself.
        return EnsembleMinimum {
            value: state.variance(h),
            converged: true,
            evaluations: 0,
        };
    }

    let h_tilde = state.to_eigenbasis(h.matrix());
    // Populations are sorted descending, so the support is contiguous.
    let h_support = h_tilde.view((0, 0), (r, r)).into_owned();
    let sqrt_p = DVector::from_iterator(r, support.iter().map(|&j| populations[j].sqrt()));
    let h_sq = HermitianOperator::new(h.matrix() * h.matrix()).expect("H² is Hermitian");
    let objective = Objective {
        h_support,
        sqrt_p,
        second_moment: state.expectation(&h_sq),
    };

    let members = state.dim() * state.dim();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let per_restart = (budget / RESTARTS).max(1);
    let mut best = f64::INFINITY;
    let mut converged = false;
    let mut evaluations = 0;

    for _ in 0..RESTARTS {
        if evaluations >= budget {
            break;
        }
        let mut u = random_isometry(&mut rng, members, r);
        let mut value = objective.eval(&u);
        evaluations += 1;
        let mut step = 0.3;
        for _ in 0..per_restart {
            if evaluations >= budget {
                break;
            }
            let candidate = perturbed(&mut rng, &u, step);
            let v = objective.eval(&candidate);
            evaluations += 1;
            if v < value {
                u = candidate;
                value = v;
                step = (step * 1.2).min(0.5);
            } else {
                step *= 0.95;
            }
            if step < STEP_FLOOR {
                converged = true;
                break;
            }
        }
        best = best.min(value);
    }

    EnsembleMinimum {
        value: best.max(0.0),
        converged,
        evaluations,
    }
}
