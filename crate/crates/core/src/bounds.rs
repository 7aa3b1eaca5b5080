//! Speed-limit bounds on ‖ρ̇‖ and on observable currents, with their
//! ordering chain.
//!
//! Four upper bounds are evaluated per state (ħ = 1 throughout):
//!
//! - FSS:      √V(H) + √V(H_D) + √(σ̇·A/2)
//! - VS:       √V(H) + √V(H_D) + √(σ̇·M/2)
//! - QFI:      ½√F(H+H_D)      + √(σ̇·M′/2)
//! - current:  √F(H+H_D)·√V(X′) + √(σ̇·M_X′/2) with X′ = ½·sgn(ρ̇)
//!
//! where F is the SLD asymmetry Fisher information, A the activity, and
//! M ≥ M′ ≥ M_X′ the mobility family. The probe X′ makes the current
//! inequality a state-speed bound, because Tr[X′ρ̇] = ‖ρ̇‖ exactly. At
//! every point with finite entropy production the chain
//!
//!   ‖ρ̇‖ ≤ current ≤ QFI ≤ VS ≤ FSS
//!
//! must hold up to [`tol::CHAIN_SLACK`]; a violation is a hard error
//! carrying the full report, never a warning. Divergent entropy
//! production makes every bound +∞ (trivially valid) and is reported as
//! an IEEE infinity, a distinct value class rather than a large float.

use thiserror::Error;

use crate::fisher::{asymmetry_fisher, MonotoneFunction};
use crate::gksl::{resolve_dynamics, GkslError, LindbladModel};
use crate::operator::{HermitianOperator, SpectralState};
use crate::thermo::{
    entropy_flux, entropy_production_rate, heat_flux, rate_matrix, RateMatrix,
};
use crate::tolerances as tol;

/// √(σ̇·m/2), kept +∞ when σ̇ diverges (even if the mobility weight is
/// zero: the product is then an ∞·0 limit whose bound form stays valid
/// only as +∞).
fn entropy_term(sigma_dot: f64, mobility: f64) -> f64 {
    if sigma_dot.is_infinite() {
        f64::INFINITY
    } else {
        (0.5 * sigma_dot * mobility).sqrt()
    }
}

fn sld_fisher_sqrt(state: &SpectralState, h: &HermitianOperator, h_d: &HermitianOperator) -> f64 {
    asymmetry_fisher(&MonotoneFunction::sld(), state, &h.add(h_d))
        .value
        .sqrt()
}

/// FSS bound √V(H) + √V(H_D) + √(σ̇A/2).
pub fn fss_bound(
    state: &SpectralState,
    h: &HermitianOperator,
    h_d: &HermitianOperator,
    sigma_dot: f64,
    activity: f64,
) -> f64 {
    state.variance(h).sqrt() + state.variance(h_d).sqrt() + entropy_term(sigma_dot, activity)
}

/// VS bound √V(H) + √V(H_D) + √(σ̇M/2); tighter than FSS since M ≤ A.
pub fn vs_bound(
    state: &SpectralState,
    h: &HermitianOperator,
    h_d: &HermitianOperator,
    sigma_dot: f64,
    mobility: f64,
) -> f64 {
    state.variance(h).sqrt() + state.variance(h_d).sqrt() + entropy_term(sigma_dot, mobility)
}

/// QFI bound with its two addends exposed.
#[derive(Debug, Clone, Copy)]
pub struct QfiBound {
    pub bound: f64,
    /// ½√F(H+H_D) — the quantum-fluctuation term.
    pub fisher_term: f64,
    /// √(σ̇M′/2) — the classical dissipation term.
    pub entropy_term: f64,
}

/// QFI bound ½√F(H+H_D) + √(σ̇M′/2).
pub fn qfi_bound(
    state: &SpectralState,
    h: &HermitianOperator,
    h_d: &HermitianOperator,
    sigma_dot: f64,
    mobility_prime: f64,
) -> QfiBound {
    let fisher_term = 0.5 * sld_fisher_sqrt(state, h, h_d);
    let entropy_term = entropy_term(sigma_dot, mobility_prime);
    QfiBound {
        bound: fisher_term + entropy_term,
        fisher_term,
        entropy_term,
    }
}

/// Current bound for one observable, with the current itself.
#[derive(Debug, Clone, Copy)]
pub struct CurrentBound {
    pub bound: f64,
    /// |Tr[X ρ̇]|, guaranteed ≤ bound (up to slack).
    pub current: f64,
}

/// Bound on the current of a time-independent observable X:
/// |Tr[Xρ̇]| ≤ √F(H+H_D)·√V(X) + √(σ̇·M_X/2).
pub fn current_bound(
    state: &SpectralState,
    rho_dot: &HermitianOperator,
    h: &HermitianOperator,
    h_d: &HermitianOperator,
    x: &HermitianOperator,
    sigma_dot: f64,
    rates: &RateMatrix,
) -> CurrentBound {
    let current = (x.matrix() * rho_dot.matrix())
        .diagonal()
        .iter()
        .map(|z| z.re)
        .sum::<f64>()
        .abs();
    let fisher_part = sld_fisher_sqrt(state, h, h_d) * state.variance(x).sqrt();
    let bound = fisher_part + entropy_term(sigma_dot, rates.mobility_weighted(state, x));
    CurrentBound { bound, current }
}

/// State-speed form of the current bound: substitutes the optimal probe
/// X′ = ½·sgn(ρ̇), for which the current equals ‖ρ̇‖ exactly while
/// V(X′) ≤ ¼ and M_X′ ≤ M′ keep the bound below the QFI bound.
pub fn state_current_bound(
    state: &SpectralState,
    rho_dot: &HermitianOperator,
    h: &HermitianOperator,
    h_d: &HermitianOperator,
    sigma_dot: f64,
    rates: &RateMatrix,
) -> f64 {
    let probe = rho_dot.sign().scale(0.5);
    current_bound(state, rho_dot, h, h_d, &probe, sigma_dot, rates).bound
}

/// Every bound-related scalar at one instant of a trajectory.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub time: f64,
    /// ‖ρ̇‖ = ½ Tr|ρ̇| — the state speed.
    pub speed_tr: f64,
    pub fss: f64,
    pub vs: f64,
    pub qfi: f64,
    /// Current bound evaluated at the optimal probe X′ = ½ sgn(ρ̇).
    pub current_xprime: f64,
    /// ½√F(H+H_D).
    pub fisher_term_qfi: f64,
    /// √(σ̇M′/2).
    pub entropy_term_qfi: f64,
    /// √V(H) — shared first term of FSS and VS.
    pub fisher_term_h: f64,
    /// √V(H_D) — shared second term of FSS and VS.
    pub fisher_term_hd: f64,
    /// Entropy production rate (rate-matrix form, clamped at 0; +∞ when
    /// divergent).
    pub sigma_dot: f64,
    /// Flux-form σ̇ = Ṡ − βQ̇ for cross-validation.
    pub sigma_dot_flux: f64,
    pub activity: f64,
    pub mobility_m: f64,
    pub mobility_mprime: f64,
    pub heat_flux: f64,
    /// Ṡ; ±∞ when a floored population carries flux.
    pub entropy_flux: f64,
    pub purity: f64,
}

impl BoundReport {
    /// First violated link of the ordering chain, if any. NaN anywhere in
    /// the chain counts as a violation.
    pub fn chain_violation(&self, slack: f64) -> Option<String> {
        let links = [
            ("‖ρ̇‖ ≤ current bound", self.speed_tr, self.current_xprime),
            ("current bound ≤ QFI bound", self.current_xprime, self.qfi),
            ("QFI bound ≤ VS bound", self.qfi, self.vs),
            ("VS bound ≤ FSS bound", self.vs, self.fss),
        ];
        for (name, lo, hi) in links {
            if lo.is_nan() || hi.is_nan() || lo > hi + slack {
                return Some(format!("{name} fails: {lo:.12e} > {hi:.12e}"));
            }
        }
        None
    }

    /// Whether the entropy production (and hence every bound) is finite.
    pub fn is_finite(&self) -> bool {
        self.sigma_dot.is_finite()
    }
}

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("at t = {time}: {source}")]
    Gksl { time: f64, source: GkslError },
    #[error("at t = {time}: {link}; full report: {report:?}")]
    ChainViolation {
        time: f64,
        link: String,
        report: Box<BoundReport>,
    },
}

/// Evaluate every bound quantity at one state and enforce the chain.
///
/// `time` is only a label carried into the report and any diagnostics.
pub fn bound_report(
    model: &LindbladModel,
    state: &SpectralState,
    time: f64,
) -> Result<BoundReport, BoundError> {
    let dynamics =
        resolve_dynamics(model, state).map_err(|source| BoundError::Gksl { time, source })?;
    let state = &dynamics.state;
    let h = model.hamiltonian();
    let h_d = &dynamics.effective_hamiltonian;
    let rates = rate_matrix(model, state);

    let sigma = entropy_production_rate(state, &dynamics.rho_dot, h, model.beta(), &rates);
    let sigma_dot = sigma.value();
    let activity = rates.activity();
    let mobility_m = rates.mobility();
    let mobility_mprime = rates.mobility_offdiagonal();

    let qfi = qfi_bound(state, h, h_d, sigma_dot, mobility_mprime);
    let report = BoundReport {
        time,
        speed_tr: dynamics.rho_dot.trace_norm(),
        fss: fss_bound(state, h, h_d, sigma_dot, activity),
        vs: vs_bound(state, h, h_d, sigma_dot, mobility_m),
        qfi: qfi.bound,
        current_xprime: state_current_bound(state, &dynamics.rho_dot, h, h_d, sigma_dot, &rates),
        fisher_term_qfi: qfi.fisher_term,
        entropy_term_qfi: qfi.entropy_term,
        fisher_term_h: state.variance(h).sqrt(),
        fisher_term_hd: state.variance(h_d).sqrt(),
        sigma_dot,
        sigma_dot_flux: sigma.flux_form,
        activity,
        mobility_m,
        mobility_mprime,
        heat_flux: heat_flux(&dynamics.rho_dot, h),
        entropy_flux: entropy_flux(state, &dynamics.rho_dot),
        purity: state.purity(),
    };

    match report.chain_violation(tol::CHAIN_SLACK) {
        Some(link) => Err(BoundError::ChainViolation {
            time,
            link,
            report: Box::new(report),
        }),
        None => Ok(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gksl::{JumpOperator, RateEntry};
    use crate::operator::C64;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn two_level_model() -> LindbladModel {
        let mut sm = DMatrix::<C64>::zeros(2, 2);
        sm[(1, 0)] = c(1.0, 0.0);
        LindbladModel::new(
            HermitianOperator::from_diagonal(&[0.5, -0.5]),
            vec![JumpOperator::new("decay", sm)],
            &[
                RateEntry { channel: 0, frequency: 1.0, rate: 2.0 },
                RateEntry { channel: 0, frequency: -1.0, rate: 1.5 },
            ],
            (4.0f64 / 3.0).ln(),
        )
        .unwrap()
    }

    fn rho0() -> SpectralState {
        SpectralState::from_matrix(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.7, 0.0), c(0.2, 0.1), c(0.2, -0.1), c(0.3, 0.0)],
        ))
        .unwrap()
    }

    fn stationary() -> SpectralState {
        SpectralState::new(HermitianOperator::from_diagonal(&[3.0 / 7.0, 4.0 / 7.0])).unwrap()
    }

    #[test]
    fn stationary_report_is_static() {
        let model = two_level_model();
        let report = bound_report(&model, &stationary(), 0.0).unwrap();
        assert_abs_diff_eq!(report.speed_tr, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.sigma_dot, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.entropy_term_qfi, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(report.current_xprime, 0.0, epsilon = 1e-9);
        // With H_D = 0 and σ̇ = 0 the FSS and VS bounds coincide at √V(H).
        let v_h = stationary().variance(model.hamiltonian()).sqrt();
        assert_abs_diff_eq!(report.fss, v_h, epsilon = 1e-9);
        assert_abs_diff_eq!(report.vs, v_h, epsilon = 1e-9);
        assert_abs_diff_eq!(report.fisher_term_hd, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn generic_report_orders_the_chain() {
        let model = two_level_model();
        let report = bound_report(&model, &rho0(), 0.0).unwrap();
        assert!(report.speed_tr > 0.1);
        assert!(report.speed_tr <= report.current_xprime + 1e-9);
        assert!(report.current_xprime <= report.qfi + 1e-9);
        assert!(report.qfi <= report.vs + 1e-9);
        assert!(report.vs <= report.fss + 1e-9);
        // The prior bounds leave a visible gap above the actual speed.
        assert!(report.fss > report.speed_tr);
        assert!(report.is_finite());
        // Dual σ̇ routes agree here.
        assert_abs_diff_eq!(report.sigma_dot, report.sigma_dot_flux, epsilon = 1e-9);
    }

    #[test]
    fn unitary_model_reduces_to_variance_bound() {
        let free = LindbladModel::new(
            HermitianOperator::from_diagonal(&[0.5, -0.5]),
            vec![],
            &[],
            1.0,
        )
        .unwrap();
        let plus =
            SpectralState::from_matrix(DMatrix::from_element(2, 2, c(0.5, 0.0))).unwrap();
        let report = bound_report(&free, &plus, 0.0).unwrap();
        assert_abs_diff_eq!(report.sigma_dot, 0.0, epsilon = 1e-14);
        let v_h = plus.variance(free.hamiltonian()).sqrt();
        assert_abs_diff_eq!(report.fss, v_h, epsilon = 1e-12);
        assert_abs_diff_eq!(report.vs, v_h, epsilon = 1e-12);
        // Pure state: ½√F = √V, so the QFI bound meets the VS bound.
        assert_abs_diff_eq!(report.qfi, v_h, epsilon = 1e-9);
        assert!(report.speed_tr <= report.current_xprime + 1e-9);
    }

    #[test]
    fn frozen_state_has_zero_bound() {
        // Diagonal ρ commuting with H and no jumps: nothing moves.
        let free = LindbladModel::new(
            HermitianOperator::from_diagonal(&[0.5, -0.5]),
            vec![],
            &[],
            1.0,
        )
        .unwrap();
        let thermal =
            SpectralState::new(HermitianOperator::from_diagonal(&[0.7, 0.3])).unwrap();
        let report = bound_report(&free, &thermal, 0.0).unwrap();
        assert_abs_diff_eq!(report.speed_tr, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(report.qfi, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.current_xprime, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_probe_has_zero_current() {
        let model = two_level_model();
        let dynamics = resolve_dynamics(&model, &rho0()).unwrap();
        let rates = rate_matrix(&model, &dynamics.state);
        let cb = current_bound(
            &dynamics.state,
            &dynamics.rho_dot,
            model.hamiltonian(),
            &dynamics.effective_hamiltonian,
            &HermitianOperator::identity(2),
            0.3,
            &rates,
        );
        // Trace preservation: the identity current vanishes exactly.
        assert_abs_diff_eq!(cb.current, 0.0, epsilon = 1e-12);
        assert!(cb.bound >= 0.0);
    }

    #[test]
    fn hamiltonian_probe_at_stationarity_is_tight_zero() {
        let model = two_level_model();
        let s = stationary();
        let dynamics = resolve_dynamics(&model, &s).unwrap();
        let rates = rate_matrix(&model, &dynamics.state);
        let cb = current_bound(
            &dynamics.state,
            &dynamics.rho_dot,
            model.hamiltonian(),
            &dynamics.effective_hamiltonian,
            model.hamiltonian(),
            0.0,
            &rates,
        );
        assert_abs_diff_eq!(cb.current, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cb.bound, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn optimal_probe_recovers_trace_norm() {
        let model = two_level_model();
        let dynamics = resolve_dynamics(&model, &rho0()).unwrap();
        let probe = dynamics.rho_dot.sign().scale(0.5);
        let current: f64 = (probe.matrix() * dynamics.rho_dot.matrix())
            .diagonal()
            .iter()
            .map(|z| z.re)
            .sum();
        assert_abs_diff_eq!(current, dynamics.rho_dot.trace_norm(), epsilon = 1e-12);
        // X′² is a quarter of the support projector, so V(X′) ≤ ¼.
        assert!(dynamics.state.variance(&probe) <= 0.25 + 1e-12);
    }

    #[test]
    fn zero_tangent_probe_is_trivial() {
        let probe = HermitianOperator::zeros(2).sign().scale(0.5);
        assert_eq!(probe.max_abs(), 0.0);
    }

    #[test]
    fn divergent_entropy_production_yields_infinite_bounds() {
        let model = two_level_model();
        let excited =
            SpectralState::new(HermitianOperator::from_diagonal(&[1.0, 0.0])).unwrap();
        let report = bound_report(&model, &excited, 0.0).unwrap();
        assert!(!report.is_finite());
        assert!(report.fss.is_infinite() && report.vs.is_infinite());
        assert!(report.qfi.is_infinite() && report.current_xprime.is_infinite());
        // The chain holds trivially; speed stays finite.
        assert!(report.speed_tr.is_finite());
    }
}
