//! Monotone-metric information geometry: f-inner products, logarithmic
//! derivatives, Fisher information, and the quantum/classical variance
//! split.
//!
//! A standard operator monotone function f fixes a metric on states via
//! the superoperator 𝕁ᶠ_ρ, whose matrix elements in the eigenbasis of
//! ρ = Σ pᵢ|i⟩⟨i| are the weights pⱼ·f(pᵢ/pⱼ). Everything in this module
//! is a sum over those weights:
//!
//! - inner product   ⟨A,B⟩ᶠ = Σ wᵢⱼ·A*ᵢⱼ·Bᵢⱼ
//! - log derivative  Lᵢⱼ = ρ̇ᵢⱼ / wᵢⱼ        (𝕁ᶠ_ρ(L) = ρ̇)
//! - Fisher info     Jᶠ = Σ |ρ̇ᵢⱼ|² / wᵢⱼ
//! - asymmetry       Fᶠ(H) = Σ (pᵢ−pⱼ)²/wᵢⱼ·|Hᵢⱼ|²
//!
//! The SLD choice f(x) = (1+x)/2 gives wᵢⱼ = (pᵢ+pⱼ)/2; one quarter of
//! the SLD asymmetry value is a quantum-fluctuation measure satisfying all
//! four Luo criteria, and splits the variance into quantum and classical
//! parts.
//!
//! Rank-deficient states are handled through the symmetric weight form
//! pⱼ·f(pᵢ/pⱼ) = pᵢ·f(pⱼ/pᵢ): pairs with exactly one vanishing
//! population keep a finite weight (for SLD), and double-zero pairs are
//! outside the support, where ρ̇ must vanish.

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::operator::{commutator, HermitianOperator, SpectralState, C64};

/// Off-support matrix elements of ρ̇ larger than this raise
/// [`FisherError::Support`]; smaller ones are discarded as roundoff.
const SUPPORT_LEAK: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum FisherError {
    #[error(
        "ρ̇ carries weight {element:.3e} between zero-population levels; \
         no finite logarithmic derivative reproduces it"
    )]
    Support { element: f64 },
}

/// Errors raised when registering a monotone function.
#[derive(Debug, Error)]
pub enum MetricError {
    #[error("f(1) must equal 1, got {value}")]
    NotNormalized { value: f64 },
    #[error("symmetry f(x) = x·f(1/x) fails at x = {x}: residual {residual:.3e}")]
    NotSymmetric { x: f64, residual: f64 },
    #[error("f must be positive on (0, ∞); f({x}) = {value}")]
    NotPositive { x: f64, value: f64 },
    #[error("f must be nondecreasing; f({x}) < f({previous})")]
    NotMonotone { x: f64, previous: f64 },
}

/// A standard operator monotone function registered as a metric.
///
/// Registration validates f(1) = 1, the symmetry f(x) = x·f(1/x), and
/// scalar monotonicity on the grid x = 10^k, k = −6..6. Full operator
/// monotonicity is not algorithmically checkable and remains an assumption
/// on the supplied closure. The closure is also evaluated at x = 0 (the
/// rank-deficient limit) and must return its continuous extension there.
#[derive(Clone)]
pub struct MonotoneFunction {
    name: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for MonotoneFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MonotoneFunction")
            .field("name", &self.name)
            .finish()
    }
}

impl MonotoneFunction {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, MetricError> {
        let one = eval(1.0);
        if (one - 1.0).abs() > 1e-12 {
            return Err(MetricError::NotNormalized { value: one });
        }
        let mut previous: Option<(f64, f64)> = None;
        for k in -6..=6 {
            let x = 10f64.powi(k);
            let fx = eval(x);
            if !(fx.is_finite() && fx > 0.0) {
                return Err(MetricError::NotPositive { x, value: fx });
            }
            let residual = (fx - x * eval(1.0 / x)).abs();
            if residual > 1e-10 * fx.max(1.0) {
                return Err(MetricError::NotSymmetric { x, residual });
            }
            if let Some((px, pfx)) = previous {
                if fx < pfx - 1e-12 {
                    return Err(MetricError::NotMonotone { x, previous: px });
                }
            }
            previous = Some((x, fx));
        }
        Ok(Self {
            name: name.into(),
            eval: Arc::new(eval),
        })
    }

    /// The SLD metric f(x) = (1+x)/2, the default and required choice.
    pub fn sld() -> Self {
        Self::new("sld", |x| 0.5 * (1.0 + x)).expect("SLD metric is standard monotone")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// Metric weight wᵢⱼ = pⱼ·f(pᵢ/pⱼ), evaluated in the symmetric form
    /// hi·f(lo/hi) so f only ever sees arguments in [0, 1]. Zero exactly
    /// when both populations vanish.
    pub fn weight(&self, p_i: f64, p_j: f64) -> f64 {
        let (lo, hi) = if p_i <= p_j { (p_i, p_j) } else { (p_j, p_i) };
        let lo = lo.max(0.0);
        if hi <= 0.0 {
            return 0.0;
        }
        hi * self.eval(lo / hi)
    }
}

/// What a Fisher value was computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// Jᶠ of a differentiable state family, from ρ̇.
    StateFamily,
    /// Fᶠ(H) of the unitary family e^(−iHt)·ρ·e^(iHt).
    UnitaryAsymmetry,
}

#[derive(Debug, Clone)]
pub struct FisherResult {
    pub value: f64,
    pub metric: String,
    pub generator: GeneratorKind,
}

/// f-inner product ⟨A,B⟩ᶠ = Tr[A·𝕁ᶠ_ρ(B)], evaluated in the eigenbasis
/// of the state. Conjugate-symmetric, linear in B, and positive on the
/// diagonal.
pub fn f_inner_product(
    metric: &MonotoneFunction,
    state: &SpectralState,
    a: &HermitianOperator,
    b: &HermitianOperator,
) -> C64 {
    assert_eq!(state.dim(), a.dim(), "f_inner_product: dimension mismatch");
    assert_eq!(state.dim(), b.dim(), "f_inner_product: dimension mismatch");
    let populations = state.populations();
    let a_tilde = state.to_eigenbasis(a.matrix());
    let b_tilde = state.to_eigenbasis(b.matrix());
    let mut total = C64::new(0.0, 0.0);
    for i in 0..state.dim() {
        for j in 0..state.dim() {
            let w = metric.weight(populations[i], populations[j]);
            if w == 0.0 {
                continue;
            }
            total += a_tilde[(i, j)].conj() * b_tilde[(i, j)] * C64::new(w, 0.0);
        }
    }
    total
}

/// Metric variance Vᶠ_ρ(A) = ⟨A−⟨A⟩, A−⟨A⟩⟩ᶠ. Coincides with the
/// ordinary variance for the SLD metric.
pub fn f_variance(metric: &MonotoneFunction, state: &SpectralState, a: &HermitianOperator) -> f64 {
    let centered = a.add(&HermitianOperator::identity(a.dim()).scale(-state.expectation(a)));
    let v = f_inner_product(metric, state, &centered, &centered).re;
    v.max(0.0)
}

/// Apply the metric superoperator 𝕁ᶠ_ρ to a Hermitian operator.
pub fn apply_metric(
    metric: &MonotoneFunction,
    state: &SpectralState,
    op: &HermitianOperator,
) -> HermitianOperator {
    let populations = state.populations();
    let tilde = state.to_eigenbasis(op.matrix());
    let dim = state.dim();
    let out = DMatrix::from_fn(dim, dim, |i, j| {
        tilde[(i, j)] * C64::new(metric.weight(populations[i], populations[j]), 0.0)
    });
    HermitianOperator::new(state.from_eigenbasis(&out))
        .expect("metric superoperator preserves Hermiticity")
}

/// Logarithmic derivative: the Hermitian L with 𝕁ᶠ_ρ(L) = ρ̇, built as
/// Lᵢⱼ = ρ̇ᵢⱼ / wᵢⱼ in the eigenbasis of ρ.
///
/// Fails if ρ̇ has components between zero-population levels, where no
/// finite L exists.
pub fn log_derivative(
    metric: &MonotoneFunction,
    state: &SpectralState,
    rho_dot: &HermitianOperator,
) -> Result<HermitianOperator, FisherError> {
    assert_eq!(state.dim(), rho_dot.dim(), "log_derivative: dimension mismatch");
    let populations = state.populations();
    let tilde = state.to_eigenbasis(rho_dot.matrix());
    let dim = state.dim();
    let mut l = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let w = metric.weight(populations[i], populations[j]);
            let element = tilde[(i, j)].norm();
            if w == 0.0 {
                if element > SUPPORT_LEAK {
                    return Err(FisherError::Support { element });
                }
                continue;
            }
            l[(i, j)] = tilde[(i, j)] / C64::new(w, 0.0);
        }
    }
    Ok(HermitianOperator::new(state.from_eigenbasis(&l))
        .expect("logarithmic derivative is Hermitian for Hermitian ρ̇"))
}

/// Fisher information Jᶠ = ⟨L,L⟩ᶠ = Σ |ρ̇ᵢⱼ|²/wᵢⱼ of a state family with
/// tangent ρ̇ at ρ.
pub fn fisher_information(
    metric: &MonotoneFunction,
    state: &SpectralState,
    rho_dot: &HermitianOperator,
) -> Result<FisherResult, FisherError> {
    assert_eq!(state.dim(), rho_dot.dim(), "fisher_information: dimension mismatch");
    let populations = state.populations();
    let tilde = state.to_eigenbasis(rho_dot.matrix());
    let mut value = 0.0;
    for i in 0..state.dim() {
        for j in 0..state.dim() {
            let sq = tilde[(i, j)].norm_sqr();
            if sq == 0.0 {
                continue;
            }
            let w = metric.weight(populations[i], populations[j]);
            if w == 0.0 {
                if sq.sqrt() > SUPPORT_LEAK {
                    return Err(FisherError::Support { element: sq.sqrt() });
                }
                continue;
            }
            value += sq / w;
        }
    }
    Ok(FisherResult {
        value,
        metric: metric.name().to_string(),
        generator: GeneratorKind::StateFamily,
    })
}

/// Asymmetry Fisher information of the unitary family generated by H:
/// Fᶠ_ρ(H) = Σ (pᵢ−pⱼ)²/wᵢⱼ·|⟨i|H|j⟩|².
///
/// Degenerate population pairs contribute zero. For metrics whose weight
/// vanishes on the support boundary (f(0) = 0) the value is +∞ on
/// rank-deficient states; the SLD metric stays finite everywhere.
pub fn asymmetry_fisher(
    metric: &MonotoneFunction,
    state: &SpectralState,
    h: &HermitianOperator,
) -> FisherResult {
    assert_eq!(state.dim(), h.dim(), "asymmetry_fisher: dimension mismatch");
    let populations = state.populations();
    let tilde = state.to_eigenbasis(h.matrix());
    let mut value = 0.0;
    for i in 0..state.dim() {
        for j in 0..state.dim() {
            let dp = populations[i] - populations[j];
            if dp == 0.0 {
                continue;
            }
            let w = metric.weight(populations[i], populations[j]);
            if w == 0.0 {
                value = f64::INFINITY;
                continue;
            }
            value += dp * dp / w * tilde[(i, j)].norm_sqr();
        }
    }
    FisherResult {
        value,
        metric: metric.name().to_string(),
        generator: GeneratorKind::UnitaryAsymmetry,
    }
}

/// Decomposition of the variance of H into its quantum part (one quarter
/// of the SLD asymmetry Fisher information) and the classical remainder.
#[derive(Debug, Clone, Copy)]
pub struct VarianceSplit {
    pub quantum: f64,
    pub classical: f64,
}

/// Split V_ρ(H) = Q + C with Q = F_SLD(H)/4. Q vanishes when ρ and H
/// commute; C vanishes on pure states.
pub fn variance_split(state: &SpectralState, h: &HermitianOperator) -> VarianceSplit {
    let quantum = asymmetry_fisher(&MonotoneFunction::sld(), state, h).value / 4.0;
    let variance = state.variance(h);
    let classical = variance - quantum;
    debug_assert!(
        classical > -1e-10,
        "classical variance part fell below tolerance: {classical}"
    );
    VarianceSplit {
        quantum: quantum.max(0.0),
        classical: classical.max(0.0),
    }
}

/// Both sides of the generalized Cramér–Rao inequality for the unitary
/// family ρ_t = e^(−iHt)·ρ·e^(iHt) at t = 0 and an observable A:
/// |d⟨A⟩/dt| ≤ √(Jᶠ)·√(Vᶠ_ρ(A)).
#[derive(Debug, Clone, Copy)]
pub struct CramerRaoSides {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn cramer_rao_check(
    metric: &MonotoneFunction,
    state: &SpectralState,
    generator: &HermitianOperator,
    observable: &HermitianOperator,
) -> Result<CramerRaoSides, FisherError> {
    let minus_i = C64::new(0.0, -1.0);
    let rho_dot = HermitianOperator::new(
        commutator(generator.matrix(), state.rho().matrix()).map(|z| z * minus_i),
    )
    .expect("−i[H, ρ] is Hermitian");
    let lhs = (observable.matrix() * rho_dot.matrix())
        .diagonal()
        .iter()
        .map(|z| z.re)
        .sum::<f64>()
        .abs();
    let fisher = fisher_information(metric, state, &rho_dot)?;
    let rhs = fisher.value.sqrt() * f_variance(metric, state, observable).sqrt();
    Ok(CramerRaoSides { lhs, rhs })
}
