//! Seeded random operators, states, and detailed-balance models.
//!
//! Used by the sweep benchmark and by randomized property tests. All
//! generators are deterministic functions of the supplied RNG; use
//! [`stream_rng`] to derive independent per-task streams from one seed.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::gksl::{JumpOperator, LindbladModel};
use crate::operator::{HermitianOperator, SpectralState, C64};

pub fn seeded_rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`;
/// streams never overlap, which keeps parallel sweeps reproducible.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre-style random complex matrix with unit-variance entries.
pub fn random_complex_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |_, _| standard_complex(rng))
}

/// GUE-style random Hermitian operator scaled by `scale`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> HermitianOperator {
    let g = random_complex_matrix(rng, dim);
    HermitianOperator::new(((&g + g.adjoint()) * C64::new(0.5 * scale, 0.0)).clone())
        .expect("symmetrized Gaussian matrix is Hermitian")
}

/// Full-rank random density matrix ρ = GG†/Tr[GG†].
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> SpectralState {
    let g = random_complex_matrix(rng, dim);
    let m = &g * g.adjoint();
    let trace: f64 = m.diagonal().iter().map(|z| z.re).sum();
    SpectralState::from_matrix(m / C64::new(trace, 0.0))
        .expect("normalized Wishart matrix is a density matrix")
}

/// Random detailed-balance model: GUE Hamiltonian, Hermitian coupling
/// channels, β drawn from [0.2, 1.5], and positive base rates with the
/// negative frequencies fixed by detailed balance.
///
/// Couplings are Hermitian so that the resolved components automatically
/// pair as L(ω)† = L(−ω), as they do for any microscopic system-bath
/// coupling.
pub fn random_thermal_model<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    channels: usize,
) -> LindbladModel {
    let hamiltonian = random_hermitian(rng, dim, 1.0);
    let jumps = (0..channels)
        .map(|k| {
            JumpOperator::new(
                format!("g{k}"),
                random_hermitian(rng, dim, 1.0 / (dim as f64).sqrt())
                    .matrix()
                    .clone(),
            )
        })
        .collect();
    let beta = rng.random_range(0.2..1.5);
    // Rates are consumed per (channel, frequency) in a model-construction
    // order that is deterministic for a given RNG state.
    let mut draws = Vec::new();
    let mut base_rate = |_: usize, _: f64| {
        let g = rng.random_range(0.2..1.0);
        draws.push(g);
        g
    };
    LindbladModel::with_thermal_rates(hamiltonian, jumps, beta, &mut base_rate)
        .expect("thermal construction satisfies detailed balance")
}
