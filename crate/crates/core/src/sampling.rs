//! Seeded generators for random states and unitaries.
//!
//! Every generator takes an explicit RNG so scans are reproducible from a
//! single 64-bit seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::fock::{CMatrix, CVector, DensityOperator, FockCutoff, PureState, C64};

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for sub-task `index` of a seeded job.
pub fn substream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed unit vector in the full space of `cutoff`.
pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, cutoff: &FockCutoff) -> Result<PureState> {
    let amps = CVector::from_fn(cutoff.dim(), |_, _| complex_gaussian(rng));
    PureState::normalized(cutoff.clone(), amps)
}

/// Random pure state `Σ_i r_i |i⟩|total − i⟩` on a `(total+1) × (total+1)` cutoff.
pub fn random_fixed_number_pure<R: Rng + ?Sized>(rng: &mut R, total: usize) -> Result<PureState> {
    let cutoff = FockCutoff::new(total + 1, total + 1)?;
    let mut amps = CVector::zeros(cutoff.dim());
    for i in 0..=total {
        amps[cutoff.index(i, total - i)] = complex_gaussian(rng);
    }
    PureState::normalized(cutoff, amps)
}

/// Full-rank Ginibre density operator `G G† / Tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, cutoff: &FockCutoff) -> Result<DensityOperator> {
    let n = cutoff.dim();
    let g = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let mut m = &g * g.adjoint();
    m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let tr = m.trace().re;
    DensityOperator::new(cutoff.clone(), m.unscale(tr))
}

/// Random weights summing to one (flat Dirichlet).
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Random state of the form `Σ p_kl |k⟩⟨k| ⊗ |l⟩⟨l|`.
pub fn random_ssr_locc<R: Rng + ?Sized>(rng: &mut R, cutoff: &FockCutoff) -> Result<DensityOperator> {
    let w = random_simplex(rng, cutoff.dim());
    let diag = CVector::from_iterator(cutoff.dim(), w.into_iter().map(|x| C64::new(x, 0.0)));
    DensityOperator::new(cutoff.clone(), CMatrix::from_diagonal(&diag))
}

/// Haar-random unitary via QR of a complex Ginibre matrix with phase fix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `rows × cols` matrix with orthonormal columns (`rows ≥ cols`).
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let u = random_unitary(rng, rows);
    u.columns(0, cols).into_owned()
}
