//! Superselection-induced variance (SIV).
//!
//! For a pure state `V(φ) = 4·Var(N_A)`. For mixed states the variance of
//! formation takes the smallest ensemble average of `V` over decompositions
//! into fixed-number pure states. The exact roof is not computed; instead the
//! module provides the analytic lower bound for the minimal family and a seeded
//! randomized upper bound.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{
    hermitian_eigen, local_number_diagonal, CMatrix, DensityOperator, FockCutoff, PureState, Side,
};
use crate::reference::{minimal_to_density, MinimalReference};
use crate::sampling::{complex_gaussian, random_isometry, substream, SimRng};
use crate::ssr::{coherence_v, is_ssr_compliant, ssr_violation};

/// Restarts used by [`vf_ensemble_upper_bound`] when the caller has no preference.
pub const DEFAULT_RESTARTS: usize = 64;
const WITNESS_SLACK: f64 = 1e-12;
const HILL_CLIMB_STEPS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SivReport {
    /// SIV of the coherent pure component `|φ⟩`.
    pub pure_siv: f64,
    pub vf_lower_bound: f64,
    pub vf_upper_bound: f64,
    pub v_abs: f64,
}

fn variance_of(numbers: &[f64], weights: impl Iterator<Item = f64> + Clone) -> f64 {
    let total: f64 = weights.clone().sum();
    if total == 0.0 {
        return 0.0;
    }
    let mean = numbers.iter().zip(weights.clone()).map(|(n, w)| w * n).sum::<f64>() / total;
    numbers.iter().zip(weights).map(|(n, w)| w * (n - mean).powi(2)).sum::<f64>() / total
}

/// `4·Var(N)` of the local particle number on `side`.
pub fn pure_siv_on(phi: &PureState, side: Side) -> f64 {
    let c = phi.cutoff();
    let numbers: Vec<f64> = (0..c.dim())
        .map(|i| {
            let (a, b) = c.split(i);
            match side {
                Side::A => c.local_number(Side::A, a) as f64,
                Side::B => c.local_number(Side::B, b) as f64,
            }
        })
        .collect();
    4.0 * variance_of(&numbers, phi.amps().iter().map(|z| z.norm_sqr()))
}

/// `V(φ) = 4(⟨N_A²⟩ − ⟨N_A⟩²)`.
pub fn pure_siv(phi: &PureState) -> f64 {
    pure_siv_on(phi, Side::A)
}

/// Certified lower bound `4(p_φ r0 r1)²` on the variance of formation.
pub fn vf_bound_minimal(m: &MinimalReference) -> f64 {
    4.0 * m.coherence().powi(2)
}

/// `|𝒱| ≤ √(V_F)/2` evaluated with the lower bound on `V_F`.
pub fn siv_witness_relation(m: &MinimalReference) -> Result<bool> {
    let v = coherence_v(&minimal_to_density(m), 1)?;
    Ok(v.abs() <= vf_bound_minimal(m).sqrt() / 2.0 + WITNESS_SLACK)
}

/// Ensemble cost of a fixed-number block: `Σ_j ‖w_j‖² V(w_j/‖w_j‖)` for the
/// columns `w_j` of `vectors`, in the block's local-number diagonal.
fn ensemble_cost(numbers: &[f64], vectors: &CMatrix) -> f64 {
    vectors
        .column_iter()
        .map(|col| {
            let weight: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            weight * 4.0 * variance_of(numbers, col.iter().map(|z| z.norm_sqr()))
        })
        .sum()
}

struct Sector {
    numbers: Vec<f64>,
    /// Columns `√λ_k e_k`.
    roots: CMatrix,
    diagonal: bool,
    trace: f64,
}

fn orthonormalize(m: CMatrix) -> CMatrix {
    let cols = m.ncols();
    let (q, _) = m.qr().unpack();
    q.columns(0, cols).into_owned()
}

fn sector_search(sector: &Sector, restarts: usize, seed: u64, sector_id: u64) -> f64 {
    let rank = sector.roots.ncols();
    let eigen_cost = ensemble_cost(&sector.numbers, &sector.roots);
    if sector.diagonal {
        return 0.0;
    }
    if rank <= 1 {
        return eigen_cost;
    }
    let best_random = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, (sector_id << 32) | k as u64);
            let size = rank + k % (rank + 1);
            climb(sector, random_isometry(&mut rng, size, rank), &mut rng)
        })
        .reduce(|| f64::INFINITY, f64::min);
    eigen_cost.min(best_random)
}

/// Accepts random perturbations of the isometry that lower the cost.
fn climb(sector: &Sector, mut u: CMatrix, rng: &mut SimRng) -> f64 {
    let cost = |u: &CMatrix| ensemble_cost(&sector.numbers, &(&sector.roots * u.transpose()));
    let mut best = cost(&u);
    let mut scale = 0.3;
    for _ in 0..HILL_CLIMB_STEPS {
        let noise = CMatrix::from_fn(u.nrows(), u.ncols(), |_, _| complex_gaussian(rng));
        let trial = orthonormalize(&u + noise * crate::fock::C64::from(scale));
        let c = cost(&trial);
        if c < best {
            best = c;
            u = trial;
        } else {
            scale *= 0.85;
        }
    }
    best
}

fn sectors_of(rho: &DensityOperator) -> Vec<Sector> {
    let c: &FockCutoff = rho.cutoff();
    let local_a = local_number_diagonal(c, Side::A);
    let mut out = Vec::new();
    for total in 0..=c.max_total_number() {
        let idx: Vec<usize> = (0..c.dim()).filter(|&i| c.total_number(i) == total).collect();
        if idx.is_empty() {
            continue;
        }
        let block = CMatrix::from_fn(idx.len(), idx.len(), |i, j| rho.matrix()[(idx[i], idx[j])]);
        let trace = block.trace().re;
        if trace <= 1e-15 {
            continue;
        }
        let diagonal = (0..idx.len())
            .all(|i| (0..idx.len()).all(|j| i == j || block[(i, j)].norm() <= 1e-12));
        let (vals, vecs) = hermitian_eigen(&block);
        let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 1e-14).collect();
        let roots = CMatrix::from_fn(idx.len(), keep.len(), |i, k| {
            vecs[(i, keep[k])] * vals[keep[k]].sqrt()
        });
        let numbers = idx.iter().map(|&i| local_a[c.split(i).0]).collect();
        out.push(Sector { numbers, roots, diagonal, trace });
    }
    out
}

/// Smallest ensemble-average SIV found over fixed-number decompositions of
/// `rho`. Each total-number block is searched independently: the
/// eigen-ensemble, the number-basis ensemble when the block is diagonal, and
/// `restarts` hill-climbed random isometries of up to twice the block rank.
pub fn vf_ensemble_upper_bound(rho: &DensityOperator, restarts: usize, seed: u64) -> Result<f64> {
    if !is_ssr_compliant(rho) {
        return Err(Error::NotSsrCompliant(format!(
            "coherence {:e} between total-number sectors",
            ssr_violation(rho)
        )));
    }
    let sectors = sectors_of(rho);
    let total: f64 = sectors
        .iter()
        .enumerate()
        .map(|(i, s)| sector_search(s, restarts, seed, i as u64))
        .sum();
    debug_assert!(sectors.iter().map(|s| s.trace).sum::<f64>() > 0.0);
    Ok(total)
}

/// SIV summary of a minimal reference.
pub fn siv_report(m: &MinimalReference, restarts: usize, seed: u64) -> Result<SivReport> {
    let cut = FockCutoff::new(2, 2)?;
    let phi = PureState::from_terms(
        cut,
        &[(0, 1, m.r0.into()), (1, 0, m.r1.into())],
    )?;
    let rho = minimal_to_density(m);
    Ok(SivReport {
        pure_siv: pure_siv(&phi),
        vf_lower_bound: vf_bound_minimal(m),
        vf_upper_bound: vf_ensemble_upper_bound(&rho, restarts, seed)?,
        v_abs: coherence_v(&rho, 1)?.abs(),
    })
}
