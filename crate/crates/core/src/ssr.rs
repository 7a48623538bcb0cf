//! Particle-number superselection: twirling channels, the SSR-LOCC test,
//! the shift operators `R±(Δ)` and the coherence parameter `𝒱`.

use crate::error::{Error, Result};
use crate::fock::{CMatrix, DensityOperator, FockCutoff, PureState, Side, C64, ONE, ZERO};

/// Off-diagonal tolerance for the compliance and SSR-LOCC tests.
pub const SSR_TOL: f64 = 1e-10;
/// Threshold above which `|𝒱|` counts as non-vanishing.
pub const COHERENCE_TOL: f64 = 1e-10;

/// Shift operators `R₊ = Σ_a |a+Δ⟩⟨a|` and `R₋ = R₊†` on a `dim`-level mode.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderPair {
    pub delta: usize,
    pub dim: usize,
    pub r_plus: CMatrix,
    pub r_minus: CMatrix,
}

impl LadderPair {
    pub fn new(delta: usize, dim: usize) -> Result<Self> {
        if delta == 0 || dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "ladder operators need delta >= 1 and dim >= 1 (got delta={delta}, dim={dim})"
            )));
        }
        let mut r_plus = CMatrix::zeros(dim, dim);
        for a in 0..dim.saturating_sub(delta) {
            r_plus[(a + delta, a)] = ONE;
        }
        let r_minus = r_plus.adjoint();
        Ok(Self { delta, dim, r_plus, r_minus })
    }

    /// `R₊ ⊗ R₋` over a single-mode bipartite cutoff.
    pub fn joint(&self, cutoff: &FockCutoff) -> Result<CMatrix> {
        let bob = LadderPair::new(self.delta, cutoff.dim_b())?;
        if cutoff.dim_a() != self.dim || !cutoff.is_single_mode() {
            return Err(Error::DimensionMismatch(
                "ladder pair does not match the cutoff".into(),
            ));
        }
        Ok(self.r_plus.kronecker(&bob.r_minus))
    }
}

fn dephase_where<F>(rho: &DensityOperator, keep: F) -> DensityOperator
where
    F: Fn(usize, usize) -> bool,
{
    let n = rho.cutoff().dim();
    let m = rho.matrix();
    let mat = CMatrix::from_fn(n, n, |i, j| if keep(i, j) { m[(i, j)] } else { ZERO });
    DensityOperator::from_raw(rho.cutoff().clone(), mat)
}

/// `Σ_n Π_n ρ Π_n` over total particle number.
pub fn twirl_global(rho: &DensityOperator) -> DensityOperator {
    let c = rho.cutoff();
    dephase_where(rho, |i, j| c.total_number(i) == c.total_number(j))
}

/// Dephasing with respect to the local number operator of `side`.
pub fn twirl_local(rho: &DensityOperator, side: Side) -> DensityOperator {
    let c = rho.cutoff();
    dephase_where(rho, |i, j| {
        let (ia, ib) = c.split(i);
        let (ja, jb) = c.split(j);
        match side {
            Side::A => c.local_number(Side::A, ia) == c.local_number(Side::A, ja),
            Side::B => c.local_number(Side::B, ib) == c.local_number(Side::B, jb),
        }
    })
}

fn max_abs_where<F>(rho: &DensityOperator, select: F) -> f64
where
    F: Fn(usize, usize) -> bool,
{
    let n = rho.cutoff().dim();
    let m = rho.matrix();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if select(i, j) {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

/// Largest coherence between different total-number sectors.
pub fn ssr_violation(rho: &DensityOperator) -> f64 {
    let c = rho.cutoff();
    max_abs_where(rho, |i, j| c.total_number(i) != c.total_number(j))
}

/// True iff `ρ` commutes with the total number operator.
pub fn is_ssr_compliant(rho: &DensityOperator) -> bool {
    ssr_violation(rho) <= SSR_TOL
}

/// True iff `ρ` is diagonal in the product number basis.
pub fn is_ssr_locc(rho: &DensityOperator) -> bool {
    max_abs_where(rho, |i, j| i != j) <= SSR_TOL
}

fn check_delta(cutoff: &FockCutoff, delta: usize) -> Result<()> {
    if !cutoff.is_single_mode() {
        return Err(Error::InvalidArgument(
            "the coherence parameter needs a single mode per side".into(),
        ));
    }
    let limit = cutoff.dim_a().min(cutoff.dim_b());
    if delta == 0 || delta >= limit {
        return Err(Error::InvalidArgument(format!(
            "delta must satisfy 1 <= delta < {limit}, got {delta}"
        )));
    }
    Ok(())
}

/// `Tr[(R₊ ⊗ R₋) ρ] = Σ ⟨a, b|ρ|a+Δ, b−Δ⟩`.
pub fn coherence_trace(rho: &DensityOperator, delta: usize) -> Result<C64> {
    let c = rho.cutoff();
    check_delta(c, delta)?;
    let m = rho.matrix();
    let mut acc = ZERO;
    for a in 0..c.dim_a() - delta {
        for b in delta..c.dim_b() {
            acc += m[(c.index(a, b), c.index(a + delta, b - delta))];
        }
    }
    Ok(acc)
}

/// Coherence parameter `𝒱 = Re Tr[(R₊ ⊗ R₋) ρ]`.
pub fn coherence_v(rho: &DensityOperator, delta: usize) -> Result<f64> {
    Ok(coherence_trace(rho, delta)?.re)
}

/// `Re ⟨φ|R₊ ⊗ R₋|φ⟩` straight from the amplitudes.
pub fn coherence_v_pure(phi: &PureState, delta: usize) -> Result<f64> {
    let c = phi.cutoff();
    check_delta(c, delta)?;
    let mut acc = ZERO;
    for a in 0..c.dim_a() - delta {
        for b in delta..c.dim_b() {
            acc += phi.amp(a + delta, b - delta).conj() * phi.amp(a, b);
        }
    }
    Ok(acc.re)
}

/// Outcome of scanning `𝒱(Δ)` over every admissible shift.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessReport {
    /// Largest `|𝒱|` found.
    pub max_abs_v: f64,
    /// Shift attaining it (smallest on ties; 1 when nothing is scanned).
    pub delta: usize,
    /// Signed `𝒱` for each scanned shift.
    pub per_delta: Vec<(usize, f64)>,
    /// Ground truth: diagonal in the product number basis.
    pub diagonal: bool,
}

impl WitnessReport {
    /// Verdict of the witness alone: every `𝒱(Δ)` vanishes.
    pub fn witness_says_locc(&self) -> bool {
        self.max_abs_v <= COHERENCE_TOL
    }

    /// Whether the witness verdict matches the diagonality test.
    pub fn agrees(&self) -> bool {
        self.witness_says_locc() == self.diagonal
    }
}

pub fn ssr_locc_witness(rho: &DensityOperator) -> Result<WitnessReport> {
    let c = rho.cutoff();
    if !c.is_single_mode() {
        return Err(Error::InvalidArgument(
            "the witness scan needs a single mode per side".into(),
        ));
    }
    let upper = c.dim_a().min(c.dim_b());
    let mut per_delta = Vec::new();
    let (mut best, mut arg) = (0.0_f64, 1);
    for delta in 1..upper {
        let v = coherence_v(rho, delta)?;
        if v.abs() > best {
            best = v.abs();
            arg = delta;
        }
        per_delta.push((delta, v));
    }
    Ok(WitnessReport {
        max_abs_v: best,
        delta: arg,
        per_delta,
        diagonal: is_ssr_locc(rho),
    })
}

/// `(𝒱(twirl_global(ρ)), 𝒱(ρ))`; the two agree because `R₊ ⊗ R₋`
/// conserves the total particle number.
pub fn twirl_invariance_check(rho_raw: &DensityOperator, delta: usize) -> Result<(f64, f64)> {
    let twirled = coherence_v(&twirl_global(rho_raw), delta)?;
    let raw = coherence_v(rho_raw, delta)?;
    Ok((twirled, raw))
}
