//! Bell tests with superselection-compatible local measurements.
//!
//! The principal pair `(|p⟩|p+Δ⟩ + |p+Δ⟩|p⟩)/√2` is measured together with a
//! shared reference frame. Each party measures a dichotomic observable whose
//! eigenvectors mix two kets of equal local particle number `p + a + Δ`, one
//! pair per value of the label `a = −Δ, …, N'`:
//!
//! | labels            | `+1` vector                        | `−1` vector                        |
//! |-------------------|------------------------------------|------------------------------------|
//! | `a < 0`           | `c|p−1, a+Δ+1⟩ + s|p, a+Δ⟩`         | `s|p−1, a+Δ+1⟩ − c|p, a+Δ⟩`         |
//! | `0 ≤ a ≤ N'−Δ`    | `c|p+Δ, a⟩ + s|p, a+Δ⟩`             | `s|p+Δ, a⟩ − c|p, a+Δ⟩`             |
//! | `a > N'−Δ`        | `c|p+Δ, a⟩ + s|p+Δ+1, a−1⟩`         | `s|p+Δ, a⟩ − c|p+Δ+1, a−1⟩`         |
//!
//! with `c = cos θ`, `s = sin θ` and kets written `|principal, reference⟩`.
//! The standard construction uses `p = 2`; the single-particle variant uses
//! `p = 0`, which has no `a < 0` pairs and therefore needs a reference with
//! no vacuum on either side.
//!
//! Correlations are computed two ways: by brute force on the assembled joint
//! state, and by the closed form `−cos 2α cos 2β + 𝒱 sin 2α sin 2β`.

use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{
    hermitian_eigen, CMatrix, CVector, DensityOperator, FockCutoff, PureState, Side,
    TensorProduct, C64, ONE, ZERO,
};
use crate::sampling::{random_unitary, substream};
use crate::ssr::{coherence_v, is_ssr_compliant, is_ssr_locc, ssr_violation};

/// Agreement required between the brute-force and closed-form correlations.
pub const CORRELATION_TOL: f64 = 1e-10;
/// Largest probability tolerated on the unlisted ("null") outcome.
pub const NULL_OUTCOME_TOL: f64 = 1e-12;
/// Agreement required between coherent and dephased outcome statistics.
pub const LHV_TOL: f64 = 1e-10;
/// Eigenvalues below this are dropped when decomposing a mixed reference.
const WEIGHT_FLOOR: f64 = 1e-14;

/// Principal occupation used by the standard construction.
pub const STANDARD_BASE: usize = 2;

/// Shape of the principal state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrincipalForm {
    /// `(|base⟩|base+Δ⟩ + |base+Δ⟩|base⟩)/√2`.
    TwoTerm { base: usize, delta: usize },
    /// `Σ_n c_n |n⟩|total−n⟩`.
    General { total: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalState {
    form: PrincipalForm,
    state: PureState,
}

impl PrincipalState {
    /// `(|2⟩|2+Δ⟩ + |2+Δ⟩|2⟩)/√2`.
    pub fn standard(delta: usize) -> Result<Self> {
        Self::two_term(STANDARD_BASE, delta)
    }

    /// `(|0⟩|1⟩ + |1⟩|0⟩)/√2`, a single particle shared between the parties.
    pub fn single_particle() -> Result<Self> {
        Self::two_term(0, 1)
    }

    pub fn two_term(base: usize, delta: usize) -> Result<Self> {
        if delta == 0 {
            return Err(Error::InvalidArgument("delta must be at least 1".into()));
        }
        let dim = base + delta + 2;
        let cutoff = FockCutoff::new(dim, dim)?;
        let state = PureState::from_terms(
            cutoff,
            &[(base, base + delta, ONE), (base + delta, base, ONE)],
        )?;
        Ok(Self { form: PrincipalForm::TwoTerm { base, delta }, state })
    }

    /// `Σ_n c_n |n⟩|N−n⟩` with `N = coeffs.len() − 1`; coefficients are normalized.
    pub fn general(coeffs: &[C64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("no coefficients".into()));
        }
        let total = coeffs.len() - 1;
        let cutoff = FockCutoff::new(total + 1, total + 1)?;
        let terms: Vec<_> = coeffs
            .iter()
            .enumerate()
            .map(|(n, &c)| (n, total - n, c))
            .collect();
        let state = PureState::from_terms(cutoff, &terms)?;
        Ok(Self { form: PrincipalForm::General { total }, state })
    }

    pub fn form(&self) -> PrincipalForm {
        self.form
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn delta(&self) -> Option<usize> {
        match self.form {
            PrincipalForm::TwoTerm { delta, .. } => Some(delta),
            PrincipalForm::General { .. } => None,
        }
    }

    fn base(&self) -> usize {
        match self.form {
            PrincipalForm::TwoTerm { base, .. } => base,
            PrincipalForm::General { .. } => STANDARD_BASE,
        }
    }
}

/// Full parameterization of an observable, including the local cutoffs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservableSpec {
    pub angle: f64,
    pub delta: usize,
    pub n_ref: usize,
    pub side: Side,
    pub base: usize,
    pub principal_dim: usize,
    pub ref_dim: usize,
}

/// One eigenvector together with its label `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledVector {
    pub label: i64,
    pub vector: PureState,
}

/// Dichotomic SSR-compatible observable on `principal ⊗ reference` of one side.
#[derive(Clone, Debug, PartialEq)]
pub struct SsrObservable {
    pub spec: ObservableSpec,
    pub eigvecs_plus: Vec<LabeledVector>,
    pub eigvecs_minus: Vec<LabeledVector>,
}

impl SsrObservable {
    pub fn local_cutoff(&self) -> FockCutoff {
        FockCutoff::new(self.spec.principal_dim, self.spec.ref_dim)
            .expect("dimensions validated at construction")
    }

    pub fn local_dim(&self) -> usize {
        self.spec.principal_dim * self.spec.ref_dim
    }

    /// `Σ|α(a)⟩⟨α(a)| − Σ|ᾱ(a)⟩⟨ᾱ(a)|`; the unlisted complement has value 0.
    pub fn operator(&self) -> CMatrix {
        let n = self.local_dim();
        let mut op = CMatrix::zeros(n, n);
        for v in &self.eigvecs_plus {
            op += v.vector.amps() * v.vector.amps().adjoint();
        }
        for v in &self.eigvecs_minus {
            op -= v.vector.amps() * v.vector.amps().adjoint();
        }
        op
    }

    /// Projector onto the span of all listed eigenvectors.
    pub fn span_projector(&self) -> CMatrix {
        let n = self.local_dim();
        let mut p = CMatrix::zeros(n, n);
        for v in self.eigvecs_plus.iter().chain(&self.eigvecs_minus) {
            p += v.vector.amps() * v.vector.amps().adjoint();
        }
        p
    }

    /// Gram matrix of all eigenvectors, `+1` family first.
    pub fn gram(&self) -> CMatrix {
        let all: Vec<&CVector> = self
            .eigvecs_plus
            .iter()
            .chain(&self.eigvecs_minus)
            .map(|v| v.vector.amps())
            .collect();
        CMatrix::from_fn(all.len(), all.len(), |i, j| all[i].dotc(all[j]))
    }
}

/// Observable of the standard construction with local cutoffs `4+Δ` and `N'+1`.
pub fn build_observable(angle: f64, delta: usize, n_ref: usize, side: Side) -> Result<SsrObservable> {
    build_observable_with(ObservableSpec {
        angle,
        delta,
        n_ref,
        side,
        base: STANDARD_BASE,
        principal_dim: STANDARD_BASE + delta + 2,
        ref_dim: n_ref + 1,
    })
}

pub fn build_observable_with(spec: ObservableSpec) -> Result<SsrObservable> {
    let ObservableSpec { angle, delta, n_ref, base, principal_dim, ref_dim, .. } = spec;
    if delta == 0 {
        return Err(Error::InvalidArgument("delta must be at least 1".into()));
    }
    if n_ref < delta {
        return Err(Error::InvalidArgument(format!(
            "reference size n_ref={n_ref} must be at least delta={delta}"
        )));
    }
    if !angle.is_finite() {
        return Err(Error::InvalidArgument("angle must be finite".into()));
    }
    let need_principal = base + delta + 2;
    if principal_dim < need_principal {
        return Err(Error::CutoffTooSmall {
            what: "principal cutoff",
            required: need_principal,
            got: principal_dim,
        });
    }
    if ref_dim < n_ref + 1 {
        return Err(Error::CutoffTooSmall {
            what: "reference cutoff",
            required: n_ref + 1,
            got: ref_dim,
        });
    }
    let local = FockCutoff::new(principal_dim, ref_dim)?;
    let (c, s) = (angle.cos(), angle.sin());
    let ket = |p: usize, r: usize| local.index(p, r);
    let pair = |x: usize, y: usize, cx: f64, cy: f64| -> PureState {
        let mut amps = CVector::zeros(local.dim());
        amps[x] = C64::new(cx, 0.0);
        amps[y] = C64::new(cy, 0.0);
        PureState::new(local.clone(), amps).expect("unit vector by construction")
    };

    let (d, n) = (delta as i64, n_ref as i64);
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for a in -d..=n {
        let (x, y) = if a < 0 {
            if base == 0 {
                continue;
            }
            let r = (a + d) as usize;
            (ket(base - 1, r + 1), ket(base, r))
        } else if a <= n - d {
            let a = a as usize;
            (ket(base + delta, a), ket(base, a + delta))
        } else {
            let a = a as usize;
            (ket(base + delta, a), ket(base + delta + 1, a - 1))
        };
        plus.push(LabeledVector { label: a, vector: pair(x, y, c, s) });
        minus.push(LabeledVector { label: a, vector: pair(x, y, s, -c) });
    }
    Ok(SsrObservable { spec, eigvecs_plus: plus, eigvecs_minus: minus })
}

/// Angles `(α₁, α₂, β₁, β₂)` of a CHSH experiment, in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChshSettings {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl ChshSettings {
    pub fn combine<F>(&self, mut corr: F) -> Result<f64>
    where
        F: FnMut(f64, f64) -> Result<f64>,
    {
        Ok(corr(self.alpha1, self.beta1)? + corr(self.alpha1, self.beta2)?
            + corr(self.alpha2, self.beta1)?
            - corr(self.alpha2, self.beta2)?)
    }
}

/// One row of the outcome table: label `a`, the unique `b = N'−a−Δ`, and the
/// probabilities of `(+,+)`, `(+,−)`, `(−,+)`, `(−,−)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeRow {
    pub a: i64,
    pub b: i64,
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityTable {
    pub delta: usize,
    pub n_ref: usize,
    pub rows: Vec<OutcomeRow>,
}

impl ProbabilityTable {
    /// Probability of `(a, outcome_a, b, outcome_b)` with outcomes `±1`.
    pub fn prob(&self, a: i64, outcome_a: i8, b: i64, outcome_b: i8) -> f64 {
        self.rows
            .iter()
            .find(|r| r.a == a && r.b == b)
            .map(|r| match (outcome_a > 0, outcome_b > 0) {
                (true, true) => r.pp,
                (true, false) => r.pm,
                (false, true) => r.mp,
                (false, false) => r.mm,
            })
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.rows.iter().map(|r| r.pp + r.pm + r.mp + r.mm).sum()
    }

    pub fn correlation(&self) -> f64 {
        self.rows.iter().map(|r| r.pp + r.mm - r.mp - r.pm).sum()
    }

    pub fn min_probability(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| [r.pp, r.pm, r.mp, r.mm])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Coefficients `r_i` of a fixed-number reference `Σ r_i |i⟩|N'−i⟩`.
fn reference_coefficients(phi: &PureState) -> Result<(usize, Vec<C64>)> {
    let c = phi.cutoff();
    if !c.is_single_mode() {
        return Err(Error::InvalidArgument("reference needs a single mode per side".into()));
    }
    let total = phi.fixed_total_number().ok_or_else(|| {
        Error::NotSsrCompliant("reference pure state mixes total particle numbers".into())
    })?;
    let r = (0..=total)
        .map(|i| {
            let j = total - i;
            if i < c.dim_a() && j < c.dim_b() {
                phi.amp(i, j)
            } else {
                ZERO
            }
        })
        .collect();
    Ok((total, r))
}

/// Outcome probabilities of the two-term principal state with a pure
/// fixed-number reference, evaluated from the closed-form amplitudes.
pub fn outcome_probabilities(
    psi: &PrincipalState,
    phi_ref: &PureState,
    alpha: f64,
    beta: f64,
) -> Result<ProbabilityTable> {
    let delta = psi.delta().ok_or_else(|| {
        Error::Precondition("outcome table needs the two-term principal state".into())
    })?;
    let (n_ref, r) = reference_coefficients(phi_ref)?;
    let coeff = |i: i64| -> C64 {
        if i >= 0 && (i as usize) < r.len() {
            r[i as usize]
        } else {
            ZERO
        }
    };
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let (d, n) = (delta as i64, n_ref as i64);
    let rows = (-d..=n)
        .map(|a| {
            let hi = coeff(a + d);
            let lo = coeff(a);
            let half = |z: C64| 0.5 * z.norm_sqr();
            OutcomeRow {
                a,
                b: n - a - d,
                pp: half(hi * (sa * cb) + lo * (ca * sb)),
                pm: half(hi * (sa * sb) - lo * (ca * cb)),
                mp: half(-hi * (ca * cb) + lo * (sa * sb)),
                mm: half(-hi * (ca * sb) - lo * (sa * cb)),
            }
        })
        .collect();
    Ok(ProbabilityTable { delta, n_ref, rows })
}

/// `⟨v|A ⊗ B|v⟩` for a joint amplitude matrix `V` (Alice rows, Bob columns).
fn product_expectation(v: &CMatrix, op_a: &CMatrix, op_b: &CMatrix) -> f64 {
    let image = op_a * v * op_b.transpose();
    v.iter().zip(image.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// A principal state and reference assembled into the joint four-mode system.
#[derive(Clone, Debug)]
pub struct BellExperiment {
    principal: PrincipalState,
    delta: usize,
    base: usize,
    n_ref: usize,
    principal_dim: usize,
    reference: DensityOperator,
    /// Weighted joint states, one per fixed-number eigenvector of the reference.
    components: Vec<(f64, CMatrix)>,
    coherence: f64,
}

impl BellExperiment {
    /// Two-term principal state; `Δ` is taken from it.
    pub fn new(psi: &PrincipalState, rho_ref: &DensityOperator) -> Result<Self> {
        let delta = psi.delta().ok_or_else(|| {
            Error::Precondition("use BellExperiment::with_delta for a general principal state".into())
        })?;
        Self::with_delta(psi, rho_ref, delta)
    }

    /// Any principal state, measured with the observables for shift `delta`.
    pub fn with_delta(psi: &PrincipalState, rho_ref: &DensityOperator, delta: usize) -> Result<Self> {
        if delta == 0 {
            return Err(Error::InvalidArgument("delta must be at least 1".into()));
        }
        if let Some(d) = psi.delta() {
            if d != delta {
                return Err(Error::InvalidArgument(format!(
                    "principal state has delta={d}, observables requested for delta={delta}"
                )));
            }
        }
        let rc = rho_ref.cutoff();
        if !rc.is_single_mode() {
            return Err(Error::InvalidArgument("reference needs a single mode per side".into()));
        }
        if !is_ssr_compliant(rho_ref) {
            return Err(Error::NotSsrCompliant(format!(
                "reference has coherence {:e} between total-number sectors",
                ssr_violation(rho_ref)
            )));
        }
        let base = psi.base();
        let sectors = fixed_number_decomposition(rho_ref);
        let max_total = sectors.iter().map(|(n, _, _)| *n).max().unwrap_or(0);
        let n_ref = max_total.max(delta);
        let ref_cut = FockCutoff::new(n_ref + 1, n_ref + 1)?;
        let reference = rho_ref.embed(&ref_cut)?;

        if base == 0 {
            let low = (0..ref_cut.dim())
                .filter(|&i| {
                    let (ia, ib) = ref_cut.split(i);
                    ia < delta || ib < delta
                })
                .map(|i| reference.matrix()[(i, i)].re)
                .sum::<f64>();
            if low > NULL_OUTCOME_TOL {
                return Err(Error::Precondition(format!(
                    "the single-particle construction needs a reference with at least \
                     {delta} particle(s) on each side; weight {low:e} found below that"
                )));
            }
        }

        let principal_dim = psi.state().cutoff().dim_a().max(base + delta + 2);
        let principal_cut = FockCutoff::new(principal_dim, principal_dim)?;
        let principal_state = psi.state().embed(&principal_cut)?;
        let mut components = Vec::with_capacity(sectors.len());
        for (_, weight, vector) in sectors {
            let phi = vector.embed(&ref_cut)?;
            let joint = principal_state.tensor(&phi)?;
            components.push((weight, joint.amplitude_matrix()));
        }
        let coherence = coherence_v(&reference, delta)?;
        Ok(Self {
            principal: psi.clone(),
            delta,
            base,
            n_ref,
            principal_dim,
            reference,
            components,
            coherence,
        })
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn n_ref(&self) -> usize {
        self.n_ref
    }

    /// The reference re-expressed on the `(N'+1) × (N'+1)` cutoff used here.
    pub fn reference(&self) -> &DensityOperator {
        &self.reference
    }

    /// `𝒱` of the reference at this experiment's `Δ`.
    pub fn coherence(&self) -> f64 {
        self.coherence
    }

    pub fn observable(&self, angle: f64, side: Side) -> Result<SsrObservable> {
        build_observable_with(ObservableSpec {
            angle,
            delta: self.delta,
            n_ref: self.n_ref,
            side,
            base: self.base,
            principal_dim: self.principal_dim,
            ref_dim: self.n_ref + 1,
        })
    }

    /// `Σ_k w_k ⟨Ψ_k|A(α) ⊗ B(β)|Ψ_k⟩` on the assembled joint states.
    pub fn correlation_brute(&self, alpha: f64, beta: f64) -> Result<f64> {
        let op_a = self.observable(alpha, Side::A)?.operator();
        let op_b = self.observable(beta, Side::B)?.operator();
        Ok(self
            .components
            .iter()
            .map(|(w, v)| w * product_expectation(v, &op_a, &op_b))
            .sum())
    }

    /// Probability that either party lands outside the listed eigenvectors.
    pub fn null_probability(&self, alpha: f64, beta: f64) -> Result<f64> {
        let span_a = self.observable(alpha, Side::A)?.span_projector();
        let span_b = self.observable(beta, Side::B)?.span_projector();
        let inside: f64 = self
            .components
            .iter()
            .map(|(w, v)| w * product_expectation(v, &span_a, &span_b))
            .sum();
        Ok((1.0 - inside).max(0.0))
    }

    /// `−cos 2α cos 2β + 𝒱 sin 2α sin 2β`.
    pub fn correlation_closed(&self, alpha: f64, beta: f64) -> Result<f64> {
        if self.principal.delta().is_none() {
            return Err(Error::Precondition(
                "the closed form holds for the two-term principal state only".into(),
            ));
        }
        Ok(closed_form_correlation(self.coherence, alpha, beta))
    }

    /// Correlation with both routes evaluated and required to agree.
    pub fn correlation(&self, alpha: f64, beta: f64) -> Result<f64> {
        let closed = self.correlation_closed(alpha, beta)?;
        let null = self.null_probability(alpha, beta)?;
        if null > NULL_OUTCOME_TOL {
            return Err(Error::Contract(format!(
                "null outcome has probability {null:e} at alpha={alpha}, beta={beta}"
            )));
        }
        let brute = self.correlation_brute(alpha, beta)?;
        if (brute - closed).abs() > CORRELATION_TOL {
            return Err(Error::Contract(format!(
                "brute-force correlation {brute} differs from closed form {closed} \
                 at alpha={alpha}, beta={beta}"
            )));
        }
        Ok(brute)
    }

    /// Outcome probabilities over every label pair `(a, b)`, by brute force.
    /// Entries are `(a, b, [pp, pm, mp, mm])`.
    pub fn probability_table_brute(&self, alpha: f64, beta: f64) -> Result<Vec<(i64, i64, [f64; 4])>> {
        let obs_a = self.observable(alpha, Side::A)?;
        let obs_b = self.observable(beta, Side::B)?;
        let mut out = Vec::new();
        for (ia, pa) in obs_a.eigvecs_plus.iter().enumerate() {
            let ma = &obs_a.eigvecs_minus[ia];
            for (ib, pb) in obs_b.eigvecs_plus.iter().enumerate() {
                let mb = &obs_b.eigvecs_minus[ib];
                let prob = |ea: &PureState, eb: &PureState| -> f64 {
                    self.components
                        .iter()
                        .map(|(w, v)| {
                            let amp = ea.amps().dotc(&(v * eb.amps().conjugate()));
                            w * amp.norm_sqr()
                        })
                        .sum()
                };
                out.push((
                    pa.label,
                    pb.label,
                    [
                        prob(&pa.vector, &pb.vector),
                        prob(&pa.vector, &mb.vector),
                        prob(&ma.vector, &pb.vector),
                        prob(&ma.vector, &mb.vector),
                    ],
                ));
            }
        }
        Ok(out)
    }

    pub fn chsh(&self, settings: &ChshSettings) -> Result<f64> {
        settings.combine(|a, b| self.correlation(a, b))
    }

    pub fn chsh_brute(&self, settings: &ChshSettings) -> Result<f64> {
        settings.combine(|a, b| self.correlation_brute(a, b))
    }

    /// Brute-force correlations on the grid `angles × angles`, indexed `[α][β]`.
    /// Uses `⟨V|A⊗B|V⟩ = Σ_ij (V†AV)_ij B_ij` so Alice's half is computed once
    /// per angle.
    pub fn correlation_grid(&self, angles: &[f64]) -> Result<Vec<Vec<f64>>> {
        let ops_b: Vec<CMatrix> = angles
            .iter()
            .map(|&t| self.observable(t, Side::B).map(|o| o.operator()))
            .collect::<Result<_>>()?;
        angles
            .par_iter()
            .map(|&t| {
                let op_a = self.observable(t, Side::A)?.operator();
                let halves: Vec<(f64, CMatrix)> = self
                    .components
                    .iter()
                    .map(|(w, v)| (*w, v.adjoint() * &op_a * v))
                    .collect();
                Ok(ops_b
                    .iter()
                    .map(|ob| {
                        halves
                            .iter()
                            .map(|(w, m)| w * m.iter().zip(ob.iter()).map(|(x, y)| (x * y).re).sum::<f64>())
                            .sum()
                    })
                    .collect())
            })
            .collect()
    }
}

/// Splits an SSR-compliant reference into `(total, weight, unit vector)`
/// triples, diagonalizing each total-number block separately.
pub fn fixed_number_decomposition(rho: &DensityOperator) -> Vec<(usize, f64, PureState)> {
    let c = rho.cutoff();
    let mut out = Vec::new();
    for total in 0..=c.max_total_number() {
        let idx: Vec<usize> = (0..c.dim()).filter(|&i| c.total_number(i) == total).collect();
        if idx.is_empty() {
            continue;
        }
        let block = CMatrix::from_fn(idx.len(), idx.len(), |i, j| rho.matrix()[(idx[i], idx[j])]);
        if block.trace().re <= WEIGHT_FLOOR {
            continue;
        }
        let (vals, vecs) = hermitian_eigen(&block);
        for (k, &w) in vals.iter().enumerate() {
            if w <= WEIGHT_FLOOR {
                continue;
            }
            let mut amps = CVector::zeros(c.dim());
            for (row, &i) in idx.iter().enumerate() {
                amps[i] = vecs[(row, k)];
            }
            let psi = PureState::normalized(c.clone(), amps).expect("eigenvector is nonzero");
            out.push((total, w, psi));
        }
    }
    out
}

pub fn closed_form_correlation(v: f64, alpha: f64, beta: f64) -> f64 {
    -(2.0 * alpha).cos() * (2.0 * beta).cos() + v * (2.0 * alpha).sin() * (2.0 * beta).sin()
}

/// Correlation of the two-term principal state with `rho_ref`, cross-checked
/// between the brute-force and closed-form routes.
pub fn correlation(psi: &PrincipalState, rho_ref: &DensityOperator, alpha: f64, beta: f64) -> Result<f64> {
    BellExperiment::new(psi, rho_ref)?.correlation(alpha, beta)
}

/// `S = E(α₁,β₁) + E(α₁,β₂) + E(α₂,β₁) − E(α₂,β₂)`.
pub fn chsh(psi: &PrincipalState, rho_ref: &DensityOperator, settings: &ChshSettings) -> Result<f64> {
    BellExperiment::new(psi, rho_ref)?.chsh(settings)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChshOptimum {
    pub s_max: f64,
    pub settings: ChshSettings,
}

/// `S = 2√(1+𝒱²)` at `α₁ = 0`, `α₂ = π/4`, `β₁ = −β₂ = β` with
/// `(cos 2β, sin 2β) ∝ (−2, 2𝒱)`.
pub fn chsh_optimal(v: f64) -> Result<ChshOptimum> {
    if v.is_nan() || v.abs() > 1.0 {
        return Err(Error::InvalidArgument(format!("|v| must not exceed 1, got {v}")));
    }
    let beta = 0.5 * (2.0 * v).atan2(-2.0);
    Ok(ChshOptimum {
        s_max: 2.0 * (1.0 + v * v).sqrt(),
        settings: ChshSettings { alpha1: 0.0, alpha2: FRAC_PI_4, beta1: beta, beta2: -beta },
    })
}

/// Largest `|S|` over all choices of two Alice rows and two Bob columns of a
/// correlation table `table[α][β]`.
pub fn max_abs_chsh(table: &[Vec<f64>]) -> f64 {
    let na = table.len();
    let nb = table.first().map_or(0, Vec::len);
    let mut best: f64 = 0.0;
    for i1 in 0..na {
        for i2 in 0..na {
            for j1 in 0..nb {
                for j2 in 0..nb {
                    let s = table[i1][j1] + table[i1][j2] + table[i2][j1] - table[i2][j2];
                    best = best.max(s.abs());
                }
            }
        }
    }
    best
}

/// Block-diagonal unitary: an independent random rotation inside every local
/// total-number sector of `cutoff`'s `side`.
fn random_sector_unitary(
    rng: &mut crate::sampling::SimRng,
    cutoff: &FockCutoff,
    side: Side,
) -> CMatrix {
    let n = cutoff.side_dim(side);
    let mut u = CMatrix::zeros(n, n);
    for number in 0..=cutoff.max_local_number(side) {
        let idx: Vec<usize> = (0..n).filter(|&i| cutoff.local_number(side, i) == number).collect();
        if idx.is_empty() {
            continue;
        }
        let block = random_unitary(rng, idx.len());
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                u[(i, j)] = block[(r, c)];
            }
        }
    }
    u
}

/// Largest difference between the outcome statistics of the coherent joint
/// state and its dephased separable counterpart, for one pair of seeded random
/// SSR-compatible local projective measurements.
pub fn lhv_statistics_gap(psi: &PrincipalState, reference: &DensityOperator, seed: u64) -> Result<f64> {
    if !is_ssr_locc(reference) {
        return Err(Error::Precondition(
            "reference is not diagonal in the product number basis".into(),
        ));
    }
    if psi.state().fixed_total_number().is_none() {
        return Err(Error::NotSsrCompliant("principal state mixes total numbers".into()));
    }
    let pc = psi.state().cutoff();
    let rc = reference.cutoff();
    let joint = pc.combine(rc);
    let ua = random_sector_unitary(&mut substream(seed, 0), &joint, Side::A);
    let ub = random_sector_unitary(&mut substream(seed, 1), &joint, Side::B);
    let (da, db) = (joint.dim_a(), joint.dim_b());
    let (ra, rb) = (rc.dim_a(), rc.dim_b());

    let mut coherent = nalgebra::DMatrix::<f64>::zeros(da, db);
    let mut dephased = nalgebra::DMatrix::<f64>::zeros(da, db);
    let ub_conj = ub.conjugate();
    let ua_abs2 = ua.map(|z| z.norm_sqr());
    let ub_abs2 = ub.map(|z| z.norm_sqr());
    for k in 0..ra {
        for l in 0..rb {
            let p = reference.matrix()[(rc.index(k, l), rc.index(k, l))].re;
            if p <= 0.0 {
                continue;
            }
            let basis = PureState::basis(rc.clone(), k, l)?;
            let v = psi.state().tensor(&basis)?.amplitude_matrix();
            let amps = ua.adjoint() * &v * &ub_conj;
            coherent += amps.map(|z| p * z.norm_sqr());
            for n in 0..pc.dim_a() {
                for m in 0..pc.dim_b() {
                    let w = psi.state().amp(n, m).norm_sqr();
                    if w == 0.0 {
                        continue;
                    }
                    let row = ua_abs2.row(n * ra + k);
                    let col = ub_abs2.row(m * rb + l);
                    dephased += (p * w) * row.transpose() * col;
                }
            }
        }
    }
    Ok((coherent - dephased).amax())
}

/// True iff coherent and dephased statistics agree within [`LHV_TOL`].
pub fn ssr_locc_lhv_check(psi: &PrincipalState, reference: &DensityOperator, seed: u64) -> Result<bool> {
    Ok(lhv_statistics_gap(psi, reference, seed)? <= LHV_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::max_abs_diff;
    use crate::sampling::{random_fixed_number_pure, random_ssr_locc, rng_from_seed};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn bell_ref() -> PureState {
        let cut = FockCutoff::new(2, 2).unwrap();
        PureState::from_terms(cut, &[(0, 1, ONE), (1, 0, ONE)]).unwrap()
    }

    #[test]
    fn observable_at_zero_angle() {
        let obs = build_observable(0.0, 1, 2, Side::A).unwrap();
        let cut = obs.local_cutoff();
        for (p, m) in obs.eigvecs_plus.iter().zip(&obs.eigvecs_minus) {
            let a = p.label;
            if (0..=1).contains(&a) {
                let a = a as usize;
                assert_eq!(p.vector.amp(3, a), ONE);
                assert_eq!(m.vector.amp(2, a + 1), -ONE);
            }
        }
        assert_eq!(cut.dim_a(), 5);
    }

    #[test]
    fn observable_is_orthonormal_with_fixed_local_numbers() {
        let obs = build_observable(0.37, 1, 1, Side::A).unwrap();
        assert_eq!(obs.eigvecs_plus.len(), 3);
        assert_eq!(obs.eigvecs_minus.len(), 3);
        let gram = obs.gram();
        assert!(max_abs_diff(&gram, &CMatrix::identity(6, 6)) < 1e-12);

        for (d, n) in [(1, 4), (2, 3), (3, 6)] {
            let obs = build_observable(1.1, d, n, Side::B).unwrap();
            assert_eq!(obs.eigvecs_plus.len(), n + d + 1);
            let k = 2 * (n + d + 1);
            assert!(max_abs_diff(&obs.gram(), &CMatrix::identity(k, k)) < 1e-12);
            let cut = obs.local_cutoff();
            for v in obs.eigvecs_plus.iter().chain(&obs.eigvecs_minus) {
                let numbers: Vec<usize> = v
                    .vector
                    .amps()
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| z.norm() > 0.0)
                    .map(|(i, _)| cut.total_number(i))
                    .collect();
                assert!(numbers.iter().all(|&x| x as i64 == 2 + v.label + d as i64));
            }
        }
    }

    #[test]
    fn observable_at_right_angle_swaps_kets() {
        let zero = build_observable(0.0, 2, 3, Side::A).unwrap();
        let right = build_observable(FRAC_PI_2, 2, 3, Side::A).unwrap();
        for (z, r) in zero.eigvecs_plus.iter().zip(&right.eigvecs_minus) {
            // ᾱ(π/2) = |x⟩ = α(0)
            assert!((z.vector.amps() - r.vector.amps()).norm() < 1e-15);
        }
        for (z, r) in zero.eigvecs_minus.iter().zip(&right.eigvecs_plus) {
            // α(π/2) = |y⟩ = −ᾱ(0)
            assert!((z.vector.amps() + r.vector.amps()).norm() < 1e-15);
        }
    }

    #[test]
    fn observable_cutoff_errors_name_requirement() {
        let spec = ObservableSpec {
            angle: 0.0,
            delta: 2,
            n_ref: 2,
            side: Side::A,
            base: 2,
            principal_dim: 5,
            ref_dim: 3,
        };
        let err = build_observable_with(spec).unwrap_err();
        assert_eq!(
            err,
            Error::CutoffTooSmall { what: "principal cutoff", required: 6, got: 5 }
        );
        assert!(build_observable(0.0, 3, 2, Side::A).is_err());
        assert!(build_observable(0.0, 0, 2, Side::A).is_err());
    }

    #[test]
    fn outcome_table_examples() {
        let psi = PrincipalState::standard(1).unwrap();
        let table = outcome_probabilities(&psi, &bell_ref(), 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(table.total(), 1.0, epsilon = 1e-15);
        // at α=β=0 only the (−,+) and (+,−) outcomes occur
        for row in &table.rows {
            assert_eq!(row.pp, 0.0);
            assert_eq!(row.mm, 0.0);
        }
        assert_abs_diff_eq!(table.correlation(), -1.0, epsilon = 1e-15);

        let q = FRAC_PI_4;
        let table = outcome_probabilities(&psi, &bell_ref(), q, q).unwrap();
        assert_abs_diff_eq!(table.prob(0, 1, 0, 1), 0.25, epsilon = 1e-15);
        assert_eq!(table.prob(0, 1, 1, 1), 0.0);
        for a in -1..=1 {
            let nonzero = (-1..=1)
                .filter(|&b| {
                    [(1, 1), (1, -1), (-1, 1), (-1, -1)]
                        .iter()
                        .any(|&(x, y)| table.prob(a, x, b, y) > 0.0)
                })
                .count();
            assert!(nonzero <= 1);
        }
    }

    #[test]
    fn outcome_table_rejects_mixed_number_reference() {
        let cut = FockCutoff::new(2, 2).unwrap();
        let bad = PureState::from_terms(cut, &[(0, 0, ONE), (1, 1, ONE)]).unwrap();
        let psi = PrincipalState::standard(1).unwrap();
        assert!(matches!(
            outcome_probabilities(&psi, &bad, 0.1, 0.2),
            Err(Error::NotSsrCompliant(_))
        ));
    }

    #[test]
    fn brute_table_matches_closed_table() {
        let mut rng = rng_from_seed(17);
        for (delta, n) in [(1, 1), (1, 3), (2, 4), (3, 5)] {
            let phi = random_fixed_number_pure(&mut rng, n).unwrap();
            let psi = PrincipalState::standard(delta).unwrap();
            let exp = BellExperiment::new(&psi, &phi.to_density()).unwrap();
            let (al, be) = (0.3, -1.2);
            let closed = outcome_probabilities(&psi, &phi, al, be).unwrap();
            let brute = exp.probability_table_brute(al, be).unwrap();
            let mut total = 0.0;
            for (a, b, p) in brute {
                let want = [
                    closed.prob(a, 1, b, 1),
                    closed.prob(a, 1, b, -1),
                    closed.prob(a, -1, b, 1),
                    closed.prob(a, -1, b, -1),
                ];
                for k in 0..4 {
                    assert_abs_diff_eq!(p[k], want[k], epsilon = 1e-13);
                }
                total += p.iter().sum::<f64>();
            }
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn correlation_examples() {
        let psi = PrincipalState::standard(1).unwrap();
        let bell = bell_ref().to_density();
        for beta in [0.0, 0.4, 1.3] {
            let e = correlation(&psi, &bell, 0.0, beta).unwrap();
            assert_abs_diff_eq!(e, -(2.0 * beta).cos(), epsilon = 1e-12);
        }
        let e = correlation(&psi, &bell, FRAC_PI_4, FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(e, 0.5, epsilon = 1e-12);

        let locc = random_ssr_locc(&mut rng_from_seed(3), &FockCutoff::new(3, 3).unwrap()).unwrap();
        let e = correlation(&psi, &locc, 0.7, 0.2).unwrap();
        assert_abs_diff_eq!(e, -(1.4f64).cos() * (0.4f64).cos(), epsilon = 1e-12);
    }

    #[test]
    fn correlation_rejects_incoherent_sector_mixing() {
        let cut = FockCutoff::new(2, 2).unwrap();
        let bad = PureState::from_terms(cut, &[(0, 0, ONE), (1, 1, ONE)]).unwrap();
        let psi = PrincipalState::standard(1).unwrap();
        assert!(matches!(
            correlation(&psi, &bad.to_density(), 0.1, 0.1),
            Err(Error::NotSsrCompliant(_))
        ));
    }

    #[test]
    fn chsh_examples() {
        let psi = PrincipalState::standard(1).unwrap();
        let bell = bell_ref().to_density();
        let beta = 0.3;
        let settings = ChshSettings { alpha1: 0.0, alpha2: FRAC_PI_4, beta1: beta, beta2: -beta };
        let s = chsh(&psi, &bell, &settings).unwrap();
        assert_abs_diff_eq!(s, -2.0 * (0.6f64).cos() + 2.0 * 0.5 * (0.6f64).sin(), epsilon = 1e-12);

        let opt = chsh_optimal(0.5).unwrap();
        assert_abs_diff_eq!(opt.s_max, 2.0 * 1.25f64.sqrt(), epsilon = 1e-15);
        let s = chsh(&psi, &bell, &opt.settings).unwrap();
        assert_abs_diff_eq!(s, 2.236_067_977_499_79, epsilon = 1e-10);
    }

    #[test]
    fn chsh_optimal_examples() {
        assert_eq!(chsh_optimal(0.0).unwrap().s_max, 2.0);
        assert_abs_diff_eq!(chsh_optimal(1.0).unwrap().s_max, 2.0 * 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(chsh_optimal(0.25).unwrap().s_max, 17f64.sqrt() / 2.0, epsilon = 1e-15);
        assert!(chsh_optimal(1.01).is_err());
        assert!(chsh_optimal(f64::NAN).is_err());
        let s = chsh_optimal(0.25).unwrap().settings;
        let direct = -2.0 * (2.0 * s.beta1).cos() + 2.0 * 0.25 * (2.0 * s.beta1).sin();
        assert_abs_diff_eq!(direct, 17f64.sqrt() / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn single_particle_variant_matches_closed_form() {
        let psi = PrincipalState::single_particle().unwrap();
        // N' = 3 reference with no vacuum on either side: r_0 = r_3 = 0.
        let cut = FockCutoff::new(4, 4).unwrap();
        let phi = PureState::from_terms(cut, &[(1, 2, C64::new(0.6, 0.0)), (2, 1, C64::new(0.8, 0.0))])
            .unwrap()
            .to_density();
        let exp = BellExperiment::new(&psi, &phi).unwrap();
        assert_abs_diff_eq!(exp.coherence(), 0.48, epsilon = 1e-15);
        for &(a, b) in &[(0.0, 0.0), (0.3, 0.9), (FRAC_PI_4, -0.4)] {
            exp.correlation(a, b).unwrap();
        }

        let with_vacuum = bell_ref().to_density();
        assert!(matches!(
            BellExperiment::new(&psi, &with_vacuum),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn mixed_reference_uses_convexity() {
        let cut = FockCutoff::new(2, 2).unwrap();
        let phi = bell_ref();
        let vac = PureState::basis(cut.clone(), 0, 0).unwrap();
        let two = PureState::basis(cut, 1, 1).unwrap();
        let rho = DensityOperator::mixture(&[(0.25, vac), (0.25, two), (0.5, phi)]).unwrap();
        let psi = PrincipalState::standard(1).unwrap();
        let exp = BellExperiment::new(&psi, &rho).unwrap();
        assert_eq!(exp.n_ref(), 2);
        assert_abs_diff_eq!(exp.coherence(), 0.25, epsilon = 1e-15);
        let e = exp.correlation(FRAC_PI_4, FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(e, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn lhv_check_examples() {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let psi = PrincipalState::general(&[h, h]).unwrap();
        let vac = PureState::basis(FockCutoff::new(1, 1).unwrap(), 0, 0).unwrap().to_density();
        assert!(ssr_locc_lhv_check(&psi, &vac, 0).unwrap());

        assert!(matches!(
            ssr_locc_lhv_check(&psi, &bell_ref().to_density(), 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn max_abs_chsh_recovers_known_optimum() {
        let angles: Vec<f64> = (0..8).map(|k| k as f64 * std::f64::consts::PI / 8.0).collect();
        let table: Vec<Vec<f64>> = angles
            .iter()
            .map(|&a| angles.iter().map(|&b| closed_form_correlation(1.0, a, b)).collect())
            .collect();
        assert_abs_diff_eq!(max_abs_chsh(&table), 2.0 * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn grid_matches_pointwise_brute_force() {
        let phi = random_fixed_number_pure(&mut rng_from_seed(21), 3).unwrap();
        let psi = PrincipalState::general(&[C64::new(0.6, 0.1), C64::new(-0.3, 0.4), C64::new(0.5, 0.0)]).unwrap();
        let exp = BellExperiment::with_delta(&psi, &phi.to_density(), 1).unwrap();
        let angles = [0.0, 0.4, 1.1, 2.7];
        let grid = exp.correlation_grid(&angles).unwrap();
        for (i, &a) in angles.iter().enumerate() {
            for (j, &b) in angles.iter().enumerate() {
                assert_abs_diff_eq!(grid[i][j], exp.correlation_brute(a, b).unwrap(), epsilon = 1e-12);
            }
        }
    }
}
