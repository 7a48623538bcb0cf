//! Reference frames: the two-particle family with its separability test, and
//! product references maximizing the coherence parameter.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{
    hermitian_eigenvalues, partial_transpose, CMatrix, CVector, DensityOperator, FockCutoff,
    PureState, Side, C64, PSD_FLOOR, STATE_TOL,
};
use crate::ssr::{coherence_v, twirl_global};

/// Slack on the analytic separability inequality `p00·p11 ≥ 𝒱²`.
const ANALYTIC_SLACK: f64 = 1e-12;
/// Agreement required between closed-form and numeric eigen-solutions.
pub const EIGEN_TOL: f64 = 1e-12;

/// `p00|00⟩⟨00| + p11|11⟩⟨11| + p_φ|φ⟩⟨φ|` with `|φ⟩ = r0|0,1⟩ + r1|1,0⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimalReference {
    pub p00: f64,
    pub p11: f64,
    pub p_phi: f64,
    pub r0: f64,
    pub r1: f64,
}

impl MinimalReference {
    pub fn new(p00: f64, p11: f64, p_phi: f64, r0: f64, r1: f64) -> Result<Self> {
        let all = [p00, p11, p_phi, r0, r1];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite minimal reference parameter".into()));
        }
        if p00 < 0.0 || p11 < 0.0 || p_phi < 0.0 {
            return Err(Error::InvalidArgument("weights must be non-negative".into()));
        }
        let total = p00 + p11 + p_phi;
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, expected 1")));
        }
        let norm = r0 * r0 + r1 * r1;
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidArgument(format!("r0² + r1² = {norm}, expected 1")));
        }
        Ok(Self { p00, p11, p_phi, r0, r1 })
    }

    /// Closed-form coherence `p_φ r0 r1`.
    pub fn coherence(&self) -> f64 {
        self.p_phi * self.r0 * self.r1
    }

    /// Draws weights from the flat simplex and `(r0, r1)` on the unit circle.
    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R) -> Self {
        let w = crate::sampling::random_simplex(rng, 3);
        let theta = rng.random::<f64>() * 2.0 * PI;
        let p_phi = 1.0 - w[0] - w[1];
        Self { p00: w[0], p11: w[1], p_phi: p_phi.max(0.0), r0: theta.cos(), r1: theta.sin() }
    }
}

pub fn minimal_to_density(m: &MinimalReference) -> DensityOperator {
    let cut = FockCutoff::new(2, 2).expect("2x2 cutoff");
    let mut mat = CMatrix::zeros(4, 4);
    let (i01, i10) = (cut.index(0, 1), cut.index(1, 0));
    mat[(cut.index(0, 0), cut.index(0, 0))] = C64::from(m.p00);
    mat[(cut.index(1, 1), cut.index(1, 1))] = C64::from(m.p11);
    mat[(i01, i01)] = C64::from(m.p_phi * m.r0 * m.r0);
    mat[(i10, i10)] = C64::from(m.p_phi * m.r1 * m.r1);
    mat[(i01, i10)] = C64::from(m.p_phi * m.r0 * m.r1);
    mat[(i10, i01)] = C64::from(m.p_phi * m.r0 * m.r1);
    DensityOperator::from_raw(cut, mat)
}

/// Smallest eigenvalue of the partial transpose on B.
pub fn ppt_min_eigenvalue(m: &MinimalReference) -> f64 {
    let pt = partial_transpose(&minimal_to_density(m), Side::B);
    hermitian_eigenvalues(&pt).into_iter().fold(f64::INFINITY, f64::min)
}

/// The analytic criterion `p00·p11 ≥ (p_φ r0 r1)²`.
pub fn separable_by_inequality(m: &MinimalReference) -> bool {
    let v = m.coherence();
    m.p00 * m.p11 - v * v >= -ANALYTIC_SLACK
}

/// Separability of a minimal reference. The analytic inequality and the
/// numeric partial-transpose test must agree; a disagreement is an error.
pub fn is_separable_minimal(m: &MinimalReference) -> Result<bool> {
    let analytic = separable_by_inequality(m);
    let min_eig = ppt_min_eigenvalue(m);
    let numeric = min_eig >= PSD_FLOOR;
    if analytic != numeric {
        return Err(Error::Contract(format!(
            "separability inequality says {analytic} but the partial transpose has \
             minimum eigenvalue {min_eig:e} for {m:?}"
        )));
    }
    Ok(analytic)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparableOptimum {
    pub v_max: f64,
    pub witness: MinimalReference,
}

/// Best coherence for given weights: `r0 r1` ranges over `[−½, ½]`, so the
/// constrained optimum over `(r0, r1)` is `min(p_φ/2, √(p00·p11))`.
pub fn best_coherence_for_weights(p_phi: f64, p00: f64) -> f64 {
    let p11 = (1.0 - p_phi - p00).max(0.0);
    (0.5 * p_phi).min((p00 * p11).sqrt())
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Largest coherence among separable minimal references: a grid of step
/// `1e-3` over `(p_φ, p00)` followed by golden-section refinement.
pub fn max_v_separable_minimal() -> SeparableOptimum {
    const STEPS: usize = 1000;
    let (mut best, mut best_phi, mut best_p00) = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=STEPS {
        let p_phi = i as f64 / STEPS as f64;
        for j in 0..=(STEPS - i) {
            let p00 = j as f64 / STEPS as f64;
            let v = best_coherence_for_weights(p_phi, p00);
            if v > best {
                best = v;
                best_phi = p_phi;
                best_p00 = p00;
            }
        }
    }

    let step = 1.0 / STEPS as f64;
    let inner = |p_phi: f64| {
        golden_max(|p00| best_coherence_for_weights(p_phi, p00), 0.0, 1.0 - p_phi, 1e-12)
    };
    let (phi_ref, v_ref) = golden_max(
        |p| inner(p).1,
        (best_phi - step).max(0.0),
        (best_phi + step).min(1.0),
        1e-12,
    );
    if v_ref > best + 1e-15 {
        best = v_ref;
        best_phi = phi_ref;
        best_p00 = inner(phi_ref).0;
    }

    let p11 = (1.0 - best_phi - best_p00).max(0.0);
    let product = if best_phi > 0.0 { (best / best_phi).min(0.5) } else { 0.0 };
    let theta = 0.5 * (2.0 * product).asin();
    SeparableOptimum {
        v_max: best,
        witness: MinimalReference {
            p00: best_p00,
            p11,
            p_phi: best_phi,
            r0: theta.cos(),
            r1: theta.sin(),
        },
    }
}

/// Largest coherence over the pure members `p_φ = 1` of the minimal family,
/// maximized over `θ` with `(r0, r1) = (cos θ, sin θ)` using the operator route.
/// Returns `(v_max, r0, r1)`.
pub fn max_v_pure_minimal() -> Result<(f64, f64, f64)> {
    let v_at = |theta: f64| {
        let m = MinimalReference { p00: 0.0, p11: 0.0, p_phi: 1.0, r0: theta.cos(), r1: theta.sin() };
        coherence_v(&minimal_to_density(&m), 1).expect("delta 1 is valid on 2x2")
    };
    // coarse scan over nonnegative amplitudes, then refine around the best cell
    let steps = 360;
    let h = FRAC_PI_2 / steps as f64;
    let (mut best_k, mut best_v) = (0, f64::NEG_INFINITY);
    for k in 0..=steps {
        let v = v_at(k as f64 * h);
        if v > best_v {
            best_v = v;
            best_k = k;
        }
    }
    let centre = best_k as f64 * h;
    let (theta, v) = golden_max(v_at, (centre - h).max(0.0), (centre + h).min(FRAC_PI_2), 1e-10);
    Ok((v, theta.cos(), theta.sin()))
}

/// Real product state `|a'⟩|b'⟩` with `|a'⟩ = Σ a_n|n⟩`, `|b'⟩ = Σ b_m|m⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductReference {
    pub a_coeffs: Vec<f64>,
    pub b_coeffs: Vec<f64>,
}

impl ProductReference {
    pub fn new(a_coeffs: Vec<f64>, b_coeffs: Vec<f64>) -> Result<Self> {
        for (name, v) in [("a", &a_coeffs), ("b", &b_coeffs)] {
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} coefficients must be finite and non-empty")));
            }
            let norm: f64 = v.iter().map(|x| x * x).sum();
            if (norm - 1.0).abs() > STATE_TOL {
                return Err(Error::InvalidArgument(format!(
                    "{name} coefficients have squared norm {norm}, expected 1"
                )));
            }
        }
        Ok(Self { a_coeffs, b_coeffs })
    }

    pub fn n(&self) -> usize {
        self.a_coeffs.len() - 1
    }

    pub fn m(&self) -> usize {
        self.b_coeffs.len() - 1
    }

    /// The product state on a `dim_a × dim_b` cutoff (must be large enough).
    pub fn to_pure_in(&self, dim_a: usize, dim_b: usize) -> Result<PureState> {
        if dim_a < self.a_coeffs.len() || dim_b < self.b_coeffs.len() {
            return Err(Error::CutoffTooSmall {
                what: "product reference cutoff",
                required: self.a_coeffs.len().max(self.b_coeffs.len()),
                got: dim_a.min(dim_b),
            });
        }
        let cut = FockCutoff::new(dim_a, dim_b)?;
        let mut amps = CVector::zeros(cut.dim());
        for (i, a) in self.a_coeffs.iter().enumerate() {
            for (j, b) in self.b_coeffs.iter().enumerate() {
                amps[cut.index(i, j)] = C64::from(a * b);
            }
        }
        PureState::new(cut, amps)
    }

    pub fn to_pure(&self) -> PureState {
        self.to_pure_in(self.a_coeffs.len(), self.b_coeffs.len())
            .expect("cutoff matches coefficients")
    }
}

/// `√(2/(N+2)) sin(π(n+1)/(N+2))` for `n = 0..=N`.
pub fn optimal_amplitudes(n: usize) -> Vec<f64> {
    let k = (n + 2) as f64;
    (0..=n)
        .map(|i| (2.0 / k).sqrt() * (PI * (i + 1) as f64 / k).sin())
        .collect()
}

/// `max f_N = cos(π/(N+2))`.
pub fn max_f_closed(n: usize) -> f64 {
    (PI / (n + 2) as f64).cos()
}

/// Half the top eigenvalue of the `(N+1)`-dimensional matrix `R₊ + R₋`,
/// its eigenvector (sign fixed so the first entry is non-negative) and the
/// gap to the next eigenvalue.
pub fn max_f_numeric(n: usize) -> (f64, Vec<f64>, f64) {
    let dim = n + 1;
    let hop = DMatrix::<f64>::from_fn(dim, dim, |i, j| if i.abs_diff(j) == 1 { 1.0 } else { 0.0 });
    let eig = hop.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let top = order[0];
    let gap = if dim > 1 {
        eig.eigenvalues[top] - eig.eigenvalues[order[1]]
    } else {
        f64::INFINITY
    };
    let mut vec: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    if vec[0] < 0.0 {
        vec.iter_mut().for_each(|x| *x = -*x);
    }
    (0.5 * eig.eigenvalues[top], vec, gap)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalProduct {
    pub reference: ProductReference,
    pub f_n: f64,
    pub g_m: f64,
    /// `𝒱 = f_N · g_M` at `Δ = 1`.
    pub v: f64,
}

/// Product reference maximizing `𝒱` for at most `n` particles on Alice's side
/// and `m` on Bob's.
pub fn optimal_product_reference(n: usize, m: usize) -> Result<OptimalProduct> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "reference sizes must be at least 1 (got N={n}, M={m})"
        )));
    }
    let (f_n, g_m) = (max_f_closed(n), max_f_closed(m));
    for size in [n, m] {
        let (numeric, _, _) = max_f_numeric(size);
        let closed = max_f_closed(size);
        if (numeric - closed).abs() > EIGEN_TOL {
            return Err(Error::Contract(format!(
                "closed-form maximum {closed} differs from eigen-solver {numeric} at size {size}"
            )));
        }
    }
    let reference = ProductReference::new(optimal_amplitudes(n), optimal_amplitudes(m))?;
    Ok(OptimalProduct { reference, f_n, g_m, v: f_n * g_m })
}

/// `Σ_j w_j |a'_j⟩⟨a'_j| ⊗ |b'_j⟩⟨b'_j|` before twirling. `primary` carries the
/// weight left over by `mixing`.
pub fn separable_mixture(
    primary: &ProductReference,
    mixing: &[(f64, ProductReference)],
) -> Result<DensityOperator> {
    let rest: f64 = mixing.iter().map(|(w, _)| *w).sum();
    if mixing.iter().any(|(w, _)| w.is_nan() || *w < 0.0) || rest > 1.0 + STATE_TOL {
        return Err(Error::InvalidArgument(format!(
            "mixing weights must be non-negative and sum to at most 1 (sum {rest})"
        )));
    }
    let mut terms = vec![((1.0 - rest).max(0.0), primary)];
    terms.extend(mixing.iter().map(|(w, p)| (*w, p)));
    let dim_a = terms.iter().map(|(_, p)| p.a_coeffs.len()).max().unwrap_or(1);
    let dim_b = terms.iter().map(|(_, p)| p.b_coeffs.len()).max().unwrap_or(1);
    let pure: Vec<(f64, PureState)> = terms
        .into_iter()
        .map(|(w, p)| Ok((w, p.to_pure_in(dim_a, dim_b)?)))
        .collect::<Result<_>>()?;
    DensityOperator::mixture(&pure)
}

/// Twirled separable mixture: superselection compliant and separable, with the
/// same coherence parameter as the untwirled mixture.
pub fn separable_ssr_reference(
    primary: &ProductReference,
    mixing: &[(f64, ProductReference)],
) -> Result<DensityOperator> {
    Ok(twirl_global(&separable_mixture(primary, mixing)?))
}

/// The maximally coherent separable minimal reference, `p00 = p11 = 1/4`,
/// `p_φ = 1/2`, `r0 = r1 = 1/√2`.
pub fn boundary_minimal() -> MinimalReference {
    MinimalReference { p00: 0.25, p11: 0.25, p_phi: 0.5, r0: FRAC_1_SQRT_2, r1: FRAC_1_SQRT_2 }
}
