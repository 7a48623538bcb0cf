//! Dense linear algebra over truncated bipartite particle-number bases.
//!
//! A basis vector is written `|n_A⟩|n_B⟩` and stored at the row-major index
//! `n_A * dim_b + n_B`. A side may consist of several modes (for instance a
//! principal system grouped with a reference frame); local indices are then
//! mixed-radix with the first mode most significant, and the local particle
//! number of a basis vector is the sum over its modes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Norm, trace and Hermiticity tolerance.
pub const STATE_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for a density operator.
pub const PSD_FLOOR: f64 = -1e-10;
/// Default ceiling on the total dimension produced by [`TensorProduct`].
pub const DEFAULT_MAX_DIM: usize = 4096;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// One of the two parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// Truncation of the two local Fock spaces.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FockCutoff {
    modes_a: Vec<usize>,
    modes_b: Vec<usize>,
}

impl FockCutoff {
    /// Single mode per side, holding `0..dim_a` and `0..dim_b` particles.
    pub fn new(dim_a: usize, dim_b: usize) -> Result<Self> {
        Self::with_modes(vec![dim_a], vec![dim_b])
    }

    pub fn with_modes(modes_a: Vec<usize>, modes_b: Vec<usize>) -> Result<Self> {
        if modes_a.is_empty() || modes_b.is_empty() {
            return Err(Error::InvalidArgument("each side needs at least one mode".into()));
        }
        if modes_a.iter().chain(&modes_b).any(|&d| d == 0) {
            return Err(Error::InvalidArgument("mode dimensions must be at least 1".into()));
        }
        Ok(Self { modes_a, modes_b })
    }

    pub fn modes(&self, side: Side) -> &[usize] {
        match side {
            Side::A => &self.modes_a,
            Side::B => &self.modes_b,
        }
    }

    pub fn dim_a(&self) -> usize {
        self.modes_a.iter().product()
    }

    pub fn dim_b(&self) -> usize {
        self.modes_b.iter().product()
    }

    pub fn side_dim(&self, side: Side) -> usize {
        self.modes(side).iter().product()
    }

    pub fn dim(&self) -> usize {
        self.dim_a() * self.dim_b()
    }

    pub fn is_single_mode(&self) -> bool {
        self.modes_a.len() == 1 && self.modes_b.len() == 1
    }

    pub fn index(&self, local_a: usize, local_b: usize) -> usize {
        local_a * self.dim_b() + local_b
    }

    pub fn split(&self, index: usize) -> (usize, usize) {
        let db = self.dim_b();
        (index / db, index % db)
    }

    /// Particle number carried by local basis index `local` on `side`.
    pub fn local_number(&self, side: Side, local: usize) -> usize {
        let mut rest = local;
        let mut total = 0;
        for &d in self.modes(side).iter().rev() {
            total += rest % d;
            rest /= d;
        }
        total
    }

    pub fn total_number(&self, index: usize) -> usize {
        let (a, b) = self.split(index);
        self.local_number(Side::A, a) + self.local_number(Side::B, b)
    }

    pub fn max_local_number(&self, side: Side) -> usize {
        self.modes(side).iter().map(|d| d - 1).sum()
    }

    pub fn max_total_number(&self) -> usize {
        self.max_local_number(Side::A) + self.max_local_number(Side::B)
    }

    /// Cutoff of the composition `self ⊗ other`, Alice's modes first.
    pub fn combine(&self, other: &FockCutoff) -> FockCutoff {
        let mut modes_a = self.modes_a.clone();
        modes_a.extend_from_slice(&other.modes_a);
        let mut modes_b = self.modes_b.clone();
        modes_b.extend_from_slice(&other.modes_b);
        FockCutoff { modes_a, modes_b }
    }

    fn require_single_mode(&self, what: &str) -> Result<()> {
        if self.is_single_mode() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{what} needs a single mode per side")))
        }
    }
}

/// Normalized pure state over a [`FockCutoff`].
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    cutoff: FockCutoff,
    amps: CVector,
}

impl PureState {
    pub fn new(cutoff: FockCutoff, amps: CVector) -> Result<Self> {
        if amps.len() != cutoff.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a space of dimension {}",
                amps.len(),
                cutoff.dim()
            )));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm_sq = amps.norm_squared();
        if (norm_sq - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "squared norm is {norm_sq:.15}, expected 1"
            )));
        }
        Ok(Self { cutoff, amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(cutoff: FockCutoff, amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Self::new(cutoff, amps.unscale(norm))
    }

    /// The number state `|n_a⟩|n_b⟩` (single mode per side).
    pub fn basis(cutoff: FockCutoff, n_a: usize, n_b: usize) -> Result<Self> {
        if n_a >= cutoff.dim_a() || n_b >= cutoff.dim_b() {
            return Err(Error::InvalidArgument(format!(
                "|{n_a},{n_b}⟩ lies outside cutoff {}x{}",
                cutoff.dim_a(),
                cutoff.dim_b()
            )));
        }
        let mut amps = CVector::zeros(cutoff.dim());
        amps[cutoff.index(n_a, n_b)] = ONE;
        Ok(Self { cutoff, amps })
    }

    /// Normalized superposition of number states from `(n_a, n_b, amplitude)` terms.
    pub fn from_terms(cutoff: FockCutoff, terms: &[(usize, usize, C64)]) -> Result<Self> {
        let mut amps = CVector::zeros(cutoff.dim());
        for &(a, b, z) in terms {
            if a >= cutoff.dim_a() || b >= cutoff.dim_b() {
                return Err(Error::InvalidArgument(format!(
                    "|{a},{b}⟩ lies outside cutoff {}x{}",
                    cutoff.dim_a(),
                    cutoff.dim_b()
                )));
            }
            amps[cutoff.index(a, b)] += z;
        }
        Self::normalized(cutoff, amps)
    }

    pub fn cutoff(&self) -> &FockCutoff {
        &self.cutoff
    }

    pub fn amps(&self) -> &CVector {
        &self.amps
    }

    pub fn amp(&self, local_a: usize, local_b: usize) -> C64 {
        self.amps[self.cutoff.index(local_a, local_b)]
    }

    /// Amplitudes arranged as a `dim_a × dim_b` matrix.
    pub fn amplitude_matrix(&self) -> CMatrix {
        let (da, db) = (self.cutoff.dim_a(), self.cutoff.dim_b());
        CMatrix::from_fn(da, db, |i, j| self.amps[i * db + j])
    }

    pub fn to_density(&self) -> DensityOperator {
        let mat = &self.amps * self.amps.adjoint();
        DensityOperator::from_raw(self.cutoff.clone(), mat)
    }

    /// The total particle number if every populated term shares it.
    pub fn fixed_total_number(&self) -> Option<usize> {
        let mut found = None;
        for (i, z) in self.amps.iter().enumerate() {
            if z.norm_sqr() > 0.0 {
                let n = self.cutoff.total_number(i);
                match found {
                    None => found = Some(n),
                    Some(m) if m != n => return None,
                    _ => {}
                }
            }
        }
        found
    }

    /// Re-expresses the state in another single-mode cutoff. Terms outside the
    /// new cutoff must carry negligible weight.
    pub fn embed(&self, target: &FockCutoff) -> Result<Self> {
        self.cutoff.require_single_mode("embed")?;
        target.require_single_mode("embed")?;
        let mut amps = CVector::zeros(target.dim());
        let mut dropped = 0.0;
        for (i, z) in self.amps.iter().enumerate() {
            let (a, b) = self.cutoff.split(i);
            if a < target.dim_a() && b < target.dim_b() {
                amps[target.index(a, b)] = *z;
            } else {
                dropped += z.norm_sqr();
            }
        }
        if dropped > STATE_TOL {
            return Err(Error::CutoffTooSmall {
                what: "embedding target",
                required: self.cutoff.dim(),
                got: target.dim(),
            });
        }
        if dropped == 0.0 {
            return Self::new(target.clone(), amps);
        }
        Self::normalized(target.clone(), amps)
    }
}

/// Hermitian, positive, unit-trace operator over a [`FockCutoff`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    cutoff: FockCutoff,
    mat: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(cutoff: FockCutoff, mat: CMatrix) -> Result<Self> {
        let rho = Self { cutoff, mat };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_raw(cutoff: FockCutoff, mat: CMatrix) -> Self {
        Self { cutoff, mat }
    }

    /// `Σ_k w_k |ψ_k⟩⟨ψ_k|` over states sharing one cutoff.
    pub fn mixture(terms: &[(f64, PureState)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let cutoff = first.1.cutoff().clone();
        let mut mat = CMatrix::zeros(cutoff.dim(), cutoff.dim());
        for (w, psi) in terms {
            if psi.cutoff() != &cutoff {
                return Err(Error::DimensionMismatch("mixture components differ in cutoff".into()));
            }
            if *w < 0.0 {
                return Err(Error::InvalidArgument(format!("negative mixture weight {w}")));
            }
            mat += psi.amps() * psi.amps().adjoint() * C64::from(*w);
        }
        Self::new(cutoff, mat)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cutoff.dim();
        if self.mat.nrows() != n || self.mat.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, cutoff needs {n}x{n}",
                self.mat.nrows(),
                self.mat.ncols()
            )));
        }
        if self.mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite matrix entry".into()));
        }
        let herm = max_abs_diff(&self.mat, &self.mat.adjoint());
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (max deviation {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr:.15}, expected 1")));
        }
        let min = self.min_eigenvalue();
        if min < PSD_FLOOR {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (minimum eigenvalue {min:e})"
            )));
        }
        Ok(())
    }

    pub fn cutoff(&self) -> &FockCutoff {
        &self.cutoff
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.mat)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Single-mode re-embedding, as for [`PureState::embed`].
    pub fn embed(&self, target: &FockCutoff) -> Result<Self> {
        self.cutoff.require_single_mode("embed")?;
        target.require_single_mode("embed")?;
        let mut mat = CMatrix::zeros(target.dim(), target.dim());
        let mut dropped = 0.0;
        for i in 0..self.cutoff.dim() {
            let (ia, ib) = self.cutoff.split(i);
            let inside_i = ia < target.dim_a() && ib < target.dim_b();
            if !inside_i {
                dropped += self.mat[(i, i)].re.abs();
                continue;
            }
            for j in 0..self.cutoff.dim() {
                let (ja, jb) = self.cutoff.split(j);
                if ja < target.dim_a() && jb < target.dim_b() {
                    mat[(target.index(ia, ib), target.index(ja, jb))] = self.mat[(i, j)];
                }
            }
        }
        if dropped > STATE_TOL {
            return Err(Error::CutoffTooSmall {
                what: "embedding target",
                required: self.cutoff.dim(),
                got: target.dim(),
            });
        }
        Ok(Self::from_raw(target.clone(), mat))
    }
}

/// Operator acting on one side only.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    dim: usize,
    mat: CMatrix,
}

impl LocalOperator {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::DimensionMismatch("local operator must be square".into()));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite operator entry".into()));
        }
        Ok(Self { dim: mat.nrows(), mat })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }
}

/// Kronecker composition of two bipartite objects; Alice's subsystems of both
/// factors end up on the combined A side and Bob's on the combined B side.
pub trait TensorProduct: Sized {
    fn tensor_with_limit(&self, other: &Self, max_dim: usize) -> Result<Self>;

    fn tensor(&self, other: &Self) -> Result<Self> {
        self.tensor_with_limit(other, DEFAULT_MAX_DIM)
    }
}

/// `x ⊗ y` with the default dimension ceiling.
pub fn tensor<T: TensorProduct>(x: &T, y: &T) -> Result<T> {
    x.tensor(y)
}

fn combined_cutoff(x: &FockCutoff, y: &FockCutoff, max_dim: usize) -> Result<FockCutoff> {
    let dim = x
        .dim()
        .checked_mul(y.dim())
        .ok_or(Error::SizeOverflow { dim: usize::MAX, max: max_dim })?;
    if dim > max_dim {
        return Err(Error::SizeOverflow { dim, max: max_dim });
    }
    Ok(x.combine(y))
}

/// Index of `(x_index, y_index)` in the combined space.
fn joint_index(x: &FockCutoff, y: &FockCutoff, joint: &FockCutoff, ix: usize, iy: usize) -> usize {
    let (xa, xb) = x.split(ix);
    let (ya, yb) = y.split(iy);
    joint.index(xa * y.dim_a() + ya, xb * y.dim_b() + yb)
}

impl TensorProduct for PureState {
    fn tensor_with_limit(&self, other: &Self, max_dim: usize) -> Result<Self> {
        let joint = combined_cutoff(&self.cutoff, &other.cutoff, max_dim)?;
        let mut amps = CVector::zeros(joint.dim());
        for (ix, zx) in self.amps.iter().enumerate() {
            if *zx == ZERO {
                continue;
            }
            for (iy, zy) in other.amps.iter().enumerate() {
                amps[joint_index(&self.cutoff, &other.cutoff, &joint, ix, iy)] = zx * zy;
            }
        }
        Ok(Self { cutoff: joint, amps })
    }
}

impl TensorProduct for DensityOperator {
    fn tensor_with_limit(&self, other: &Self, max_dim: usize) -> Result<Self> {
        let joint = combined_cutoff(&self.cutoff, &other.cutoff, max_dim)?;
        let (nx, ny) = (self.cutoff.dim(), other.cutoff.dim());
        let map: Vec<Vec<usize>> = (0..nx)
            .map(|ix| {
                (0..ny)
                    .map(|iy| joint_index(&self.cutoff, &other.cutoff, &joint, ix, iy))
                    .collect()
            })
            .collect();
        let mut mat = CMatrix::zeros(joint.dim(), joint.dim());
        for ix in 0..nx {
            for jx in 0..nx {
                let zx = self.mat[(ix, jx)];
                if zx == ZERO {
                    continue;
                }
                for iy in 0..ny {
                    for jy in 0..ny {
                        mat[(map[ix][iy], map[jx][jy])] = zx * other.mat[(iy, jy)];
                    }
                }
            }
        }
        Ok(Self::from_raw(joint, mat))
    }
}

/// Reduced operator after tracing out `traced`.
pub fn partial_trace(rho: &DensityOperator, traced: Side) -> LocalOperator {
    let c = rho.cutoff();
    let (da, db) = (c.dim_a(), c.dim_b());
    let m = rho.matrix();
    let mat = match traced {
        Side::B => CMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
        }),
        Side::A => CMatrix::from_fn(db, db, |i, j| {
            (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()
        }),
    };
    LocalOperator { dim: mat.nrows(), mat }
}

/// Transposes the indices belonging to `side`.
pub fn partial_transpose(rho: &DensityOperator, side: Side) -> CMatrix {
    let c = rho.cutoff();
    let n = c.dim();
    let m = rho.matrix();
    CMatrix::from_fn(n, n, |row, col| {
        let (ra, rb) = c.split(row);
        let (ca, cb) = c.split(col);
        match side {
            Side::B => m[(c.index(ra, cb), c.index(ca, rb))],
            Side::A => m[(c.index(ca, rb), c.index(ra, cb))],
        }
    })
}

/// Projector onto the span of basis vectors with total particle number `n`.
/// Out-of-range `n` gives the zero matrix.
pub fn total_number_projector(n: usize, cutoff: &FockCutoff) -> CMatrix {
    let dim = cutoff.dim();
    let mut p = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        if cutoff.total_number(i) == n {
            p[(i, i)] = ONE;
        }
    }
    p
}

/// Diagonal of the local number operator on `side`, over the local space.
pub fn local_number_diagonal(cutoff: &FockCutoff, side: Side) -> Vec<f64> {
    (0..cutoff.side_dim(side))
        .map(|i| cutoff.local_number(side, i) as f64)
        .collect()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix (only the lower triangle is read).
pub fn hermitian_eigenvalues(mat: &CMatrix) -> Vec<f64> {
    mat.clone().symmetric_eigenvalues().iter().copied().collect()
}

/// Eigenvalues and column eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(mat: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = mat.clone().symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bell_01_10() -> DensityOperator {
        let cut = FockCutoff::new(2, 2).unwrap();
        PureState::from_terms(cut, &[(0, 1, c(1.0)), (1, 0, c(1.0))])
            .unwrap()
            .to_density()
    }

    #[test]
    fn cutoff_rejects_zero_dimension() {
        assert!(FockCutoff::new(0, 3).is_err());
        assert!(FockCutoff::new(2, 0).is_err());
    }

    #[test]
    fn tensor_basis_vectors_group_by_party() {
        let ab = PureState::basis(FockCutoff::new(2, 2).unwrap(), 0, 1).unwrap();
        let ref_ = PureState::basis(FockCutoff::new(2, 2).unwrap(), 1, 0).unwrap();
        let joint = ab.tensor(&ref_).unwrap();
        // Alice holds (A, A') = (0, 1) -> local 1; Bob holds (B, B') = (1, 0) -> local 2.
        let idx = joint.cutoff().index(1, 2);
        assert_eq!(joint.amps()[idx], ONE);
        assert_abs_diff_eq!(joint.amps().norm(), 1.0, epsilon = 1e-15);
        assert_eq!(joint.cutoff().local_number(Side::A, 1), 1);
        assert_eq!(joint.cutoff().local_number(Side::B, 2), 1);
    }

    #[test]
    fn tensor_of_densities_has_unit_trace() {
        let rho = bell_01_10();
        let joint = rho.tensor(&rho).unwrap();
        assert_abs_diff_eq!(joint.trace(), 1.0, epsilon = 1e-14);
        joint.validate().unwrap();
    }

    #[test]
    fn tensor_reports_size_overflow() {
        let big = PureState::basis(FockCutoff::new(10, 10).unwrap(), 0, 0).unwrap();
        let err = big.tensor_with_limit(&big, 4096).unwrap_err();
        assert_eq!(err, Error::SizeOverflow { dim: 10_000, max: 4096 });
    }

    #[test]
    fn partial_trace_of_product_and_bell_state() {
        let cut = FockCutoff::new(2, 2).unwrap();
        let prod = PureState::basis(cut, 0, 1).unwrap().to_density();
        let red = partial_trace(&prod, Side::B);
        assert_eq!(red.matrix()[(0, 0)], ONE);
        assert_eq!(red.matrix()[(1, 1)], ZERO);

        let red = partial_trace(&bell_01_10(), Side::B);
        let half = CMatrix::identity(2, 2) * c(0.5);
        assert!(max_abs_diff(red.matrix(), &half) < 1e-15);
    }

    #[test]
    fn partial_transpose_of_bell_state_has_negative_eigenvalue() {
        let pt = partial_transpose(&bell_01_10(), Side::B);
        let min = hermitian_eigenvalues(&pt).into_iter().fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(min, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn partial_transpose_fixes_diagonal_and_is_an_involution() {
        let cut = FockCutoff::new(2, 3).unwrap();
        let diag = DensityOperator::new(
            cut.clone(),
            CMatrix::from_diagonal(&CVector::from_fn(6, |i, _| c((i + 1) as f64 / 21.0))),
        )
        .unwrap();
        assert_eq!(partial_transpose(&diag, Side::B), *diag.matrix());

        let rho = bell_01_10();
        let once = DensityOperator::from_raw(rho.cutoff().clone(), partial_transpose(&rho, Side::B));
        assert_eq!(partial_transpose(&once, Side::B), *rho.matrix());
    }

    #[test]
    fn number_projectors_are_complete_and_orthogonal() {
        let cut = FockCutoff::new(3, 4).unwrap();
        let p0 = total_number_projector(0, &cut);
        assert_eq!(p0[(0, 0)], ONE);
        assert_eq!(p0.iter().filter(|z| **z != ZERO).count(), 1);

        let projs: Vec<_> = (0..=cut.max_total_number())
            .map(|n| total_number_projector(n, &cut))
            .collect();
        let sum = projs.iter().fold(CMatrix::zeros(12, 12), |acc, p| acc + p);
        assert_eq!(sum, CMatrix::identity(12, 12));
        for (i, p) in projs.iter().enumerate() {
            for (j, q) in projs.iter().enumerate() {
                let expected = if i == j { p.clone() } else { CMatrix::zeros(12, 12) };
                assert_eq!(p * q, expected);
            }
        }
        assert_eq!(total_number_projector(99, &cut), CMatrix::zeros(12, 12));
    }

    #[test]
    fn density_validation_reports_trace() {
        let cut = FockCutoff::new(1, 2).unwrap();
        let mat = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.5), c(0.4)]));
        let err = DensityOperator::new(cut, mat).unwrap_err();
        assert!(err.to_string().contains("0.9"), "{err}");
    }

    #[test]
    fn embed_keeps_amplitudes_and_refuses_to_drop_weight() {
        let psi = PureState::from_terms(
            FockCutoff::new(2, 2).unwrap(),
            &[(0, 1, c(1.0)), (1, 0, c(1.0))],
        )
        .unwrap();
        let big = psi.embed(&FockCutoff::new(4, 3).unwrap()).unwrap();
        assert_eq!(big.amp(1, 0), psi.amp(1, 0));
        assert!(psi.embed(&FockCutoff::new(1, 2).unwrap()).is_err());
        let back = big.embed(&FockCutoff::new(2, 2).unwrap()).unwrap();
        assert_eq!(back, psi);
    }

    #[test]
    fn multimode_local_numbers_sum_over_modes() {
        let cut = FockCutoff::with_modes(vec![3, 2], vec![2]).unwrap();
        // local index 5 = (2, 1) in a 3x2 mixed radix
        assert_eq!(cut.local_number(Side::A, 5), 3);
        assert_eq!(cut.max_total_number(), 4);
    }
}
