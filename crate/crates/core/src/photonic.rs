//! Single-photon Bell test with a coherent-state reference.
//!
//! A single photon and a coherent state of mean photon number `n̄` are split by
//! beam splitters of reflectivity `r_a`, `r_b`. The photon-number correlation
//! between the two detector pairs is
//!
//! ```text
//! E(φ) = [(r_a−t_a)(r_b−t_b)(n̄−1) + 4√(r_a r_b t_a t_b)·sin φ] / (n̄+1)
//! ```
//!
//! with `t = 1 − r` and `φ = α − β`. Writing `E = c + A sin φ`, the CHSH
//! maximum is `2|c| + 2√2|A|`, which [`photonic_chsh_max`] confirms against a
//! phase grid.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Agreement required between the analytic CHSH maximum and the phase search.
pub const CHSH_SEARCH_TOL: f64 = 1e-6;
/// Phase grid step used by [`photonic_chsh_max`].
pub const PHASE_STEP: f64 = PI / 720.0;
const BISECTION_WIDTH: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhotonicSetup {
    r_a: f64,
    r_b: f64,
    n_bar: f64,
}

impl PhotonicSetup {
    pub fn new(r_a: f64, r_b: f64, n_bar: f64) -> Result<Self> {
        for (name, r) in [("r_a", r_a), ("r_b", r_b)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidArgument(format!("{name} = {r} outside [0, 1]")));
            }
        }
        if !(n_bar >= 0.0 && n_bar.is_finite()) {
            return Err(Error::InvalidArgument(format!("n_bar = {n_bar} must be finite and >= 0")));
        }
        Ok(Self { r_a, r_b, n_bar })
    }

    pub fn balanced(n_bar: f64) -> Result<Self> {
        Self::new(0.5, 0.5, n_bar)
    }

    /// Both splitters at `r = 1/(1+n̄)`, i.e. `r·n̄ = t`.
    pub fn hessmo(n_bar: f64) -> Result<Self> {
        let r = 1.0 / (1.0 + n_bar);
        Self::new(r, r, n_bar)
    }

    pub fn r_a(&self) -> f64 {
        self.r_a
    }

    pub fn r_b(&self) -> f64 {
        self.r_b
    }

    pub fn t_a(&self) -> f64 {
        1.0 - self.r_a
    }

    pub fn t_b(&self) -> f64 {
        1.0 - self.r_b
    }

    pub fn n_bar(&self) -> f64 {
        self.n_bar
    }

    /// Phase-independent part `c` of `E = c + A sin φ`.
    pub fn offset(&self) -> f64 {
        (self.r_a - self.t_a()) * (self.r_b - self.t_b()) * (self.n_bar - 1.0) / (self.n_bar + 1.0)
    }

    /// Amplitude `A` of `E = c + A sin φ`.
    pub fn amplitude(&self) -> f64 {
        4.0 * (self.r_a * self.r_b * self.t_a() * self.t_b()).sqrt() / (self.n_bar + 1.0)
    }
}

pub fn photonic_correlation(setup: &PhotonicSetup, phase: f64) -> f64 {
    setup.offset() + setup.amplitude() * phase.sin()
}

/// `2|c| + 2√2|A|`.
pub fn s_max_analytic(setup: &PhotonicSetup) -> f64 {
    2.0 * setup.offset().abs() + 2.0 * SQRT_2 * setup.amplitude().abs()
}

/// `S = E(α1−β1) + E(α1−β2) + E(α2−β1) − E(α2−β2)`.
pub fn photonic_chsh(setup: &PhotonicSetup, phases: [f64; 4]) -> f64 {
    let [a1, a2, b1, b2] = phases;
    let e = |p| photonic_correlation(setup, p);
    e(a1 - b1) + e(a1 - b2) + e(a2 - b1) - e(a2 - b2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhotonicChsh {
    pub s_max: f64,
    /// `(α1, α2, β1, β2)` reaching `s_grid`.
    pub phases: [f64; 4],
    pub s_grid: f64,
}

/// Phase-dependent part of `S` over `A`, for `α1 = 0`.
fn phase_sum(a2: f64, b1: f64, b2: f64) -> f64 {
    (-b1).sin() + (-b2).sin() + (a2 - b1).sin() - (a2 - b2).sin()
}

/// Maximizes (`sign = 1`) or minimizes (`sign = -1`) the phase sum on the grid.
/// For fixed `α2` the sum splits into a `β1` part and a `β2` part.
fn grid_extremum(sign: f64) -> (f64, [f64; 3]) {
    let n = (2.0 * PI / PHASE_STEP).round() as usize;
    let grid: Vec<f64> = (0..n).map(|k| k as f64 * PHASE_STEP).collect();
    let best_for = |f: &dyn Fn(f64) -> f64| {
        grid.iter()
            .map(|&b| (sign * f(b), b))
            .fold((f64::NEG_INFINITY, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc })
    };
    grid.par_iter()
        .map(|&a2| {
            let (v1, b1) = best_for(&|b| (-b).sin() + (a2 - b).sin());
            let (v2, b2) = best_for(&|b| (-b).sin() - (a2 - b).sin());
            (v1 + v2, [a2, b1, b2])
        })
        .reduce(
            || (f64::NEG_INFINITY, [0.0; 3]),
            |x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x },
        )
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    (lo + hi) / 2.0
}

/// Coordinate-wise golden refinement within one grid step of the start.
fn refine(sign: f64, mut p: [f64; 3]) -> (f64, [f64; 3]) {
    let value = |p: &[f64; 3]| sign * phase_sum(p[0], p[1], p[2]);
    for _ in 0..4 {
        for i in 0..3 {
            let centre = p[i];
            let best = golden_section(
                |x| {
                    let mut q = p;
                    q[i] = x;
                    value(&q)
                },
                centre - PHASE_STEP,
                centre + PHASE_STEP,
            );
            let mut q = p;
            q[i] = best;
            if value(&q) >= value(&p) {
                p = q;
            }
        }
    }
    (value(&p), p)
}

/// CHSH maximum over the four phases. The analytic value is returned after
/// checking it against a grid search with refinement.
pub fn photonic_chsh_max(setup: &PhotonicSetup) -> Result<PhotonicChsh> {
    let c = setup.offset();
    let a = setup.amplitude();
    // |S| = |2c + A·X| is largest when A·X has the sign of c.
    let sign = if c * a >= 0.0 { 1.0 } else { -1.0 };
    let (_, start) = grid_extremum(sign);
    let (_, [a2, b1, b2]) = refine(sign, start);
    let phases = [0.0, a2, b1, b2];
    let s_grid = photonic_chsh(setup, phases).abs();
    let s_max = s_max_analytic(setup);
    if (s_grid - s_max).abs() > CHSH_SEARCH_TOL {
        return Err(Error::Contract(format!(
            "analytic CHSH maximum {s_max} differs from phase search {s_grid}"
        )));
    }
    Ok(PhotonicChsh { s_max, phases, s_grid })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Threshold {
    pub n_bar: f64,
    /// Vacuum probability `exp(−n̄)` of the coherent state at threshold.
    pub p_vac: f64,
}

/// Mean photon number at which the balanced setup stops violating CHSH.
pub fn threshold_nbar() -> Threshold {
    let excess = |n: f64| s_max_analytic(&PhotonicSetup::balanced(n).expect("n >= 0")) - 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n_bar = 0.5 * (lo + hi);
    Threshold { n_bar, p_vac: (-n_bar).exp() }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub r_a: f64,
    pub r_b: f64,
    pub s_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalityScan {
    pub n_bar: f64,
    pub grid_step: f64,
    pub rows: Vec<ScanRow>,
    pub argmax: (f64, f64),
    pub s_best: f64,
}

impl OptimalityScan {
    /// Whether the maximum sits within one grid cell of `r_a = r_b = 1/2`.
    pub fn balanced_is_optimal(&self) -> bool {
        let tol = self.grid_step + 1e-12;
        (self.argmax.0 - 0.5).abs() <= tol && (self.argmax.1 - 0.5).abs() <= tol
    }
}

fn reflectivity_grid(step: f64) -> Vec<f64> {
    let k = (1.0 / step + 1e-9).floor() as usize;
    let mut g: Vec<f64> = (0..=k).map(|i| (i as f64 * step).min(1.0)).collect();
    if *g.last().expect("nonempty") < 1.0 - 1e-12 {
        g.push(1.0);
    }
    g
}

/// CHSH maximum over a square grid of reflectivities. Ties keep the first grid
/// point in row-major order.
pub fn optimality_scan(n_bar: f64, grid_step: f64) -> Result<OptimalityScan> {
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::InvalidArgument(format!("grid_step = {grid_step} outside (0, 0.5]")));
    }
    PhotonicSetup::balanced(n_bar)?;
    let grid = reflectivity_grid(grid_step);
    let rows: Vec<ScanRow> = grid
        .par_iter()
        .flat_map_iter(|&r_a| {
            grid.iter().map(move |&r_b| {
                let s = PhotonicSetup::new(r_a, r_b, n_bar).expect("grid inside [0, 1]");
                ScanRow { r_a, r_b, s_max: s_max_analytic(&s) }
            })
        })
        .collect();
    let best = rows
        .iter()
        .fold(&rows[0], |acc, r| if r.s_max > acc.s_max { r } else { acc });
    Ok(OptimalityScan {
        n_bar,
        grid_step,
        argmax: (best.r_a, best.r_b),
        s_best: best.s_max,
        rows,
    })
}

/// Largest CHSH maximum under the Hessmo condition over `n_bars`, with the
/// `n̄` where it occurs.
pub fn hessmo_worst(n_bars: &[f64]) -> Result<(f64, f64)> {
    let mut worst = (f64::NAN, f64::NEG_INFINITY);
    for &n in n_bars {
        let s = s_max_analytic(&PhotonicSetup::hessmo(n)?);
        if s > worst.1 {
            worst = (n, s);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn correlation_examples() {
        for n in [0.0, 0.3, 1.0, 2.5] {
            let s = PhotonicSetup::balanced(n).unwrap();
            for phi in [0.0, 0.4, 1.3, -2.0] {
                assert_abs_diff_eq!(photonic_correlation(&s, phi), phi.sin() / (n + 1.0), epsilon = 1e-15);
            }
            assert_eq!(photonic_correlation(&s, 0.0), 0.0);
        }
        let s = PhotonicSetup::new(0.9, 0.2, 1.0).unwrap();
        assert_eq!(s.offset(), 0.0);
    }

    #[test]
    fn correlation_is_bounded() {
        let steps = 40;
        for i in 0..=steps {
            for j in 0..=steps {
                for n in [0.0, 0.1, 0.5, 1.0, 3.0, 20.0] {
                    let s = PhotonicSetup::new(i as f64 / steps as f64, j as f64 / steps as f64, n).unwrap();
                    for k in 0..16 {
                        let e = photonic_correlation(&s, k as f64 * PI / 8.0);
                        assert!(e.abs() <= 1.0 + 1e-12, "{s:?} phase {k}: {e}");
                    }
                }
            }
        }
    }

    #[test]
    fn chsh_examples() {
        let s = photonic_chsh_max(&PhotonicSetup::balanced(0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(s.s_max, 2.0 * SQRT_2, epsilon = 1e-12);
        let s = photonic_chsh_max(&PhotonicSetup::balanced(SQRT_2 - 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(s.s_max, 2.0, epsilon = 1e-12);
        for n in [0.2, 0.7, 1.5] {
            let s = photonic_chsh_max(&PhotonicSetup::balanced(n).unwrap()).unwrap();
            assert_abs_diff_eq!(s.s_max, 2.0 * SQRT_2 / (n + 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn analytic_maximum_matches_search_off_balance() {
        for (ra, rb, n) in [(0.9, 0.8, 0.1), (0.1, 0.8, 3.0), (0.3, 0.3, 0.0), (1.0, 0.0, 5.0), (0.65, 0.2, 1.0)] {
            let setup = PhotonicSetup::new(ra, rb, n).unwrap();
            let r = photonic_chsh_max(&setup).unwrap();
            assert!((r.s_grid - r.s_max).abs() <= CHSH_SEARCH_TOL);
            assert_abs_diff_eq!(photonic_chsh(&setup, r.phases).abs(), r.s_max, epsilon = CHSH_SEARCH_TOL);
        }
    }

    #[test]
    fn symmetries() {
        let a = s_max_analytic(&PhotonicSetup::new(0.3, 0.8, 0.4).unwrap());
        let b = s_max_analytic(&PhotonicSetup::new(0.8, 0.3, 0.4).unwrap());
        assert_eq!(a, b);
        let s = PhotonicSetup::new(0.3, 0.8, 0.4).unwrap();
        assert_abs_diff_eq!(photonic_correlation(&s, 0.7), photonic_correlation(&s, 0.7 + 2.0 * PI), epsilon = 1e-14);
    }

    #[test]
    fn threshold_value() {
        let t = threshold_nbar();
        assert!((t.n_bar - (SQRT_2 - 1.0)).abs() < 1e-7);
        assert_abs_diff_eq!(t.p_vac, 0.6609, epsilon = 1e-3);
        let s = |n: f64| s_max_analytic(&PhotonicSetup::balanced(n).unwrap());
        assert!(s(t.n_bar / 2.0) > 2.0);
        assert!(s(2.0 * t.n_bar) < 2.0);
    }

    #[test]
    fn balanced_is_best() {
        for n in [0.05, 0.2, 0.4] {
            let scan = optimality_scan(n, 0.01).unwrap();
            assert_eq!(scan.rows.len(), 101 * 101);
            assert!(scan.balanced_is_optimal(), "{:?}", scan.argmax);
        }
        let bal = s_max_analytic(&PhotonicSetup::balanced(0.2).unwrap());
        assert!(s_max_analytic(&PhotonicSetup::new(0.7, 0.7, 0.2).unwrap()) < bal);
        assert!(optimality_scan(0.2, 0.0).is_err());
        assert!(optimality_scan(0.2, 0.6).is_err());
    }

    #[test]
    fn hessmo_condition_never_violates() {
        let grid: Vec<f64> = (1..=200).map(|k| k as f64 * 0.01).collect();
        let (_, s) = hessmo_worst(&grid).unwrap();
        assert!(s <= 2.0 + 1e-9);
    }

    #[test]
    fn invalid_setups() {
        assert!(PhotonicSetup::new(-0.1, 0.5, 0.0).is_err());
        assert!(PhotonicSetup::new(0.5, 1.1, 0.0).is_err());
        assert!(PhotonicSetup::new(0.5, 0.5, -1.0).is_err());
        assert!(PhotonicSetup::new(0.5, 0.5, f64::NAN).is_err());
    }
}
