//! `reproduce-all`: one record per acceptance claim.
//!
//! Every random draw comes from a substream of the run seed, so the report
//! is a pure function of the seed.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use ssrbell_core::bell::{
    chsh_optimal, closed_form_correlation, lhv_statistics_gap, max_abs_chsh, outcome_probabilities,
    LHV_TOL,
};
use ssrbell_core::photonic::{
    hessmo_worst, optimality_scan, photonic_chsh_max, threshold_nbar, PhotonicSetup,
};
use ssrbell_core::reference::{
    is_separable_minimal, max_f_closed, max_f_numeric, max_v_pure_minimal, max_v_separable_minimal,
    minimal_to_density, optimal_product_reference,
};
use ssrbell_core::sampling::{complex_gaussian, random_density, random_fixed_number_pure, random_ssr_locc, substream};
use ssrbell_core::siv::{pure_siv, siv_witness_relation, vf_bound_minimal, vf_ensemble_upper_bound, DEFAULT_RESTARTS};
use ssrbell_core::ssr::{coherence_v, coherence_v_pure};
use ssrbell_core::{
    twirl_global, BellExperiment, FockCutoff, MinimalReference, PrincipalState, PureState, Result, C64,
};

use crate::output::{Cell, Report};

#[derive(Clone, Debug, PartialEq)]
pub struct ClaimRecord {
    pub id: &'static str,
    pub expected: String,
    pub computed: String,
    pub tolerance: String,
    pub pass: bool,
}

pub const PURE_REFERENCES: usize = 200;
pub const LOCC_REFERENCES: usize = 100;
pub const MINIMAL_SAMPLES: usize = 10_000;
pub const TWIRL_STATES: usize = 200;

// stream offsets keep the claims' random draws independent of each other
const STREAM_PURE: u64 = 1 << 20;
const STREAM_LOCC: u64 = 2 << 20;
const STREAM_LHV: u64 = 3 << 20;
const STREAM_MINIMAL: u64 = 4 << 20;
const STREAM_TWIRL: u64 = 5 << 20;
const STREAM_SIV: u64 = 6 << 20;

/// `(Δ, reference)` pairs with `N' = i mod 7` and `Δ = 1 + ⌊i/7⌋ mod 3`.
pub fn pure_reference_set(seed: u64) -> Result<Vec<(usize, PureState)>> {
    (0..PURE_REFERENCES)
        .map(|i| {
            let total = i % 7;
            let delta = 1 + (i / 7) % 3;
            let phi = random_fixed_number_pure(&mut substream(seed, STREAM_PURE + i as u64), total)?;
            Ok((delta, phi))
        })
        .collect()
}

/// SSR-LOCC reference on a 2..3 × 2..3 cutoff, a principal state and the
/// shift `Δ ∈ {1, 2}`. Every fifth principal state is the two-term state,
/// the rest are random `Σ c_n |n⟩|N−n⟩` with `N ≤ 3`.
pub fn locc_case(seed: u64, i: usize) -> Result<(PrincipalState, ssrbell_core::DensityOperator, usize)> {
    let mut rng = substream(seed, STREAM_LOCC + i as u64);
    let cut = FockCutoff::new(2 + i % 2, 2 + (i / 2) % 2)?;
    let reference = random_ssr_locc(&mut rng, &cut)?;
    let delta = 1 + (i / 4) % 2;
    let psi = if i % 5 == 4 {
        PrincipalState::standard(delta)?
    } else {
        let coeffs: Vec<C64> = (0..=i % 4).map(|_| complex_gaussian(&mut rng)).collect();
        PrincipalState::general(&coeffs)?
    };
    Ok((psi, reference, delta))
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

fn claim(id: &'static str, body: impl FnOnce() -> Result<ClaimRecord>) -> ClaimRecord {
    body().unwrap_or_else(|e| ClaimRecord {
        id,
        expected: "no error".into(),
        computed: format!("error: {e}"),
        tolerance: "-".into(),
        pass: false,
    })
}

fn chsh_closed_form(seed: u64) -> ClaimRecord {
    claim("1-chsh-closed-form", || {
        let mut worst: f64 = 0.0;
        for (delta, phi) in pure_reference_set(seed)? {
            let exp = BellExperiment::new(&PrincipalState::standard(delta)?, &phi.to_density())?;
            let best = chsh_optimal(exp.coherence())?;
            worst = worst.max((exp.chsh_brute(&best.settings)? - best.s_max).abs());
        }
        Ok(ClaimRecord {
            id: "1-chsh-closed-form",
            expected: "brute-force S at optimal settings = 2*sqrt(1+V^2)".into(),
            computed: format!("max |deviation| = {}", sci(worst)),
            tolerance: "1e-9".into(),
            pass: worst <= 1e-9,
        })
    })
}

fn correlation_formula(seed: u64) -> ClaimRecord {
    claim("2-correlation-formula", || {
        let angles: Vec<f64> = (0..5).map(|k| k as f64 * PI / 5.0).collect();
        let (mut worst_e, mut worst_p): (f64, f64) = (0.0, 0.0);
        for (i, (delta, phi)) in pure_reference_set(seed)?.into_iter().enumerate() {
            let psi = PrincipalState::standard(delta)?;
            let exp = BellExperiment::new(&psi, &phi.to_density())?;
            let grid = exp.correlation_grid(&angles)?;
            for (a, row) in angles.iter().zip(&grid) {
                for (b, e) in angles.iter().zip(row) {
                    worst_e = worst_e.max((e - closed_form_correlation(exp.coherence(), *a, *b)).abs());
                }
            }
            let (a, b) = (angles[i % 5], angles[(i / 5) % 5]);
            let brute: f64 = exp.probability_table_brute(a, b)?.iter().flat_map(|(_, _, p)| *p).sum();
            let printed = outcome_probabilities(&psi, &phi, a, b)?.total();
            worst_p = worst_p.max((brute - 1.0).abs()).max((printed - 1.0).abs());
        }
        Ok(ClaimRecord {
            id: "2-correlation-formula",
            expected: "E = -cos2a cos2b + V sin2a sin2b; tables sum to 1".into(),
            computed: format!("max |E deviation| = {}; max |table sum - 1| = {}", sci(worst_e), sci(worst_p)),
            tolerance: "1e-10; 1e-12".into(),
            pass: worst_e <= 1e-10 && worst_p <= 1e-12,
        })
    })
}

fn locc_no_violation(seed: u64) -> ClaimRecord {
    claim("3-ssr-locc-no-violation", || {
        let angles: Vec<f64> = (0..20).map(|k| k as f64 * PI / 20.0).collect();
        let (mut s_max, mut gap_max): (f64, f64) = (0.0, 0.0);
        for i in 0..LOCC_REFERENCES {
            let (psi, reference, delta) = locc_case(seed, i)?;
            let exp = BellExperiment::with_delta(&psi, &reference, delta)?;
            s_max = s_max.max(max_abs_chsh(&exp.correlation_grid(&angles)?));
            let lhv_seed = seed.wrapping_add(STREAM_LHV + i as u64);
            gap_max = gap_max.max(lhv_statistics_gap(&psi, &reference, lhv_seed)?);
        }
        Ok(ClaimRecord {
            id: "3-ssr-locc-no-violation",
            expected: "max |S| <= 2 on a 20^4 grid; coherent = dephased statistics".into(),
            computed: format!("max |S| = {s_max:.12}; max statistics gap = {}", sci(gap_max)),
            tolerance: format!("1e-9; {LHV_TOL:e}"),
            pass: s_max <= 2.0 + 1e-9 && gap_max <= LHV_TOL,
        })
    })
}

fn minimal_separable_bound(seed: u64) -> ClaimRecord {
    claim("4-minimal-separable-bound", || {
        let opt = max_v_separable_minimal();
        let mut rng = substream(seed, STREAM_MINIMAL);
        let mut disagreements = 0;
        for _ in 0..MINIMAL_SAMPLES {
            if is_separable_minimal(&MinimalReference::random(&mut rng)).is_err() {
                disagreements += 1;
            }
        }
        let dev = (opt.v_max - 0.25).abs();
        Ok(ClaimRecord {
            id: "4-minimal-separable-bound",
            expected: format!("max separable V = 0.25; 0 PPT disagreements in {MINIMAL_SAMPLES}"),
            computed: format!("max separable V = {:.9}; {disagreements} disagreements", opt.v_max),
            tolerance: "1e-6; 0".into(),
            pass: dev <= 1e-6 && disagreements == 0,
        })
    })
}

fn entangled_minimal(_seed: u64) -> ClaimRecord {
    claim("5-entangled-minimal-maximum", || {
        let (v, r0, r1) = max_v_pure_minimal()?;
        let dev_r = (r0 - FRAC_1_SQRT_2).abs().max((r1 - FRAC_1_SQRT_2).abs());
        Ok(ClaimRecord {
            id: "5-entangled-minimal-maximum",
            expected: "V = 0.5 at r0 = r1 = 1/sqrt(2)".into(),
            computed: format!("V = {v:.12} at r0 = {r0:.9}, r1 = {r1:.9}"),
            tolerance: "1e-9; 1e-6".into(),
            pass: (v - 0.5).abs() <= 1e-9 && dev_r <= 1e-6,
        })
    })
}

fn optimal_references(_seed: u64) -> ClaimRecord {
    claim("6-optimal-references", || {
        let worst_f = (1..=64).map(|n| (max_f_closed(n) - max_f_numeric(n).0).abs()).fold(0.0, f64::max);
        let one = optimal_product_reference(1, 1)?;
        let one_op = coherence_v_pure(&one.reference.to_pure(), 1)?;
        let big = optimal_product_reference(30, 30)?;
        let big_op = coherence_v_pure(&big.reference.to_pure(), 1)?;
        let target = (PI / 32.0).cos().powi(2);
        let dev_one = (one.v - 0.25).abs().max((one_op - 0.25).abs());
        let dev_big = (big.v - 0.99039).abs().max((big_op - 0.99039).abs());
        Ok(ClaimRecord {
            id: "6-optimal-references",
            expected: format!("f_N closed = numeric for N=1..64; V(1,1) = 0.25; V(30,30) = 0.99039 (cos^2(pi/32) = {target:.9})"),
            computed: format!(
                "max |f_N deviation| = {}; V(1,1) = {:.17} (operator {:.17}); V(30,30) = {:.9} (operator {:.9})",
                sci(worst_f),
                one.v,
                one_op,
                big.v,
                big_op
            ),
            tolerance: "1e-12; 1e-15; 1e-5".into(),
            pass: worst_f <= 1e-12 && dev_one <= 1e-15 && dev_big <= 1e-5 && (big.v - target).abs() <= 1e-12,
        })
    })
}

fn twirl_invariance(seed: u64) -> ClaimRecord {
    claim("7-twirl-invariance", || {
        let mut worst: f64 = 0.0;
        let mut checks = 0;
        for i in 0..TWIRL_STATES {
            let cut = FockCutoff::new(2 + i % 4, 2 + (i / 4) % 4)?;
            let rho = random_density(&mut substream(seed, STREAM_TWIRL + i as u64), &cut)?;
            let twirled = twirl_global(&rho);
            for delta in 1..cut.dim_a().min(cut.dim_b()) {
                worst = worst.max((coherence_v(&rho, delta)? - coherence_v(&twirled, delta)?).abs());
                checks += 1;
            }
        }
        Ok(ClaimRecord {
            id: "7-twirl-invariance",
            expected: format!("V(rho) = V(twirl(rho)) for {TWIRL_STATES} states, all valid shifts"),
            computed: format!("max |deviation| = {} over {checks} checks", sci(worst)),
            tolerance: "1e-12".into(),
            pass: worst <= 1e-12,
        })
    })
}

fn siv_unit_and_relation(seed: u64) -> ClaimRecord {
    claim("8-siv-unit-and-relation", || {
        let mut worst_unit: f64 = 0.0;
        for n in 0..6 {
            let cut = FockCutoff::new(n + 2, n + 2)?;
            let one = C64::new(1.0, 0.0);
            let phi = PureState::from_terms(cut, &[(n, n + 1, one), (n + 1, n, one)])?;
            worst_unit = worst_unit.max((pure_siv(&phi) - 1.0).abs());
        }
        let mut rng = substream(seed, STREAM_SIV);
        let (mut relation_fail, mut sandwich_fail) = (0, 0);
        for k in 0..MINIMAL_SAMPLES {
            let m = MinimalReference::random(&mut rng);
            if !siv_witness_relation(&m)? {
                relation_fail += 1;
            }
            let upper = vf_ensemble_upper_bound(&minimal_to_density(&m), DEFAULT_RESTARTS, seed.wrapping_add(k as u64))?;
            if vf_bound_minimal(&m) > upper + 1e-12 {
                sandwich_fail += 1;
            }
        }
        Ok(ClaimRecord {
            id: "8-siv-unit-and-relation",
            expected: format!("SIV = 1 for n=0..5; relation and lower <= upper on {MINIMAL_SAMPLES} samples"),
            computed: format!(
                "max |SIV - 1| = {}; relation failures = {relation_fail}; sandwich failures = {sandwich_fail}",
                sci(worst_unit)
            ),
            tolerance: "1e-12; 0; 0".into(),
            pass: worst_unit <= 1e-12 && relation_fail == 0 && sandwich_fail == 0,
        })
    })
}

fn photonic_threshold(_seed: u64) -> ClaimRecord {
    claim("9-photonic-threshold", || {
        let t = threshold_nbar();
        let cross = photonic_chsh_max(&PhotonicSetup::balanced(t.n_bar)?)?;
        let mut balanced = Vec::new();
        for n in [0.05, 0.2, 0.4] {
            balanced.push(optimality_scan(n, 0.01)?.balanced_is_optimal());
        }
        let grid: Vec<f64> = (1..=200).map(|k| k as f64 * 0.01).collect();
        let (worst_n, worst_s) = hessmo_worst(&grid)?;
        let dev_n = (t.n_bar - (SQRT_2 - 1.0)).abs();
        let dev_p = (t.p_vac - 0.6609).abs();
        let all_balanced = balanced.iter().all(|b| *b);
        Ok(ClaimRecord {
            id: "9-photonic-threshold",
            expected: "n* = sqrt(2)-1; p_vac = 0.6609; balanced argmax at nbar 0.05,0.2,0.4; Hessmo S <= 2".into(),
            computed: format!(
                "n* = {:.10}; p_vac = {:.6}; S at n* = {:.9} (phase search {:.9}); balanced argmax = {balanced:?}; \
                 Hessmo max S = {worst_s:.12} at nbar = {worst_n:.2}",
                t.n_bar, t.p_vac, cross.s_max, cross.s_grid
            ),
            tolerance: "1e-7; 1e-3; one grid cell; 1e-9".into(),
            pass: dev_n <= 1e-7 && dev_p <= 1e-3 && all_balanced && worst_s <= 2.0 + 1e-9,
        })
    })
}

/// Records for claims 1 to 9.
pub fn claims(seed: u64) -> Vec<ClaimRecord> {
    let runs: [fn(u64) -> ClaimRecord; 9] = [
        chsh_closed_form,
        correlation_formula,
        locc_no_violation,
        minimal_separable_bound,
        entangled_minimal,
        optimal_references,
        twirl_invariance,
        siv_unit_and_relation,
        photonic_threshold,
    ];
    runs.iter().map(|f| f(seed)).collect()
}

fn report_of(seed: u64, records: &[ClaimRecord]) -> Report {
    let mut r = Report::new("reproduce-all", &["claim-id", "expected", "computed", "tolerance", "pass"]);
    r.set("seed", Cell::Int(seed as i64));
    for c in records {
        r.push(vec![
            c.id.into(),
            c.expected.clone().into(),
            c.computed.clone().into(),
            c.tolerance.clone().into(),
            c.pass.into(),
        ]);
    }
    r
}

/// All claims. The determinism claim recomputes claims 1 to 9 and compares
/// the rendered records byte for byte.
pub fn reproduce_all(seed: u64) -> Report {
    let first = claims(seed);
    let second = claims(seed);
    let (a, b) = (report_of(seed, &first).to_json(), report_of(seed, &second).to_json());
    let same = a == b;
    let mut records = first;
    records.push(ClaimRecord {
        id: "10-determinism",
        expected: "identical output on repeated runs with the same seed".into(),
        computed: if same { "identical".into() } else { "outputs differ".into() },
        tolerance: "byte-identical".into(),
        pass: same,
    });
    let failed = records.iter().filter(|c| !c.pass).count();
    let mut report = report_of(seed, &records);
    report.set("claims", records.len());
    report.set("failed", failed);
    report.set("all_pass", failed == 0);
    report
}
