//! Command implementations.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fs;

use ssrbell_core::bell::{chsh_optimal, closed_form_correlation, max_abs_chsh, CORRELATION_TOL};
use ssrbell_core::photonic::{
    hessmo_worst, optimality_scan, photonic_chsh_max, photonic_correlation, s_max_analytic, threshold_nbar,
    PhotonicSetup,
};
use ssrbell_core::reference::{
    best_coherence_for_weights, boundary_minimal, is_separable_minimal, max_f_numeric, max_v_pure_minimal,
    max_v_separable_minimal, optimal_product_reference, ppt_min_eigenvalue,
};
use ssrbell_core::sampling::{random_fixed_number_pure, substream};
use ssrbell_core::siv::{siv_report, siv_witness_relation, DEFAULT_RESTARTS};
use ssrbell_core::ssr::{is_ssr_compliant, ssr_locc_witness};
use ssrbell_core::{twirl_global, BellExperiment, DensityOperator, MinimalReference, PrincipalState};

use crate::config::{Command, Params, PhotonicMode, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Report};
use crate::reproduce::reproduce_all;
use crate::state_io::{load_state, LoadedState};

/// Rendered output of a successful run.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub rendered: String,
    /// False when `reproduce-all` has a failing claim.
    pub all_pass: bool,
}

fn verdict(locc: bool) -> &'static str {
    if locc {
        "SSR-LOCC"
    } else {
        "not SSR-LOCC"
    }
}

fn witness(p: &Params) -> CliResult<Report> {
    let path = p.state_file.as_ref().expect("validated");
    let state = load_state(path)?;
    let rho = state.to_density();
    let w = ssr_locc_witness(&rho)?;
    let mut r = Report::new("witness", &["delta", "v"]);
    r.set("kind", state.kind());
    r.set("dim_a", rho.cutoff().dim_a());
    r.set("dim_b", rho.cutoff().dim_b());
    r.set("ssr_compliant", is_ssr_compliant(&rho));
    r.set("max_abs_v", w.max_abs_v);
    r.set("delta_at_max", w.delta);
    r.set("verdict", verdict(w.witness_says_locc()));
    r.set("product_basis_diagonal", w.diagonal);
    r.set("agrees_with_diagonality", w.agrees());
    for (d, v) in &w.per_delta {
        r.push(vec![(*d).into(), (*v).into()]);
    }
    Ok(r)
}

fn minimal_from(p: &Params) -> CliResult<Option<MinimalReference>> {
    match &p.state_file {
        None => Ok(None),
        Some(path) => match load_state(path)? {
            LoadedState::Minimal(m) => Ok(Some(m)),
            other => Err(CliError::Usage(format!(
                "state_file: expected kind minimal, found {}",
                other.kind()
            ))),
        },
    }
}

fn chsh_reference(p: &Params) -> CliResult<(String, DensityOperator)> {
    if let Some(path) = &p.state_file {
        return Ok((format!("file {}", path.display()), load_state(path)?.to_density()));
    }
    if let Some(total) = p.n_ref {
        let phi = random_fixed_number_pure(&mut substream(p.seed, 0), total)?;
        return Ok((format!("random fixed-number pure, N'={total}"), phi.to_density()));
    }
    let (n, m) = (p.n.unwrap_or(1), p.m.unwrap_or(1));
    let opt = optimal_product_reference(n, m)?;
    Ok((format!("twirled optimal product, N={n}, M={m}"), twirl_global(&opt.reference.to_pure().to_density())))
}

fn chsh_scan(p: &Params) -> CliResult<Report> {
    let delta = p.delta.unwrap_or(1);
    let step = p.grid_step.unwrap_or(PI / 16.0);
    let (source, reference) = chsh_reference(p)?;
    let exp = BellExperiment::new(&PrincipalState::standard(delta)?, &reference)?;
    let count = ((PI - 1e-12) / step).floor() as usize + 1;
    let angles: Vec<f64> = (0..count).map(|k| k as f64 * step).collect();
    let grid = exp.correlation_grid(&angles)?;
    let v = exp.coherence();
    let best = chsh_optimal(v)?;
    let s_brute = exp.chsh_brute(&best.settings)?;

    let mut r = Report::new("chsh-scan", &["alpha", "beta", "correlation", "closed_form"]);
    let mut worst: f64 = 0.0;
    for (a, row) in angles.iter().zip(&grid) {
        for (b, e) in angles.iter().zip(row) {
            let closed = closed_form_correlation(v, *a, *b);
            worst = worst.max((e - closed).abs());
            r.push(vec![(*a).into(), (*b).into(), (*e).into(), closed.into()]);
        }
    }
    if worst > CORRELATION_TOL {
        return Err(CliError::Contract(format!(
            "brute-force correlation differs from the closed form by {worst:e}"
        )));
    }
    r.set("reference", source);
    r.set("delta", delta);
    r.set("n_ref", exp.n_ref());
    r.set("v", v);
    r.set("s_max_closed_form", best.s_max);
    r.set("s_brute_at_optimum", s_brute);
    r.set("s_grid_max", max_abs_chsh(&grid));
    r.set("alpha1", best.settings.alpha1);
    r.set("alpha2", best.settings.alpha2);
    r.set("beta1", best.settings.beta1);
    r.set("beta2", best.settings.beta2);
    r.set("max_deviation", worst);
    Ok(r)
}

fn grid_points(step: f64, lo: f64, hi: f64) -> Vec<f64> {
    let k = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut g: Vec<f64> = (0..=k).map(|i| (lo + i as f64 * step).min(hi)).collect();
    if *g.last().expect("nonempty") < hi - 1e-12 {
        g.push(hi);
    }
    g
}

fn minimal_ref(p: &Params) -> CliResult<Report> {
    let step = p.grid_step.unwrap_or(0.05);
    let opt = max_v_separable_minimal();
    let (v_pure, r0, r1) = max_v_pure_minimal()?;
    let mut r = Report::new("minimal-ref", &["p_phi", "v_max_separable", "v_max", "balanced_state_separable"]);
    r.set("v_max_separable", opt.v_max);
    r.set("separable_p00", opt.witness.p00);
    r.set("separable_p11", opt.witness.p11);
    r.set("separable_p_phi", opt.witness.p_phi);
    r.set("v_max_pure", v_pure);
    r.set("pure_r0", r0);
    r.set("pure_r1", r1);
    r.set("boundary_ppt_min_eigenvalue", ppt_min_eigenvalue(&boundary_minimal()));
    if let Some(m) = minimal_from(p)? {
        r.set("state_v", m.coherence());
        r.set("state_separable", is_separable_minimal(&m)?);
        r.set("state_ppt_min_eigenvalue", ppt_min_eigenvalue(&m));
    }
    for p_phi in grid_points(step, 0.0, 1.0) {
        let p00 = 0.5 * (1.0 - p_phi);
        let m = MinimalReference::new(p00, 1.0 - p_phi - p00, p_phi, FRAC_1_SQRT_2, FRAC_1_SQRT_2)?;
        r.push(vec![
            p_phi.into(),
            best_coherence_for_weights(p_phi, p00).into(),
            (0.5 * p_phi).into(),
            is_separable_minimal(&m)?.into(),
        ]);
    }
    Ok(r)
}

fn optimal_ref(p: &Params) -> CliResult<Report> {
    let (n, m) = (p.n.unwrap_or(1), p.m.unwrap_or(1));
    let opt = optimal_product_reference(n, m)?;
    let (f_numeric, _, gap) = max_f_numeric(n);
    let mut r = Report::new("optimal-ref", &["index", "a", "b"]);
    r.set("N", n);
    r.set("M", m);
    r.set("f_N", opt.f_n);
    r.set("g_M", opt.g_m);
    r.set("f_N_numeric", f_numeric);
    r.set("eigen_gap", gap);
    r.set("v", opt.v);
    r.set("s_max", chsh_optimal(opt.v)?.s_max);
    let (a, b) = (&opt.reference.a_coeffs, &opt.reference.b_coeffs);
    for i in 0..a.len().max(b.len()) {
        let cell = |c: &Vec<f64>| c.get(i).map_or(Cell::Text(String::new()), |x| Cell::Num(*x));
        r.push(vec![i.into(), cell(a), cell(b)]);
    }
    Ok(r)
}

fn siv(p: &Params) -> CliResult<Report> {
    let step = p.grid_step.unwrap_or(0.05);
    let m = minimal_from(p)?.unwrap_or_else(boundary_minimal);
    let s = siv_report(&m, DEFAULT_RESTARTS, p.seed)?;
    let mut r = Report::new(
        "siv-report",
        &["p_phi", "v_abs", "vf_lower_bound", "vf_upper_bound", "relation_holds"],
    );
    r.set("p00", m.p00);
    r.set("p11", m.p11);
    r.set("p_phi", m.p_phi);
    r.set("r0", m.r0);
    r.set("r1", m.r1);
    r.set("pure_siv", s.pure_siv);
    r.set("vf_lower_bound", s.vf_lower_bound);
    r.set("vf_upper_bound", s.vf_upper_bound);
    r.set("v_abs", s.v_abs);
    r.set("relation_holds", siv_witness_relation(&m)?);
    r.set("sandwich_holds", s.vf_lower_bound <= s.vf_upper_bound + 1e-12);
    for p_phi in grid_points(step, 0.0, 1.0) {
        let p00 = 0.5 * (1.0 - p_phi);
        let row = MinimalReference::new(p00, 1.0 - p_phi - p00, p_phi, FRAC_1_SQRT_2, FRAC_1_SQRT_2)?;
        let s = siv_report(&row, DEFAULT_RESTARTS, p.seed)?;
        r.push(vec![
            p_phi.into(),
            s.v_abs.into(),
            s.vf_lower_bound.into(),
            s.vf_upper_bound.into(),
            siv_witness_relation(&row)?.into(),
        ]);
    }
    Ok(r)
}

fn photonic(p: &Params) -> CliResult<Report> {
    match p.mode.unwrap_or(PhotonicMode::Threshold) {
        PhotonicMode::Threshold => {
            let t = threshold_nbar();
            let mut r = Report::new("photonic threshold", &[]);
            r.set("n_bar_star", t.n_bar);
            r.set("p_vac", t.p_vac);
            r.set("sqrt2_minus_1", std::f64::consts::SQRT_2 - 1.0);
            Ok(r)
        }
        PhotonicMode::Chsh => {
            let setup = PhotonicSetup::new(p.r_a.unwrap_or(0.5), p.r_b.unwrap_or(0.5), p.nbar.unwrap_or(0.0))?;
            let c = photonic_chsh_max(&setup)?;
            let mut r = Report::new("photonic chsh", &["phi", "correlation"]);
            r.set("r_a", setup.r_a());
            r.set("r_b", setup.r_b());
            r.set("n_bar", setup.n_bar());
            r.set("offset", setup.offset());
            r.set("amplitude", setup.amplitude());
            r.set("s_max", c.s_max);
            r.set("s_phase_search", c.s_grid);
            for (name, x) in ["alpha1", "alpha2", "beta1", "beta2"].iter().zip(c.phases) {
                r.set(name, x);
            }
            r.set("violates", c.s_max > 2.0);
            for k in 0..=72 {
                let phi = k as f64 * PI / 36.0;
                r.push(vec![phi.into(), photonic_correlation(&setup, phi).into()]);
            }
            Ok(r)
        }
        PhotonicMode::Scan => {
            let n_bar = p.nbar.unwrap_or(0.2);
            let scan = optimality_scan(n_bar, p.grid_step.unwrap_or(0.01))?;
            let mut r = Report::new("photonic scan", &["r_a", "r_b", "s_max"]);
            r.set("n_bar", n_bar);
            r.set("grid_step", scan.grid_step);
            r.set("argmax_r_a", scan.argmax.0);
            r.set("argmax_r_b", scan.argmax.1);
            r.set("s_best", scan.s_best);
            r.set("s_balanced", s_max_analytic(&PhotonicSetup::balanced(n_bar)?));
            r.set("balanced_is_optimal", scan.balanced_is_optimal());
            for row in &scan.rows {
                r.push(vec![row.r_a.into(), row.r_b.into(), row.s_max.into()]);
            }
            Ok(r)
        }
        PhotonicMode::Hessmo => {
            let step = p.grid_step.unwrap_or(0.01);
            let grid: Vec<f64> = grid_points(step, 0.0, 2.0).into_iter().skip(1).collect();
            let mut r = Report::new("photonic hessmo", &["n_bar", "r", "s_max"]);
            for &n in &grid {
                let s = PhotonicSetup::hessmo(n)?;
                r.push(vec![n.into(), s.r_a().into(), s_max_analytic(&s).into()]);
            }
            let (n, s) = hessmo_worst(&grid)?;
            r.set("worst_n_bar", n);
            r.set("worst_s_max", s);
            r.set("never_violates", s <= 2.0 + 1e-9);
            Ok(r)
        }
    }
}

pub fn execute(config: &RunConfig) -> CliResult<Report> {
    let p = &config.params;
    match config.command {
        Command::Witness => witness(p),
        Command::ChshScan => chsh_scan(p),
        Command::MinimalRef => minimal_ref(p),
        Command::OptimalRef => optimal_ref(p),
        Command::SivReport => siv(p),
        Command::Photonic => photonic(p),
        Command::ReproduceAll => Ok(reproduce_all(p.seed)),
    }
}

/// Executes the command and writes the rendering to `out` when given.
pub fn run(config: &RunConfig) -> CliResult<Outcome> {
    let report = execute(config)?;
    let rendered = report.render(config.format());
    if let Some(path) = &config.params.out {
        fs::write(path, &rendered).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    let all_pass = !matches!(report.get("all_pass"), Some(Cell::Bool(false)));
    Ok(Outcome { report, rendered, all_pass })
}
