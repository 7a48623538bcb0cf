//! JSON state files.
//!
//! ```json
//! {"kind": "density", "dim_a": 2, "dim_b": 2, "entries": [[0, 0, 0.5, 0.0], ...]}
//! {"kind": "pure", "dim_a": 2, "dim_b": 2, "entries": [[1, 0.7071067811865476, 0.0], ...]}
//! {"kind": "minimal", "p00": 0.25, "p11": 0.25, "p_phi": 0.5, "r0": 0.7071067811865476, "r1": 0.7071067811865476}
//! ```
//!
//! Indices follow the row-major `(n_A, n_B)` basis order. Missing entries are
//! zero. Floats are written in shortest round-trip form, so saving and loading
//! reproduces every entry exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use ssrbell_core::fock::CVector;
use ssrbell_core::reference::minimal_to_density;
use ssrbell_core::{CMatrix, DensityOperator, FockCutoff, MinimalReference, PureState, C64};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub enum LoadedState {
    Pure(PureState),
    Density(DensityOperator),
    Minimal(MinimalReference),
}

impl LoadedState {
    pub fn to_density(&self) -> DensityOperator {
        match self {
            LoadedState::Pure(p) => p.to_density(),
            LoadedState::Density(d) => d.clone(),
            LoadedState::Minimal(m) => minimal_to_density(m),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LoadedState::Pure(_) => "pure",
            LoadedState::Density(_) => "density",
            LoadedState::Minimal(_) => "minimal",
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum Entry {
    Matrix(usize, usize, f64, f64),
    Vector(usize, f64, f64),
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum StateFile {
    Pure { dim_a: usize, dim_b: usize, entries: Vec<Entry> },
    Density { dim_a: usize, dim_b: usize, entries: Vec<Entry> },
    Minimal { p00: f64, p11: f64, p_phi: f64, r0: f64, r1: f64 },
}

fn invalid(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Contract(format!("{}: {msg}", path.display()))
}

pub fn parse_state(text: &str, path: &Path) -> CliResult<LoadedState> {
    let file: StateFile = serde_json::from_str(text)
        .map_err(|e| CliError::Io(format!("{}: cannot parse state file: {e}", path.display())))?;
    match file {
        StateFile::Minimal { p00, p11, p_phi, r0, r1 } => MinimalReference::new(p00, p11, p_phi, r0, r1)
            .map(LoadedState::Minimal)
            .map_err(|e| invalid(path, e)),
        StateFile::Pure { dim_a, dim_b, entries } => {
            let cut = FockCutoff::new(dim_a, dim_b).map_err(|e| invalid(path, e))?;
            let mut amps = CVector::zeros(cut.dim());
            let mut set = vec![false; cut.dim()];
            for e in entries {
                let Entry::Vector(i, re, im) = e else {
                    return Err(invalid(path, "pure entries must be [index, re, im]"));
                };
                if i >= cut.dim() {
                    return Err(invalid(path, format!("index {i} outside dimension {}", cut.dim())));
                }
                if std::mem::replace(&mut set[i], true) {
                    return Err(invalid(path, format!("index {i} listed twice")));
                }
                amps[i] = C64::new(re, im);
            }
            PureState::new(cut, amps).map(LoadedState::Pure).map_err(|e| invalid(path, e))
        }
        StateFile::Density { dim_a, dim_b, entries } => {
            let cut = FockCutoff::new(dim_a, dim_b).map_err(|e| invalid(path, e))?;
            let d = cut.dim();
            let mut mat = CMatrix::zeros(d, d);
            let mut set = vec![false; d * d];
            for e in entries {
                let Entry::Matrix(r, c, re, im) = e else {
                    return Err(invalid(path, "density entries must be [row, col, re, im]"));
                };
                if r >= d || c >= d {
                    return Err(invalid(path, format!("entry ({r}, {c}) outside dimension {d}")));
                }
                if std::mem::replace(&mut set[r * d + c], true) {
                    return Err(invalid(path, format!("entry ({r}, {c}) listed twice")));
                }
                mat[(r, c)] = C64::new(re, im);
            }
            DensityOperator::new(cut, mat).map(LoadedState::Density).map_err(|e| invalid(path, e))
        }
    }
}

pub fn load_state(path: &Path) -> CliResult<LoadedState> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_state(&text, path)
}

pub fn render_state(state: &LoadedState) -> String {
    let (kind, dim_a, dim_b, entries): (_, _, _, Vec<Entry>) = match state {
        LoadedState::Minimal(m) => {
            let file = StateFile::Minimal { p00: m.p00, p11: m.p11, p_phi: m.p_phi, r0: m.r0, r1: m.r1 };
            return serde_json::to_string_pretty(&file).expect("state serializes") + "\n";
        }
        LoadedState::Pure(p) => (
            "pure",
            p.cutoff().dim_a(),
            p.cutoff().dim_b(),
            p.amps().iter().enumerate().map(|(i, z)| Entry::Vector(i, z.re, z.im)).collect(),
        ),
        LoadedState::Density(rho) => {
            let m = rho.matrix();
            let entries = (0..m.nrows())
                .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
                .map(|(r, c)| Entry::Matrix(r, c, m[(r, c)].re, m[(r, c)].im))
                .collect();
            ("density", rho.cutoff().dim_a(), rho.cutoff().dim_b(), entries)
        }
    };
    // one entry per line keeps files diffable
    let lines: Vec<String> = entries
        .iter()
        .map(|e| format!("    {}", serde_json::to_string(e).expect("entry serializes")))
        .collect();
    format!(
        "{{\n  \"kind\": \"{kind}\",\n  \"dim_a\": {dim_a},\n  \"dim_b\": {dim_b},\n  \"entries\": [\n{}\n  ]\n}}\n",
        lines.join(",\n")
    )
}

pub fn save_state(path: &Path, state: &LoadedState) -> CliResult<()> {
    fs::write(path, render_state(state)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
