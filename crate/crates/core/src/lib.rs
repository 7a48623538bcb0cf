//! Bell tests for two parties that lack a shared phase reference.
//!
//! When particle number is superselected, Alice and Bob can only measure
//! operators that commit to a definite local number, so a principal state such
//! as `(|n,n+1⟩ + |n+1,n⟩)/√2` shows no violation on its own. Pairing it with a
//! shared reference state restores the violation; its strength is governed by
//! the coherence parameter `𝒱` of the reference.
//!
//! Modules:
//! - [`fock`]: truncated two-party Fock spaces, states, tensor products, partial traces.
//! - [`ssr`]: twirls, SSR-compliance checks and the coherence parameter.
//! - [`bell`]: number-respecting observables, correlations and CHSH values.
//! - [`reference`]: minimal two-level references, PPT tests, optimal product references.
//! - [`siv`]: superselection-induced variance and bounds on its convex roof.
//! - [`photonic`]: single photon with a coherent-state reference.
//! - [`sampling`]: seeded random states and unitaries.

pub mod bell;
pub mod error;
pub mod fock;
pub mod photonic;
pub mod reference;
pub mod sampling;
pub mod siv;
pub mod ssr;

pub use bell::{
    chsh, chsh_optimal, correlation, BellExperiment, ChshOptimum, ChshSettings, PrincipalState,
    ProbabilityTable, SsrObservable,
};
pub use error::{Error, Result};
pub use fock::{
    partial_trace, partial_transpose, tensor, CMatrix, CVector, DensityOperator, FockCutoff,
    LocalOperator, PureState, Side, TensorProduct, C64,
};
pub use photonic::PhotonicSetup;
pub use reference::{MinimalReference, ProductReference};
pub use siv::SivReport;
pub use ssr::{coherence_v, is_ssr_compliant, is_ssr_locc, twirl_global, twirl_local, LadderPair};
