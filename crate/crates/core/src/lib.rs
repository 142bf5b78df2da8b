//! Radially symmetric two-species chemotaxis with Lotka-Volterra competition.
//!
//! The crate covers parameter classification ([`model`]), the radial
//! finite-volume discretisation ([`grid`]), the signal equation ([`elliptic`]),
//! time stepping ([`dynamics`]), the weighted moment functionals used to detect
//! concentration ([`functionals`]) and constructors for admissible initial data
//! ([`initdata`]).
//!
//! Everything is generic over the float type; the aliases below fix it to `f64`.

// `!(x > 0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod elliptic;
pub mod functionals;
pub mod grid;
pub mod initdata;
pub mod model;
pub mod scalar;
mod tridiag;

pub use dynamics::{
    concavity_audit, fit_power_law, mass_audit, run, step, ConcavityAudit, MassAudit, PowerLawFit, RunOptions,
    RunRecord, Sample, State, StepControl, StepError, Termination, TerminationCause,
};
pub use elliptic::{flux_bound, flux_identity, residual_w, solve_w, EllipticError};
pub use functionals::{
    audit_inequality, phi, psi, psi_phi_gap, riccati_blowup_bound, FunctionalError, MomentConfig, MomentRegime,
    MomentSample, RiccatiAudit,
};
pub use grid::{Accumulated, GridError, RadialField, RadialGrid};
pub use initdata::{make_concentrated, Concentration, Hypothesis, InitDataError, ValidationReport};
pub use model::{
    classify_regime, chi_threshold_bounded, select_lp_exponent, ChiThreshold, ModelError, ModelParams,
    RegimePrediction, SignalKind, Species, Verdict,
};
pub use scalar::{Real, Scalar};

pub type Params = ModelParams<f64>;
pub type Grid = RadialGrid<f64>;
pub type Field = RadialField<f64>;
pub type Accumulation = Accumulated<f64>;
pub type Control = StepControl<f64>;
pub type Record = RunRecord<f64>;
pub type Moments = MomentConfig<f64>;
