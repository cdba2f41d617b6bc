//! Exact-model, floating-point-engine checker for continuous-time Markov
//! chains described in a modular guarded-command language.
//!
//! The pipeline is
//!
//! 1. [`lang`]: parse and validate a model (`.gcm`) and CSL/reward properties,
//! 2. [`compose`]: explore the reachable state space into a sparse [`Ctmc`],
//! 3. [`numerics`]: uniformization, steady state, reachability kernels,
//! 4. [`checker`]: evaluate a property on the chain,
//! 5. [`sim`]: Gillespie simulation for statistical cross-checks,
//! 6. [`harness`]: knockout variants, sweeps, tables and scans written as CSV.
//!
//! Numeric code is generic over [`Scalar`]; the aliases below fix the
//! common choices.

pub mod checker;
pub mod compose;
pub mod error;
pub mod harness;
pub mod lang;
pub mod numerics;
pub mod scalar;
pub mod sim;

pub use error::{Error, ErrorClass};
pub use scalar::Scalar;

/// Exact rational used for constants, rates and bounds in source text.
pub type Rational = num_rational::Rational64;

pub use compose::{build_state_space, BuildOptions, Ctmc, StateSet};
pub use lang::ast::ModelAst;
pub use lang::property::StateFormula;
pub use lang::{parse_model, parse_property};

pub use checker::{check, CheckConfig, CheckResult, Checker};
pub use numerics::Quantity;

pub type Ctmc64 = Ctmc<f64>;
pub type Ctmc32 = Ctmc<f32>;
pub type CheckResult64 = CheckResult<f64>;
pub type CheckResult32 = CheckResult<f32>;
pub type Checker64<'a> = Checker<'a, f64>;
