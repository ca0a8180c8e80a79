//! Spectral Galerkin simulation of SPDEs with transport noise on the 2-torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`spaces`] realises the Gelfand triple `V ⊂ H ⊂ U` as weighted Fourier
//!   coefficient spaces, together with projections, norms, growth functions,
//!   the smooth cutoff and the path functionals.
//! * [`transform`] holds the dealiased pseudo-spectral machinery.
//! * [`operators`] provides drift/noise pairs: stochastic advection by Lie
//!   transport (SALT) Navier–Stokes plus analytic reference models, and the
//!   assumption witnesses.
//! * [`engine`] time-steps the truncated Galerkin system, tracks first
//!   hitting times and exports path records.
//! * [`diagnostics`] runs seeded Monte-Carlo ensembles and turns them into
//!   [`diagnostics::EstimateReport`]s.

pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod operators;
pub mod spaces;
pub mod stats;
pub mod transform;

pub use error::{Error, Result};
pub use operators::{OperatorKind, OperatorPair, SaltCoefficients, Workspace};
pub use spaces::{CutoffSpec, GrowthProfile, ModeIndex, Space, SpectralField, TripleWeights};
