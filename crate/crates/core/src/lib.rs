//! Numerical toolkit for analyzing the sampling cost of quantum error
//! mitigation on noisy layered circuits.
//!
//! The crate is organized around the pipeline used by the accompanying CLI:
//!
//! - [`pauli`] — Pauli-string algebra and the generalized Bloch
//!   parametrization of n-qubit states.
//! - [`channel`] — quantum channels as Pauli transfer matrices and
//!   (signed-weight) Kraus sets, channel metrics (Γ, β, ν, η), and the four
//!   built-in noise models.
//! - [`circuit`] — layered noisy circuits, random-unitary ensembles,
//!   compilation into an effective noise channel, and singular-exponent
//!   analysis of deep circuits.
//! - [`fisher`] — SLD quantum Fisher information over the Bloch chart,
//!   Cramér–Rao variance bounds, and the noise-absorbing optimal observable.
//! - [`bounds`] — closed-form sampling-cost lower bounds and the ν/η
//!   recursions behind the random-circuit average bounds.
//! - [`mitigation`] — rescaling, quasiprobability cancellation, and
//!   subspace-expansion estimators with their empirical costs.
//! - [`moments`] — Haar/Weingarten moment formulas used to validate the
//!   unitary samplers and the average-case recursions.

pub mod bounds;
pub mod channel;
pub mod circuit;
pub mod error;
pub mod fisher;
pub mod mitigation;
pub mod moments;
pub mod optim;
pub mod pauli;
pub mod simplex;

pub use error::{Error, Result};
