//! Spectrum modelling and parameter extraction for a flux-tunable transmon
//! coupled to a 3D cavity.
//!
//! The pipeline runs from the SQUID junction model ([`junction`]) through the
//! charge-basis transmon ([`transmon`]) and the dressed transmon–cavity
//! Hamiltonian ([`dressed`], [`sweep`]) to peak extraction and fitting
//! ([`peaks`], [`fit`], [`decay`]). [`cli`] wires these into the `fluxqed`
//! binary.
//!
//! Frequencies are in GHz, currents in amperes, delays in microseconds.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod decay;
pub mod dressed;
pub mod eigen;
pub mod error;
pub mod fit;
pub mod io;
pub mod junction;
pub mod lsq;
pub mod peaks;
pub mod plot;
pub mod sweep;
pub mod synth;
pub mod transmon;

pub use dressed::{CavityParams, DressedSpectrum, LineKind, ModelConfig, StateLabel};
pub use error::{DataError, FitError, ParamError, SolveError};
pub use junction::{FluxCalibration, JunctionDc, SquidParams};
pub use transmon::{ChargeBasisConfig, TransmonEigens, TransmonParams};
