//! Rank-3 WKB spectral networks of polynomial cubic differentials.
//!
//! The crate is organised by subsystem:
//!
//! * [`curve`] — the spectral curve x³ = φ(z), sheets, homology, periods.
//! * [`network`] — trajectory tracing, marked points, wall detection, SVG.
//! * [`trees`] — compatible abelianization trees and chamber bookkeeping.
//! * [`cluster`] — quivers, mutation and exchange relations.
//! * [`invariants`] — SL(3) invariants A_T and spectral coordinates X_T.
//! * [`ode`] — subdominant solutions of ħ³y‴ + φy = 0 and their frames.
//! * [`rh`] — BPS structures, KS transformations and Riemann–Hilbert checks.
//! * [`cli`] — command-line front end.

pub mod cli;
pub mod cluster;
pub mod curve;
pub mod error;
pub mod invariants;
pub mod network;
pub mod ode;
pub mod par;
pub mod rh;
pub mod trees;

pub use error::{Error, Result};
