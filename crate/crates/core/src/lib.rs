//! Spectral laboratory for the Jordan–Moore–Gibson–Thompson equation
//!
//! ```text
//! τ u_ttt + u_tt − Δu − βΔu_t = ∂_t((B/A) u_t² + |∇u|²)
//! ```
//!
//! written as the first-order system in `(u, v, w) = (u, u_t, u_tt)`.
//!
//! - [`model`]: parameters, fields, the `V` vector and the quadratic forcing.
//! - [`modal`]: per-frequency symbol, eigenvalues, propagators and envelopes.
//! - [`lp`]: Littlewood–Paley blocks, Besov and Chemin–Lerner norms.
//! - [`sim`]: dealiased pseudo-spectral integration on a periodic box.
//! - [`decay`]: whole-space decay rates by exact radial evolution.

pub mod decay;
pub mod error;
pub mod grid;
pub mod lp;
pub mod modal;
pub mod model;
pub mod sim;
pub mod util;

pub use error::{Error, Result};
pub use grid::{Grid, Mode, SpectralGrid};
pub use lp::{BesovSpec, DyadicPartition, NormSeries, SumExponent};
pub use modal::{ModeEigensystem, ModePropagator, ModeSpectrum, SymbolMatrix};
pub use model::{ModelParams, Regime, SpectralState, State};
pub use sim::{EnergyReport, InitialFamily, InitialSpec, RunRecord, SimConfig, Simulator, Trajectory};
