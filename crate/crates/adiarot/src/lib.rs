//! Staged adiabatic-rotation protocol simulator.
//!
//! The crate builds time-dependent Hamiltonians of the form
//! `H(θ) = H₀ + K·U(θ) h U(θ)†`, where a rank-one driving term is rotated
//! in a two-dimensional plane while a gapped background stays fixed, and
//! protocols are organized as ordered stages of such rotations. On top of
//! that it provides
//!
//! * exact assembly of multi-site operators on declared Hilbert-space
//!   layouts ([`opalg`]),
//! * analytic θ-derivatives and closed-form rotated ground states
//!   ([`tdham`]),
//! * low-lying spectra, gap traces, and transition-rate bound checks
//!   ([`spectra`]),
//! * linear and local-adiabatic schedules ([`schedule`]),
//! * Schrödinger propagation through staged protocols ([`evolve`]),
//! * the four concrete protocol families: toric-lattice stabilizer
//!   preparation, cluster-grid stabilizer preparation, clock-register
//!   chain interpolation, and the three-level search model ([`models`]),
//! * an experiment runner with CSV/SVG output ([`cli`]).

pub mod cli;
pub mod evolve;
pub mod models;
pub mod opalg;
pub mod schedule;
pub mod spectra;
pub mod tdham;

pub use opalg::{HilbertLayout, MultiSiteOperator, OperatorMatrix, SiteOperator};
pub use tdham::{RotatedGroundSpec, StagedHamiltonian, ThetaCoefficient};
