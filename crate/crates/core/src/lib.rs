//! Exact simulation of a two-level emitter coupled to a coupled-resonator
//! array whose emitter coupling is switched on and off in time.
//!
//! The crate covers the single-excitation sector: the model and quench
//! schedules ([`model`]), exact piecewise propagation ([`propagator`]),
//! derived quantities such as survival, decay rates and concurrence
//! ([`observables`]), and the free-decay, single-quench and periodic-quench
//! (Zeno / anti-Zeno) experiments ([`experiments`]).

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod propagator;

pub use error::{Error, Result};
pub use linalg::SymMatrix;
pub use model::{
    assemble_hamiltonian, band_info, build_params, params_from_json, protocol_segments, BandInfo, Boundary, Frame,
    ProtocolKind, QuenchProtocol, Segment, SystemParams,
};
pub use num_complex::Complex64;
pub use propagator::{
    eig_sym, evolve_segment, ideal_measure, propagate, Eigensystem, Propagator, StateVector, Trajectory,
};
