//! Spectra of random non-Hermitian tridiagonal matrices with periodic
//! boundary conditions, and their predicted limit computed from the
//! symmetric reference problem.
//!
//! Pipeline: [`ensemble`] samples coefficients, [`operator`] builds the
//! matrices, [`eig`] computes spectra and resolvents, [`stats`] estimates the
//! density of states and Lyapunov exponent, [`curves`] traces the limit curve
//! and its density, [`compare`] measures empirical spectra against it, and
//! [`verify`] runs the invariant battery.

pub mod compare;
pub mod curves;
pub mod eig;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod logscale;
pub mod operator;
pub mod rng;
pub mod stats;
pub mod verify;

pub use curves::{coupling_g, trace_curve, Arc, Coupling, CurveModel, TestFunction, XGrid};
pub use eig::{spectrum, SpectrumMethod, SpectrumResult};
pub use ensemble::{sample, sample_realization, CoefficientSequence, DistributionSpec, EnsembleSpec, Mode};
pub use error::{Error, Result};
pub use logscale::LogComplex;
pub use operator::{build, OperatorBundle, SymTridiagonal, TransferState};
pub use stats::{estimate_ids, IdsEstimate, IdsGrid, LyapunovEstimate, LyapunovMethod};
