//! End-to-end empirical checks over the suspension model: stationary
//! sampling and the semi-flow, correlation decay, the Laplace-transform
//! identity between correlations and operator series, non-local-integrability
//! certificates, and circle Fourier-mode decay.

mod correlate;
mod fourier;
mod laplace;
mod nli;
mod suspension;

pub use correlate::{
    correlate, CorrelationReport, CorrelationSeries, DecayFit, FiberProfile, Observable,
};
pub use fourier::{fourier_decay_check, FourierReport};
pub use laplace::{laplace_consistency, LaplaceReport};
pub use nli::{nli_certificate, NliParams, NliReport};
pub use suspension::{build_chain, SuspensionState, StationaryChain};
