//! Design and verification of high-order LTI systems that carry a steady
//! harmonic oscillation at a chosen angular frequency.
//!
//! The pipeline is:
//!
//! 1. [`design`] solves for characteristic polynomial coefficients that put a
//!    conjugate root pair on the imaginary axis at ±jω_k and any remaining
//!    roots on the negative real axis.
//! 2. [`sim`] realizes 1/Δ(s) in controller canonical form and integrates its
//!    response to impulse, step, or zero inputs.
//! 3. [`analysis`] recovers the oscillation from a sampled output: analytic
//!    signal envelope, spectrogram, steady frequency/amplitude/bias, and the
//!    decay constant of any transient oscillation.
//!
//! [`poly`] holds the polynomial, root-finding and root-plane classification
//! primitives shared by all three, and [`io`] the text formats.

pub mod analysis;
pub mod design;
pub mod io;
pub mod poly;
pub mod sim;

pub use analysis::{AnalysisError, AnalyticSignal, OscillationReport, Spectrogram, SteadyEstimate};
pub use design::{DesignError, DesignReport, DesignSpec};
pub use poly::{classify, from_polar, to_polar, ComplexRoot, PolarRoot, PolyError, Polynomial, RegionClass, RootSet};
pub use sim::{InputSignal, InputSpec, Signal, SimError, StateSpaceModel};
