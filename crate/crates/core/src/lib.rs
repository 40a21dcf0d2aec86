//! Sub-Nyquist acquisition and recovery of periodic pulse streams with an
//! integrate-and-fire time encoder.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`model`] — ground-truth signals: T-periodic trains of known pulses,
//!    parameterized by amplitudes and delays, with exact Fourier-series
//!    coefficients.
//! 2. [`kernel`] — the sum-of-sincs sampling kernel and the band-limited
//!    filtered signal it produces.
//! 3. [`encoder`] — the integrate-and-fire time encoder: converts the
//!    filtered signal into a strictly increasing sequence of firing times.
//! 4. [`recovery`] — rebuilding the Fourier coefficients from firing times,
//!    by either the difference model or the better-conditioned partial-sum
//!    model.
//! 5. [`spectral`] — classic spectral estimation on the recovered
//!    coefficients: denoising, annihilating filter, root finding, amplitude
//!    fitting.
//! 6. [`experiments`] — reproducible end-to-end studies (perfect recovery,
//!    conditioning, noise sweeps).
//! 7. [`io`] — serialization of configs, traces, and result tables.

pub mod encoder;
pub mod error;
pub mod experiments;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod model;
pub mod recovery;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
