//! Quantum state transfer through XY spin networks whose couplings are
//! mediated by a common, far-detuned bosonic mode.

pub mod dissipation;
pub mod error;
pub mod fullmodel;
pub mod network;
pub mod numerics;
pub mod spectra;
pub mod transfer;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Library version, stamped into generated outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
