//! Dense complex linear algebra and fixed-step ODE stepping.

mod eigen;
mod gram_schmidt;
mod matrix;
mod ode;

pub use eigen::{
    group_multiplets, herm_eig, normalize_phase, unitary_evolution, SpectralDecomposition, JACOBI_MAX_SWEEPS,
    JACOBI_OFF_DIAGONAL_TOL, MULTIPLET_TOL, PHASE_PIVOT_THRESHOLD,
};
pub use gram_schmidt::{gram_schmidt, Orthonormalized, GRAM_SCHMIDT_DROP_TOL};
pub use matrix::{basis_vector, inner, norm, ComplexMatrix};
pub use ode::{rk4_step, OdeState};
