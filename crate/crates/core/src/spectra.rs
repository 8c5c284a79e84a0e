//! Closed-form spectra and transfer fidelities for the equal-coupling
//! cluster and the engineered weak-link network.
//!
//! These are analytic counterparts of `herm_eig` on the matrices built by
//! [`crate::network::topology_to_couplings`], and serve as its oracle.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::network::{single_excitation_hamiltonian, topology_to_couplings, TopologySpec};
use crate::numerics::{basis_vector, gram_schmidt, SpectralDecomposition};

fn real_vector(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&x| C64::new(x, 0.0)).collect()
}

/// Spectrum of the all-equal cluster: `-x` with multiplicity `N-1` and `(N-1) x`.
///
/// The degenerate eigenvectors are Gram-Schmidt orthonormalizations of
/// `|i> - |1>`, `i = 2..N`; the top eigenvector is uniform.
pub fn cluster_spectrum(n: usize, x: f64) -> Result<SpectralDecomposition> {
    if n < 2 {
        return Err(Error::Parameter(format!("need at least 2 qubits, got {n}")));
    }
    if x == 0.0 || !x.is_finite() {
        return Err(Error::Parameter(format!("cluster coupling must be nonzero, got {x}")));
    }
    let h = single_excitation_hamiltonian(&topology_to_couplings(&TopologySpec::Cluster { x }, n)?);
    let e1 = basis_vector(n, 0);
    let differences: Vec<Vec<C64>> =
        (1..n).map(|i| basis_vector(n, i).iter().zip(&e1).map(|(a, b)| a - b).collect()).collect();
    let degenerate = gram_schmidt(&differences)?;
    let mut pairs: Vec<(f64, Vec<C64>)> = degenerate.basis.into_iter().map(|v| (-x, v)).collect();
    pairs.push(((n as f64 - 1.0) * x, real_vector(&vec![1.0 / (n as f64).sqrt(); n])));
    SpectralDecomposition::from_eigenpairs(&h, pairs)
}

/// `|<N|U(tau)|1>|^2 = (2/N^2) [1 - cos(N tau)]` for the equal-coupling cluster.
pub fn cluster_transfer_probability(n: usize, tau: f64) -> f64 {
    let n = n as f64;
    2.0 / (n * n) * (1.0 - (n * tau).cos())
}

/// Labelled closed-form eigensystem of the engineered network restricted to
/// the states that overlap the sender and receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineeredClosedForm {
    pub n: usize,
    pub x: f64,
    pub f: f64,
    /// `-x/f`, eigenvector `(-|1> + |N>)/sqrt(2)`.
    pub antisymmetric: f64,
    /// Larger root of the symmetric pair.
    pub upper: f64,
    /// Smaller root of the symmetric pair.
    pub lower: f64,
    /// End-site normalization of the `upper` eigenvector.
    pub upper_norm: f64,
    /// End-site normalization of the `lower` eigenvector.
    pub lower_norm: f64,
    /// Eigenvalue `-f x` of the `N-3` inner-site states, absent for `N = 3`.
    pub degenerate: Option<f64>,
}

impl EngineeredClosedForm {
    pub fn new(n: usize, x: f64, f: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Parameter(format!("engineered network needs at least 3 qubits, got {n}")));
        }
        if !(f > 1.0) || !f.is_finite() {
            return Err(Error::Parameter(format!("f must exceed 1, got {f}")));
        }
        if x == 0.0 || !x.is_finite() {
            return Err(Error::Parameter(format!("reference coupling must be nonzero, got {x}")));
        }
        let inner = n as f64 - 2.0;
        let c = (1.0 + (n as f64 - 3.0) * f * f) / (2.0 * f);
        let root = (1.0 + 4.0 * (n as f64 - 1.0) * f * f / ((1.0 + (n as f64 - 3.0) * f * f).powi(2))).sqrt();
        let antisymmetric = -x / f;
        let upper = c * (1.0 + root) * x;
        let lower = c * (1.0 - root) * x;
        let norm = |e: f64| {
            let s = antisymmetric + e;
            x.abs() * inner / (2.0 * inner * inner * x * x + s * s * inner).sqrt()
        };
        Ok(Self {
            n,
            x,
            f,
            antisymmetric,
            upper,
            lower,
            upper_norm: norm(upper),
            lower_norm: norm(lower),
            degenerate: (n > 3).then_some(-f * x),
        })
    }

    /// Symmetric eigenvector `N (|1> + |N> + c sum_inner |i>)` with
    /// `c = (e - x/f) / (x (N-2))`.
    pub fn symmetric_vector(&self, eigenvalue: f64, normalization: f64) -> Vec<C64> {
        let n = self.n;
        let coefficient = (self.antisymmetric + eigenvalue) / (self.x * (n as f64 - 2.0));
        let mut v = vec![coefficient * normalization; n];
        v[0] = normalization;
        v[n - 1] = normalization;
        real_vector(&v)
    }

    /// `<N|U(t)|1> = -(1/2) e^{i x t / f} + N_up^2 e^{-i e_up t} + N_lo^2 e^{-i e_lo t}`.
    pub fn amplitude(&self, t: f64) -> C64 {
        C64::from_polar(-0.5, -self.antisymmetric * t)
            + C64::from_polar(self.upper_norm.powi(2), -self.upper * t)
            + C64::from_polar(self.lower_norm.powi(2), -self.lower * t)
    }

    /// Period of the beat between the two symmetric eigenvalues.
    pub fn fast_period(&self) -> f64 {
        2.0 * PI / (self.upper - self.lower).abs()
    }

    /// Period of the beat between the lower symmetric and the antisymmetric eigenvalue.
    pub fn slow_period(&self) -> f64 {
        2.0 * PI / (self.lower - self.antisymmetric).abs()
    }

    /// Midpoint and semi-amplitude of the fast fidelity oscillation at the
    /// crest of the slow envelope.
    ///
    /// With `u = N_up^2` the receiver amplitude there has modulus between
    /// `1 - 2u` and `1`, so the fidelity swings between `(1-2u)^2` and `1`
    /// around `(1-u)^2 + u^2` with semi-amplitude `2u(1-u)`.
    pub fn envelope_crest(&self) -> (f64, f64) {
        let u = self.upper_norm.powi(2);
        ((1.0 - u).powi(2) + u * u, 2.0 * u * (1.0 - u))
    }
}

/// Closed-form spectral decomposition of the engineered network.
///
/// Three eigenpairs come from the closed form; for `N >= 4` the remaining
/// `N-3` inner-site states at `-f x` are orthonormalized numerically.
pub fn engineered_spectrum(n: usize, x: f64, f: f64) -> Result<SpectralDecomposition> {
    let cf = EngineeredClosedForm::new(n, x, f)?;
    let h = single_excitation_hamiltonian(&topology_to_couplings(&TopologySpec::Engineered { x, f }, n)?);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut antisym = vec![0.0; n];
    antisym[0] = -s;
    antisym[n - 1] = s;

    let mut pairs = vec![(cf.antisymmetric, real_vector(&antisym))];
    if n == 3 {
        // N (|1> - (e'/x)|2> + |3>) with e' the partner root, N = x / sqrt(2x^2 + e'^2)
        for (e, partner) in [(cf.lower, cf.upper), (cf.upper, cf.lower)] {
            let norm = x.abs() / (2.0 * x * x + partner * partner).sqrt();
            pairs.push((e, real_vector(&[norm, -partner / x * norm, norm])));
        }
    } else {
        pairs.push((cf.upper, cf.symmetric_vector(cf.upper, cf.upper_norm)));
        pairs.push((cf.lower, cf.symmetric_vector(cf.lower, cf.lower_norm)));
        let pivot = basis_vector(n, 1);
        let inner: Vec<Vec<C64>> =
            (2..n - 1).map(|i| basis_vector(n, i).iter().zip(&pivot).map(|(a, b)| a - b).collect()).collect();
        let degenerate = gram_schmidt(&inner)?;
        let e = cf.degenerate.expect("inner states exist for N >= 4");
        pairs.extend(degenerate.basis.into_iter().map(|v| (e, v)));
    }
    SpectralDecomposition::from_eigenpairs(&h, pairs)
}

/// Three-qubit engineered fidelity `F(0,1)` written as the interference of
/// the three transfer paths.
pub fn closed_form_fidelity_n3(t: f64, x: f64, f: f64) -> Result<f64> {
    let cf = EngineeredClosedForm::new(3, x, f)?;
    // index 0: antisymmetric, 1: lower root, 2: upper root
    let (e0, e1, e2) = (cf.antisymmetric, cf.lower, cf.upper);
    let (n1, n2) = (cf.lower_norm.powi(2), cf.upper_norm.powi(2));
    let value = 0.25 + 2.0 * n1 * n2 * ((e2 - e1) * t).cos() + n1 * n1 - n1 * ((e1 - e0) * t).cos() + n2 * n2
        - n2 * ((e2 - e0) * t).cos();
    Ok(value.clamp(0.0, 1.0))
}

/// `tau* = 2 f pi / sqrt(1 + 8 f^2)`, near the first three-qubit fidelity peak.
pub fn optimal_transfer_time(f: f64) -> Result<f64> {
    if !(f > 1.0) {
        return Err(Error::Parameter(format!("f must exceed 1, got {f}")));
    }
    if f.is_infinite() {
        return Ok(PI / 2f64.sqrt());
    }
    Ok(2.0 * f * PI / (1.0 + 8.0 * f * f).sqrt())
}
