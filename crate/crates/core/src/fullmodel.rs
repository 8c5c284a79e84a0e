//! Qubits plus one cavity mode in the sector with at most one excitation.
//!
//! Basis `[|vac,0>, |vac,1>, ..., |vac,N>, |1ph,0>]`, Hamiltonian in the frame
//! rotating at the cavity frequency:
//!
//! ```text
//! <vac,i|H|vac,i> = -delta_i,   <vac,i|H|1ph,0> = Omega_i,   other entries 0
//! ```
//!
//! Eliminating the photon to second order gives the qubit hopping
//! `-Omega_i Omega_j (1/delta_i + 1/delta_j) / 2` (that is `-2 x_ij`) and the
//! dispersive shifts `-Omega_i^2 / delta_i`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{PhysicalParams, Units};
use crate::numerics::{herm_eig, ComplexMatrix, SpectralDecomposition};
use crate::C64;

/// Virtual-photon population bound in units of `max_i (Omega_i / delta_i)^2`.
pub const PHOTON_BOUND_FACTOR: f64 = 1.5;
const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DispersiveSector1 {
    pub n: usize,
    pub lamb_compensation: bool,
    /// `(N+2) x (N+2)` Hamiltonian, rad/s.
    pub h: ComplexMatrix,
}

impl DispersiveSector1 {
    pub fn dim(&self) -> usize {
        self.n + 2
    }

    /// Index of `|vac, site>` for a 1-based site.
    pub fn qubit_index(&self, site: usize) -> usize {
        site
    }

    pub fn photon_index(&self) -> usize {
        self.n + 1
    }
}

/// Dispersive shifts `-Omega_i^2 / delta_i`.
pub fn dispersive_shifts(params: &PhysicalParams) -> Vec<f64> {
    params.omega.iter().zip(params.detunings()).map(|(w, d)| -w * w / d).collect()
}

/// Builds the sector Hamiltonian.
///
/// With `lamb_compensation` the site-dependent part of the dispersive shifts is
/// cancelled: qubit `i` is shifted by `-(s_i - s_ref)`, where `s_ref` is the
/// shift of smallest magnitude. Equal shifts therefore receive no correction.
pub fn build_dispersive_sector1(params: &PhysicalParams, lamb_compensation: bool) -> Result<DispersiveSector1> {
    params.validate()?;
    let n = params.n();
    let deltas = params.detunings();
    let shifts = dispersive_shifts(params);
    let reference = shifts.iter().cloned().fold(f64::INFINITY, |a, s| if s.abs() < a.abs() { s } else { a });
    let mut h = ComplexMatrix::zeros(n + 2, n + 2);
    let photon = n + 1;
    for i in 0..n {
        let mut diag = -deltas[i];
        if lamb_compensation {
            diag -= shifts[i] - reference;
        }
        h[(i + 1, i + 1)] = C64::new(diag, 0.0);
        h[(i + 1, photon)] = C64::new(params.omega[i], 0.0);
        h[(photon, i + 1)] = C64::new(params.omega[i], 0.0);
    }
    Ok(DispersiveSector1 { n, lamb_compensation, h })
}

/// Photon-eliminated single-excitation Hamiltonian on `{|1>, ..., |N>}`
/// (rad/s), without dispersive shifts.
pub fn effective_hamiltonian(params: &PhysicalParams) -> Result<ComplexMatrix> {
    params.validate()?;
    let n = params.n();
    let deltas = params.detunings();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(0.0, 0.0)
        } else {
            C64::new(-params.omega[i] * params.omega[j] * 0.5 * (1.0 / deltas[i] + 1.0 / deltas[j]), 0.0)
        }
    }))
}

/// Largest `|x_ij|`, the unit of the dimensionless time `tau`.
pub fn reference_coupling(params: &PhysicalParams) -> Result<f64> {
    let h = effective_hamiltonian(params)?;
    Ok(0.5 * h.max_abs())
}

/// Qubit 1 excited and dressed to first order: `|vac,1> - (Omega_1/delta_1)|1ph,0>`, normalized.
pub fn dressed_initial_state(params: &PhysicalParams) -> Vec<C64> {
    let n = params.n();
    let mut psi = vec![C64::new(0.0, 0.0); n + 2];
    let admix = -params.omega[0] / params.detunings()[0];
    let norm = (1.0 + admix * admix).sqrt();
    psi[1] = C64::new(1.0 / norm, 0.0);
    psi[n + 1] = C64::new(admix / norm, 0.0);
    psi
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationPoint {
    pub tau: f64,
    #[serde(rename = "F01_full")]
    pub f01_full: f64,
    #[serde(rename = "F01_eff")]
    pub f01_eff: f64,
    pub abs_dev: f64,
    pub photon_population: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub n: usize,
    pub receiver: usize,
    pub dispersive_ratio: f64,
    pub dispersive_warning: bool,
    pub lamb_compensation: bool,
    pub points: Vec<DeviationPoint>,
    pub max_dev: f64,
    pub max_photon_population: f64,
    /// `1.5 max_i (Omega_i / delta_i)^2`.
    pub photon_bound: f64,
    pub photon_bound_ok: bool,
    /// Largest `| ||psi(t)|| - 1 |` of the full-model state.
    pub norm_error: f64,
}

/// Evolves the dressed initial state in the full sector model and `|1>` in the
/// effective model, comparing `|<receiver|psi(t)>|^2` on a grid of `tau = x t`.
pub fn compare_effective_vs_full(
    params: &PhysicalParams,
    tau_grid: &[f64],
    receiver: usize,
    lamb_compensation: bool,
) -> Result<DeviationReport> {
    let n = params.n();
    if receiver == 0 || receiver > n {
        return Err(Error::SiteOutOfRange { site: receiver, n });
    }
    if tau_grid.is_empty() || tau_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Parameter("time grid must be non-empty and finite".into()));
    }
    let units = Units::new(reference_coupling(params)?)?;
    let full = build_dispersive_sector1(params, lamb_compensation)?;
    let full_decomp: SpectralDecomposition = herm_eig(&full.h)?;
    let eff_decomp = herm_eig(&effective_hamiltonian(params)?)?;
    let psi0 = dressed_initial_state(params);

    let mut points = Vec::with_capacity(tau_grid.len());
    let mut norm_error: f64 = 0.0;
    for &tau in tau_grid {
        let t = units.time(tau);
        let psi = full_decomp.evolve_state(&psi0, t);
        let norm_sq: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        norm_error = norm_error.max((norm_sq.sqrt() - 1.0).abs());
        let f01_full = psi[full.qubit_index(receiver)].norm_sqr();
        let f01_eff = eff_decomp.propagator_element(0, receiver - 1, t).norm_sqr();
        points.push(DeviationPoint {
            tau,
            f01_full,
            f01_eff,
            abs_dev: (f01_full - f01_eff).abs(),
            photon_population: psi[full.photon_index()].norm_sqr(),
        });
    }
    if norm_error > NORM_TOL {
        return Err(Error::Consistency(format!("full-model norm drifted by {norm_error}")));
    }
    let max_dev = points.iter().map(|p| p.abs_dev).fold(0.0, f64::max);
    let max_photon_population = points.iter().map(|p| p.photon_population).fold(0.0, f64::max);
    let ratio = params.dispersive_ratio();
    let photon_bound = PHOTON_BOUND_FACTOR * ratio * ratio;
    Ok(DeviationReport {
        n,
        receiver,
        dispersive_ratio: ratio,
        dispersive_warning: params.dispersive_warning(),
        lamb_compensation,
        points,
        max_dev,
        max_photon_population,
        photon_bound,
        photon_bound_ok: max_photon_population <= photon_bound,
        norm_error,
    })
}

/// Slope of `log(max_dev)` against `log(Omega/delta)` between two reports.
pub fn scaling_exponent(a: &DeviationReport, b: &DeviationReport) -> Result<f64> {
    if a.max_dev <= 0.0 || b.max_dev <= 0.0 || a.dispersive_ratio == b.dispersive_ratio {
        return Err(Error::Parameter("scaling exponent needs two distinct nonzero deviations".into()));
    }
    Ok((a.max_dev / b.max_dev).ln() / (a.dispersive_ratio / b.dispersive_ratio).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub reports: Vec<DeviationReport>,
    pub scaling_exponent: f64,
}

/// Runs [`compare_effective_vs_full`] at two values of `Omega/delta` with the
/// coupling pattern `weights_i weights_j` and largest coupling `x` held fixed.
pub fn adiabatic_scaling(
    weights: &[f64],
    x: f64,
    ratios: (f64, f64),
    tau_grid: &[f64],
    lamb_compensation: bool,
) -> Result<ScalingReport> {
    let n = weights.len();
    let reports = [ratios.0, ratios.1]
        .iter()
        .map(|&r| {
            let params = PhysicalParams::dispersive_realization(weights, r, x)?;
            compare_effective_vs_full(&params, tau_grid, n, lamb_compensation)
        })
        .collect::<Result<Vec<_>>>()?;
    let scaling_exponent = scaling_exponent(&reports[0], &reports[1])?;
    Ok(ScalingReport { reports, scaling_exponent })
}
