//! Coupling matrices and excitation-sector Hamiltonians of the XY network.
//!
//! The hopping Hamiltonian is
//!
//! ```text
//! H = sum_{i<j} J_ij (s+_i s-_j + s-_i s+_j)
//! ```
//!
//! so `J_ij` is directly the single-excitation matrix element between `|i>`
//! and `|j>`. Dimensionless work expresses `J` in units of a reference
//! coupling `x` and time as `tau = x t`.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// Above this `max_i Omega_i / |delta_i|` the dispersive approximation is flagged.
pub const DISPERSIVE_WARNING_RATIO: f64 = 0.2;
/// Default relative spread below which two detunings count as equal.
pub const DEFAULT_DETUNING_TOLERANCE: f64 = 1e-3;
/// Default largest sector dimension `sector_hamiltonian` will build.
pub const DEFAULT_SECTOR_CAP: usize = 4096;
/// Largest register for the brute-force `2^N` Hamiltonian.
pub const MAX_FULL_REGISTER_QUBITS: usize = 12;

/// Cavity frequency, qubit transition energies and Rabi frequencies (rad/s, hbar = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub omega_a: f64,
    #[serde(rename = "E_q")]
    pub e_q: Vec<f64>,
    #[serde(rename = "Omega")]
    pub omega: Vec<f64>,
}

impl PhysicalParams {
    pub fn new(omega_a: f64, e_q: Vec<f64>, omega: Vec<f64>) -> Result<Self> {
        let p = Self { omega_a, e_q, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.omega.len();
        if n < 2 {
            return Err(Error::Parameter(format!("need at least 2 qubits, got {n}")));
        }
        if self.e_q.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.e_q.len() });
        }
        if !self.omega_a.is_finite() || self.e_q.iter().any(|e| !e.is_finite()) {
            return Err(Error::Parameter("frequencies must be finite".into()));
        }
        if let Some(w) = self.omega.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Parameter(format!("Rabi frequencies must be positive, got {w}")));
        }
        let deltas = self.detunings();
        if deltas.iter().any(|&d| d == 0.0) {
            return Err(Error::Parameter("a qubit is resonant with the cavity (zero detuning)".into()));
        }
        let positive = deltas[0] > 0.0;
        if deltas.iter().any(|&d| (d > 0.0) != positive) {
            return Err(Error::Parameter("detunings must all share one sign".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.omega.len()
    }

    /// `delta_i = omega_a - E_q,i`.
    pub fn detunings(&self) -> Vec<f64> {
        self.e_q.iter().map(|e| self.omega_a - e).collect()
    }

    /// `max_i Omega_i / |delta_i|`.
    pub fn dispersive_ratio(&self) -> f64 {
        self.omega.iter().zip(self.detunings()).map(|(w, d)| w / d.abs()).fold(0.0, f64::max)
    }

    pub fn dispersive_warning(&self) -> bool {
        self.dispersive_ratio() > DISPERSIVE_WARNING_RATIO
    }

    /// Parameters with a common detuning whose couplings `Omega_i Omega_j / 2 delta`
    /// follow the pattern `weights_i weights_j`, the largest coupling equals
    /// `x`, and `max_i Omega_i / delta = ratio`.
    ///
    /// The cavity frequency is placed at `10 delta`; only detunings enter the dynamics.
    pub fn dispersive_realization(weights: &[f64], ratio: f64, x: f64) -> Result<Self> {
        if weights.len() < 2 || weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Parameter("weights must be positive and at least two".into()));
        }
        if !(ratio > 0.0) || !(x > 0.0) {
            return Err(Error::Parameter("ratio and coupling must be positive".into()));
        }
        let w_max = weights.iter().cloned().fold(0.0, f64::max);
        let mut p_max: f64 = 0.0;
        for (i, wi) in weights.iter().enumerate() {
            for wj in &weights[i + 1..] {
                p_max = p_max.max(wi * wj);
            }
        }
        // x = p_max s^2 / (2 delta) with delta = w_max s / ratio
        let s = 2.0 * x * w_max / (p_max * ratio);
        let delta = w_max * s / ratio;
        let omega_a = 10.0 * delta;
        Self::new(omega_a, vec![omega_a - delta; weights.len()], weights.iter().map(|w| w * s).collect())
    }

    /// Same effective couplings with `Omega/delta` reduced by `factor`
    /// (`delta -> factor^2 delta`, `Omega -> factor Omega`).
    pub fn deepen_dispersive(&self, factor: f64) -> Result<Self> {
        let deltas = self.detunings();
        Self::new(
            self.omega_a,
            deltas.iter().map(|d| self.omega_a - d * factor * factor).collect(),
            self.omega.iter().map(|w| w * factor).collect(),
        )
    }
}

/// Symmetric, zero-diagonal matrix of XY couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    n: usize,
    j: Vec<f64>,
}

impl CouplingMatrix {
    /// Validates symmetry (relative tolerance `1e-12`) and a zero diagonal,
    /// then stores the exactly symmetrized matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::Parameter(format!("need at least 2 qubits, got {n}")));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: r.len() });
        }
        let scale = rows.iter().flatten().map(|v| v.abs()).fold(1.0, f64::max);
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("couplings must be finite".into()));
        }
        let mut j = vec![0.0; n * n];
        for a in 0..n {
            if rows[a][a] != 0.0 {
                return Err(Error::Parameter(format!("coupling diagonal must be zero, J[{a}][{a}] = {}", rows[a][a])));
            }
            for b in (a + 1)..n {
                if (rows[a][b] - rows[b][a]).abs() > 1e-12 * scale {
                    return Err(Error::Parameter(format!("coupling matrix not symmetric at ({a}, {b})")));
                }
                let v = 0.5 * (rows[a][b] + rows[b][a]);
                j[a * n + b] = v;
                j[b * n + a] = v;
            }
        }
        Ok(Self { n, j })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let rows: Vec<Vec<f64>> =
            (0..n).map(|a| (0..n).map(|b| if a == b { 0.0 } else { f(a.min(b), a.max(b)) }).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Coupling between qubits `a` and `b` (0-based).
    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.j[a * self.n + b]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.j.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.j.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, j: self.j.iter().map(|v| v * s).collect() }
    }

    /// Couplings in units of the largest one, together with that unit.
    pub fn normalized(&self) -> (Self, f64) {
        let x = self.max_abs();
        if x == 0.0 {
            return (self.clone(), 1.0);
        }
        (self.scaled(1.0 / x), x)
    }

    /// Applies a site permutation: `out[p[a]][p[b]] = J[a][b]`.
    pub fn permuted(&self, p: &[usize]) -> Self {
        let mut j = vec![0.0; self.n * self.n];
        for a in 0..self.n {
            for b in 0..self.n {
                j[p[a] * self.n + p[b]] = self.get(a, b);
            }
        }
        Self { n: self.n, j }
    }
}

fn one() -> f64 {
    1.0
}

/// Network topology in dimensionless form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    /// Every pair coupled with strength `x`.
    Cluster {
        #[serde(default = "one")]
        x: f64,
    },
    /// Sender-receiver link weakened to `x / f`.
    ///
    /// Couplings are those of the Rabi pattern `(1, f, ..., f, 1)`: `x` between an
    /// end qubit and an inner one, `f x` among inner qubits and `x / f` between
    /// the two ends. For three qubits this is the chain `x_12 = x_23 = x`,
    /// `x_13 = x / f`.
    Engineered {
        #[serde(default = "one")]
        x: f64,
        f: f64,
    },
    Custom {
        #[serde(rename = "J")]
        j: Vec<Vec<f64>>,
    },
}

impl TopologySpec {
    pub fn reference_coupling(&self) -> f64 {
        match self {
            Self::Cluster { x } | Self::Engineered { x, .. } => *x,
            Self::Custom { j } => j.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max),
        }
    }

    /// Relative Rabi frequencies that realize the topology through
    /// `Omega_i Omega_j / 2 delta`; `None` for a custom matrix.
    pub fn rabi_weights(&self, n: usize) -> Option<Vec<f64>> {
        match self {
            Self::Cluster { .. } => Some(vec![1.0; n]),
            Self::Engineered { f, .. } => {
                let mut w = vec![*f; n];
                w[0] = 1.0;
                w[n - 1] = 1.0;
                Some(w)
            }
            Self::Custom { .. } => None,
        }
    }
}

/// Builds the coupling matrix described by `spec` for `n` qubits.
pub fn topology_to_couplings(spec: &TopologySpec, n: usize) -> Result<CouplingMatrix> {
    if n < 2 {
        return Err(Error::Parameter(format!("need at least 2 qubits, got {n}")));
    }
    match spec {
        TopologySpec::Cluster { x } => CouplingMatrix::from_fn(n, |_, _| *x),
        TopologySpec::Engineered { x, f } => {
            if !(*f > 1.0) {
                return Err(Error::Parameter(format!("f must exceed 1, got {f}")));
            }
            let w = spec.rabi_weights(n).expect("engineered weights");
            CouplingMatrix::from_fn(n, |a, b| x * w[a] * w[b] / f)
        }
        TopologySpec::Custom { j } => {
            if j.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: j.len() });
            }
            CouplingMatrix::from_rows(j)
        }
    }
}

/// A qubit pair left uncoupled because its detunings differ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncoupledPair {
    pub i: usize,
    pub j: usize,
    pub delta_i: f64,
    pub delta_j: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveCouplings {
    pub couplings: CouplingMatrix,
    pub uncoupled: Vec<UncoupledPair>,
    pub dispersive_ratio: f64,
    pub dispersive_warning: bool,
}

/// Adiabatic-elimination couplings `x_ij = Omega_i Omega_j / 2 delta`.
///
/// Pairs whose detunings differ by more than `tolerance` (relative) stay
/// uncoupled and are listed in the report. Coupled pairs use the mean of
/// their two detunings.
pub fn effective_couplings(params: &PhysicalParams, tolerance: f64) -> Result<EffectiveCouplings> {
    params.validate()?;
    let n = params.n();
    let deltas = params.detunings();
    let mut rows = vec![vec![0.0; n]; n];
    let mut uncoupled = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let (da, db) = (deltas[a], deltas[b]);
            let spread = (da - db).abs() / da.abs().max(db.abs());
            if spread > tolerance {
                uncoupled.push(UncoupledPair { i: a, j: b, delta_i: da, delta_j: db });
                continue;
            }
            let delta = 0.5 * (da + db);
            let v = params.omega[a] * params.omega[b] / (2.0 * delta);
            rows[a][b] = v;
            rows[b][a] = v;
        }
    }
    Ok(EffectiveCouplings {
        couplings: CouplingMatrix::from_rows(&rows)?,
        uncoupled,
        dispersive_ratio: params.dispersive_ratio(),
        dispersive_warning: params.dispersive_warning(),
    })
}

/// `N x N` hopping matrix in the basis `{|1>, ..., |N>}` of single excitations.
pub fn single_excitation_hamiltonian(j: &CouplingMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(j.n(), j.n(), |a, b| C64::new(j.get(a, b), 0.0))
}

/// Hamiltonian restricted to the states with `ell` excited qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorHamiltonian {
    pub ell: usize,
    /// Excitation patterns as bit masks (bit `a` set when qubit `a`, 0-based, is excited).
    pub configurations: Vec<u64>,
    pub matrix: ComplexMatrix,
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// All `ell`-subsets of `0..n` in lexicographic order of their sorted site lists.
fn combinations(n: usize, ell: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(binomial(n, ell));
    let mut idx: Vec<usize> = (0..ell).collect();
    loop {
        out.push(idx.iter().fold(0u64, |m, &a| m | (1 << a)));
        let Some(pos) = (0..ell).rev().find(|&p| idx[p] != p + n - ell) else {
            break;
        };
        idx[pos] += 1;
        for q in (pos + 1)..ell {
            idx[q] = idx[q - 1] + 1;
        }
    }
    out
}

pub fn sector_hamiltonian(j: &CouplingMatrix, ell: usize) -> Result<SectorHamiltonian> {
    sector_hamiltonian_with_cap(j, ell, DEFAULT_SECTOR_CAP)
}

/// Sector Hamiltonian with an explicit dimension cap.
///
/// Basis states are ordered lexicographically by their sorted lists of excited
/// sites, so `ell = 1` reproduces [`single_excitation_hamiltonian`].
pub fn sector_hamiltonian_with_cap(j: &CouplingMatrix, ell: usize, cap: usize) -> Result<SectorHamiltonian> {
    let n = j.n();
    if ell > n {
        return Err(Error::Parameter(format!("excitation count {ell} exceeds qubit count {n}")));
    }
    if n > 63 {
        return Err(Error::Parameter("sector builder supports at most 63 qubits".into()));
    }
    let dim = binomial(n, ell);
    if dim > cap {
        return Err(Error::SectorTooLarge { n, ell, dim, cap });
    }
    let configurations = combinations(n, ell);
    let index: HashMap<u64, usize> = configurations.iter().enumerate().map(|(k, &m)| (m, k)).collect();
    let mut matrix = ComplexMatrix::zeros(dim, dim);
    for (row, &mask) in configurations.iter().enumerate() {
        for a in (0..n).filter(|&a| mask & (1 << a) != 0) {
            for b in (0..n).filter(|&b| mask & (1 << b) == 0) {
                let target = (mask & !(1 << a)) | (1 << b);
                matrix[(index[&target], row)] = C64::new(j.get(a, b), 0.0);
            }
        }
    }
    Ok(SectorHamiltonian { ell, configurations, matrix })
}

/// Hamiltonian on the whole `2^N` register; basis index bit `a` is set when
/// qubit `a` (0-based) is excited.
pub fn full_register_hamiltonian(j: &CouplingMatrix) -> Result<ComplexMatrix> {
    let n = j.n();
    if n > MAX_FULL_REGISTER_QUBITS {
        return Err(Error::Parameter(format!("full register limited to {MAX_FULL_REGISTER_QUBITS} qubits, got {n}")));
    }
    let dim = 1usize << n;
    let mut h = ComplexMatrix::zeros(dim, dim);
    for state in 0..dim {
        for a in 0..n {
            for b in 0..n {
                if state & (1 << a) != 0 && state & (1 << b) == 0 {
                    let target = (state & !(1 << a)) | (1 << b);
                    h[(target, state)] += C64::new(j.get(a, b), 0.0);
                }
            }
        }
    }
    Ok(h)
}

/// Conversion between physical time/rates and the dimensionless frame
/// `tau = x t` with `x` the reference coupling (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Units {
    pub reference_coupling: f64,
}

impl Units {
    pub fn new(reference_coupling: f64) -> Result<Self> {
        if !(reference_coupling > 0.0) || !reference_coupling.is_finite() {
            return Err(Error::Parameter(format!("reference coupling must be positive, got {reference_coupling}")));
        }
        Ok(Self { reference_coupling })
    }

    pub fn tau(&self, time: f64) -> f64 {
        self.reference_coupling * time
    }

    pub fn time(&self, tau: f64) -> f64 {
        tau / self.reference_coupling
    }

    pub fn dimensionless_rate(&self, rate: f64) -> f64 {
        rate / self.reference_coupling
    }
}
