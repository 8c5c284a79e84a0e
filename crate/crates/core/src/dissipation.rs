//! GKSL master-equation evolution.
//!
//! `drho/dt = -i[H, rho] + sum_c rate_c (C rho C^dag - {C^dag C, rho}/2)`,
//! integrated with fixed-step RK4 and checked against a step-halved rerun.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{CouplingMatrix, PhysicalParams};
use crate::numerics::{herm_eig, rk4_step, ComplexMatrix};
use crate::C64;

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const MIN_EIGENVALUE_TOL: f64 = -1e-8;
/// Largest accepted trace distance between a run and its step-halved rerun.
pub const HALVING_TOL: f64 = 1e-6;
/// `step * max(rate scale) <= STEP_BUDGET` is required before integrating.
pub const STEP_BUDGET: f64 = 0.05;

/// Validated density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let rho = Self { m };
        rho.check()?;
        Ok(rho)
    }

    pub fn pure(psi: &[C64]) -> Result<Self> {
        Self::new(ComplexMatrix::outer(psi, psi))
    }

    /// Projector onto basis state `k`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: k + 1 });
        }
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(k, k)] = C64::new(1.0, 0.0);
        Ok(Self { m })
    }

    fn check(&self) -> Result<()> {
        if !self.m.is_square() {
            return Err(Error::DimensionMismatch { expected: self.m.rows(), found: self.m.cols() });
        }
        if !self.m.is_finite() {
            return Err(Error::NonFinite("density matrix".into()));
        }
        let herm = self.m.hermitian_deviation();
        if herm > HERMITIAN_TOL {
            return Err(Error::Consistency(format!("density matrix not Hermitian (deviation {herm})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::Consistency(format!("density matrix trace {tr}")));
        }
        let min = self.min_eigenvalue()?;
        if min < MIN_EIGENVALUE_TOL {
            return Err(Error::Consistency(format!("density matrix eigenvalue {min}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.m.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn population(&self, k: usize) -> f64 {
        self.m[(k, k)].re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(herm_eig(&hermitian_part(&self.m))?.eigenvalues()[0])
    }

    /// `||rho - sigma||_1 / 2`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let diff = &self.m - &other.m;
        Ok(0.5 * herm_eig(&hermitian_part(&diff))?.eigenvalues().iter().map(|e| e.abs()).sum::<f64>())
    }
}

fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows();
    ComplexMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()))
}

/// Decay and dephasing rates, in the same units as the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LindbladParams {
    /// Cavity energy decay rate.
    #[serde(default)]
    pub kappa: f64,
    /// Per-qubit relaxation rate `1/T1`.
    #[serde(default)]
    pub gamma_relax: f64,
    /// Per-qubit pure dephasing rate `1/T_phi`.
    #[serde(default)]
    pub gamma_phi: f64,
}

impl LindbladParams {
    pub fn new(kappa: f64, gamma_relax: f64, gamma_phi: f64) -> Result<Self> {
        let p = Self { kappa, gamma_relax, gamma_phi };
        p.validate()?;
        Ok(p)
    }

    /// Rates from a relaxation time and a dephasing time (no cavity decay).
    pub fn from_times(t_relax: f64, t_phi: f64) -> Result<Self> {
        if !(t_relax > 0.0) || !(t_phi > 0.0) {
            return Err(Error::Parameter("lifetimes must be positive".into()));
        }
        Self::new(0.0, 1.0 / t_relax, 1.0 / t_phi)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("kappa", self.kappa), ("gamma_relax", self.gamma_relax), ("gamma_phi", self.gamma_phi)] {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::Parameter(format!("{name} must be a non-negative rate, got {r}")));
            }
        }
        Ok(())
    }

    /// All rates divided by `unit` (e.g. the reference coupling).
    pub fn scaled(&self, unit: f64) -> Self {
        Self { kappa: self.kappa / unit, gamma_relax: self.gamma_relax / unit, gamma_phi: self.gamma_phi / unit }
    }

    pub fn is_zero(&self) -> bool {
        self.kappa == 0.0 && self.gamma_relax == 0.0 && self.gamma_phi == 0.0
    }
}

/// Jump operator `C` with its rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseOperator {
    pub label: String,
    pub rate: f64,
    pub op: ComplexMatrix,
}

impl CollapseOperator {
    pub fn new(label: impl Into<String>, rate: f64, op: ComplexMatrix) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::Parameter(format!("collapse rate must be non-negative, got {rate}")));
        }
        if !op.is_square() {
            return Err(Error::DimensionMismatch { expected: op.rows(), found: op.cols() });
        }
        Ok(Self { label: label.into(), rate, op })
    }
}

fn lowering(dim: usize, from: usize, to: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    m[(to, from)] = C64::new(1.0, 0.0);
    m
}

fn sigma_z(dim: usize, excited: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |i, j| match (i == j, i == excited) {
        (true, true) => C64::new(1.0, 0.0),
        (true, false) => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 0.0),
    })
}

fn qubit_operators(dim: usize, n: usize, rates: &LindbladParams) -> Vec<CollapseOperator> {
    let mut ops = Vec::new();
    for i in 1..=n {
        if rates.gamma_relax > 0.0 {
            ops.push(CollapseOperator { label: format!("sigma_minus_{i}"), rate: rates.gamma_relax, op: lowering(dim, i, 0) });
        }
        if rates.gamma_phi > 0.0 {
            ops.push(CollapseOperator { label: format!("sigma_z_{i}"), rate: 0.5 * rates.gamma_phi, op: sigma_z(dim, i) });
        }
    }
    ops
}

/// Hamiltonian on `[|0>, |1>, ..., |N>]`: the hopping block plus a zero-energy vacuum.
pub fn effective_open_hamiltonian(j: &CouplingMatrix) -> ComplexMatrix {
    let n = j.n();
    ComplexMatrix::from_fn(n + 1, n + 1, |a, b| {
        if a == 0 || b == 0 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(j.get(a - 1, b - 1), 0.0)
        }
    })
}

/// `sigma_i^-` (rate `gamma_relax`) and `sigma_i^z` (rate `gamma_phi/2`) on the
/// `(N+1)`-dimensional space `[|0>, |1>, ..., |N>]`. Cavity decay is ignored.
pub fn effective_collapse_operators(n: usize, rates: &LindbladParams) -> Result<Vec<CollapseOperator>> {
    rates.validate()?;
    Ok(qubit_operators(n + 1, n, rates))
}

/// Qubit operators plus the photon annihilation `a` (rate `kappa`) on the
/// `(N+2)`-dimensional sector of the full model.
pub fn full_sector_collapse_operators(n: usize, rates: &LindbladParams) -> Result<Vec<CollapseOperator>> {
    rates.validate()?;
    let dim = n + 2;
    let mut ops = qubit_operators(dim, n, rates);
    if rates.kappa > 0.0 {
        ops.push(CollapseOperator { label: "a".into(), rate: rates.kappa, op: lowering(dim, n + 1, 0) });
    }
    Ok(ops)
}

/// Generator prepared for repeated application: the anticommutator terms are
/// folded into `H_eff = H - (i/2) sum rate C^dag C`, jumps are kept sparse.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    h_eff: ComplexMatrix,
    jumps: Vec<(f64, Vec<(usize, usize, C64)>)>,
    rate_scale: f64,
}

impl Liouvillian {
    pub fn new(h: &ComplexMatrix, ops: &[CollapseOperator]) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::DimensionMismatch { expected: h.rows(), found: h.cols() });
        }
        h.ensure_hermitian()?;
        let dim = h.rows();
        let mut h_eff = h.clone();
        let mut jumps = Vec::new();
        let mut dissipative_scale = 0.0;
        for c in ops {
            if c.op.rows() != dim || c.op.cols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.op.rows() });
            }
            if c.rate == 0.0 {
                continue;
            }
            let cdc = c.op.adjoint().matmul(&c.op)?;
            h_eff = &h_eff - &cdc.scale(C64::new(0.0, 0.5 * c.rate));
            let mut nz = Vec::new();
            for i in 0..dim {
                for j in 0..dim {
                    if c.op[(i, j)] != C64::new(0.0, 0.0) {
                        nz.push((i, j, c.op[(i, j)]));
                    }
                }
            }
            dissipative_scale += c.rate * cdc.max_abs();
            jumps.push((c.rate, nz));
        }
        // Gershgorin bound on the Hamiltonian spectrum
        let h_scale = (0..dim).map(|i| (0..dim).map(|j| h[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
        Ok(Self { dim, h_eff, jumps, rate_scale: h_scale.max(dissipative_scale) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest frequency or rate the integrator must resolve.
    pub fn rate_scale(&self) -> f64 {
        self.rate_scale
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim;
        if rho.rows() != n || rho.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: rho.rows() });
        }
        let h = self.h_eff.as_slice();
        let r = rho.as_slice();
        let mut out = ComplexMatrix::zeros(n, n);
        let o = out.as_mut_slice();
        let minus_i = C64::new(0.0, -1.0);
        // -i (H_eff rho - rho H_eff^dag)
        for a in 0..n {
            for b in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += h[a * n + k] * r[k * n + b] - r[a * n + k] * h[b * n + k].conj();
                }
                o[a * n + b] = minus_i * acc;
            }
        }
        for (rate, nz) in &self.jumps {
            for &(a, i, ca) in nz {
                for &(b, j, cb) in nz {
                    o[a * n + b] += ca * r[i * n + j] * cb.conj() * *rate;
                }
            }
        }
        Ok(out)
    }
}

/// Right-hand side of the master equation.
pub fn lindblad_rhs(rho: &DensityMatrix, h: &ComplexMatrix, ops: &[CollapseOperator]) -> Result<ComplexMatrix> {
    Liouvillian::new(h, ops)?.apply(rho.matrix())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub rho: DensityMatrix,
    pub trace: f64,
    pub purity: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterTrace {
    pub snapshots: Vec<Snapshot>,
    pub step: f64,
    /// Largest trace distance to the step-halved rerun.
    pub halving_distance: f64,
}

impl MasterTrace {
    /// `<k|rho(t)|k>` at every snapshot.
    pub fn populations(&self, k: usize) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.rho.population(k)).collect()
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Parameter("time grid must be non-empty and finite".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("time grid must be strictly ascending".into()));
    }
    Ok(())
}

/// One RK4 pass; each grid interval is split into equal sub-steps no longer than `step`.
fn integrate(liou: &Liouvillian, rho0: &DensityMatrix, t_grid: &[f64], step: f64) -> Result<Vec<Snapshot>> {
    let rhs = |_t: f64, y: &ComplexMatrix| liou.apply(y);
    let mut y = rho0.matrix().clone();
    let mut out = Vec::with_capacity(t_grid.len());
    let mut t = t_grid[0];
    for (k, &target) in t_grid.iter().enumerate() {
        if k > 0 {
            let sub = ((target - t) / step).ceil().max(1.0) as usize;
            let h = (target - t) / sub as f64;
            for s in 0..sub {
                y = rk4_step(rhs, t + s as f64 * h, &y, h).map_err(|e| Error::Integration {
                    time: t + s as f64 * h,
                    reason: e.to_string(),
                })?;
            }
            t = target;
        }
        let rho = DensityMatrix { m: y.clone() };
        let min_eig = rho.min_eigenvalue()?;
        let snapshot = Snapshot { t, trace: rho.trace(), purity: rho.purity(), min_eig, rho };
        validate_snapshot(&snapshot)?;
        out.push(snapshot);
    }
    Ok(out)
}

fn validate_snapshot(s: &Snapshot) -> Result<()> {
    let fail = |reason: String| Err(Error::Integration { time: s.t, reason });
    if !s.rho.matrix().is_finite() {
        return fail("non-finite density matrix".into());
    }
    if (s.trace - 1.0).abs() > TRACE_TOL {
        return fail(format!("trace drifted to {}", s.trace));
    }
    let herm = s.rho.matrix().hermitian_deviation();
    if herm > HERMITIAN_TOL {
        return fail(format!("hermiticity lost (deviation {herm})"));
    }
    if s.min_eig < MIN_EIGENVALUE_TOL {
        return fail(format!("negative eigenvalue {}", s.min_eig));
    }
    Ok(())
}

/// Fixed-step RK4 trajectory without the halving check.
pub fn evolve_fixed_step(
    rho0: &DensityMatrix,
    h: &ComplexMatrix,
    ops: &[CollapseOperator],
    t_grid: &[f64],
    step: f64,
) -> Result<Vec<Snapshot>> {
    check_grid(t_grid)?;
    let liou = Liouvillian::new(h, ops)?;
    if rho0.dim() != liou.dim() {
        return Err(Error::DimensionMismatch { expected: liou.dim(), found: rho0.dim() });
    }
    let required = STEP_BUDGET / liou.rate_scale().max(f64::MIN_POSITIVE);
    if !(step > 0.0) || step > required {
        return Err(Error::Resolution { step, required });
    }
    integrate(&liou, rho0, t_grid, step)
}

/// Trajectory on `t_grid` (starting from `rho0` at `t_grid[0]`), verified
/// against a rerun at half the step.
pub fn evolve_master_equation(
    rho0: &DensityMatrix,
    h: &ComplexMatrix,
    ops: &[CollapseOperator],
    t_grid: &[f64],
    step: f64,
) -> Result<MasterTrace> {
    let coarse = evolve_fixed_step(rho0, h, ops, t_grid, step)?;
    let liou = Liouvillian::new(h, ops)?;
    let fine = integrate(&liou, rho0, t_grid, 0.5 * step)?;
    let mut halving_distance: f64 = 0.0;
    for (a, b) in coarse.iter().zip(&fine) {
        let d = a.rho.trace_distance(&b.rho)?;
        if d > HALVING_TOL {
            return Err(Error::Integration {
                time: a.t,
                reason: format!("step-halving disagreement {d:.3e} exceeds {HALVING_TOL:.0e}; reduce the step"),
            });
        }
        halving_distance = halving_distance.max(d);
    }
    Ok(MasterTrace { snapshots: coarse, step, halving_distance })
}

/// Purcell-limited lifetime estimate `(delta/Omega)^2 / kappa`, `kappa = omega_a / Q`,
/// for the most strongly coupled qubit. Order-of-magnitude only.
pub fn purcell_lifetime(params: &PhysicalParams, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::Parameter(format!("quality factor must be positive, got {q}")));
    }
    let kappa = params.omega_a / q;
    let ratio = params.dispersive_ratio();
    Ok(1.0 / (ratio * ratio * kappa))
}
