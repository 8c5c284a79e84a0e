//! Transfer amplitudes, receiver states and fidelities in the single-excitation
//! sector.
//!
//! Sites are labelled `1..=N` in this module. The sender starts in
//! `beta|-> + gamma|+>` with every other qubit in `|->`; because `|0>` (no
//! excitation) is an eigenstate of energy zero, everything about the receiver
//! follows from the single amplitude `a = <j|U(t)|from>`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, SpectralDecomposition};

/// Best average fidelity of a measure-and-prepare (classical) channel.
pub const CLASSICAL_BOUND: f64 = 2.0 / 3.0;
/// Minimum number of grid points per fast period required by [`oscillation_metrics`].
pub const POINTS_PER_FAST_PERIOD: f64 = 20.0;

const NORM_TOL: f64 = 1e-12;

/// Sender state `beta|-> + gamma|+>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputState {
    beta: C64,
    gamma: C64,
}

impl InputState {
    pub fn new(beta: C64, gamma: C64) -> Result<Self> {
        let norm = beta.norm_sqr() + gamma.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Parameter(format!("input state norm {norm} differs from 1")));
        }
        Ok(Self { beta, gamma })
    }

    /// The state `|+>` (`beta = 0`, `gamma = 1`).
    pub fn excited() -> Self {
        Self { beta: C64::new(0.0, 0.0), gamma: C64::new(1.0, 0.0) }
    }

    /// Point `(theta, phi)` on the Bloch sphere, `theta = 0` at `|->`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        Self { beta: C64::new((theta / 2.0).cos(), 0.0), gamma: C64::from_polar((theta / 2.0).sin(), phi) }
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    pub fn gamma(&self) -> C64 {
        self.gamma
    }
}

/// Reduced 2x2 state of the receiving qubit over `{|->, |+>}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverState {
    /// `rho[0][0] = <-|rho|->`, `rho[1][1] = <+|rho|+>`.
    pub rho: [[C64; 2]; 2],
}

impl ReceiverState {
    pub fn matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |i, j| self.rho[i][j])
    }

    pub fn excited_population(&self) -> f64 {
        self.rho[1][1].re
    }

    /// Eigenvalues of the 2x2 Hermitian matrix, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let (a, d) = (self.rho[0][0].re, self.rho[1][1].re);
        let b = self.rho[0][1].norm();
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - r, mean + r]
    }

    /// Hermitian, unit trace and positive semidefinite within `1e-12`.
    pub fn is_valid(&self) -> bool {
        let herm = (self.rho[0][1] - self.rho[1][0].conj()).norm() <= NORM_TOL
            && self.rho[0][0].im.abs() <= NORM_TOL
            && self.rho[1][1].im.abs() <= NORM_TOL;
        let trace = (self.rho[0][0].re + self.rho[1][1].re - 1.0).abs() <= NORM_TOL;
        herm && trace && self.eigenvalues()[0] >= -NORM_TOL
    }
}

fn check_site(site: usize, n: usize) -> Result<usize> {
    if site == 0 || site > n {
        return Err(Error::SiteOutOfRange { site, n });
    }
    Ok(site - 1)
}

/// `<to|U(t)|from> = sum_k exp(-i e_k t) <to|v_k><v_k|from>` with 1-based sites.
pub fn transition_amplitude(decomp: &SpectralDecomposition, from: usize, to: usize, t: f64) -> Result<C64> {
    let n = decomp.dim();
    let (a, b) = (check_site(from, n)?, check_site(to, n)?);
    Ok(decomp.propagator_element(a, b, t))
}

/// Receiver state for transfer amplitude `a`:
/// `rho_++ = |gamma|^2 |a|^2`, `rho_+- = gamma a conj(beta)`, `rho_-- = 1 - rho_++`.
pub fn receiver_state(a: C64, input: &InputState) -> Result<ReceiverState> {
    if a.norm() > 1.0 + NORM_TOL {
        return Err(Error::Consistency(format!("transfer amplitude modulus {} exceeds 1", a.norm())));
    }
    let excited = input.gamma.norm_sqr() * a.norm_sqr();
    let coherence = input.gamma * a * input.beta.conj();
    Ok(ReceiverState {
        rho: [[C64::new(1.0 - excited, 0.0), coherence.conj()], [coherence, C64::new(excited, 0.0)]],
    })
}

/// Overlap `<psi|rho|psi>` with `psi = beta|-> + gamma|+>`.
pub fn fidelity(input: &InputState, state: &ReceiverState) -> f64 {
    let psi = [input.beta, input.gamma];
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            acc += psi[i].conj() * state.rho[i][j] * psi[j];
        }
    }
    acc.re.clamp(0.0, 1.0)
}

/// How the Bloch-sphere average treats the phase of the transfer amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityMode {
    /// The receiver is read out as is.
    #[default]
    Raw,
    /// A known local `z` rotation at the receiver removes `arg(a)`.
    PhaseOptimized,
}

/// Fidelity averaged uniformly over input states on the Bloch sphere.
///
/// Raw: `1/2 + |a|^2/6 + Re(a)/3`; phase optimized: `1/2 + |a|^2/6 + |a|/3`.
pub fn average_fidelity(a: C64, mode: FidelityMode) -> f64 {
    let coherent = match mode {
        FidelityMode::Raw => a.re,
        FidelityMode::PhaseOptimized => a.norm(),
    };
    (0.5 + a.norm_sqr() / 6.0 + coherent / 3.0).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub tau: f64,
    pub amplitude: C64,
    /// `F(0,1) = |a|^2`.
    pub f01: f64,
    pub fbar_raw: f64,
    pub fbar_phase_optimized: f64,
}

/// Time series of a `from -> receiver` transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferTrace {
    pub from: usize,
    pub receiver: usize,
    pub mode: FidelityMode,
    pub points: Vec<TracePoint>,
}

impl TransferTrace {
    pub fn taus(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.tau).collect()
    }

    /// Averaged fidelity in the trace's selected mode.
    pub fn fbar(&self, k: usize) -> f64 {
        let p = &self.points[k];
        match self.mode {
            FidelityMode::Raw => p.fbar_raw,
            FidelityMode::PhaseOptimized => p.fbar_phase_optimized,
        }
    }

    /// Whether the averaged fidelity at point `k` beats the classical bound.
    pub fn above_classical(&self, k: usize) -> bool {
        self.fbar(k) > CLASSICAL_BOUND
    }

    /// `(tau, F01)` at the largest `F(0,1)`; earliest on ties.
    pub fn peak_f01(&self) -> Option<(f64, f64)> {
        self.points.iter().fold(None, |best: Option<(f64, f64)>, p| match best {
            Some((_, f)) if f >= p.f01 => best,
            _ => Some((p.tau, p.f01)),
        })
    }

    /// `(tau, Fbar)` at the largest averaged fidelity in the selected mode.
    pub fn peak_fbar(&self) -> Option<(f64, f64)> {
        (0..self.points.len()).fold(None, |best: Option<(f64, f64)>, k| match best {
            Some((_, f)) if f >= self.fbar(k) => best,
            _ => Some((self.points[k].tau, self.fbar(k))),
        })
    }

    /// Times where the averaged fidelity crosses the classical bound, linearly
    /// interpolated between the two grid points whose labels differ.
    pub fn classical_crossings(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for k in 1..self.points.len() {
            if self.above_classical(k) != self.above_classical(k - 1) {
                let (t0, t1) = (self.points[k - 1].tau, self.points[k].tau);
                let (f0, f1) = (self.fbar(k - 1), self.fbar(k));
                let s = if f1 != f0 { (CLASSICAL_BOUND - f0) / (f1 - f0) } else { 0.5 };
                out.push(t0 + s.clamp(0.0, 1.0) * (t1 - t0));
            }
        }
        out
    }
}

/// `steps + 1` equally spaced times covering `[0, tau_max]`.
pub fn uniform_grid(tau_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 1 || !(tau_max > 0.0) || !tau_max.is_finite() {
        return Err(Error::Parameter(format!("invalid grid: tau_max = {tau_max}, steps = {steps}")));
    }
    Ok((0..=steps).map(|k| tau_max * k as f64 / steps as f64).collect())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Parameter("empty time grid".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Parameter("time grid contains non-finite values".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("time grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Amplitude and fidelities at every grid time for `from -> to`.
pub fn transfer_trace(
    decomp: &SpectralDecomposition,
    from: usize,
    to: usize,
    grid: &[f64],
    mode: FidelityMode,
) -> Result<TransferTrace> {
    check_grid(grid)?;
    let n = decomp.dim();
    check_site(from, n)?;
    check_site(to, n)?;
    let points = grid
        .iter()
        .map(|&tau| {
            let a = transition_amplitude(decomp, from, to, tau)?;
            Ok(TracePoint {
                tau,
                amplitude: a,
                f01: a.norm_sqr().min(1.0),
                fbar_raw: average_fidelity(a, FidelityMode::Raw),
                fbar_phase_optimized: average_fidelity(a, FidelityMode::PhaseOptimized),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransferTrace { from, receiver: to, mode, points })
}

/// Transfer from qubit 1 to an intermediate (or the last) qubit `j`.
pub fn intermediate_transfer(
    decomp: &SpectralDecomposition,
    j: usize,
    grid: &[f64],
    mode: FidelityMode,
) -> Result<TransferTrace> {
    let n = decomp.dim();
    if j < 2 || j > n {
        return Err(Error::SiteOutOfRange { site: j, n });
    }
    transfer_trace(decomp, 1, j, grid, mode)
}

/// Period `2 pi / (e_max - e_min)` over the eigenvalues that contribute to
/// `<to|U|from>`; `None` if fewer than two contribute.
pub fn fast_period(decomp: &SpectralDecomposition, from: usize, to: usize) -> Result<Option<f64>> {
    let n = decomp.dim();
    let (a, b) = (check_site(from, n)?, check_site(to, n)?);
    let v = decomp.eigenvectors();
    let contributing: Vec<f64> = decomp
        .multiplets()
        .into_iter()
        .filter(|group| group.iter().map(|&k| v[(b, k)] * v[(a, k)].conj()).sum::<C64>().norm() > 1e-10)
        .map(|group| decomp.eigenvalues()[group[0]])
        .collect();
    let (lo, hi) = contributing.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &e| (l.min(e), h.max(e)));
    Ok((contributing.len() >= 2 && hi > lo).then(|| 2.0 * PI / (hi - lo)))
}

/// Midpoint and semi-amplitude of the fast oscillations of `F(0,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationMetrics {
    /// `(max + min) / 2` inside the window.
    pub f_m: f64,
    /// `(max - min) / 2` inside the window.
    pub amplitude: f64,
    /// Crest of the smoothed envelope.
    pub envelope_peak: f64,
    pub window: (f64, f64),
}

/// Locates the crest of the slow envelope of `F(0,1)` and measures the fast
/// oscillation around it.
///
/// The envelope is a moving average over one `fast_period`; only centres whose
/// full averaging window fits inside the trace are considered. The fidelity
/// extremes are then taken over one fast period centred on the crest.
pub fn oscillation_metrics(trace: &TransferTrace, fast_period: f64) -> Result<OscillationMetrics> {
    if !(fast_period > 0.0) || !fast_period.is_finite() {
        return Err(Error::Parameter(format!("fast period must be positive, got {fast_period}")));
    }
    let taus = trace.taus();
    check_grid(&taus)?;
    let required = fast_period / POINTS_PER_FAST_PERIOD;
    let step = taus.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if taus.len() < 2 || step > required * (1.0 + 1e-9) {
        return Err(Error::Resolution { step, required });
    }
    let (first, last) = (taus[0], taus[taus.len() - 1]);
    let half = 0.5 * fast_period;
    if last - first < fast_period {
        return Err(Error::Parameter(format!(
            "trace spans {} but one fast period is {fast_period}",
            last - first
        )));
    }
    let values: Vec<f64> = trace.points.iter().map(|p| p.f01).collect();
    let mut prefix = vec![0.0; values.len() + 1];
    for (k, v) in values.iter().enumerate() {
        prefix[k + 1] = prefix[k] + v;
    }

    let mut best: Option<(usize, f64)> = None;
    let (mut lo, mut hi) = (0usize, 0usize);
    for (c, &tc) in taus.iter().enumerate() {
        if tc - half < first - 1e-12 || tc + half > last + 1e-12 {
            continue;
        }
        while taus[lo] < tc - half - 1e-12 {
            lo += 1;
        }
        while hi + 1 < taus.len() && taus[hi + 1] <= tc + half + 1e-12 {
            hi += 1;
        }
        let mean = (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64;
        if best.map_or(true, |(_, m)| mean > m + 1e-15) {
            best = Some((c, mean));
        }
    }
    let (crest, _) = best.expect("trace longer than one fast period has a full window");
    let tc = taus[crest];
    let (mut max, mut min) = (f64::NEG_INFINITY, f64::INFINITY);
    for (t, v) in taus.iter().zip(&values) {
        if (t - tc).abs() <= half + 1e-12 {
            max = max.max(*v);
            min = min.min(*v);
        }
    }
    Ok(OscillationMetrics { f_m: 0.5 * (max + min), amplitude: 0.5 * (max - min), envelope_peak: tc, window: (tc - half, tc + half) })
}

/// Largest `F(0,1)` inside `[lo, hi]`: a 400-point scan followed by
/// golden-section refinement around the best sample.
pub fn peak_fidelity_in(decomp: &SpectralDecomposition, from: usize, to: usize, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if !(hi > lo) {
        return Err(Error::Parameter(format!("empty search interval [{lo}, {hi}]")));
    }
    let f = |t: f64| -> Result<f64> { Ok(transition_amplitude(decomp, from, to, t)?.norm_sqr()) };
    let samples = 400;
    let h = (hi - lo) / samples as f64;
    let mut best = (lo, f(lo)?);
    for k in 1..=samples {
        let t = lo + k as f64 * h;
        let v = f(t)?;
        if v > best.1 {
            best = (t, v);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 1e-12 * (1.0 + best.0.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    let v = f(t)?;
    Ok(if v >= best.1 { (t, v) } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{single_excitation_hamiltonian, topology_to_couplings, TopologySpec};
    use crate::numerics::herm_eig;
    use crate::spectra::optimal_transfer_time;

    fn decomp(spec: TopologySpec, n: usize) -> SpectralDecomposition {
        herm_eig(&single_excitation_hamiltonian(&topology_to_couplings(&spec, n).unwrap())).unwrap()
    }

    #[test]
    fn amplitude_at_time_zero() {
        let d = decomp(TopologySpec::Engineered { x: 1.0, f: 3.0 }, 4);
        for a in 1..=4 {
            for b in 1..=4 {
                let amp = transition_amplitude(&d, a, b, 0.0).unwrap();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((amp - expected).norm() < 1e-14);
            }
        }
        assert!(matches!(transition_amplitude(&d, 0, 2, 1.0), Err(Error::SiteOutOfRange { site: 0, n: 4 })));
        assert!(transition_amplitude(&d, 1, 5, 1.0).is_err());
    }

    #[test]
    fn cluster_third_period() {
        let d = decomp(TopologySpec::Cluster { x: 1.0 }, 3);
        let a = transition_amplitude(&d, 1, 3, PI / 3.0).unwrap();
        assert!((a.norm_sqr() - 4.0 / 9.0).abs() < 1e-13);
    }

    #[test]
    fn engineered_three_qubit_at_optimal_time() {
        let d = decomp(TopologySpec::Engineered { x: 1.0, f: 10.0 }, 3);
        let a = transition_amplitude(&d, 1, 3, optimal_transfer_time(10.0).unwrap()).unwrap();
        assert!((a.norm_sqr() - 0.973).abs() < 1e-3);
    }

    #[test]
    fn receiver_state_limits() {
        let r = receiver_state(C64::new(1.0, 0.0), &InputState::excited()).unwrap();
        assert_eq!(r.rho[1][1], C64::new(1.0, 0.0));
        assert_eq!(r.rho[0][0], C64::new(0.0, 0.0));
        let input = InputState::from_bloch(1.1, 0.4);
        let r = receiver_state(C64::new(0.0, 0.0), &input).unwrap();
        assert_eq!(r.rho[0][0], C64::new(1.0, 0.0));
        assert_eq!(r.rho[0][1], C64::new(0.0, 0.0));
        assert!(receiver_state(C64::new(1.0, 1e-3), &input).is_err());
    }

    #[test]
    fn receiver_state_is_a_density_matrix() {
        for k in 0..50 {
            let a = C64::from_polar(0.02 * k as f64, 0.37 * k as f64);
            let input = InputState::from_bloch(0.13 * k as f64, 0.71 * k as f64);
            assert!(receiver_state(a, &input).unwrap().is_valid());
        }
    }

    #[test]
    fn fidelity_examples() {
        let perfect = receiver_state(C64::new(1.0, 0.0), &InputState::excited()).unwrap();
        assert!((fidelity(&InputState::excited(), &perfect) - 1.0).abs() < 1e-15);
        let a = C64::from_polar(0.898f64.sqrt(), 0.3);
        let r = receiver_state(a, &InputState::excited()).unwrap();
        assert!((fidelity(&InputState::excited(), &r) - 0.898).abs() < 1e-14);
        assert!(InputState::new(C64::new(1.0, 0.0), C64::new(0.1, 0.0)).is_err());
    }

    #[test]
    fn average_fidelity_limits() {
        for mode in [FidelityMode::Raw, FidelityMode::PhaseOptimized] {
            assert!((average_fidelity(C64::new(0.0, 0.0), mode) - 0.5).abs() < 1e-15);
            assert!((average_fidelity(C64::new(1.0, 0.0), mode) - 1.0).abs() < 1e-15);
        }
        let a = C64::from_polar(-0.5, PI / 4.0);
        let expected = 0.5 + 0.25 / 6.0 - 0.5 * (PI / 4.0).cos() / 3.0;
        assert!((average_fidelity(a, FidelityMode::Raw) - expected).abs() < 1e-15);
        assert!(average_fidelity(a, FidelityMode::PhaseOptimized) > average_fidelity(a, FidelityMode::Raw));
    }

    #[test]
    fn cluster_four_amplitude_at_quarter_period() {
        let d = decomp(TopologySpec::Cluster { x: 1.0 }, 4);
        let a = transition_amplitude(&d, 1, 4, PI / 4.0).unwrap();
        assert!((a - C64::from_polar(-0.5, PI / 4.0)).norm() < 1e-13);
    }

    #[test]
    fn trace_rejects_bad_grid() {
        let d = decomp(TopologySpec::Cluster { x: 1.0 }, 3);
        assert!(transfer_trace(&d, 1, 3, &[], FidelityMode::Raw).is_err());
        assert!(transfer_trace(&d, 1, 3, &[0.0, 0.0], FidelityMode::Raw).is_err());
        assert!(transfer_trace(&d, 1, 3, &[1.0, 0.5], FidelityMode::Raw).is_err());
        assert!(intermediate_transfer(&d, 1, &[0.0], FidelityMode::Raw).is_err());
        assert!(intermediate_transfer(&d, 4, &[0.0], FidelityMode::Raw).is_err());
    }

    #[test]
    fn intermediate_to_last_is_full_transfer() {
        let d = decomp(TopologySpec::Engineered { x: 1.0, f: 5.0 }, 4);
        let grid = uniform_grid(5.0, 100).unwrap();
        assert_eq!(
            intermediate_transfer(&d, 4, &grid, FidelityMode::Raw).unwrap(),
            transfer_trace(&d, 1, 4, &grid, FidelityMode::Raw).unwrap()
        );
    }

    #[test]
    fn crossings_flip_with_labels() {
        let d = decomp(TopologySpec::Cluster { x: 1.0 }, 3);
        let trace = transfer_trace(&d, 1, 3, &uniform_grid(2.0 * PI, 2000).unwrap(), FidelityMode::Raw).unwrap();
        let crossings = trace.classical_crossings();
        assert!(!crossings.is_empty());
        let flips = (1..trace.points.len()).filter(|&k| trace.above_classical(k) != trace.above_classical(k - 1)).count();
        assert_eq!(flips, crossings.len());
        assert!(trace.peak_fbar().unwrap().1 > CLASSICAL_BOUND);
    }

    #[test]
    fn constant_trace_metrics() {
        let points = (0..200)
            .map(|k| TracePoint {
                tau: 0.01 * k as f64,
                amplitude: C64::new(0.6, 0.0),
                f01: 0.36,
                fbar_raw: 0.0,
                fbar_phase_optimized: 0.0,
            })
            .collect();
        let trace = TransferTrace { from: 1, receiver: 3, mode: FidelityMode::Raw, points };
        let m = oscillation_metrics(&trace, 0.5).unwrap();
        assert!((m.f_m - 0.36).abs() < 1e-15);
        assert_eq!(m.amplitude, 0.0);
        assert!(matches!(oscillation_metrics(&trace, 0.1), Err(Error::Resolution { .. })));
    }

    #[test]
    fn fast_period_of_cluster_is_signal_period() {
        let d = decomp(TopologySpec::Cluster { x: 1.0 }, 5);
        let p = fast_period(&d, 1, 5).unwrap().unwrap();
        assert!((p - 2.0 * PI / 5.0).abs() < 1e-12);
    }

    #[test]
    fn golden_peak_refines_scan() {
        let d = decomp(TopologySpec::Cluster { x: 1.0 }, 3);
        let (t, v) = peak_fidelity_in(&d, 1, 3, 0.5, 1.5).unwrap();
        assert!((t - PI / 3.0).abs() < 1e-6);
        assert!((v - 4.0 / 9.0).abs() < 1e-12);
    }
}
