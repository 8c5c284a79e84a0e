//! Hermitian eigendecomposition by cyclic complex Jacobi rotations, and the
//! spectral propagator built on it.

use std::cmp::Ordering;

use num_complex::Complex64 as C64;

use super::matrix::{inner, norm, ComplexMatrix};
use crate::error::{Error, Result};

/// Maximum number of full Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Sweeps stop once the off-diagonal norm falls below this fraction of `||H||_F`.
pub const JACOBI_OFF_DIAGONAL_TOL: f64 = 1e-14;
/// Entries with modulus above this count when fixing an eigenvector's phase.
pub const PHASE_PIVOT_THRESHOLD: f64 = 1e-8;
/// Relative tolerance used to group eigenvalues into multiplets.
pub const MULTIPLET_TOL: f64 = 1e-8;

/// Eigenvalues (ascending) and orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
    residual: f64,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from externally computed eigenpairs and
    /// measures the residual against `h`. Columns are phase-normalized and
    /// sorted with the same rule as [`herm_eig`].
    pub fn from_eigenpairs(h: &ComplexMatrix, pairs: Vec<(f64, Vec<C64>)>) -> Result<Self> {
        let n = h.rows();
        if pairs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: pairs.len() });
        }
        if let Some((_, v)) = pairs.iter().find(|(_, v)| v.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: v.len() });
        }
        let pairs = sort_eigenpairs(pairs);
        let mut vectors = ComplexMatrix::zeros(n, n);
        for (k, (_, v)) in pairs.iter().enumerate() {
            vectors.set_column(k, v);
        }
        let eigenvalues: Vec<f64> = pairs.into_iter().map(|(e, _)| e).collect();
        let residual = max_residual(h, &eigenvalues, &vectors);
        Ok(Self { eigenvalues, eigenvectors: vectors, residual })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvectors as the columns of a unitary matrix.
    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    /// `max_k ||H v_k - e_k v_k||_2` against the matrix the decomposition was built from.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `max |<v_i|v_j> - delta_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let v = &self.eigenvectors;
        let gram = v.adjoint().matmul(v).expect("square eigenvector matrix");
        gram.max_abs_diff(&ComplexMatrix::identity(self.dim()))
    }

    /// `V diag(e) V^H`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.spectral_sum(|e| C64::new(e, 0.0))
    }

    /// `sum_k g(e_k) |v_k><v_k|`.
    pub fn spectral_sum(&self, g: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let weights: Vec<C64> = self.eigenvalues.iter().map(|&e| g(e)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| (0..n).map(|k| v[(i, k)] * weights[k] * v[(j, k)].conj()).sum())
    }

    /// Matrix element `<to|exp(-iHt)|from>` in the computational basis (0-based indices).
    pub fn propagator_element(&self, from: usize, to: usize, t: f64) -> C64 {
        let v = &self.eigenvectors;
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &e)| C64::from_polar(1.0, -e * t) * v[(to, k)] * v[(from, k)].conj())
            .sum()
    }

    /// `exp(-iHt) psi` evaluated spectrally.
    pub fn evolve_state(&self, psi: &[C64], t: f64) -> Vec<C64> {
        let n = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            let v = self.vector(k);
            let c = inner(&v, psi) * C64::from_polar(1.0, -self.eigenvalues[k] * t);
            for (o, vi) in out.iter_mut().zip(&v) {
                *o += c * vi;
            }
        }
        out
    }

    /// Groups indices of numerically equal eigenvalues, using tolerance
    /// `MULTIPLET_TOL * max(1, spread)`.
    pub fn multiplets(&self) -> Vec<Vec<usize>> {
        group_multiplets(&self.eigenvalues)
    }
}

/// Indices of consecutive (sorted) values closer than `MULTIPLET_TOL * max(1, spread)`.
pub fn group_multiplets(sorted: &[f64]) -> Vec<Vec<usize>> {
    let Some((&first, &last)) = sorted.first().zip(sorted.last()) else {
        return Vec::new();
    };
    let tol = MULTIPLET_TOL * (last - first).abs().max(1.0);
    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..sorted.len() {
        if (sorted[k] - sorted[k - 1]).abs() <= tol {
            groups.last_mut().unwrap().push(k);
        } else {
            groups.push(vec![k]);
        }
    }
    groups
}

/// Rotates `v` so its first entry with modulus above [`PHASE_PIVOT_THRESHOLD`]
/// is real and positive.
pub fn normalize_phase(v: &mut [C64]) {
    if let Some(pivot) = v.iter().find(|z| z.norm() > PHASE_PIVOT_THRESHOLD) {
        let phase = pivot.conj() / pivot.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

fn lexicographic(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

fn sort_eigenpairs(mut pairs: Vec<(f64, Vec<C64>)>) -> Vec<(f64, Vec<C64>)> {
    for (_, v) in pairs.iter_mut() {
        normalize_phase(v);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    for group in group_multiplets(&values) {
        if group.len() > 1 {
            let (start, end) = (group[0], group[group.len() - 1] + 1);
            pairs[start..end].sort_by(|a, b| lexicographic(&a.1, &b.1));
        }
    }
    pairs
}

fn max_residual(h: &ComplexMatrix, values: &[f64], vectors: &ComplexMatrix) -> f64 {
    (0..values.len())
        .map(|k| {
            let v = vectors.column(k);
            let hv = h.mat_vec(&v).expect("square matrix");
            let r: Vec<C64> = hv.iter().zip(&v).map(|(a, b)| a - b * values[k]).collect();
            norm(&r)
        })
        .fold(0.0, f64::max)
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come out ascending. Inside a multiplet the eigenvectors are
/// ordered lexicographically after phase normalization, so the output is a
/// deterministic function of the input.
pub fn herm_eig(h: &ComplexMatrix) -> Result<SpectralDecomposition> {
    h.ensure_hermitian()?;
    let n = h.rows();
    if n == 0 {
        return Err(Error::Parameter("eigendecomposition of an empty matrix".into()));
    }
    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(n);
    let threshold = JACOBI_OFF_DIAGONAL_TOL * h.frobenius_norm();

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) <= threshold {
        converged = true;
    }

    let pairs: Vec<(f64, Vec<C64>)> = (0..n).map(|k| (a[(k, k)].re, v.column(k))).collect();
    let decomp = SpectralDecomposition::from_eigenpairs(h, pairs)?;
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
            off_norm: off_diagonal_norm(&a),
            residual: decomp.residual,
        });
    }
    Ok(decomp)
}

/// One two-sided Jacobi rotation annihilating `a[p, q]`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r;
    let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // G = diag(1, e^{-i phi}) on (p, q) followed by the real rotation [[c, s], [-s, c]].
    let g_pp = C64::new(c, 0.0);
    let g_pq = C64::new(s, 0.0);
    let g_qp = -phase.conj() * s;
    let g_qq = phase.conj() * c;

    let n = a.rows();
    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
}

/// `U(t) = sum_k exp(-i e_k t) |v_k><v_k|`.
pub fn unitary_evolution(decomp: &SpectralDecomposition, t: f64) -> ComplexMatrix {
    decomp.spectral_sum(|e| C64::from_polar(1.0, -e * t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_hermitian(n: usize, seed: &[f64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n, n);
        let mut it = seed.iter().cycle();
        for i in 0..n {
            m[(i, i)] = C64::new(*it.next().unwrap(), 0.0);
            for j in (i + 1)..n {
                let z = C64::new(*it.next().unwrap(), *it.next().unwrap());
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn pauli_x() {
        let h = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let d = herm_eig(&h).unwrap();
        assert!((d.eigenvalues()[0] + 1.0).abs() < 1e-14);
        assert!((d.eigenvalues()[1] - 1.0).abs() < 1e-14);
        // phase normalized: first entries real positive
        assert!(d.vector(0)[0].re > 0.0 && d.vector(0)[0].im == 0.0);
    }

    #[test]
    fn pauli_y_complex_rotation() {
        let h = ComplexMatrix::from_vec(
            2,
            2,
            vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        )
        .unwrap();
        let d = herm_eig(&h).unwrap();
        assert!((d.eigenvalues()[0] + 1.0).abs() < 1e-14);
        assert!(d.residual() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]]).unwrap();
        match herm_eig(&h) {
            Err(Error::NotHermitian { deviation, .. }) => assert!((deviation - 0.5).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_matrix_and_one_by_one() {
        let d = herm_eig(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(d.eigenvalues(), &[0.0, 0.0, 0.0]);
        assert!(d.orthonormality_error() < 1e-15);
        let d = herm_eig(&ComplexMatrix::from_real_rows(&[vec![2.5]]).unwrap()).unwrap();
        assert_eq!(d.eigenvalues(), &[2.5]);
    }

    #[test]
    fn degenerate_multiplet_is_grouped() {
        // 3-site cluster: {-1, -1, 2}
        let h = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]])
            .unwrap();
        let d = herm_eig(&h).unwrap();
        assert_eq!(d.multiplets(), vec![vec![0, 1], vec![2]]);
        assert!(d.residual() < 1e-13);
    }

    #[test]
    fn propagator_at_zero_is_identity() {
        let h = random_hermitian(5, &[0.3, -1.2, 0.7, 2.0, -0.4, 0.1, 0.9]);
        let d = herm_eig(&h).unwrap();
        assert!(unitary_evolution(&d, 0.0).max_abs_diff(&ComplexMatrix::identity(5)) < 1e-13);
    }

    #[test]
    fn cluster_transfer_probability_at_third_period() {
        let h = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]])
            .unwrap();
        let u = unitary_evolution(&herm_eig(&h).unwrap(), std::f64::consts::PI / 3.0);
        assert!((u[(2, 0)].norm_sqr() - 4.0 / 9.0).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn random_hermitian_reconstructs(entries in prop::collection::vec(-3.0f64..3.0, 64)) {
            let h = random_hermitian(8, &entries);
            let d = herm_eig(&h).unwrap();
            let scale = h.max_abs().max(1.0);
            prop_assert!(d.residual() <= 1e-10 * scale);
            prop_assert!(d.orthonormality_error() <= 1e-10);
            prop_assert!(d.reconstruct().max_abs_diff(&h) <= 1e-9 * scale);
            prop_assert!(d.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn propagator_is_unitary_group(entries in prop::collection::vec(-2.0f64..2.0, 40), t in -5.0f64..5.0) {
            let h = random_hermitian(6, &entries);
            let d = herm_eig(&h).unwrap();
            let u = unitary_evolution(&d, t);
            let id = ComplexMatrix::identity(6);
            prop_assert!((&u.adjoint() * &u).max_abs_diff(&id) <= 1e-10);
            prop_assert!((&u * &unitary_evolution(&d, -t)).max_abs_diff(&id) <= 1e-10);
        }
    }
}
