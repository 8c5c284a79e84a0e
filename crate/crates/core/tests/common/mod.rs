//! Reference implementations used only by the integration tests. They share
//! no code with the library: plain `Vec<C64>` matrices, Pauli products, a
//! Taylor-series exponential and explicit quadrature.
#![allow(dead_code)]

use num_complex::Complex64 as C64;

pub type Dense = Vec<Vec<C64>>;

pub fn zeros(n: usize) -> Dense {
    vec![vec![C64::new(0.0, 0.0); n]; n]
}

pub fn identity(n: usize) -> Dense {
    let mut m = zeros(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    m
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut c = zeros(n);
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn add(a: &Dense, b: &Dense, s: C64) -> Dense {
    a.iter().zip(b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + s * y).collect()).collect()
}

pub fn kron(a: &Dense, b: &Dense) -> Dense {
    let (n, m) = (a.len(), b.len());
    let mut c = zeros(n * m);
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    c[i * m + k][j * m + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    c
}

pub fn pauli_x() -> Dense {
    vec![vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)], vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]]
}

pub fn pauli_y() -> Dense {
    vec![vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0)], vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0)]]
}

/// `sigma` acting on qubit `q` (0-based, qubit 0 is the most significant
/// factor) of an `n`-qubit register.
pub fn embed(sigma: &Dense, q: usize, n: usize) -> Dense {
    let id = identity(2);
    let mut out = vec![vec![C64::new(1.0, 0.0)]];
    for k in 0..n {
        out = kron(&out, if k == q { sigma } else { &id });
    }
    out
}

/// `sum_{i<j} J_ij (X_i X_j + Y_i Y_j) / 2`, the XY hopping
/// `J_ij (s+_i s-_j + s-_i s+_j)` built from Pauli products.
pub fn xy_hamiltonian(j: &[Vec<f64>]) -> Dense {
    let n = j.len();
    let dim = 1 << n;
    let mut h = zeros(dim);
    for a in 0..n {
        for b in a + 1..n {
            if j[a][b] == 0.0 {
                continue;
            }
            let xx = matmul(&embed(&pauli_x(), a, n), &embed(&pauli_x(), b, n));
            let yy = matmul(&embed(&pauli_y(), a, n), &embed(&pauli_y(), b, n));
            h = add(&h, &add(&xx, &yy, C64::new(1.0, 0.0)), C64::new(0.5 * j[a][b], 0.0));
        }
    }
    h
}

/// `exp(-i H t)` by scaling and squaring of a Taylor series.
pub fn expm_minus_i(h: &Dense, t: f64) -> Dense {
    let n = h.len();
    let norm: f64 = h.iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max) * t.abs();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let s = t / 2f64.powi(squarings as i32);
    let a: Dense = h.iter().map(|r| r.iter().map(|z| C64::new(0.0, -s) * z).collect()).collect();
    let mut term = identity(n);
    let mut sum = identity(n);
    for k in 1..=30 {
        term = matmul(&term, &a).into_iter().map(|r| r.into_iter().map(|z| z / k as f64).collect()).collect();
        sum = add(&sum, &term, C64::new(1.0, 0.0));
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

pub fn apply(m: &Dense, v: &[C64]) -> Vec<C64> {
    m.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Reduced state of qubit `q` from an `n`-qubit pure state, basis `[|0>, |1>]`.
pub fn reduced_qubit(psi: &[C64], q: usize, n: usize) -> [[C64; 2]; 2] {
    let shift = n - 1 - q;
    let mut rho = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, a) in psi.iter().enumerate() {
        for (j, b) in psi.iter().enumerate() {
            // all other qubits must agree
            if (i ^ j) & !(1 << shift) != 0 {
                continue;
            }
            rho[(i >> shift) & 1][(j >> shift) & 1] += a * b.conj();
        }
    }
    rho
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Overlap of `beta|-> + gamma|+>` with the receiver state left by a
/// transfer of amplitude `a`: the excitation arrives as `gamma a`, the
/// vacuum component is untouched.
pub fn input_fidelity(a: C64, beta: C64, gamma: C64) -> f64 {
    let excited = (gamma * a).norm_sqr();
    let rho = [[C64::new(1.0 - excited, 0.0), beta * (gamma * a).conj()], [beta.conj() * gamma * a, C64::new(excited, 0.0)]];
    let psi = [beta, gamma];
    let mut f = C64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            f += psi[i].conj() * rho[i][j] * psi[j];
        }
    }
    f.re
}

/// `(1/4pi) int F dOmega` with 64 Gauss-Legendre nodes in `cos(theta)` and
/// 64 uniform nodes in `phi`.
pub fn bloch_average(a: C64) -> f64 {
    let nodes = gauss_legendre(64);
    let n_phi = 64;
    let mut total = 0.0;
    for &(c, w) in &nodes {
        let theta = c.acos();
        for k in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n_phi as f64;
            let beta = C64::new((theta / 2.0).cos(), 0.0);
            let gamma = C64::from_polar((theta / 2.0).sin(), phi);
            total += w * input_fidelity(a, beta, gamma) / n_phi as f64;
        }
    }
    total / 2.0
}
