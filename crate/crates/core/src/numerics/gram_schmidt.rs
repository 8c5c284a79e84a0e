use num_complex::Complex64 as C64;

use super::matrix::{inner, norm};
use crate::error::{Error, Result};

/// Vectors whose norm falls below this after projection are discarded.
pub const GRAM_SCHMIDT_DROP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Orthonormalized {
    pub basis: Vec<Vec<C64>>,
    /// Number of inputs that were linearly dependent on earlier ones.
    pub dropped: usize,
}

/// Modified Gram-Schmidt with one reorthogonalization pass.
///
/// Output spans the same space as the input; the order of surviving vectors
/// follows the input order.
pub fn gram_schmidt(vectors: &[Vec<C64>]) -> Result<Orthonormalized> {
    let Some(first) = vectors.first() else {
        return Ok(Orthonormalized { basis: Vec::new(), dropped: 0 });
    };
    let dim = first.len();
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(vectors.len());
    let mut dropped = 0;
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
        let mut w = v.clone();
        for _pass in 0..2 {
            for b in &basis {
                let c = inner(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let n = norm(&w);
        if n < GRAM_SCHMIDT_DROP_TOL {
            dropped += 1;
            continue;
        }
        basis.push(w.into_iter().map(|z| z / n).collect());
    }
    Ok(Orthonormalized { basis, dropped })
}
