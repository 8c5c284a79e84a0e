//! Fixed-step classical Runge-Kutta integration.

use num_complex::Complex64 as C64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// State types the integrator can combine linearly.
pub trait OdeState: Clone {
    /// `self + a * other`
    fn add_scaled(&self, a: f64, other: &Self) -> Self;
    fn all_finite(&self) -> bool;
}

impl OdeState for Vec<f64> {
    fn add_scaled(&self, a: f64, other: &Self) -> Self {
        self.iter().zip(other).map(|(x, y)| x + a * y).collect()
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }
}

impl OdeState for Vec<C64> {
    fn add_scaled(&self, a: f64, other: &Self) -> Self {
        self.iter().zip(other).map(|(x, y)| x + y * a).collect()
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl OdeState for ComplexMatrix {
    fn add_scaled(&self, a: f64, other: &Self) -> Self {
        self + &other.scale_real(a)
    }

    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

/// One classical RK4 step of `dy/dt = f(t, y)` from `t` to `t + h`.
pub fn rk4_step<S, F>(f: F, t: f64, y: &S, h: f64) -> Result<S>
where
    S: OdeState,
    F: Fn(f64, &S) -> Result<S>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Parameter(format!("step must be positive and finite, got {h}")));
    }
    let eval = |t: f64, y: &S| -> Result<S> {
        let d = f(t, y)?;
        if !d.all_finite() {
            return Err(Error::NonFinite(format!("derivative at t = {t}")));
        }
        Ok(d)
    };
    let k1 = eval(t, y)?;
    let k2 = eval(t + 0.5 * h, &y.add_scaled(0.5 * h, &k1))?;
    let k3 = eval(t + 0.5 * h, &y.add_scaled(0.5 * h, &k2))?;
    let k4 = eval(t + h, &y.add_scaled(h, &k3))?;
    Ok(y.add_scaled(h / 6.0, &k1)
        .add_scaled(h / 3.0, &k2)
        .add_scaled(h / 3.0, &k3)
        .add_scaled(h / 6.0, &k4))
}
