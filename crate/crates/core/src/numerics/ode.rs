//! Classical fourth-order Runge-Kutta.

use std::ops::{Add, Mul};

/// One RK4 step of `y' = f(t, y)` from `(t, y)` with step `h`.
pub fn rk4_step<S, F>(f: &mut F, t: f64, y: &S, h: f64) -> S
where
    S: Clone + Add<Output = S> + Mul<f64, Output = S>,
    F: FnMut(f64, &S) -> S,
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &(y.clone() + k1.clone() * (0.5 * h)));
    let k3 = f(t + 0.5 * h, &(y.clone() + k2.clone() * (0.5 * h)));
    let k4 = f(t + h, &(y.clone() + k3.clone() * h));
    y.clone() + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}
