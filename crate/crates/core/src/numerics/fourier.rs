//! Inversion of one-dimensional characteristic functions.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::quadrature::{integrate, QuadOptions};
use crate::error::{Error, Result};

/// Modulus below which the characteristic function is treated as zero.
const CF_FLOOR: f64 = 1e-17;

/// Frequency beyond which `|phi(t)| < 1e-17`, assuming a nonincreasing envelope
/// past the first crossing.
pub fn cf_cutoff<F: Fn(f64) -> Complex64>(cf: &F) -> Result<f64> {
    let mut hi = 1.0;
    let mut doublings = 0;
    while cf(hi).norm() >= CF_FLOOR {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Quadrature("characteristic function does not decay".into()));
        }
    }
    let mut lo = if doublings == 0 { 0.0 } else { hi / 2.0 };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if cf(mid).norm() >= CF_FLOOR {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Integrate `g` over `[0, t_max]` in panels short enough to hold about half an
/// oscillation of `exp(-itx)`.
fn oscillatory_integral<G: FnMut(f64) -> f64>(mut g: G, x: f64, t_max: f64, abs_tol: f64) -> Result<f64> {
    let panels = ((t_max * x.abs() / PI).ceil() as usize).clamp(1, 2_000_000);
    let width = t_max / panels as f64;
    let opts = QuadOptions { abs_tol: abs_tol / panels as f64, rel_tol: 1e-12, max_intervals: 500 };
    let mut total = 0.0;
    for k in 0..panels {
        let a = k as f64 * width;
        let b = if k + 1 == panels { t_max } else { a + width };
        total += integrate(&mut g, a, b, opts)?.value;
    }
    Ok(total)
}

/// Density `f(x) = (1/pi) int_0^inf Re(exp(-itx) phi(t)) dt` of a real law.
pub fn cf_density<F: Fn(f64) -> Complex64>(cf: &F, x: f64, t_max: f64) -> Result<f64> {
    let integral = oscillatory_integral(|t| (Complex64::new(0.0, -t * x).exp() * cf(t)).re, x, t_max, 1e-12)?;
    Ok(integral / PI)
}

/// Gil-Pelaez CDF `F(x) = 1/2 - (1/pi) int_0^inf Im(exp(-itx) phi(t)) / t dt`.
pub fn cf_cdf<F: Fn(f64) -> Complex64>(cf: &F, x: f64, t_max: f64) -> Result<f64> {
    let integral = oscillatory_integral(
        |t| {
            if t == 0.0 {
                return 0.0;
            }
            (Complex64::new(0.0, -t * x).exp() * cf(t)).im / t
        },
        x,
        t_max,
        1e-12,
    )?;
    Ok(0.5 - integral / PI)
}

/// Solve `F(x) = p` by bisection on a monotone CDF, expanding the bracket as needed.
pub fn invert_cdf<F: FnMut(f64) -> Result<f64>>(mut cdf: F, p: f64, initial_half_width: f64, tol: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter { name: "p", reason: format!("{p} not in (0, 1)") });
    }
    let mut lo = -initial_half_width.abs().max(1e-12);
    let mut hi = -lo;
    let mut expansions = 0;
    while cdf(lo)? > p {
        lo *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Bracket(format!("no lower bracket for p = {p}")));
        }
    }
    while cdf(hi)? < p {
        hi *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Bracket(format!("no upper bracket for p = {p}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = cdf(mid)?;
        if (f - p).abs() < tol || hi - lo < 1e-14 * (1.0 + mid.abs()) {
            return Ok(mid);
        }
        if f < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Bracket(format!("bisection for p = {p} did not reach tolerance {tol}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_and_gaussian_densities() {
        let cauchy = |t: f64| Complex64::new((-t.abs()).exp(), 0.0);
        let tc = cf_cutoff(&cauchy).unwrap();
        assert!((cf_density(&cauchy, 0.0, tc).unwrap() - 1.0 / PI).abs() < 1e-10);
        let gauss = |t: f64| Complex64::new((-t * t / 2.0).exp(), 0.0);
        let tg = cf_cutoff(&gauss).unwrap();
        for x in [-3.0, -1.0, 0.0, 0.5, 2.5] {
            let exact = (-x * x / 2.0f64).exp() / (2.0 * PI).sqrt();
            assert!((cf_density(&gauss, x, tg).unwrap() - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn gil_pelaez_recovers_cauchy_cdf() {
        let cauchy = |t: f64| Complex64::new((-t.abs()).exp(), 0.0);
        let tc = cf_cutoff(&cauchy).unwrap();
        for x in [-20.0, -1.0, 0.0, 0.3, 12.7] {
            let exact = 0.5 + f64::atan(x) / PI;
            assert!((cf_cdf(&cauchy, x, tc).unwrap() - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn shifted_law_has_shifted_cdf() {
        let mu = 1.3;
        let gauss = move |t: f64| Complex64::new(-t * t / 2.0, mu * t).exp();
        let tg = cf_cutoff(&gauss).unwrap();
        assert!((cf_cdf(&gauss, mu, tg).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn bisection_inverts_monotone_cdf() {
        let x = invert_cdf(|x| Ok(0.5 + f64::atan(x) / PI), 0.975, 1.0, 1e-12).unwrap();
        assert!((x - (0.475 * PI).tan()).abs() < 1e-8);
        assert!(invert_cdf(|x| Ok(0.5 + f64::atan(x) / PI), 1.0, 1.0, 1e-12).is_err());
    }
}
