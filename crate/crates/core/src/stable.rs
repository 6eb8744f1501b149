//! Constants and densities of symmetric stable laws.
//!
//! `C_alpha = alpha int_0^inf (1 - cos s) s^{-alpha-1} ds` turns a radial tail
//! measure into the characteristic exponent: a Levy measure with density
//! `alpha c r^{-alpha-1}` on each half-line has exponent `-c C_alpha |u|^alpha`.
//! `S_alpha = alpha int_0^inf (sin s - s) s^{-alpha-1} ds` is the matching
//! odd part for one-sided measures. Both are computed by quadrature once per
//! alpha and cached.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::numerics::quadrature::{gk21_nodes, integrate, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableConstants {
    pub alpha: f64,
    /// `alpha int_0^inf (1 - cos s) s^{-alpha-1} ds`.
    pub c: f64,
    /// `alpha int_0^inf (sin s - s) s^{-alpha-1} ds`.
    pub s: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(invalid("alpha", format!("{alpha} not in (1, 2)")))
    }
}

#[derive(Clone, Copy)]
enum TaylorKind {
    Cos,
    Sin,
}

/// `1 - cos s - s^2/2 + s^4/24` or `sin s - s + s^3/6`, summed as a series for
/// small `s` where the direct form cancels catastrophically.
fn taylor_tail(s: f64, kind: TaylorKind) -> f64 {
    if s > 0.5 {
        let s2 = s * s;
        return match kind {
            TaylorKind::Cos => 1.0 - s.cos() - s2 / 2.0 + s2 * s2 / 24.0,
            TaylorKind::Sin => s.sin() - s + s2 * s / 6.0,
        };
    }
    // Cos: s^6/6! - s^8/8! + ...; Sin: s^5/5! - s^7/7! + ...
    let (mut n, sign0): (u32, f64) = match kind {
        TaylorKind::Cos => (6u32, 1.0),
        TaylorKind::Sin => (5u32, 1.0),
    };
    let mut term = sign0 * s.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
    let mut sum: f64 = 0.0;
    while term.abs() > 1e-300 && term.abs() > 1e-18 * sum.abs() {
        sum += term;
        term *= -s * s / (f64::from(n + 1) * f64::from(n + 2));
        n += 2;
    }
    sum
}

fn compute_constants(alpha: f64) -> Result<StableConstants> {
    let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-14, max_intervals: 4000 };
    let p = -alpha - 1.0;
    // [0, 1]: remove the leading Taylor terms and integrate them in closed form.
    let cos_rem = integrate(|s: f64| taylor_tail(s, TaylorKind::Cos) * s.powf(p), 0.0, 1.0, opts)?.value;
    let cos_head = 1.0 / (2.0 * (2.0 - alpha)) - 1.0 / (24.0 * (4.0 - alpha));
    let sin_rem = integrate(|s: f64| taylor_tail(s, TaylorKind::Sin) * s.powf(p), 0.0, 1.0, opts)?.value;
    let sin_head = -1.0 / (6.0 * (3.0 - alpha));
    // [1, inf): int_1^inf e^{is} s^{p} ds along s = 1 + iy equals
    // i e^{i} int_0^inf e^{-y} (1 + iy)^{p} dy.
    let contour = integrate(
        |w: f64| {
            // y = w / (1 - w) maps [0, 1) onto [0, inf).
            let om = 1.0 - w;
            let y = w / om;
            if y > 745.0 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new(1.0, y).powf(p) * ((-y).exp() / (om * om))
        },
        0.0,
        1.0,
        opts,
    )?
    .value;
    let tail = Complex64::new(0.0, 1.0) * Complex64::new(0.0, 1.0).exp() * contour;
    let c = alpha * (cos_rem + cos_head + 1.0 / alpha - tail.re);
    let s = alpha * (sin_rem + sin_head + tail.im - 1.0 / (alpha - 1.0));
    Ok(StableConstants { alpha, c, s })
}

/// Cached constants for `alpha` in (1, 2).
pub fn stable_constants(alpha: f64) -> Result<StableConstants> {
    check_alpha(alpha)?;
    static CACHE: OnceLock<Mutex<HashMap<u64, StableConstants>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(c) = cache.lock().expect("constants cache poisoned").get(&alpha.to_bits()) {
        return Ok(*c);
    }
    let c = compute_constants(alpha)?;
    cache.lock().expect("constants cache poisoned").insert(alpha.to_bits(), c);
    Ok(c)
}

/// Boundary between the Fourier-inverted centre and the asymptotic tail series.
const SERIES_FROM: f64 = 20.0;

/// Frequency nodes and weights for `int_0^inf cos(tz) exp(-t^alpha) dt`, graded
/// towards the `t^alpha` cusp at the origin.
fn frequency_rule(alpha: f64) -> Vec<(f64, f64)> {
    let t_max = 42.0f64.powf(1.0 / alpha);
    let mut edges = vec![0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1];
    let width = 0.05;
    let mut t = 0.1;
    while t < t_max {
        t = (t + width).min(t_max);
        edges.push(t);
    }
    let mut out = Vec::with_capacity(21 * edges.len());
    for w in edges.windows(2) {
        for (x, wt) in gk21_nodes(w[0], w[1]) {
            out.push((x, wt * (-x.powf(alpha)).exp()));
        }
    }
    out
}

fn lgamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Large-|z| asymptotic series of the standard symmetric density,
/// `(1/pi) sum_k (-1)^{k+1} Gamma(alpha k + 1) / k! sin(k pi alpha / 2) |z|^{-alpha k - 1}`,
/// summed until the terms stop decreasing.
fn tail_series(alpha: f64, z: f64) -> f64 {
    let az = z.abs();
    let lz = az.ln();
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let log_mag = lgamma(alpha * kf + 1.0) - lgamma(kf + 1.0) - (alpha * kf + 1.0) * lz;
        let mag = log_mag.exp();
        if mag > prev {
            break;
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * mag * (kf * PI * alpha / 2.0).sin();
        sum += term;
        if mag < 1e-18 * sum.abs() {
            break;
        }
        prev = mag;
    }
    sum / PI
}

fn centre_density(rule: &[(f64, f64)], z: f64) -> f64 {
    rule.iter().map(|(t, w)| w * (t * z).cos()).sum::<f64>() / PI
}

/// Density of the standard symmetric stable law `exp(-|t|^alpha)`.
pub fn symmetric_stable_density(alpha: f64, z: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if z.abs() >= SERIES_FROM {
        Ok(tail_series(alpha, z))
    } else {
        Ok(centre_density(&frequency_rule(alpha), z))
    }
}

/// Fixed quadrature rule for `E g(X)`, `X` standard symmetric alpha-stable.
///
/// The centre `[-20, 20]` uses Kronrod-21 cells of width 0.1, the tails use
/// cells of width 0.5 in `log |z|` out to where `E|X| 1{|X| > z}` is below
/// 1e-16. A fixed rule (rather than adaptive refinement) keeps the result a
/// smooth function of any parameter inside `g`, which finite-difference
/// derivatives rely on.
#[derive(Debug)]
pub struct SymmetricStableRule {
    pub alpha: f64,
    nodes: Vec<f64>,
    kronrod: Vec<f64>,
    gauss: Vec<f64>,
    /// Index range of the outermost tail cell on each side.
    last_cells: [std::ops::Range<usize>; 2],
}

/// Gauss-10 weights embedded in the Kronrod-21 node order produced by `gk21_nodes`.
fn embedded_gauss_weights(a: f64, b: f64) -> [f64; 21] {
    #[allow(clippy::excessive_precision)]
    const WG: [f64; 5] = [
        0.066_671_344_308_688_137_593_568_809_893_332,
        0.149_451_349_150_580_593_145_776_339_657_697,
        0.219_086_362_515_982_043_995_534_934_228_163,
        0.269_266_719_309_996_355_091_226_921_569_469,
        0.295_524_224_714_752_870_173_892_994_651_146,
    ];
    let h = 0.5 * (b - a);
    let mut out = [0.0; 21];
    for j in 0..10 {
        if j % 2 == 1 {
            out[2 * j] = h * WG[j / 2];
            out[2 * j + 1] = h * WG[j / 2];
        }
    }
    out
}

impl SymmetricStableRule {
    fn build(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let rule = frequency_rule(alpha);
        let mut nodes = Vec::new();
        let mut kronrod = Vec::new();
        let mut gauss = Vec::new();
        let cell = 0.1;
        let cells = (2.0 * SERIES_FROM / cell).round() as usize;
        // Density is even: evaluate once per |z|.
        let mut memo: HashMap<u64, f64> = HashMap::new();
        for c in 0..cells {
            let a = -SERIES_FROM + c as f64 * cell;
            let b = a + cell;
            let g = embedded_gauss_weights(a, b);
            for (k, (z, w)) in gk21_nodes(a, b).into_iter().enumerate() {
                let f = *memo.entry(z.abs().to_bits()).or_insert_with(|| centre_density(&rule, z.abs()));
                nodes.push(z);
                kronrod.push(w * f);
                gauss.push(g[k] * f);
            }
        }
        let u_max = 37.0 / (alpha - 1.0) + 1.0;
        let du = 0.5;
        let tail_cells = (u_max / du).ceil() as usize;
        let mut last_cells = [0..0, 0..0];
        for (side, sign) in [(0usize, -1.0f64), (1, 1.0)] {
            for c in 0..tail_cells {
                let a = c as f64 * du;
                let b = a + du;
                let g = embedded_gauss_weights(a, b);
                let start = nodes.len();
                for (k, (u, w)) in gk21_nodes(a, b).into_iter().enumerate() {
                    let z = SERIES_FROM * u.exp();
                    let f = tail_series(alpha, z) * z;
                    nodes.push(sign * z);
                    kronrod.push(w * f);
                    gauss.push(g[k] * f);
                }
                if c + 1 == tail_cells {
                    last_cells[side] = start..nodes.len();
                }
            }
        }
        if nodes.iter().any(|z| !z.is_finite()) || kronrod.iter().any(|w| !w.is_finite()) {
            return Err(Error::Quadrature(format!("stable density table for alpha = {alpha} is not finite")));
        }
        Ok(Self { alpha, nodes, kronrod, gauss, last_cells })
    }

    /// Shared table for `alpha`, built on first use.
    pub fn get(alpha: f64) -> Result<Arc<Self>> {
        check_alpha(alpha)?;
        static CACHE: OnceLock<Mutex<HashMap<u64, Arc<SymmetricStableRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("stable rule cache poisoned");
        if let Some(r) = guard.get(&alpha.to_bits()) {
            return Ok(Arc::clone(r));
        }
        let rule = Arc::new(Self::build(alpha)?);
        guard.insert(alpha.to_bits(), Arc::clone(&rule));
        Ok(rule)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `E g(scale * X + location)` with an error estimate from the embedded
    /// Gauss rule and the size of the outermost tail cells.
    pub fn expect<G: FnMut(f64) -> f64>(&self, scale: f64, location: f64, mut g: G) -> Result<(f64, f64)> {
        let mut k = 0.0;
        let mut gs = 0.0;
        let mut edge = 0.0;
        for (i, &z) in self.nodes.iter().enumerate() {
            let v = g(scale * z + location);
            k += self.kronrod[i] * v;
            gs += self.gauss[i] * v;
            if self.last_cells[0].contains(&i) || self.last_cells[1].contains(&i) {
                edge += (self.kronrod[i] * v).abs();
            }
        }
        if !k.is_finite() {
            return Err(Error::Quadrature("expectation integrand is not finite".into()));
        }
        Ok((k, (k - gs).abs() + edge))
    }

    /// Expectation that fails when the error estimate exceeds `tol`.
    pub fn expect_checked<G: FnMut(f64) -> f64>(&self, scale: f64, location: f64, tol: f64, g: G) -> Result<f64> {
        let (v, err) = self.expect(scale, location, g)?;
        if err > tol {
            return Err(Error::Quadrature(format!(
                "stable expectation error estimate {err:.3e} exceeds tolerance {tol:.3e}"
            )));
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use htsgd_oracles as oracle;

    #[test]
    fn constants_match_gamma_closed_forms() {
        for alpha in [1.05, 1.2, 1.5, 1.8, 1.95] {
            let k = stable_constants(alpha).unwrap();
            assert!((k.c - oracle::stable_cos_constant(alpha)).abs() < 1e-11, "alpha {alpha}: {}", k.c);
            assert!((k.s - oracle::stable_sin_constant(alpha)).abs() < 1e-10, "alpha {alpha}: {}", k.s);
            assert!((k.s / k.c - (PI * alpha / 2.0).tan()).abs() < 1e-9);
        }
        assert!(stable_constants(2.0).is_err());
    }

    #[test]
    fn tail_constant_agrees_with_density_tail() {
        // x^alpha P(|X| > x) -> 1 / C_alpha, checked through the density: x^{alpha+1} f(x) -> alpha / (2 C_alpha).
        for alpha in [1.2, 1.5, 1.8] {
            let k = stable_constants(alpha).unwrap();
            let x: f64 = 1e6;
            let f = symmetric_stable_density(alpha, x).unwrap();
            let limit = alpha / (2.0 * k.c);
            assert!((x.powf(alpha + 1.0) * f / limit - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn density_matches_zolotarev_oracle() {
        for alpha in [1.2, 1.5, 1.8] {
            for z in [0.0, 0.4, 1.7, 5.0, 19.9, 20.0, 35.0] {
                let ours = symmetric_stable_density(alpha, z).unwrap();
                let theirs = oracle::stable_pdf(alpha, z);
                assert!((ours / theirs - 1.0).abs() < 1e-7, "alpha {alpha} z {z}: {ours} vs {theirs}");
            }
        }
    }

    #[test]
    fn rule_integrates_known_moments() {
        for alpha in [1.2, 1.5, 1.8] {
            let rule = SymmetricStableRule::get(alpha).unwrap();
            let mass = rule.expect_checked(1.0, 0.0, 1e-10, |_| 1.0).unwrap();
            assert!((mass - 1.0).abs() < 1e-11, "alpha {alpha}: mass {mass}");
            // E|X| = 2 Gamma(1 - 1/alpha) / pi.
            let abs_mean = rule.expect_checked(1.0, 0.0, 1e-9, f64::abs).unwrap();
            let exact = 2.0 * oracle::gamma(1.0 - 1.0 / alpha) / PI;
            assert!((abs_mean - exact).abs() < 1e-9, "alpha {alpha}: {abs_mean} vs {exact}");
            // Parseval: E 1/(1 + X^2) = int_0^inf exp(-t - t^alpha) dt.
            let ours = rule.expect_checked(1.0, 0.0, 1e-10, |x| 1.0 / (1.0 + x * x)).unwrap();
            let theirs = oracle::adaptive_simpson(&|t: f64| (-t - t.powf(alpha)).exp(), 0.0, 60.0, 1e-15);
            assert!((ours - theirs).abs() < 1e-12, "alpha {alpha}: {ours} vs {theirs}");
            // A smooth bump, against the oracle density integrated independently.
            let bump = |x: f64| x * x * (-(x - 0.5) * (x - 0.5)).exp();
            let ours = rule.expect_checked(2.0, 0.3, 1e-10, bump).unwrap();
            let theirs = oracle::adaptive_simpson(&|z| bump(2.0 * z + 0.3) * oracle::stable_pdf(alpha, z), -12.0, 12.0, 1e-13);
            assert!((ours - theirs).abs() < 1e-9, "alpha {alpha}: {ours} vs {theirs}");
        }
    }
}
