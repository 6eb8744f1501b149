//! Reference computations for the test suites.
//!
//! Everything here is written against closed forms or integral
//! representations that do not share code paths with `htsgd-core`
//! (no characteristic-function inversion, no shared quadrature, no shared
//! special functions). Keep it that way: these are the oracles the core
//! crate is checked against.

use std::f64::consts::PI;

/// Classic SplitMix64 generator step, written the way the reference C code is.
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }
}

/// Lanczos approximation (g = 7, n = 9), accurate to ~1e-15 on the real line.
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    #[allow(clippy::excessive_precision)]
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = COEF[0];
        let t = x + G + 0.5;
        for (i, c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// `alpha * int_0^inf (1 - cos s) s^{-alpha-1} ds` in closed form, 1 < alpha < 2.
pub fn stable_cos_constant(alpha: f64) -> f64 {
    -alpha * gamma(-alpha) * (PI * alpha / 2.0).cos()
}

/// `alpha * int_0^inf (sin s - s) s^{-alpha-1} ds` in closed form, 1 < alpha < 2.
pub fn stable_sin_constant(alpha: f64) -> f64 {
    -alpha * gamma(-alpha) * (PI * alpha / 2.0).sin()
}

/// Two-sided tail constant `lim x^alpha P(|X| > x)` of the standard symmetric
/// stable law with characteristic function `exp(-|t|^alpha)`.
pub fn stable_two_sided_tail_constant(alpha: f64) -> f64 {
    2.0 * gamma(alpha) * (PI * alpha / 2.0).sin() / PI
}

/// Adaptive Simpson on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            left + right + diff / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    // Pre-split so narrow features are not skipped by the first estimate.
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = lo + h;
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            rec(f, lo, hi, fa, fm, fb, whole, tol / pieces as f64, 40)
        })
        .sum()
}

fn zolotarev_v(alpha: f64, theta: f64) -> f64 {
    let ratio = theta.cos() / (alpha * theta).sin();
    ratio.powf(alpha / (alpha - 1.0)) * ((alpha - 1.0) * theta).cos() / theta.cos()
}

/// CDF of the standard symmetric stable law `exp(-|t|^alpha)`, 1 < alpha < 2,
/// via Zolotarev's integral representation (finite interval, no oscillation).
pub fn stable_cdf(alpha: f64, x: f64) -> f64 {
    assert!(alpha > 1.0 && alpha < 2.0, "oracle covers 1 < alpha < 2");
    if x == 0.0 {
        return 0.5;
    }
    let ax = x.abs();
    let power = ax.powf(alpha / (alpha - 1.0));
    let integrand = |theta: f64| {
        if theta <= 0.0 {
            return 0.0;
        }
        if theta >= PI / 2.0 {
            return 1.0;
        }
        (-power * zolotarev_v(alpha, theta)).exp()
    };
    let upper = 1.0 - adaptive_simpson(&integrand, 0.0, PI / 2.0, 1e-13) / PI;
    if x > 0.0 {
        upper
    } else {
        1.0 - upper
    }
}

/// Density of the standard symmetric stable law, Zolotarev representation.
pub fn stable_pdf(alpha: f64, x: f64) -> f64 {
    assert!(alpha > 1.0 && alpha < 2.0, "oracle covers 1 < alpha < 2");
    let ax = x.abs();
    if ax < 1e-12 {
        return gamma(1.0 + 1.0 / alpha) / PI;
    }
    let power = ax.powf(alpha / (alpha - 1.0));
    let integrand = |theta: f64| {
        if theta <= 0.0 || theta >= PI / 2.0 {
            return 0.0;
        }
        let g = power * zolotarev_v(alpha, theta);
        g * (-g).exp()
    };
    alpha / (PI * (alpha - 1.0) * ax) * adaptive_simpson(&integrand, 0.0, PI / 2.0, 1e-14)
}

/// Quantile of the standard symmetric stable law by bisection on [`stable_cdf`].
pub fn stable_quantile(alpha: f64, p: f64) -> f64 {
    bisect(|x| stable_cdf(alpha, x) - p, -1e4, 1e4, 1e-12)
}

/// Plain bisection; `f(lo)` and `f(hi)` must have opposite signs.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "bisection bracket does not straddle a root");
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo) < tol {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Standard normal CDF via the complementary error function (Numerical
/// Recipes `erfcc`, relative error < 1.2e-7).
pub fn normal_cdf(x: f64) -> f64 {
    let z = x.abs() / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.5 * z);
    let erfc = t
        * (-z * z - 1.265_512_23
            + t * (1.000_023_68
                + t * (0.374_091_96
                    + t * (0.096_784_18
                        + t * (-0.186_288_06
                            + t * (0.278_868_07
                                + t * (-1.135_203_98
                                    + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
            .exp();
    if x >= 0.0 {
        1.0 - 0.5 * erfc
    } else {
        0.5 * erfc
    }
}

/// Dense matrix exponential by Taylor series with scaling and squaring.
pub fn expm_taylor(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let norm: f64 = m
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = 2f64.powi(-(squarings as i32));
    let a: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
    let matmul = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| x[i][k] * y[k][j]).sum()).collect())
            .collect()
    };
    let mut result: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut term = result.clone();
    for k in 1..40 {
        term = matmul(&term, &a);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_known_values() {
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-13);
        assert!((gamma(-0.5) + 2.0 * PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zolotarev_matches_cauchy_limit_shape() {
        // alpha close to 2 approaches N(0, 2).
        let f = stable_cdf(1.999, 1.0);
        assert!((f - normal_cdf(1.0 / 2f64.sqrt())).abs() < 2e-3);
        assert!((stable_pdf(1.5, 0.0) - gamma(1.0 + 1.0 / 1.5) / PI).abs() < 1e-15);
        // density integrates consistently with the CDF
        let mass = adaptive_simpson(&|x| stable_pdf(1.5, x), 0.0, 3.0, 1e-12);
        assert!((mass - (stable_cdf(1.5, 3.0) - 0.5)).abs() < 1e-9);
    }

    #[test]
    fn tail_constant_consistency() {
        for &a in &[1.2, 1.5, 1.8] {
            assert!((stable_two_sided_tail_constant(a) - 1.0 / stable_cos_constant(a)).abs() < 1e-12);
        }
    }
}
