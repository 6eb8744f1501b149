//! Adaptive Gauss-Kronrod (10/21) quadrature for real and complex integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_478_206,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the odd-indexed Kronrod nodes `XGK[1], XGK[3], ..., XGK[9]`.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_146,
];

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Kronrod-21 and embedded Gauss-10 estimates on `[a, b]`.
pub fn gk21<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, T) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[10];
    let mut gauss = T::zero();
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod = kronrod + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    (kronrod * h, gauss * h)
}

/// Nodes and weights of the Kronrod-21 rule mapped to `[a, b]`, for callers
/// that tabulate an integrand once and reuse it.
pub fn gk21_nodes(a: f64, b: f64) -> [(f64, f64); 21] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 21];
    for j in 0..10 {
        out[2 * j] = (c - h * XGK[j], h * WGK[j]);
        out[2 * j + 1] = (c + h * XGK[j], h * WGK[j]);
    }
    out[20] = (c, h * WGK[10]);
    out
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-10, max_intervals: 2000 }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self { abs_tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn segment<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> Segment<T> {
    let (k, g) = gk21(f, a, b);
    Segment { a, b, value: k, error: (k - g).magnitude() }
}

/// Globally adaptive integration of `f` over the finite interval `[a, b]`.
pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult<T>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("interval [{a}, {b}] is not finite")));
    }
    if a == b {
        return Ok(QuadResult { value: T::zero(), error: 0.0, intervals: 0 });
    }
    let mut heap = BinaryHeap::new();
    let first = segment(&mut f, a, b);
    let mut total = first.value;
    let mut err = first.error;
    heap.push(first);
    loop {
        if !(total.magnitude().is_finite() && err.is_finite()) {
            return Err(Error::Quadrature("integrand produced a non-finite value".into()));
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.magnitude()) {
            return Ok(QuadResult { value: total, error: err, intervals: heap.len() });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature(format!(
                "no convergence after {} intervals (error estimate {err:.3e})",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature(format!("interval [{}, {}] cannot be split further", worst.a, worst.b)));
        }
        let left = segment(&mut f, worst.a, mid);
        let right = segment(&mut f, mid, worst.b);
        total = total - worst.value + left.value + right.value;
        err = err - worst.error + left.error + right.error;
        heap.push(left);
        heap.push(right);
        // Re-sum periodically so cancellation drift in the running totals stays bounded.
        if heap.len() % 64 == 0 {
            total = heap.iter().fold(T::zero(), |acc, s| acc + s.value);
            err = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// Integration over `[a, inf)` through the substitution `x = a + s / (1 - s)`.
pub fn integrate_to_infinity<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    opts: QuadOptions,
) -> Result<QuadResult<T>> {
    integrate(
        |s: f64| {
            let one_minus = 1.0 - s;
            let x = a + s / one_minus;
            let v = f(x);
            let jac = 1.0 / (one_minus * one_minus);
            if v.magnitude() == 0.0 {
                T::zero()
            } else {
                v * jac
            }
        },
        0.0,
        1.0,
        opts,
    )
}

/// Composite Simpson rule on an equally spaced grid with an even number of intervals.
pub fn simpson<T: QuadValue>(values: &[T], h: f64) -> Result<T> {
    let n = values.len();
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::Quadrature(format!("Simpson's rule needs an odd number >= 3 of points, got {n}")));
    }
    let mut acc = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc = acc + *v * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    Ok(acc * (h / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x: f64| x.powi(7) - 3.0 * x * x, -1.0, 2.0, QuadOptions::default()).unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-13, max_intervals: 2000 };
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, opts).unwrap();
        assert!((r.value - 2.0).abs() < 1e-11);
        assert!((r.value - 2.0).abs() <= 2.0 * r.error.max(1e-15));
    }

    #[test]
    fn complex_integrand() {
        let r = integrate(|t: f64| Complex64::new(0.0, t).exp(), 0.0, PI, QuadOptions::default()).unwrap();
        assert!((r.value - Complex64::new(0.0, 2.0)).norm() < 1e-13);
    }

    #[test]
    fn semi_infinite() {
        let r = integrate_to_infinity(|x: f64| (-x).exp(), 0.0, QuadOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let p = integrate_to_infinity(|x: f64| x.powf(-2.5), 1.0, QuadOptions::default()).unwrap();
        assert!((p.value - 1.0 / 1.5).abs() < 1e-10);
    }

    #[test]
    fn non_convergence_is_reported() {
        let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 0.0, max_intervals: 4 };
        assert!(matches!(integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, opts), Err(Error::Quadrature(_))));
    }

    #[test]
    fn fixed_nodes_reproduce_the_adaptive_panel() {
        let nodes = gk21_nodes(0.3, 1.7);
        let tab: f64 = nodes.iter().map(|(x, w)| w * x.exp()).sum();
        let (k, _) = gk21(&mut |x: f64| x.exp(), 0.3, 1.7);
        assert!((tab - k).abs() < 1e-15);
    }

    #[test]
    fn simpson_on_cubic() {
        let h = 0.1;
        let v: Vec<f64> = (0..=10).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson(&v, h).unwrap() - 0.25).abs() < 1e-14);
        assert!(simpson(&v[..10], h).is_err());
    }
}
