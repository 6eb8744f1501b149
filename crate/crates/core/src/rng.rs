//! Seeded random streams and heavy-tailed sampling primitives.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{invalid, Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Branch tolerance for the alpha = 1 transform.
const ALPHA_ONE_BAND: f64 = 1e-10;

/// SplitMix64 output function.
fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for replication `replication_index` of a run seeded with
/// `master_seed`.
///
/// This is the `(replication_index + 1)`-th output of a SplitMix64 stream
/// started at `master_seed`, so index 0 is the first SplitMix64 draw. The
/// increment-then-mix map is a bijection in its input, so indices below
/// 2^64 never collide for a fixed master seed.
pub fn derive_seed(master_seed: u64, replication_index: u64) -> u64 {
    let state = master_seed.wrapping_add(replication_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    splitmix64_mix(state)
}

/// Parameters of a one-dimensional stable law in the S1 parametrisation,
/// `E exp(itX) = exp(-scale^alpha |t|^alpha (1 - i beta sgn(t) tan(pi alpha / 2)) + i location t)`
/// for `alpha != 1`.
///
/// `scale = 0` is accepted and denotes the point mass at `location`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    pub alpha: f64,
    pub beta: f64,
    pub scale: f64,
    pub location: f64,
}

impl StableParams {
    pub fn new(alpha: f64, beta: f64, scale: f64, location: f64) -> Result<Self> {
        let p = Self { alpha, beta, scale, location };
        p.validate()?;
        Ok(p)
    }

    /// Standard symmetric law with characteristic function `exp(-|t|^alpha)`.
    pub fn standard(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.0, 1.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(invalid("alpha", format!("{} not in (0, 2]", self.alpha)));
        }
        if !(-1.0..=1.0).contains(&self.beta) {
            return Err(invalid("beta", format!("{} not in [-1, 1]", self.beta)));
        }
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return Err(invalid("scale", format!("{} must be finite and nonnegative", self.scale)));
        }
        if !self.location.is_finite() {
            return Err(invalid("location", "must be finite"));
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        self.beta == 0.0 || self.alpha == 2.0
    }

    /// Characteristic function at `t`.
    pub fn cf(&self, t: f64) -> Complex64 {
        let a = self.alpha;
        let st = (self.scale * t).abs();
        let re = -st.powf(a);
        let im = if a == 2.0 {
            0.0
        } else if (a - 1.0).abs() < ALPHA_ONE_BAND {
            if t == 0.0 {
                0.0
            } else {
                -st * self.beta * 2.0 / PI * t.signum() * t.abs().ln()
            }
        } else {
            st.powf(a) * self.beta * t.signum() * (PI * a / 2.0).tan()
        };
        Complex64::new(re, im + self.location * t).exp()
    }
}

fn check_unit(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(Error::UniformOutOfRange(u))
    }
}

/// Chambers-Mallows-Stuck transform of two uniforms into a stable variate.
pub fn sample_stable(params: &StableParams, u1: f64, u2: f64) -> Result<f64> {
    params.validate()?;
    check_unit(u1)?;
    check_unit(u2)?;
    Ok(stable_transform(params, u1, u2))
}

/// Unchecked transform; callers guarantee valid parameters and open-interval uniforms.
pub(crate) fn stable_transform(p: &StableParams, u1: f64, u2: f64) -> f64 {
    let alpha = p.alpha;
    let v = PI * (u1 - 0.5);
    let w = -u2.ln();
    if alpha == 2.0 {
        return p.scale * 2.0 * v.sin() * w.sqrt() + p.location;
    }
    if (alpha - 1.0).abs() < ALPHA_ONE_BAND {
        let beta = p.beta;
        let pb = FRAC_PI_2 + beta * v;
        let x = (2.0 / PI) * (pb * v.tan() - beta * (FRAC_PI_2 * w * v.cos() / pb).ln());
        let shift = if p.scale > 0.0 { (2.0 / PI) * beta * p.scale * p.scale.ln() } else { 0.0 };
        return p.scale * x + shift + p.location;
    }
    let x = if p.beta == 0.0 {
        (alpha * v).sin() / v.cos().powf(1.0 / alpha) * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
    } else {
        let t = p.beta * (PI * alpha / 2.0).tan();
        let b = t.atan() / alpha;
        let s = (1.0 + t * t).powf(1.0 / (2.0 * alpha));
        s * (alpha * (v + b)).sin() / v.cos().powf(1.0 / alpha)
            * ((v - alpha * (v + b)).cos() / w).powf((1.0 - alpha) / alpha)
    };
    p.scale * x + p.location
}

/// Symmetric Pareto variate: `|X| = u_mag^{-1/alpha}` (so `P(|X| > t) = t^{-alpha}`
/// for `t >= 1`), positive when `u_sign >= 1/2`.
pub fn sample_signed_pareto(alpha: f64, u_mag: f64, u_sign: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(invalid("alpha", format!("{alpha} not in (1, 2)")));
    }
    check_unit(u_mag)?;
    check_unit(u_sign)?;
    let mag = u_mag.powf(-1.0 / alpha);
    Ok(if u_sign >= 0.5 { mag } else { -mag })
}

/// `(1/n) sum_k exp(i t x_k)`.
pub fn empirical_cf(samples: &[f64], t: f64) -> Result<Complex64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let (mut c, mut s) = (0.0, 0.0);
    for &x in samples {
        let (sn, cs) = (t * x).sin_cos();
        c += cs;
        s += sn;
    }
    let n = samples.len() as f64;
    Ok(Complex64::new(c / n, s / n))
}

/// Hill estimator of the tail index from the `k` largest magnitudes.
pub fn hill_estimate(samples: &[f64], k: usize) -> Result<f64> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if k < 1 || k >= n {
        return Err(invalid("k", format!("{k} must satisfy 1 <= k < n = {n}")));
    }
    let mut mags: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let threshold = mags[k];
    if !(threshold > 0.0) {
        return Err(Error::UndefinedEstimator(format!(
            "order statistic {} is zero; need k + 1 positive magnitudes",
            k + 1
        )));
    }
    let mean_log = mags[..k].iter().map(|m| (m / threshold).ln()).sum::<f64>() / k as f64;
    if !(mean_log > 0.0) {
        return Err(Error::UndefinedEstimator("all top-k log spacings are zero".into()));
    }
    Ok(1.0 / mean_log)
}

/// Independent random stream for one replication.
#[derive(Debug, Clone)]
pub struct RngState {
    inner: Xoshiro256PlusPlus,
}

impl RngState {
    pub fn from_seed(seed: u64) -> Self {
        Self { inner: Xoshiro256PlusPlus::seed_from_u64(seed) }
    }

    /// Stream for replication `index` of a run seeded with `master_seed`.
    pub fn for_replication(master_seed: u64, index: u64) -> Self {
        Self::from_seed(derive_seed(master_seed, index))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval (0, 1): the top 52 bits plus half a grid step,
    /// so both endpoints are excluded exactly in double precision.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
    }

    pub fn stable(&mut self, params: &StableParams) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        stable_transform(params, u1, u2)
    }

    pub fn signed_pareto(&mut self, alpha: f64) -> f64 {
        let u = self.uniform();
        let s = self.uniform();
        let mag = u.powf(-1.0 / alpha);
        if s >= 0.5 {
            mag
        } else {
            -mag
        }
    }

    /// Rademacher sign.
    pub fn sign(&mut self) -> f64 {
        if self.next_u64() >> 63 == 1 {
            1.0
        } else {
            -1.0
        }
    }
}
