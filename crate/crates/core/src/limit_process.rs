//! Stable-driven Ornstein-Uhlenbeck processes: simulation, stationary laws,
//! characteristic functions and their numerical inversion.
//!
//! Every driver here is a pure-jump strictly stable process with Levy measure
//! `alpha C w_j r^{-alpha-1} dr` along atoms `omega_j`, centred to mean zero.
//! Along a direction `u` it contributes `C w_j |a|^alpha (-C_alpha + i sgn(a) S_alpha)`
//! to the log-characteristic function, with `a = u^T omega_j`.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dynamics::Trajectory;
use crate::error::{invalid, Error, Result};
use crate::models::{same_direction, LevyTriplet, RegularVaryingLaw};
use crate::numerics::fourier::{cf_cdf, cf_cutoff, cf_density, invert_cdf};
use crate::numerics::linalg;
use crate::numerics::quadrature::{integrate, QuadOptions};
use crate::rng::{RngState, StableParams};
use crate::stable::stable_constants;

/// Drift matrix `H` and driver of `dZ = -H Z dt + dL`.
#[derive(Debug, Clone)]
pub struct OuSpec {
    drift: DMatrix<f64>,
    driver: LevyTriplet,
    lambda_min: f64,
    lambda_max: f64,
}

impl OuSpec {
    pub fn new(drift: DMatrix<f64>, driver: LevyTriplet) -> Result<Self> {
        if !drift.is_square() || drift.nrows() != driver.dim() {
            return Err(invalid("drift_matrix", format!("{}x{} drift for a {}-dimensional driver", drift.nrows(), drift.ncols(), driver.dim())));
        }
        if !linalg::all_finite_matrix(&drift) {
            return Err(Error::NonFinite("drift matrix".into()));
        }
        let lambda_min = linalg::min_eigen_real_part(&drift);
        if !(lambda_min > 0.0) {
            return Err(invalid("drift_matrix", format!("eigenvalue real part {lambda_min} is not positive")));
        }
        let lambda_max = linalg::spectral_radius(&drift);
        Ok(Self { drift, driver, lambda_min, lambda_max })
    }

    /// Scalar drift `h` with a one-dimensional stable driver.
    pub fn scalar(h: f64, driver: &StableParams) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, h), LevyTriplet::from_stable(driver)?)
    }

    /// The same process with drift `H - kappa I`.
    pub fn shifted(&self, kappa: f64) -> Result<Self> {
        let d = self.dim();
        Self::new(&self.drift - DMatrix::identity(d, d) * kappa, self.driver.clone())
    }

    pub fn drift(&self) -> &DMatrix<f64> {
        &self.drift
    }

    pub fn driver(&self) -> &LevyTriplet {
        &self.driver
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Truncation horizon with `exp(-lambda_min T) = 1e-7` and step `1e-2 / lambda_max`.
    pub fn default_stationary_grid(&self) -> (f64, f64) {
        (7.0 * std::f64::consts::LN_10 / self.lambda_min, 1e-2 / self.lambda_max)
    }
}

/// One stable line `S e` with `S ~ S1(alpha, beta, sigma)` per unit time.
#[derive(Debug, Clone)]
struct DriverLine {
    direction: DVector<f64>,
    unit: StableParams,
}

/// Sampler for increments of a strictly stable driver. Atoms on the same
/// line through the origin are merged into one skewed stable draw.
#[derive(Debug, Clone)]
pub struct StableDriver {
    alpha: f64,
    dim: usize,
    lines: Vec<DriverLine>,
}

impl StableDriver {
    pub fn new(triplet: &LevyTriplet) -> Result<Self> {
        let law = &triplet.levy_measure;
        let alpha = law.alpha;
        let dim = law.dim();
        if law.degenerate {
            return Ok(Self { alpha, dim, lines: Vec::new() });
        }
        let k = stable_constants(alpha)?;
        // (direction, w_plus, w_minus)
        let mut lines: Vec<(DVector<f64>, f64, f64)> = Vec::new();
        for atom in &law.atoms {
            if atom.weight == 0.0 {
                continue;
            }
            if let Some(l) = lines.iter_mut().find(|l| same_direction(&l.0, &atom.direction)) {
                l.1 += atom.weight;
            } else if let Some(l) = lines.iter_mut().find(|l| same_direction(&l.0, &-&atom.direction)) {
                l.2 += atom.weight;
            } else {
                lines.push((atom.direction.clone(), atom.weight, 0.0));
            }
        }
        let lines = lines
            .into_iter()
            .map(|(direction, wp, wm)| {
                let total = wp + wm;
                let scale = (law.tail_constant * k.c * total).powf(1.0 / alpha);
                let beta = ((wp - wm) / total).clamp(-1.0, 1.0);
                StableParams::new(alpha, beta, scale, 0.0).map(|unit| DriverLine { direction, unit })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { alpha, dim, lines })
    }

    pub fn is_degenerate(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `factor * L_1` to `out`; `factor = dt^{1/alpha}` gives an increment over `dt`.
    fn add_scaled_increment(&self, factor: f64, rng: &mut RngState, out: &mut DVector<f64>) {
        for line in &self.lines {
            let s = rng.stable(&line.unit) * factor;
            out.axpy(s, &line.direction, 1.0);
        }
    }

    pub fn increment(&self, dt: f64, rng: &mut RngState) -> Result<LevyIncrement> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("delta_t", format!("{dt} must be positive")));
        }
        let mut value = DVector::zeros(self.dim);
        self.add_scaled_increment(dt.powf(1.0 / self.alpha), rng, &mut value);
        Ok(LevyIncrement { value, degenerate: self.is_degenerate() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyIncrement {
    pub value: DVector<f64>,
    /// Set when the driver has no jumps and the increment is identically zero.
    pub degenerate: bool,
}

pub fn simulate_levy_increment(triplet: &LevyTriplet, delta_t: f64, rng: &mut RngState) -> Result<LevyIncrement> {
    StableDriver::new(triplet)?.increment(delta_t, rng)
}

/// Exponential-integrator path `Z_{k+1} = exp(-H dt) Z_k + dL_k` on `[0, T]`.
/// The step is shrunk so the grid ends exactly at `T`.
pub fn simulate_ou_path(spec: &OuSpec, z0: &DVector<f64>, horizon: f64, delta_t: f64, rng: &mut RngState) -> Result<Trajectory> {
    if !(delta_t > 0.0 && horizon >= delta_t) {
        return Err(invalid("delta_t", format!("need 0 < delta_t <= T, got {delta_t} and {horizon}")));
    }
    if z0.len() != spec.dim() {
        return Err(invalid("z0", "dimension mismatch"));
    }
    let n = (horizon / delta_t - 1e-9).ceil() as usize;
    let dt = horizon / n as f64;
    let driver = StableDriver::new(&spec.driver)?;
    let decay = linalg::expm(&(-&spec.drift * dt));
    let factor = dt.powf(1.0 / driver.alpha);
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(0.0);
    states.push(z0.clone());
    let mut z = z0.clone();
    for k in 1..=n {
        z = &decay * z;
        driver.add_scaled_increment(factor, rng, &mut z);
        if !linalg::all_finite(&z) {
            return Err(Error::NonFinite(format!("OU state at step {k}")));
        }
        times.push(k as f64 * dt);
        states.push(z.clone());
    }
    Trajectory::new(times, states)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarySample {
    pub value: DVector<f64>,
    /// `||exp(-H T_trunc)||`: the neglected tail is this factor times an independent stationary draw.
    pub truncation_bound: f64,
}

/// Truncated stochastic integral `sum_k exp(-H t_k) dL_k` over `[0, T_trunc]`.
pub fn sample_stationary(spec: &OuSpec, rng: &mut RngState, t_trunc: f64, delta_t: f64) -> Result<StationarySample> {
    let bound = (-spec.lambda_min * t_trunc).exp();
    if !(bound < 1e-6) {
        return Err(Error::Config(format!(
            "T_trunc = {t_trunc} leaves exp(-lambda_min T) = {bound:.3e}, need < 1e-6"
        )));
    }
    if !(delta_t > 0.0 && t_trunc >= delta_t) {
        return Err(invalid("delta_t", format!("need 0 < delta_t <= T_trunc, got {delta_t}")));
    }
    let n = (t_trunc / delta_t - 1e-9).ceil() as usize;
    let dt = t_trunc / n as f64;
    let driver = StableDriver::new(&spec.driver)?;
    let factor = dt.powf(1.0 / driver.alpha);
    let truncation_bound = linalg::spectral_norm(&linalg::expm(&(-&spec.drift * t_trunc)));
    // Horner form of the sum; the increments are i.i.d. so the order of accumulation is immaterial.
    let value = if spec.dim() == 1 && driver.lines.len() <= 1 {
        let e = (-spec.drift[(0, 0)] * dt).exp();
        let mut acc = 0.0;
        if let Some(line) = driver.lines.first() {
            let dir = line.direction[0];
            for _ in 0..n {
                acc = e * acc + rng.stable(&line.unit) * factor * dir;
            }
        }
        DVector::from_element(1, acc)
    } else {
        let decay = linalg::expm(&(-&spec.drift * dt));
        let mut acc = DVector::zeros(spec.dim());
        let mut tmp = DVector::zeros(spec.dim());
        for _ in 0..n {
            tmp.gemv(1.0, &decay, &acc, 0.0);
            std::mem::swap(&mut acc, &mut tmp);
            driver.add_scaled_increment(factor, rng, &mut acc);
        }
        acc
    };
    if !linalg::all_finite(&value) {
        return Err(Error::NonFinite("stationary sample".into()));
    }
    Ok(StationarySample { value, truncation_bound })
}

/// Per-atom data `(direction, C w_j)` and the stable constants of a driver.
struct AtomTerms {
    alpha: f64,
    c: f64,
    s: f64,
    atoms: Vec<(DVector<f64>, f64)>,
}

impl AtomTerms {
    fn new(law: &RegularVaryingLaw) -> Result<Self> {
        if law.degenerate {
            return Ok(Self { alpha: law.alpha, c: 0.0, s: 0.0, atoms: Vec::new() });
        }
        let k = stable_constants(law.alpha)?;
        let atoms = law.atoms.iter().map(|a| (a.direction.clone(), law.tail_constant * a.weight)).collect();
        Ok(Self { alpha: law.alpha, c: k.c, s: k.s, atoms })
    }

    /// Compensated exponent of the driver evaluated at `M^T u`, per unit time.
    fn reduced(&self, map: &DMatrix<f64>, u: &DVector<f64>) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (omega, cw) in &self.atoms {
            let a = u.dot(&(map * omega));
            let m = cw * a.abs().powf(self.alpha);
            acc += Complex64::new(-self.c * m, a.signum() * self.s * m);
        }
        acc
    }

    /// Exponent of the image measure under `M` with truncation `1(||y|| < 1)`,
    /// per unit time. The last term is the compensator of jumps whose image
    /// has norm at least 1.
    fn truncated(&self, map: &DMatrix<f64>, u: &DVector<f64>) -> Complex64 {
        let mut acc = self.reduced(map, u);
        let k = self.alpha / (self.alpha - 1.0);
        for (omega, cw) in &self.atoms {
            let v = map * omega;
            let m = v.norm();
            if m > 0.0 {
                acc += Complex64::new(0.0, u.dot(&v) * k * cw * m.powf(self.alpha - 1.0));
            }
        }
        acc
    }

    /// `int x (1(||M x|| <= 1) - 1(||x|| <= 1)) nu(dx)` mapped by `M`, per unit time.
    fn indicator_drift(&self, map: &DMatrix<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(map.nrows());
        let k = self.alpha / (self.alpha - 1.0);
        for (omega, cw) in &self.atoms {
            let v = map * omega;
            let m = v.norm();
            if m > 0.0 {
                g.axpy(k * cw * (1.0 - m.powf(self.alpha - 1.0)), &v, 1.0);
            }
        }
        g
    }
}

/// Integral over `[0, inf)` of a function dominated by `||exp(-H t)||^alpha`,
/// over doubling windows until the envelope and the last window are negligible.
fn integrate_in_time<F: FnMut(f64) -> f64>(mut f: F, spec: &OuSpec, alpha: f64, abs_tol: f64) -> Result<f64> {
    let opts = QuadOptions { abs_tol: abs_tol * 1e-2, rel_tol: 1e-12, max_intervals: 4000 };
    let mut lo = 0.0;
    let mut hi = 1.0 / spec.lambda_min;
    let mut total = 0.0;
    for _ in 0..64 {
        let w = integrate(&mut f, lo, hi, opts)?.value;
        total += w;
        let envelope = linalg::spectral_norm(&linalg::expm(&(-&spec.drift * hi))).powf(alpha);
        if envelope < 1e-12 && w.abs() <= abs_tol.max(1e-13 * total.abs()) {
            return Ok(total);
        }
        lo = hi;
        hi *= 2.0;
    }
    Err(Error::Quadrature("time integral did not settle within 64 doublings".into()))
}

const CF_ABS_TOL: f64 = 1e-12;

/// Log-characteristic function of the stationary law, through the reduced
/// per-atom form `int_0^inf sum_j C w_j |u^T e^{-Ht} omega_j|^alpha (-C_alpha + i sgn S_alpha) dt`.
pub fn stationary_exponent(spec: &OuSpec, u: &DVector<f64>) -> Result<Complex64> {
    check_u(spec.dim(), u)?;
    let terms = AtomTerms::new(&spec.driver.levy_measure)?;
    if terms.atoms.is_empty() || u.iter().all(|x| *x == 0.0) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let eval = |t: f64| terms.reduced(&linalg::expm(&(-&spec.drift * t)), u);
    let re = integrate_in_time(|t| eval(t).re, spec, terms.alpha, CF_ABS_TOL)?;
    let im = if terms.s == 0.0 || spec.driver.levy_measure.is_symmetric() {
        0.0
    } else {
        integrate_in_time(|t| eval(t).im, spec, terms.alpha, CF_ABS_TOL)?
    };
    Ok(Complex64::new(re, im))
}

/// Centring vector of the stationary law: `-H^{-1} gamma` plus the time
/// integral of the indicator-difference term.
pub fn stationary_gamma_tilde(spec: &OuSpec) -> Result<DVector<f64>> {
    let terms = AtomTerms::new(&spec.driver.levy_measure)?;
    let d = spec.dim();
    let mut g = -linalg::inverse(&spec.drift)? * &spec.driver.drift_gamma;
    if terms.atoms.is_empty() {
        return Ok(g);
    }
    for i in 0..d {
        g[i] += integrate_in_time(
            |t| terms.indicator_drift(&linalg::expm(&(-&spec.drift * t)))[i],
            spec,
            terms.alpha,
            CF_ABS_TOL,
        )?;
    }
    Ok(g)
}

/// Characteristic function of the stationary law from its Levy-Khintchine
/// triplet: `exp(i u^T gamma~ + int (e^{iu^T x} - 1 - i u^T x 1(||x|| < 1)) nu~(dx))`.
pub fn cf_stationary(spec: &OuSpec, u: &DVector<f64>) -> Result<Complex64> {
    check_u(spec.dim(), u)?;
    let terms = AtomTerms::new(&spec.driver.levy_measure)?;
    if terms.atoms.is_empty() || u.iter().all(|x| *x == 0.0) {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let gamma = stationary_gamma_tilde(spec)?;
    let eval = |t: f64| terms.truncated(&linalg::expm(&(-&spec.drift * t)), u);
    let re = integrate_in_time(|t| eval(t).re, spec, terms.alpha, CF_ABS_TOL)?;
    let im = integrate_in_time(|t| eval(t).im, spec, terms.alpha, CF_ABS_TOL)?;
    Ok(Complex64::new(re, im + u.dot(&gamma)).exp())
}

fn check_u(dim: usize, u: &DVector<f64>) -> Result<()> {
    if u.len() != dim {
        return Err(invalid("u", format!("length {} for a {dim}-dimensional law", u.len())));
    }
    if !linalg::all_finite(u) {
        return Err(Error::NonFinite("u".into()));
    }
    Ok(())
}

/// Weights of a rule on `times[0..=k]`: Simpson when the grid is uniform with
/// an even number of intervals, Simpson plus a closing three-point panel when
/// odd, trapezoid on non-uniform grids.
fn grid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len() - 1;
    let mut w = vec![0.0; n + 1];
    if n == 0 {
        return w;
    }
    let h = (times[n] - times[0]) / n as f64;
    let uniform = times.windows(2).all(|p| ((p[1] - p[0]) - h).abs() <= 1e-9 * h);
    if !uniform || n < 2 {
        for k in 0..n {
            let dt = times[k + 1] - times[k];
            w[k] += dt / 2.0;
            w[k + 1] += dt / 2.0;
        }
        return w;
    }
    let even = if n.is_multiple_of(2) { n } else { n - 1 };
    for k in (0..even).step_by(2) {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
    }
    if even < n {
        // Integral over the last interval of the quadratic through the last three points.
        w[n - 2] += -h / 12.0;
        w[n - 1] += 8.0 * h / 12.0;
        w[n] += 5.0 * h / 12.0;
    }
    w
}

fn grid_index(times: &[f64], t: f64) -> Result<usize> {
    times
        .iter()
        .position(|s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
        .ok_or_else(|| Error::GridMismatch(format!("t = {t} is not on the fundamental-matrix grid")))
}

fn additive_inputs<'a>(
    times: &'a [f64],
    phi_path: &'a [DMatrix<f64>],
    triplet_path: &'a [LevyTriplet],
    t: f64,
) -> Result<(usize, Vec<DMatrix<f64>>, Vec<AtomTerms>)> {
    if times.len() != phi_path.len() || times.len() != triplet_path.len() {
        return Err(Error::GridMismatch(format!(
            "{} times, {} matrices, {} triplets",
            times.len(),
            phi_path.len(),
            triplet_path.len()
        )));
    }
    let k = grid_index(times, t)?;
    let phi_t = &phi_path[k];
    let maps = phi_path[..=k]
        .iter()
        .map(|p| linalg::inverse(p).map(|inv| phi_t * inv))
        .collect::<Result<Vec<_>>>()?;
    let terms = triplet_path[..=k].iter().map(|tr| AtomTerms::new(&tr.levy_measure)).collect::<Result<Vec<_>>>()?;
    Ok((k, maps, terms))
}

/// Centring vector `gamma~_t` of the additive process
/// `int_0^t Phi(t) Phi(s)^{-1} dL_s` driven by `nu(theta_bar(s))`.
pub fn additive_gamma_tilde(times: &[f64], phi_path: &[DMatrix<f64>], triplet_path: &[LevyTriplet], t: f64) -> Result<DVector<f64>> {
    let (k, maps, terms) = additive_inputs(times, phi_path, triplet_path, t)?;
    let w = grid_weights(&times[..=k]);
    let d = phi_path[0].nrows();
    let mut g = DVector::zeros(d);
    for j in 0..=k {
        let integrand = terms[j].indicator_drift(&maps[j]) - &maps[j] * &triplet_path[j].drift_gamma;
        g.axpy(w[j], &integrand, 1.0);
    }
    Ok(g)
}

/// Characteristic function at `u` of the additive process at time `t`, by
/// quadrature over the fundamental-matrix grid. `t` must be a grid time.
pub fn cf_additive_ou(times: &[f64], phi_path: &[DMatrix<f64>], triplet_path: &[LevyTriplet], t: f64, u: &DVector<f64>) -> Result<Complex64> {
    let (k, maps, terms) = additive_inputs(times, phi_path, triplet_path, t)?;
    check_u(phi_path[0].nrows(), u)?;
    let w = grid_weights(&times[..=k]);
    let gamma = additive_gamma_tilde(times, phi_path, triplet_path, t)?;
    let mut psi = Complex64::new(0.0, u.dot(&gamma));
    for j in 0..=k {
        psi += terms[j].truncated(&maps[j], u) * w[j];
    }
    if !(psi.re.is_finite() && psi.im.is_finite()) {
        return Err(Error::NonFinite("additive-process exponent".into()));
    }
    Ok(psi.exp())
}

/// Same exponent through the reduced per-atom form, without `gamma~_t`.
pub fn additive_exponent(times: &[f64], phi_path: &[DMatrix<f64>], triplet_path: &[LevyTriplet], t: f64, u: &DVector<f64>) -> Result<Complex64> {
    let (k, maps, terms) = additive_inputs(times, phi_path, triplet_path, t)?;
    check_u(phi_path[0].nrows(), u)?;
    let w = grid_weights(&times[..=k]);
    Ok((0..=k).map(|j| terms[j].reduced(&maps[j], u) * w[j]).sum())
}

type Exponent = dyn Fn(&DVector<f64>) -> Result<Complex64> + Send + Sync;

/// Characteristic function given by its exponent `psi`, with the controls used
/// to invert it. One-dimensional evaluators support density, CDF and quantile
/// inversion.
#[derive(Clone)]
pub struct CfEvaluator {
    dim: usize,
    exponent: Arc<Exponent>,
    cutoff: Arc<OnceLock<f64>>,
    /// Tail index when the law is strictly stable.
    pub tail_index: Option<f64>,
}

impl std::fmt::Debug for CfEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CfEvaluator").field("dim", &self.dim).field("tail_index", &self.tail_index).finish()
    }
}

impl CfEvaluator {
    pub fn from_exponent<F>(dim: usize, exponent: F) -> Self
    where
        F: Fn(&DVector<f64>) -> Result<Complex64> + Send + Sync + 'static,
    {
        Self { dim, exponent: Arc::new(exponent), cutoff: Arc::new(OnceLock::new()), tail_index: None }
    }

    /// One-dimensional law with exponent `psi(t)`.
    pub fn scalar<F>(exponent: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Self::from_exponent(1, move |u| Ok(exponent(u[0])))
    }

    /// One-dimensional strictly `alpha`-stable law fixed by `psi(1)`:
    /// `psi(t) = t^alpha psi(1)` for `t > 0` and its conjugate for `t < 0`.
    pub fn homogeneous(alpha: f64, psi_one: Complex64) -> Self {
        let mut e = Self::scalar(move |t| {
            let m = t.abs().powf(alpha);
            if t >= 0.0 {
                psi_one * m
            } else {
                psi_one.conj() * m
            }
        });
        e.tail_index = Some(alpha);
        e
    }

    pub fn stable(params: StableParams) -> Self {
        let mut e = Self::scalar(move |t| params.cf(t).ln());
        e.tail_index = Some(params.alpha);
        e
    }

    pub fn gaussian(mean: f64, variance: f64) -> Self {
        Self::scalar(move |t| Complex64::new(-0.5 * variance * t * t, mean * t))
    }

    /// Full stationary law of `spec`, through the Levy-Khintchine triplet.
    pub fn stationary(spec: &OuSpec) -> Self {
        let spec = spec.clone();
        Self::from_exponent(spec.dim(), move |u| Ok(cf_stationary(&spec, u)?.ln()))
    }

    /// Law of `direction^T Z_inf`.
    pub fn stationary_marginal(spec: &OuSpec, direction: &DVector<f64>) -> Result<Self> {
        let psi = stationary_exponent(spec, direction)?;
        Ok(Self::homogeneous(spec.driver.alpha(), psi))
    }

    /// Law of `direction^T Z_t` for the additive process on a fundamental-matrix grid.
    pub fn additive_marginal(
        times: &[f64],
        phi_path: &[DMatrix<f64>],
        triplet_path: &[LevyTriplet],
        t: f64,
        direction: &DVector<f64>,
    ) -> Result<Self> {
        let psi = additive_exponent(times, phi_path, triplet_path, t, direction)?;
        let alpha = triplet_path.first().map(|tr| tr.alpha()).ok_or_else(|| invalid("triplet_path", "empty"))?;
        Ok(Self::homogeneous(alpha, psi))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exponent(&self, u: &DVector<f64>) -> Result<Complex64> {
        check_u(self.dim, u)?;
        (self.exponent)(u)
    }

    pub fn cf(&self, u: &DVector<f64>) -> Result<Complex64> {
        Ok(self.exponent(u)?.exp())
    }

    pub fn cf1(&self, t: f64) -> Result<Complex64> {
        self.cf(&DVector::from_element(1, t))
    }

    fn scalar_cf(&self) -> Result<impl Fn(f64) -> Complex64 + '_> {
        if self.dim != 1 {
            return Err(Error::UnsupportedRegime(format!("inversion needs a one-dimensional law, got dimension {}", self.dim)));
        }
        Ok(move |t: f64| self.cf1(t).unwrap_or(Complex64::new(f64::NAN, f64::NAN)))
    }

    fn t_max(&self) -> Result<f64> {
        if let Some(t) = self.cutoff.get() {
            return Ok(*t);
        }
        let cf = self.scalar_cf()?;
        let t = cf_cutoff(&cf)?;
        Ok(*self.cutoff.get_or_init(|| t))
    }
}

/// Densities on a grid, clipped to be nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityValues {
    pub values: Vec<f64>,
    /// Points where the raw inversion fell below `-1e-8`.
    pub clip_events: usize,
}

pub fn invert_cf_density(cf: &CfEvaluator, x_grid: &[f64]) -> Result<DensityValues> {
    if x_grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("x_grid".into()));
    }
    let t_max = cf.t_max()?;
    let phi = cf.scalar_cf()?;
    let mut clip_events = 0;
    let mut values = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let f = cf_density(&phi, x, t_max)?;
        if f < -1e-8 {
            clip_events += 1;
        }
        values.push(f.max(0.0));
    }
    Ok(DensityValues { values, clip_events })
}

pub fn invert_cf_cdf(cf: &CfEvaluator, x: f64) -> Result<f64> {
    let t_max = cf.t_max()?;
    let phi = cf.scalar_cf()?;
    cf_cdf(&phi, x, t_max)
}

/// Solves `F(x) = p` by bisection on the Gil-Pelaez CDF.
pub fn invert_cf_quantile(cf: &CfEvaluator, p: f64) -> Result<f64> {
    let scale = cf.exponent(&DVector::from_element(1, 1.0))?.norm().max(1e-300);
    let width = match cf.tail_index {
        Some(a) => scale.powf(1.0 / a),
        None => scale.sqrt(),
    };
    invert_cdf(|x| invert_cf_cdf(cf, x), p, width, 1e-10)
}

/// CDF tabulated on a sinh-spaced grid between two quantiles and interpolated
/// with cubic Hermite polynomials using the inverted density as slopes. Beyond
/// the grid a strictly stable law continues with Pareto tails matched at the
/// end points; otherwise the end values are held.
#[derive(Debug, Clone)]
pub struct TabulatedCdf {
    xs: Vec<f64>,
    fs: Vec<f64>,
    ds: Vec<f64>,
    tail_index: Option<f64>,
}

impl TabulatedCdf {
    pub fn from_cf(cf: &CfEvaluator, tail_mass: f64, points: usize) -> Result<Self> {
        if !(tail_mass > 0.0 && tail_mass < 0.5) || points < 8 {
            return Err(invalid("tail_mass", "need tail mass in (0, 1/2) and at least 8 points"));
        }
        let lo = invert_cf_quantile(cf, tail_mass)?;
        let hi = invert_cf_quantile(cf, 1.0 - tail_mass)?;
        let q1 = invert_cf_quantile(cf, 0.25)?;
        let q3 = invert_cf_quantile(cf, 0.75)?;
        let centre = 0.5 * (q1 + q3);
        let s = (0.5 * (q3 - q1)).max(1e-12);
        let (a, b) = (((lo - centre) / s).asinh(), ((hi - centre) / s).asinh());
        let xs: Vec<f64> = (0..points).map(|k| centre + s * (a + (b - a) * k as f64 / (points - 1) as f64).sinh()).collect();
        let fs = xs.iter().map(|x| invert_cf_cdf(cf, *x)).collect::<Result<Vec<_>>>()?;
        let ds = invert_cf_density(cf, &xs)?.values;
        Ok(Self { xs, fs, ds, tail_index: cf.tail_index })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return match self.tail_index {
                Some(a) if self.xs[0] < 0.0 && x < 0.0 => self.fs[0] * (self.xs[0] / x).powf(a),
                _ => self.fs[0],
            };
        }
        if x >= self.xs[n - 1] {
            return match self.tail_index {
                Some(a) if self.xs[n - 1] > 0.0 => 1.0 - (1.0 - self.fs[n - 1]) * (self.xs[n - 1] / x).powf(a),
                _ => self.fs[n - 1],
            };
        }
        let k = self.xs.partition_point(|v| *v <= x) - 1;
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let h = x1 - x0;
        let s = (x - x0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        (h00 * self.fs[k] + h10 * h * self.ds[k] + h01 * self.fs[k + 1] + h11 * h * self.ds[k + 1]).clamp(0.0, 1.0)
    }

    pub fn grid(&self) -> &[f64] {
        &self.xs
    }
}

/// Levy triplets along a flow, one per stored time.
pub fn triplet_path(model: &crate::models::ModelSpec, flow: &Trajectory) -> Result<Vec<LevyTriplet>> {
    flow.states.iter().map(|s| model.levy_triplet_at(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::AngularAtom;
    use htsgd_oracles::stable_cdf;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_vec(xs.to_vec())
    }

    fn scalar_spec(h: f64, alpha: f64) -> OuSpec {
        OuSpec::scalar(h, &StableParams::standard(alpha).unwrap()).unwrap()
    }

    fn skewed_2d() -> OuSpec {
        let law = RegularVaryingLaw::new(
            1.6,
            0.7,
            vec![
                AngularAtom::new(v(&[1.0, 0.0]), 0.5),
                AngularAtom::new(v(&[0.6, 0.8]), 0.3),
                AngularAtom::new(v(&[0.0, -1.0]), 0.2),
            ],
        )
        .unwrap();
        let h = DMatrix::from_row_slice(2, 2, &[1.5, 0.7, -0.2, 1.0]);
        OuSpec::new(h, LevyTriplet::new(law)).unwrap()
    }

    fn ks_against<F: Fn(f64) -> f64>(mut xs: Vec<f64>, cdf: F) -> f64 {
        xs.sort_unstable_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, x)| {
                let f = cdf(*x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn spec_validation() {
        let tr = LevyTriplet::from_stable(&StableParams::standard(1.5).unwrap()).unwrap();
        assert!(OuSpec::new(DMatrix::from_element(1, 1, -1.0), tr.clone()).is_err());
        assert!(OuSpec::new(DMatrix::identity(2, 2), tr.clone()).is_err());
        assert!(scalar_spec(1.0, 1.5).shifted(2.0).is_err());
    }

    #[test]
    fn driver_increments() {
        let mut rng = RngState::from_seed(3);
        let one_atom = LevyTriplet::new(RegularVaryingLaw::new(1.5, 1.0, vec![AngularAtom::new(v(&[1.0, 0.0]), 1.0)]).unwrap());
        for _ in 0..1000 {
            let inc = simulate_levy_increment(&one_atom, 0.1, &mut rng).unwrap();
            assert_eq!(inc.value[1], 0.0);
            assert!(!inc.degenerate);
        }
        let zero = LevyTriplet::new(RegularVaryingLaw::degenerate(1.5, 2));
        let inc = simulate_levy_increment(&zero, 0.1, &mut rng).unwrap();
        assert!(inc.degenerate && inc.value.norm() == 0.0);
        assert!(simulate_levy_increment(&one_atom, 0.0, &mut rng).is_err());
    }

    #[test]
    fn symmetric_driver_has_balanced_signs() {
        let m = crate::models::ModelSpec::quadratic_reference(1.5).unwrap();
        let tr = m.levy_triplet_at(&v(&[0.0, 0.0])).unwrap();
        let driver = StableDriver::new(&tr).unwrap();
        let mut rng = RngState::from_seed(8);
        let n = 100_000;
        let mut s = [0.0; 2];
        for _ in 0..n {
            let inc = driver.increment(0.3, &mut rng).unwrap().value;
            s[0] += inc[0].signum();
            s[1] += inc[1].signum();
        }
        for x in s {
            assert!((x / n as f64).abs() < 4.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn increments_obey_alpha_scaling() {
        let tr = LevyTriplet::from_stable(&StableParams::new(1.5, 0.4, 1.0, 0.0).unwrap()).unwrap();
        let driver = StableDriver::new(&tr).unwrap();
        let mut rng = RngState::from_seed(12);
        let n = 1_000_000;
        let a: Vec<f64> = (0..n).map(|_| driver.increment(0.2, &mut rng).unwrap().value[0]).collect();
        let b: Vec<f64> = (0..n).map(|_| driver.increment(0.4, &mut rng).unwrap().value[0]).collect();
        for u in [0.5, 1.0, 2.0] {
            let pa = crate::rng::empirical_cf(&a, u).unwrap();
            let pb = crate::rng::empirical_cf(&b, u).unwrap();
            assert!((pb - pa * pa).norm() < 0.02);
        }
    }

    #[test]
    fn ou_deterministic_steps() {
        let spec = OuSpec::scalar(1.0, &StableParams::new(1.5, 0.0, 0.0, 0.0).unwrap()).unwrap();
        let mut rng = RngState::from_seed(1);
        let p = simulate_ou_path(&spec, &v(&[1.0]), 1.0, 0.01, &mut rng).unwrap();
        assert!((p.last()[0] - (-1f64).exp()).abs() < 1e-12);
        let one = simulate_ou_path(&spec, &v(&[1.0]), 0.1, 0.1, &mut rng).unwrap();
        assert!((one.last()[0] - (-0.1f64).exp()).abs() < 1e-15);
        let (t, dt) = spec.default_stationary_grid();
        assert_eq!(sample_stationary(&spec, &mut rng, t, dt).unwrap().value[0], 0.0);
        assert!(matches!(sample_stationary(&spec, &mut rng, 1.0, 0.01), Err(Error::Config(_))));
    }

    #[test]
    fn scalar_exponent_has_closed_form() {
        // h = 2, alpha = 1.5: psi(u) = -|u|^alpha / (alpha h) = -1/3 at u = 1.
        let spec = scalar_spec(2.0, 1.5);
        let psi = stationary_exponent(&spec, &v(&[1.0])).unwrap();
        assert!((psi.re + 1.0 / 3.0).abs() < 1e-11 && psi.im.abs() < 1e-15);
        let phi = cf_stationary(&spec, &v(&[1.0])).unwrap();
        assert!((phi.norm() - (-1.0f64 / 3.0).exp()).abs() < 1e-11);
        assert_eq!(cf_stationary(&spec, &v(&[0.0])).unwrap(), Complex64::new(1.0, 0.0));
        // Skewed driver: psi(u) = -sigma^alpha |u|^alpha (1 - i beta sgn(u) tan(pi alpha / 2)) / (alpha h).
        let p = StableParams::new(1.3, -0.6, 0.8, 0.0).unwrap();
        let spec = OuSpec::scalar(0.9, &p).unwrap();
        for u in [-2.0, 0.7] {
            let expected = p.cf(u).ln() / (1.3 * 0.9);
            let got = stationary_exponent(&spec, &v(&[u])).unwrap();
            assert!((got - expected).norm() < 1e-10, "{got} vs {expected}");
            let full = cf_stationary(&spec, &v(&[u])).unwrap().ln();
            assert!((full - expected).norm() < 1e-10, "{full} vs {expected}");
        }
    }

    #[test]
    fn triplet_route_agrees_with_reduced_route() {
        let spec = skewed_2d();
        assert!(stationary_gamma_tilde(&spec).unwrap().norm() > 1e-3);
        for u in [v(&[1.0, 0.0]), v(&[-0.4, 1.3]), v(&[2.0, -1.0])] {
            let full = cf_stationary(&spec, &u).unwrap();
            let reduced = stationary_exponent(&spec, &u).unwrap().exp();
            assert!((full - reduced).norm() < 1e-10, "{full} vs {reduced}");
            let minus = cf_stationary(&spec, &-&u).unwrap();
            assert!((minus - full.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn gamma_tilde_vanishes_for_symmetric_drivers() {
        let m = crate::models::ModelSpec::quadratic(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            v(&[0.0, 0.0]),
            StableParams::standard(1.5).unwrap(),
        )
        .unwrap();
        let tr = m.levy_triplet_at(&v(&[0.0, 0.0])).unwrap();
        let spec = OuSpec::new(m.hessian(&v(&[0.0, 0.0])).unwrap(), tr).unwrap();
        assert!(stationary_gamma_tilde(&spec).unwrap().norm() < 1e-12);
    }

    fn additive_setup(spec_model: &crate::models::ModelSpec, horizon: f64, dt: f64) -> (Trajectory, Vec<DMatrix<f64>>, Vec<LevyTriplet>) {
        let theta0 = DVector::zeros(spec_model.dim());
        let flow = crate::dynamics::gradient_flow(spec_model, &theta0, horizon, dt).unwrap();
        let phis = crate::dynamics::fundamental_matrix(spec_model, &flow).unwrap();
        let trips = triplet_path(spec_model, &flow).unwrap();
        (flow, phis, trips)
    }

    #[test]
    fn additive_process_converges_to_the_stationary_law() {
        let m = crate::models::ModelSpec::quadratic(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            v(&[1.0, -1.0]),
            StableParams::new(1.5, 0.3, 1.0, 0.0).unwrap(),
        )
        .unwrap();
        let (flow, phis, trips) = additive_setup(&m, 20.0, 0.01);
        let spec = OuSpec::new(m.hessian(&v(&[0.0, 0.0])).unwrap(), trips[0].clone()).unwrap();
        let t_end = *flow.times.last().unwrap();
        for u in [v(&[1.0, 0.0]), v(&[0.3, -1.2])] {
            let a = cf_additive_ou(&flow.times, &phis, &trips, t_end, &u).unwrap();
            let s = cf_stationary(&spec, &u).unwrap();
            assert!((a.norm() - s.norm()).abs() < 1e-4);
            assert!((a - s).norm() < 1e-4);
            let reduced = additive_exponent(&flow.times, &phis, &trips, t_end, &u).unwrap().exp();
            assert!((a - reduced).norm() < 1e-8);
        }
        assert_eq!(cf_additive_ou(&flow.times, &phis, &trips, 0.0, &v(&[1.0, 1.0])).unwrap(), Complex64::new(1.0, 0.0));
        assert!(matches!(cf_additive_ou(&flow.times, &phis, &trips, 0.005, &v(&[1.0, 1.0])), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn symmetric_additive_process_is_real() {
        let m = crate::models::ModelSpec::quadratic_reference(1.4).unwrap();
        let (flow, phis, trips) = additive_setup(&m, 2.0, 0.01);
        assert!(additive_gamma_tilde(&flow.times, &phis, &trips, 1.5).unwrap().norm() < 1e-14);
        for u in [v(&[1.0, 0.0]), v(&[-0.7, 2.0])] {
            let phi = cf_additive_ou(&flow.times, &phis, &trips, 1.5, &u).unwrap();
            assert!(phi.im.abs() < 1e-14 && phi.re > 0.0 && phi.re < 1.0);
        }
    }

    #[test]
    fn odd_grids_are_integrated_at_third_order() {
        let times: Vec<f64> = (0..=7).map(|k| k as f64 * 0.25).collect();
        let w = grid_weights(&times);
        let integral: f64 = times.iter().zip(&w).map(|(t, w)| w * t * t).sum();
        assert!((integral - 1.75f64.powi(3) / 3.0).abs() < 1e-14);
        let uneven = grid_weights(&[0.0, 0.5, 2.0]);
        assert!((uneven.iter().sum::<f64>() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn inversion_of_closed_form_laws() {
        let cauchy = CfEvaluator::stable(StableParams::new(1.0, 0.0, 1.0, 0.0).unwrap());
        let d = invert_cf_density(&cauchy, &[0.0]).unwrap();
        assert!((d.values[0] - 1.0 / PI).abs() < 1e-6);
        let q = invert_cf_quantile(&cauchy, 0.975).unwrap();
        assert!((q - (0.475 * PI).tan()).abs() < 1e-4);
        let gauss = CfEvaluator::gaussian(0.0, 1.0);
        let xs = [-3.0, -1.0, 0.0, 0.4, 2.0];
        let d = invert_cf_density(&gauss, &xs).unwrap();
        for (x, f) in xs.iter().zip(&d.values) {
            assert!((f - (-x * x / 2.0f64).exp() / (2.0 * PI).sqrt()).abs() < 1e-6);
        }
        assert_eq!(d.clip_events, 0);
        let spec = scalar_spec(2.0, 1.5);
        let marg = CfEvaluator::stationary_marginal(&spec, &v(&[1.0])).unwrap();
        assert!(invert_cf_quantile(&marg, 0.5).unwrap().abs() < 1e-8);
        let qs: Vec<f64> = [0.1, 0.3, 0.6, 0.9].iter().map(|p| invert_cf_quantile(&marg, *p).unwrap()).collect();
        assert!(qs.windows(2).all(|w| w[0] < w[1]));
        let two = CfEvaluator::stationary(&skewed_2d());
        assert!(invert_cf_density(&two, &[0.0]).is_err());
    }

    #[test]
    fn inverted_density_is_normalised() {
        let spec = scalar_spec(1.0, 1.5);
        let marg = CfEvaluator::stationary_marginal(&spec, &v(&[1.0])).unwrap();
        let lo = invert_cf_quantile(&marg, 1e-6).unwrap();
        let hi = invert_cf_quantile(&marg, 1.0 - 1e-6).unwrap();
        // Integrate on a sinh grid fine in the centre.
        let n = 4000;
        let s = 1.0;
        let (a, b) = ((lo / s).asinh(), (hi / s).asinh());
        let ys: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
        let xs: Vec<f64> = ys.iter().map(|y| s * y.sinh()).collect();
        let dens = invert_cf_density(&marg, &xs).unwrap().values;
        let vals: Vec<f64> = ys.iter().zip(&dens).map(|(y, f)| f * s * y.cosh()).collect();
        let mass = crate::numerics::quadrature::simpson(&vals, (b - a) / n as f64).unwrap();
        assert!((mass - (1.0 - 2e-6)).abs() < 1e-4, "mass {mass}");
    }

    #[test]
    fn stationary_marginal_matches_zolotarev_cdf() {
        let alpha = 1.5;
        let spec = scalar_spec(2.0, alpha);
        let sigma = (alpha * 2.0f64).powf(-1.0 / alpha);
        let marg = CfEvaluator::stationary_marginal(&spec, &v(&[1.0])).unwrap();
        let table = TabulatedCdf::from_cf(&marg, 1e-4, 400).unwrap();
        for x in [-3.0, -0.5, 0.0, 0.2, 1.1, 4.0] {
            let exact = stable_cdf(alpha, x / sigma);
            assert!((invert_cf_cdf(&marg, x).unwrap() - exact).abs() < 1e-7);
            assert!((table.cdf(x) - exact).abs() < 1e-6);
        }
        assert!((table.cdf(-1e6) - stable_cdf(alpha, -1e6 / sigma)).abs() < 1e-6);
    }

    #[test]
    fn stationary_samples_match_the_analytic_law() {
        let alpha = 1.5;
        let sigma = (alpha * 2.0f64).powf(-1.0 / alpha);
        let spec = scalar_spec(2.0, alpha);
        let (t, dt) = spec.default_stationary_grid();
        let xs: Vec<f64> = (0..20_000u64)
            .map(|r| sample_stationary(&spec, &mut RngState::for_replication(31, r), t, dt).unwrap().value[0])
            .collect();
        let ks = ks_against(xs, |x| stable_cdf(alpha, x / sigma));
        assert!(ks < 0.02, "ks {ks}");
    }

    #[test]
    fn ou_path_semigroup_and_stationarity() {
        let spec = scalar_spec(1.0, 1.6);
        let (tt, dt) = spec.default_stationary_grid();
        let n = 5_000u64;
        let mut twice = Vec::new();
        let mut once = Vec::new();
        let mut from_stat_t = Vec::new();
        let mut from_stat_2t = Vec::new();
        for r in 0..n {
            let mut rng = RngState::for_replication(40, r);
            let z0 = v(&[2.0]);
            let mid = simulate_ou_path(&spec, &z0, 1.0, 0.01, &mut rng).unwrap();
            twice.push(simulate_ou_path(&spec, mid.last(), 1.0, 0.01, &mut rng).unwrap().last()[0]);
            once.push(simulate_ou_path(&spec, &z0, 2.0, 0.01, &mut rng).unwrap().last()[0]);
            let s = sample_stationary(&spec, &mut rng, tt, dt).unwrap().value;
            let path = simulate_ou_path(&spec, &s, 2.0, 0.01, &mut rng).unwrap();
            from_stat_t.push(path.states[100][0]);
            from_stat_2t.push(path.last()[0]);
        }
        let two_sample = |mut a: Vec<f64>, mut b: Vec<f64>| {
            a.sort_unstable_by(f64::total_cmp);
            b.sort_unstable_by(f64::total_cmp);
            let ecdf = |s: &[f64], x: f64| s.partition_point(|y| *y <= x) as f64 / s.len() as f64;
            a.iter().chain(&b).map(|x| (ecdf(&a, *x) - ecdf(&b, *x)).abs()).fold(0.0, f64::max)
        };
        // Two-sample KS: with n = 5000 per side the 99.9% critical value is about 0.039.
        assert!(two_sample(twice, once) < 0.04);
        assert!(two_sample(from_stat_t, from_stat_2t) < 0.04);
    }

    #[test]
    fn stationary_quantiles_scale_with_the_driver() {
        let base = scalar_spec(1.0, 1.5);
        let doubled = OuSpec::scalar(1.0, &StableParams::new(1.5, 0.0, 2.0, 0.0).unwrap()).unwrap();
        let (t, dt) = base.default_stationary_grid();
        let q90 = |spec: &OuSpec| {
            let mut xs: Vec<f64> =
                (0..10_000u64).map(|r| sample_stationary(spec, &mut RngState::for_replication(50, r), t, dt).unwrap().value[0]).collect();
            xs.sort_unstable_by(f64::total_cmp);
            xs[9_000]
        };
        let ratio = q90(&doubled) / q90(&base);
        assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn exponent_has_nonpositive_real_part(u1 in -5.0f64..5.0, u2 in -5.0f64..5.0) {
            let spec = skewed_2d();
            let psi = stationary_exponent(&spec, &v(&[u1, u2])).unwrap();
            prop_assert!(psi.re <= 0.0);
        }
    }
}
