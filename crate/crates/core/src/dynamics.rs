//! SGD recursion, gradient flow, fundamental matrix and scaled error processes.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::models::ModelSpec;
use crate::numerics::{linalg, ode::rk4_step};
use crate::rng::RngState;

/// Iterates whose norm exceeds this are treated as diverged.
pub const DIVERGENCE_NORM: f64 = 1e300;

/// Tolerance when matching two time grids.
pub const GRID_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    Constant { eta: f64 },
    /// `eta_n = c (n + shift)^{-rho}` for `n >= 1`.
    Polynomial { c: f64, rho: f64, shift: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub kind: ScheduleKind,
}

impl StepSchedule {
    pub fn constant(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid("eta", format!("{eta} must be positive")));
        }
        Ok(Self { kind: ScheduleKind::Constant { eta } })
    }

    pub fn polynomial(c: f64, rho: f64) -> Result<Self> {
        Self::polynomial_shifted(c, rho, 0.0)
    }

    pub fn polynomial_shifted(c: f64, rho: f64, shift: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("c", format!("{c} must be positive")));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(invalid("rho", format!("{rho} not in (0, 1]")));
        }
        if !(shift >= 0.0 && shift.is_finite()) {
            return Err(invalid("shift", format!("{shift} must be nonnegative")));
        }
        Ok(Self { kind: ScheduleKind::Polynomial { c, rho, shift } })
    }

    /// Step size used for update `n` (1-based).
    pub fn eta(&self, n: usize) -> f64 {
        match self.kind {
            ScheduleKind::Constant { eta } => eta,
            ScheduleKind::Polynomial { c, rho, shift } => c * (n as f64 + shift).powf(-rho),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, ScheduleKind::Constant { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<DVector<f64>>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(invalid("trajectory", format!("{} times but {} states", times.len(), states.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("times", "not strictly increasing"));
        }
        if states.iter().any(|s| !linalg::all_finite(s)) {
            return Err(Error::NonFinite("trajectory state".into()));
        }
        Ok(Self { times, states })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &DVector<f64> {
        self.states.last().expect("trajectories are non-empty")
    }

    /// Coordinate `i` of every state.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledErrorPath {
    pub times: Vec<f64>,
    pub values: Vec<DVector<f64>>,
    pub scaling_exponents: Vec<f64>,
}

impl ScaledErrorPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// SGD driven by an arbitrary stochastic-gradient oracle writing into its last argument.
pub fn sgd_run_with<G>(mut gradient: G, schedule: &StepSchedule, theta0: &DVector<f64>, steps: usize, rng: &mut RngState) -> Result<Trajectory>
where
    G: FnMut(&DVector<f64>, &mut RngState, &mut DVector<f64>),
{
    if steps == 0 {
        return Err(invalid("steps", "must be at least 1"));
    }
    if !linalg::all_finite(theta0) {
        return Err(Error::NonFinite("theta0".into()));
    }
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(theta0.clone());
    let mut theta = theta0.clone();
    let mut g = DVector::zeros(theta0.len());
    let mut t = 0.0;
    for n in 1..=steps {
        let eta = schedule.eta(n);
        gradient(&theta, rng, &mut g);
        theta.axpy(-eta, &g, 1.0);
        check_iterate(&theta, n)?;
        t = match schedule.kind {
            ScheduleKind::Constant { eta } => n as f64 * eta,
            ScheduleKind::Polynomial { .. } => t + eta,
        };
        times.push(t);
        states.push(theta.clone());
    }
    Trajectory::new(times, states)
}

fn check_iterate(theta: &DVector<f64>, step: usize) -> Result<()> {
    let norm = theta.norm();
    if !norm.is_finite() || norm > DIVERGENCE_NORM {
        return Err(Error::Diverged { step });
    }
    Ok(())
}

pub fn sgd_run(model: &ModelSpec, schedule: &StepSchedule, theta0: &DVector<f64>, steps: usize, rng: &mut RngState) -> Result<Trajectory> {
    if theta0.len() != model.dim() {
        return Err(invalid("theta0", format!("length {} but the model has dimension {}", theta0.len(), model.dim())));
    }
    sgd_run_with(|th, r, out| model.stochastic_gradient_into(th, r, out), schedule, theta0, steps, rng)
}

/// Final iterate of an SGD run without storing the path, with the last step size used.
pub fn sgd_final(model: &ModelSpec, schedule: &StepSchedule, theta0: &DVector<f64>, steps: usize, rng: &mut RngState) -> Result<(DVector<f64>, f64)> {
    if steps == 0 {
        return Err(invalid("steps", "must be at least 1"));
    }
    let mut theta = theta0.clone();
    let mut g = DVector::zeros(theta0.len());
    for n in 1..=steps {
        model.stochastic_gradient_into(&theta, rng, &mut g);
        theta.axpy(-schedule.eta(n), &g, 1.0);
        check_iterate(&theta, n)?;
    }
    Ok((theta, schedule.eta(steps)))
}

/// Gradient flow evaluated exactly at the requested times, integrating with
/// RK4 substeps no longer than `max_dt`.
pub fn flow_at_times(model: &ModelSpec, theta0: &DVector<f64>, times: &[f64], max_dt: f64) -> Result<Trajectory> {
    if !(max_dt > 0.0) {
        return Err(invalid("dt", format!("{max_dt} must be positive")));
    }
    if times.first().is_none_or(|t| *t < 0.0) {
        return Err(invalid("times", "must be non-empty and start at a nonnegative time"));
    }
    let mut rhs = |_t: f64, y: &DVector<f64>| -> DVector<f64> {
        match model.true_gradient(y) {
            Ok(g) => -g,
            Err(_) => DVector::from_element(y.len(), f64::NAN),
        }
    };
    let mut states = Vec::with_capacity(times.len());
    let mut y = theta0.clone();
    let mut t = 0.0;
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let n = (span / max_dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for k in 0..n {
                y = rk4_step(&mut rhs, t + k as f64 * h, &y, h);
            }
            if !linalg::all_finite(&y) {
                // Surface the model error rather than a bare NaN.
                model.true_gradient(&y)?;
                return Err(Error::NonFinite(format!("gradient flow state at t = {target}")));
            }
        }
        t = target;
        states.push(y.clone());
    }
    Trajectory::new(times.to_vec(), states)
}

/// Uniform grid `0, dt, 2 dt, ...` ending exactly at `horizon`.
pub fn uniform_grid(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && horizon >= dt) {
        return Err(invalid("dt", format!("need 0 < dt <= T, got dt = {dt}, T = {horizon}")));
    }
    let n = (horizon / dt - 1e-9).ceil() as usize;
    let mut grid: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    grid.push(horizon);
    Ok(grid)
}

pub fn gradient_flow(model: &ModelSpec, theta0: &DVector<f64>, horizon: f64, dt: f64) -> Result<Trajectory> {
    flow_at_times(model, theta0, &uniform_grid(horizon, dt)?, dt)
}

/// `Phi' = -Hess(theta_bar(t)) Phi`, `Phi(0) = I`, on the grid of `flow`.
/// Each step integrates flow and `Phi` jointly from the stored flow state so
/// the Hessian is evaluated on the RK4 stages.
pub fn fundamental_matrix(model: &ModelSpec, flow: &Trajectory) -> Result<Vec<DMatrix<f64>>> {
    if flow.times[0] != 0.0 {
        return Err(invalid("flow", "must start at t = 0"));
    }
    let d = model.dim();
    let mut out = Vec::with_capacity(flow.len());
    let mut phi = DMatrix::identity(d, d);
    out.push(phi.clone());
    let mut failure: Option<Error> = None;
    for k in 1..flow.len() {
        let h = flow.times[k] - flow.times[k - 1];
        let joint = DMatrix::from_fn(d, d + 1, |i, j| if j == 0 { flow.states[k - 1][i] } else { phi[(i, j - 1)] });
        let mut rhs = |_t: f64, y: &DMatrix<f64>| -> DMatrix<f64> {
            let theta = y.column(0).into_owned();
            let p = y.columns(1, d).into_owned();
            let grad = model.true_gradient(&theta);
            let hess = model.hessian(&theta);
            match (grad, hess) {
                (Ok(g), Ok(hm)) => {
                    let dp = -hm * p;
                    DMatrix::from_fn(d, d + 1, |i, j| if j == 0 { -g[i] } else { dp[(i, j - 1)] })
                }
                (Err(e), _) | (_, Err(e)) => {
                    failure.get_or_insert(e);
                    DMatrix::from_element(d, d + 1, f64::NAN)
                }
            }
        };
        let next = rk4_step(&mut rhs, flow.times[k - 1], &joint, h);
        if let Some(e) = failure.take() {
            return Err(e);
        }
        phi = next.columns(1, d).into_owned();
        if !linalg::all_finite_matrix(&phi) {
            return Err(Error::NonFinite(format!("fundamental matrix at t = {}", flow.times[k])));
        }
        out.push(phi.clone());
    }
    Ok(out)
}

fn check_grids(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} vs {} time points", a.len(), b.len())));
    }
    if let Some((x, y)) = a.iter().zip(b).find(|(x, y)| (*x - *y).abs() > GRID_TOL * (1.0 + x.abs())) {
        return Err(Error::GridMismatch(format!("time {x} vs {y}")));
    }
    Ok(())
}

/// `eta^{e_k} b1 (theta(t_k) - flow(t_k))` with one exponent per time point.
pub fn scaled_error_with_exponents(sgd: &Trajectory, flow: &Trajectory, eta: f64, exponents: &[f64], b1: f64) -> Result<ScaledErrorPath> {
    check_grids(&sgd.times, &flow.times)?;
    if exponents.len() != sgd.len() {
        return Err(Error::GridMismatch(format!("{} exponents for {} times", exponents.len(), sgd.len())));
    }
    if !(eta > 0.0) {
        return Err(invalid("eta", format!("{eta} must be positive")));
    }
    let values = sgd
        .states
        .iter()
        .zip(&flow.states)
        .zip(exponents)
        .map(|((s, f), e)| (s - f) * (eta.powf(*e) * b1))
        .collect();
    Ok(ScaledErrorPath { times: sgd.times.clone(), values, scaling_exponents: exponents.to_vec() })
}

/// Constant-step scaled error with exponent `1/alpha - 1` at every time.
pub fn scaled_error_constant(sgd: &Trajectory, flow: &Trajectory, eta: f64, alpha: f64, b1: f64) -> Result<ScaledErrorPath> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(invalid("alpha", format!("{alpha} not in (1, 2]")));
    }
    let exponents = vec![1.0 / alpha - 1.0; sgd.len()];
    scaled_error_with_exponents(sgd, flow, eta, &exponents, b1)
}

/// `eta_n^{1/alpha - 1} b1 (theta_n - theta*)`.
pub fn scaled_error_decay(theta_n: &DVector<f64>, theta_star: &DVector<f64>, eta_n: f64, alpha: f64, b1: f64) -> DVector<f64> {
    (theta_n - theta_star) * (eta_n.powf(1.0 / alpha - 1.0) * b1)
}

/// Identity shift `kappa` of the limiting drift: `(1 - 1/alpha)/c` for
/// `eta_n = c/n`, zero otherwise. `min_curvature` is the smallest Hessian
/// eigenvalue at the optimum; the shifted drift must stay positive.
pub fn drift_correction(schedule: &StepSchedule, alpha: f64, min_curvature: f64) -> Result<f64> {
    match schedule.kind {
        ScheduleKind::Polynomial { c, rho: 1.0, .. } => {
            let kappa = (1.0 - 1.0 / alpha) / c;
            let bound = (1.0 - 1.0 / alpha) / min_curvature;
            if !(c > bound) {
                return Err(Error::Config(format!(
                    "rho = 1 needs c > (1 - 1/alpha) / lambda_min = {bound:.6}, got c = {c}"
                )));
            }
            Ok(kappa)
        }
        _ => Ok(0.0),
    }
}

/// Per-time scaling exponents for the one-dimensional logistic model: heavy
/// (`1/alpha - 1`) where the flow does not share the sign of `theta*`, including
/// the flow sitting exactly at 0, and `-1/2` where it does.
pub fn regime_scaling_logistic(flow: &Trajectory, theta_star: f64, alpha: f64) -> Result<Vec<f64>> {
    if theta_star == 0.0 {
        return Err(Error::UnsupportedRegime("theta* = 0 has no two-regime scaling".into()));
    }
    if flow.states.first().is_some_and(|s| s.len() != 1) {
        return Err(invalid("flow", "regime scaling needs a one-dimensional flow"));
    }
    Ok(flow
        .states
        .iter()
        .map(|s| if s[0] * theta_star > 0.0 { -0.5 } else { 1.0 / alpha - 1.0 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StableParams;
    use htsgd_oracles::expm_taylor;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_vec(xs.to_vec())
    }

    fn silent_quadratic() -> ModelSpec {
        ModelSpec::quadratic(
            DMatrix::from_diagonal(&v(&[2.0, 1.0])),
            v(&[1.0, 1.0]),
            StableParams::new(1.5, 0.0, 0.0, 0.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn schedules() {
        let p = StepSchedule::polynomial(2.0, 0.5).unwrap();
        assert_eq!(p.eta(1), 2.0);
        assert!((p.eta(4) - 1.0).abs() < 1e-15);
        let s = StepSchedule::polynomial_shifted(1.0, 1.0, 1.0).unwrap();
        assert_eq!(s.eta(1), 0.5);
        assert!(StepSchedule::polynomial(1.0, 1.5).is_err());
        assert!(StepSchedule::constant(0.0).is_err());
    }

    #[test]
    fn zero_noise_sgd_is_a_linear_recursion() {
        let m = silent_quadratic();
        let star = m.optimum().unwrap();
        let theta0 = v(&[0.0, 0.0]);
        let tr = sgd_run(&m, &StepSchedule::constant(0.1).unwrap(), &theta0, 20, &mut RngState::from_seed(1)).unwrap();
        assert_eq!(tr.len(), 21);
        assert!((&tr.states[1] - v(&[-0.1, -0.1])).norm() < 1e-15);
        let step = DMatrix::identity(2, 2) - m.hessian(&theta0).unwrap() * 0.1;
        let expected = step.pow(20) * (&theta0 - &star) + &star;
        assert!((tr.last() - expected).norm() < 1e-14);
        assert!((tr.times[20] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn decaying_time_axis_sums_steps() {
        let m = silent_quadratic();
        let s = StepSchedule::polynomial(1.0, 1.0).unwrap();
        let tr = sgd_run(&m, &s, &v(&[0.0, 0.0]), 3, &mut RngState::from_seed(1)).unwrap();
        assert!((tr.times[3] - (1.0 + 0.5 + 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn blow_up_reports_the_step() {
        let m = silent_quadratic();
        let r = sgd_run(&m, &StepSchedule::constant(1e3).unwrap(), &v(&[1.0, 1.0]), 500, &mut RngState::from_seed(1));
        assert!(matches!(r, Err(Error::Diverged { step }) if step > 1 && step < 500));
    }

    #[test]
    fn flow_matches_matrix_exponential() {
        let m = silent_quadratic();
        let star = m.optimum().unwrap();
        let theta0 = &star + v(&[1.0, 1.0]);
        let flow = gradient_flow(&m, &theta0, 5.0, 1e-3).unwrap();
        assert_eq!(flow.states[0], theta0);
        let mut worst: f64 = 0.0;
        for (t, s) in flow.times.iter().zip(&flow.states) {
            let exact = &star + v(&[(-2.0 * t).exp(), (-t).exp()]);
            worst = worst.max((s - exact).amax());
        }
        assert!(worst < 1e-8, "{worst}");
        let at_one = flow_at_times(&m, &theta0, &[1.0], 1e-3).unwrap();
        assert!((&at_one.states[0] - (&star + v(&[(-2f64).exp(), (-1f64).exp()]))).amax() < 1e-12);
    }

    #[test]
    fn fundamental_matrix_for_constant_hessian() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let m = ModelSpec::quadratic(a.clone(), v(&[1.0, -1.0]), StableParams::standard(1.5).unwrap()).unwrap();
        let flow = gradient_flow(&m, &v(&[0.0, 0.0]), 3.0, 1e-3).unwrap();
        let phis = fundamental_matrix(&m, &flow).unwrap();
        assert_eq!(phis[0], DMatrix::identity(2, 2));
        for k in (0..flow.len()).step_by(250) {
            let t = flow.times[k];
            let rows: Vec<Vec<f64>> = (0..2).map(|i| (0..2).map(|j| -a[(i, j)] * t).collect()).collect();
            let oracle = expm_taylor(&rows);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((phis[k][(i, j)] - oracle[i][j]).abs() < 1e-8);
                }
            }
            let inv = linalg::inverse(&phis[k]).unwrap();
            assert!((&phis[k] * inv - DMatrix::identity(2, 2)).amax() < 1e-8);
        }
    }

    #[test]
    fn liouville_formula_along_logistic_flow() {
        let m = ModelSpec::logistic(1.0, 0.1, crate::models::Covariate::Stable(StableParams::standard(1.5).unwrap())).unwrap();
        let flow = gradient_flow(&m, &v(&[0.5]), 2.0, 0.01).unwrap();
        let phis = fundamental_matrix(&m, &flow).unwrap();
        // Trapezoid on a 10x finer flow for the trace integral.
        let fine = gradient_flow(&m, &v(&[0.5]), 2.0, 0.001).unwrap();
        let traces: Vec<f64> = fine.states.iter().map(|s| m.hessian(s).unwrap()[(0, 0)]).collect();
        let integral = crate::numerics::quadrature::simpson(&traces, 0.001).unwrap();
        assert!((phis.last().unwrap()[(0, 0)] - (-integral).exp()).abs() < 1e-6);
    }

    #[test]
    fn zero_noise_sgd_tracks_the_flow_at_first_order() {
        let m = silent_quadratic();
        let theta0 = v(&[0.0, 0.0]);
        let errs: Vec<f64> = [1e-2_f64, 1e-3, 1e-4]
            .iter()
            .map(|&eta| {
                let steps = (1.0 / eta).round() as usize;
                let sgd = sgd_run(&m, &StepSchedule::constant(eta).unwrap(), &theta0, steps, &mut RngState::from_seed(0)).unwrap();
                let flow = flow_at_times(&m, &theta0, &sgd.times, 1e-3).unwrap();
                sgd.states.iter().zip(&flow.states).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            let slope = (w[0] / w[1]).log10();
            assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
        }
    }

    #[test]
    fn scaled_error_examples() {
        let times = vec![0.0, 1.0];
        let sgd = Trajectory::new(times.clone(), vec![v(&[0.0, 0.0]), v(&[1.0, 0.0])]).unwrap();
        let flow = Trajectory::new(times.clone(), vec![v(&[0.0, 0.0]), v(&[0.0, 0.0])]).unwrap();
        let p = scaled_error_constant(&sgd, &flow, 1e-3, 1.25, 1.0).unwrap();
        assert!((p.values[1][0] - 10f64.powf(0.6)).abs() < 1e-12);
        assert!((p.scaling_exponents[0] + 0.2).abs() < 1e-15);
        assert!(scaled_error_constant(&sgd, &sgd, 1e-3, 1.5, 1.0).unwrap().values.iter().all(|x| x.norm() == 0.0));
        let clt = scaled_error_constant(&sgd, &flow, 1e-2, 2.0, 1.0).unwrap();
        assert!((clt.values[1][0] - 10.0).abs() < 1e-12);
        let shifted = Trajectory::new(vec![0.0, 1.0 + 1e-9], flow.states.clone()).unwrap();
        assert!(matches!(scaled_error_constant(&sgd, &shifted, 1e-3, 1.5, 1.0), Err(Error::GridMismatch(_))));
        let d = scaled_error_decay(&v(&[1.0, 0.0]), &v(&[0.0, 0.0]), 0.01, 1.5, 1.0);
        assert!((d[0] - 0.01f64.powf(-1.0 / 3.0)).abs() < 1e-12);
        assert!(scaled_error_decay(&v(&[1.0]), &v(&[1.0]), 0.01, 1.5, 1.0)[0] == 0.0);
    }

    #[test]
    fn drift_correction_cases() {
        let s = StepSchedule::polynomial(1.0, 0.6).unwrap();
        assert_eq!(drift_correction(&s, 1.5, 1.0).unwrap(), 0.0);
        let s = StepSchedule::polynomial(1.0, 1.0).unwrap();
        assert!((drift_correction(&s, 1.5, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let big = StepSchedule::polynomial(1e12, 1.0).unwrap();
        assert!(drift_correction(&big, 1.5, 1.0).unwrap() < 1e-12);
        let bad = StepSchedule::polynomial(0.2, 1.0).unwrap();
        assert!(matches!(drift_correction(&bad, 1.5, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn regime_exponents() {
        let tr = |xs: &[f64]| {
            Trajectory::new((0..xs.len()).map(|k| k as f64).collect(), xs.iter().map(|x| v(&[*x])).collect()).unwrap()
        };
        let heavy = 1.0 / 1.5 - 1.0;
        assert!(regime_scaling_logistic(&tr(&[-1.0, -0.5]), 1.0, 1.5).unwrap().iter().all(|e| *e == heavy));
        assert!(regime_scaling_logistic(&tr(&[0.5, 1.0]), 1.0, 1.5).unwrap().iter().all(|e| *e == -0.5));
        let e = regime_scaling_logistic(&tr(&[-0.5, 0.0, 0.1]), 1.0, 1.5).unwrap();
        assert_eq!(e, vec![heavy, heavy, -0.5]);
        assert!(regime_scaling_logistic(&tr(&[1.0]), 0.0, 1.5).is_err());
    }

    #[test]
    fn decay_iterates_are_tight() {
        let m = ModelSpec::quadratic_reference(1.5).unwrap();
        let star = m.optimum().unwrap();
        let s = StepSchedule::polynomial(1.0, 0.6).unwrap();
        let q99: Vec<f64> = [250, 500, 1000]
            .iter()
            .map(|&n| {
                let mut norms: Vec<f64> = (0..10_000u64)
                    .map(|r| {
                        let (th, eta) = sgd_final(&m, &s, &star, n, &mut RngState::for_replication(9, r)).unwrap();
                        scaled_error_decay(&th, &star, eta, 1.5, 1.0).norm()
                    })
                    .collect();
                norms.sort_unstable_by(f64::total_cmp);
                norms[9_900]
            })
            .collect();
        for w in q99.windows(2) {
            let r = w[1] / w[0];
            assert!((0.5..=2.0).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn gaussian_noise_recovers_clt_scaling() {
        // alpha = 2: scale-1 noise has variance 2, so eta^{-1/2}(theta - flow)
        // at time T is N(0, 2 (1 - e^{-2hT}) / (2h)).
        let h = 1.5;
        let m = ModelSpec::quadratic(DMatrix::from_element(1, 1, h), v(&[0.0]), StableParams::new(2.0, 0.0, 1.0, 0.0).unwrap()).unwrap();
        let eta = 1e-3;
        let steps = 2000;
        let theta0 = v(&[1.0]);
        let flow_end = (-h * steps as f64 * eta).exp();
        let var = 2.0 * (1.0 - (-2.0 * h * steps as f64 * eta).exp()) / (2.0 * h);
        let mut xs: Vec<f64> = (0..2000u64)
            .map(|r| {
                let (th, _) = sgd_final(&m, &StepSchedule::constant(eta).unwrap(), &theta0, steps, &mut RngState::for_replication(5, r)).unwrap();
                (th[0] - flow_end) / eta.sqrt()
            })
            .collect();
        xs.sort_unstable_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let f = htsgd_oracles::normal_cdf(x / var.sqrt());
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.05, "ks {ks}");
    }

    proptest! {
        #[test]
        fn decay_scaling_is_linear(x in -10.0f64..10.0, y in -10.0f64..10.0, eta in 1e-4f64..0.5) {
            let a = scaled_error_decay(&v(&[x, y]), &v(&[0.0, 0.0]), eta, 1.5, 1.3);
            let b = scaled_error_decay(&v(&[2.0 * x, 2.0 * y]), &v(&[0.0, 0.0]), eta, 1.5, 1.3);
            prop_assert!((b - &a * 2.0).amax() <= 1e-12 * (1.0 + a.amax()));
        }
    }
}
