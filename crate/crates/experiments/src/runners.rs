//! One runner per experiment. Runners compute tables, figures and summary
//! statistics in memory; the caller does all file output.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rayon::prelude::*;
use serde_json::{json, Value};

use htsgd_core::dynamics::{
    drift_correction, flow_at_times, regime_scaling_logistic, scaled_error_constant, scaled_error_decay,
    scaled_error_with_exponents, sgd_final, sgd_run, StepSchedule,
};
use htsgd_core::limit_process::{
    invert_cf_cdf, invert_cf_density, invert_cf_quantile, sample_stationary, stationary_exponent, CfEvaluator, OuSpec,
    TabulatedCdf,
};
use htsgd_core::models::{logistic_angular_measure, LevyTriplet, LogisticDesign, ModelSpec, OlsDesign};
use htsgd_core::numerics::fourier::invert_cdf;
use htsgd_core::numerics::linalg::min_eigen_real_part;
use htsgd_core::rng::RngState;
use htsgd_core::stats::{
    conditional_direction_weights, detect_jumps, histogram, ks_distance, linear_edges, EmpiricalSample, JumpNorm,
};

use crate::config::{discrete_law, AngularConfig, B1Mode, ExperimentConfig, ExperimentKind, JumpNormConfig, ModelConfig, ScheduleConfig};
use crate::error::{config_err, ExperimentError, Result};
use crate::svg::{Figure, Series, Style};
use crate::table::Table;

/// Tail mass left outside the tabulated analytic CDFs.
const CDF_TAIL_MASS: f64 = 1e-4;
const CDF_POINTS: usize = 400;

/// Everything an experiment produces before it is written out.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<(String, Table)>,
    pub figures: Vec<(String, Figure)>,
    pub summary: BTreeMap<String, Value>,
    pub divergences: usize,
}

impl RunOutput {
    fn put(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.insert(key.to_string(), v.into());
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    match cfg.experiment {
        ExperimentKind::ConstantPath => constant_path(cfg),
        ExperimentKind::DecayHist => decay_hist(cfg),
        ExperimentKind::Coverage => coverage(cfg),
        ExperimentKind::LogisticPath => logistic_path(cfg),
        ExperimentKind::LogisticHist => logistic_hist(cfg),
        ExperimentKind::StationaryDensity => stationary_density(cfg),
        ExperimentKind::AngularCheck => angular_check(cfg),
    }
}

/// Runs `f` for replication indices `0..count` in parallel, each on its own
/// stream, and returns the surviving results in index order with the number
/// of diverged replications.
fn replicate<T, F>(master_seed: u64, count: usize, f: F) -> Result<(Vec<(usize, T)>, usize)>
where
    T: Send,
    F: Fn(usize, &mut RngState) -> htsgd_core::Result<T> + Sync,
{
    let raw: Vec<htsgd_core::Result<T>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngState::for_replication(master_seed, i as u64);
            f(i, &mut rng)
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    let mut diverged = 0;
    for (i, r) in raw.into_iter().enumerate() {
        match r {
            Ok(v) => out.push((i, v)),
            Err(htsgd_core::Error::Diverged { .. }) => diverged += 1,
            Err(e) => return Err(e.into()),
        }
    }
    if out.is_empty() {
        return Err(ExperimentError::Core(htsgd_core::Error::UndefinedEstimator("every replication diverged".into())));
    }
    Ok((out, diverged))
}

fn jump_norm(cfg: &ExperimentConfig) -> JumpNorm {
    match cfg.jump_norm {
        JumpNormConfig::Euclidean => JumpNorm::Euclidean,
        JumpNormConfig::PerCoordinate => JumpNorm::PerCoordinate,
    }
}

fn constant_eta(cfg: &ExperimentConfig) -> f64 {
    match cfg.schedule {
        ScheduleConfig::Constant { eta } => eta,
        ScheduleConfig::Polynomial { .. } => unreachable!("validated"),
    }
}

/// `b1` used for the scaled error together with the matching limit driver at `theta`.
fn b1_and_driver(cfg: &ExperimentConfig, model: &ModelSpec, theta: &DVector<f64>) -> Result<(f64, LevyTriplet)> {
    let b1 = model.b1_constant()?;
    let triplet = model.levy_triplet_at(theta)?;
    Ok(match cfg.b1 {
        B1Mode::Model => (b1, triplet),
        B1Mode::Unit => (1.0, triplet.scaled(b1.powf(-cfg.alpha))),
    })
}

fn unit(d: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(d);
    e[i] = 1.0;
    e
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut s = xs.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    s
}

fn ks_against(xs: &[f64], cdf: &TabulatedCdf) -> Result<f64> {
    Ok(ks_distance(&EmpiricalSample::from_scalars(xs)?, |x| cdf.cdf(x))?)
}

type Points = Vec<(f64, f64)>;

/// Histogram of `xs` over its central 99% with the analytic density at bin centres.
fn density_table(xs: &[f64], bins: usize, cf: &CfEvaluator) -> Result<(Table, Points, Points)> {
    let s = sorted(xs);
    let q = |p: f64| s[((s.len() - 1) as f64 * p).round() as usize];
    let (mut lo, mut hi) = (q(0.005), q(0.995));
    if !(hi > lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    let edges = linear_edges(lo, hi, bins);
    let h = histogram(&EmpiricalSample::from_scalars(xs)?, &edges)?;
    let centres: Vec<f64> = edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
    let analytic = invert_cf_density(cf, &centres)?.values;
    let fine: Vec<f64> = linear_edges(lo, hi, 4 * bins);
    let curve = invert_cf_density(cf, &fine)?.values;
    let table = Table::new().real("x", centres.clone()).real("empirical_density", h.densities.clone()).real("analytic_density", analytic);
    let bars = centres.into_iter().zip(h.densities).collect();
    Ok((table, bars, fine.into_iter().zip(curve).collect()))
}

fn density_figure(title: String, bars: Points, curve: Points) -> Figure {
    Figure::new(title, "scaled error", "density")
        .with(Series::new("empirical", bars, Style::Bars))
        .with(Series::new("analytic", curve, Style::Line).red())
}

fn constant_path(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = cfg.build_model()?;
    let schedule = cfg.build_schedule()?;
    let eta = constant_eta(cfg);
    let theta0 = cfg.theta0(&model)?;
    let d = model.dim();
    let times: Vec<f64> = (0..=cfg.steps).map(|n| n as f64 * eta).collect();
    let flow = flow_at_times(&model, &theta0, &times, eta)?;
    let b1 = match cfg.b1 {
        B1Mode::Unit => 1.0,
        B1Mode::Model => model.b1_constant()?,
    };
    let norm = jump_norm(cfg);

    let (reps, divergences) = replicate(cfg.master_seed, cfg.replications, |i, rng| {
        let sgd = sgd_run(&model, &schedule, &theta0, cfg.steps, rng)?;
        let path = scaled_error_constant(&sgd, &flow, eta, cfg.alpha, b1)?;
        let jumps = detect_jumps(&path, cfg.jump_threshold, norm)?;
        let detail = (i == 0).then(|| (sgd, path, jumps.clone()));
        Ok((jumps.len(), detail))
    })?;

    let mut out = RunOutput { divergences, ..Default::default() };
    let counts: Vec<i64> = reps.iter().map(|(_, (c, _))| *c as i64).collect();
    let total: i64 = counts.iter().sum();
    out.tables.push((
        "jumps.csv".into(),
        Table::new().int("rep", reps.iter().map(|(i, _)| *i as i64).collect()).int("jump_count", counts.clone()),
    ));
    out.put("mean_jump_count", total as f64 / counts.len() as f64);
    out.put("total_jumps", total);
    out.put("eta", eta);
    out.put("alpha", cfg.alpha);
    out.put("b1", b1);

    if let Some((_, (_, Some((sgd, path, jumps))))) = reps.into_iter().find(|(i, _)| *i == 0) {
        let mut flags = vec![0i64; path.len()];
        for &k in &jumps {
            flags[k] = 1;
        }
        let mut t = Table::new().real("t", path.times.clone());
        for j in 0..d {
            t = t.real(format!("coord{}", j + 1), sgd.coordinate(j));
        }
        for j in 0..d {
            t = t.real(format!("scaled_err{}", j + 1), path.values.iter().map(|v| v[j]).collect());
        }
        out.tables.insert(0, ("path.csv".into(), t.int("jump_flag", flags)));

        let mut fig = Figure::new(format!("constant step, alpha = {}", cfg.alpha), "time (iterations x step size)", "scaled error");
        for j in 0..d {
            let pts = path.times.iter().zip(&path.values).map(|(t, v)| (*t, v[j])).collect();
            fig = fig.with(Series::new(format!("coordinate {}", j + 1), pts, Style::Line));
        }
        let marks = jumps.iter().map(|&k| (path.times[k], path.values[k][0])).collect();
        out.figures.push(("path.svg".into(), fig.with(Series::new("jumps", marks, Style::Markers).red())));
    } else {
        out.put("path_replication_diverged", true);
    }
    Ok(out)
}

/// Stationary limit law for decaying steps, with and without the drift shift.
struct DecayLimit {
    theta_star: DVector<f64>,
    b1: f64,
    kappa: f64,
    corrected: OuSpec,
    uncorrected: OuSpec,
}

fn decay_limit(cfg: &ExperimentConfig, model: &ModelSpec, schedule: &StepSchedule) -> Result<DecayLimit> {
    let theta_star = model.optimum()?;
    let h = model.hessian(&theta_star)?;
    let kappa = drift_correction(schedule, cfg.alpha, min_eigen_real_part(&h))?;
    let (b1, driver) = b1_and_driver(cfg, model, &theta_star)?;
    if driver.is_degenerate() {
        return Err(ExperimentError::OracleUnavailable("the gradient noise has no heavy tail at the optimum".into()));
    }
    let uncorrected = OuSpec::new(h, driver)?;
    let corrected = uncorrected.shifted(kappa)?;
    Ok(DecayLimit { theta_star, b1, kappa, corrected, uncorrected })
}

fn decay_hist(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = cfg.build_model()?;
    let schedule = cfg.build_schedule()?;
    let theta0 = cfg.theta0(&model)?;
    let d = model.dim();
    let lim = decay_limit(cfg, &model, &schedule)?;

    let (reps, divergences) = replicate(cfg.master_seed, cfg.replications, |_, rng| {
        let (theta_n, eta_n) = sgd_final(&model, &schedule, &theta0, cfg.steps, rng)?;
        Ok(scaled_error_decay(&theta_n, &lim.theta_star, eta_n, cfg.alpha, lim.b1))
    })?;

    let mut out = RunOutput { divergences, ..Default::default() };
    let mut t = Table::new().int("rep", reps.iter().map(|(i, _)| *i as i64).collect());
    for j in 0..d {
        t = t.real(format!("scaled_err{}", j + 1), reps.iter().map(|(_, v)| v[j]).collect());
    }
    out.tables.push(("samples.csv".into(), t));

    let mut ks_max: f64 = 0.0;
    for j in 0..d {
        let xs: Vec<f64> = reps.iter().map(|(_, v)| v[j]).collect();
        let cf = CfEvaluator::stationary_marginal(&lim.corrected, &unit(d, j))?;
        let ks = ks_against(&xs, &TabulatedCdf::from_cf(&cf, CDF_TAIL_MASS, CDF_POINTS)?)?;
        ks_max = ks_max.max(ks);
        out.put(&format!("ks_coord{}", j + 1), ks);
        if lim.kappa > 0.0 {
            let cf_u = CfEvaluator::stationary_marginal(&lim.uncorrected, &unit(d, j))?;
            let ks_u = ks_against(&xs, &TabulatedCdf::from_cf(&cf_u, CDF_TAIL_MASS, CDF_POINTS)?)?;
            out.put(&format!("ks_uncorrected_coord{}", j + 1), ks_u);
        }
        let (table, bars, curve) = density_table(&xs, cfg.bins, &cf)?;
        out.tables.push((format!("density_coord{}.csv", j + 1), table));
        out.figures.push((
            format!("density_coord{}.svg", j + 1),
            density_figure(format!("decaying step, alpha = {}, coordinate {}", cfg.alpha, j + 1), bars, curve),
        ));
    }
    out.put("ks_max", ks_max);
    out.put("kappa", lim.kappa);
    out.put("b1", lim.b1);
    out.put("eta_n", schedule.eta(cfg.steps));
    out.put("alpha", cfg.alpha);
    Ok(out)
}

/// Smallest `h` with `P(|Z| <= h) >= level` for a one-dimensional law.
fn symmetric_half_width(cf: &CfEvaluator, level: f64) -> Result<f64> {
    let guess = (invert_cf_quantile(cf, 0.5 + 0.5 * level)? - invert_cf_quantile(cf, 0.5 - 0.5 * level)?).abs() * 0.5;
    let g = |h: f64| Ok(invert_cf_cdf(cf, h)? - invert_cf_cdf(cf, -h)?);
    Ok(invert_cdf(g, level, guess.max(1e-12), 1e-10)?)
}

fn coverage(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = cfg.build_model()?;
    let schedule = cfg.build_schedule()?;
    let theta0 = cfg.theta0(&model)?;
    let d = model.dim();
    let j = cfg.coverage_coordinate - 1;
    let lim = decay_limit(cfg, &model, &schedule)?;
    let cf = CfEvaluator::stationary_marginal(&lim.corrected, &unit(d, j))?;
    let half_width = symmetric_half_width(&cf, cfg.coverage_level)?;

    let (reps, divergences) = replicate(cfg.master_seed, cfg.replications, |_, rng| {
        let sgd = sgd_run(&model, &schedule, &theta0, cfg.steps, rng)?;
        Ok((1..=cfg.steps)
            .map(|n| scaled_error_decay(&sgd.states[n], &lim.theta_star, schedule.eta(n), cfg.alpha, lim.b1)[j])
            .collect::<Vec<f64>>())
    })?;

    let k = reps.len() as f64;
    let rates: Vec<f64> = (0..cfg.steps)
        .map(|n| reps.iter().filter(|(_, z)| z[n].abs() <= half_width).count() as f64 / k)
        .collect();
    let mut out = RunOutput { divergences, ..Default::default() };
    let ns: Vec<i64> = (1..=cfg.steps as i64).collect();
    out.tables.push((
        "coverage.csv".into(),
        Table::new().int("n", ns.clone()).real("coverage_rate", rates.clone()).real("half_width", vec![half_width; cfg.steps]),
    ));
    out.put("final_coverage", *rates.last().unwrap());
    out.put("half_width", half_width);
    out.put("level", cfg.coverage_level);
    out.put("coordinate", cfg.coverage_coordinate);
    out.put("kappa", lim.kappa);
    out.put("alpha", cfg.alpha);
    let pts: Vec<(f64, f64)> = ns.iter().zip(&rates).map(|(n, r)| (*n as f64, *r)).collect();
    let level = vec![(1.0, cfg.coverage_level), (cfg.steps as f64, cfg.coverage_level)];
    out.figures.push((
        "coverage.svg".into(),
        Figure::new(format!("coverage of the {} interval, alpha = {}", cfg.coverage_level, cfg.alpha), "iteration", "coverage rate")
            .with(Series::new("coverage", pts, Style::Line))
            .with(Series::new("nominal", level, Style::Dashed).red()),
    ));
    Ok(out)
}

fn logistic_theta_star(cfg: &ExperimentConfig) -> f64 {
    match cfg.model {
        ModelConfig::Logistic { theta_star, .. } => theta_star,
        ModelConfig::Quadratic { .. } => unreachable!("validated"),
    }
}

fn logistic_path(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = cfg.build_model()?;
    let schedule = cfg.build_schedule()?;
    let eta = constant_eta(cfg);
    let theta0 = cfg.theta0(&model)?;
    let theta_star = logistic_theta_star(cfg);
    let times: Vec<f64> = (0..=cfg.steps).map(|n| n as f64 * eta).collect();
    let flow = flow_at_times(&model, &theta0, &times, eta)?;
    let exponents = regime_scaling_logistic(&flow, theta_star, cfg.alpha)?;
    let light = |e: f64| e == -0.5;
    let b1 = match cfg.b1 {
        B1Mode::Unit => 1.0,
        B1Mode::Model => model.b1_constant()?,
    };
    let norm = jump_norm(cfg);

    // A change of scaling between two steps is not a jump of the process; those steps are skipped.
    let (reps, divergences) = replicate(cfg.master_seed, cfg.replications, |i, rng| {
        let sgd = sgd_run(&model, &schedule, &theta0, cfg.steps, rng)?;
        let path = scaled_error_with_exponents(&sgd, &flow, eta, &exponents, b1)?;
        let all = detect_jumps(&path, cfg.jump_threshold, norm)?;
        let boundary = all.iter().filter(|&&k| exponents[k] != exponents[k - 1]).count();
        let jumps: Vec<usize> = all.into_iter().filter(|&k| exponents[k] == exponents[k - 1]).collect();
        let heavy = jumps.iter().filter(|&&k| !light(exponents[k])).count();
        let detail = (i == 0).then(|| (sgd, path, jumps.clone()));
        Ok((heavy, jumps.len() - heavy, boundary, detail))
    })?;

    let mut out = RunOutput { divergences, ..Default::default() };
    let heavy: usize = reps.iter().map(|(_, r)| r.0).sum();
    let light_total: usize = reps.iter().map(|(_, r)| r.1).sum();
    let boundary: usize = reps.iter().map(|(_, r)| r.2).sum();
    let heavy_steps = (1..exponents.len()).filter(|&k| !light(exponents[k]) && exponents[k] == exponents[k - 1]).count();
    let light_steps = (1..exponents.len()).filter(|&k| light(exponents[k]) && exponents[k] == exponents[k - 1]).count();
    let crossing = (1..exponents.len()).find(|&k| exponents[k] != exponents[k - 1]).map(|k| times[k]);
    out.put("heavy_jumps_total", heavy);
    out.put("light_jumps_total", light_total);
    out.put("boundary_jumps_excluded", boundary);
    out.put("heavy_steps", heavy_steps);
    out.put("light_steps", light_steps);
    out.put("crossing_time", crossing.map_or(Value::Null, |t| json!(t)));
    out.put("mean_jump_count", (heavy + light_total) as f64 / reps.len() as f64);
    out.put("eta", eta);
    out.put("alpha", cfg.alpha);
    out.put("b1", b1);

    out.tables.push((
        "jumps.csv".into(),
        Table::new()
            .int("rep", reps.iter().map(|(i, _)| *i as i64).collect())
            .int("heavy_jumps", reps.iter().map(|(_, r)| r.0 as i64).collect())
            .int("light_jumps", reps.iter().map(|(_, r)| r.1 as i64).collect()),
    ));
    if let Some((_, (_, _, _, Some((sgd, path, jumps))))) = reps.into_iter().find(|(i, _)| *i == 0) {
        let mut flags = vec![0i64; path.len()];
        for &k in &jumps {
            flags[k] = 1;
        }
        let t = Table::new()
            .real("t", path.times.clone())
            .real("theta", sgd.coordinate(0))
            .real("flow", flow.coordinate(0))
            .real("scaled_err", path.values.iter().map(|v| v[0]).collect())
            .real("exponent_used", exponents.clone())
            .int("jump_flag", flags);
        out.tables.insert(0, ("path.csv".into(), t));
        let pts = path.times.iter().zip(&path.values).map(|(t, v)| (*t, v[0])).collect();
        let marks = jumps.iter().map(|&k| (path.times[k], path.values[k][0])).collect();
        out.figures.push((
            "path.svg".into(),
            Figure::new(format!("logistic, constant step, alpha = {}", cfg.alpha), "time (iterations x step size)", "scaled error")
                .with(Series::new("scaled error", pts, Style::Line))
                .with(Series::new("jumps", marks, Style::Markers).red()),
        ));
    } else {
        out.put("path_replication_diverged", true);
    }
    Ok(out)
}

fn logistic_hist(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = cfg.build_model()?;
    let schedule = cfg.build_schedule()?;
    let theta0 = cfg.theta0(&model)?;
    let theta_opt = model.optimum()?;
    let h = model.hessian(&theta_opt)?[(0, 0)];

    let (reps, divergences) = replicate(cfg.master_seed, cfg.replications, |_, rng| {
        let (theta_n, eta_n) = sgd_final(&model, &schedule, &theta0, cfg.steps, rng)?;
        Ok((theta_n[0] - theta_opt[0]) / eta_n.sqrt())
    })?;

    // Gradient second moment at the optimum from its own stream, past every replication index.
    let mut rng = RngState::for_replication(cfg.master_seed, u64::MAX);
    let mut g = DVector::zeros(1);
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..cfg.variance_draws {
        model.stochastic_gradient_into(&theta_opt, &mut rng, &mut g);
        s1 += g[0];
        s2 += g[0] * g[0];
    }
    let m = cfg.variance_draws as f64;
    let sigma_mc = s2 / m;
    let sigma_quad = match &model {
        ModelSpec::Logistic1D(l) => l.gradient_second_moment(theta_opt[0])?,
        ModelSpec::Quadratic(_) => unreachable!("validated"),
    };
    let variance = sigma_mc / (2.0 * h);

    let xs: Vec<f64> = reps.iter().map(|(_, z)| *z).collect();
    let cf = CfEvaluator::gaussian(0.0, variance);
    let ks = ks_against(&xs, &TabulatedCdf::from_cf(&cf, 1e-7, CDF_POINTS)?)?;
    let mut out = RunOutput { divergences, ..Default::default() };
    out.tables.push((
        "samples.csv".into(),
        Table::new().int("rep", reps.iter().map(|(i, _)| *i as i64).collect()).real("scaled_err", xs.clone()),
    ));
    let (table, bars, curve) = density_table(&xs, cfg.bins, &cf)?;
    out.tables.push(("density.csv".into(), table));
    out.figures.push(("density.svg".into(), density_figure(format!("logistic, decaying step, alpha = {}", cfg.alpha), bars, curve)));
    out.put("ks", ks);
    out.put("variance", variance);
    out.put("gradient_second_moment_mc", sigma_mc);
    out.put("gradient_mean_mc", s1 / m);
    out.put("gradient_second_moment_quadrature", sigma_quad);
    out.put("hessian", h);
    out.put("theta_opt", theta_opt[0]);
    out.put("eta_n", schedule.eta(cfg.steps));
    Ok(out)
}

fn stationary_density(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = cfg.build_model()?;
    if model.dim() != 1 {
        return Err(config_err("model", "stationary-density needs a one-dimensional model"));
    }
    let theta_star = model.optimum()?;
    let h = model.hessian(&theta_star)?;
    let (b1, driver) = b1_and_driver(cfg, &model, &theta_star)?;
    if driver.is_degenerate() {
        return Err(ExperimentError::OracleUnavailable("the Levy triplet at the optimum is degenerate".into()));
    }
    let spec = OuSpec::new(h, driver)?;
    let (t_trunc, dt) = spec.default_stationary_grid();

    let (reps, divergences) = replicate(cfg.master_seed, cfg.replications, |_, rng| {
        Ok(sample_stationary(&spec, rng, t_trunc, dt)?.value[0])
    })?;
    let xs: Vec<f64> = reps.iter().map(|(_, z)| *z).collect();

    let cf = CfEvaluator::stationary_marginal(&spec, &unit(1, 0))?;
    let ks = ks_against(&xs, &TabulatedCdf::from_cf(&cf, CDF_TAIL_MASS, CDF_POINTS)?)?;
    // The full triplet route must agree with the reduced exponent used above.
    let full = CfEvaluator::stationary(&spec);
    let route_gap = [-2.0, 0.3, 1.0, 3.0]
        .iter()
        .map(|&u| {
            let v = DVector::from_element(1, u);
            Ok((full.exponent(&v)? - stationary_exponent(&spec, &v)?).norm())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let mut out = RunOutput { divergences, ..Default::default() };
    out.tables.push((
        "samples.csv".into(),
        Table::new().int("rep", reps.iter().map(|(i, _)| *i as i64).collect()).real("z", xs.clone()),
    ));
    let (table, bars, curve) = density_table(&xs, cfg.bins, &cf)?;
    out.tables.push(("density.csv".into(), table));
    out.figures.push(("density.svg".into(), density_figure(format!("stationary law, alpha = {}", cfg.alpha), bars, curve)));
    out.put("ks", ks);
    out.put("route_gap", route_gap);
    out.put("b1", b1);
    out.put("truncation_time", t_trunc);
    out.put("time_step", dt);
    out.put("alpha", cfg.alpha);
    Ok(out)
}

/// Unit vectors `p/|p|` and `-p/|p|` without repeats.
fn signed_atoms(points: &[Vec<f64>]) -> Vec<DVector<f64>> {
    let mut atoms: Vec<DVector<f64>> = Vec::new();
    for p in points {
        let v = DVector::from_vec(p.clone());
        let v = &v / v.norm();
        for a in [v.clone(), -v] {
            if !atoms.iter().any(|b| b.dot(&a) > 1.0 - 1e-12) {
                atoms.push(a);
            }
        }
    }
    atoms
}

fn angular_check(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mut rng = RngState::for_replication(cfg.master_seed, 0);
    let (atoms, analytic, degenerate, covariates, grads, quantile) = match &cfg.angular {
        AngularConfig::Ols { points, probs, theta, theta_star, draws, quantile } => {
            let design = OlsDesign::new(discrete_law(points, probs.as_deref())?, DVector::from_vec(theta_star.clone()), cfg.alpha)?;
            let atoms = signed_atoms(points);
            let law = design.angular_measure(&atoms)?;
            let theta = DVector::from_vec(theta.clone());
            let (xs, gs): (Vec<_>, Vec<_>) = (0..*draws).map(|_| design.draw(&theta, &mut rng)).unzip();
            let w = atoms.iter().map(|a| law.weight_at(a)).collect::<Vec<f64>>();
            (atoms, w, false, xs, gs, *quantile)
        }
        AngularConfig::Logistic { directions, theta, theta_star, lambda, draws, quantile } => {
            let dirs = discrete_law(directions, None)?;
            let theta_star = DVector::from_vec(theta_star.clone());
            let design = LogisticDesign::new(dirs, theta_star.clone(), *lambda, cfg.alpha)?;
            let atoms = signed_atoms(directions);
            let theta = DVector::from_vec(theta.clone());
            let law = logistic_angular_measure(&design.covariate_measure()?, &theta, &theta_star)?;
            let (xs, gs): (Vec<_>, Vec<_>) = (0..*draws).map(|_| design.draw(&theta, &mut rng)).unzip();
            let w = if law.degenerate { vec![0.0; atoms.len()] } else { atoms.iter().map(|a| law.weight_at(a)).collect() };
            (atoms, w, law.degenerate, xs, gs, *quantile)
        }
    };

    let mut out = RunOutput::default();
    let emp = conditional_direction_weights(&grads, &atoms, quantile)?;
    if !degenerate {
        let tv = 0.5 * analytic.iter().zip(&emp.weights).map(|(a, e)| (a - e).abs()).sum::<f64>();
        out.put("total_variation", tv);
    }
    out.put("norm_threshold", emp.threshold);
    out.put("exceedances", emp.count);
    if atoms[0].len() == 1 {
        let minus = atoms.iter().position(|a| a[0] < 0.0).map_or(0.0, |i| emp.weights[i]);
        out.put("mass_at_minus_one", minus);
    }
    let mut t = Table::new().real("atom_x", atoms.iter().map(|a| a[0]).collect());
    if atoms[0].len() == 2 {
        t = t.real("atom_y", atoms.iter().map(|a| a[1]).collect());
    }
    t = t.real("analytic_weight", analytic.clone()).real("empirical_weight", emp.weights.clone());
    out.tables.push(("angular.csv".into(), t));
    let idx = |w: &[f64]| w.iter().enumerate().map(|(i, w)| (i as f64 + 1.0, *w)).collect::<Vec<_>>();
    out.figures.push((
        "angular.svg".into(),
        Figure::new(format!("tail direction weights, alpha = {}", cfg.alpha), "atom", "weight")
            .with(Series::new("empirical", idx(&emp.weights), Style::Bars))
            .with(Series::new("analytic", idx(&analytic), Style::Markers).red()),
    ));
    out.put("degenerate", degenerate);

    if matches!(cfg.angular, AngularConfig::Logistic { .. }) {
        let mut xn: Vec<f64> = covariates.iter().map(|x| x.norm()).collect();
        xn.sort_unstable_by(f64::total_cmp);
        let z = xn[((xn.len() as f64 * quantile) as usize).min(xn.len() - 1)];
        let nx = xn.iter().filter(|r| **r > z).count();
        let ng = grads.iter().filter(|g| g.norm() > z).count();
        out.put("exceedance_level", z);
        out.put("exceedance_ratio", if nx > 0 { json!(ng as f64 / nx as f64) } else { Value::Null });
    }
    Ok(out)
}
