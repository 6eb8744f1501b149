//! Loss models, their stochastic gradients, and the tail measures of those gradients.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::numerics::linalg;
use crate::rng::{RngState, StableParams};
use crate::stable::{stable_constants, SymmetricStableRule};

/// Angle below which a direction is assigned to an atom.
pub const ATOM_ANGLE_TOL: f64 = 1e-6;

/// Logistic function `1 / (1 + e^{-u})`, evaluated without overflow.
pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// One atom `(omega, w)` of a discrete angular measure.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularAtom {
    pub direction: DVector<f64>,
    pub weight: f64,
}

impl AngularAtom {
    pub fn new(direction: DVector<f64>, weight: f64) -> Self {
        Self { direction, weight }
    }
}

/// Regularly varying law in polar form: Levy density
/// `alpha * tail_constant * mu(d omega) r^{-alpha-1} dr` with `mu` a discrete
/// probability measure on the sphere. A degenerate law has no mass at all.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularVaryingLaw {
    pub alpha: f64,
    pub tail_constant: f64,
    pub atoms: Vec<AngularAtom>,
    pub degenerate: bool,
    dim: usize,
}

impl RegularVaryingLaw {
    pub fn new(alpha: f64, tail_constant: f64, atoms: Vec<AngularAtom>) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(invalid("alpha", format!("{alpha} not in (1, 2)")));
        }
        if !(tail_constant > 0.0 && tail_constant.is_finite()) {
            return Err(invalid("tail_constant", format!("{tail_constant} must be positive and finite")));
        }
        let dim = atoms.first().map(|a| a.direction.len()).ok_or_else(|| invalid("atoms", "empty atom list"))?;
        let mut total = 0.0;
        for a in &atoms {
            if a.direction.len() != dim {
                return Err(invalid("atoms", "atoms have different dimensions"));
            }
            if (a.direction.norm() - 1.0).abs() > 1e-12 {
                return Err(invalid("atoms", format!("direction norm {} is not 1", a.direction.norm())));
            }
            if !(a.weight >= 0.0) {
                return Err(invalid("atoms", format!("negative weight {}", a.weight)));
            }
            total += a.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("atoms", format!("weights sum to {total}, not 1")));
        }
        Ok(Self { alpha, tail_constant, atoms, degenerate: false, dim })
    }

    /// The zero measure in dimension `dim`.
    pub fn degenerate(alpha: f64, dim: usize) -> Self {
        Self { alpha, tail_constant: 0.0, atoms: Vec::new(), degenerate: true, dim }
    }

    /// Symmetric measure with weight `1/(2d)` on each signed coordinate axis.
    pub fn coordinate_axes(alpha: f64, tail_constant: f64, dim: usize) -> Result<Self> {
        let mut atoms = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut e = DVector::zeros(dim);
                e[i] = s;
                atoms.push(AngularAtom::new(e, 1.0 / (2.0 * dim as f64)));
            }
        }
        Self::new(alpha, tail_constant, atoms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `nu({||z|| > r}) = tail_constant * r^{-alpha}`.
    pub fn mass_above(&self, r: f64) -> f64 {
        if self.degenerate {
            0.0
        } else {
            self.tail_constant * r.powf(-self.alpha)
        }
    }

    /// `int_{||x|| > 1} x nu(dx) = sum_j w_j omega_j alpha C / (alpha - 1)`.
    pub fn large_jump_mean(&self) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        let k = self.alpha * self.tail_constant / (self.alpha - 1.0);
        for a in &self.atoms {
            g += &a.direction * (a.weight * k);
        }
        g
    }

    /// True when every atom is matched by its antipode with equal weight.
    pub fn is_symmetric(&self) -> bool {
        self.atoms.iter().all(|a| {
            let mass_at = |d: &DVector<f64>| -> f64 {
                self.atoms.iter().filter(|b| (&b.direction - d).norm() < 1e-9).map(|b| b.weight).sum()
            };
            let minus = -&a.direction;
            (mass_at(&a.direction) - mass_at(&minus)).abs() < 1e-12
        })
    }

    /// Weight the measure assigns to directions within `ATOM_ANGLE_TOL` of `direction`.
    pub fn weight_at(&self, direction: &DVector<f64>) -> f64 {
        self.atoms.iter().filter(|a| same_direction(&a.direction, direction)).map(|a| a.weight).sum()
    }
}

pub(crate) fn same_direction(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    let cos = a.dot(b) / (a.norm() * b.norm());
    cos.clamp(-1.0, 1.0).acos() < ATOM_ANGLE_TOL
}

/// Characteristics `(0, nu, gamma)` of a pure-jump Levy driver. The Gaussian
/// part is identically zero; `drift_gamma` is the large-jump mean of `nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriplet {
    pub levy_measure: RegularVaryingLaw,
    pub drift_gamma: DVector<f64>,
}

impl LevyTriplet {
    pub fn new(levy_measure: RegularVaryingLaw) -> Self {
        let drift_gamma = levy_measure.large_jump_mean();
        Self { levy_measure, drift_gamma }
    }

    /// Driver whose unit-time increment is the one-dimensional stable law
    /// `params` (location ignored: the driver is centred).
    pub fn from_stable(params: &StableParams) -> Result<Self> {
        params.validate()?;
        if !(params.alpha > 1.0 && params.alpha < 2.0) {
            return Err(invalid("alpha", format!("{} not in (1, 2)", params.alpha)));
        }
        if params.scale == 0.0 {
            return Ok(Self::new(RegularVaryingLaw::degenerate(params.alpha, 1)));
        }
        let k = stable_constants(params.alpha)?;
        let tail = params.scale.powf(params.alpha) / k.c;
        let mut atoms = Vec::new();
        for (s, w) in [(1.0, 0.5 * (1.0 + params.beta)), (-1.0, 0.5 * (1.0 - params.beta))] {
            if w > 0.0 {
                atoms.push(AngularAtom::new(DVector::from_element(1, s), w));
            }
        }
        Ok(Self::new(RegularVaryingLaw::new(params.alpha, tail, atoms)?))
    }

    pub fn is_degenerate(&self) -> bool {
        self.levy_measure.degenerate
    }

    pub fn dim(&self) -> usize {
        self.levy_measure.dim()
    }

    pub fn alpha(&self) -> f64 {
        self.levy_measure.alpha
    }

    pub fn gaussian_part(&self) -> DMatrix<f64> {
        DMatrix::zeros(self.dim(), self.dim())
    }

    /// Same measure with every weight-times-tail product multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        if self.is_degenerate() || factor == 0.0 {
            return Self::new(RegularVaryingLaw::degenerate(self.alpha(), self.dim()));
        }
        let mut m = self.levy_measure.clone();
        m.tail_constant *= factor;
        Self::new(m)
    }
}

/// Covariate law of the one-dimensional logistic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Covariate {
    /// Symmetric stable covariate.
    Stable(StableParams),
    /// Deterministic covariate (used to exercise degenerate paths).
    PointMass(f64),
}

#[derive(Debug, Clone)]
pub struct QuadraticModel {
    a: DMatrix<f64>,
    b: DVector<f64>,
    noise: StableParams,
    optimum: DVector<f64>,
}

impl QuadraticModel {
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }
    pub fn noise(&self) -> &StableParams {
        &self.noise
    }
}

#[derive(Debug, Clone)]
pub struct LogisticModel {
    theta_star: f64,
    lambda: f64,
    covariate: Covariate,
    optimum: OnceLock<f64>,
}

impl LogisticModel {
    pub fn theta_star(&self) -> f64 {
        self.theta_star
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn covariate(&self) -> &Covariate {
        &self.covariate
    }

    /// Tolerance on the quadrature error of every expectation.
    const EXPECT_TOL: f64 = 1e-11;

    fn expect<G: FnMut(f64) -> f64>(&self, mut g: G) -> Result<f64> {
        match self.covariate {
            Covariate::PointMass(c) => Ok(g(c)),
            Covariate::Stable(p) => {
                let rule = SymmetricStableRule::get(p.alpha)?;
                rule.expect_checked(p.scale, p.location, Self::EXPECT_TOL, g)
            }
        }
    }

    /// `E[-y sigma(y theta x) x] + lambda theta`, with `y` averaged out exactly.
    fn gradient(&self, theta: f64) -> Result<f64> {
        let ts = self.theta_star;
        let e = self.expect(|x| -x * (sigmoid(ts * x) * sigmoid(-theta * x) - sigmoid(-ts * x) * sigmoid(theta * x)))?;
        Ok(e + self.lambda * theta)
    }

    fn hessian(&self, theta: f64) -> Result<f64> {
        let e = self.expect(|x| x * x * sigmoid(theta * x) * sigmoid(-theta * x))?;
        Ok(e + self.lambda)
    }

    /// Second moment of the stochastic gradient at `theta`.
    pub fn gradient_second_moment(&self, theta: f64) -> Result<f64> {
        let (ts, lam) = (self.theta_star, self.lambda);
        self.expect(|x| {
            let p_plus = sigmoid(ts * x);
            let g_plus = -sigmoid(-theta * x) * x + lam * theta;
            let g_minus = sigmoid(theta * x) * x + lam * theta;
            p_plus * g_plus * g_plus + (1.0 - p_plus) * g_minus * g_minus
        })
    }

    fn solve_optimum(&self) -> Result<f64> {
        let g = |t: f64| self.gradient(t);
        let mut lo = -1.0f64.max(self.theta_star.abs());
        let mut hi = -lo;
        let (mut glo, mut ghi) = (g(lo)?, g(hi)?);
        let mut expansions = 0;
        while glo > 0.0 || ghi < 0.0 {
            if glo > 0.0 {
                lo *= 2.0;
                glo = g(lo)?;
            }
            if ghi < 0.0 {
                hi *= 2.0;
                ghi = g(hi)?;
            }
            expansions += 1;
            if expansions > 60 {
                return Err(Error::RootFinding("could not bracket the logistic optimum".into()));
            }
        }
        // Safeguarded Newton: keep the bracket, fall back to bisection.
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let gx = g(x)?;
            if gx.abs() < 1e-12 {
                return Ok(x);
            }
            if gx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let newton = self.hessian(x).ok().filter(|h| *h > 0.0).map(|h| x - gx / h);
            x = match newton {
                Some(n) if n > lo && n < hi => n,
                _ => 0.5 * (lo + hi),
            };
            if hi - lo < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        let gx = g(x)?;
        if gx.abs() < 1e-10 {
            Ok(x)
        } else {
            Err(Error::RootFinding(format!("logistic optimum stalled with |g| = {:.3e}", gx.abs())))
        }
    }

    fn stochastic_gradient(&self, theta: f64, rng: &mut RngState) -> f64 {
        let x = match self.covariate {
            Covariate::PointMass(c) => c,
            Covariate::Stable(p) => rng.stable(&p),
        };
        let y = if rng.uniform() < sigmoid(self.theta_star * x) { 1.0 } else { -1.0 };
        -y * sigmoid(-y * theta * x) * x + self.lambda * theta
    }

    /// Covariate tail in polar form: `P(|x| > r) ~ (scale^alpha / C_alpha) r^{-alpha}`,
    /// half on each side.
    fn covariate_tail(&self) -> Result<Option<(f64, f64)>> {
        match self.covariate {
            Covariate::PointMass(_) => Ok(None),
            Covariate::Stable(p) => {
                let k = stable_constants(p.alpha)?;
                Ok(Some((p.alpha, p.scale.powf(p.alpha) / k.c)))
            }
        }
    }
}

/// A loss model with true gradient, Hessian, optimum and stochastic-gradient sampler.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    /// `1/2 theta^T A theta + theta^T b` with gradient noise i.i.d. per coordinate.
    Quadratic(QuadraticModel),
    /// One-dimensional regularised logistic regression with stable covariates.
    Logistic1D(LogisticModel),
}

fn one(v: f64) -> DVector<f64> {
    DVector::from_element(1, v)
}

fn scalar(theta: &DVector<f64>) -> Result<f64> {
    if theta.len() != 1 {
        return Err(invalid("theta", format!("logistic model is one-dimensional, got length {}", theta.len())));
    }
    Ok(theta[0])
}

fn check_finite(theta: &DVector<f64>) -> Result<()> {
    if linalg::all_finite(theta) {
        Ok(())
    } else {
        Err(Error::NonFinite("theta".into()))
    }
}

impl ModelSpec {
    pub fn quadratic(a: DMatrix<f64>, b: DVector<f64>, noise: StableParams) -> Result<Self> {
        noise.validate()?;
        if !a.is_square() || a.nrows() != b.len() || b.is_empty() {
            return Err(invalid("A", format!("A is {}x{} but b has length {}", a.nrows(), a.ncols(), b.len())));
        }
        if !linalg::is_symmetric(&a, 1e-12) {
            return Err(invalid("A", "matrix is not symmetric"));
        }
        let min_eig = linalg::min_eigen_real_part(&a);
        if !(min_eig > 0.0) {
            return Err(invalid("A", format!("smallest eigenvalue {min_eig} is not positive")));
        }
        let optimum = -linalg::inverse(&a)? * &b;
        Ok(Self::Quadratic(QuadraticModel { a, b, noise, optimum }))
    }

    /// The two-dimensional test problem `A = diag(2, 1)`, `b = (1, 1)`, standard stable noise.
    pub fn quadratic_reference(alpha: f64) -> Result<Self> {
        Self::quadratic(
            DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0])),
            DVector::from_vec(vec![1.0, 1.0]),
            StableParams::standard(alpha)?,
        )
    }

    pub fn logistic(theta_star: f64, lambda: f64, covariate: Covariate) -> Result<Self> {
        if !theta_star.is_finite() {
            return Err(invalid("theta_star", "must be finite"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", format!("{lambda} must be nonnegative")));
        }
        match covariate {
            Covariate::Stable(p) => {
                p.validate()?;
                if !(p.alpha > 1.0 && p.alpha < 2.0) {
                    return Err(invalid("covariate_law.alpha", format!("{} not in (1, 2)", p.alpha)));
                }
                if p.beta != 0.0 {
                    return Err(invalid("covariate_law.beta", "only symmetric covariate laws are supported"));
                }
                if p.scale == 0.0 {
                    return Err(invalid("covariate_law.scale", "use Covariate::PointMass for a deterministic covariate"));
                }
            }
            Covariate::PointMass(c) => {
                if !c.is_finite() {
                    return Err(invalid("covariate", "point mass must be finite"));
                }
            }
        }
        Ok(Self::Logistic1D(LogisticModel { theta_star, lambda, covariate, optimum: OnceLock::new() }))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Quadratic(q) => q.b.len(),
            Self::Logistic1D(_) => 1,
        }
    }

    /// Tail index of the gradient noise (or covariate), `None` for light tails.
    pub fn tail_alpha(&self) -> Option<f64> {
        match self {
            Self::Quadratic(q) => Some(q.noise.alpha),
            Self::Logistic1D(l) => match l.covariate {
                Covariate::Stable(p) => Some(p.alpha),
                Covariate::PointMass(_) => None,
            },
        }
    }

    pub fn true_gradient(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        check_finite(theta)?;
        match self {
            Self::Quadratic(q) => {
                if theta.len() != q.b.len() {
                    return Err(invalid("theta", "dimension mismatch"));
                }
                Ok(&q.a * theta + &q.b)
            }
            Self::Logistic1D(l) => Ok(one(l.gradient(scalar(theta)?)?)),
        }
    }

    /// Hessian. For the logistic model at `theta = 0` the covariate second
    /// moment enters and the Hessian is infinite, reported as a quadrature error.
    pub fn hessian(&self, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_finite(theta)?;
        match self {
            Self::Quadratic(q) => Ok(q.a.clone()),
            Self::Logistic1D(l) => Ok(DMatrix::from_element(1, 1, l.hessian(scalar(theta)?)?)),
        }
    }

    pub fn optimum(&self) -> Result<DVector<f64>> {
        match self {
            Self::Quadratic(q) => Ok(q.optimum.clone()),
            Self::Logistic1D(l) => {
                if let Some(v) = l.optimum.get() {
                    return Ok(one(*v));
                }
                let v = l.solve_optimum()?;
                Ok(one(*l.optimum.get_or_init(|| v)))
            }
        }
    }

    /// One stochastic gradient draw, written into `out`.
    pub fn stochastic_gradient_into(&self, theta: &DVector<f64>, rng: &mut RngState, out: &mut DVector<f64>) {
        match self {
            Self::Quadratic(q) => {
                out.gemv(1.0, &q.a, theta, 0.0);
                for i in 0..out.len() {
                    out[i] += q.b[i] + rng.stable(&q.noise);
                }
            }
            Self::Logistic1D(l) => out[0] = l.stochastic_gradient(theta[0], rng),
        }
    }

    pub fn stochastic_gradient(&self, theta: &DVector<f64>, rng: &mut RngState) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        self.stochastic_gradient_into(theta, rng, &mut out);
        out
    }

    /// Constant `b1` that normalises the gradient tail so the scaled noise
    /// exceeds norm 1 at unit rate. Quadratic: all `d` coordinates contribute
    /// `scale^alpha / C_alpha` each. Logistic: normalised to the covariate
    /// tail, because the gradient tail itself vanishes at the optimum.
    /// Light-tailed models return 1.
    pub fn b1_constant(&self) -> Result<f64> {
        match self {
            Self::Quadratic(q) => {
                let p = &q.noise;
                if p.alpha == 2.0 || p.scale == 0.0 {
                    return Ok(1.0);
                }
                if !(p.alpha > 1.0 && p.alpha < 2.0) {
                    return Err(invalid("noise.alpha", format!("{} not in (1, 2]", p.alpha)));
                }
                let k = stable_constants(p.alpha)?;
                let c_norm = q.b.len() as f64 * p.scale.powf(p.alpha) / k.c;
                Ok(c_norm.powf(-1.0 / p.alpha))
            }
            Self::Logistic1D(l) => match l.covariate_tail()? {
                None => Ok(1.0),
                Some((alpha, c)) => Ok(c.powf(-1.0 / alpha)),
            },
        }
    }

    /// Levy characteristics of the `b1`-scaled gradient noise at `theta`.
    pub fn levy_triplet_at(&self, theta: &DVector<f64>) -> Result<LevyTriplet> {
        check_finite(theta)?;
        match self {
            Self::Quadratic(q) => {
                let p = &q.noise;
                if !(p.alpha > 1.0 && p.alpha < 2.0) {
                    return Err(Error::UnsupportedRegime(format!(
                        "noise alpha = {} has no pure-jump stable limit",
                        p.alpha
                    )));
                }
                let d = q.b.len();
                if p.scale == 0.0 {
                    return Ok(LevyTriplet::new(RegularVaryingLaw::degenerate(p.alpha, d)));
                }
                let mut atoms = Vec::with_capacity(2 * d);
                for i in 0..d {
                    for (s, w) in [(1.0, 0.5 * (1.0 + p.beta)), (-1.0, 0.5 * (1.0 - p.beta))] {
                        if w > 0.0 {
                            let mut e = DVector::zeros(d);
                            e[i] = s;
                            atoms.push(AngularAtom::new(e, w / d as f64));
                        }
                    }
                }
                Ok(LevyTriplet::new(RegularVaryingLaw::new(p.alpha, 1.0, atoms)?))
            }
            Self::Logistic1D(l) => {
                let t = scalar(theta)?;
                match l.covariate_tail()? {
                    None => Ok(LevyTriplet::new(RegularVaryingLaw::degenerate(1.5, 1))),
                    Some((alpha, _)) => {
                        let mu = RegularVaryingLaw::new(
                            alpha,
                            1.0,
                            vec![AngularAtom::new(one(1.0), 0.5), AngularAtom::new(one(-1.0), 0.5)],
                        )?;
                        Ok(LevyTriplet::new(logistic_angular_measure(&mu, &one(t), &one(l.theta_star))?))
                    }
                }
            }
        }
    }

    pub fn validate_assumptions(&self) -> Result<AssumptionReport> {
        let opt = self.optimum()?;
        let h = self.hessian(&opt)?;
        let min_eig = linalg::min_eigen_real_part(&h);
        let alpha = self.tail_alpha();
        let lipschitz = match self {
            // Affine in theta with theta-free noise: the ratio is ||A||_2 for every draw.
            Self::Quadratic(q) => {
                let eig = q.a.clone().symmetric_eigen();
                let k = eig.eigenvalues.iter().enumerate().fold(0, |best, (i, v)| {
                    if v.abs() > eig.eigenvalues[best].abs() {
                        i
                    } else {
                        best
                    }
                });
                let dir = eig.eigenvectors.column(k).into_owned();
                sampled_lipschitz(self, &opt, &[dir], 64)?
            }
            Self::Logistic1D(_) => sampled_lipschitz(self, &opt, &[one(1.0)], 4096)?,
        };
        Ok(AssumptionReport {
            min_hessian_eigenvalue: min_eig,
            hessian_positive_definite: min_eig > 0.0,
            lipschitz_ratio: lipschitz,
            alpha,
            alpha_in_range: alpha.is_some_and(|a| a > 1.0 && a < 2.0),
        })
    }
}

/// Largest `||g(t1, xi) - g(t2, xi)|| / ||t1 - t2||` over draws sharing `xi`,
/// probing along the given directions around `center`.
fn sampled_lipschitz(model: &ModelSpec, center: &DVector<f64>, directions: &[DVector<f64>], draws: usize) -> Result<f64> {
    let mut best: f64 = 0.0;
    for (k, dir) in directions.iter().enumerate() {
        for i in 0..draws {
            let step = 0.5 * (1.0 + (i % 7) as f64);
            let t1 = center + dir * step;
            let t2 = center - dir * step;
            let seed = 0x5EED_0000 + (k * draws + i) as u64;
            let g1 = model.stochastic_gradient(&t1, &mut RngState::from_seed(seed));
            let g2 = model.stochastic_gradient(&t2, &mut RngState::from_seed(seed));
            let ratio = (g1 - g2).norm() / (t1 - t2).norm();
            if !ratio.is_finite() {
                return Err(Error::NonFinite("Lipschitz ratio".into()));
            }
            best = best.max(ratio);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub min_hessian_eigenvalue: f64,
    pub hessian_positive_definite: bool,
    pub lipschitz_ratio: f64,
    pub alpha: Option<f64>,
    pub alpha_in_range: bool,
}

/// Angular measure of the heavy part `-x eps` of the least-squares gradient:
/// each covariate contributes `||x||^alpha` split equally between `x/||x||`
/// and `-x/||x||`. Every direction must land on one of `atoms`.
pub fn ols_angular_measure(covariate_samples: &[DVector<f64>], alpha: f64, atoms: &[DVector<f64>]) -> Result<RegularVaryingLaw> {
    let weights = vec![1.0; covariate_samples.len()];
    weighted_ols_measure(covariate_samples, &weights, alpha, atoms)
}

fn weighted_ols_measure(points: &[DVector<f64>], probs: &[f64], alpha: f64, atoms: &[DVector<f64>]) -> Result<RegularVaryingLaw> {
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    if atoms.is_empty() {
        return Err(invalid("atoms", "empty atom list"));
    }
    let mut acc = vec![0.0; atoms.len()];
    let mut total = 0.0;
    let mut prob_total = 0.0;
    for (x, &p) in points.iter().zip(probs) {
        let r = x.norm();
        if r == 0.0 {
            return Err(invalid("covariate_samples", "zero-norm covariate"));
        }
        let m = p * r.powf(alpha);
        total += m;
        prob_total += p;
        for sign in [1.0, -1.0] {
            let d = x * (sign / r);
            let j = atoms
                .iter()
                .position(|a| same_direction(a, &d))
                .ok_or_else(|| Error::InconsistentMeasure(format!("direction {:?} matches no atom", d.as_slice())))?;
            acc[j] += 0.5 * m;
        }
    }
    let law_atoms = atoms
        .iter()
        .zip(&acc)
        .map(|(a, w)| AngularAtom::new(a / a.norm(), w / total))
        .collect();
    let mut law = RegularVaryingLaw::new(alpha, total / prob_total, law_atoms)?;
    // Renormalise away rounding so the weights sum to 1 exactly enough for validation.
    let s: f64 = law.atoms.iter().map(|a| a.weight).sum();
    for a in &mut law.atoms {
        a.weight /= s;
    }
    Ok(law)
}

/// Limit direction measure of the logistic stochastic gradient at `theta`
/// given the covariate angular measure `mu`.
///
/// For a covariate `x = r omega` with `r` large, the label is `y = sgn(theta*^T omega)`
/// (a fair coin when that is 0). If `theta^T omega != 0` the gradient is of
/// order `r` exactly when `y sgn(theta^T omega) < 0`, pointing along
/// `sgn(theta^T omega) omega`; if `theta^T omega = 0` it is `-y r omega / 2`,
/// so its tail mass carries the factor `2^{-alpha}`. The returned tail
/// constant is `mu.tail_constant` times the surviving mass; a law with no
/// surviving mass is flagged degenerate.
pub fn logistic_angular_measure(mu: &RegularVaryingLaw, theta: &DVector<f64>, theta_star: &DVector<f64>) -> Result<RegularVaryingLaw> {
    if mu.degenerate || mu.atoms.is_empty() {
        return Err(Error::InconsistentMeasure("covariate angular measure has no mass".into()));
    }
    if theta.len() != mu.dim() || theta_star.len() != mu.dim() {
        return Err(invalid("theta", "dimension mismatch with the angular measure"));
    }
    let alpha = mu.alpha;
    let tol = 1e-12;
    let mut out: Vec<AngularAtom> = Vec::new();
    let mut push = |dir: DVector<f64>, w: f64| {
        if w <= 0.0 {
            return;
        }
        if let Some(a) = out.iter_mut().find(|a| same_direction(&a.direction, &dir)) {
            a.weight += w;
        } else {
            out.push(AngularAtom::new(dir, w));
        }
    };
    for atom in &mu.atoms {
        let a = theta.dot(&atom.direction);
        let b = theta_star.dot(&atom.direction);
        let labels: &[(f64, f64)] = if b > tol {
            &[(1.0, 1.0)]
        } else if b < -tol {
            &[(-1.0, 1.0)]
        } else {
            &[(1.0, 0.5), (-1.0, 0.5)]
        };
        for &(y, p) in labels {
            if a.abs() > tol {
                if y * a.signum() < 0.0 {
                    push(&atom.direction * a.signum(), p * atom.weight);
                }
            } else {
                push(&atom.direction * -y, p * atom.weight * 2f64.powf(-alpha));
            }
        }
    }
    let mass: f64 = out.iter().map(|a| a.weight).sum();
    if mass <= 0.0 {
        return Ok(RegularVaryingLaw::degenerate(alpha, mu.dim()));
    }
    for a in &mut out {
        a.weight /= mass;
    }
    RegularVaryingLaw::new(alpha, mu.tail_constant * mass, out)
}

/// Discrete covariate law: support points with probabilities.
#[derive(Debug, Clone)]
pub struct DiscreteLaw {
    points: Vec<DVector<f64>>,
    cumulative: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteLaw {
    pub fn new(points: Vec<DVector<f64>>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(invalid("points", "need equally many points and probabilities"));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(invalid("probs", "probabilities must be nonnegative and sum to 1"));
        }
        let mut c = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                c += p;
                c
            })
            .collect();
        Ok(Self { points, cumulative, probs })
    }

    pub fn uniform(points: Vec<DVector<f64>>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n as f64; n])
    }

    pub fn sample_index(&self, rng: &mut RngState) -> usize {
        let u = rng.uniform();
        self.cumulative.iter().position(|c| u < *c).unwrap_or(self.points.len() - 1)
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Least-squares design `y = x^T theta* + eps` with discrete covariates and
/// symmetric Pareto noise `P(|eps| > t) = t^{-alpha}`.
#[derive(Debug, Clone)]
pub struct OlsDesign {
    pub covariates: DiscreteLaw,
    pub theta_star: DVector<f64>,
    pub alpha: f64,
}

impl OlsDesign {
    pub fn new(covariates: DiscreteLaw, theta_star: DVector<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(invalid("alpha", format!("{alpha} not in (1, 2)")));
        }
        if covariates.points().iter().any(|x| x.len() != theta_star.len()) {
            return Err(invalid("theta_star", "dimension mismatch"));
        }
        Ok(Self { covariates, theta_star, alpha })
    }

    /// Covariate and gradient `x (x^T theta - y)` for one draw `(x, y)`.
    pub fn draw(&self, theta: &DVector<f64>, rng: &mut RngState) -> (DVector<f64>, DVector<f64>) {
        let x = self.covariates.points()[self.covariates.sample_index(rng)].clone();
        let eps = rng.signed_pareto(self.alpha);
        let y = x.dot(&self.theta_star) + eps;
        let g = &x * (x.dot(theta) - y);
        (x, g)
    }

    pub fn stochastic_gradient(&self, theta: &DVector<f64>, rng: &mut RngState) -> DVector<f64> {
        self.draw(theta, rng).1
    }

    /// Limit angular measure evaluated exactly over the discrete covariate law.
    pub fn angular_measure(&self, atoms: &[DVector<f64>]) -> Result<RegularVaryingLaw> {
        weighted_ols_measure(self.covariates.points(), self.covariates.probs(), self.alpha, atoms)
    }
}

/// Logistic design in `d` dimensions with covariate `x = R omega`: `omega`
/// drawn from a discrete angular law, `R` Pareto with `P(R > t) = t^{-alpha}`.
#[derive(Debug, Clone)]
pub struct LogisticDesign {
    pub directions: DiscreteLaw,
    pub theta_star: DVector<f64>,
    pub lambda: f64,
    pub alpha: f64,
}

impl LogisticDesign {
    pub fn new(directions: DiscreteLaw, theta_star: DVector<f64>, lambda: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(invalid("alpha", format!("{alpha} not in (1, 2)")));
        }
        if directions.points().iter().any(|x| x.len() != theta_star.len() || (x.norm() - 1.0).abs() > 1e-12) {
            return Err(invalid("directions", "directions must be unit vectors of the model dimension"));
        }
        Ok(Self { directions, theta_star, lambda, alpha })
    }

    pub fn covariate_measure(&self) -> Result<RegularVaryingLaw> {
        let atoms = self
            .directions
            .points()
            .iter()
            .zip(self.directions.probs())
            .map(|(d, p)| AngularAtom::new(d.clone(), *p))
            .collect();
        RegularVaryingLaw::new(self.alpha, 1.0, atoms)
    }

    /// Covariate and stochastic gradient for one draw `(x, y)`.
    pub fn draw(&self, theta: &DVector<f64>, rng: &mut RngState) -> (DVector<f64>, DVector<f64>) {
        let omega = &self.directions.points()[self.directions.sample_index(rng)];
        let r = rng.uniform().powf(-1.0 / self.alpha);
        let x = omega * r;
        let y = if rng.uniform() < sigmoid(self.theta_star.dot(&x)) { 1.0 } else { -1.0 };
        let g = &x * (-y * sigmoid(-y * theta.dot(&x))) + theta * self.lambda;
        (x, g)
    }

    pub fn stochastic_gradient(&self, theta: &DVector<f64>, rng: &mut RngState) -> DVector<f64> {
        self.draw(theta, rng).1
    }
}
