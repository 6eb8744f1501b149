//! Jump detection, Kolmogorov-Smirnov distance, coverage and histograms.

use nalgebra::DVector;

use crate::dynamics::ScaledErrorPath;
use crate::error::{invalid, Error, Result};

/// Points with optional probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    points: Vec<DVector<f64>>,
    weights: Option<Vec<f64>>,
}

impl EmpiricalSample {
    pub fn new(points: Vec<DVector<f64>>, weights: Option<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(w) = &weights {
            if w.len() != points.len() {
                return Err(invalid("weights", format!("{} weights for {} points", w.len(), points.len())));
            }
            if w.iter().any(|x| !(*x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(invalid("weights", "must be nonnegative and sum to 1"));
            }
        }
        Ok(Self { points, weights })
    }

    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|x| DVector::from_element(1, *x)).collect(), None)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.points.len() as f64,
        }
    }

    fn scalars(&self) -> Result<Vec<f64>> {
        if self.points[0].len() != 1 {
            return Err(invalid("sample", format!("expected a one-dimensional sample, got dimension {}", self.points[0].len())));
        }
        Ok(self.points.iter().map(|p| p[0]).collect())
    }

    /// Scalar values paired with weights, sorted by value.
    fn sorted_weighted(&self) -> Result<Vec<(f64, f64)>> {
        let xs = self.scalars()?;
        let mut pairs: Vec<(f64, f64)> = xs.into_iter().enumerate().map(|(i, x)| (x, self.weight(i))).collect();
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        Ok(pairs)
    }
}

/// How increments of a vector path are compared with the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpNorm {
    #[default]
    Euclidean,
    /// A jump in any single coordinate counts.
    PerCoordinate,
}

/// Indices `k` where `values[k] - values[k-1]` exceeds `threshold`.
pub fn detect_jumps(path: &ScaledErrorPath, threshold: f64, norm: JumpNorm) -> Result<Vec<usize>> {
    if path.len() < 2 {
        return Err(invalid("path", "need at least two points"));
    }
    Ok((1..path.len())
        .filter(|&k| {
            let d = &path.values[k] - &path.values[k - 1];
            match norm {
                JumpNorm::Euclidean => d.norm() > threshold,
                JumpNorm::PerCoordinate => d.amax() > threshold,
            }
        })
        .collect())
}

/// `sup_x |F_n(x) - F(x)|`, checking both one-sided limits of the empirical CDF at each point.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &EmpiricalSample, cdf: F) -> Result<f64> {
    let pairs = sample.sorted_weighted()?;
    let mut below = 0.0;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        // Ties share one jump of the empirical CDF.
        let x = pairs[i].0;
        let mut mass = 0.0;
        while i < pairs.len() && pairs[i].0 == x {
            mass += pairs[i].1;
            i += 1;
        }
        let f = cdf(x);
        let above = (below + mass).min(1.0);
        worst = worst.max((f - below).abs()).max((above - f).abs());
        below = above;
    }
    Ok(worst)
}

/// Fraction (by weight) of samples with `|x| <= half_width`.
pub fn coverage_rate(sample: &EmpiricalSample, half_width: f64) -> Result<f64> {
    if !(half_width >= 0.0) {
        return Err(invalid("half_width", format!("{half_width} must be nonnegative")));
    }
    let xs = sample.scalars()?;
    Ok(xs.iter().enumerate().filter(|(_, x)| x.abs() <= half_width).map(|(i, _)| sample.weight(i)).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub counts: Vec<usize>,
    /// Weight of samples outside `[edges[0], edges[last]]`.
    pub out_of_range: f64,
    pub out_of_range_count: usize,
}

/// Density histogram: bin weight over bin width. Bins are half-open except the last.
pub fn histogram(sample: &EmpiricalSample, bin_edges: &[f64]) -> Result<Histogram> {
    if bin_edges.len() < 2 || bin_edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("bin_edges", "need at least two strictly increasing edges"));
    }
    let xs = sample.scalars()?;
    let bins = bin_edges.len() - 1;
    let mut mass = vec![0.0; bins];
    let mut counts = vec![0; bins];
    let mut out_of_range = 0.0;
    let mut out_of_range_count = 0;
    let last = bin_edges[bins];
    for (i, &x) in xs.iter().enumerate() {
        let w = sample.weight(i);
        if !(x >= bin_edges[0] && x <= last) {
            out_of_range += w;
            out_of_range_count += 1;
            continue;
        }
        let k = (bin_edges.partition_point(|e| *e <= x) - 1).min(bins - 1);
        mass[k] += w;
        counts[k] += 1;
    }
    let densities = mass.iter().zip(bin_edges.windows(2)).map(|(m, e)| m / (e[1] - e[0])).collect();
    Ok(Histogram { edges: bin_edges.to_vec(), densities, counts, out_of_range, out_of_range_count })
}

/// `n + 1` equally spaced edges on `[lo, hi]`.
pub fn linear_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect()
}

/// Spearman rank correlation, with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("x", "need two equally long series of length at least 2"));
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::UndefinedEstimator("constant series has no rank correlation".into()));
    }
    Ok(cov / (vx * vy).sqrt())
}

/// Direction weights of the draws whose norm is above a quantile.
#[derive(Debug, Clone)]
pub struct DirectionWeights {
    pub weights: Vec<f64>,
    pub threshold: f64,
    pub count: usize,
}

/// Assigns each draw with norm above the `quantile` norm to the atom with the largest cosine
/// and returns the empirical weight of each atom.
pub fn conditional_direction_weights(
    draws: &[DVector<f64>],
    atoms: &[DVector<f64>],
    quantile: f64,
) -> Result<DirectionWeights> {
    if draws.is_empty() || atoms.is_empty() {
        return Err(invalid("draws", "need at least one draw and one atom"));
    }
    if !(0.0..1.0).contains(&quantile) {
        return Err(invalid("quantile", "must lie in [0, 1)"));
    }
    let mut norms: Vec<f64> = draws.iter().map(|g| g.norm()).collect();
    norms.sort_unstable_by(f64::total_cmp);
    let threshold = norms[((norms.len() as f64 * quantile) as usize).min(norms.len() - 1)];
    let mut counts = vec![0usize; atoms.len()];
    for g in draws {
        let r = g.norm();
        if r <= threshold || r == 0.0 {
            continue;
        }
        let best = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (i, g.dot(a) / (r * a.norm())))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(i, _)| i)
            .unwrap();
        counts[best] += 1;
    }
    let count: usize = counts.iter().sum();
    if count == 0 {
        return Err(Error::UndefinedEstimator("no draw exceeds the norm threshold".into()));
    }
    let weights = counts.iter().map(|c| *c as f64 / count as f64).collect();
    Ok(DirectionWeights { weights, threshold, count })
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_unstable_by(|a, b| x[*a].total_cmp(&x[*b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}
