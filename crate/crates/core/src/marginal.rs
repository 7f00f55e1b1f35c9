//! Reference distributions and their one-dimensional marginals.
//!
//! Each family is scaled to be isotropic (identity covariance), so every
//! direction sees a unit-variance marginal. Gaussian marginals are exact;
//! the uniform ball uses its closed-form density with a tabulated cdf; the
//! product families are built by numerically convolving coordinate laws on
//! a uniform grid.

use crate::num::{gaussian_direction, norm2, normal_cdf, normal_pdf, normal_quantile};
use crate::quantile::Sample;
use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;
use libm::{exp, expm1, fabs, lgamma, pow, sqrt};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum DistributionKind {
    IsotropicGaussian,
    /// Uniform on the ball of radius `sqrt(d + 2)`.
    UniformBall,
    /// Uniform on `[-sqrt 3, sqrt 3]^d`.
    UniformCube,
    /// Independent Laplace coordinates with scale `1/sqrt 2`.
    ProductLaplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleDistributionSpec {
    pub kind: DistributionKind,
    pub dim: usize,
}

impl SampleDistributionSpec {
    pub fn new(kind: DistributionKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be positive"));
        }
        Ok(SampleDistributionSpec { kind, dim })
    }

    /// Ball radius, cube half-width or Laplace scale; 1 for the Gaussian.
    pub fn scale(&self) -> f64 {
        match self.kind {
            DistributionKind::IsotropicGaussian => 1.0,
            DistributionKind::UniformBall => sqrt(self.dim as f64 + 2.0),
            DistributionKind::UniformCube => sqrt(3.0),
            DistributionKind::ProductLaplace => core::f64::consts::FRAC_1_SQRT_2,
        }
    }

    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        let d = self.dim;
        let s = self.scale();
        match self.kind {
            DistributionKind::IsotropicGaussian => {
                out.extend((0..d).map(|_| -> f64 { StandardNormal.sample(rng) }));
            }
            DistributionKind::UniformBall => {
                let u = gaussian_direction(d, rng);
                let r = s * pow(rng.random::<f64>(), 1.0 / d as f64);
                out.extend(u.iter().map(|v| v * r));
            }
            DistributionKind::UniformCube => {
                out.extend((0..d).map(|_| s * (2.0 * rng.random::<f64>() - 1.0)));
            }
            DistributionKind::ProductLaplace => {
                out.extend((0..d).map(|_| {
                    let u: f64 = rng.random::<f64>() - 0.5;
                    let mag = -s * libm::log1p(-2.0 * fabs(u));
                    if u < 0.0 {
                        -mag
                    } else {
                        mag
                    }
                }));
            }
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, n: usize, rng: &mut R) -> Sample {
        let mut v = Vec::with_capacity(n * self.dim);
        for _ in 0..n {
            self.draw(rng, &mut v);
        }
        Sample::new(self.dim, v).expect("generated values are finite")
    }

    /// Law of `<X, theta>` for a unit vector `theta`.
    pub fn marginal(&self, theta: &[f64]) -> Result<Marginal> {
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: theta.len() });
        }
        let n = norm2(theta);
        if !(n > 1e-300) {
            return Err(Error::ZeroDirection);
        }
        let weights: Vec<f64> = theta.iter().map(|t| fabs(t / n)).collect();
        Ok(match self.kind {
            DistributionKind::IsotropicGaussian => Marginal::Gaussian,
            DistributionKind::UniformBall => Marginal::Table(ball_table(self.dim, self.scale())),
            DistributionKind::UniformCube => Marginal::Table(cube_table(&weights, self.scale())),
            DistributionKind::ProductLaplace => Marginal::Table(laplace_table(&weights, self.scale())),
        })
    }
}

/// One-dimensional law with density, cdf and quantile.
#[derive(Debug, Clone)]
pub enum Marginal {
    Gaussian,
    Table(Table),
}

impl Marginal {
    pub fn density(&self, t: f64) -> f64 {
        match self {
            Marginal::Gaussian => normal_pdf(t),
            Marginal::Table(tb) => tb.density(t),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            Marginal::Gaussian => normal_cdf(t),
            Marginal::Table(tb) => tb.cdf(t),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            Marginal::Gaussian => normal_quantile(p),
            Marginal::Table(tb) => tb.quantile(p),
        }
    }

    /// Minimum of the density over `1000` evenly spaced points of `[lo, hi]`.
    pub fn min_density(&self, lo: f64, hi: f64) -> f64 {
        (0..1000)
            .map(|i| self.density(lo + (hi - lo) * i as f64 / 999.0))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Density sampled on `t_i = start + i h`, linearly interpolated between nodes.
#[derive(Debug, Clone)]
pub struct Table {
    start: f64,
    h: f64,
    f: Vec<f64>,
    cum: Vec<f64>,
}

impl Table {
    fn new(start: f64, h: f64, mut f: Vec<f64>) -> Self {
        let mut cum = vec![0.0; f.len()];
        for i in 1..f.len() {
            cum[i] = cum[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
        }
        let total = *cum.last().unwrap();
        for v in f.iter_mut() {
            *v /= total;
        }
        for v in cum.iter_mut() {
            *v /= total;
        }
        Table { start, h, f, cum }
    }

    fn locate(&self, t: f64) -> Option<(usize, f64)> {
        let x = (t - self.start) / self.h;
        if !(x >= 0.0) || x >= (self.f.len() - 1) as f64 {
            return None;
        }
        let i = x as usize;
        Some((i, t - (self.start + i as f64 * self.h)))
    }

    pub fn density(&self, t: f64) -> f64 {
        match self.locate(t) {
            Some((i, s)) => self.f[i] + (self.f[i + 1] - self.f[i]) * s / self.h,
            None => 0.0,
        }
    }

    /// Exact integral of the interpolated density.
    pub fn cdf(&self, t: f64) -> f64 {
        if t < self.start {
            return 0.0;
        }
        match self.locate(t) {
            Some((i, s)) => self.cum[i] + self.f[i] * s + (self.f[i + 1] - self.f[i]) * s * s / (2.0 * self.h),
            None => 1.0,
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let mut lo = self.start;
        let mut hi = self.start + (self.f.len() - 1) as f64 * self.h;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * (1.0 + fabs(mid)) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn interp_cum(&self, t: f64) -> f64 {
        if t <= self.start {
            return 0.0;
        }
        match self.locate(t) {
            Some((i, s)) => self.cum[i] + self.f[i] * s + (self.f[i + 1] - self.f[i]) * s * s / (2.0 * self.h),
            None => *self.cum.last().unwrap(),
        }
    }
}

const GRID_HALF: usize = 6000;

fn ball_table(dim: usize, radius: f64) -> Table {
    let h = radius / GRID_HALF as f64;
    let c = exp(lgamma(dim as f64 / 2.0 + 1.0) - lgamma((dim as f64 + 1.0) / 2.0)) / sqrt(core::f64::consts::PI);
    let e = (dim as f64 - 1.0) / 2.0;
    let f = (0..=2 * GRID_HALF)
        .map(|i| {
            let t = (i as f64 - GRID_HALF as f64) * h / radius;
            let base = (1.0 - t * t).max(0.0);
            if dim == 1 {
                c / radius
            } else {
                c / radius * pow(base, e)
            }
        })
        .collect();
    Table::new(-radius, h, f)
}

fn cube_table(weights: &[f64], half: f64) -> Table {
    let mut widths: Vec<f64> = weights.iter().map(|w| w * half).filter(|w| *w > 1e-12).collect();
    widths.sort_by(|a, b| b.total_cmp(a));
    let range: f64 = widths.iter().sum();
    let k = ((widths[0] / (range / GRID_HALF as f64)).round() as usize).max(1);
    let h = widths[0] / k as f64;
    let half_n = (range / h).ceil() as usize + 2;
    let start = -(half_n as f64) * h;
    let w0 = widths[0];
    let f0: Vec<f64> = (0..=2 * half_n)
        .map(|i| {
            let t = fabs(start + i as f64 * h);
            if t < w0 - 0.5 * h {
                1.0 / (2.0 * w0)
            } else if t < w0 + 0.5 * h {
                0.5 / (2.0 * w0)
            } else {
                0.0
            }
        })
        .collect();
    let mut table = Table::new(start, h, f0);
    for &w in &widths[1..] {
        let f = (0..=2 * half_n)
            .map(|i| {
                let t = start + i as f64 * h;
                (table.interp_cum(t + w) - table.interp_cum(t - w)) / (2.0 * w)
            })
            .collect();
        table = Table::new(start, h, f);
    }
    table
}

fn laplace_table(weights: &[f64], scale: f64) -> Table {
    let mut scales: Vec<f64> = weights.iter().map(|w| w * scale).filter(|b| *b > 1e-12).collect();
    scales.sort_by(|a, b| b.total_cmp(a));
    let range = scales.iter().sum::<f64>() + 40.0 * scales[0];
    let h = range / GRID_HALF as f64;
    let nodes = 2 * GRID_HALF + 1;
    let start = -range;
    let b0 = scales[0];
    let mut f: Vec<f64> = (0..nodes).map(|i| exp(-fabs(start + i as f64 * h) / b0) / (2.0 * b0)).collect();
    for &b in &scales[1..] {
        f = laplace_convolve(&f, h, b);
    }
    Table::new(start, h, f)
}

/// Convolution of a piecewise-linear density with `e^{-|s|/b} / 2b`, via
/// one forward and one backward exponential recursion.
fn laplace_convolve(f: &[f64], h: f64, b: f64) -> Vec<f64> {
    let lam = 1.0 / b;
    let x = lam * h;
    let decay = exp(-x);
    let one_minus = -expm1(-x);
    let i0 = one_minus / lam;
    let i1 = (1.0 - one_minus / x) / lam;
    let n = f.len();
    let mut fwd = vec![0.0; n];
    for i in 1..n {
        fwd[i] = decay * fwd[i - 1] + f[i - 1] * (i0 - i1) + f[i] * i1;
    }
    let mut bwd = vec![0.0; n];
    for i in (0..n - 1).rev() {
        bwd[i] = decay * bwd[i + 1] + f[i + 1] * (i0 - i1) + f[i] * i1;
    }
    (0..n).map(|i| (fwd[i] + bwd[i]) * lam / 2.0).collect()
}
