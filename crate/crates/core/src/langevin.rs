//! Projected Langevin chains targeting the uniform law on a convex body,
//! with exact or perturbed projection and Steiner oracles.
//!
//! One step is `X_{t+1} = P_K(X_t + sqrt(2 eta) g_t)` started from the
//! Steiner point. The perturbed variant draws `g_t` from the standard
//! Gaussian truncated to `||g|| <= sqrt(d) ln(dk)`.

use crate::admissible::AdmissibleParams;
use crate::geometry::{steiner_point, Polytope, Projector, DYKSTRA_MAX_SWEEPS, DYKSTRA_TOL};
use crate::num::{gaussian_direction, norm2};
use crate::{Error, Point, Result};
use alloc::boxed::Box;
use alloc::vec::Vec;
use libm::{ceil, log, pow, sqrt};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LangevinConfig {
    pub eta: f64,
    pub k: usize,
    /// Norm above which perturbed chains redraw their Gaussian increment.
    pub trunc: f64,
    pub alpha: f64,
    /// Directions used for the Monte Carlo Steiner start.
    pub steiner_directions: usize,
}

pub const DEFAULT_C_ETA: f64 = 0.5;
pub const DEFAULT_C_K: f64 = 2.0;

impl LangevinConfig {
    /// `eta = c_eta R_min^2 alpha^2 / ((R_max + 1)^4 d)` and
    /// `k = c_k (R_max + 1)^6 d / (R_min^2 alpha^2)` for a body that contains
    /// a ball of radius `R_min` and sits inside a ball of radius `R_max`.
    pub fn calibrated(dim: usize, alpha: f64, r_min: f64, r_max: f64, c_eta: f64, c_k: f64) -> Result<Self> {
        if dim == 0 || !(alpha > 0.0) || !(r_min > 0.0) || !(r_max >= r_min) || !(c_eta > 0.0) || !(c_k > 0.0) {
            return Err(Error::InvalidConfig("Langevin calibration needs positive constants and R_max >= R_min"));
        }
        let d = dim as f64;
        let eta = c_eta * r_min * r_min / pow(r_max + 1.0, 4.0) * alpha * alpha / d;
        let k = ceil(c_k * pow(r_max + 1.0, 6.0) / (r_min * r_min) * d / (alpha * alpha)) as usize;
        Ok(LangevinConfig { eta, k, trunc: truncation_radius(dim, k), alpha, steiner_directions: 2048 })
    }

    /// `k = 0` is accepted and means the chain stops at its start.
    pub fn explicit(dim: usize, eta: f64, k: usize, alpha: f64) -> Result<Self> {
        if !(eta >= 0.0) || dim == 0 {
            return Err(Error::InvalidConfig("need eta >= 0 and d >= 1"));
        }
        Ok(LangevinConfig { eta, k, trunc: truncation_radius(dim, k), alpha, steiner_directions: 2048 })
    }

    /// Standard deviation `sqrt(2 eta)` of each coordinate of the increment.
    pub fn step_scale(&self) -> f64 {
        sqrt(2.0 * self.eta)
    }
}

/// `sqrt(d) ln(dk)`, floored at `sqrt(d)` so tiny runs keep a usable radius.
pub fn truncation_radius(dim: usize, k: usize) -> f64 {
    sqrt(dim as f64) * log((dim * k.max(1)) as f64).max(1.0)
}

fn gaussian<R: RngCore + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| -> f64 { StandardNormal.sample(rng) }).collect()
}

/// Standard Gaussian conditioned on `||g|| <= trunc`.
pub fn truncated_gaussian<R: RngCore + ?Sized>(dim: usize, trunc: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let g = gaussian(dim, rng);
        if norm2(&g) <= trunc {
            return g;
        }
    }
}

pub trait ProjectionOracle {
    fn project(&mut self, x: &[f64], rng: &mut dyn RngCore) -> Result<Point>;
}

pub trait SteinerOracle {
    fn steiner(&mut self, rng: &mut dyn RngCore) -> Result<Point>;
}

/// Exact Dykstra projection and a Monte Carlo Steiner point.
#[derive(Debug, Clone)]
pub struct ExactOracle<'a> {
    projector: Projector<'a>,
    steiner_directions: usize,
}

impl<'a> ExactOracle<'a> {
    pub fn new(body: &'a Polytope, steiner_directions: usize) -> Self {
        ExactOracle { projector: Projector::new(body), steiner_directions }
    }
}

impl ProjectionOracle for ExactOracle<'_> {
    fn project(&mut self, x: &[f64], _rng: &mut dyn RngCore) -> Result<Point> {
        let mut p = x.to_vec();
        self.projector.project_in_place(&mut p, DYKSTRA_TOL, DYKSTRA_MAX_SWEEPS)?;
        Ok(p)
    }
}

impl SteinerOracle for ExactOracle<'_> {
    fn steiner(&mut self, rng: &mut dyn RngCore) -> Result<Point> {
        Ok(steiner_point(self.projector.body(), self.steiner_directions, rng)?.point)
    }
}

/// Oracle error budget: within `alpha_tilde` with probability `1 - beta`,
/// and always within `big_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoisyOracleParams {
    pub alpha_tilde: f64,
    pub beta: f64,
    pub big_r: f64,
}

/// `alpha~ = d alpha / (32 k (R_max + 1))`,
/// `beta = d^2 alpha^2 / (2^14 k^2 (R_max + 1)^2 (R_max + r)^2)`, `R = 4(R_max + r)`.
pub fn noisy_oracle_params(alpha: f64, k: usize, p: &AdmissibleParams) -> Result<NoisyOracleParams> {
    oracle_budget(alpha, k, p.dim(), p.r_max, p.r)
}

/// The same budget for an arbitrary body with outer radius `r_max` and window `r`.
pub fn oracle_budget(alpha: f64, k: usize, dim: usize, r_max: f64, r: f64) -> Result<NoisyOracleParams> {
    if k < dim {
        return Err(Error::KTooSmall { k, d: dim });
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidDomain("alpha must be positive"));
    }
    let (d, kf) = (dim as f64, k as f64);
    let alpha_tilde = d * alpha / (32.0 * kf * (r_max + 1.0));
    let beta = d * d * alpha * alpha / (16384.0 * kf * kf * pow(r_max + 1.0, 2.0) * pow(r_max + r, 2.0));
    Ok(NoisyOracleParams { alpha_tilde, beta, big_r: 4.0 * (r_max + r) })
}

/// Bound on `E ||X_k - X~_k||^2` for coupled exact and perturbed chains:
/// `(k + 1)(R^2 beta + alpha~^2 + 4 R_max sqrt(R^2 beta + alpha~^2)) + 2 eta`.
pub fn coupling_bound(b: &NoisyOracleParams, cfg: &LangevinConfig, r_max: f64) -> f64 {
    let e = b.big_r * b.big_r * b.beta + b.alpha_tilde * b.alpha_tilde;
    (cfg.k as f64 + 1.0) * (e + 4.0 * r_max * sqrt(e)) + 2.0 * cfg.eta
}

/// Wraps exact oracles and adds error of norm uniform on `[0, alpha~)` with
/// probability `1 - beta`, otherwise uniform on `[alpha~, R)`, in a uniform direction.
#[derive(Debug, Clone)]
pub struct PerturbedOracle<'a> {
    exact: ExactOracle<'a>,
    budget: NoisyOracleParams,
}

impl<'a> PerturbedOracle<'a> {
    pub fn new(body: &'a Polytope, steiner_directions: usize, budget: NoisyOracleParams) -> Self {
        PerturbedOracle { exact: ExactOracle::new(body, steiner_directions), budget }
    }

    fn perturb(&self, x: &mut [f64], rng: &mut dyn RngCore) {
        let b = &self.budget;
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        let s = if u < 1.0 - b.beta { v * b.alpha_tilde } else { b.alpha_tilde + v * (b.big_r - b.alpha_tilde) };
        let dir = gaussian_direction(x.len(), rng);
        for (xi, di) in x.iter_mut().zip(&dir) {
            *xi += s * di;
        }
    }
}

impl ProjectionOracle for PerturbedOracle<'_> {
    fn project(&mut self, x: &[f64], rng: &mut dyn RngCore) -> Result<Point> {
        let mut p = self.exact.project(x, rng)?;
        self.perturb(&mut p, rng);
        Ok(p)
    }
}

impl SteinerOracle for PerturbedOracle<'_> {
    fn steiner(&mut self, rng: &mut dyn RngCore) -> Result<Point> {
        let mut p = self.exact.steiner(rng)?;
        self.perturb(&mut p, rng);
        Ok(p)
    }
}

/// Endpoints of `n_out` independent exact chains started at the Steiner point.
pub fn langevin_uniform<R: RngCore>(k: &Polytope, cfg: &LangevinConfig, rng: &mut R, n_out: usize) -> Result<Vec<Point>> {
    let start = steiner_point(k, cfg.steiner_directions, rng)?.point;
    let scale = cfg.step_scale();
    let d = k.dim();
    let mut projector = Projector::new(k);
    let mut out = Vec::with_capacity(n_out);
    for _ in 0..n_out {
        let mut x = start.clone();
        for _ in 0..cfg.k {
            for xi in x.iter_mut() {
                let g: f64 = StandardNormal.sample(rng);
                *xi += scale * g;
            }
            projector.project_in_place(&mut x, DYKSTRA_TOL, DYKSTRA_MAX_SWEEPS)?;
        }
        debug_assert_eq!(x.len(), d);
        out.push(x);
    }
    Ok(out)
}

fn oracle_err(step: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::OracleFailure { step, source: Box::new(e) }
}

/// One chain driven by possibly inexact oracles, with truncated increments.
pub fn noisy_langevin<P, S>(proj: &mut P, steiner: &mut S, cfg: &LangevinConfig, dim: usize, rng: &mut dyn RngCore) -> Result<Point>
where
    P: ProjectionOracle + ?Sized,
    S: SteinerOracle + ?Sized,
{
    let scale = cfg.step_scale();
    let mut x = steiner.steiner(rng).map_err(oracle_err(0))?;
    for step in 1..=cfg.k {
        let g = truncated_gaussian(dim, cfg.trunc, rng);
        let y: Point = x.iter().zip(&g).map(|(a, b)| a + scale * b).collect();
        x = proj.project(&y, rng).map_err(oracle_err(step))?;
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoupledRun {
    pub exact: Point,
    pub noisy: Point,
}

/// Runs an exact chain and a perturbed chain on shared randomness: both use
/// the same Gaussian increment whenever it lies within the truncation
/// radius, otherwise the perturbed chain redraws.
pub fn coupled_langevin<P, S>(
    body: &Polytope,
    exact_start: &[f64],
    proj: &mut P,
    steiner: &mut S,
    cfg: &LangevinConfig,
    rng: &mut dyn RngCore,
) -> Result<CoupledRun>
where
    P: ProjectionOracle + ?Sized,
    S: SteinerOracle + ?Sized,
{
    let d = body.dim();
    let scale = cfg.step_scale();
    let mut projector = Projector::new(body);
    let mut x = exact_start.to_vec();
    let mut xn = steiner.steiner(rng).map_err(oracle_err(0))?;
    for step in 1..=cfg.k {
        let g = gaussian(d, rng);
        let gn = if norm2(&g) <= cfg.trunc { g.clone() } else { truncated_gaussian(d, cfg.trunc, rng) };
        for j in 0..d {
            x[j] += scale * g[j];
        }
        projector.project_in_place(&mut x, DYKSTRA_TOL, DYKSTRA_MAX_SWEEPS)?;
        let y: Point = xn.iter().zip(&gn).map(|(a, b)| a + scale * b).collect();
        xn = proj.project(&y, rng).map_err(oracle_err(step))?;
    }
    Ok(CoupledRun { exact: x, noisy: xn })
}
