//! The flattened Laplace mechanism, its radial sampler, privacy audits and
//! sample-size formulas.
//!
//! Around a center `c` the unnormalised log-density is
//! `-min(a ||t - c||_p, cap)` on the region `||t||_p <= rho` and `-inf`
//! outside, with slope `a = (eps/4)(Ln/2W)^h / K`, flat level
//! `cap = (eps/4)(Ln min(r, R_min) / 8W)^h` and `rho = 2K(R_max + r/2)`.

use crate::admissible::AdmissibleParams;
use crate::gamma::regularized_lower_gamma;
use crate::num::{norm2, PNorm};
use crate::typical::{recommend_w, TypicalSetConfig};
use crate::{Error, Point, Result};
use alloc::vec::Vec;
use libm::{exp, lgamma, log, log1p, pow, sqrt};
use rand::{Rng, RngCore};

/// Shape of an approximately Hölder query: `||f(F_q X) - f(F_q Y)||_p <= K delta_q(X, Y)^h`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HolderQuerySpec {
    pub h: f64,
    pub k: f64,
    /// Output dimension.
    pub m: usize,
    pub p: PNorm,
}

impl HolderQuerySpec {
    /// The quantile vector over a net of `net_size` directions.
    pub fn quantiles(net_size: usize) -> Self {
        HolderQuerySpec { h: 1.0, k: 1.0, m: net_size, p: PNorm::Inf }
    }

    /// Steiner point of the floating body: `K = 6 sqrt(d) (R_max + r) / R_min`.
    pub fn steiner(p: &AdmissibleParams) -> Self {
        let d = p.dim();
        HolderQuerySpec { h: 1.0, k: 6.0 * sqrt(d as f64) * (p.r_max + p.r) / p.r_min, m: d, p: PNorm::Two }
    }

    /// Projection of `x` onto the floating body:
    /// `K = 5 sqrt((||x|| + R_max + r)(R_max + r) / R_min)`, `h = 1/2`.
    pub fn projection(x: &[f64], p: &AdmissibleParams) -> Self {
        let s = p.r_max + p.r;
        HolderQuerySpec { h: 0.5, k: 5.0 * sqrt((norm2(x) + s) * s / p.r_min), m: p.dim(), p: PNorm::Two }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MechanismParams {
    pub epsilon: f64,
    pub slope: f64,
    pub cap: f64,
    /// Output region radius `rho` in the `p`-norm.
    pub radius: f64,
    pub m: usize,
    pub p: PNorm,
}

impl MechanismParams {
    pub fn new(epsilon: f64, cfg: &TypicalSetConfig, spec: &HolderQuerySpec) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidDomain("epsilon must be positive"));
        }
        if !(spec.h > 0.0 && spec.k > 0.0) || spec.m == 0 {
            return Err(Error::InvalidConfig("query needs h > 0, K > 0 and M >= 1"));
        }
        let p = &cfg.params;
        let ln = p.l * cfg.n as f64;
        Ok(MechanismParams {
            epsilon,
            slope: epsilon / 4.0 * pow(ln / (2.0 * cfg.w), spec.h) / spec.k,
            cap: epsilon / 4.0 * pow(ln * p.r.min(p.r_min) / (8.0 * cfg.w), spec.h),
            radius: 2.0 * spec.k * (p.r_max + p.r / 2.0),
            m: spec.m,
            p: spec.p,
        })
    }

    /// Distance from the center beyond which the density is flat.
    pub fn saturation_distance(&self) -> f64 {
        self.cap / self.slope
    }

    /// Upper end `2 rho` of the radial proposal.
    pub fn proposal_radius(&self) -> f64 {
        2.0 * self.radius
    }

    fn log_radial_masses(&self) -> (f64, f64) {
        let m = self.m as f64;
        let smax = self.proposal_radius();
        let sat = self.saturation_distance().min(smax);
        let steep = -m * log(self.slope) + lgamma(m) + log(regularized_lower_gamma(self.m as u32, self.slope * sat));
        let flat = if sat < smax {
            -self.cap + m * log(smax) + log1p(-pow(sat / smax, m)) - log(m)
        } else {
            f64::NEG_INFINITY
        };
        (steep, flat)
    }

    /// `P(||noise||_p >= s)` under the radial proposal law.
    pub fn radial_tail(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 1.0;
        }
        let smax = self.proposal_radius();
        if s >= smax {
            return 0.0;
        }
        let m = self.m as f64;
        let (steep, flat) = self.log_radial_masses();
        let total = log_add(steep, flat);
        let sat = self.saturation_distance().min(smax);
        let below = if s <= sat {
            -m * log(self.slope) + lgamma(m) + log(regularized_lower_gamma(self.m as u32, self.slope * s))
        } else {
            log_add(steep, -self.cap + m * log(s) + log1p(-pow(sat / s, m)) - log(m))
        };
        (1.0 - exp(below - total)).max(0.0)
    }

    /// Radius by exact inverse cdf of the density `s^{M-1} e^{-min(a s, cap)}` on `[0, 2 rho]`.
    pub fn sample_radius<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let m = self.m as f64;
        let smax = self.proposal_radius();
        let sat = self.saturation_distance().min(smax);
        let (steep, flat) = self.log_radial_masses();
        let p_steep = exp(steep - log_add(steep, flat));
        let u: f64 = rng.random();
        if u < p_steep {
            let x_hi = self.slope * sat;
            let target = rng.random::<f64>() * regularized_lower_gamma(self.m as u32, x_hi);
            let (mut lo, mut hi) = (0.0, x_hi);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if regularized_lower_gamma(self.m as u32, mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            0.5 * (lo + hi) / self.slope
        } else {
            let v: f64 = rng.random();
            let lo = pow(sat, m);
            pow(lo + v * (pow(smax, m) - lo), 1.0 / m)
        }
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let hi = a.max(b);
    hi + log1p(exp(-(a - b).abs()))
}

/// Log-sum-exp of a slice, ignoring `-inf` entries.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + log(v.iter().map(|x| exp(x - hi)).sum::<f64>())
}

/// Unnormalised log-density of the mechanism centered at `center`.
pub fn flat_laplace_logdensity(t: &[f64], center: &[f64], mp: &MechanismParams) -> f64 {
    if mp.p.norm(t) > mp.radius {
        return f64::NEG_INFINITY;
    }
    -(mp.slope * mp.p.dist(t, center)).min(mp.cap)
}

pub const MAX_PROPOSALS: u64 = 1_000_000;

/// One exact draw: radius by inverse cdf, direction from the cone measure of
/// the `p`-sphere, rejection when the proposal leaves the region.
pub fn flat_laplace_sample<R: RngCore + ?Sized>(center: &[f64], mp: &MechanismParams, rng: &mut R) -> Result<Point> {
    if center.len() != mp.m {
        return Err(Error::DimensionMismatch { expected: mp.m, found: center.len() });
    }
    if center.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if mp.p.norm(center) > mp.radius {
        return Err(Error::OutsideRegion);
    }
    for _ in 0..MAX_PROPOSALS {
        let s = mp.sample_radius(rng);
        let u = mp.p.sample_sphere(mp.m, rng);
        let t: Point = center.iter().zip(&u).map(|(c, v)| c + s * v).collect();
        if mp.p.norm(&t) <= mp.radius {
            return Ok(t);
        }
    }
    Err(Error::RejectionStall { proposals: MAX_PROPOSALS })
}

/// Uniform points in the output region, shared across the pairs of an audit
/// so that normaliser ratios use common random numbers.
#[derive(Debug, Clone)]
pub struct RegionProbe {
    m: usize,
    points: Vec<f64>,
}

impl RegionProbe {
    pub fn uniform<R: RngCore + ?Sized>(mp: &MechanismParams, count: usize, rng: &mut R) -> Self {
        let mut points = Vec::with_capacity(count * mp.m);
        for _ in 0..count {
            points.extend(uniform_in_ball(mp, rng));
        }
        RegionProbe { m: mp.m, points }
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `ln Z(c1) - ln Z(c2)` estimated on the probe.
    pub fn log_normalizer_ratio(&self, c1: &[f64], c2: &[f64], mp: &MechanismParams) -> f64 {
        let mut a = Vec::with_capacity(self.len());
        let mut b = Vec::with_capacity(self.len());
        for t in self.points.chunks_exact(self.m) {
            a.push(flat_laplace_logdensity(t, c1, mp));
            b.push(flat_laplace_logdensity(t, c2, mp));
        }
        log_sum_exp(&a) - log_sum_exp(&b)
    }
}

/// Uniform point of the `p`-ball of radius `rho`.
pub fn uniform_in_ball<R: RngCore + ?Sized>(mp: &MechanismParams, rng: &mut R) -> Point {
    match mp.p {
        PNorm::Inf => (0..mp.m).map(|_| mp.radius * (2.0 * rng.random::<f64>() - 1.0)).collect(),
        _ => {
            let u = mp.p.sample_sphere(mp.m, rng);
            let s = mp.radius * pow(rng.random::<f64>(), 1.0 / mp.m as f64);
            u.into_iter().map(|v| v * s).collect()
        }
    }
}

/// Output points for a ratio audit: a third near each center, within twice
/// the saturation distance, where the two densities differ most, and a third
/// uniform over the region.
pub fn audit_grid<R: RngCore + ?Sized>(c1: &[f64], c2: &[f64], mp: &MechanismParams, count: usize, rng: &mut R) -> Vec<Point> {
    let reach = 2.0 * mp.saturation_distance();
    let mut grid = Vec::with_capacity(count);
    while grid.len() < count {
        let t: Point = match grid.len() % 3 {
            0 => uniform_in_ball(mp, rng),
            k => {
                let c = if k == 1 { c1 } else { c2 };
                let u = mp.p.sample_sphere(mp.m, rng);
                let s = reach * rng.random::<f64>();
                c.iter().zip(&u).map(|(a, b)| a + s * b).collect()
            }
        };
        if mp.p.norm(&t) <= mp.radius {
            grid.push(t);
        }
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatioAudit {
    pub d_h: usize,
    /// `max_t |log f_1(t) - log f_2(t)| - (eps/2) d_H`; positive means a violation.
    pub max_slack: f64,
    pub pass: bool,
}

pub const RATIO_AUDIT_TOL: f64 = 1e-3;

/// Checks the restricted privacy bound `e^{(eps/2) d_H}` on a grid of outputs
/// for the mechanisms centered at `c1` and `c2`.
pub fn privacy_ratio_audit(
    c1: &[f64],
    c2: &[f64],
    d_h: usize,
    mp: &MechanismParams,
    probe: &RegionProbe,
    grid: &[Point],
) -> RatioAudit {
    let lz = probe.log_normalizer_ratio(c1, c2, mp);
    let budget = mp.epsilon / 2.0 * d_h as f64;
    let mut worst = f64::NEG_INFINITY;
    for t in grid {
        let a = flat_laplace_logdensity(t, c1, mp);
        let b = flat_laplace_logdensity(t, c2, mp);
        if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
            continue;
        }
        worst = worst.max((a - b - lz).abs() - budget);
    }
    RatioAudit { d_h, max_slack: worst, pass: worst <= RATIO_AUDIT_TOL }
}

/// Leading constants of the three terms of the sample-size bound.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleSizeConstants {
    pub accuracy: f64,
    pub noise: f64,
    pub typicality: f64,
    pub c_w: f64,
}

impl Default for SampleSizeConstants {
    fn default() -> Self {
        SampleSizeConstants { accuracy: 1.0, noise: 1.0, typicality: 1.0, c_w: crate::typical::DEFAULT_C_W }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleSize {
    pub n: usize,
    pub w: f64,
    /// `K^{2/h} (d + ln(4/beta)) / (alpha^{2/h} L^2)`.
    pub accuracy_term: f64,
    /// `W K^{1/h} ln(1/beta)^{1/h} M^{1/h} / ((eps alpha)^{1/h} L)`.
    pub noise_term: f64,
    /// `W M^{1/h} / ((eps min(r, R_min))^{1/h} L)`.
    pub typicality_term: f64,
}

/// Evaluates the three-term bound with the given leading constants.
pub fn sample_size(
    alpha: f64,
    beta: f64,
    epsilon: f64,
    spec: &HolderQuerySpec,
    p: &AdmissibleParams,
    net_size: usize,
    c: &SampleSizeConstants,
) -> Result<SampleSize> {
    p.validate()?;
    if !(beta > 0.0 && beta < 1.0) || !(epsilon > 0.0) || !(alpha > 0.0) {
        return Err(Error::InvalidDomain("need alpha > 0, epsilon > 0, beta in (0, 1)"));
    }
    let rmin = p.r.min(p.r_min);
    let limit = spec.k.min(1.0) * rmin / 2.0;
    if alpha >= limit {
        return Err(Error::AlphaTooLarge { alpha, limit });
    }
    let d = p.dim() as f64;
    let w = recommend_w(net_size, p.dim(), beta, c.c_w)?;
    let inv = 1.0 / spec.h;
    let m = spec.m as f64;
    let accuracy_term = c.accuracy * pow(spec.k, 2.0 * inv) * (d + log(4.0 / beta)) / (pow(alpha, 2.0 * inv) * p.l * p.l);
    let noise_term = c.noise * w * pow(spec.k, inv) * pow(log(1.0 / beta), inv) * pow(m, inv) / (pow(epsilon * alpha, inv) * p.l);
    let typicality_term = c.typicality * w * pow(m, inv) / (pow(epsilon * rmin, inv) * p.l);
    let total = accuracy_term + noise_term + typicality_term;
    if !total.is_finite() || total > 1e18 {
        return Err(Error::InvalidDomain("sample size overflows"));
    }
    Ok(SampleSize { n: libm::ceil(total) as usize, w, accuracy_term, noise_term, typicality_term })
}

/// Smallest `n` at which the exact radial tail `P(||noise||_p >= alpha)` of
/// the mechanism is at most `beta`, for a fixed window multiplier `w`.
pub fn calibrate_noise_rows(
    alpha: f64,
    beta: f64,
    epsilon: f64,
    spec: &HolderQuerySpec,
    p: &AdmissibleParams,
    w: f64,
) -> Result<usize> {
    if !(alpha > 0.0 && beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidDomain("need alpha > 0 and beta in (0, 1)"));
    }
    let tail = |n: usize| -> Result<f64> {
        let cfg = TypicalSetConfig { w, params: p.clone(), n };
        Ok(MechanismParams::new(epsilon, &cfg, spec)?.radial_tail(alpha))
    };
    let mut hi = libm::ceil(2.0 * w / p.l) as usize + 1;
    while tail(hi)? > beta {
        hi *= 2;
        if hi > 1 << 50 {
            return Err(Error::InvalidDomain("calibration did not converge"));
        }
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if tail(mid)? > beta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
