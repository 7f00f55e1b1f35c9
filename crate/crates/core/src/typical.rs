//! Typical-set membership: the data-dependent gate under which the
//! directional quantile query has small sensitivity.

use crate::admissible::AdmissibleParams;
use crate::geometry::DirectionNet;
use crate::num::dot;
use crate::quantile::{empirical_quantile_in_place, floating_body_from_quantiles, FloatingBodyApprox, Sample};
use crate::{Error, Result};
use alloc::vec::Vec;
use libm::{floor, log};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TypicalSetConfig {
    /// Window multiplier `W > 1`.
    pub w: f64,
    pub params: AdmissibleParams,
    pub n: usize,
}

impl TypicalSetConfig {
    pub fn new(w: f64, params: AdmissibleParams, n: usize) -> Result<Self> {
        params.validate()?;
        if !(w > 1.0) || !w.is_finite() {
            return Err(Error::InvalidConfig("window multiplier W must exceed 1"));
        }
        if !(n as f64 > 2.0 * w / params.l) {
            return Err(Error::InvalidConfig("n must exceed 2W/L"));
        }
        Ok(TypicalSetConfig { w, params, n })
    }

    /// Largest `kappa` in the count conditions, `floor(L r n / 2W)`; zero
    /// means the count conditions are vacuous.
    pub fn kappa_max(&self) -> usize {
        floor(self.params.l * self.params.r * self.n as f64 / (2.0 * self.w)) as usize
    }

    /// Half-width `kappa W / (L n)` of the count window at step `kappa`.
    pub fn window(&self, kappa: usize) -> f64 {
        kappa as f64 * self.w / (self.params.l * self.n as f64)
    }
}

/// `c_W (min(ln |A|, d) + ln(1/beta))`.
pub fn recommend_w(net_size: usize, dim: usize, beta: f64, c_w: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidDomain("failure probability must lie in (0, 1)"));
    }
    if net_size == 0 || dim == 0 {
        return Err(Error::InvalidConfig("net size and dimension must be positive"));
    }
    Ok(c_w * (f64::min(log(net_size as f64), dim as f64) + log(1.0 / beta)))
}

pub const DEFAULT_C_W: f64 = 4.0;

/// Worst-case change `2 W d_H / (L n)` of any directional quantile between
/// two typical datasets at Hamming distance `d_H`.
pub fn sensitivity_bound(d_h: usize, cfg: &TypicalSetConfig) -> f64 {
    2.0 * cfg.w * d_h as f64 / (cfg.params.l * cfg.n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum DirectionViolation {
    /// Fewer than `kappa + 1` projections in `[Q, Q + window(kappa)]`.
    RightCount { kappa: usize, count: usize },
    /// Fewer than `kappa + 1` projections in `[Q - window(kappa), Q]`.
    LeftCount { kappa: usize, count: usize },
    /// Quantile outside `<c, theta> +- (R_max + r/2)`.
    QuantileRange { value: f64 },
    /// Some row projects above `B`.
    RowBound { row: usize },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DirectionCheck {
    pub quantile: f64,
    pub violation: Option<DirectionViolation>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TypicalSetReport {
    pub directions: Vec<DirectionCheck>,
    pub kappa_max: usize,
    /// True when `kappa_max == 0`, so only the range, bound and ball
    /// conditions constrain membership.
    pub vacuous_kappa: bool,
    /// Chebyshev radius of the floating body; `None` when it is unbounded.
    pub ball_radius: Option<f64>,
    pub ball_ok: bool,
    pub in_set: bool,
}

impl TypicalSetReport {
    pub fn first_violation(&self) -> Option<(usize, DirectionViolation)> {
        self.directions.iter().enumerate().find_map(|(i, c)| c.violation.map(|v| (i, v)))
    }
}

pub fn check_typical(x: &Sample, q: f64, net: &DirectionNet, cfg: &TypicalSetConfig) -> Result<TypicalSetReport> {
    check_typical_with_body(x, q, net, cfg).map(|(r, _)| r)
}

/// Membership report together with the floating body built from the same quantiles.
pub fn check_typical_with_body(
    x: &Sample,
    q: f64,
    net: &DirectionNet,
    cfg: &TypicalSetConfig,
) -> Result<(TypicalSetReport, FloatingBodyApprox)> {
    if x.is_empty() {
        return Err(Error::EmptySample);
    }
    if x.len() != cfg.n {
        return Err(Error::InvalidConfig("typical-set config was built for a different n"));
    }
    if net.dim() != x.dim() || cfg.params.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: net.dim() });
    }
    let mut directions = Vec::with_capacity(net.len());
    let mut scratch = Vec::new();
    for theta in net.iter() {
        directions.push(check_direction(x, theta, q, cfg, &mut scratch)?);
    }
    let quantiles = directions.iter().map(|c| c.quantile).collect();
    let body = floating_body_from_quantiles(quantiles, q, net, x.fingerprint())?;
    let ball_radius = if body.empty {
        Some(0.0)
    } else {
        body.ball.as_ref().map(|b| b.radius)
    };
    let ball_ok = ball_radius.map_or(true, |r| r >= cfg.params.r_min / 2.0 - 1e-9);
    let kappa_max = cfg.kappa_max();
    let in_set = ball_ok && directions.iter().all(|c| c.violation.is_none());
    let report = TypicalSetReport { directions, kappa_max, vacuous_kappa: kappa_max == 0, ball_radius, ball_ok, in_set };
    Ok((report, body))
}

fn check_direction(
    x: &Sample,
    theta: &[f64],
    q: f64,
    cfg: &TypicalSetConfig,
    scratch: &mut Vec<f64>,
) -> Result<DirectionCheck> {
    let p = &cfg.params;
    scratch.clear();
    scratch.extend(x.rows().map(|r| dot(r, theta)));
    let quantile = empirical_quantile_in_place(scratch, q)?;
    let done = |v| Ok(DirectionCheck { quantile, violation: Some(v) });
    if (quantile - dot(&p.center, theta)).abs() > p.r_max + p.r / 2.0 {
        return done(DirectionViolation::QuantileRange { value: quantile });
    }
    let kmax = cfg.kappa_max();
    if kmax > 0 {
        let reach = cfg.window(kmax);
        let mut right: Vec<f64> = Vec::new();
        let mut left: Vec<f64> = Vec::new();
        for v in scratch.iter() {
            let gap = v - quantile;
            if gap >= 0.0 && gap <= reach {
                right.push(gap);
            }
            if gap <= 0.0 && -gap <= reach {
                left.push(-gap);
            }
        }
        right.sort_unstable_by(f64::total_cmp);
        left.sort_unstable_by(f64::total_cmp);
        let (mut ir, mut il) = (0, 0);
        for kappa in 1..=kmax {
            let w = cfg.window(kappa);
            while ir < right.len() && right[ir] <= w {
                ir += 1;
            }
            while il < left.len() && left[il] <= w {
                il += 1;
            }
            if ir < kappa + 1 {
                return done(DirectionViolation::RightCount { kappa, count: ir });
            }
            if il < kappa + 1 {
                return done(DirectionViolation::LeftCount { kappa, count: il });
            }
        }
    }
    if let Some(row) = x.rows().position(|r| dot(r, theta) > p.b) {
        return done(DirectionViolation::RowBound { row });
    }
    Ok(DirectionCheck { quantile, violation: None })
}
