//! Admissibility parameters `(R_max, R_min, r, L, B, c)` and checks of a
//! sample or a reference distribution against them.

use crate::geometry::DirectionNet;
use crate::marginal::SampleDistributionSpec;
use crate::num::{dot, norm2};
use crate::quantile::{empirical_quantile_in_place, Sample};
use crate::{Error, Point, Result};
use alloc::vec;
use alloc::vec::Vec;
use libm::{log, sqrt};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdmissibleParams {
    pub q: f64,
    /// Directional quantiles lie within `R_max` of `<c, theta>`.
    pub r_max: f64,
    /// Radius of the ball around `c` contained in the floating body.
    pub r_min: f64,
    /// Half-width of the window around each quantile where the density floor applies.
    pub r: f64,
    /// Density floor of every marginal on that window.
    pub l: f64,
    /// Bound on row norms.
    pub b: f64,
    pub center: Point,
}

/// Parameters valid for every isotropic log-concave law at level `q`:
/// `R_min = q - 1/2`, `R_max = ln(1/(2(1-q)))`, `r = (1-q)/2`,
/// `L = (1-q)/8`, `B = 10 sqrt(d) n^3`, centered at the origin.
pub fn logconcave_params(q: f64, dim: usize, n: usize) -> Result<AdmissibleParams> {
    if !(q > 0.5 && q < 1.0) {
        return Err(Error::QOutOfRange(q));
    }
    if dim == 0 {
        return Err(Error::InvalidConfig("dimension must be positive"));
    }
    let nf = n as f64;
    Ok(AdmissibleParams {
        q,
        r_max: log(1.0 / (2.0 * (1.0 - q))),
        r_min: q - 0.5,
        r: (1.0 - q) / 2.0,
        l: (1.0 - q) / 8.0,
        b: 10.0 * sqrt(dim as f64) * nf * nf * nf,
        center: vec![0.0; dim],
    })
}

impl AdmissibleParams {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// True when `q` sits so close to 1/2 that the inner ball collapses.
    pub fn is_degenerate(&self) -> bool {
        self.r_min < 1e-6
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.r_max, self.r_min, self.r, self.l, self.b];
        if vals.iter().any(|v| !v.is_finite()) || self.center.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if !(self.q > 0.5 && self.q < 1.0) {
            return Err(Error::QOutOfRange(self.q));
        }
        if !(self.r_max > 0.0 && self.r_min > 0.0 && self.r > 0.0 && self.l > 0.0 && self.b > 0.0) {
            return Err(Error::InvalidConfig("admissible parameters must be positive"));
        }
        Ok(())
    }
}

/// Smallest marginal density along `theta` on `[Q_q - r, Q_q + r]` with the
/// log-concave `r` for level `q`.
pub fn density_floor(spec: &SampleDistributionSpec, theta: &[f64], q: f64) -> Result<f64> {
    let r = logconcave_params(q, spec.dim, 1)?.r;
    density_floor_over(spec, theta, q, r)
}

pub fn density_floor_over(spec: &SampleDistributionSpec, theta: &[f64], q: f64, r: f64) -> Result<f64> {
    if !(q > 0.5 && q < 1.0) {
        return Err(Error::QOutOfRange(q));
    }
    let m = spec.marginal(theta)?;
    let qq = m.quantile(q);
    Ok(m.min_density(qq - r, qq + r))
}

/// Parameters read off the analytic marginals of a centered symmetric law
/// over the directions of `net`: `R_max` and `R_min` are the largest and
/// smallest directional quantiles, `L` the smallest density on each window
/// of half-width `r`. `B` is the log-concave default.
pub fn analytic_params(spec: &SampleDistributionSpec, q: f64, r: f64, net: &DirectionNet, n: usize) -> Result<AdmissibleParams> {
    if !(r > 0.0) {
        return Err(Error::InvalidDomain("window half-width must be positive"));
    }
    if net.dim() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, found: net.dim() });
    }
    let mut p = logconcave_params(q, spec.dim, n)?;
    let (mut lo, mut hi, mut l) = (f64::INFINITY, 0.0f64, f64::INFINITY);
    for theta in net.iter() {
        let m = spec.marginal(theta)?;
        let qq = m.quantile(q);
        lo = lo.min(qq);
        hi = hi.max(qq);
        l = l.min(m.min_density(qq - r, qq + r));
    }
    p.r_max = hi;
    p.r_min = lo;
    p.r = r;
    p.l = l;
    Ok(p)
}

/// Per-condition violations found by [`admissibility_check`].
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdmissibilityReport {
    /// Directions whose quantile is farther than `R_max` from `<c, theta>`.
    pub quantile_range: Vec<usize>,
    /// Subset of `quantile_range` still within `R_max + 1`: the slack between
    /// the two available upper bounds on log-concave quantiles.
    pub quantile_range_gap: Vec<usize>,
    /// Directions where `Q - <c, theta> < R_min`.
    pub inner_ball: Vec<usize>,
    /// Directions where some histogram bin around `Q` falls below `0.8 L`.
    pub density: Vec<usize>,
    /// Rows with norm above `B`.
    pub row_norm: Vec<usize>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.quantile_range.is_empty() && self.inner_ball.is_empty() && self.density.is_empty() && self.row_norm.is_empty()
    }
}

/// Empirical check of the four admissibility conditions over a net. The
/// density condition uses eight histogram bins of width `r/4` covering
/// `[Q - r, Q + r]` and tolerates estimates down to `0.8 L`.
pub fn admissibility_check(
    x: &Sample,
    q: f64,
    net: &DirectionNet,
    p: &AdmissibleParams,
) -> Result<AdmissibilityReport> {
    p.validate()?;
    if x.is_empty() {
        return Err(Error::EmptySample);
    }
    if net.dim() != x.dim() || p.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: net.dim() });
    }
    let n = x.len() as f64;
    let mut report = AdmissibilityReport::default();
    for (k, theta) in net.iter().enumerate() {
        let mut proj = x.project(theta)?;
        let qq = empirical_quantile_in_place(&mut proj, q)?;
        let shift = qq - dot(&p.center, theta);
        if shift.abs() > p.r_max {
            report.quantile_range.push(k);
            if shift.abs() <= p.r_max + 1.0 {
                report.quantile_range_gap.push(k);
            }
        }
        if shift < p.r_min {
            report.inner_ball.push(k);
        }
        let width = p.r / 4.0;
        let mut bins = [0usize; 8];
        for v in &proj {
            let pos = (v - (qq - p.r)) / width;
            if pos >= 0.0 && pos < 8.0 {
                bins[pos as usize] += 1;
            }
        }
        if bins.iter().any(|c| (*c as f64) / (n * width) < 0.8 * p.l) {
            report.density.push(k);
        }
    }
    for (i, row) in x.rows().enumerate() {
        if norm2(row) > p.b {
            report.row_norm.push(i);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sphere_net, NetMode};
    use crate::marginal::DistributionKind;
    use rand::SeedableRng;

    #[test]
    fn closed_forms() {
        let p = logconcave_params(0.75, 2, 10).unwrap();
        assert!((p.r_min - 0.25).abs() < 1e-15);
        assert!((p.r_max - 2f64.ln()).abs() < 1e-15);
        assert!((p.r - 0.125).abs() < 1e-15);
        assert!((p.l - 0.03125).abs() < 1e-15);
        assert!((p.b - 10.0 * 2f64.sqrt() * 1000.0).abs() < 1e-9);
        assert_eq!(logconcave_params(1.0, 2, 10), Err(Error::QOutOfRange(1.0)));
        assert!(logconcave_params(0.5 + 1e-9, 2, 10).unwrap().is_degenerate());
    }

    #[test]
    fn gaussian_density_floor_matches_pdf() {
        let spec = SampleDistributionSpec::new(DistributionKind::IsotropicGaussian, 3).unwrap();
        let f = density_floor(&spec, &[0.0, 0.0, 1.0], 0.75).unwrap();
        let upper = crate::num::normal_quantile(0.75) + 0.125;
        assert!((f - crate::num::normal_pdf(upper)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_sample_is_admissible() {
        let spec = SampleDistributionSpec::new(DistributionKind::IsotropicGaussian, 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x = spec.sample(20_000, &mut rng);
        let net = sphere_net(2, NetMode::Random { size: 16, seed: 1 }).unwrap();
        let p = logconcave_params(0.75, 2, x.len()).unwrap();
        let report = admissibility_check(&x, 0.75, &net, &p).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn shifted_sample_breaks_the_inner_ball() {
        let spec = SampleDistributionSpec::new(DistributionKind::IsotropicGaussian, 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x = spec.sample(5_000, &mut rng);
        let shifted: Vec<f64> = x.values().iter().enumerate().map(|(i, v)| if i % 2 == 0 { v + 3.0 } else { *v }).collect();
        let x = Sample::new(2, shifted).unwrap();
        let net = sphere_net(2, NetMode::Axis).unwrap();
        let p = logconcave_params(0.75, 2, x.len()).unwrap();
        let report = admissibility_check(&x, 0.75, &net, &p).unwrap();
        assert!(!report.inner_ball.is_empty() && !report.quantile_range.is_empty());
    }
}
