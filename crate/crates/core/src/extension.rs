//! Exact extension of the restricted mechanism for tiny one-dimensional
//! universes that can be enumerated.
//!
//! For datasets of `n` values drawn from a grid of at most five points the
//! typical set `H` can be listed in full. The extended density at any `X` is
//! `G_X(t) / Z_X` with `G_X(t) = min_{Y in H} e^{(eps/2) d_H(X, Y)} f_Y(t)`,
//! where `f_Y` is the normalised restricted density of `Y`. The query is the
//! `q`-quantile along `+1`, so `M = 1` and restricted normalisers have closed
//! forms.

use crate::admissible::AdmissibleParams;
use crate::geometry::{sphere_net, NetMode};
use crate::mechanism::{HolderQuerySpec, MechanismParams};
use crate::num::{integrate, PNorm};
use crate::quantile::{quantile_along, Sample};
use crate::typical::{check_typical, TypicalSetConfig};
use crate::{Error, Result};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use libm::{exp, fabs, log, pow};

#[derive(Debug, Clone)]
pub struct EnumerableInstance {
    pub name: String,
    pub grid: Vec<f64>,
    pub n: usize,
    pub q: f64,
    pub epsilon: f64,
    pub config: TypicalSetConfig,
    pub mechanism: MechanismParams,
    /// Members of `H` as grid-index tuples.
    members: Vec<Vec<usize>>,
    /// Query value of each member.
    member_centers: Vec<f64>,
    /// Distinct query values over `H`, with their restricted normalisers.
    centers: Vec<f64>,
    normalizers: Vec<f64>,
}

impl EnumerableInstance {
    /// Enumerates all `grid^n` tuples and keeps those passing the typical-set
    /// check with net `{+1, -1}`.
    pub fn new(name: &str, grid: Vec<f64>, n: usize, q: f64, epsilon: f64, w: f64, params: AdmissibleParams) -> Result<Self> {
        if grid.is_empty() || grid.len() > 5 || n == 0 || n > 6 {
            return Err(Error::InvalidConfig("enumerable instances need a grid of 1..=5 points and 1 <= n <= 6"));
        }
        if params.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: params.dim() });
        }
        let config = TypicalSetConfig::new(w, params, n)?;
        let mechanism = MechanismParams::new(epsilon, &config, &HolderQuerySpec { h: 1.0, k: 1.0, m: 1, p: PNorm::Two })?;
        let net = sphere_net(1, NetMode::Axis)?;
        let mut members = Vec::new();
        let mut member_centers = Vec::new();
        let total = pow(grid.len() as f64, n as f64) as usize;
        for code in 0..total {
            let idx = decode(code, grid.len(), n);
            let x = tuple_sample(&grid, &idx)?;
            if check_typical(&x, q, &net, &config)?.in_set {
                member_centers.push(quantile_along(&x, &[1.0], q)?);
                members.push(idx);
            }
        }
        let mut centers = member_centers.clone();
        centers.sort_by(f64::total_cmp);
        centers.dedup();
        let normalizers = centers.iter().map(|c| restricted_normalizer(*c, &mechanism)).collect();
        Ok(EnumerableInstance {
            name: name.into(),
            grid,
            n,
            q,
            epsilon,
            config,
            mechanism,
            members,
            member_centers,
            centers,
            normalizers,
        })
    }

    /// Replaces the restricted mechanism, keeping the enumerated typical set.
    pub fn with_mechanism(mut self, mechanism: MechanismParams) -> Self {
        self.normalizers = self.centers.iter().map(|c| restricted_normalizer(*c, &mechanism)).collect();
        self.mechanism = mechanism;
        self
    }

    pub fn members(&self) -> impl Iterator<Item = Sample> + '_ {
        self.members.iter().map(|idx| tuple_sample(&self.grid, idx).expect("grid values are finite"))
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    /// Every dataset over the grid, in lexicographic index order.
    pub fn universe(&self) -> impl Iterator<Item = Sample> + '_ {
        let total = pow(self.grid.len() as f64, self.n as f64) as usize;
        (0..total).map(|c| tuple_sample(&self.grid, &decode(c, self.grid.len(), self.n)).expect("grid values are finite"))
    }

    fn indices(&self, x: &Sample) -> Result<Vec<usize>> {
        if x.dim() != 1 || x.len() != self.n {
            return Err(Error::InvalidProbe);
        }
        x.values()
            .iter()
            .map(|v| self.grid.iter().position(|g| g == v).ok_or(Error::InvalidProbe))
            .collect()
    }

    /// Normalised restricted density at `t` for a dataset with query value `center`.
    pub fn restricted_density(&self, center: f64, t: f64) -> f64 {
        let mp = &self.mechanism;
        if fabs(t) > mp.radius {
            return 0.0;
        }
        exp(-(mp.slope * fabs(t - center)).min(mp.cap)) / restricted_normalizer(center, mp)
    }

    /// Smallest Hamming distance from `x` to a member with each distinct query value.
    fn distances(&self, x: &Sample) -> Result<Vec<usize>> {
        let idx = self.indices(x)?;
        let mut best = vec![usize::MAX; self.centers.len()];
        for (m, c) in self.members.iter().zip(&self.member_centers) {
            let d = m.iter().zip(&idx).filter(|(a, b)| a != b).count();
            let k = self.centers.iter().position(|v| v == c).expect("center listed");
            best[k] = best[k].min(d);
        }
        Ok(best)
    }

    fn envelope_with(&self, dist: &[usize], t: f64) -> f64 {
        let mp = &self.mechanism;
        if fabs(t) > mp.radius {
            return 0.0;
        }
        let mut g = f64::INFINITY;
        for ((c, z), d) in self.centers.iter().zip(&self.normalizers).zip(dist) {
            let v = exp(self.epsilon / 2.0 * *d as f64 - (mp.slope * fabs(t - c)).min(mp.cap)) / z;
            g = g.min(v);
        }
        g
    }

    /// Unnormalised extended density `G_X(t)`.
    pub fn envelope(&self, x: &Sample, t: f64) -> Result<f64> {
        let dist = self.distances(x)?;
        Ok(self.envelope_with(&dist, t))
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mp = &self.mechanism;
        let s = mp.saturation_distance().min(2.0 * mp.radius);
        let mut pts = vec![-mp.radius, mp.radius];
        for c in &self.centers {
            for p in [c - s, *c, c + s] {
                if fabs(p) < mp.radius {
                    pts.push(p);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn integrate_envelope<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.breakpoints().windows(2).map(|w| integrate(&f, w[0], w[1], 1e-15)).sum()
    }

    /// `Z_X`, the integral of `G_X` over the region.
    pub fn extended_normalizer(&self, x: &Sample) -> Result<f64> {
        let dist = self.distances(x)?;
        Ok(self.integrate_envelope(|t| self.envelope_with(&dist, t)))
    }

    /// Extended output density at `t`.
    pub fn density(&self, x: &Sample, t: f64) -> Result<f64> {
        let dist = self.distances(x)?;
        let z = self.integrate_envelope(|s| self.envelope_with(&dist, s));
        Ok(self.envelope_with(&dist, t) / z)
    }

    /// Lipschitz constant `e^{eps n / 2} a / min_Y Zhat_Y` of `G_X` in `t`,
    /// with the exact smallest restricted normaliser over `H`.
    pub fn lipschitz_constant(&self) -> f64 {
        let zmin = self.normalizers.iter().copied().fold(f64::INFINITY, f64::min);
        exp(self.epsilon * self.n as f64 / 2.0) * self.mechanism.slope / zmin
    }
}

/// Extended output density at `t` for dataset `x`.
pub fn extension_density(x: &Sample, inst: &EnumerableInstance, t: f64) -> Result<f64> {
    inst.density(x, t)
}

fn decode(mut code: usize, base: usize, n: usize) -> Vec<usize> {
    let mut idx = vec![0; n];
    for slot in idx.iter_mut().rev() {
        *slot = code % base;
        code /= base;
    }
    idx
}

fn tuple_sample(grid: &[f64], idx: &[usize]) -> Result<Sample> {
    Sample::new(1, idx.iter().map(|&i| grid[i]).collect())
}

/// `int_{-rho}^{rho} e^{-min(a |t - c|, cap)} dt` in closed form.
pub fn restricted_normalizer(center: f64, mp: &MechanismParams) -> f64 {
    let side = |len: f64| -> f64 {
        if len <= 0.0 {
            return 0.0;
        }
        let s = mp.saturation_distance().min(len);
        (1.0 - exp(-mp.slope * s)) / mp.slope + exp(-mp.cap) * (len - s)
    };
    side(mp.radius - center) + side(mp.radius + center)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExtensionAudit {
    pub members: usize,
    pub probes: usize,
    pub pairs: usize,
    /// Largest `log(f_X(t) / f_Y(t)) - eps d_H(X, Y)` over probe pairs and grid points.
    pub max_ratio_slack: f64,
    /// Largest total-variation distance between extended and restricted laws on `H`.
    pub max_tv: f64,
    pub pass: bool,
}

pub const RATIO_SLACK_TOL: f64 = 1e-6;
pub const TV_TOL: f64 = 1e-8;

/// Checks `e^{eps d_H}` ratio bounds for every probe pair at 200 evenly
/// spaced outputs, and agreement with the restricted mechanism on `H`.
pub fn extension_audit(inst: &EnumerableInstance, probes: &[Sample]) -> Result<ExtensionAudit> {
    let mp = &inst.mechanism;
    let pts: Vec<f64> = (0..200).map(|i| -mp.radius + (i as f64 + 0.5) * 2.0 * mp.radius / 200.0).collect();
    let mut logs = Vec::with_capacity(probes.len());
    let mut idx = Vec::with_capacity(probes.len());
    for x in probes {
        let dist = inst.distances(x)?;
        let z = inst.integrate_envelope(|t| inst.envelope_with(&dist, t));
        logs.push(pts.iter().map(|t| log(inst.envelope_with(&dist, *t) / z)).collect::<Vec<f64>>());
        idx.push(inst.indices(x)?);
    }
    let mut worst = f64::NEG_INFINITY;
    let mut pairs = 0;
    for i in 0..probes.len() {
        for j in 0..probes.len() {
            if i == j {
                continue;
            }
            pairs += 1;
            let dh = idx[i].iter().zip(&idx[j]).filter(|(a, b)| a != b).count() as f64;
            for (a, b) in logs[i].iter().zip(&logs[j]) {
                worst = worst.max(a - b - inst.epsilon * dh);
            }
        }
    }
    let mut max_tv: f64 = 0.0;
    for (m, c) in inst.members().zip(&inst.member_centers) {
        let dist = inst.distances(&m)?;
        let z = inst.integrate_envelope(|t| inst.envelope_with(&dist, t));
        let tv = 0.5 * inst.integrate_envelope(|t| fabs(inst.envelope_with(&dist, t) / z - inst.restricted_density(*c, t)));
        max_tv = max_tv.max(tv);
    }
    let pass = worst <= RATIO_SLACK_TOL && max_tv <= TV_TOL;
    Ok(ExtensionAudit { members: inst.member_count(), probes: probes.len(), pairs, max_ratio_slack: worst, max_tv, pass })
}

fn toy_params(q: f64, r_max: f64, r_min: f64, r: f64, l: f64) -> AdmissibleParams {
    AdmissibleParams { q, r_max, r_min, r, l, b: 100.0, center: vec![0.0] }
}

/// The shipped instances: small universes on which the restricted mechanism
/// is `eps/2`-private, so the extension must agree with it on `H`.
pub fn shipped_instances() -> Result<Vec<EnumerableInstance>> {
    let g = vec![0.0, 0.1, 0.2, 0.3, 0.4];
    let gc = vec![-0.2, -0.1, 0.0, 0.1, 0.2];
    Ok(vec![
        EnumerableInstance::new("four-rows-vacuous", g.clone(), 4, 0.75, 1.0, 1.5, toy_params(0.75, 1.0, 0.1, 0.5, 1.0))?,
        EnumerableInstance::new("three-rows-max", gc, 3, 0.9, 2.0, 1.2, toy_params(0.9, 0.5, 0.2, 0.4, 1.0))?,
        EnumerableInstance::new("four-rows-counted", g, 4, 0.75, 1.0, 1.6, toy_params(0.75, 1.0, 0.2, 0.4, 2.0))?,
    ])
}

/// The first shipped universe with the flattening removed and the slope
/// multiplied by 20. That mechanism is not `eps/2`-private on `H`, so the
/// extension must depart from it there.
pub fn violating_instance() -> Result<EnumerableInstance> {
    let base = shipped_instances()?.swap_remove(0);
    let mp = MechanismParams { slope: 20.0 * base.mechanism.slope, cap: f64::INFINITY, ..base.mechanism };
    Ok(base.with_mechanism(mp))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizer_matches_quadrature() {
        let inst = &shipped_instances().unwrap()[0];
        let mp = &inst.mechanism;
        for c in [0.0, 0.3, -1.0] {
            let q = integrate(&|t: f64| exp(-(mp.slope * fabs(t - c)).min(mp.cap)), -mp.radius, c, 1e-15)
                + integrate(&|t: f64| exp(-(mp.slope * fabs(t - c)).min(mp.cap)), c, mp.radius, 1e-15);
            assert!(fabs(restricted_normalizer(c, mp) / q - 1.0) < 1e-12);
        }
    }

    #[test]
    fn shipped_instances_have_nontrivial_typical_sets() {
        for inst in shipped_instances().unwrap() {
            let total = pow(inst.grid.len() as f64, inst.n as f64) as usize;
            assert!(inst.member_count() > 0 && inst.member_count() < total, "{}: {}", inst.name, inst.member_count());
        }
        assert!(shipped_instances().unwrap()[2].config.kappa_max() >= 1);
    }

    #[test]
    fn probe_off_grid_is_invalid() {
        let inst = &shipped_instances().unwrap()[0];
        let x = Sample::new(1, vec![0.0, 0.1, 0.2, 0.35]).unwrap();
        assert_eq!(extension_density(&x, inst, 0.0), Err(Error::InvalidProbe));
    }

    #[test]
    fn density_vanishes_outside_region() {
        let inst = &shipped_instances().unwrap()[0];
        let x = inst.members().next().unwrap();
        assert_eq!(extension_density(&x, inst, inst.mechanism.radius + 0.1).unwrap(), 0.0);
    }

    #[test]
    fn member_density_equals_restricted_density() {
        let inst = &shipped_instances().unwrap()[0];
        let x = inst.members().nth(3).unwrap();
        let c = quantile_along(&x, &[1.0], inst.q).unwrap();
        for t in [-1.0, 0.0, 0.15, 0.3, 2.0] {
            let a = extension_density(&x, inst, t).unwrap();
            let b = inst.restricted_density(c, t);
            assert!(fabs(a - b) < 1e-10 * b, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn violating_instance_departs_on_h() {
        let inst = violating_instance().unwrap();
        assert!(inst.member_count() > 1);
        let members: Vec<Sample> = inst.members().collect();
        let audit = extension_audit(&inst, &members).unwrap();
        assert!(audit.max_tv > 1e-4, "{audit:?}");
        assert!(audit.max_ratio_slack <= RATIO_SLACK_TOL);
    }
}
