//! End-to-end private estimators built on the typicality gate and the
//! flattened Laplace mechanism, plus the batched private Langevin sampler.
//!
//! Every release is ε-DP on all inputs: the mechanism run on the typical set
//! is ε/2-DP there and the extension doubles that. Rows that fail the gate
//! abort the release instead of falling back to an extension.

use crate::admissible::AdmissibleParams;
use crate::geometry::{project, steiner_point, DirectionNet};
use crate::langevin::{truncated_gaussian, LangevinConfig};
use crate::mechanism::{flat_laplace_sample, sample_size, HolderQuerySpec, MechanismParams, SampleSizeConstants};
use crate::num::norm2;
use crate::quantile::{FloatingBodyApprox, Sample};
use crate::typical::{check_typical_with_body, recommend_w, TypicalSetConfig, TypicalSetReport};
use crate::{Error, Point, Result};
use alloc::string::String;
use alloc::vec::Vec;
use rand::RngCore;

/// Shared inputs of every private release.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrivateSetup {
    pub q: f64,
    pub epsilon: f64,
    pub params: AdmissibleParams,
    pub net: DirectionNet,
    /// Window multiplier of the typical set.
    pub w: f64,
}

impl PrivateSetup {
    /// Picks `W` from the net size, dimension and failure probability.
    pub fn new(q: f64, epsilon: f64, params: AdmissibleParams, net: DirectionNet, beta: f64, c_w: f64) -> Result<Self> {
        let w = recommend_w(net.len(), params.dim(), beta, c_w)?;
        Self::with_w(q, epsilon, params, net, w)
    }

    pub fn with_w(q: f64, epsilon: f64, params: AdmissibleParams, net: DirectionNet, w: f64) -> Result<Self> {
        if !(q > 0.5 && q < 1.0) {
            return Err(Error::QOutOfRange(q));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidDomain("epsilon must be positive and finite"));
        }
        if net.dim() != params.dim() {
            return Err(Error::DimensionMismatch { expected: params.dim(), found: net.dim() });
        }
        params.validate()?;
        Ok(PrivateSetup { q, epsilon, params, net, w })
    }

    fn config(&self, n: usize) -> Result<TypicalSetConfig> {
        TypicalSetConfig::new(self.w, self.params.clone(), n)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Charge {
    pub op: String,
    /// Budget of the extended mechanism on all inputs.
    pub epsilon: f64,
    /// Budget of the restricted mechanism on the typical set.
    pub restricted_epsilon: f64,
    pub rows: usize,
    pub batch: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrivateRelease<T> {
    pub value: T,
    pub charge: Charge,
    /// The non-private center the noise was added to.
    pub center: T,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrivacyLedger {
    pub calls: Vec<Charge>,
    /// Half-open row ranges, one per batch id.
    pub batches: Vec<(usize, usize)>,
}

impl PrivacyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a row range and returns its batch id. Overlapping ranges are rejected.
    pub fn open_batch(&mut self, start: usize, end: usize) -> Result<usize> {
        if start >= end {
            return Err(Error::InvalidConfig("batch must contain at least one row"));
        }
        if self.batches.iter().any(|&(s, e)| start < e && s < end) {
            return Err(Error::InvalidConfig("batches must be disjoint"));
        }
        self.batches.push((start, end));
        Ok(self.batches.len() - 1)
    }

    pub fn record(&mut self, charge: Charge) {
        self.calls.push(charge);
    }

    /// Parallel composition: the largest per-batch total.
    pub fn total_epsilon(&self) -> f64 {
        (0..self.batches.len())
            .map(|b| self.calls.iter().filter(|c| c.batch == b).map(|c| c.epsilon).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn naive_sum(&self) -> f64 {
        self.calls.iter().map(|c| c.epsilon).sum()
    }

    pub fn is_disjoint(&self) -> bool {
        self.batches.iter().enumerate().all(|(i, &(s, e))| {
            self.batches[i + 1..].iter().all(|&(s2, e2)| e <= s2 || e2 <= s)
        })
    }
}

/// Gate result for a batch, kept for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct GatedBody {
    pub report: TypicalSetReport,
    pub body: FloatingBodyApprox,
    pub config: TypicalSetConfig,
}

/// Runs the typicality check and fails with the batch id if `x` is atypical.
pub fn typicality_gate(x: &Sample, setup: &PrivateSetup, batch: usize) -> Result<GatedBody> {
    let config = setup.config(x.len())?;
    let (report, body) = check_typical_with_body(x, setup.q, &setup.net, &config)?;
    if !report.in_set {
        return Err(Error::TypicalityGateFailed { batch });
    }
    Ok(GatedBody { report, body, config })
}

fn charge(op: &str, setup: &PrivateSetup, rows: usize, batch: usize) -> Charge {
    Charge { op: op.into(), epsilon: setup.epsilon, restricted_epsilon: setup.epsilon / 2.0, rows, batch }
}

fn release<R: RngCore + ?Sized>(
    op: &str,
    center: Point,
    spec: &HolderQuerySpec,
    gated: &GatedBody,
    setup: &PrivateSetup,
    batch: usize,
    rng: &mut R,
) -> Result<PrivateRelease<Point>> {
    let mp = MechanismParams::new(setup.epsilon, &gated.config, spec)?;
    let value = flat_laplace_sample(&center, &mp, rng)?;
    Ok(PrivateRelease { value, charge: charge(op, setup, gated.config.n, batch), center })
}

/// Noisy vector of directional quantiles over `setup.net`.
pub fn private_quantiles<R: RngCore + ?Sized>(x: &Sample, setup: &PrivateSetup, rng: &mut R) -> Result<PrivateRelease<Point>> {
    let gated = typicality_gate(x, setup, 0)?;
    let spec = HolderQuerySpec::quantiles(setup.net.len());
    release("quantiles", gated.body.quantiles.clone(), &spec, &gated, setup, 0, rng)
}

/// Noisy Steiner point of the empirical floating body, estimated with `m` directions.
pub fn private_steiner<R: RngCore + ?Sized>(x: &Sample, setup: &PrivateSetup, m: usize, rng: &mut R) -> Result<PrivateRelease<Point>> {
    steiner_batch(x, setup, m, 0, rng)
}

fn steiner_batch<R: RngCore + ?Sized>(
    x: &Sample,
    setup: &PrivateSetup,
    m: usize,
    batch: usize,
    rng: &mut R,
) -> Result<PrivateRelease<Point>> {
    let gated = typicality_gate(x, setup, batch)?;
    if gated.body.empty {
        return Err(Error::EmptyBody);
    }
    let center = steiner_point(&gated.body.body, m, rng)?.point;
    let spec = HolderQuerySpec::steiner(&setup.params);
    release("steiner", center, &spec, &gated, setup, batch, rng)
}

/// Noisy projection of `point` onto the empirical floating body.
pub fn private_project<R: RngCore + ?Sized>(
    x: &Sample,
    setup: &PrivateSetup,
    point: &[f64],
    rng: &mut R,
) -> Result<PrivateRelease<Point>> {
    project_batch(x, setup, point, 0, rng)
}

fn project_batch<R: RngCore + ?Sized>(
    x: &Sample,
    setup: &PrivateSetup,
    point: &[f64],
    batch: usize,
    rng: &mut R,
) -> Result<PrivateRelease<Point>> {
    if point.len() != setup.params.dim() {
        return Err(Error::DimensionMismatch { expected: setup.params.dim(), found: point.len() });
    }
    let gated = typicality_gate(x, setup, batch)?;
    if gated.body.empty {
        return Err(Error::EmptyBody);
    }
    let center = project(&gated.body.body, point)?.point;
    let spec = HolderQuerySpec::projection(point, &setup.params);
    release("project", center, &spec, &gated, setup, batch, rng)
}

/// How the sampler splits rows among its `k + 1` oracle calls.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "plan", rename_all = "kebab-case"))]
pub enum BatchPlan {
    /// Each batch gets the rows the sample-size bound asks for at the
    /// oracle accuracy `alpha_tilde` and failure probability `beta`.
    Strict { alpha_tilde: f64, beta: f64, constants: SampleSizeConstants },
    /// Fixed batch size chosen by the caller.
    Explicit { rows_per_batch: usize },
}

/// Rows per batch required by a strict plan. The projection constant is
/// evaluated at the largest point norm the chain can reach,
/// `||c|| + R_max + r + trunc sqrt(2 eta)` plus the oracle slack.
pub fn strict_batch_rows(setup: &PrivateSetup, cfg: &LangevinConfig, alpha_tilde: f64, beta: f64, c: &SampleSizeConstants) -> Result<usize> {
    let p = &setup.params;
    let reach = norm2(&p.center) + p.r_max + p.r + cfg.trunc * cfg.step_scale() + 4.0 * (p.r_max + p.r);
    let mut probe = alloc::vec![0.0; p.dim()];
    probe[0] = reach;
    let m = setup.net.len();
    let steiner = sample_size(alpha_tilde, beta, setup.epsilon, &HolderQuerySpec::steiner(p), p, m, c)?;
    let proj = sample_size(alpha_tilde, beta, setup.epsilon, &HolderQuerySpec::projection(&probe, p), p, m, c)?;
    Ok(steiner.n.max(proj.n))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleOutcome {
    pub point: Point,
    pub ledger: PrivacyLedger,
    /// True when `k = 0` and the output is the private Steiner point alone.
    pub steiner_only: bool,
    pub rows_per_batch: usize,
}

/// Private Steiner start on batch 0, then one private projection per
/// Langevin step, each on its own batch of rows.
pub fn private_sample_floating_body<R: RngCore + ?Sized>(
    x: &Sample,
    setup: &PrivateSetup,
    cfg: &LangevinConfig,
    plan: &BatchPlan,
    rng: &mut R,
) -> Result<SampleOutcome> {
    let calls = cfg.k + 1;
    let rows = match *plan {
        BatchPlan::Strict { alpha_tilde, beta, constants } => strict_batch_rows(setup, cfg, alpha_tilde, beta, &constants)?,
        BatchPlan::Explicit { rows_per_batch } => rows_per_batch,
    };
    if rows == 0 {
        return Err(Error::InvalidConfig("batches need at least one row"));
    }
    let needed = rows.checked_mul(calls).ok_or(Error::InsufficientRows { needed: usize::MAX, available: x.len() })?;
    if needed > x.len() {
        return Err(Error::InsufficientRows { needed, available: x.len() });
    }
    let mut ledger = PrivacyLedger::new();
    let b0 = ledger.open_batch(0, rows)?;
    let start = steiner_batch(&x.slice(0, rows), setup, cfg.steiner_directions, b0, rng)?;
    ledger.record(start.charge);
    let mut point = start.value;
    let scale = cfg.step_scale();
    let d = setup.params.dim();
    for step in 1..=cfg.k {
        let (s, e) = (step * rows, (step + 1) * rows);
        let b = ledger.open_batch(s, e)?;
        let g = truncated_gaussian(d, cfg.trunc, rng);
        let y: Point = point.iter().zip(&g).map(|(a, gi)| a + scale * gi).collect();
        let r = project_batch(&x.slice(s, e), setup, &y, b, rng)?;
        ledger.record(r.charge);
        point = r.value;
    }
    Ok(SampleOutcome { point, ledger, steiner_only: cfg.k == 0, rows_per_batch: rows })
}
