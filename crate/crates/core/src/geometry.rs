//! Halfspace polytopes, direction nets and the convex-geometry operations
//! the estimators rely on: support functions, Hausdorff distance over a net,
//! Steiner points, Chebyshev balls and Euclidean projection.

use crate::lp::maximize;
use crate::num::{dist2, dot, gaussian_direction, norm2};
use crate::{Error, Point, Result};
use alloc::vec;
use alloc::vec::Vec;
use libm::{cos, sin, sqrt};
use rand::{RngCore, SeedableRng};

/// Intersection of halfspaces `<theta_i, x> <= b_i` with unit normals.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Polytope {
    dim: usize,
    normals: Vec<f64>,
    offsets: Vec<f64>,
    witness: Option<Point>,
}

impl Polytope {
    /// Builds the polytope, rescaling each normal to unit length.
    pub fn new<I>(dim: usize, halfspaces: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<f64>, f64)>,
    {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be positive"));
        }
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        for (normal, offset) in halfspaces {
            if normal.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: normal.len() });
            }
            if !offset.is_finite() || normal.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            let n = norm2(&normal);
            if n < 1e-300 {
                return Err(Error::ZeroDirection);
            }
            normals.extend(normal.iter().map(|v| v / n));
            offsets.push(offset / n);
        }
        Ok(Polytope { dim, normals, offsets, witness: None })
    }

    /// Axis-aligned cube `[-half, half]^dim`.
    pub fn cube(dim: usize, half: f64) -> Self {
        let mut hs = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut v = vec![0.0; dim];
                v[i] = s;
                hs.push((v, half));
            }
        }
        let mut k = Polytope::new(dim, hs).expect("cube halfspaces are valid");
        k.witness = Some(vec![0.0; dim]);
        k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn normal(&self, i: usize) -> &[f64] {
        &self.normals[i * self.dim..(i + 1) * self.dim]
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.offsets[i]
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn witness(&self) -> Option<&[f64]> {
        self.witness.as_deref()
    }

    /// Attaches a known feasible point; rejected if it violates a halfspace by more than `1e-9`.
    pub fn with_witness(mut self, w: Point) -> Result<Self> {
        if w.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: w.len() });
        }
        let v = self.max_violation(&w);
        if v > 1e-9 {
            return Err(Error::Infeasible { violation: v });
        }
        self.witness = Some(w);
        Ok(self)
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        (0..self.len()).fold(f64::NEG_INFINITY, |m, i| m.max(dot(self.normal(i), x) - self.offsets[i]))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    /// Some point of the body: the Chebyshev center when the body is bounded,
    /// otherwise the center of a radius-capped inscribed ball.
    pub fn interior_point(&self) -> Result<Point> {
        if let Some(w) = &self.witness {
            return Ok(w.clone());
        }
        match chebyshev_lp(self, None) {
            Ok((c, r)) if r >= 0.0 => Ok(c),
            Ok((_, r)) => Err(Error::Infeasible { violation: -r }),
            Err(Error::Unbounded) => {
                let (c, r) = chebyshev_lp(self, Some(1.0))?;
                if r >= 0.0 {
                    Ok(c)
                } else {
                    Err(Error::Infeasible { violation: -r })
                }
            }
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SupportValue {
    pub value: f64,
    pub maximizer: Point,
}

/// `h_K(theta) = max_{x in K} <theta, x>` together with a maximizing vertex.
pub fn support_function(k: &Polytope, theta: &[f64]) -> Result<SupportValue> {
    let d = k.dim;
    if theta.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: theta.len() });
    }
    let w = k.interior_point()?;
    let m = k.len();
    // x = w + u - v with u, v >= 0
    let mut a = vec![0.0; m * 2 * d];
    let mut b = vec![0.0; m];
    for i in 0..m {
        let row = k.normal(i);
        for j in 0..d {
            a[i * 2 * d + j] = row[j];
            a[i * 2 * d + d + j] = -row[j];
        }
        b[i] = (k.offsets[i] - dot(row, &w)).max(0.0);
    }
    let mut c = vec![0.0; 2 * d];
    for j in 0..d {
        c[j] = theta[j];
        c[d + j] = -theta[j];
    }
    let sol = maximize(&c, &a, &b)?;
    let x: Point = (0..d).map(|j| w[j] + sol.x[j] - sol.x[d + j]).collect();
    Ok(SupportValue { value: dot(theta, &x), maximizer: x })
}

/// Largest Euclidean ball inside the body.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InscribedBall {
    pub center: Point,
    pub radius: f64,
}

/// Chebyshev ball. An empty body yields `Infeasible` carrying the smallest
/// achievable worst-case violation.
pub fn chebyshev_ball(k: &Polytope) -> Result<InscribedBall> {
    let (center, r) = chebyshev_lp(k, None)?;
    if r < -1e-12 {
        return Err(Error::Infeasible { violation: -r });
    }
    Ok(InscribedBall { center, radius: r.max(0.0) })
}

/// Maximises the signed depth `rho` with `<theta_i, c> + rho <= b_i`; a
/// negative optimum certifies an empty body.
fn chebyshev_lp(k: &Polytope, cap: Option<f64>) -> Result<(Point, f64)> {
    let d = k.dim;
    let m = k.len();
    if m == 0 {
        return Err(Error::Unbounded);
    }
    let rho0 = k.offsets.iter().copied().fold(f64::INFINITY, f64::min);
    if let Some(cap) = cap {
        if rho0 >= cap {
            return Ok((vec![0.0; d], cap));
        }
    }
    let cols = 2 * d + 2;
    let rows = m + cap.is_some() as usize;
    let mut a = vec![0.0; rows * cols];
    let mut b = vec![0.0; rows];
    for i in 0..m {
        let row = k.normal(i);
        for j in 0..d {
            a[i * cols + j] = row[j];
            a[i * cols + d + j] = -row[j];
        }
        a[i * cols + 2 * d] = 1.0;
        a[i * cols + 2 * d + 1] = -1.0;
        b[i] = k.offsets[i] - rho0;
    }
    if let Some(cap) = cap {
        a[m * cols + 2 * d] = 1.0;
        a[m * cols + 2 * d + 1] = -1.0;
        b[m] = cap - rho0;
    }
    let mut c = vec![0.0; cols];
    c[2 * d] = 1.0;
    c[2 * d + 1] = -1.0;
    let sol = maximize(&c, &a, &b)?;
    let center = (0..d).map(|j| sol.x[j] - sol.x[d + j]).collect();
    Ok((center, rho0 + sol.x[2 * d] - sol.x[2 * d + 1]))
}

/// Finite set of unit directions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DirectionNet {
    dim: usize,
    dirs: Vec<f64>,
    pub provenance: NetMode,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "kebab-case"))]
pub enum NetMode {
    /// `size` i.i.d. uniform directions from a ChaCha stream seeded with `seed`.
    Random { size: usize, seed: u64 },
    /// Greedy farthest-point packing with pairwise gap at least `gamma`; `d <= 3`.
    Deterministic { gamma: f64 },
    /// The `2d` signed coordinate axes.
    Axis,
    /// Directions supplied by the caller.
    Explicit,
}

impl DirectionNet {
    /// Wraps caller-supplied directions, normalising each one.
    pub fn from_directions(dim: usize, dirs: &[Vec<f64>]) -> Result<Self> {
        let mut flat = Vec::with_capacity(dim * dirs.len());
        for v in dirs {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            let n = norm2(v);
            if !(n > 1e-300) || !n.is_finite() {
                return Err(Error::ZeroDirection);
            }
            flat.extend(v.iter().map(|x| x / n));
        }
        if flat.is_empty() {
            return Err(Error::InvalidConfig("direction net must be nonempty"));
        }
        Ok(DirectionNet { dim, dirs: flat, provenance: NetMode::Explicit })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.dirs.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.dirs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.dirs.chunks_exact(self.dim)
    }
}

/// Builds a direction net. In one dimension every mode gives `{+1, -1}`.
pub fn sphere_net(dim: usize, mode: NetMode) -> Result<DirectionNet> {
    if dim == 0 {
        return Err(Error::InvalidConfig("dimension must be positive"));
    }
    if dim == 1 {
        return Ok(DirectionNet { dim, dirs: vec![1.0, -1.0], provenance: mode });
    }
    let dirs = match &mode {
        NetMode::Random { size, seed } => {
            if *size == 0 {
                return Err(Error::InvalidConfig("direction net must be nonempty"));
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            let mut v = Vec::with_capacity(size * dim);
            for _ in 0..*size {
                v.extend(gaussian_direction(dim, &mut rng));
            }
            v
        }
        NetMode::Axis => {
            let mut v = vec![0.0; 2 * dim * dim];
            for i in 0..dim {
                v[(2 * i) * dim + i] = 1.0;
                v[(2 * i + 1) * dim + i] = -1.0;
            }
            v
        }
        NetMode::Deterministic { gamma } => greedy_net(dim, *gamma)?,
        NetMode::Explicit => return Err(Error::InvalidConfig("explicit nets come from from_directions")),
    };
    Ok(DirectionNet { dim, dirs, provenance: mode })
}

fn greedy_net(dim: usize, gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma <= 2.0) {
        return Err(Error::InvalidDomain("net gap must lie in (0, 2]"));
    }
    let candidates: Vec<[f64; 3]> = match dim {
        2 => {
            let c = 8192;
            (0..c)
                .map(|i| {
                    let a = 2.0 * core::f64::consts::PI * i as f64 / c as f64;
                    [cos(a), sin(a), 0.0]
                })
                .collect()
        }
        3 => {
            let c = 20000;
            let golden = core::f64::consts::PI * (3.0 - sqrt(5.0));
            let mut v: Vec<[f64; 3]> = vec![[1.0, 0.0, 0.0]];
            v.extend((0..c).map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / c as f64;
                let r = sqrt(1.0 - z * z);
                let a = golden * i as f64;
                [r * cos(a), r * sin(a), z]
            }));
            v
        }
        _ => return Err(Error::NetTooCoarse { gamma, dim }),
    };
    let dist = |a: &[f64; 3], b: &[f64; 3]| sqrt((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2));
    let mut chosen = vec![0usize];
    let mut gap: Vec<f64> = candidates.iter().map(|c| dist(c, &candidates[0])).collect();
    loop {
        let (best, far) = gap
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, g)| if *g > acc.1 { (i, *g) } else { acc });
        if far < gamma {
            break;
        }
        chosen.push(best);
        for (g, c) in gap.iter_mut().zip(&candidates) {
            *g = g.min(dist(c, &candidates[best]));
        }
    }
    Ok(chosen.iter().flat_map(|&i| candidates[i][..dim].to_vec()).collect())
}

/// `max_{theta in net} |h_K1(theta) - h_K2(theta)|`.
pub fn hausdorff_net(k1: &Polytope, k2: &Polytope, net: &DirectionNet) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for theta in net.iter() {
        let a = support_function(k1, theta)?.value;
        let b = support_function(k2, theta)?.value;
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

/// Monte Carlo Steiner point with its standard error.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SteinerEstimate {
    pub point: Point,
    /// Euclidean norm of the per-coordinate standard errors.
    pub std_error: f64,
}

/// Average of the support maximizers over `m` uniform directions.
pub fn steiner_point<R: RngCore + ?Sized>(k: &Polytope, m: usize, rng: &mut R) -> Result<SteinerEstimate> {
    if m == 0 {
        return Err(Error::InvalidConfig("Steiner estimate needs at least one direction"));
    }
    let dirs: Vec<Vec<f64>> = (0..m).map(|_| gaussian_direction(k.dim, rng)).collect();
    steiner_from_directions(k, &dirs)
}

/// Steiner estimate from caller-chosen directions, so two bodies can share them.
pub fn steiner_from_directions(k: &Polytope, dirs: &[Vec<f64>]) -> Result<SteinerEstimate> {
    let maximizers = maximizers(k, dirs)?;
    let d = k.dim;
    let m = maximizers.len() as f64;
    let mut mean = vec![0.0; d];
    for x in &maximizers {
        for j in 0..d {
            mean[j] += x[j] / m;
        }
    }
    let mut var = 0.0;
    if maximizers.len() > 1 {
        for x in &maximizers {
            var += x.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        var /= (m - 1.0) * m;
    }
    Ok(SteinerEstimate { point: mean, std_error: sqrt(var) })
}

/// Support maximizers of `k` along each direction.
pub fn maximizers(k: &Polytope, dirs: &[Vec<f64>]) -> Result<Vec<Point>> {
    let w = k.interior_point()?;
    let k = if k.witness.is_none() { k.clone().with_witness(w)? } else { k.clone() };
    dirs.iter().map(|t| support_function(&k, t).map(|s| s.maximizer)).collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProjectionResult {
    pub point: Point,
    pub sweeps: usize,
    /// False when the sweep budget ran out; `point` is then the last iterate.
    pub converged: bool,
}

pub const DYKSTRA_TOL: f64 = 1e-8;
pub const DYKSTRA_MAX_SWEEPS: usize = 100_000;

/// Euclidean projection onto `k` by Dykstra's method with the default tolerance.
pub fn project(k: &Polytope, x: &[f64]) -> Result<ProjectionResult> {
    Projector::new(k).project(x, DYKSTRA_TOL, DYKSTRA_MAX_SWEEPS)
}

/// Dykstra projection with reusable scratch space, for callers that project
/// many points onto the same body.
#[derive(Debug, Clone)]
pub struct Projector<'a> {
    body: &'a Polytope,
    corrections: Vec<f64>,
}

impl<'a> Projector<'a> {
    pub fn new(body: &'a Polytope) -> Self {
        Projector { body, corrections: vec![0.0; body.normals.len()] }
    }

    pub fn body(&self) -> &Polytope {
        self.body
    }

    /// Visits halfspaces in their stored order. Stops once a full sweep moves
    /// the iterate by at most `tol`, no halfspace is violated by more than
    /// `tol` and slack halfspaces hold at most `tol` of correction.
    pub fn project(&mut self, x: &[f64], tol: f64, max_sweeps: usize) -> Result<ProjectionResult> {
        let mut point = x.to_vec();
        let (sweeps, converged) = self.project_in_place(&mut point, tol, max_sweeps)?;
        Ok(ProjectionResult { point, sweeps, converged })
    }

    /// Total multiplier still held by halfspaces that are slack by more than
    /// `tol` at `x`. Dykstra can pause for a sweep while such corrections are
    /// pending, so a small step alone does not mean convergence.
    fn stranded_multipliers(&self, x: &[f64], tol: f64) -> f64 {
        let k = self.body;
        let d = k.dim;
        (0..k.len())
            .filter(|&i| k.offsets[i] - dot(x, k.normal(i)) > tol)
            .map(|i| dot(&self.corrections[i * d..(i + 1) * d], k.normal(i)))
            .sum()
    }

    /// Overwrites `x` with its projection; returns the sweep count and whether it converged.
    pub fn project_in_place(&mut self, x: &mut [f64], tol: f64, max_sweeps: usize) -> Result<(usize, bool)> {
        let k = self.body;
        let d = k.dim;
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if k.max_violation(x) <= 0.0 {
            return Ok((0, true));
        }
        if k.witness.is_none() {
            k.interior_point()?;
        }
        self.corrections.iter_mut().for_each(|v| *v = 0.0);
        let mut prev = vec![0.0; d];
        let mut y = vec![0.0; d];
        for sweep in 1..=max_sweeps {
            prev.copy_from_slice(x);
            for i in 0..k.len() {
                let theta = k.normal(i);
                let p = &mut self.corrections[i * d..(i + 1) * d];
                for j in 0..d {
                    y[j] = x[j] + p[j];
                }
                let step = (dot(&y, theta) - k.offsets[i]).max(0.0);
                for j in 0..d {
                    x[j] = y[j] - step * theta[j];
                    p[j] = y[j] - x[j];
                }
            }
            if dist2(x, &prev) <= tol && k.max_violation(x) <= tol && self.stranded_multipliers(x, tol) <= tol {
                return Ok((sweep, true));
            }
        }
        Ok((max_sweeps, false))
    }
}
