//! Population-level reference objects for the analytic distributions.

use floatbody::geometry::{support_function, DirectionNet, Polytope};
use floatbody::marginal::SampleDistributionSpec;
use floatbody::quantile::{floating_body_from_quantiles, FloatingBodyApprox};
use floatbody::Result;
use rand::{Rng, RngCore};

/// `q`-quantile of every marginal along the net.
pub fn population_quantiles(spec: &SampleDistributionSpec, net: &DirectionNet, q: f64) -> Result<Vec<f64>> {
    net.iter().map(|t| Ok(spec.marginal(t)?.quantile(q))).collect()
}

/// Net approximation of the population floating body.
pub fn population_body(spec: &SampleDistributionSpec, net: &DirectionNet, q: f64) -> Result<FloatingBodyApprox> {
    floating_body_from_quantiles(population_quantiles(spec, net, q)?, q, net, 0)
}

/// Uniform draws from a bounded polytope by rejection from its bounding box.
pub fn uniform_in_polytope<R: RngCore + ?Sized>(k: &Polytope, m: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let d = k.dim();
    let k = match k.witness() {
        Some(_) => k.clone(),
        None => k.clone().with_witness(k.interior_point()?)?,
    };
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        hi[j] = support_function(&k, &e)?.value;
        e[j] = -1.0;
        lo[j] = -support_function(&k, &e)?.value;
    }
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let x: Vec<f64> = (0..d).map(|j| lo[j] + (hi[j] - lo[j]) * rng.random::<f64>()).collect();
        if k.contains(&x, 0.0) {
            out.push(x);
        }
    }
    Ok(out)
}

/// Uniform draws from the centered ball of radius `r`, by rejection from the cube.
pub fn uniform_in_ball<R: RngCore + ?Sized>(dim: usize, r: f64, m: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let x: Vec<f64> = (0..dim).map(|_| r * (2.0 * rng.random::<f64>() - 1.0)).collect();
        if x.iter().map(|v| v * v).sum::<f64>() <= r * r {
            out.push(x);
        }
    }
    out
}
