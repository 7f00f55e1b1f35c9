//! Empirical directional quantiles and the floating-body approximation.

use crate::geometry::{chebyshev_ball, DirectionNet, InscribedBall, Polytope};
use crate::num::{dot, fnv1a};
use crate::{Error, Result};
use alloc::vec::Vec;
use libm::ceil;

/// Row-major `n x d` data matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    dim: usize,
    values: Vec<f64>,
}

impl Sample {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be positive"));
        }
        if values.len() % dim != 0 {
            return Err(Error::DimensionMismatch { expected: dim, found: values.len() % dim });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Sample { dim, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().ok_or(Error::EmptySample)?.len();
        let mut values = Vec::with_capacity(dim * rows.len());
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.len() });
            }
            values.extend_from_slice(r);
        }
        Sample::new(dim, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Contiguous rows `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Sample {
        Sample { dim: self.dim, values: self.values[start * self.dim..end * self.dim].to_vec() }
    }

    pub fn replace_row(&mut self, i: usize, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        self.values[i * self.dim..(i + 1) * self.dim].copy_from_slice(row);
        Ok(())
    }

    /// `<X_i, theta>` for every row.
    pub fn project(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: theta.len() });
        }
        Ok(self.rows().map(|r| dot(r, theta)).collect())
    }

    /// Order-sensitive hash of the raw values.
    pub fn fingerprint(&self) -> u64 {
        fnv1a(&self.values)
    }
}

/// Number of rows at which two equally sized samples differ.
pub fn hamming_distance(a: &Sample, b: &Sample) -> Result<usize> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { expected: a.dim, found: b.dim });
    }
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    Ok(a.rows().zip(b.rows()).filter(|(x, y)| x != y).count())
}

/// Smallest `k` with `k / n >= q`, evaluated in floating point so that it
/// agrees with a direct scan of the empirical cdf.
pub fn quantile_rank(n: usize, q: f64) -> usize {
    let nf = n as f64;
    let mut k = (ceil(q * nf) as usize).clamp(1, n);
    while k > 1 && (k - 1) as f64 / nf >= q {
        k -= 1;
    }
    while k < n && (k as f64) / nf < q {
        k += 1;
    }
    k
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.5 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::QOutOfRange(q))
    }
}

/// Left-continuous `q`-quantile: the `ceil(q n)`-th order statistic. Sorts
/// nothing; a selection pass reorders `values` in place.
pub fn empirical_quantile_in_place(values: &mut [f64], q: f64) -> Result<f64> {
    check_q(q)?;
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let k = quantile_rank(values.len(), q);
    let (_, v, _) = values.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*v)
}

pub fn empirical_quantile(values: &[f64], q: f64) -> Result<f64> {
    empirical_quantile_in_place(&mut values.to_vec(), q)
}

/// `Q_q(X, theta)`.
pub fn quantile_along(x: &Sample, theta: &[f64], q: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptySample);
    }
    empirical_quantile_in_place(&mut x.project(theta)?, q)
}

/// Quantiles along every direction of the net: the query vector `f(X)`.
pub fn query_quantiles(x: &Sample, net: &DirectionNet, q: f64) -> Result<Vec<f64>> {
    check_q(q)?;
    if net.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: net.dim() });
    }
    net.iter().map(|t| quantile_along(x, t, q)).collect()
}

/// `max_theta |Q_q(X, theta) - Q_q(Y, theta)|` over the net.
pub fn delta_q(x: &Sample, y: &Sample, net: &DirectionNet, q: f64) -> Result<f64> {
    let a = query_quantiles(x, net, q)?;
    let b = query_quantiles(y, net, q)?;
    Ok(a.iter().zip(&b).fold(0.0, |m, (u, v)| f64::max(m, (u - v).abs())))
}

/// Halfspace approximation `{x : <x, theta> <= Q_q(X, theta), theta in A}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FloatingBodyApprox {
    pub body: Polytope,
    pub q: f64,
    pub quantiles: Vec<f64>,
    pub net: DirectionNet,
    pub source_hash: u64,
    /// Chebyshev ball, absent when the body is unbounded or empty.
    pub ball: Option<InscribedBall>,
    /// Set when the inscribed radius is not positive.
    pub empty: bool,
}

pub fn floating_body(x: &Sample, q: f64, net: &DirectionNet) -> Result<FloatingBodyApprox> {
    let quantiles = query_quantiles(x, net, q)?;
    floating_body_from_quantiles(quantiles, q, net, x.fingerprint())
}

/// Assembles the body from already computed quantiles.
pub fn floating_body_from_quantiles(
    quantiles: Vec<f64>,
    q: f64,
    net: &DirectionNet,
    source_hash: u64,
) -> Result<FloatingBodyApprox> {
    if quantiles.len() != net.len() {
        return Err(Error::DimensionMismatch { expected: net.len(), found: quantiles.len() });
    }
    let body = Polytope::new(net.dim(), net.iter().zip(&quantiles).map(|(t, b)| (t.to_vec(), *b)))?;
    let (body, ball, empty) = match chebyshev_ball(&body) {
        Ok(ball) if ball.radius > 0.0 => (body.with_witness(ball.center.clone())?, Some(ball), false),
        Ok(ball) => (body, Some(ball), true),
        Err(Error::Infeasible { .. }) => (body, None, true),
        Err(Error::Unbounded) => {
            let w = body.interior_point()?;
            (body.with_witness(w)?, None, false)
        }
        Err(e) => return Err(e),
    };
    Ok(FloatingBodyApprox { body, q, quantiles, net: net.clone(), source_hash, ball, empty })
}
