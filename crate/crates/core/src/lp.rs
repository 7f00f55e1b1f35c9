//! Dense dictionary simplex for small linear programs.
//!
//! Solves `max c.x` subject to `A x <= b`, `x >= 0` with `b >= 0`, so the
//! slack basis is feasible from the start. Every caller in this crate shifts
//! its problem to a known feasible point first, which removes the need for a
//! phase one. Bland's rule picks both the entering and leaving variables, so
//! degenerate vertices cannot cycle.

use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;

const EPS: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

/// `a` is row-major with `b.len()` rows and `c.len()` columns.
pub fn maximize(c: &[f64], a: &[f64], b: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = b.len();
    if a.len() != n * m {
        return Err(Error::DimensionMismatch { expected: n * m, found: a.len() });
    }
    if let Some(v) = b.iter().copied().find(|v| *v < -1e-9) {
        return Err(Error::Infeasible { violation: -v });
    }
    // x_basis[i] = rhs[i] + sum_j coef[i*n + j] * x_nonbasis[j]
    let mut rhs: Vec<f64> = b.iter().map(|v| v.max(0.0)).collect();
    let mut coef: Vec<f64> = a.iter().map(|v| -v).collect();
    let mut obj: Vec<f64> = c.to_vec();
    let mut obj0 = 0.0;
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut nonbasis: Vec<usize> = (0..n).collect();
    let limit = 100 * (n + m) + 1000;
    let mut pivots = 0;
    loop {
        let mut enter = None;
        for j in 0..n {
            if obj[j] > EPS && enter.map_or(true, |e: usize| nonbasis[j] < nonbasis[e]) {
                enter = Some(j);
            }
        }
        let Some(e) = enter else { break };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let ce = coef[i * n + e];
            if ce < -EPS {
                let ratio = rhs[i] / -ce;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((l, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                        if (!tie && ratio < best) || (tie && basis[i] < basis[l]) {
                            Some((i, ratio))
                        } else {
                            Some((l, best))
                        }
                    }
                };
            }
        }
        let Some((l, _)) = leave else { return Err(Error::Unbounded) };
        pivot(&mut rhs, &mut coef, &mut obj, &mut obj0, n, l, e);
        core::mem::swap(&mut basis[l], &mut nonbasis[e]);
        pivots += 1;
        if pivots > limit {
            return Err(Error::InvalidDomain("simplex exceeded its pivot limit"));
        }
    }
    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = rhs[i];
        }
    }
    Ok(LpSolution { x, objective: obj0, pivots })
}

fn pivot(rhs: &mut [f64], coef: &mut [f64], obj: &mut [f64], obj0: &mut f64, n: usize, l: usize, e: usize) {
    let m = rhs.len();
    let p = coef[l * n + e];
    // solve row l for the entering variable
    rhs[l] = -rhs[l] / p;
    for j in 0..n {
        coef[l * n + j] = if j == e { 1.0 / p } else { -coef[l * n + j] / p };
    }
    let row_l: Vec<f64> = coef[l * n..(l + 1) * n].to_vec();
    let r_l = rhs[l];
    for i in 0..m {
        if i == l {
            continue;
        }
        let f = coef[i * n + e];
        if f == 0.0 {
            continue;
        }
        rhs[i] += f * r_l;
        if rhs[i] < 0.0 && rhs[i] > -1e-12 {
            rhs[i] = 0.0;
        }
        for j in 0..n {
            coef[i * n + j] = if j == e { f * row_l[j] } else { coef[i * n + j] + f * row_l[j] };
        }
    }
    let f = obj[e];
    *obj0 += f * r_l;
    for j in 0..n {
        obj[j] = if j == e { f * row_l[j] } else { obj[j] + f * row_l[j] };
    }
}
