//! Exact quadratic Wasserstein distance between equal-size point clouds.

use std::fmt;

pub const MAX_POINTS: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub enum WassersteinError {
    SizeMismatch { left: usize, right: usize },
    DimensionMismatch,
    TooLarge { m: usize },
    Empty,
}

impl fmt::Display for WassersteinError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WassersteinError::SizeMismatch { left, right } => write!(f, "point sets differ in size: {left} vs {right}"),
            WassersteinError::DimensionMismatch => f.write_str("points differ in dimension"),
            WassersteinError::TooLarge { m } => write!(f, "{m} points exceed the limit of {MAX_POINTS}"),
            WassersteinError::Empty => f.write_str("point sets are empty"),
        }
    }
}

impl std::error::Error for WassersteinError {}

fn check(p: &[Vec<f64>], q: &[Vec<f64>]) -> Result<usize, WassersteinError> {
    if p.len() != q.len() {
        return Err(WassersteinError::SizeMismatch { left: p.len(), right: q.len() });
    }
    if p.is_empty() {
        return Err(WassersteinError::Empty);
    }
    if p.len() > MAX_POINTS {
        return Err(WassersteinError::TooLarge { m: p.len() });
    }
    let d = p[0].len();
    if p.iter().chain(q).any(|x| x.len() != d) {
        return Err(WassersteinError::DimensionMismatch);
    }
    Ok(d)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `W_2` between the uniform measures on `p` and `q`.
pub fn wasserstein2_empirical(p: &[Vec<f64>], q: &[Vec<f64>]) -> Result<f64, WassersteinError> {
    wasserstein_p(p, q, 2.0)
}

/// `W_p` for `p >= 1`, by optimal assignment; one-dimensional inputs are matched in sorted order.
pub fn wasserstein_p(p: &[Vec<f64>], q: &[Vec<f64>], power: f64) -> Result<f64, WassersteinError> {
    let d = check(p, q)?;
    let m = p.len();
    let total = if d == 1 {
        let mut a: Vec<f64> = p.iter().map(|x| x[0]).collect();
        let mut b: Vec<f64> = q.iter().map(|x| x[0]).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        a.iter().zip(&b).map(|(x, y)| (x - y).abs().powf(power)).sum::<f64>()
    } else {
        let cost: Vec<f64> = p.iter().flat_map(|a| q.iter().map(move |b| euclid(a, b).powf(power))).collect();
        let assignment = min_cost_assignment(&cost, m);
        assignment.iter().enumerate().map(|(i, &j)| cost[i * m + j]).sum::<f64>()
    };
    Ok((total / m as f64).powf(1.0 / power))
}

/// Shortest augmenting path Hungarian method on a dense `m x m` cost
/// matrix; returns the column assigned to each row.
pub fn min_cost_assignment(cost: &[f64], m: usize) -> Vec<usize> {
    assert_eq!(cost.len(), m * m);
    // 1-based arrays with a virtual column 0
    let mut u = vec![0.0; m + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=m {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; m];
    for j in 1..=m {
        out[row_of[j] - 1] = j - 1;
    }
    out
}
