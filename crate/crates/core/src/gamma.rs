//! Segment integrals of `t^k e^{-t}` for the radial inverse-CDF sampler.
//!
//! With `g_k(x) = x^k + k g_{k-1}(x)`, `g_0 = 1`, the antiderivative of
//! `t^k e^{-t}` is `-g_k(t) e^{-t}`. Evaluating `g_k(a)e^{-a} - g_k(b)e^{-b}`
//! directly loses every digit when the two terms are close, so the value is
//! computed as `k! P(N_a <= k, N_a + N_{b-a} > k)` for independent Poisson
//! variables, which is a sum of nonnegative terms.

use crate::num::{ln_factorial, poisson_pmf, poisson_upper_tail};
use crate::{Error, Result};
use alloc::vec::Vec;
use libm::{exp, log};

/// `g_k(x)` by the defining recurrence.
pub fn g_poly(k: u32, x: f64) -> f64 {
    let mut g = 1.0;
    let mut xp = 1.0;
    for j in 1..=k {
        xp *= x;
        g = xp + j as f64 * g;
    }
    g
}

/// Coefficients `c_j` of `g_k(x) = sum_j c_j x^j`, that is `k!/j!`.
pub fn g_poly_coefficients(k: u32) -> Vec<f64> {
    let mut c = alloc::vec![1.0];
    for j in 1..=k {
        for v in c.iter_mut() {
            *v *= j as f64;
        }
        c.push(1.0);
    }
    c
}

/// `int_a^b t^k e^{-t} dt` for `0 <= a < b`, `b` possibly infinite.
pub fn segment_gamma_integral(a: f64, b: f64, k: u32) -> Result<f64> {
    Ok(exp(ln_segment_gamma_integral(a, b, k)?))
}

/// Natural log of [`segment_gamma_integral`], usable where the value overflows.
pub fn ln_segment_gamma_integral(a: f64, b: f64, k: u32) -> Result<f64> {
    if !(a >= 0.0) || !(b > a) || a.is_infinite() {
        return Err(Error::InvalidDomain("segment integral needs 0 <= a < b"));
    }
    let gap = b - a;
    let mut s = 0.0;
    for j in 0..=k {
        let p = poisson_pmf(a, j);
        if p == 0.0 {
            continue;
        }
        s += p * poisson_upper_tail(gap, k + 1 - j);
    }
    Ok(ln_factorial(k) + log(s))
}

/// Regularised lower incomplete gamma `P(m, x)` for integer shape `m >= 1`.
pub fn regularized_lower_gamma(m: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    poisson_upper_tail(x, m)
}
