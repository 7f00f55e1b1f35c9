//! Small numeric helpers shared across modules.

use alloc::vec::Vec;
use libm::{erfc, exp, fabs, lgamma, log, sqrt};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp1, StandardNormal};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Which `l_p` norm a mechanism measures distances in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PNorm {
    One,
    Two,
    Inf,
}

impl PNorm {
    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            PNorm::One => v.iter().map(|x| fabs(*x)).sum(),
            PNorm::Two => norm2(v),
            PNorm::Inf => v.iter().fold(0.0, |m, x| f64::max(m, fabs(*x))),
        }
    }

    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            PNorm::One => a.iter().zip(b).map(|(x, y)| fabs(x - y)).sum(),
            PNorm::Two => dist2(a, b),
            PNorm::Inf => a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, fabs(x - y))),
        }
    }

    /// Draws from the cone measure of the unit `l_p` sphere, which is the
    /// angular part of any density that depends only on `||t||_p`.
    pub fn sample_sphere<R: RngCore + ?Sized>(self, dim: usize, rng: &mut R) -> Vec<f64> {
        match self {
            PNorm::Two => gaussian_direction(dim, rng),
            PNorm::Inf => {
                let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                let face = rng.random_range(0..dim);
                v[face] = if rng.random::<bool>() { 1.0 } else { -1.0 };
                v
            }
            PNorm::One => {
                let mut v: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
                let s: f64 = v.iter().sum();
                for x in v.iter_mut() {
                    *x /= s;
                    if rng.random::<bool>() {
                        *x = -*x;
                    }
                }
                v
            }
        }
    }
}

/// Uniform direction on the Euclidean unit sphere.
pub fn gaussian_direction<R: RngCore + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm2(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn normal_pdf(x: f64) -> f64 {
    exp(-0.5 * x * x) / sqrt(2.0 * core::f64::consts::PI)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / core::f64::consts::SQRT_2)
}

/// Standard normal quantile: Acklam's rational approximation polished by
/// two Newton steps on the exact cdf.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    let lo = 0.02425;
    let mut x = if p < lo {
        let q = sqrt(-2.0 * log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - lo {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = sqrt(-2.0 * log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    for _ in 0..2 {
        let pdf = normal_pdf(x);
        if pdf <= 0.0 {
            break;
        }
        x -= (normal_cdf(x) - p) / pdf;
    }
    x
}

pub fn ln_factorial(k: u32) -> f64 {
    lgamma(k as f64 + 1.0)
}

fn ln_poisson_pmf(lambda: f64, j: u32) -> f64 {
    if lambda == 0.0 {
        return if j == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -lambda + j as f64 * log(lambda) - ln_factorial(j)
}

pub fn poisson_pmf(lambda: f64, j: u32) -> f64 {
    exp(ln_poisson_pmf(lambda, j))
}

/// `P(Pois(lambda) >= m)` without subtractive cancellation on either side of the mode.
pub fn poisson_upper_tail(lambda: f64, m: u32) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    if lambda.is_infinite() {
        return 1.0;
    }
    if m as f64 > lambda {
        let mut term = exp(ln_poisson_pmf(lambda, m));
        let mut sum = 0.0;
        let mut i = m;
        while term > 0.0 && term > 1e-18 * sum {
            sum += term;
            i += 1;
            term *= lambda / i as f64;
        }
        sum
    } else {
        1.0 - poisson_lower_tail(lambda, m - 1)
    }
}

/// `P(Pois(lambda) <= m)`, summed downward from `m` where terms shrink.
pub fn poisson_lower_tail(lambda: f64, m: u32) -> f64 {
    if lambda == 0.0 {
        return 1.0;
    }
    if m as f64 >= lambda {
        return 1.0 - poisson_upper_tail(lambda, m + 1);
    }
    let mut term = exp(ln_poisson_pmf(lambda, m));
    let mut sum = 0.0;
    let mut i = m;
    loop {
        sum += term;
        if i == 0 || term <= 1e-18 * sum {
            break;
        }
        term *= i as f64 / lambda;
        i -= 1;
    }
    sum
}

/// Stateless 64-bit mixer used to derive independent child seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// FNV-1a over little-endian bytes of the values.
pub fn fnv1a(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Adaptive Gauss-Kronrod (7, 15) quadrature.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64 {
    gk_adaptive(f, a, b, abs_tol, 60)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, fabs((k - g) * h))
}

fn gk_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol || err <= 1e-15 * fabs(val) || depth == 0 || (b - a) <= 1e-15 * (fabs(a) + fabs(b)) {
        return val;
    }
    let m = 0.5 * (a + b);
    gk_adaptive(f, a, m, 0.5 * tol, depth - 1) + gk_adaptive(f, m, b, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-10, 1e-4, 0.02, 0.3, 0.5, 0.75, 0.9, 0.999, 1.0 - 1e-9] {
            let x = normal_quantile(p);
            assert!((normal_cdf(x) - p).abs() <= 1e-14 * p.max(1e-3), "p={p}");
        }
        assert!((normal_quantile(0.75) - 0.674_489_750_196_081_7).abs() < 1e-14);
    }

    #[test]
    fn poisson_tails_sum_to_one() {
        for &lam in &[0.01, 0.7, 5.0, 40.0, 300.0] {
            for m in [0u32, 1, 3, 10, 60, 400] {
                let lo = if m == 0 { 0.0 } else { poisson_lower_tail(lam, m - 1) };
                let hi = poisson_upper_tail(lam, m);
                assert!((lo + hi - 1.0).abs() < 1e-12, "lam={lam} m={m}");
            }
        }
    }

    #[test]
    fn small_lambda_tail_is_relatively_accurate() {
        let lam = 1e-9;
        assert!((poisson_upper_tail(lam, 1) / -libm::expm1(-lam) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn quadrature_integrates_polynomial_times_exponential() {
        let v = integrate(&|t: f64| t * t * libm::exp(-t), 0.0, 30.0, 1e-13);
        let exact = 2.0 - libm::exp(-30.0) * (900.0 + 60.0 + 2.0);
        assert!((v - exact).abs() < 1e-12);
    }
}
