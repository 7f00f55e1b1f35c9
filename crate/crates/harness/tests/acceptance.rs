//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails that is not listed as expected to fail.

use floatbody::admissible::{analytic_params, density_floor, logconcave_params, AdmissibleParams};
use floatbody::extension::{extension_audit, shipped_instances, violating_instance, RATIO_SLACK_TOL, TV_TOL};
use floatbody::gamma::{g_poly, g_poly_coefficients, segment_gamma_integral};
use floatbody::geometry::{hausdorff_net, project, sphere_net, steiner_point, DirectionNet, NetMode, Polytope};
use floatbody::langevin::{
    coupled_langevin, coupling_bound, langevin_uniform, noisy_langevin, noisy_oracle_params, oracle_budget,
    LangevinConfig, PerturbedOracle,
};
use floatbody::marginal::{DistributionKind, SampleDistributionSpec};
use floatbody::mechanism::{
    audit_grid, calibrate_noise_rows, privacy_ratio_audit, sample_size, HolderQuerySpec, MechanismParams, RegionProbe,
    SampleSizeConstants, RATIO_AUDIT_TOL,
};
use floatbody::num::{derive_seed, normal_quantile};
use floatbody::pipeline::{private_quantiles, private_steiner, PrivateSetup};
use floatbody::quantile::Sample;
use floatbody::typical::{check_typical, recommend_w, TypicalSetConfig, DEFAULT_C_W};
use floatbody_harness::reference::population_quantiles;
use floatbody_harness::wasserstein::wasserstein2_empirical;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
    info: Vec<String>,
}

/// Criteria that cannot pass as stated, with the reason printed next to the FAIL line.
const EXPECTED_FAILURES: &[(&str, &str)] = &[(
    "mechanism-accuracy",
    "the sample-size bound at unit constants leaves the flat tail of the noise dominant",
)];

fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(20_260_419, stream))
}

fn gaussian(dim: usize) -> SampleDistributionSpec {
    SampleDistributionSpec::new(DistributionKind::IsotropicGaussian, dim).unwrap()
}

fn regular_net(m: usize) -> DirectionNet {
    let dirs: Vec<Vec<f64>> = (0..m).map(|i| {
        let a = 2.0 * PI * i as f64 / m as f64;
        vec![a.cos(), a.sin()]
    }).collect();
    DirectionNet::from_directions(2, &dirs).unwrap()
}

/// The `ceil(qn)`-th smallest value.
fn order_statistic(values: &mut [f64], q: f64) -> f64 {
    let n = values.len();
    let mut k = 1;
    while (k as f64) / (n as f64) < q {
        k += 1;
    }
    let (_, v, _) = values.select_nth_unstable_by(k - 1, f64::total_cmp);
    *v
}

fn oracle_quantiles(x: &Sample, net: &DirectionNet, q: f64) -> Vec<f64> {
    net.iter()
        .map(|t| {
            let mut v: Vec<f64> = x.rows().map(|r| r.iter().zip(t).map(|(a, b)| a * b).sum()).collect();
            order_statistic(&mut v, q)
        })
        .collect()
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

// Composite 20-point Gauss-Legendre rule, nodes found by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

fn quadrature(f: impl Fn(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let panels = ((b - a) / 0.25).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (xi, wi) in rule.0.iter().zip(&rule.1) {
            total += wi * f(mid + 0.5 * h * xi) * 0.5 * h;
        }
    }
    total
}

fn gamma_closed_form() -> Outcome {
    let rule = gauss_legendre(20);
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = r.random_range(0..=40u32);
        let a: f64 = r.random_range(0.0..40.0);
        let b = a + r.random_range(1e-3..40.0);
        let closed = segment_gamma_integral(a, b, k).unwrap();
        let kf = k as f64;
        let num = quadrature(|t| if t == 0.0 && k == 0 { 1.0 } else { (kf * t.ln() - t).exp() }, a, b, &rule);
        worst = worst.max(((closed - num) / num).abs());
    }
    let mut poly_ok = true;
    for k in 0..=10u32 {
        let mut expect = vec![0.0; k as usize + 1];
        // k!/j! computed as a falling product
        for j in 0..=k {
            expect[j as usize] = ((j + 1)..=k).map(|v| v as f64).product();
        }
        poly_ok &= g_poly_coefficients(k) == expect;
        let x = 0.37f64;
        let direct: f64 = expect.iter().enumerate().map(|(j, c)| c * x.powi(j as i32)).sum();
        poly_ok &= (direct - g_poly(k, x)).abs() <= 1e-12 * direct;
    }
    Outcome {
        name: "gamma-closed-form",
        pass: worst <= 1e-10 && poly_ok,
        detail: format!("max relative error {worst:.2e} over 1000 triples (tol 1e-10); g_k coefficients exact for k <= 10: {poly_ok}"),
        info: vec![],
    }
}

fn admissibility_constants() -> Outcome {
    let mut exact = true;
    let mut min_margin = f64::INFINITY;
    for q in [0.6, 0.75, 0.9] {
        let p = logconcave_params(q, 3, 100).unwrap();
        exact &= p.r_min == q - 0.5;
        exact &= p.r_max == (1.0 / (2.0 * (1.0 - q))).ln();
        exact &= p.r == (1.0 - q) / 2.0;
        exact &= p.l == (1.0 - q) / 8.0;
        let net = sphere_net(3, NetMode::Random { size: 64, seed: 9 }).unwrap();
        for kind in [DistributionKind::IsotropicGaussian, DistributionKind::UniformBall, DistributionKind::UniformCube] {
            let spec = SampleDistributionSpec::new(kind, 3).unwrap();
            for t in net.iter() {
                min_margin = min_margin.min(density_floor(&spec, t, q).unwrap() / p.l);
            }
        }
    }
    Outcome {
        name: "admissibility-constants",
        pass: exact && min_margin >= 1.0,
        detail: format!("log-concave constants exact: {exact}; smallest density floor / L = {min_margin:.3} over 3 laws x 64 directions x 3 levels"),
        info: vec![],
    }
}

fn nonprivate_convergence() -> Outcome {
    let q = 0.75;
    let truth = normal_quantile(q);
    let mut pass = true;
    let mut parts = Vec::new();
    for dim in [2usize, 5] {
        let net = sphere_net(dim, NetMode::Random { size: 128, seed: 3 }).unwrap();
        let spec = gaussian(dim);
        let at = |n: usize| {
            let mut errs: Vec<f64> = (0..50)
                .map(|s| {
                    let x = spec.sample(n, &mut rng(1000 + 100 * dim as u64 + s));
                    oracle_quantiles(&x, &net, q).iter().map(|v| (v - truth).abs()).fold(0.0, f64::max)
                })
                .collect();
            median(&mut errs)
        };
        let (e1, e4) = (at(1000), at(4000));
        let ratio = e1 / e4;
        pass &= (1.4..=2.6).contains(&ratio);
        parts.push(format!("d={dim}: {e1:.4} -> {e4:.4} (ratio {ratio:.2})"));
    }
    Outcome {
        name: "nonprivate-convergence",
        pass,
        detail: format!("median q-distance to analytic quantiles, n 1000 -> 4000: {}; ratio must lie in [1.4, 2.6]", parts.join(", ")),
        info: vec![],
    }
}

/// Shared data for the sensitivity and privacy audits: a typical Gaussian
/// sample and 1000 typical neighbours.
struct PairSet {
    cfg: TypicalSetConfig,
    base: Vec<f64>,
    pairs: Vec<(usize, Vec<f64>)>,
    attempts: usize,
}

fn typical_pairs() -> PairSet {
    let n = 20_000;
    let q = 0.75;
    let net = regular_net(8);
    let spec = gaussian(2);
    let params = analytic_params(&spec, q, 0.25, &net, n).unwrap();
    let w = recommend_w(8, 2, 0.1, DEFAULT_C_W).unwrap();
    let cfg = TypicalSetConfig::new(w, params, n).unwrap();
    let mut r = rng(40);
    let x = spec.sample(n, &mut r);
    assert!(check_typical(&x, q, &net, &cfg).unwrap().in_set, "base sample must be typical");
    let base = oracle_quantiles(&x, &net, q);
    let mut pairs = Vec::new();
    let mut attempts = 0;
    while pairs.len() < 1000 {
        attempts += 1;
        let mut y = x.clone();
        let d_h = r.random_range(1..=4usize);
        for _ in 0..d_h {
            let i = r.random_range(0..n);
            let row = if attempts % 2 == 0 {
                let mut v = Vec::new();
                spec.draw(&mut r, &mut v);
                v
            } else {
                let t = net.get(r.random_range(0..8));
                let s = if r.random::<bool>() { 3.0 } else { -3.0 };
                vec![s * t[0], s * t[1]]
            };
            y.replace_row(i, &row).unwrap();
        }
        let d_h = floatbody::quantile::hamming_distance(&x, &y).unwrap();
        if d_h == 0 || !check_typical(&y, q, &net, &cfg).unwrap().in_set {
            continue;
        }
        pairs.push((d_h, oracle_quantiles(&y, &net, q)));
    }
    PairSet { cfg, base, pairs, attempts }
}

fn sensitivity(set: &PairSet) -> Outcome {
    let scale = 2.0 * set.cfg.w / (set.cfg.params.l * set.cfg.n as f64);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for (d_h, qy) in &set.pairs {
        let dq = linf(&set.base, qy);
        let bound = scale * *d_h as f64;
        worst = worst.max(dq / bound);
        violations += (dq > bound) as usize;
    }
    Outcome {
        name: "sensitivity",
        pass: violations == 0,
        detail: format!(
            "{} typical neighbour pairs ({} constructed), {violations} violations of 2W d_H/(Ln); largest ratio to bound {worst:.3}",
            set.pairs.len(),
            set.attempts
        ),
        info: vec![],
    }
}

fn mechanism_audit(set: &PairSet) -> Outcome {
    let spec = HolderQuerySpec::quantiles(8);
    let mp = MechanismParams::new(1.0, &set.cfg, &spec).unwrap();
    let mut r = rng(50);
    let probe = RegionProbe::uniform(&mp, 2000, &mut r);
    let mut worst = f64::NEG_INFINITY;
    for (d_h, qy) in &set.pairs {
        let grid = audit_grid(&set.base, qy, &mp, 200, &mut r);
        worst = worst.max(privacy_ratio_audit(&set.base, qy, *d_h, &mp, &probe, &grid).max_slack);
    }
    Outcome {
        name: "mechanism-privacy-audit",
        pass: worst <= RATIO_AUDIT_TOL,
        detail: format!("max log-ratio slack {worst:.3e} over {} pairs x 200 outputs (tol {RATIO_AUDIT_TOL:e})", set.pairs.len()),
        info: vec![],
    }
}

fn extension() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for inst in shipped_instances().unwrap() {
        let probes: Vec<Sample> = inst.universe().collect();
        let a = extension_audit(&inst, &probes).unwrap();
        pass &= a.max_tv <= TV_TOL && a.max_ratio_slack <= RATIO_SLACK_TOL;
        parts.push(format!("{}: |H|={} TV {:.1e} slack {:.2e}", inst.name, a.members, a.max_tv, a.max_ratio_slack));
    }
    let bad = violating_instance().unwrap();
    let members: Vec<Sample> = bad.members().collect();
    let neg = extension_audit(&bad, &members).unwrap();
    let control = neg.max_tv > TV_TOL;
    Outcome {
        name: "extension-audit",
        pass: pass && control,
        detail: format!("{}; negative control departs from H: TV {:.2e}", parts.join("; "), neg.max_tv),
        info: vec![],
    }
}

fn accuracy_run(x: &Sample, setup: &PrivateSetup, truth: &[f64], alpha: f64, draws: usize, stream: u64) -> f64 {
    let mut r = rng(stream);
    let fails = (0..draws).filter(|_| linf(&private_quantiles(x, setup, &mut r).unwrap().value, truth) > alpha).count();
    fails as f64 / draws as f64
}

fn mechanism_accuracy() -> Outcome {
    let (q, alpha, beta, eps) = (0.75, 0.1, 0.1, 1.0);
    let net = regular_net(8);
    let spec = gaussian(2);
    let params = analytic_params(&spec, q, 0.25, &net, 1).unwrap();
    let qspec = HolderQuerySpec::quantiles(8);
    let n = sample_size(alpha, beta, eps, &qspec, &params, 8, &SampleSizeConstants::default()).unwrap().n;
    let setup = PrivateSetup::new(q, eps, params.clone(), net.clone(), beta, DEFAULT_C_W).unwrap();
    let truth = population_quantiles(&spec, &net, q).unwrap();
    let x = spec.sample(n, &mut rng(70));
    let rate = accuracy_run(&x, &setup, &truth, alpha, 400, 71);
    let calibrated = calibrate_noise_rows(alpha, beta, eps, &qspec, &params, setup.w).unwrap();
    let xc = spec.sample(calibrated, &mut rng(72));
    let rate_c = accuracy_run(&xc, &setup, &truth, alpha, 400, 73);
    Outcome {
        name: "mechanism-accuracy",
        pass: rate <= beta + 0.046,
        detail: format!("n = {n} from the sample-size bound: failure rate {rate:.3} over 400 draws (limit {:.3})", beta + 0.046),
        info: vec![format!(
            "at n = {calibrated}, the smallest n whose exact noise tail at alpha is at most beta, failure rate {rate_c:.3}"
        )],
    }
}

// Exact planar geometry used as oracles for the Steiner and projection criteria.
fn polygon_vertices(k: &Polytope) -> Vec<[f64; 2]> {
    let m = k.len();
    let mut v: Vec<[f64; 2]> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let (a, b) = (k.normal(i), k.normal(j));
            let det = a[0] * b[1] - a[1] * b[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let (ci, cj) = (k.offset(i), k.offset(j));
            let p = [(ci * b[1] - cj * a[1]) / det, (a[0] * cj - b[0] * ci) / det];
            if k.max_violation(&p) <= 1e-10 && !v.iter().any(|u| (u[0] - p[0]).abs() + (u[1] - p[1]).abs() < 1e-10) {
                v.push(p);
            }
        }
    }
    let cx = v.iter().map(|p| p[0]).sum::<f64>() / v.len() as f64;
    let cy = v.iter().map(|p| p[1]).sum::<f64>() / v.len() as f64;
    v.sort_by(|p, q| (p[1] - cy).atan2(p[0] - cx).total_cmp(&(q[1] - cy).atan2(q[0] - cx)));
    v
}

/// Vertices weighted by their exterior angles.
fn exact_steiner(v: &[[f64; 2]]) -> [f64; 2] {
    let m = v.len();
    let normal = |i: usize| {
        let (a, b) = (v[i], v[(i + 1) % m]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        (dy, -dx)
    };
    let mut s = [0.0, 0.0];
    for i in 0..m {
        let (p, q) = (normal((i + m - 1) % m), normal(i));
        let angle = (p.0 * q.1 - p.1 * q.0).atan2(p.0 * q.0 + p.1 * q.1);
        s[0] += v[i][0] * angle / (2.0 * PI);
        s[1] += v[i][1] * angle / (2.0 * PI);
    }
    s
}

fn exact_projection(k: &Polytope, v: &[[f64; 2]], x: &[f64]) -> [f64; 2] {
    if k.max_violation(x) <= 0.0 {
        return [x[0], x[1]];
    }
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for i in 0..v.len() {
        let (a, b) = (v[i], v[(i + 1) % v.len()]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let t = (((x[0] - a[0]) * dx + (x[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
        let p = [a[0] + t * dx, a[1] + t * dy];
        let d = dist(&p, x);
        if d < best.0 {
            best = (d, p);
        }
    }
    best.1
}

fn exact_hausdorff(k1: &Polytope, v1: &[[f64; 2]], k2: &Polytope, v2: &[[f64; 2]]) -> f64 {
    let one = |k: &Polytope, vk: &[[f64; 2]], from: &[[f64; 2]]| {
        from.iter().map(|p| dist(&exact_projection(k, vk, p), p)).fold(0.0, f64::max)
    };
    one(k2, v2, v1).max(one(k1, v1, v2))
}

fn random_pair(r: &mut ChaCha8Rng, outer: f64) -> (Polytope, Polytope) {
    let m = r.random_range(3..=10usize);
    let mut normals: Vec<(f64, f64)> = (0..m).map(|_| (r.random_range(0.0..2.0 * PI), r.random_range(0.4..1.5))).collect();
    normals.extend((0..8).map(|i| (2.0 * PI * i as f64 / 8.0, outer)));
    let step = 10f64.powf(r.random_range(-4.0..-0.7));
    let build = |shift: &dyn Fn(usize) -> f64| {
        Polytope::new(2, normals.iter().enumerate().map(|(i, (a, o))| (vec![a.cos(), a.sin()], o + shift(i)))).unwrap()
    };
    let shifts: Vec<f64> = (0..normals.len()).map(|_| step * r.random_range(-1.0..1.0)).collect();
    (build(&|_| 0.0), build(&|i| shifts[i]))
}

fn steiner_robustness() -> Outcome {
    let mut r = rng(80);
    let net = sphere_net(2, NetMode::Random { size: 512, seed: 81 }).unwrap();
    let mut violations = 0;
    let mut worst_z: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..200 {
        let (k1, k2) = random_pair(&mut r, 1.8);
        let (s1, s2) = (steiner_point(&k1, 4096, &mut r).unwrap(), steiner_point(&k2, 4096, &mut r).unwrap());
        let tol = 3.0 * s1.std_error.max(s2.std_error);
        let dh = hausdorff_net(&k1, &k2, &net).unwrap();
        let moved = dist(&s1.point, &s2.point);
        violations += (moved > 2f64.sqrt() * dh + 2.0 * tol) as usize;
        worst_ratio = worst_ratio.max(moved / (2f64.sqrt() * dh + 2.0 * tol));
        let e = exact_steiner(&polygon_vertices(&k1));
        worst_z = worst_z.max(dist(&e, &s1.point) / s1.std_error.max(1e-300));
    }
    // private Steiner point on Gaussian rows, noise calibrated to half the radius
    let (q, eps, target, beta) = (0.75, 1.0, 0.2, 0.1);
    let onet = regular_net(8);
    let spec = gaussian(2);
    let params = analytic_params(&spec, q, 0.25, &onet, 1).unwrap();
    let setup = PrivateSetup::new(q, eps, params.clone(), onet, beta, DEFAULT_C_W).unwrap();
    let n = calibrate_noise_rows(target / 2.0, beta / 2.0, eps, &HolderQuerySpec::steiner(&params), &params, setup.w).unwrap();
    let x = spec.sample(n, &mut rng(82));
    let mut pr = rng(83);
    let hits = (0..200)
        .filter(|_| dist(&private_steiner(&x, &setup, 2048, &mut pr).unwrap().value, &[0.0, 0.0]) <= target)
        .count();
    Outcome {
        name: "steiner-robustness",
        pass: violations == 0 && hits >= 180,
        detail: format!(
            "200 polytope pairs: {violations} violations of sqrt(d) Hausdorff + 2 MC tolerance (largest ratio {worst_ratio:.3}); private Steiner within {target} of the origin in {hits}/200 runs at n = {n}"
        ),
        info: vec![format!("largest distance of the Monte Carlo Steiner estimate from the exact vertex formula: {worst_z:.2} standard errors")],
    }
}

fn projection_holder() -> Outcome {
    let mut r = rng(90);
    let big_r = 2.0;
    let mut violations = 0;
    let mut oracle_gap: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..200 {
        let (k1, k2) = random_pair(&mut r, 1.8);
        let (v1, v2) = (polygon_vertices(&k1), polygon_vertices(&k2));
        let radius = 4.0 * r.random::<f64>().sqrt();
        let a = r.random_range(0.0..2.0 * PI);
        let x = [radius * a.cos(), radius * a.sin()];
        let (p1, p2) = (project(&k1, &x).unwrap().point, project(&k2, &x).unwrap().point);
        oracle_gap = oracle_gap.max(dist(&p1, &exact_projection(&k1, &v1, &x))).max(dist(&p2, &exact_projection(&k2, &v2, &x)));
        let dh = exact_hausdorff(&k1, &v1, &k2, &v2);
        let bound = 2.0 * (radius + big_r).sqrt() * dh.sqrt() + 1e-6;
        let moved = dist(&p1, &p2);
        violations += (moved > bound) as usize;
        worst_ratio = worst_ratio.max(moved / bound);
    }
    Outcome {
        name: "projection-holder",
        pass: violations == 0 && oracle_gap <= 1e-6,
        detail: format!(
            "200 body pairs in B(0, 2): {violations} violations (largest ratio {worst_ratio:.3}); Dykstra vs exact polygon projection gap {oracle_gap:.1e}"
        ),
        info: vec![],
    }
}

fn uniform_square(m: usize, r: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..m).map(|_| vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect()
}

fn uniform_disc(radius: f64, m: usize, r: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let p = [r.random_range(-radius..radius), r.random_range(-radius..radius)];
        if p[0] * p[0] + p[1] * p[1] <= radius * radius {
            out.push(p.to_vec());
        }
    }
    out
}

fn langevin_sampling() -> Outcome {
    let square = Polytope::cube(2, 1.0);
    let cfg = LangevinConfig::calibrated(2, 0.05, 1.0, 2f64.sqrt(), 0.5, 2.0).unwrap();
    let mut r = rng(100);
    let chains = langevin_uniform(&square, &cfg, &mut r, 512).unwrap();
    let inside = chains.iter().all(|x| square.max_violation(x) <= 1e-6);
    let w2 = wasserstein2_empirical(&chains, &uniform_square(512, &mut rng(101))).unwrap();
    let square_score = w2 * w2 / 2.0;

    // Gaussian floating body at q = 0.75 is the disc of radius Q(0.75).
    let (q, alpha) = (0.75, 0.1);
    let radius = normal_quantile(q);
    let net = regular_net(64);
    let spec = gaussian(2);
    let body = floatbody_harness::reference::population_body(&spec, &net, q).unwrap().body;
    let params = analytic_params(&spec, q, 0.25, &net, 1).unwrap();
    let outer = radius / (PI / 64.0).cos();
    let gcfg = LangevinConfig::calibrated(2, alpha, radius, outer, 0.5, 2.0).unwrap();
    let budget = noisy_oracle_params(alpha, gcfg.k, &AdmissibleParams { r_max: outer, ..params }).unwrap();
    let mut oracle = PerturbedOracle::new(&body, gcfg.steiner_directions, budget);
    let mut steiner = PerturbedOracle::new(&body, gcfg.steiner_directions, budget);
    let mut r = rng(102);
    let noisy: Vec<Vec<f64>> =
        (0..512).map(|_| noisy_langevin(&mut oracle, &mut steiner, &gcfg, 2, &mut r).unwrap()).collect();
    let w2 = wasserstein2_empirical(&noisy, &uniform_disc(radius, 512, &mut rng(103))).unwrap();
    let disc_score = w2 * w2 / 2.0;
    Outcome {
        name: "langevin-sampling",
        pass: square_score <= 0.05 && inside && disc_score <= 9.0 * alpha,
        detail: format!(
            "square: (1/d) W2^2 = {square_score:.4} (limit 0.05, k = {}, eta = {:.2e}, all outputs inside: {inside}); Gaussian floating body with oracles at the noise budget: (1/d) W2^2 = {disc_score:.4} (limit {:.1})",
            cfg.k,
            cfg.eta,
            9.0 * alpha
        ),
        info: vec![],
    }
}

fn coupling() -> Outcome {
    let square = Polytope::cube(2, 1.0);
    let alpha = 0.1;
    let r_max = 2f64.sqrt();
    let cfg = LangevinConfig::calibrated(2, alpha, 1.0, r_max, 0.5, 2.0).unwrap();
    let budget = oracle_budget(alpha, cfg.k, 2, r_max, 0.1).unwrap();
    let bound = coupling_bound(&budget, &cfg, r_max);
    let mut oracle = PerturbedOracle::new(&square, cfg.steiner_directions, budget);
    let mut steiner = PerturbedOracle::new(&square, cfg.steiner_directions, budget);
    let mut r = rng(110);
    let mut total = 0.0;
    for _ in 0..100 {
        let run = coupled_langevin(&square, &[0.0, 0.0], &mut oracle, &mut steiner, &cfg, &mut r).unwrap();
        let d = dist(&run.exact, &run.noisy);
        total += d * d;
    }
    let mean = total / 100.0;
    Outcome {
        name: "coupling-bound",
        pass: mean <= bound,
        detail: format!("mean squared gap {mean:.3e} over 100 couplings, bound {bound:.3e} (k = {})", cfg.k),
        info: vec![],
    }
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"seed": 5, "distribution": {"kind": "isotropic-gaussian", "dim": 2}, "n": 9000,
            "net": {"mode": "random", "size": 8, "seed": 3}, "point": [2.0, 0.5], "trials": 4,
            "langevin": {"k": 2, "eta": 0.001, "chains": 4, "rows_per_batch": 3000}}"#,
    )
    .unwrap();
    let commands = ["gen", "quantiles", "steiner", "project", "sample", "typical", "audit"];
    let mut identical = Vec::new();
    for cmd in commands {
        let runs: Vec<_> = (0..2)
            .map(|i| {
                let out = tmp.path().join(format!("{cmd}-{i}"));
                let status = Command::new(env!("CARGO_BIN_EXE_floatbody"))
                    .args([cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "1"])
                    .output()
                    .unwrap();
                (status.status.code(), status.stdout, files_in(&out))
            })
            .collect();
        let ok = runs[0] == runs[1] && !runs[0].2.is_empty() && runs[0].0 != Some(1);
        identical.push((cmd, ok));
    }
    let pass = identical.iter().all(|(_, ok)| *ok);
    let failed: Vec<_> = identical.iter().filter(|(_, ok)| !ok).map(|(c, _)| *c).collect();
    Outcome {
        name: "determinism",
        pass,
        detail: if pass {
            format!("all {} commands byte-identical across two single-thread runs", commands.len())
        } else {
            format!("not reproducible: {}", failed.join(", "))
        },
        info: vec![],
    }
}

fn main() {
    let started = Instant::now();
    let pairs = typical_pairs();
    let mut outcomes: Vec<Outcome> = std::thread::scope(|s| {
        let pairs = &pairs;
        let jobs: Vec<Box<dyn FnOnce() -> Outcome + Send + '_>> = vec![
            Box::new(gamma_closed_form),
            Box::new(admissibility_constants),
            Box::new(nonprivate_convergence),
            Box::new(move || sensitivity(pairs)),
            Box::new(move || mechanism_audit(pairs)),
            Box::new(extension),
            Box::new(mechanism_accuracy),
            Box::new(steiner_robustness),
            Box::new(projection_holder),
            Box::new(langevin_sampling),
            Box::new(coupling),
            Box::new(determinism),
        ];
        let handles: Vec<_> = jobs.into_iter().map(|j| s.spawn(move || {
            let t = Instant::now();
            let mut o = j();
            o.info.push(format!("{:.1} s", t.elapsed().as_secs_f64()));
            o
        })).collect();
        handles.into_iter().map(|h| h.join().expect("criterion panicked")).collect()
    });
    let mut unexpected = Vec::new();
    for o in outcomes.iter_mut() {
        let expected = EXPECTED_FAILURES.iter().find(|(n, _)| *n == o.name).map(|(_, why)| *why);
        match (o.pass, expected) {
            (true, _) => println!("PASS {}: {}", o.name, o.detail),
            (false, Some(why)) => println!("FAIL (expected: {why}) {}: {}", o.name, o.detail),
            (false, None) => {
                println!("FAIL {}: {}", o.name, o.detail);
                unexpected.push(o.name);
            }
        }
        for line in &o.info {
            println!("    {line}");
        }
    }
    println!("acceptance finished in {:.1} s", started.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
