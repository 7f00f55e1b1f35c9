use floatbody::geometry::{project, support_function, Polytope};
use floatbody::lp::maximize;
use floatbody::num::{dist2, dot};
use floatbody::quantile::{delta_q, empirical_quantile, hamming_distance, Sample};
use proptest::prelude::*;

fn sorted_quantile(values: &[f64], q: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    // smallest order statistic with empirical CDF at least q
    for (i, v) in s.iter().enumerate() {
        if (i + 1) as f64 / n >= q {
            return *v;
        }
    }
    s[s.len() - 1]
}

fn random_body(dirs: &[(f64, f64)]) -> Polytope {
    let hs = dirs.iter().map(|&(a, off)| (vec![a.cos(), a.sin()], off));
    Polytope::new(2, hs.chain(Polytope::cube(2, 2.0).iter_halfspaces())).unwrap()
}

trait Halfspaces {
    fn iter_halfspaces(&self) -> std::vec::IntoIter<(Vec<f64>, f64)>;
}

impl Halfspaces for Polytope {
    fn iter_halfspaces(&self) -> std::vec::IntoIter<(Vec<f64>, f64)> {
        (0..self.len()).map(|i| (self.normal(i).to_vec(), self.offset(i))).collect::<Vec<_>>().into_iter()
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn quantile_matches_sorting(values in prop::collection::vec(-100.0f64..100.0, 1..60), q in 0.501f64..0.99) {
        prop_assert_eq!(empirical_quantile(&values, q).unwrap(), sorted_quantile(&values, q));
    }

    #[test]
    fn projection_is_feasible_idempotent_and_nonexpansive(
        dirs in prop::collection::vec((0.0f64..6.283, 0.3f64..1.5), 1..8),
        x in prop::array::uniform2(-5.0f64..5.0),
        y in prop::array::uniform2(-5.0f64..5.0),
    ) {
        let k = random_body(&dirs);
        let px = project(&k, &x).unwrap();
        let py = project(&k, &y).unwrap();
        prop_assert!(px.converged);
        prop_assert!(k.contains(&px.point, 1e-7));
        let again = project(&k, &px.point).unwrap();
        prop_assert!(dist2(&again.point, &px.point) < 1e-7);
        prop_assert!(dist2(&px.point, &py.point) <= dist2(&x, &y) + 1e-6);
        // variational inequality against the interior witness
        let w = k.interior_point().unwrap();
        let lhs: f64 = (0..2).map(|j| (x[j] - px.point[j]) * (w[j] - px.point[j])).sum();
        prop_assert!(lhs <= 1e-6);
    }

    #[test]
    fn support_function_dominates_feasible_points(
        dirs in prop::collection::vec((0.0f64..6.283, 0.3f64..1.5), 1..8),
        angle in 0.0f64..6.283,
        probe in prop::array::uniform2(-2.0f64..2.0),
    ) {
        let k = random_body(&dirs);
        let theta = [angle.cos(), angle.sin()];
        let s = support_function(&k, &theta).unwrap();
        prop_assert!(k.contains(&s.maximizer, 1e-8));
        prop_assert!((dot(&s.maximizer, &theta) - s.value).abs() < 1e-8);
        if k.contains(&probe, 0.0) {
            prop_assert!(dot(&probe, &theta) <= s.value + 1e-9);
        }
    }

    #[test]
    fn q_distance_is_a_pseudometric(
        a in prop::collection::vec(-3.0f64..3.0, 20),
        b in prop::collection::vec(-3.0f64..3.0, 20),
    ) {
        let net = floatbody::geometry::sphere_net(2, floatbody::geometry::NetMode::Random { size: 16, seed: 1 }).unwrap();
        let x = Sample::new(2, a).unwrap();
        let y = Sample::new(2, b).unwrap();
        prop_assert_eq!(delta_q(&x, &x, &net, 0.7).unwrap(), 0.0);
        prop_assert_eq!(delta_q(&x, &y, &net, 0.7).unwrap(), delta_q(&y, &x, &net, 0.7).unwrap());
        prop_assert!(hamming_distance(&x, &y).unwrap() <= 10);
    }
}

#[test]
fn lp_matches_vertex_enumeration() {
    // maximise 3x + 2y over x + y <= 4, x + 3y <= 6, x <= 3, x, y >= 0
    let sol = maximize(&[3.0, 2.0], &[1.0, 1.0, 1.0, 3.0, 1.0, 0.0], &[4.0, 6.0, 3.0]).unwrap();
    let vertices = [[0.0, 0.0], [3.0, 0.0], [3.0, 1.0], [3.0, 1.0], [0.0, 2.0]];
    let best = vertices.iter().map(|v| 3.0 * v[0] + 2.0 * v[1]).fold(f64::MIN, f64::max);
    assert!((sol.objective - best).abs() < 1e-12);
}
