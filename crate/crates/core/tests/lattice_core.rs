mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use riesz_core::{lattice_configuration, random_configuration, Lattice};

fn generator_2d() -> impl Strategy<Value = Lattice> {
    (0.5f64..2.0, -0.6f64..0.6, 0.5f64..2.0)
        .prop_map(|(a, b, c)| Lattice::from_row_major(2, &[a, b * a, 0.0, c]).unwrap())
}

fn generator_3d() -> impl Strategy<Value = Lattice> {
    prop::collection::vec(-0.4f64..0.4, 9).prop_map(|p| {
        let m = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 } + p[i * 3 + j]);
        Lattice::new(m).unwrap()
    })
}

#[test]
fn cubic_ball_count_matches_box_filter() {
    let l = Lattice::cubic(3);
    let v = l.enumerate_ball(10.0, false).unwrap();
    assert_eq!(v.len(), common::box_count(3, 10.0));
}

#[test]
fn shortest_vector_matches_exhaustive_search() {
    let l = Lattice::from_row_major(2, &[1.0, 0.9, 0.0, 0.3]).unwrap();
    let d = 2;
    let max_col = (0..d).map(|j| (0..d).map(|i| l.generator()[(i, j)].powi(2)).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let search = l
        .enumerate_ball(2.0 * d as f64 * max_col, true)
        .unwrap()
        .iter()
        .map(|v| v.norm_sq.sqrt())
        .fold(f64::INFINITY, f64::min);
    assert!((l.shortest_len() - search).abs() < 1e-12);
}

#[test]
fn random_points_have_uniform_mean() {
    let c = random_configuration(&Lattice::cubic(2), 100_000, 11).unwrap();
    for i in 0..2 {
        let mean: f64 = c.points().iter().map(|p| p.frac()[i]).sum::<f64>() / c.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }
}

#[test]
fn single_random_point() {
    let c = random_configuration(&Lattice::hexagonal(), 1, 3).unwrap();
    assert_eq!(c.len(), 1);
    assert!(c.points()[0].frac().iter().all(|f| (0.0..1.0).contains(f)));
}

#[test]
fn configuration_wire_format() {
    let c = lattice_configuration(&Lattice::cubic(1), 2).unwrap();
    let v: serde_json::Value = serde_json::to_value(&c).unwrap();
    assert_eq!(v["lattice"]["dim"], 1);
    assert_eq!(v["frac_points"], serde_json::json!([[0.0], [0.5]]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_is_invariant_under_lattice_shifts(l in generator_2d(), x in prop::array::uniform2(-20.0f64..20.0)) {
        let base = l.reduce_to_fundamental(&x).unwrap();
        for v in l.enumerate_ball(3.0, false).unwrap() {
            let y = [x[0] + v.cart[0], x[1] + v.cart[1]];
            let r = l.reduce_to_fundamental(&y).unwrap();
            for i in 0..2 {
                let diff = (r.point.frac()[i] - base.point.frac()[i]).abs();
                prop_assert!(diff.min(1.0 - diff) < 1e-10);
            }
        }
    }

    #[test]
    fn reduction_reconstructs_the_point(l in generator_3d(), x in prop::array::uniform3(-50.0f64..50.0)) {
        let r = l.reduce_to_fundamental(&x).unwrap();
        prop_assert!(r.point.frac().iter().all(|f| (0.0..1.0).contains(f)));
        let back = l.to_cartesian(r.point.frac());
        for i in 0..3 {
            prop_assert!((back[i] + r.floor[i] - x[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn ball_is_centrally_symmetric(l in generator_3d(), r in 0.5f64..4.0) {
        let vs = l.enumerate_ball(r, false).unwrap();
        let mut keys: Vec<Vec<i64>> = vs.iter().map(|v| v.coords.clone()).collect();
        let mut neg: Vec<Vec<i64>> = keys.iter().map(|k| k.iter().map(|c| -c).collect()).collect();
        keys.sort();
        neg.sort();
        prop_assert_eq!(keys, neg);
        for v in &vs {
            prop_assert!(v.norm_sq <= r * r);
        }
    }

    #[test]
    fn duality(l in generator_3d()) {
        let dd = l.dual().dual();
        for (a, b) in dd.generator().iter().zip(l.generator().iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((l.covolume() * l.dual().covolume() - 1.0).abs() < 1e-12);
        prop_assert!((l.covolume() - l.generator().determinant().abs()).abs() <= 1e-12 * l.covolume());
    }

    #[test]
    fn lattice_configuration_is_closed_under_grid_shifts(m in 1usize..6, axis in 0usize..2) {
        let c = lattice_configuration(&Lattice::hexagonal(), m).unwrap();
        prop_assert_eq!(c.len(), m * m);
        let key = |f: &[f64]| -> Vec<i64> { f.iter().map(|v| ((v * m as f64).round() as i64).rem_euclid(m as i64)).collect() };
        let mut keys: Vec<Vec<i64>> = c.points().iter().map(|p| key(p.frac())).collect();
        keys.sort();
        keys.dedup();
        prop_assert_eq!(keys.len(), m * m);
        let mut shifted: Vec<Vec<i64>> = c
            .points()
            .iter()
            .map(|p| {
                let mut f = p.frac().to_vec();
                f[axis] += 1.0 / m as f64;
                key(&f)
            })
            .collect();
        shifted.sort();
        prop_assert_eq!(shifted, keys);
    }
}
