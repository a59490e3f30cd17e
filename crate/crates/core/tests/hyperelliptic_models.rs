use std::collections::BTreeSet;

use gfc_core::hyperelliptic::{
    choose_convergence_exponent, elementary_factor, enumerate_hyperelliptic_kernels,
    excludes_fixed_bearing, mobius_normalizer, partition_by_limit_point, synth_hyperelliptic,
    synth_z2m_curve, HyperellipticError, HyperellipticModel, ProductOptions, WeierstrassModel,
};
use gfc_core::point::ExtendedComplex;
use gfc_core::tower::LimitConfiguration;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cross_ratio(a: Complex64, b: Complex64, x: Complex64, y: Complex64) -> Complex64 {
    (x - a) * (y - b) / ((x - b) * (y - a))
}

fn finite(z: ExtendedComplex) -> Complex64 {
    z.as_finite().expect("finite image")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalizer_preserves_cross_ratios(pts in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 7)) {
        let z: Vec<Complex64> = pts.iter().map(|&(x, y)| c(x, y)).collect();
        for i in 0..z.len() {
            for j in i + 1..z.len() {
                prop_assume!((z[i] - z[j]).norm() > 1e-2);
            }
        }
        let q: Vec<ExtendedComplex> = z[..3].iter().map(|&w| w.into()).collect();
        let t = mobius_normalizer(&q).unwrap();
        prop_assert!(t.apply(q[0]).is_infinite());
        prop_assert!(finite(t.apply(q[1])).norm() < 1e-9);
        prop_assert!((finite(t.apply(q[2])) - 1.0).norm() < 1e-9);
        let (a, b, x, y) = (z[3], z[4], z[5], z[6]);
        let before = cross_ratio(a, b, x, y);
        let after = cross_ratio(finite(t.apply(a.into())), finite(t.apply(b.into())), finite(t.apply(x.into())), finite(t.apply(y.into())));
        prop_assert!((before - after).norm() < 1e-6 * (1.0 + before.norm()));
    }

    #[test]
    fn elementary_product_is_one_at_the_origin(scale in 0.5f64..2.0, angles in prop::collection::vec(0.0f64..6.3, 8..20), exponent in 0u32..2) {
        let zeros: Vec<Complex64> = angles
            .iter()
            .enumerate()
            .map(|(i, &t)| Complex64::from_polar(scale * ((i + 1) * (i + 1)) as f64, t))
            .collect();
        let model = WeierstrassModel::new(&zeros, ProductOptions { exponent: Some(exponent), bare: false }).unwrap();
        prop_assert!((model.evaluate_product(c(0.0, 0.0)) - 1.0).norm() < 1e-12);
        // every zero inside the evaluation disk is a zero, measured against the other factors
        for (i, &z) in zeros.iter().enumerate().filter(|(_, z)| z.norm() <= model.disk_radius) {
            let others: f64 = zeros
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &mu)| elementary_factor(z / mu, exponent).norm())
                .product();
            prop_assert!(model.evaluate_product(z).norm() <= 1e-12 * others);
        }
    }
}

#[test]
fn two_clusters_split_by_nearest_limit_point() {
    let q: Vec<ExtendedComplex> = vec![c(5.0, 0.0).into(), c(-5.0, 0.0).into()];
    let b: Vec<ExtendedComplex> = vec![
        c(4.5, 0.1).into(),
        c(-4.8, 0.0).into(),
        c(5.2, -0.3).into(),
        c(-5.5, 0.4).into(),
        c(6.0, 0.0).into(),
    ];
    let parts = partition_by_limit_point(&b, &q).unwrap();
    assert_eq!(parts, vec![vec![0, 2, 4], vec![1, 3]]);
    // equidistant points are rejected
    let tie: Vec<ExtendedComplex> =
        vec![c(0.0, 1.0).into(), c(5.0, 0.1).into(), c(-5.0, 0.1).into()];
    assert!(matches!(
        partition_by_limit_point(&tie, &q),
        Err(HyperellipticError::AmbiguousPartition { index: 0 })
    ));
}

fn exponent_for(f: impl Fn(f64) -> f64, len: usize) -> Result<u32, HyperellipticError> {
    let moduli: Vec<f64> = (1..=len).map(|k| f(k as f64)).collect();
    choose_convergence_exponent(&moduli)
}

#[test]
fn exponent_follows_growth() {
    assert_eq!(exponent_for(|k| k * k, 32).unwrap(), 0);
    assert_eq!(exponent_for(|k| k, 32).unwrap(), 1);
    assert_eq!(exponent_for(|k| k.sqrt(), 32).unwrap(), 2);
    assert_eq!(exponent_for(|k| 2f64.powf(k), 32).unwrap(), 0);
    assert!(matches!(
        exponent_for(|k| (k + 2.0).ln(), 32),
        Err(HyperellipticError::Divergence { .. })
    ));
    assert!(matches!(
        exponent_for(|k| k, 5),
        Err(HyperellipticError::TooFewZeros(5))
    ));
}

#[test]
fn single_limit_point_images() {
    let q = c(2.0, 0.0);
    let cfg = LimitConfiguration::new(vec![q], 10);
    let model = synth_hyperelliptic(&cfg, &[], ProductOptions::default()).unwrap();
    let set = cfg.materialize_branch_set().unwrap();
    // q / (q - z), with infinity going to 0
    let mut expected = vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)];
    for p in &set.points[3..] {
        let z = finite(*p);
        expected.push(q / (q - z));
    }
    assert_eq!(model.images.len(), expected.len());
    for (a, b) in model.images.iter().zip(&expected) {
        assert!((a - b).norm() < 1e-9 * (1.0 + b.norm()), "{a} vs {b}");
    }
    assert_eq!(model.parts, vec![(0..set.points.len()).collect::<Vec<_>>()]);
}

#[test]
fn models_validate_and_double_within_the_tail_bound() {
    for (q, bits) in [
        (vec![c(2.0, 1.0)], vec![]),
        (vec![c(2.0, 1.0), c(-2.0, -1.5)], vec![1]),
        (vec![c(2.0, 1.0), c(-2.0, -1.5), c(0.5, 3.0)], vec![0, 1]),
    ] {
        let cfg = LimitConfiguration::new(q, 12);
        let model = synth_hyperelliptic(&cfg, &bits, ProductOptions::default()).unwrap();
        let v = model.validate(7).unwrap();
        assert!(v.passed(), "{v:?}");
        assert!(v.doubling_change <= v.doubling_bound);
        // the involution maps the curve to itself exactly
        let z = c(0.3, -0.2);
        for w in model.fiber(z).unwrap() {
            let (z2, w2) = HyperellipticModel::involution(z, w);
            assert_eq!(
                model.residual(z2, w2).unwrap(),
                model.residual(z, w).unwrap()
            );
        }
    }
}

#[test]
fn z2_squared_vanishing_pattern() {
    let zeros: Vec<Complex64> = (1..=18)
        .map(|k| Complex64::from_polar((k * k) as f64, 0.7 * k as f64))
        .collect();
    let a1: Vec<usize> = (0..18).filter(|i| i % 3 == 0).collect();
    let a2: Vec<usize> = (0..18).filter(|i| i % 3 == 1).collect();
    let a3: Vec<usize> = (0..18).filter(|i| i % 3 == 2).collect();
    let model = synth_z2m_curve(&zeros, [&a1, &a2, &a3], ProductOptions::default()).unwrap();
    for i in 0..18 {
        let expected = match i % 3 {
            0 => (true, false),
            1 => (false, true),
            _ => (true, true),
        };
        assert_eq!(model.vanishing(i), expected, "zero {i}");
    }
    let z = c(0.4, 0.9);
    let fiber = model.fiber(z);
    assert_eq!(fiber.len(), 4);
    for &(u, w) in &fiber {
        let (r1, r2) = model.residuals(z, u, w);
        assert!(r1.norm() < 1e-9 && r2.norm() < 1e-9);
    }
    assert!(synth_z2m_curve(&zeros, [&a1, &a2, &a1], ProductOptions::default()).is_err());
}

#[test]
fn three_limit_points_give_eight_kernels() {
    let level = 12;
    let kernels = enumerate_hyperelliptic_kernels(3, level).unwrap();
    assert_eq!(kernels.len(), 8);
    let distinct: BTreeSet<Vec<Vec<u32>>> = kernels
        .iter()
        .map(|(_, k)| k.canonical_form().to_vec())
        .collect();
    assert_eq!(distinct.len(), 8);
    for (id, (bits, kernel)) in kernels.iter().enumerate() {
        assert_eq!(
            bits.iter().fold(0usize, |acc, &b| acc << 1 | b as usize),
            id
        );
        assert_eq!(kernel.index().unwrap(), 2);
        assert!(excludes_fixed_bearing(kernel, 3).unwrap());
    }
}
