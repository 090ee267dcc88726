use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use valforge::bodies::{make_ball, random_smooth_body, BodySpec, ConvexBody};
use valforge::family::{build_family, dual_frame, spanning_certificate};
use valforge::functionals::{mixed_volume_quadrature, volume};
use valforge::kernel::{decompose_kernel, FnKernel, TensorDecomposition, DEFAULT_TOL};
use valforge::sphere::harmonics::HarmonicExpansion;
use valforge::sphere::{build_grid, unit_ball_volume, SphericalFunction};
use valforge::synthesis::{
    evaluate_combination, evaluate_kernel_valuation, synthesize, KernelValuation, Parity,
};
use valforge::Error;

#[test]
fn planar_pipeline() {
    let grid = build_grid(2, 40).unwrap();
    let family = build_family(2).unwrap();
    assert_eq!((family.len(), family.t()), (4, 5.0));
    let frame = dual_frame(&family, &grid).unwrap();
    let h =
        HarmonicExpansion::from_labels(2, &[((0, 0), 1.0), ((2, 1), 0.2), ((3, 0), 0.1)]).unwrap();
    let d = TensorDecomposition::separable(vec![Arc::new(h)]).unwrap();
    let v = KernelValuation::new(1, d, Parity::None).unwrap();
    let comb = synthesize(&v, &family, &frame, &grid).unwrap();
    assert_eq!(comb.mixed_volume_count(), 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..4 {
        let body = random_smooth_body(&mut rng, i, &grid).unwrap();
        let a = evaluate_kernel_valuation(&v, &body, &grid).unwrap();
        let b = evaluate_combination(&comb, &body, &grid).unwrap();
        assert!((a - b).abs() <= 1e-6 * a.abs(), "{a} vs {b}");
    }
}

#[test]
fn four_dimensional_family_spans() {
    let family = build_family(4).unwrap();
    assert_eq!(family.len(), 11);
    assert_eq!(family.t(), 9.0);
    let grid = build_grid(4, 6).unwrap();
    assert!(spanning_certificate(&family, &grid).unwrap().min_sigma > 0.0);
    let ball = make_ball(4, 1.0).unwrap();
    assert!((volume(&ball, &grid).unwrap() - unit_ball_volume(4)).abs() < 1e-12);
}

#[test]
fn degree_two_in_four_dimensions() {
    let grid = build_grid(4, 6).unwrap();
    let family = build_family(4).unwrap();
    let frame = dual_frame(&family, &grid).unwrap();
    let kernel = FnKernel::new(4, 2, |p: &[DVector<f64>]| 1.0 + 0.3 * p[0].dot(&p[1]));
    let d = decompose_kernel(&kernel, 1, DEFAULT_TOL).unwrap();
    let v = KernelValuation::new(2, d, Parity::None).unwrap();
    let comb = synthesize(&v, &family, &frame, &grid).unwrap();
    assert!(comb.mixed_volume_count() <= comb.mixed_volume_bound());
    assert_eq!(comb.mixed_volume_bound(), 22);
    let body = ConvexBody::from_spec(
        &BodySpec::Ellipsoid {
            matrix: vec![
                vec![1.5, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.2, 0.0],
                vec![0.0, 0.2, 0.7, 0.0],
                vec![0.0, 0.0, 0.0, 1.2],
            ],
            center: None,
        },
        4,
    )
    .unwrap();
    let a = evaluate_kernel_valuation(&v, &body, &grid).unwrap();
    let b = evaluate_combination(&comb, &body, &grid).unwrap();
    assert!((a - b).abs() <= 1e-2 * a.abs(), "{a} vs {b}");
}

#[test]
fn body_descriptions_round_trip() {
    let grid = build_grid(3, 20).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..4 {
        let body = random_smooth_body(&mut rng, i, &grid).unwrap();
        let text = serde_json::to_string(&body.to_spec()).unwrap();
        let back = ConvexBody::from_spec(&serde_json::from_str(&text).unwrap(), 3).unwrap();
        assert_eq!(serde_json::to_string(&back.to_spec()).unwrap(), text);
        let x = DVector::from_vec(vec![0.48, 0.6, 0.64]);
        assert_eq!(back.value(&x), body.value(&x));
    }
}

#[test]
fn mismatched_inputs_are_rejected() {
    let grid = build_grid(3, 8).unwrap();
    let ball2 = make_ball(2, 1.0).unwrap();
    let ball3 = make_ball(3, 1.0).unwrap();
    assert!(matches!(
        mixed_volume_quadrature(&[&ball3, &ball3, &ball2], &grid),
        Err(Error::DimensionMismatch { .. })
    ));
    let d = TensorDecomposition::zero(3, 2);
    assert!(KernelValuation::new(2, d.clone(), Parity::None).is_err());
    assert!(KernelValuation::new(3, d, Parity::None).is_err());
    assert!(
        valforge::bodies::make_ellipsoid(&DMatrix::from_diagonal(&DVector::from_vec(vec![
            1.0, -1.0, 1.0
        ])))
        .is_err()
    );
}
