mod common;

use common::*;
use metzler::*;

const CFG: SpectralConfig = SpectralConfig {
    tol: 1e-12,
    max_iter: 100_000,
    stability_tol: 1e-9,
};

#[test]
fn translation_shift_of_oscillating_example() {
    assert_eq!(translation_shift(&oscillating_3x3()), 9.0);
}

#[test]
fn plain_power_method_oscillates_but_shifted_one_converges() {
    let a = oscillating_3x3();
    let plain = plain_power_iteration(a.as_matrix(), 50, 1e-12);
    assert!(plain.oscillates(), "{plain:?}");

    let pair = selected_leading_eigenpair(&a, &CFG).unwrap();
    assert!(pair.residual <= 1e-12, "residual {}", pair.residual);
    assert!((pair.value - dense_abscissa(a.as_matrix())).abs() < 1e-10);
    assert!(pair.vector.iter().all(|&x| x > 0.0));
}

#[test]
fn diagonal_and_swap_eigenpairs() {
    let p = selected_leading_eigenpair(&metz(&[&[-1.0, 0.0], &[0.0, -4.0]]), &CFG).unwrap();
    assert!((p.value + 1.0).abs() < 1e-12);
    assert!((p.vector[0] - 1.0).abs() < 1e-12 && p.vector[1].abs() < 1e-12);

    let p = selected_leading_eigenpair(&metz(&[&[0.0, 1.0], &[1.0, 0.0]]), &CFG).unwrap();
    assert!((p.value - 1.0).abs() < 1e-12);
    assert!((p.vector[0] - 0.5).abs() < 1e-12 && (p.vector[1] - 0.5).abs() < 1e-12);
}

#[test]
fn stability_of_worked_examples() {
    let s = stable_5x5();
    assert!((spectral_abscissa(&s, &CFG).unwrap() + 1.0).abs() < 1e-10);
    assert!(is_hurwitz_stable(&s, true, &CFG).unwrap());
    assert!(!is_hurwitz_stable(&unstable_5x5(), false, &CFG).unwrap());

    let zero = MetzlerMatrix::new(Matrix::zeros(3)).unwrap();
    assert!(is_hurwitz_stable(&zero, false, &CFG).unwrap());
    assert!(!is_hurwitz_stable(&zero, true, &CFG).unwrap());

    assert!(is_schur_stable(&mat(&[&[0.5]]), true, &CFG).unwrap());
    assert!(!is_schur_stable(&schur_2x2(), false, &CFG).unwrap());
    let id = Matrix::identity(3);
    assert!(is_schur_stable(&id, false, &CFG).unwrap());
    assert!(!is_schur_stable(&id, true, &CFG).unwrap());
}

#[test]
fn metzlerize_and_norms() {
    let a = mat(&[&[-1.0, -2.0], &[3.0, -4.0]]);
    assert_eq!(metzlerize(&a).as_matrix(), &mat(&[&[-1.0, 0.0], &[3.0, -4.0]]));
    assert_eq!(metzlerize(&mat(&[&[0.0, -5.0], &[-5.0, 0.0]])).as_matrix(), &Matrix::zeros(2));
    let b = mat(&[&[1.0, -2.0], &[3.0, 4.0]]);
    assert_eq!(norm(&b, NormKind::Inf), 7.0);
    assert_eq!(norm(&b, NormKind::Max), 4.0);
    assert_eq!(norm(&b, NormKind::One), 6.0);
}

#[test]
fn hurwitz_destabilization_example() {
    let r = closest_unstable_inf_hurwitz(&stable_5x5(), &CFG).unwrap();
    assert_eq!(r.column, 2);
    assert!((r.component - 2.5).abs() < 1e-9);
    assert!((r.tau - 0.4).abs() < 1e-9);
    assert!(r.matrix.max_abs_diff(&stable_5x5_destabilized()) < 1e-9);
    assert!(dense_abscissa(&r.matrix).abs() < 1e-8);
}

#[test]
fn hurwitz_stabilization_example() {
    let r = closest_stable_inf_hurwitz(&unstable_5x5(), &StabilizeOptions::default()).unwrap();
    assert!((r.tau - 10.0).abs() < 1e-6, "tau {}", r.tau);
    assert!(r.matrix.max_abs_diff(&unstable_5x5_stabilized()) < 1e-6, "{:?}", r.matrix);
    assert!(!r.bracket_stop);
}

#[test]
fn schur_stabilization_example() {
    let opts = StabilizeOptions::default();
    let x = closest_stable_inf_schur(&schur_2x2(), false, &opts).unwrap();
    assert!((x.tau - 5.764).abs() < 1e-3, "tau {}", x.tau);
    assert!(x.matrix.max_abs_diff(&mat(&[&[0.0, 4.236], &[0.236, 0.0]])) < 1e-3);
    // The boundary is reached: rho(X) = 1.
    assert!((spectral_radius(&x.matrix, &CFG).unwrap() - 1.0).abs() < 1e-8);

    let y = closest_stable_inf_schur(&schur_2x2(), true, &opts).unwrap();
    assert!((y.tau - 5.4).abs() < 1e-3, "tau {}", y.tau);
    assert!(y.matrix.max_abs_diff(&mat(&[&[-4.4, 9.0], &[0.6, 0.0]])) < 1e-3);
    assert!(y.tau < x.tau);
}

#[test]
fn schur_destabilization_cases() {
    let r = closest_unstable_inf_schur(&Matrix::zeros(2), 1.0, &CFG).unwrap();
    assert_eq!(r.tau, 1.0);
    assert_eq!(r.matrix, mat(&[&[1.0, 0.0], &[1.0, 0.0]]));
    assert!(closest_unstable_inf_schur(&schur_2x2(), 1.0, &CFG).is_err());
}

#[test]
fn first_sign_example() {
    let m = sign_example_one();
    let r = closest_stable_sign(&m, &CFG).unwrap();
    assert_eq!(r.k, 2);
    assert!(r.eta.abs() < 1e-9);
    assert_eq!(r.matrix, sign_example_one_solution());
}

#[test]
fn second_sign_example() {
    let m = sign_example_two();
    let r = closest_stable_sign(&m, &CFG).unwrap();
    assert_eq!(r.k, 2);
    assert!((r.eta + 1.0).abs() < 1e-9);
    assert_eq!(r.matrix, sign_example_two_solution());
    assert!(r.strict);

    let (x, eta) = sign_ball_minimize(&m, 1, &CFG).unwrap();
    assert!((eta - 0.46).abs() < 1e-2, "eta {eta}");
    assert_eq!(x, sign_example_two_radius_one());
}

#[test]
fn sign_realization_of_first_example() {
    let a = sgn_realize(&sign_example_one()).unwrap();
    assert_eq!(
        a.as_matrix(),
        &mat(&[
            &[0.0, 1.0, 1.0, 1.0, 0.0],
            &[1.0, 1.0, 0.0, 1.0, 1.0],
            &[1.0, 1.0, 0.0, 0.0, 1.0],
            &[1.0, 0.0, 0.0, -1.0, 1.0],
            &[0.0, 0.0, 1.0, 1.0, 1.0],
        ])
    );
}

#[test]
fn sign_stable_pattern_survives_huge_rescaling() {
    let small = mat(&[
        &[-1.0, 1.0, 0.0, 0.0, 0.0],
        &[0.0, -1.0, 0.0, 0.0, 1.0],
        &[0.0, 1.0, -1.0, 0.0, 0.0],
        &[1.0, 1.0, 0.0, -1.0, 1.0],
        &[0.0, 0.0, 0.0, 0.0, -1.0],
    ]);
    let s = SignMatrix::of(&small);
    assert!(is_sign_stable(&s, true, &CFG).unwrap());
    let big = MetzlerMatrix::new(small.map(|x| if x > 0.0 { 1e9 } else { x * 1e-9 })).unwrap();
    assert!(is_hurwitz_stable(&big, true, &CFG).unwrap());
}

#[test]
fn switching_system_by_signs() {
    let sys = SwitchingSystem::new(lss_modes()).unwrap();
    let r = stabilize_lss_by_signs(&sys, &CFG).unwrap();
    assert_eq!(r.sum, lss_sum());
    assert!((r.sum_eta - 1.303).abs() < 1e-3);
    assert_eq!(r.k_star, 1);
    assert_eq!(r.target, lss_target());
    for (got, want) in r.system.modes().iter().zip(lss_cut_modes()) {
        assert_eq!(SignMatrix::of(got), SignMatrix::of(&want));
    }
    assert_eq!(r.mode_distances, vec![1, 1, 1]);
    assert_eq!(SignMatrix::sum(&r.mode_signs).unwrap(), r.target);
    // The pattern keeps the cycle 2 -> 4 -> 2, so stability is only weak.
    assert!(r.eta.abs() < 1e-9);
    assert!(!r.strict);
}

#[test]
fn already_stable_single_mode_is_unchanged() {
    let a = metz(&[&[-1.0, 2.0], &[0.0, -3.0]]);
    let sys = SwitchingSystem::new(vec![a]).unwrap();
    let r = stabilize_lss_by_signs(&sys, &CFG).unwrap();
    assert_eq!(r.system, sys);
    assert_eq!(r.k_star, 0);
    assert!(r.strict);
}

#[test]
fn max_norm_small_cases() {
    let r = closest_unstable_max(&metz(&[&[-1.0, 0.0], &[0.0, -1.0]]), &CFG).unwrap();
    assert!((r.tau - 0.5).abs() < 1e-15);
    assert!(dense_abscissa(&r.matrix).abs() < 1e-12);

    let r = closest_stable_max(&metz(&[&[0.0, 2.0], &[2.0, 0.0]]), &CFG).unwrap();
    assert!((r.tau - 1.0).abs() < 1e-12);
}
