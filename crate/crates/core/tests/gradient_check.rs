mod common;

use holo_restore::autoencoder::{accumulate_gradients, backward, AeParams};

#[test]
fn backward_matches_central_differences() {
    let mut rng = common::rng(2024);
    for case in 0..100 {
        let inst = common::random_instance(&mut rng);
        let analytic: Vec<f64> = backward(&inst.params, &inst.x, &inst.target, inst.mask.as_ref())
            .unwrap()
            .iter()
            .copied()
            .collect();
        let numeric = common::numerical_gradient(&inst);
        let err = common::worst_relative_error(&analytic, &numeric);
        assert!(err < common::FD_TOLERANCE, "case {case}: relative error {err}");
    }
}

#[test]
fn accumulation_is_a_sum_of_single_sample_gradients() {
    let mut rng = common::rng(7);
    let a = common::random_instance(&mut rng);
    let ga = backward(&a.params, &a.x, &a.target, None).unwrap();
    let mut twice = AeParams::zeros(a.params.n_in(), a.params.n_hidden());
    for _ in 0..2 {
        accumulate_gradients(&a.params, &a.x, &a.target, None, &mut twice).unwrap();
    }
    for (g, t) in ga.iter().zip(twice.iter()) {
        assert_eq!(2.0 * g, *t);
    }
}
