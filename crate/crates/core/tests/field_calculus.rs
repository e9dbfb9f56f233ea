mod common;

use ksq_core::connections::covariant_derivative_11;
use ksq_core::field::finite_diff_matrix_field;
use ksq_core::kahler::j_field;
use ksq_core::tensor::ConnectionCoeffs;
use ksq_core::zoo;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn dual_partials_match_richardson_differences_on_zoo_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for entry in zoo::all() {
        let m = entry.spec.compile().unwrap();
        for _ in 0..10 {
            let p: Vec<f64> = (0..m.dim()).map(|_| rng.gen_range(-0.9..0.9)).collect();
            for field in [&m.metric, &m.omega] {
                let jet = field.eval_jet(&p).unwrap();
                let fd = finite_diff_matrix_field(|x| field.value_at(x), &p, 1e-5).unwrap();
                let err = jet.partials.max_abs_diff(&fd).unwrap();
                assert!(err <= 1e-8, "{} at {p:?}: {err:e}", entry.name);
            }
        }
    }
}

#[test]
fn j_field_differences_are_step_consistent() {
    for name in ["fs_product_4d", "hyperbolic_area", "kodaira_thurston"] {
        let m = zoo::builtin(name).unwrap().spec.compile().unwrap();
        let j = j_field(&m);
        for p in m.domain.samples() {
            let coarse = finite_diff_matrix_field(&j, p, 1e-3).unwrap();
            let fine = finite_diff_matrix_field(&j, p, 1e-4).unwrap();
            let err = coarse.max_abs_diff(&fine).unwrap();
            assert!(err <= 1e-8, "{name} at {p:?}: {err:e}");
        }
    }
}

#[test]
fn flat_standard_structure_is_parallel_for_the_zero_connection() {
    let m = zoo::builtin("flat_standard")
        .unwrap()
        .spec
        .compile()
        .unwrap();
    let j = j_field(&m);
    for p in m.domain.samples() {
        let dj = finite_diff_matrix_field(&j, p, 1e-4).unwrap();
        let nabla =
            covariant_derivative_11(&dj, &j(p).unwrap(), &ConnectionCoeffs::zeros(2)).unwrap();
        assert!(nabla.max_abs() <= 1e-8);
    }
}
