mod common;

use common::{random_metric_jet, random_omega_jet, random_symmetric_connection};
use ksq_core::connections::{
    metric_connection_with_torsion, metric_preservation_residual, omega_connection_closed_form,
    omega_connection_from_sym, omega_preservation_residual,
};
use ksq_core::sequence::{trace_point, Period, SequenceConfig, COLLAPSE_SLACK};
use ksq_core::tensor::{symmetric_part, torsion, Tensor3, TorsionTensor};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn omega_connection_round_trips(seed in any::<u64>(), half in 1usize..=2) {
        let n = 2 * half;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_omega_jet(n, &mut rng);
        let pi = random_symmetric_connection(n, &mut rng);
        let gamma = omega_connection_from_sym(&pi, &w).unwrap().value;
        prop_assert!(symmetric_part(&gamma).tensor().max_abs_diff(pi.tensor()).unwrap() <= 1e-12 * pi.max_abs().max(1.0));
        prop_assert!(omega_preservation_residual(&gamma, &w).unwrap().max_abs() <= 1e-10);
        let again = omega_connection_from_sym(&symmetric_part(&gamma), &w).unwrap().value;
        prop_assert!(again.tensor().max_abs_diff(gamma.tensor()).unwrap() <= 1e-10);
        let closed = omega_connection_closed_form(&pi, &w).unwrap();
        prop_assert!(closed.tensor().max_abs_diff(gamma.tensor()).unwrap() <= 1e-10);
    }

    #[test]
    fn prescribed_torsion_is_realized(seed in any::<u64>(), half in 1usize..=2) {
        let n = 2 * half;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_metric_jet(n, &mut rng);
        let t = TorsionTensor::new(common::random_partials(n, false, &mut rng)).unwrap();
        let gamma = metric_connection_with_torsion(&t, &g).unwrap().value;
        prop_assert!(torsion(&gamma).tensor().max_abs_diff(t.tensor()).unwrap() <= 1e-12);
        prop_assert!(metric_preservation_residual(&gamma, &g).unwrap().max_abs() <= 1e-10);
    }

    #[test]
    fn traces_satisfy_structure_and_collapse(seed in any::<u64>(), half in 1usize..=2) {
        let n = 2 * half;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_metric_jet(n, &mut rng);
        let w = random_omega_jet(n, &mut rng);
        let cfg = SequenceConfig { max_steps: 6, ..SequenceConfig::default() };
        let t = trace_point(&vec![0.0; n], &g, &w, &cfg).unwrap();
        let c = t.collapse.unwrap();
        prop_assert!(c.d1 <= c.d2 + COLLAPSE_SLACK, "{c:?}");
        prop_assert!(t.invariants.hold(), "{:?}", t.invariants);
        let period_two = Some(Period { preperiod: 0, period: 2 });
        prop_assert_ne!(t.period, period_two);
        prop_assert!(t.triviality_bounds.unwrap().consistent);
    }
}

#[test]
fn zero_seed_torsion_reproduces_the_levi_civita_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = random_metric_jet(4, &mut rng);
    let w = random_omega_jet(4, &mut rng);
    let plain = trace_point(&[0.0; 4], &g, &w, &SequenceConfig::default()).unwrap();
    let seeded = trace_point(
        &[0.0; 4],
        &g,
        &w,
        &SequenceConfig {
            seed_torsion: Some(TorsionTensor::new(Tensor3::zeros(4)).unwrap()),
            ..SequenceConfig::default()
        },
    )
    .unwrap();
    assert_eq!(plain.connections, seeded.connections);
    assert_eq!(plain.distances_to_first, seeded.distances_to_first);
    assert_eq!(plain.period, seeded.period);
}
