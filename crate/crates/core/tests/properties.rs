//! Property tests of the symmetry and scaling invariants.

use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;
use spmb::corrector::{build_symmetric_basis, BasisSpec};
use spmb::energy::{evaluate_ansatz, MultiBumpAnsatz};
use spmb::geometry::{inverse_distance_sum, BumpConfiguration};
use spmb::groundstate::{find_ground_state, GroundStateProfile};
use spmb::potentials::PotentialModel;

fn cubic() -> &'static GroundStateProfile {
    static PROFILE: OnceLock<GroundStateProfile> = OnceLock::new();
    PROFILE.get_or_init(|| find_ground_state(3.0, 1e-12).unwrap())
}

fn rotate(x: &[f64; 3], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    [c * x[0] - s * x[1], s * x[0] + c * x[1], x[2]]
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ansatz_lies_in_the_symmetry_class(
        k in 2usize..40,
        r in 3.0f64..60.0,
        x in prop::array::uniform3(-80.0f64..80.0),
    ) {
        let a = MultiBumpAnsatz::new(BumpConfiguration::new(k, r).unwrap(), cubic(), PotentialModel::constant(0.0));
        let v = evaluate_ansatz(&a, &x);
        prop_assert!(v > 0.0);
        prop_assert!(close(v, evaluate_ansatz(&a, &rotate(&x, 2.0 * PI / k as f64))));
        prop_assert!(close(v, evaluate_ansatz(&a, &[x[0], -x[1], x[2]])));
        prop_assert!(close(v, evaluate_ansatz(&a, &[x[0], x[1], -x[2]])));
    }

    #[test]
    fn inverse_distance_sum_scales_inversely(k in 2usize..3000, r in 0.1f64..100.0, lambda in 0.01f64..100.0) {
        let base = inverse_distance_sum(k, r).unwrap().exact;
        let scaled = inverse_distance_sum(k, lambda * r).unwrap().exact;
        prop_assert!((scaled * lambda - base).abs() <= 1e-12 * base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn basis_functions_lie_in_the_symmetry_class(k in 6usize..24, seed in any::<u64>()) {
        let r = 2.0 / PI * k as f64 * (k as f64).ln();
        let basis = build_symmetric_basis(BumpConfiguration::new(k, r).unwrap(), cubic(), &BasisSpec::default()).unwrap();
        prop_assert!(basis.symmetry_defect(64, seed) < 1e-12);
    }
}
