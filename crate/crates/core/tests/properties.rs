mod common;

use proptest::prelude::*;

use mhd_core::analysis::convergence_orders;
use mhd_core::linalg::CsrMatrix;

#[test]
fn mesh_topology_on_levels_0_to_2() {
    for level in 0..=2 {
        common::mesh_topology(level).unwrap();
    }
}

#[test]
fn spd_blocks_on_levels_0_to_2() {
    for level in 0..=2 {
        common::spd_blocks(level, 3).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn relabeling_keeps_counts_and_boundary(level in 0u32..=2, seed in any::<u64>()) {
        prop_assert_eq!(common::permutation_stability(level, seed), Ok(()));
    }

    #[test]
    fn sequence_inclusions_hold(level in 0u32..=2, seed in any::<u64>()) {
        prop_assert_eq!(common::complex_inclusions(level, 2, seed), Ok(()));
    }

    #[test]
    fn traces_are_continuous(level in 0u32..=2, seed in any::<u64>()) {
        prop_assert_eq!(common::trace_continuity(level, 1, seed), Ok(()));
    }

    #[test]
    fn dof_functionals_reproduce_members(level in 0u32..=2, seed in any::<u64>()) {
        prop_assert_eq!(common::unisolvence(level, seed), Ok(()));
    }
}

fn triplets(n: usize) -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
    prop::collection::vec((0..n, 0..n, -10.0f64..10.0), 0..4 * n)
}

proptest! {
    #[test]
    fn spmv_matches_dense_product(t in triplets(12), x in prop::collection::vec(-1.0f64..1.0, 12)) {
        let a = CsrMatrix::from_triplets(12, 12, t.clone());
        let mut dense = [[0.0; 12]; 12];
        for (i, j, v) in t {
            dense[i][j] += v;
        }
        let y = a.spmv(&x).unwrap();
        for i in 0..12 {
            let expect: f64 = (0..12).map(|j| dense[i][j] * x[j]).sum();
            prop_assert!((y[i] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn csr_rows_stay_sorted_and_transpose_is_an_involution(t in triplets(9)) {
        let a = CsrMatrix::from_triplets(9, 9, t);
        for i in 0..9 {
            let (cols, _) = a.row(i);
            prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
        prop_assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn orders_recover_the_rate_of_power_laws(c in 0.01f64..100.0, p in 0.5f64..3.0, levels in 2usize..6) {
        let h: Vec<f64> = (0..levels).map(|k| 0.5f64.powi(k as i32)).collect();
        let e: Vec<f64> = h.iter().map(|h| c * h.powf(p)).collect();
        for o in convergence_orders(&h, &e) {
            prop_assert!((o.unwrap() - p).abs() <= 1e-10);
        }
    }
}
