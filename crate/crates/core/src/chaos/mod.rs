//! Truncated Wiener-Ito chaos expansions in Wick-Hermite coordinates.

mod io;
mod layout;
mod multi_index;
pub mod tensor;
mod vector;

pub use io::{read_chaos, write_chaos};
pub use layout::BasisLayout;
pub use multi_index::{count_multi_indices, factorial, for_each_multi_index, ln_factorial, MultiIndex};
pub use vector::{ChaosVector, Norm};

pub(crate) use vector::{exp_series_tail, wick_exp_coefficient, Accumulator};

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn layout() -> Arc<BasisLayout> {
        BasisLayout::new(1, 6, 5).unwrap()
    }

    fn sparse_vector() -> impl Strategy<Value = ChaosVector> {
        proptest::collection::vec((proptest::collection::vec(0u32..3, 6), -2.0f64..2.0), 0..12)
            .prop_map(|entries| {
                let l = layout();
                let coeffs = entries
                    .into_iter()
                    .map(|(dense, c)| (MultiIndex::from_dense(&dense), c))
                    .filter(|(a, _)| a.order() <= 5);
                ChaosVector::from_coeffs(&l, coeffs).unwrap()
            })
    }

    proptest! {
        #[test]
        fn norm_monotone_in_p(f in sparse_vector(), p in -4i32..4) {
            prop_assert!(f.norm_value(p) <= f.norm_value(p + 1));
        }

        #[test]
        fn isometry_by_order_grouping(f in sparse_vector()) {
            let grouped: f64 = f.order_masses().iter().sum();
            let direct = f.norm_value(0).powi(2);
            prop_assert!((grouped - direct).abs() <= 1e-14 * direct.max(1.0));
        }

        #[test]
        fn duality_bound(f in sparse_vector(), g in sparse_vector(), q in -3i32..=3) {
            let pair = f.pairing(&g).unwrap();
            let bound = f.norm_value(-q) * g.norm_value(q);
            prop_assert!(pair.abs() <= bound * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn s_transform_linear(
            f in sparse_vector(), g in sparse_vector(),
            a in -3.0f64..3.0, b in -3.0f64..3.0,
            phi in proptest::collection::vec(-1.0f64..1.0, 6),
        ) {
            let lhs = f.linear_combination(a, &g, b).unwrap().s_transform(&phi);
            let rhs = a * f.s_transform(&phi) + b * g.s_transform(&phi);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn projection_contracts(f in sparse_vector(), m in 0usize..6, p in -2i32..3) {
            prop_assert!(f.project_order(m).norm_value(p) <= f.norm_value(p));
            let pm = f.project_order(m);
            prop_assert_eq!(pm.project_order(m), pm);
        }
    }

    #[test]
    fn projection_converges_for_wick_exponential() {
        let l = BasisLayout::new(1, 2, 30).unwrap();
        let f = ChaosVector::wick_exp(&l, &[0.3, -0.2]).unwrap();
        for p in [0, 1, 2] {
            let mut last = f64::INFINITY;
            for m in 0..30 {
                let d = f.sub(&f.project_order(m)).unwrap().norm_value(p);
                assert!(d < last, "p={p} m={m}");
                last = d;
            }
            assert_eq!(f.sub(&f.project_order(30)).unwrap().norm_value(p), 0.0);
        }
    }

    #[test]
    fn exponential_pairing_and_s_transform() {
        let l = BasisLayout::new(1, 3, 40).unwrap();
        let f = [0.5, -0.4, 0.3];
        let g = [0.2, 0.6, -0.5];
        let ef = ChaosVector::wick_exp(&l, &f).unwrap();
        let eg = ChaosVector::wick_exp(&l, &g).unwrap();
        let fg: f64 = f.iter().zip(&g).map(|(a, b)| a * b).sum();
        let pair = ef.pairing(&eg).unwrap();
        assert!((pair / fg.exp() - 1.0).abs() < 1e-12);
        let phi = [0.3, 0.1, -0.7];
        let fphi: f64 = f.iter().zip(&phi).map(|(a, b)| a * b).sum();
        assert!((ef.s_transform(&phi) / fphi.exp() - 1.0).abs() < 1e-12);
    }
}
