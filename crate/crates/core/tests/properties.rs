//! Property tests for the numerical kernels.

use proptest::prelude::*;

use simec_core::linalg::{dot, jacobi_eigen, norm, Matrix};
use simec_core::metric::{
    select_direction, spectral_decompose, EigenDirection, MetricTensor, DEFAULT_TAU_REL,
};
use simec_core::trainer::{denormalize, normalize, Dataset};

fn arb_factor(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(
        prop::collection::vec(-3.0..3.0f64, dim),
        dim,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Random Gram matrices AᵀA are symmetric PSD; the decomposition must
    // reconstruct them and produce an orthonormal eigenbasis.
    #[test]
    fn jacobi_reconstruction_and_orthonormality(rows in arb_factor(3)) {
        let a = Matrix::from_rows(&rows).unwrap();
        let gram = a.transpose().matmul(&a).unwrap().symmetrized();
        let eig = jacobi_eigen(&gram).unwrap();
        let lambda_max = eig.values.last().copied().unwrap().max(0.0);

        for r in 0..3 {
            for c in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += eig.values[k] * eig.vectors[(r, k)] * eig.vectors[(c, k)];
                }
                prop_assert!((acc - gram[(r, c)]).abs() <= 1e-10 * lambda_max.max(1.0));
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(&eig.vectors.column(i), &eig.vectors.column(j));
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - expected).abs() <= 1e-10);
            }
        }
        // PSD up to noise.
        prop_assert!(eig.values[0] >= -1e-10 * lambda_max.max(1.0));
    }

    // Rank-deficient pullbacks through a 1-row factor: the null direction has
    // a vanishing quadratic form and sign selection is idempotent.
    #[test]
    fn null_direction_invariants(row in prop::collection::vec(-2.0..2.0f64, 2),
                                 flip in any::<bool>()) {
        prop_assume!(norm(&row) > 1e-3);
        let a = Matrix::from_rows(&[row]).unwrap();
        let gram = a.transpose().matmul(&a).unwrap().symmetrized();
        let g = MetricTensor::new(vec![0.0, 0.0], gram).unwrap();
        let dec = spectral_decompose(&g, DEFAULT_TAU_REL).unwrap();
        prop_assert_eq!(dec.null_count(), 1);

        let lambda_max = dec.eigenvalues()[1];
        let v0 = select_direction(&dec, EigenDirection::Null, None).unwrap();
        prop_assert!(g.quadratic_form(&v0).abs() <= 1e-9 * lambda_max);
        prop_assert!((norm(&v0) - 1.0).abs() <= 1e-12);

        let prev: Vec<f64> = if flip { v0.iter().map(|c| -c).collect() } else { v0.clone() };
        let w = select_direction(&dec, EigenDirection::Null, Some(&prev)).unwrap();
        prop_assert!(dot(&w, &prev) >= 0.0);
        let w2 = select_direction(&dec, EigenDirection::Null, Some(&w)).unwrap();
        prop_assert_eq!(w, w2);
    }

    // Min-max normalization round-trips and lands in [0, 1].
    #[test]
    fn normalization_round_trip(xs in prop::collection::vec(-100.0..100.0f64, 3..20)) {
        let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - xs.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-6);
        let data = Dataset {
            inputs: xs.iter().map(|x| vec![*x]).collect(),
            targets: xs.iter().map(|x| vec![x * 2.0 + 1.0]).collect(),
            normalization: None,
        };
        let normed = normalize(&data).unwrap();
        for v in normed.inputs.iter().chain(normed.targets.iter()).flatten() {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(v));
        }
        let back = denormalize(&normed).unwrap();
        for (a, b) in back.inputs.iter().flatten().zip(data.inputs.iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}
