use concmat::matstat::{
    eigvals_hermitian, hoelder_vec_bound, kyfan_norm, opnorm_pq, opnorm_pq_oracle, partial_eig_sums, singular_values,
};
use concmat::vecnorms::conjugate;
use concmat::Matrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn real_matrix(rows: std::ops::RangeInclusive<usize>, cols: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Matrix> {
    (rows, cols).prop_flat_map(|(m, n)| {
        prop::collection::vec(-2.0f64..2.0, m * n).prop_map(move |d| Matrix::from_real(m, n, &d).unwrap())
    })
}

fn complex_matrix(m: usize, n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), m * n)
        .prop_map(move |d| Matrix::new(m, n, d.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap())
}

fn hermitian(a: &Matrix) -> Matrix {
    let h = a + &a.conj_transpose();
    h.scale(0.5)
}

/// Pairs of Hermitian matrices of one size, real or complex.
fn hermitian_pair() -> impl Strategy<Value = (Matrix, Matrix)> {
    (1usize..7, any::<bool>()).prop_flat_map(|(n, complex)| {
        let gen = move || -> BoxedStrategy<Matrix> {
            if complex {
                complex_matrix(n, n).prop_map(|a| hermitian(&a)).boxed()
            } else {
                real_matrix(n..=n, n..=n).prop_map(|a| hermitian(&a)).boxed()
            }
        };
        (gen(), gen())
    })
}

fn opnorm2(a: &Matrix) -> f64 {
    singular_values(a).unwrap().values[0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn singular_values_of_hermitian_are_absolute_eigenvalues((a, _) in hermitian_pair()) {
        let mut abs: Vec<f64> = eigvals_hermitian(&a).unwrap().values.iter().map(|x| x.abs()).collect();
        abs.sort_by(|x, y| y.total_cmp(x));
        let s = singular_values(&a).unwrap().values;
        for (x, y) in abs.iter().zip(&s) {
            prop_assert!((x - y).abs() <= 1e-9, "{abs:?} vs {s:?}");
        }
    }

    #[test]
    fn spectra_are_sorted(a in real_matrix(1..=6, 1..=6)) {
        let s = singular_values(&a).unwrap().values;
        prop_assert_eq!(s.len(), a.rows().min(a.cols()));
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn eigenvalues_are_one_lipschitz((a, b) in hermitian_pair()) {
        let d = opnorm2(&(&a - &b));
        let (ea, eb) = (eigvals_hermitian(&a).unwrap(), eigvals_hermitian(&b).unwrap());
        for (x, y) in ea.values.iter().zip(&eb.values) {
            prop_assert!((x - y).abs() <= d + 1e-9);
        }
    }

    #[test]
    fn partial_sums_lipschitz_convex_and_dual((a, b) in hermitian_pair()) {
        let n = a.rows();
        let hs = (&a - &b).hs_norm();
        let mid = (&a + &b).scale(0.5);
        let tr = a.trace().re;
        for k in 1..=n {
            let (fa, ga) = partial_eig_sums(&a, k).unwrap();
            let (fb, gb) = partial_eig_sums(&b, k).unwrap();
            let rk = (k as f64).sqrt();
            prop_assert!((fa - fb).abs() <= rk * hs + 1e-9);
            prop_assert!((ga - gb).abs() <= rk * hs + 1e-9);
            let (fm, gm) = partial_eig_sums(&mid, k).unwrap();
            prop_assert!(fm <= 0.5 * (fa + fb) + 1e-9);
            prop_assert!(gm >= 0.5 * (ga + gb) - 1e-9);
            // G_k(A) = -F_k(-A), exactly
            let (fneg, _) = partial_eig_sums(&a.scale(-1.0), k).unwrap();
            prop_assert_eq!(ga, -fneg);
            if k < n {
                let (_, g_rest) = partial_eig_sums(&a, n - k).unwrap();
                prop_assert!((fa + g_rest - tr).abs() <= 1e-9 * (1.0 + tr.abs()));
            }
        }
    }

    #[test]
    fn kyfan_is_convex(a in complex_matrix(3, 4), b in complex_matrix(3, 4)) {
        let mid = (&a + &b).scale(0.5);
        for k in 1..=3 {
            let v = kyfan_norm(&mid, k).unwrap();
            prop_assert!(v <= 0.5 * (kyfan_norm(&a, k).unwrap() + kyfan_norm(&b, k).unwrap()) + 1e-9);
        }
    }

    #[test]
    fn hoelder_dominance(a in real_matrix(1..=6, 1..=6), p in 1.05f64..=2.0, q in 2.0f64..8.0) {
        let v = opnorm_pq(&a, p, q).unwrap().value;
        prop_assert!(v <= hoelder_vec_bound(&a, p, q).unwrap() + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn duality(a in real_matrix(1..=4, 1..=4), p in 1.1f64..6.0, q in 1.1f64..6.0) {
        let direct = opnorm_pq(&a, p, q).unwrap().value;
        let dual = opnorm_pq(&a.conj_transpose(), conjugate(q), conjugate(p)).unwrap().value;
        prop_assert!((direct - dual).abs() <= 1e-6 * direct.max(1.0), "{direct} vs {dual}");
    }

    #[test]
    fn complex_duality(a in complex_matrix(3, 2), p in 1.1f64..6.0, q in 1.1f64..6.0) {
        let direct = opnorm_pq(&a, p, q).unwrap().value;
        let dual = opnorm_pq(&a.conj_transpose(), conjugate(q), conjugate(p)).unwrap().value;
        prop_assert!((direct - dual).abs() <= 1e-6 * direct.max(1.0), "{direct} vs {dual}");
    }

    #[test]
    fn ascent_matches_oracle(a in real_matrix(1..=3, 1..=3), p in 1.1f64..4.0, dq in 0.0f64..4.0) {
        let q = p + dq;
        let v = opnorm_pq(&a, p, q).unwrap().value;
        let o = opnorm_pq_oracle(&a, p, q, 256).unwrap();
        prop_assert!((v - o).abs() <= 1e-5, "solver {v}, oracle {o}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // interpolation between ‖X‖_{1→∞} = 1 and ‖X‖_{2→2} for ±1 entries
    #[test]
    fn riesz_convexity_on_sign_matrices(m in 1usize..7, n in 1usize..7, bits in prop::collection::vec(any::<bool>(), 36), q in 2.0f64..8.0) {
        let d: Vec<f64> = bits[..m * n].iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
        let a = Matrix::from_real(m, n, &d).unwrap();
        let lhs = opnorm_pq(&a, conjugate(q), q).unwrap().value;
        prop_assert!(lhs <= opnorm2(&a).powf(2.0 / q) + 1e-9);
    }
}
