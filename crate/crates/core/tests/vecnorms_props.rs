use concmat::vecnorms::{
    conjugate, ke_bound, ke_numeric, lorentz_norm, lp_norm, orlicz_norm, LorentzWeights, OrliczFunction, OrliczKind,
    UnconditionalNorm,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn weights(n: usize) -> impl Strategy<Value = LorentzWeights> {
    prop::collection::vec(0.05f64..3.0, n).prop_map(|mut w| {
        w.sort_by(|a, b| b.total_cmp(a));
        LorentzWeights::new(w).unwrap()
    })
}

fn psi() -> impl Strategy<Value = OrliczFunction> {
    prop_oneof![
        (1.0f64..5.0).prop_map(|p| OrliczFunction::power(p).unwrap()),
        (0.3f64..3.0, 1.0f64..4.0).prop_map(|(c, p)| OrliczFunction::new(OrliczKind::ScaledPower { c, p }).unwrap()),
        // convex: slopes increase along the pieces
        (prop::collection::vec(0.1f64..1.5, 1..4), prop::collection::vec(0.1f64..3.0, 1..4)).prop_map(|(dx, mut s)| {
            s.sort_by(f64::total_cmp);
            let mut bp = vec![(0.0, 0.0)];
            for (d, sl) in dx.iter().zip(&s) {
                let (x, y) = *bp.last().unwrap();
                bp.push((x + d, y + sl * d));
            }
            OrliczFunction::new(OrliczKind::PiecewiseLinear { breakpoints: bp }).unwrap()
        }),
    ]
}

fn norm(n: usize) -> impl Strategy<Value = UnconditionalNorm> {
    prop_oneof![
        (1.0f64..8.0).prop_map(move |q| UnconditionalNorm::lq(q, n).unwrap()),
        Just(UnconditionalNorm::lq(f64::INFINITY, n).unwrap()),
        (weights(n), 1.0f64..4.0).prop_map(|(w, p)| UnconditionalNorm::lorentz(w, p).unwrap()),
        psi().prop_map(move |f| UnconditionalNorm::orlicz(f, n).unwrap()),
    ]
}

fn norm_and_vecs(k: usize) -> impl Strategy<Value = (UnconditionalNorm, Vec<Vec<f64>>)> {
    (1usize..7).prop_flat_map(move |n| (norm(n), prop::collection::vec(prop::collection::vec(-3.0f64..3.0, n), k)))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn norms_are_unconditional((e, vs) in norm_and_vecs(1), signs in prop::collection::vec(any::<bool>(), 6), rot in 0usize..6) {
        let v = &vs[0];
        let n = v.len();
        let mut w: Vec<f64> = (0..n).map(|j| v[(j + rot) % n]).collect();
        for (x, s) in w.iter_mut().zip(&signs) {
            if *s {
                *x = -*x;
            }
        }
        prop_assert!(close(e.norm(v).unwrap(), e.norm(&w).unwrap(), 1e-12));
    }

    #[test]
    fn triangle_and_homogeneity((e, vs) in norm_and_vecs(2), c in -4.0f64..4.0) {
        let (u, v) = (&vs[0], &vs[1]);
        let sum: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
        let nu = e.norm(u).unwrap();
        let nv = e.norm(v).unwrap();
        prop_assert!(e.norm(&sum).unwrap() <= nu + nv + 1e-10 * (nu + nv).max(1.0));
        let cu: Vec<f64> = u.iter().map(|a| c * a).collect();
        prop_assert!(close(e.norm(&cu).unwrap(), c.abs() * nu, 1e-10));
    }

    #[test]
    fn lp_matches_direct_formula(v in prop::collection::vec(-5.0f64..5.0, 1..9), p in 1.0f64..9.0) {
        let direct = v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p);
        prop_assert!(close(lp_norm(&v, p).unwrap(), direct, 1e-12));
        let z: Vec<Complex64> = v.iter().map(|&x| Complex64::from_polar(x.abs(), x)).collect();
        prop_assert!(close(lp_norm(&z, p).unwrap(), direct, 1e-12));
        let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert_eq!(lp_norm(&v, f64::INFINITY).unwrap(), max);
    }

    #[test]
    fn lorentz_and_orlicz_agree_with_lq(v in prop::collection::vec(-5.0f64..5.0, 1..9), q in 1.0f64..6.0) {
        let l = lp_norm(&v, q).unwrap();
        prop_assert!(close(lorentz_norm(&v, &LorentzWeights::ones(v.len()), q).unwrap(), l, 1e-12));
        prop_assert!(close(orlicz_norm(&v, &OrliczFunction::power(q).unwrap()), l, 1e-9));
    }

    #[test]
    fn ke_is_nondecreasing((e, _) in norm_and_vecs(0), a in 0.01f64..1.0, b in 0.01f64..1.0) {
        let top = e.ones_norm();
        let (lo, hi) = (a.min(b) * top, a.max(b) * top);
        let k_lo = ke_numeric(&e, lo).unwrap();
        let k_hi = ke_numeric(&e, hi).unwrap();
        prop_assert!(k_lo <= k_hi * (1.0 + 1e-9) + 1e-12, "K({lo}) = {k_lo} > K({hi}) = {k_hi}");
    }

    #[test]
    fn ke_dominates_closed_form_bound((e, _) in norm_and_vecs(0), a in 0.01f64..1.0) {
        let t = a * e.ones_norm();
        let k = ke_numeric(&e, t).unwrap();
        let rs: Vec<Option<f64>> = match &e.kind {
            concmat::vecnorms::NormKind::Lorentz { p, .. } => {
                let mut r = vec![Some(2.0)];
                if *p < 2.0 {
                    r.push(Some(conjugate(2.0 / p)));
                }
                r
            }
            _ => vec![None],
        };
        for r in rs {
            let b = ke_bound(&e, t, r).unwrap();
            prop_assert!(k >= b - 1e-8, "ke_numeric {k} < ke_bound {b} at t = {t}, r = {r:?}");
        }
    }
}

#[test]
fn ke_sharp_at_integer_levels() {
    for q in [2.0, 2.5, 3.0, 4.0, 6.0, 8.0] {
        for n in 1..=12 {
            let e = UnconditionalNorm::lq(q, n).unwrap();
            for k in 1..=n {
                let v = ke_numeric(&e, (k as f64).powf(1.0 / q)).unwrap();
                assert!((v - (k as f64).sqrt()).abs() <= 1e-9, "q = {q}, n = {n}, k = {k}: {v}");
            }
        }
    }
}

/// Smallest Euclidean norm over grid points of `[0,1]^n` with `‖x‖_E ≥ t`.
fn grid_min(e: &UnconditionalNorm, t: f64, steps: usize) -> f64 {
    let n = e.dim;
    let h = 1.0 / steps as f64;
    let mut idx = vec![0usize; n];
    let mut best = f64::INFINITY;
    let mut x = vec![0.0; n];
    loop {
        for (xi, &i) in x.iter_mut().zip(&idx) {
            *xi = i as f64 * h;
        }
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2.sqrt() < best && e.norm(&x).unwrap() >= t {
            best = r2.sqrt();
        }
        let mut j = 0;
        loop {
            if j == n {
                return best;
            }
            idx[j] += 1;
            if idx[j] <= steps {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

fn grid_norm() -> impl Strategy<Value = UnconditionalNorm> {
    (2usize..=4).prop_flat_map(|n| {
        prop_oneof![
            (1.0f64..8.0).prop_map(move |q| UnconditionalNorm::lq(q, n).unwrap()),
            (weights(n), 1.0f64..4.0).prop_map(|(w, p)| UnconditionalNorm::lorentz(w, p).unwrap()),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    // Rounding a minimizer up to the grid keeps it feasible (the norm is
    // monotone in each |x_j|) and moves it by at most h√n.
    #[test]
    fn ke_matches_grid_oracle(e in grid_norm(), a in 0.02f64..0.98) {
        let n = e.dim;
        let steps = match n { 2 => 600, 3 => 80, _ => 24 };
        let t = a * e.ones_norm();
        let k = ke_numeric(&e, t).unwrap();
        let g = grid_min(&e, t, steps);
        let slack = (n as f64).sqrt() / steps as f64;
        prop_assert!(k <= g + 1e-12, "numeric {k} above grid {g}");
        prop_assert!(g <= k + slack + 1e-12, "grid {g} too far above numeric {k}");
    }
}

#[test]
fn ke_infinite_beyond_the_cube() {
    let e = UnconditionalNorm::lq(3.0, 4).unwrap();
    assert!(ke_numeric(&e, e.ones_norm() * 1.01).unwrap().is_infinite());
    assert!(ke_numeric(&e, 0.0).is_err());
}
