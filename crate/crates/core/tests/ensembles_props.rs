use std::f64::consts::SQRT_2;

use concmat::ensembles::{effective_diameter, BoundedLaw, EnsembleSpec, Layout, OffDiagMode, OneOrMany};
use concmat::rng::RngStream;
use proptest::prelude::*;

fn law() -> impl Strategy<Value = BoundedLaw> {
    prop_oneof![
        Just(BoundedLaw::Rademacher),
        (-3.0f64..3.0, 0.01f64..4.0).prop_map(|(a, w)| BoundedLaw::Uniform { a, b: a + w }),
        (-3.0f64..3.0, -3.0f64..3.0, 0.0f64..=1.0).prop_map(|(v1, v2, prob)| BoundedLaw::TwoPoint { v1, v2, prob }),
        prop::collection::vec((-3.0f64..3.0, 0.1f64..1.0), 1..5).prop_map(|vp| {
            let total: f64 = vp.iter().map(|(_, p)| p).sum();
            let mut probs: Vec<f64> = vp.iter().map(|(_, p)| p / total).collect();
            let head: f64 = probs[..probs.len() - 1].iter().sum();
            *probs.last_mut().unwrap() = 1.0 - head;
            BoundedLaw::Discrete { values: vp.iter().map(|(v, _)| *v).collect(), probs }
        }),
        (0.0f64..=1.0).prop_map(|prob| BoundedLaw::Bernoulli01 { prob }),
        (0.01f64..3.0).prop_map(|radius| BoundedLaw::ComplexDiscUniform { radius }),
    ]
}

fn real_law() -> impl Strategy<Value = BoundedLaw> {
    law().prop_filter("real", BoundedLaw::is_real)
}

fn offdiag() -> impl Strategy<Value = OffDiagMode> {
    prop_oneof![
        law().prop_map(|law| OffDiagMode::DiameterSet { law }),
        (0.0f64..=1.0, -3.0f64..3.0, -1.0f64..1.0, real_law(), real_law()).prop_map(|(modulus, angle, angle_step, alpha, beta)| {
            OffDiagMode::RotatedProduct { modulus, angle, angle_step, alpha, beta }
        }),
    ]
}

fn selfadjoint() -> impl Strategy<Value = EnsembleSpec> {
    (1usize..7, real_law(), prop::collection::vec(offdiag(), 1..3)).prop_map(|(n, diag, modes)| EnsembleSpec {
        m: n,
        n,
        layout: Layout::SelfAdjoint {
            diag,
            offdiag: if modes.len() == 1 { OneOrMany::One(modes[0].clone()) } else { OneOrMany::Many(modes) },
        },
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rectangular_entries_lie_in_the_support(l in law(), m in 1usize..6, n in 1usize..6, seed in any::<u64>()) {
        let spec = EnsembleSpec::rectangular(m, n, l.clone());
        let a = spec.sample(RngStream::for_trial(seed, 0)).unwrap();
        for i in 0..m {
            for j in 0..n {
                prop_assert!(l.contains(a[(i, j)]), "{:?} not in {l:?}", a[(i, j)]);
            }
        }
        prop_assert!(effective_diameter(&spec).unwrap() == l.diameter());
    }

    #[test]
    fn selfadjoint_samples_are_hermitian(spec in selfadjoint(), seed in any::<u64>(), trial in 0u64..1000) {
        let a = spec.sample(RngStream::for_trial(seed, trial)).unwrap();
        let n = spec.n;
        let Layout::SelfAdjoint { diag, .. } = &spec.layout else { unreachable!() };
        for j in 0..n {
            prop_assert_eq!(a[(j, j)].im, 0.0);
            prop_assert!(diag.contains(a[(j, j)]));
            for k in 0..n {
                prop_assert_eq!(a[(j, k)], a[(k, j)].conj());
            }
        }
    }

    #[test]
    fn same_stream_same_matrix(spec in selfadjoint(), seed in any::<u64>(), trial in any::<u64>()) {
        let s = RngStream::for_trial(seed, trial);
        prop_assert_eq!(spec.sample(s).unwrap(), spec.sample(s).unwrap());
    }

    #[test]
    fn scaling_scales_every_entry(spec in selfadjoint(), s in 0.1f64..10.0, seed in any::<u64>()) {
        let st = RngStream::for_trial(seed, 3);
        let a = spec.sample(st).unwrap();
        let b = spec.scaled(s).sample(st).unwrap();
        for j in 0..spec.n {
            for k in 0..spec.n {
                let want = a[(j, k)] * s;
                prop_assert!((b[(j, k)] - want).norm() <= 1e-12 * want.norm().max(1.0));
            }
        }
        let (d, ds) = (effective_diameter(&spec).unwrap(), effective_diameter(&spec.scaled(s)).unwrap());
        prop_assert!((ds - s * d).abs() <= 1e-12 * (s * d).max(1.0));
    }
}

#[test]
fn effective_diameter_examples() {
    let rect = |l| effective_diameter(&EnsembleSpec::rectangular(3, 3, l)).unwrap();
    assert_eq!(rect(BoundedLaw::Rademacher), 2.0);
    assert_eq!(rect(BoundedLaw::Uniform { a: 0.0, b: 1.0 }), 1.0);
    // diagonal interval of length 2√2 allows D = 2, as do ±1 off the diagonal
    let half = SQRT_2;
    let sym = EnsembleSpec::symmetric(4, BoundedLaw::Uniform { a: -half, b: half }, BoundedLaw::Rademacher);
    assert!((effective_diameter(&sym).unwrap() - 2.0).abs() < 1e-15);
    // a wide diagonal dominates
    let sym = EnsembleSpec::symmetric(4, BoundedLaw::Uniform { a: -4.0, b: 4.0 }, BoundedLaw::Rademacher);
    assert!((effective_diameter(&sym).unwrap() - 8.0 / SQRT_2).abs() < 1e-12);
    let g = EnsembleSpec::gaussian_hermitian(4, 0.5, 1.0);
    assert!(matches!(effective_diameter(&g), Err(concmat::Error::UnboundedSupport(_))));
}

#[test]
fn distinct_trials_decorrelate() {
    // 2×2 Rademacher entries over many trials: each pair correlation is O(1/√trials)
    let spec = EnsembleSpec::rectangular(2, 2, BoundedLaw::Rademacher);
    let trials = 10_000;
    let samples: Vec<Vec<f64>> = (0..trials)
        .map(|t| {
            let a = spec.sample(RngStream::for_trial(42, t)).unwrap();
            (0..4).map(|i| a[(i / 2, i % 2)].re).collect()
        })
        .collect();
    for i in 0..4 {
        for j in i + 1..4 {
            let c: f64 = samples.iter().map(|s| s[i] * s[j]).sum::<f64>() / trials as f64;
            assert!(c.abs() <= 4.0 / (trials as f64).sqrt(), "entries {i}, {j}: {c}");
        }
    }
}
