use concmat::ensembles::{BoundedLaw, EnsembleSpec};
use concmat::harness::{
    run_tail_experiment, BoundEnvelope, EnvelopeKind, Exponent, ExperimentConfig, OutputFormat, StatisticSpec, TGrid,
    TailReport, Verdict,
};
use concmat::vecnorms::UnconditionalNorm;

fn cfg(ensemble: EnsembleSpec, statistic: StatisticSpec, envelope: EnvelopeKind, trials: u64, grid: Option<Vec<f64>>) -> ExperimentConfig {
    ExperimentConfig {
        name: "x".into(),
        trials,
        seed: 77,
        outputs: vec![OutputFormat::Json],
        t_grid: grid.map(TGrid::Values),
        ensemble,
        statistic,
        envelope: envelope.into(),
    }
}

fn sym(n: usize, diag: BoundedLaw, off: BoundedLaw) -> EnsembleSpec {
    EnsembleSpec::symmetric(n, diag, off)
}

/// Rademacher with the two atoms swapped: the same draws give `-X`.
fn flipped() -> BoundedLaw {
    BoundedLaw::TwoPoint { v1: -1.0, v2: 1.0, prob: 0.5 }
}

fn assert_mirrored(a: &TailReport, b: &TailReport) {
    assert_eq!(a.center.estimate, -b.center.estimate);
    assert_eq!(a.center.ci_low, -b.center.ci_high);
    assert_eq!(a.center.ci_high, -b.center.ci_low);
    assert_eq!(a.center.median, -b.center.median);
    assert_eq!(a.points.len(), b.points.len());
    for (p, q) in a.points.iter().zip(&b.points) {
        assert_eq!((p.t, p.exceed_count, p.robust_count, p.verdict), (q.t, q.exceed_count, q.robust_count, q.verdict));
        assert_eq!(p.envelope, q.envelope);
    }
}

#[test]
fn negation_swaps_the_ends_of_the_spectrum() {
    let n = 8;
    let x = sym(n, BoundedLaw::Rademacher, BoundedLaw::Rademacher);
    let neg = sym(n, flipped(), flipped());
    let grid = Some(vec![0.5, 1.0, 2.0, 3.0, 4.0, 6.0]);
    for (k, env) in [
        (1, EnvelopeKind::Thm12Extreme { d: None }),
        (3, EnvelopeKind::Thm12Interior { k: None, d: None }),
        (4, EnvelopeKind::Thm12Interior { k: None, d: None }),
    ] {
        let mirror = n - k + 1;
        let a = run_tail_experiment(&cfg(x.clone(), StatisticSpec::Lambda { k }, env.clone(), 400, grid.clone())).unwrap();
        let b = run_tail_experiment(&cfg(neg.clone(), StatisticSpec::Lambda { k: mirror }, env, 400, grid.clone())).unwrap();
        assert_mirrored(&a, &b);
        assert_eq!(a.pass, b.pass);
    }
}

#[test]
fn negation_maps_partial_sums_to_their_duals() {
    let n = 6;
    let x = sym(n, BoundedLaw::Rademacher, BoundedLaw::Rademacher);
    let neg = sym(n, flipped(), flipped());
    let env = EnvelopeKind::Cor22 { q: Exponent(2.0), l: 2f64.sqrt(), d: None };
    let grid = Some(vec![1.0, 2.0, 4.0]);
    for k in 1..n {
        let f = run_tail_experiment(&cfg(x.clone(), StatisticSpec::Fk { k }, env.clone(), 300, grid.clone())).unwrap();
        let g = run_tail_experiment(&cfg(neg.clone(), StatisticSpec::Gk { k }, env.clone(), 300, grid.clone())).unwrap();
        assert_mirrored(&f, &g);
    }
}

#[test]
fn scaling_entries_and_grid_keeps_verdicts() {
    let s = 2.0;
    let rect = EnsembleSpec::rectangular(5, 4, BoundedLaw::Uniform { a: -1.0, b: 0.5 });
    let sa = sym(6, BoundedLaw::Rademacher, BoundedLaw::Uniform { a: -0.5, b: 1.0 });
    let cases = [
        (rect.clone(), StatisticSpec::Opnorm { p: Exponent(1.5), q: Exponent(3.0) }, EnvelopeKind::Thm11 { d: Some(1.5) }),
        (rect.clone(), StatisticSpec::Singular { k: 1 }, EnvelopeKind::Thm33S1 { d: Some(1.5) }),
        (rect, StatisticSpec::Schatten { p: Exponent(4.0) }, EnvelopeKind::SchattenHigh { d: Some(1.5) }),
        (sa.clone(), StatisticSpec::Lambda { k: 1 }, EnvelopeKind::Thm12Extreme { d: Some(1.5) }),
        (sa, StatisticSpec::Lambda { k: 2 }, EnvelopeKind::Thm12Interior { k: None, d: Some(1.5) }),
    ];
    let grid = vec![0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2];
    for (e, stat, env) in cases {
        let scaled_env = match env.clone() {
            EnvelopeKind::Thm11 { d } => EnvelopeKind::Thm11 { d: d.map(|d| d * s) },
            EnvelopeKind::Thm33S1 { d } => EnvelopeKind::Thm33S1 { d: d.map(|d| d * s) },
            EnvelopeKind::SchattenHigh { d } => EnvelopeKind::SchattenHigh { d: d.map(|d| d * s) },
            EnvelopeKind::Thm12Extreme { d } => EnvelopeKind::Thm12Extreme { d: d.map(|d| d * s) },
            EnvelopeKind::Thm12Interior { k, d } => EnvelopeKind::Thm12Interior { k, d: d.map(|d| d * s) },
            other => other,
        };
        let a = run_tail_experiment(&cfg(e.clone(), stat.clone(), env, 300, Some(grid.clone()))).unwrap();
        let big: Vec<f64> = grid.iter().map(|t| t * s).collect();
        let b = run_tail_experiment(&cfg(e.scaled(s), stat.clone(), scaled_env, 300, Some(big))).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(1.0);
        assert!(rel(b.center.estimate, s * a.center.estimate), "{stat}");
        assert!(rel(b.center.ci_low, s * a.center.ci_low) && rel(b.center.ci_high, s * a.center.ci_high));
        assert_eq!(a.pass, b.pass);
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!((p.exceed_count, p.robust_count, p.verdict), (q.exceed_count, q.robust_count, q.verdict), "{stat} t={}", p.t);
            assert!(rel(p.envelope, q.envelope));
        }
    }
}

#[test]
fn reruns_are_identical_and_seeds_matter() {
    let c = cfg(
        EnsembleSpec::rectangular(6, 6, BoundedLaw::Rademacher),
        StatisticSpec::Kyfan { k: 2 },
        EnvelopeKind::UiNorm { d: None },
        300,
        None,
    );
    let a = run_tail_experiment(&c).unwrap();
    let b = run_tail_experiment(&c).unwrap();
    assert_eq!(a.to_json_without_timing(), b.to_json_without_timing());
    let mut other = c.clone();
    other.seed += 1;
    let d = run_tail_experiment(&other).unwrap();
    assert_ne!(a.center.mean, d.center.mean);
}

#[test]
fn gaussian_spectrum_concentrates_at_every_index() {
    let n = 8;
    let e = EnsembleSpec::gaussian_hermitian(n, 0.5, 1.0);
    for k in 1..=n {
        let r = run_tail_experiment(&cfg(e.clone(), StatisticSpec::Lambda { k }, EnvelopeKind::Gaussian { l: None }, 2000, None)).unwrap();
        assert!(r.pass, "k = {k}");
        assert!(r.points.iter().any(|p| p.verdict == Verdict::Pass));
    }
}

#[test]
fn gaussian_entries_are_refused_by_bounded_envelopes() {
    let e = EnsembleSpec::gaussian_hermitian(4, 0.5, 1.0);
    let c = cfg(e, StatisticSpec::Lambda { k: 1 }, EnvelopeKind::Thm12Extreme { d: None }, 200, None);
    assert!(matches!(run_tail_experiment(&c), Err(concmat::Error::UnboundedSupport(_))));
    let g = BoundedLaw::Gaussian { mean: 0.0, variance: 1.0 };
    let stat = StatisticSpec::Opnorm { p: Exponent(1.5), q: Exponent(3.0) };
    let c = cfg(EnsembleSpec::rectangular(3, 3, g), stat, EnvelopeKind::Thm11 { d: None }, 200, None);
    assert!(matches!(run_tail_experiment(&c), Err(concmat::Error::UnboundedSupport(_))));
}

#[test]
fn envelopes_are_bounded_and_nonincreasing() {
    let rect = EnsembleSpec::rectangular(6, 5, BoundedLaw::Rademacher);
    let sa = sym(6, BoundedLaw::Rademacher, BoundedLaw::Rademacher);
    let p = |x: f64| Exponent(x);
    let cases: Vec<(EnsembleSpec, StatisticSpec, EnvelopeKind, f64)> = vec![
        (rect.clone(), StatisticSpec::Opnorm { p: p(1.5), q: p(3.0) }, EnvelopeKind::Thm11 { d: None }, 4.0),
        (rect.clone(), StatisticSpec::Opnorm { p: p(1.5), q: p(3.0) }, EnvelopeKind::Cor22 { q: p(2.0), l: 1.0, d: None }, 4.0),
        (sa.clone(), StatisticSpec::Lambda { k: 1 }, EnvelopeKind::Thm12Extreme { d: None }, 4.0),
        (sa.clone(), StatisticSpec::Lambda { k: 3 }, EnvelopeKind::Thm12Interior { k: None, d: None }, 8.0),
        (
            rect.clone(),
            StatisticSpec::Opnorm { p: p(1.5), q: p(3.0) },
            EnvelopeKind::Prop24 { norm: UnconditionalNorm::lq(3.0, 30).unwrap(), l: 1.0, d: None },
            4.0,
        ),
        (rect.clone(), StatisticSpec::Schatten { p: p(4.0) }, EnvelopeKind::SchattenHigh { d: None }, 4.0),
        (rect.clone(), StatisticSpec::Schatten { p: p(1.0) }, EnvelopeKind::SchattenLow { d: None }, 4.0),
        (rect.clone(), StatisticSpec::Kyfan { k: 2 }, EnvelopeKind::UiNorm { d: None }, 4.0),
        (rect.clone(), StatisticSpec::Singular { k: 1 }, EnvelopeKind::Thm33S1 { d: None }, 4.0),
        (rect.clone(), StatisticSpec::Singular { k: 3 }, EnvelopeKind::Thm33Sk { k: None, d: None }, 8.0),
        (rect, StatisticSpec::Opnorm { p: p(3.0), q: p(1.5) }, EnvelopeKind::MixedRange { d: None }, 4.0),
    ];
    for (e, stat, kind, cap) in cases {
        let env = BoundEnvelope::from(kind.clone()).resolve(&e, &stat).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..=400 {
            let t = 0.05 * i as f64;
            let v = env.eval(t).unwrap();
            assert!(v >= 0.0 && v <= cap, "{kind:?} at {t}: {v}");
            assert!(v <= prev, "{kind:?} increases at {t}");
            prev = v;
        }
        assert!(env.eval(0.05).unwrap() > 0.0);
    }
}

#[test]
fn envelope_anchor_values() {
    let e = EnsembleSpec::rectangular(4, 4, BoundedLaw::Rademacher);
    let stat = StatisticSpec::Opnorm { p: Exponent(4.0 / 3.0), q: Exponent(4.0) };
    let thm11 = BoundEnvelope::from(EnvelopeKind::Thm11 { d: None }).resolve(&e, &stat).unwrap();
    assert_eq!(thm11.eval(0.0).unwrap(), 4.0);
    // r = 4, D = 2: 4 exp(-(t/2)^4/4) = 1 at t = 2 (4 ln 4)^{1/4}
    let t = 2.0 * (4.0 * 4f64.ln()).powf(0.25);
    assert!((thm11.eval(t).unwrap() - 1.0).abs() < 1e-12);
    for q in [2.0, 3.0, 5.0] {
        let cor = BoundEnvelope::from(EnvelopeKind::Cor22 { q: Exponent(q), l: 0.5, d: None }).resolve(&e, &stat).unwrap();
        assert!((cor.eval((4.0 * 4f64.ln()).powf(1.0 / q)).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn empirical_tails_are_fractions_and_nonincreasing() {
    let mut grid: Vec<f64> = (0..30).map(|i| 0.1 * i as f64).collect();
    grid.push(100.0);
    let c = cfg(
        sym(10, BoundedLaw::Uniform { a: -1.0, b: 1.0 }, BoundedLaw::Rademacher),
        StatisticSpec::Lambda { k: 4 },
        EnvelopeKind::Thm12Interior { k: None, d: None },
        500,
        Some(grid),
    );
    let r = run_tail_experiment(&c).unwrap();
    for w in r.points.windows(2) {
        assert!(w[1].empirical <= w[0].empirical);
    }
    for p in &r.points {
        assert!((0.0..=1.0).contains(&p.empirical) && (0.0..=1.0).contains(&p.empirical_upper99));
        assert!(p.empirical_upper99 >= p.empirical || p.robust_count < p.exceed_count);
    }
    assert_eq!(r.points[0].empirical, 1.0);
    assert_eq!(r.points.last().unwrap().exceed_count, 0);
}
