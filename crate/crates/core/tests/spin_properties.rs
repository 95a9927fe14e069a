use proptest::prelude::*;
use sivsim_core::numeric::line_fit;
use sivsim_core::spin::{
    coherence_at, cpmg_coherence, filter_t2, monte_carlo_coherence, noise_preset, ramsey_decay, t1_from_orbital,
    t2_scaling_fit, NoisePsd, SequenceKind, REFERENCE_CPMG_ORDERS,
};

fn ou() -> impl Strategy<Value = NoisePsd> {
    (1e3f64..1e6, 1e-6f64..1e-1).prop_map(|(sigma, tau_c)| NoisePsd::OrnsteinUhlenbeck { sigma, tau_c })
}

fn band_limited_power_law() -> impl Strategy<Value = NoisePsd> {
    (1e2f64..1e6, 0.0f64..2.0, 1e3f64..1e6).prop_map(|(amplitude, exponent, high_cutoff)| NoisePsd::PowerLaw {
        amplitude,
        exponent,
        low_cutoff: 0.0,
        high_cutoff,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coherence_within_unit_interval(psd in ou(), n in 1u32..=16, t in 1e-7f64..1e-2) {
        let c = coherence_at(&psd, &SequenceKind::Cpmg { n }, t, None).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
        let r = coherence_at(&psd, &SequenceKind::Ramsey, t, Some(1e-3)).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
    }

    #[test]
    fn decoupling_never_hurts_ou(psd in ou()) {
        let mut last = 0.0;
        for n in [1u32, 2, 4, 8, 16] {
            let t2 = filter_t2(&psd, &SequenceKind::Cpmg { n }, None).unwrap();
            prop_assert!(t2 >= last * (1.0 - 1e-6), "N={n}: {t2} < {last}");
            last = t2;
        }
    }

    #[test]
    fn decoupling_never_hurts_power_law(psd in band_limited_power_law()) {
        let mut last = 0.0;
        for n in [1u32, 2, 4, 8, 16] {
            let t2 = filter_t2(&psd, &SequenceKind::Cpmg { n }, None).unwrap();
            prop_assert!(t2 >= last * (1.0 - 1e-6), "N={n}: {t2} < {last}");
            last = t2;
        }
    }

    #[test]
    fn t1_caps_t2(psd in ou(), n in 1u32..=32, t1 in 1e-5f64..1e-1) {
        let t2 = filter_t2(&psd, &SequenceKind::Cpmg { n }, Some(t1)).unwrap();
        prop_assert!(t2 <= 2.0 * t1 * (1.0 + 1e-9));
    }
}

#[test]
fn quasi_static_ramsey_is_gaussian() {
    for name in ["natural-abundance", "isotope-purified"] {
        let psd = noise_preset(name).unwrap();
        let NoisePsd::QuasiStaticGaussian { sigma } = psd else { panic!() };
        let t2_star = 2f64.sqrt() / sigma;
        let taus: Vec<f64> = (1..=60).map(|k| k as f64 * t2_star / 20.0).collect();
        let r = ramsey_decay(&psd, 550e3, &taus, None).unwrap();
        let x: Vec<f64> = taus.iter().map(|t| t * t).collect();
        let y: Vec<f64> = r.decay_curve.iter().map(|p| p.coherence.ln()).collect();
        let fit = line_fit(&x, &y).unwrap();
        assert!(fit.r_squared > 0.9999);
        assert!((r.t2 / t2_star - 1.0).abs() < 0.01);
        assert!((r.stretch - 2.0).abs() < 1e-6);
        for p in &r.decay_curve {
            let f = p.fringe.unwrap();
            assert!((0.0..=1.0).contains(&f));
        }
    }
}

#[test]
fn filter_and_monte_carlo_agree() {
    let cases = [
        (noise_preset("ou-slow-bath").unwrap(), vec![1u32, 4, 16]),
        (NoisePsd::OrnsteinUhlenbeck { sigma: 2e4, tau_c: 1e-4 }, vec![1, 4, 16]),
    ];
    for (psd, orders) in cases {
        for n in orders {
            let kind = SequenceKind::Cpmg { n };
            let t2 = filter_t2(&psd, &kind, None).unwrap();
            let taus: Vec<f64> = (1..=30).map(|k| k as f64 * t2 / 12.0).collect();
            let ff = cpmg_coherence(&psd, n, &taus, None).unwrap();
            let mc = monte_carlo_coherence(&psd, kind, &taus, 2000, 42, None).unwrap();
            assert!((mc.t2 / ff.t2 - 1.0).abs() < 0.05, "N={n}: {} vs {}", mc.t2, ff.t2);
        }
    }
    let psd = noise_preset("isotope-purified").unwrap();
    let taus: Vec<f64> = (1..=30).map(|k| k as f64 * 0.25e-6).collect();
    let ff = ramsey_decay(&psd, 0.0, &taus, None).unwrap();
    let mc = monte_carlo_coherence(&psd, SequenceKind::Ramsey, &taus, 4000, 9, None).unwrap();
    assert!((mc.t2 / ff.t2 - 1.0).abs() < 0.05);
}

#[test]
fn monte_carlo_independent_of_thread_count() {
    let psd = NoisePsd::OrnsteinUhlenbeck { sigma: 2e4, tau_c: 1e-4 };
    let taus: Vec<f64> = (1..=20).map(|k| k as f64 * 2e-5).collect();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| monte_carlo_coherence(&psd, SequenceKind::Cpmg { n: 2 }, &taus, 500, 5, None).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn slow_bath_two_thirds_scaling() {
    let psd = noise_preset("ou-slow-bath").unwrap();
    let points: Vec<(u32, f64)> =
        REFERENCE_CPMG_ORDERS.iter().map(|&n| (n, filter_t2(&psd, &SequenceKind::Cpmg { n }, None).unwrap())).collect();
    let fit = t2_scaling_fit(&points).unwrap();
    assert!((fit.beta - 2.0 / 3.0).abs() < 0.05);
    assert!(!fit.curvature_warning);
}

#[test]
fn orbital_t1_caps_coherence() {
    let t1 = t1_from_orbital(0.26).unwrap();
    let psd = noise_preset("linear-scaling").unwrap();
    let points: Vec<(u32, f64)> = REFERENCE_CPMG_ORDERS
        .iter()
        .map(|&n| (n, filter_t2(&psd, &SequenceKind::Cpmg { n }, Some(t1)).unwrap()))
        .collect();
    for &(_, t2) in &points {
        assert!(t2 <= 2.0 * t1);
    }
    let capped = t2_scaling_fit(&points).unwrap();
    assert!(capped.beta < 1.0);
}
