use jmgt_core::decay::{
    evolve_radial, linear_decay_experiment, low_frequency_envelope, segel_probe, segel_times,
    w_decay_experiment, DataFamily, DecayConfig, Quantity, RadialNorms, RadialProfile, Verdict,
    SEGEL_WINDOW,
};
use jmgt_core::modal::ModeEigensystem;
use jmgt_core::util::log_space;
use jmgt_core::{ModelParams, SumExponent};

#[test]
fn gaussian_linear_rates() {
    let cfg = DecayConfig::new(ModelParams::new(0.5, 1.0).unwrap(), DataFamily::Gaussian);
    let exp = linear_decay_experiment(&cfg, &[0.0, 1.0, 1.5], &[0.0, 1.0, 1.5, 2.5]).unwrap();
    for row in &exp.rows[..6] {
        let f = row.fit.as_ref().unwrap();
        assert_eq!(row.verdict(), Verdict::Pass, "{} slope {}", row.label, f.slope);
        assert!(f.curvature < 0.05);
    }
    assert_eq!(exp.rows[6].verdict(), Verdict::Observed);
    // higher derivatives decay faster
    let slopes: Vec<f64> = exp.rows[..3].iter().map(|r| r.fit.as_ref().unwrap().slope).collect();
    assert!(slopes[0] > slopes[1] && slopes[1] > slopes[2], "{slopes:?}");
}

#[test]
fn w_rates() {
    let cfg = DecayConfig::new(ModelParams::new(0.1, 1.0).unwrap(), DataFamily::Gaussian);
    let exp = w_decay_experiment(&cfg, &[1.5]).unwrap();
    let f = exp.rows[0].fit.as_ref().unwrap();
    assert_eq!(f.verdict, Verdict::Pass, "slope {}", f.slope);
    assert!((f.slope + 2.0).abs() <= 0.1);
    // the nonlinear target −3/2 is weaker than the measured rate
    assert!(f.slope <= -1.5);
    assert_eq!(exp.tau_small_enough, Some(true));
}

#[test]
fn w_only_data_is_not_power_law() {
    let cfg = DecayConfig::new(ModelParams::new(0.1, 1.0).unwrap(), DataFamily::WOnly);
    let exp = w_decay_experiment(&cfg, &[1.5]).unwrap();
    assert_eq!(exp.rows[0].verdict(), Verdict::Inapplicable);
}

#[test]
fn single_node_matches_mode_propagator_exactly() {
    let p = ModelParams::new(0.5, 1.0).unwrap();
    let nodes = vec![0.37, 1.9];
    let profile = RadialProfile::from_family(&DataFamily::Gaussian, nodes.clone()).unwrap();
    let out = evolve_radial(&profile, &p, 12.5).unwrap();
    for (i, &k) in nodes.iter().enumerate() {
        let direct = ModeEigensystem::for_params(k * k, &p).unwrap().propagator(12.5).unwrap().apply(&profile.modes[i]);
        assert_eq!(out.modes[i], direct);
    }
}

#[test]
fn doubling_nodes_barely_moves_norms() {
    let p = ModelParams::new(0.5, 1.0).unwrap();
    let value = |n: usize, t: f64, ell: f64, s: f64, hom: bool| {
        let k = log_space(1e-4, 1e2, n);
        let prof = RadialProfile::from_family(&DataFamily::Gaussian, k.clone()).unwrap();
        let prof = evolve_radial(&prof, &p, t).unwrap();
        RadialNorms::new(&k).unwrap().norm(&prof.v_power(0.5), ell, s, SumExponent::One, hom).value
    };
    for &t in &[0.0, 1e2, 1e4] {
        for &(ell, s, hom) in &[(0.0, 1.5, false), (1.0, 0.5, false), (0.0, 0.0, true), (0.0, 1.0, true)] {
            let (a, b) = (value(4096, t, ell, s, hom), value(8192, t, ell, s, hom));
            assert!((a / b - 1.0).abs() < 1e-3, "t={t} ell={ell} s={s}: {a} vs {b}");
        }
    }
}

#[test]
fn low_frequency_block_stays_under_envelope() {
    let cfg = DecayConfig::new(ModelParams::new(0.5, 1.0).unwrap(), DataFamily::Gaussian);
    for k in [0.0, 1.0] {
        let env = low_frequency_envelope(&cfg, k).unwrap();
        assert!(env.c0 > 0.0 && env.c1.is_finite() && env.c1 >= 1.0, "{env:?}");
        assert!(env.late_spread < 0.5, "{env:?}");
    }
}

#[test]
fn segel_slopes() {
    let t = segel_times();
    for (a, b) in [(2.0, 1.5), (1.5, 2.0), (3.0, 1.2)] {
        let r = segel_probe(a, b, &t, SEGEL_WINDOW, 0.05).unwrap();
        let f = r.fit.unwrap();
        assert_eq!(f.verdict, Verdict::Pass, "({a},{b}) slope {}", f.slope);
    }
    let r = segel_probe(2.0, 2.0, &t, SEGEL_WINDOW, 0.1).unwrap();
    assert_eq!(r.fit.unwrap().verdict, Verdict::Pass);
    assert!(!segel_probe(0.5, 0.5, &t, SEGEL_WINDOW, 0.05).unwrap().hypothesis_holds);
}

#[test]
fn quantity_theory_exponents() {
    assert_eq!(Quantity::LambdaV { ell: 1.0 }.theory(Some(1.5)), Some(-1.25));
    assert_eq!(Quantity::V { sigma: 0.0 }.theory(Some(1.5)), Some(-0.75));
    assert_eq!(Quantity::VObserved { sigma: 2.5 }.theory(Some(1.5)), None);
}
