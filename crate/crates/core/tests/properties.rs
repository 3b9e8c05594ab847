mod common;

use common::*;
use fastlevy_core::calibration::{calibrate, model_iv, Bounds, CalibrationOptions, ModelClass, Sequential, VolSurface};
use fastlevy_core::multiscale::{m_symbol, price_multiscale, price_u01, SlowParams};
use fastlevy_core::pricing::{price_terms, price_u1, Contour, ModelParams, OptionKind, OptionSpec};
use fastlevy_core::volatility::{bs_price, implied_vol, Quote};
use fastlevy_core::{LevyMeasure, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn theta_from_seed(seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tag = TAGS[(seed % 5) as usize];
    let nu = random_measure(&mut rng, tag);
    random_theta(&mut rng, nu)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn symbols_vanish_at_minus_i(seed in any::<u64>()) {
        let theta = theta_from_seed(seed);
        let l = C64::new(0.0, -1.0);
        prop_assert!(theta.phi(l).unwrap().norm() < 1e-12);
        prop_assert!(theta.b_symbol(l).unwrap().norm() < 1e-12);
        let slow = SlowParams::new(0.01, -0.02, 0.03, 0.005).unwrap();
        prop_assert!(m_symbol(&theta, &slow, l).unwrap().norm() < 1e-12);
    }

    #[test]
    fn put_call_parity_holds_term_by_term(
        seed in any::<u64>(), k in -0.5f64..0.5, t in 0.05f64..2.0, x in -0.2f64..0.2,
    ) {
        let theta = theta_from_seed(seed);
        let call = OptionSpec::call(k, t, x).unwrap();
        let put = call.with_kind(OptionKind::Put);
        let c = price_terms(&theta, &call, &Contour::default_for(OptionKind::Call)).unwrap();
        let p = price_terms(&theta, &put, &Contour::default_for(OptionKind::Put)).unwrap();
        let tol = 1e-8 * x.exp().max(k.exp());
        prop_assert!((c.u0 - p.u0 - (x.exp() - k.exp())).abs() < tol, "{c:?} {p:?}");
        prop_assert!((c.eps_u1 - p.eps_u1).abs() < tol, "{c:?} {p:?}");
    }

    #[test]
    fn implied_vol_round_trips(
        sigma in 0.05f64..2.0, d in -1.0f64..1.0, t in 0.02f64..2.0,
    ) {
        let kind = if d >= 0.0 { OptionKind::Call } else { OptionKind::Put };
        let (x, k) = (0.0, d);
        let price = bs_price(kind, x, k, t, sigma);
        // prices near the underflow floor carry no volatility information
        prop_assume!(price > 1e-12);
        let iv = implied_vol(kind, x, k, t, price).unwrap();
        prop_assert!((iv - sigma).abs() < 1e-7 * sigma.max(1.0), "{iv} vs {sigma}");
    }

    #[test]
    fn slow_correction_is_linear(
        seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0, k in -0.3f64..0.3,
    ) {
        let theta = theta_from_seed(seed);
        let spec = OptionSpec::call(k, 0.7, 0.0).unwrap();
        let contour = Contour::default_for(OptionKind::Call);
        let p = SlowParams::new(0.01, -0.02, 0.03, 0.005).unwrap();
        let q = SlowParams::new(-0.004, 0.01, 0.0, -0.02).unwrap();
        let mix = |s: &SlowParams, r: &SlowParams| {
            let (s, r) = (s.as_array(), r.as_array());
            SlowParams::new(a * s[0] + b * r[0], a * s[1] + b * r[1], a * s[2] + b * r[2], a * s[3] + b * r[3]).unwrap()
        };
        let lhs = price_u01(&theta, &mix(&p, &q), &spec, &contour).unwrap();
        let rhs = a * price_u01(&theta, &p, &spec, &contour).unwrap()
            + b * price_u01(&theta, &q, &spec, &contour).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }
}

#[test]
fn slow_correction_reduces_to_fast_one_for_matching_groups() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for tag in TAGS {
        let nu = random_measure(&mut rng, tag);
        let theta = random_theta(&mut rng, nu);
        let slow = SlowParams::new(2.0 * theta.v3e, 2.0 * theta.v2e, theta.u3e, theta.u2e).unwrap();
        for t in [0.1, 0.5, 1.5] {
            let spec = OptionSpec::put(-0.1, t, 0.0).unwrap();
            let contour = Contour::default_for(OptionKind::Put);
            let u01 = price_u01(&theta, &slow, &spec, &contour).unwrap();
            let u1 = price_u1(&theta, &spec, &contour).unwrap();
            assert!((u01 - 0.5 * t * u1).abs() < 1e-12, "{tag} t={t}: {u01} vs {}", 0.5 * t * u1);
        }
    }
}

#[test]
fn zero_slow_parameters_leave_the_fast_price() {
    let theta = theta_from_seed(9);
    let spec = OptionSpec::call(0.05, 0.5, 0.0).unwrap();
    let contour = Contour::default_for(OptionKind::Call);
    let m = price_multiscale(&theta, &SlowParams::default(), &spec, &contour).unwrap();
    let f = price_terms(&theta, &spec, &contour).unwrap();
    assert_eq!(m.delta_u01, 0.0);
    assert!((m.u0 - f.u0).abs() < 1e-14 && (m.eps_u1 - f.eps_u1).abs() < 1e-14);
}

#[test]
fn jump_smile_flattens_with_maturity() {
    let theta = ModelParams::new(0.03, 1.0, LevyMeasure::merton(-0.15, 0.1).unwrap()).unwrap();
    let spread = |t: f64| {
        let w = 0.2 * t.sqrt();
        model_iv(&theta, t, -w, 0.0).unwrap() - model_iv(&theta, t, w, 0.0).unwrap()
    };
    let s: Vec<f64> = [0.25, 1.0, 4.0].into_iter().map(spread).collect();
    assert!(s[0] > s[1] && s[1] > s[2] && s[2] > 0.0, "{s:?}");
}

#[test]
fn calibration_recovers_a_classic_surface() {
    let truth = ModelParams::new(0.04, 0.8, LevyMeasure::merton(-0.2, 0.15).unwrap()).unwrap();
    let mut quotes = Vec::new();
    for t in [0.25, 1.0] {
        for k in [-0.3, -0.15, 0.0, 0.15, 0.3] {
            quotes.push(Quote { t, k, x: 0.0, iv: model_iv(&truth, t, k, 0.0).unwrap() });
        }
    }
    let surface = VolSurface::new(1.0, quotes, "synthetic".into()).unwrap();
    let init = ModelParams::new(0.05, 0.6, LevyMeasure::merton(-0.15, 0.2).unwrap()).unwrap();
    let res = calibrate(
        &surface,
        ModelClass::ClassicLevy,
        &init,
        &Bounds::default_for(&init.measure),
        &CalibrationOptions::default(),
        &Sequential,
    )
    .unwrap();
    assert!(res.rmse < 1e-5, "{res:?}");
    assert!(res.objective_trace.windows(2).all(|w| w[1] <= w[0]));
}
