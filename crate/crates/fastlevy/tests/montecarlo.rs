use fastlevy::groups::OuSpec;
use fastlevy::levy::LevyMeasure;
use fastlevy::montecarlo::{simulate_price, simulate_prices, McConfig, Payoff};
use fastlevy::pricing::{OptionKind, OptionSpec};
use fastlevy::volatility::bs_price;

fn short_dated_ou() -> OuSpec {
    OuSpec { a: 0.2, b: 1.5, beta: 1.0, lam: 0.25, rho: -0.7, eps: 0.1 }
}

fn cfg(n_paths: u64, seed: u64, antithetic: bool) -> McConfig {
    McConfig { n_paths, seed, antithetic, ..McConfig::default() }
}

#[test]
fn discounted_spot_is_a_martingale() {
    let x0 = 50f64.ln();
    let measures = [
        LevyMeasure::merton(-0.2, 0.2).unwrap(),
        LevyMeasure::gumbel(-0.1, 0.1).unwrap(),
        LevyMeasure::dirac(-0.15).unwrap(),
        LevyMeasure::uniform(-0.3, 0.1).unwrap(),
    ];
    for (n, nu) in measures.iter().enumerate() {
        for t in [0.1, 0.5] {
            let r = simulate_prices(&short_dated_ou(), nu, x0, t, &[Payoff::Asset], &cfg(50_000, n as u64, false))
                .unwrap()[0];
            assert!((r.price - 50.0).abs() < 3.0 * r.stderr, "{nu:?} t={t}: {} ± {}", r.price, r.stderr);
        }
    }
}

#[test]
fn frozen_factor_without_jumps_is_black_scholes() {
    let ou = OuSpec { a: 0.25, b: 0.0, beta: 1e-4, lam: 0.0, rho: 0.0, eps: 0.1 };
    let nu = LevyMeasure::merton(-0.2, 0.2).unwrap();
    let x = 100f64.ln();
    for (kind, strike) in [(OptionKind::Call, 110.0), (OptionKind::Put, 90.0), (OptionKind::Call, 100.0)] {
        let spec = OptionSpec::new(kind, f64::ln(strike), 0.25, x).unwrap();
        let r = simulate_price(&ou, &nu, &spec, &cfg(200_000, 11, true)).unwrap();
        let exact = bs_price(kind, x, spec.k, spec.t, 0.25);
        assert!((r.price - exact).abs() < 3.0 * r.stderr + 1e-3, "{kind:?} {strike}: {} vs {exact}", r.price);
    }
}

#[test]
fn same_seed_gives_identical_bits() {
    let nu = LevyMeasure::merton(-0.2, 0.2).unwrap();
    let spec = OptionSpec::put(45f64.ln(), 0.1, 50f64.ln()).unwrap();
    let a = simulate_price(&short_dated_ou(), &nu, &spec, &cfg(20_000, 42, true)).unwrap();
    let b = simulate_price(&short_dated_ou(), &nu, &spec, &cfg(20_000, 42, true)).unwrap();
    let c = simulate_price(&short_dated_ou(), &nu, &spec, &cfg(20_000, 43, true)).unwrap();
    assert_eq!(a.price.to_bits(), b.price.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    assert_ne!(a.price.to_bits(), c.price.to_bits());
}

#[test]
fn antithetic_pairs_cut_martingale_stderr() {
    let ou = OuSpec { a: 0.25, b: 0.0, beta: 1e-4, lam: 0.0, rho: 0.0, eps: 0.1 };
    let nu = LevyMeasure::merton(-0.2, 0.2).unwrap();
    let run = |anti| simulate_prices(&ou, &nu, 0.0, 0.5, &[Payoff::Asset], &cfg(100_000, 5, anti)).unwrap()[0];
    let (plain, anti) = (run(false), run(true));
    assert!((anti.price - 1.0).abs() < 3.0 * anti.stderr);
    assert!(anti.stderr <= 0.9 * plain.stderr, "{} vs {}", anti.stderr, plain.stderr);
}
