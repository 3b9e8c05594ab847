//! Zero-rate Black–Scholes prices and implied volatility.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{domain, numeric, Result};
use crate::pricing::OptionKind;
use crate::special::{norm_cdf, norm_pdf};

/// Lower end of the implied-volatility search range.
pub const IV_MIN: f64 = 1e-4;
/// Upper end of the implied-volatility search range.
pub const IV_MAX: f64 = 5.0;

/// An observed implied volatility at maturity `t` and log-strike `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub t: f64,
    pub k: f64,
    /// Log-spot.
    pub x: f64,
    pub iv: f64,
}

impl Quote {
    /// Log-moneyness `k - x`.
    pub fn log_moneyness(&self) -> f64 {
        self.k - self.x
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(domain!("quote maturity {} must be positive", self.t));
        }
        if !(self.k.is_finite() && self.x.is_finite()) {
            return Err(domain!("quote strike and spot must be finite"));
        }
        if !(IV_MIN..=IV_MAX).contains(&self.iv) {
            return Err(domain!("quote iv {} outside [{IV_MIN}, {IV_MAX}]", self.iv));
        }
        Ok(())
    }
}

/// Black–Scholes price at zero rates.
pub fn bs_price(kind: OptionKind, x: f64, k: f64, t: f64, sigma: f64) -> f64 {
    let (s, strike) = (x.exp(), k.exp());
    let total = sigma * t.sqrt();
    if total <= 0.0 {
        return match kind {
            OptionKind::Call => (s - strike).max(0.0),
            OptionKind::Put => (strike - s).max(0.0),
        };
    }
    let d1 = (x - k) / total + 0.5 * total;
    let d2 = d1 - total;
    match kind {
        OptionKind::Call => s * norm_cdf(d1) - strike * norm_cdf(d2),
        OptionKind::Put => strike * norm_cdf(-d2) - s * norm_cdf(-d1),
    }
}

/// `∂ price / ∂σ`, identical for calls and puts.
pub fn bs_vega(x: f64, k: f64, t: f64, sigma: f64) -> f64 {
    let total = sigma * t.sqrt();
    let d1 = (x - k) / total + 0.5 * total;
    x.exp() * norm_pdf(d1) * t.sqrt()
}

/// Inverts [`bs_price`] for `σ ∈ [1e-4, 5]`.
///
/// The price is first mapped to the out-of-the-money side through put–call
/// parity. Newton steps run on the log of the price with analytic vega and
/// fall back to bisection of a maintained bracket whenever a step leaves it.
pub fn implied_vol(kind: OptionKind, x: f64, k: f64, t: f64, price: f64) -> Result<f64> {
    if !(t > 0.0) || !price.is_finite() || !x.is_finite() || !k.is_finite() {
        return Err(domain!("invalid implied-volatility inputs (t = {t}, price = {price})"));
    }
    let (s, strike) = (x.exp(), k.exp());
    let (lo_bound, hi_bound) = match kind {
        OptionKind::Call => ((s - strike).max(0.0), s),
        OptionKind::Put => ((strike - s).max(0.0), strike),
    };
    if price <= lo_bound || price >= hi_bound {
        return Err(domain!("price {price} outside the no-arbitrage interval ({lo_bound}, {hi_bound})"));
    }
    // out-of-the-money equivalent: call above the spot, put below
    let (otm_kind, target) = match (kind, k >= x) {
        (OptionKind::Call, true) | (OptionKind::Put, false) => (kind, price),
        (OptionKind::Call, false) => (OptionKind::Put, price - (s - strike)),
        (OptionKind::Put, true) => (OptionKind::Call, price - (strike - s)),
    };
    if !(target > 0.0) {
        return Err(domain!("time value {target} is not positive"));
    }
    let f = |sigma: f64| bs_price(otm_kind, x, k, t, sigma);
    let (mut lo, mut hi) = (IV_MIN, IV_MAX);
    let (p_lo, p_hi) = (f(lo), f(hi));
    if target < p_lo || target > p_hi {
        return Err(domain!("price {price} implies a volatility outside [{IV_MIN}, {IV_MAX}]"));
    }
    let ln_target = target.ln();
    let tol = 1e-13 * s.max(strike);
    // start from the Brenner–Subrahmanyam style guess, clamped into the bracket
    let mut sigma = (2.0 * core::f64::consts::PI / t).sqrt() * target / s;
    sigma = sigma.clamp(0.05, 2.0);
    for _ in 0..200 {
        let p = f(sigma);
        if !p.is_finite() {
            return Err(numeric!("non-finite Black-Scholes price at sigma = {sigma}"));
        }
        let diff = p - target;
        if diff.abs() <= tol && (p.ln() - ln_target).abs() < 1e-12 {
            return Ok(sigma);
        }
        if diff > 0.0 {
            hi = sigma;
        } else {
            lo = sigma;
        }
        if hi - lo <= 1e-15 * hi {
            return Ok(0.5 * (lo + hi));
        }
        let vega = bs_vega(x, k, t, sigma);
        // Newton on ln(price): step = (ln p - ln target) * p / vega
        let next = sigma - (p.ln() - ln_target) * p / vega;
        sigma = if next.is_finite() && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    Err(numeric!("implied volatility did not converge (bracket [{lo}, {hi}])"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atm_price_vanishes_with_total_variance() {
        let p = bs_price(OptionKind::Call, 1.0, 1.0, 1e-12, 1e-6);
        assert!(p.abs() < 1e-11);
    }

    #[test]
    fn reference_price_and_parity() {
        let x = 50f64.ln();
        let c = bs_price(OptionKind::Call, x, x, 0.1, 0.2);
        let d = 0.2 * 0.1f64.sqrt() / 2.0;
        let expected = 50.0 * (norm_cdf(d) - norm_cdf(-d));
        assert!((c - expected).abs() < 1e-13);
        assert!((c - 1.2615).abs() < 5e-4);
        let k = 55f64.ln();
        let call = bs_price(OptionKind::Call, x, k, 0.5, 0.3);
        let put = bs_price(OptionKind::Put, x, k, 0.5, 0.3);
        assert!((call - put - (50.0 - 55.0)).abs() < 1e-12);
    }

    #[test]
    fn implied_vol_round_trips() {
        let x = 50f64.ln();
        let p = bs_price(OptionKind::Call, x, x, 0.1, 0.2);
        assert!((implied_vol(OptionKind::Call, x, x, 0.1, p).unwrap() - 0.2).abs() < 1e-9);
        let k = x + 0.5;
        let p = bs_price(OptionKind::Call, x, k, 0.05, 1.7);
        assert!((implied_vol(OptionKind::Call, x, k, 0.05, p).unwrap() - 1.7).abs() < 1e-7);
        // in-the-money call goes through the put side
        let k = x - 0.4;
        let p = bs_price(OptionKind::Call, x, k, 0.3, 0.25);
        assert!((implied_vol(OptionKind::Call, x, k, 0.3, p).unwrap() - 0.25).abs() < 1e-8);
    }

    #[test]
    fn implied_vol_rejects_arbitrage_violations() {
        let x = 50f64.ln();
        assert!(implied_vol(OptionKind::Call, x, x, 0.1, 50.0).is_err());
        assert!(implied_vol(OptionKind::Call, x, x - 0.1, 0.1, x.exp() - (x - 0.1).exp()).is_err());
        assert!(implied_vol(OptionKind::Put, x, x, 0.1, 0.0).is_err());
    }

    #[test]
    fn quote_validation() {
        let q = Quote { t: 0.5, k: 0.1, x: 0.0, iv: 0.2 };
        assert!(q.validate().is_ok());
        assert!((q.log_moneyness() - 0.1).abs() < 1e-16);
        assert!(Quote { iv: 6.0, ..q }.validate().is_err());
        assert!(Quote { t: 0.0, ..q }.validate().is_err());
    }
}
