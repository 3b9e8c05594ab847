//! First-order correction from a slowly varying factor `z`, frozen at its
//! current value.
//!
//! Differentiating the leading-order transform `e^{sφ}ĥ` in `z` gives
//! `s ∂zφ e^{sφ}ĥ` with
//! `∂zφ = -(λ² + iλ)/2 · ∂z<σ²> + (C - iλE) · ∂z<ζ>`, and the time integral
//! collapses to a factor `t²/2`. The correction is therefore
//! `u01 = (1/√(2π)) ∫ (t²/2) e^{tφ} ĥ M e^{iλx} dλr` with
//!
//! `M = (V0 + iλV1)(-(λ² + iλ)/2) + (U0 + iλU1)(C - iλE)`.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::pricing::{check_u0_bounds, integrate_hermitian, Contour, ModelParams, OptionSpec, PricingKernel};
use crate::C64;

/// Slow-scale parameters at the frozen `z`, each carrying its `δ` scale.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlowParams {
    pub v1: f64,
    pub v0: f64,
    pub u1: f64,
    pub u0: f64,
}

impl SlowParams {
    pub fn new(v1: f64, v0: f64, u1: f64, u0: f64) -> Result<Self> {
        let p = SlowParams { v1, v0, u1, u0 };
        p.validate()?;
        Ok(p)
    }

    /// Builds the parameters from the factor quantities: the slow factor's
    /// volatility `g`, its averaged drift under pricing `gamma_avg`, the
    /// correlation `rho_xz`, the averaged volatility `sigma_avg`, and the
    /// sensitivities of `<σ²>` and `<ζ>` to `z`.
    pub fn from_factor(
        g: f64,
        gamma_avg: f64,
        rho_xz: f64,
        sigma_avg: f64,
        dsig2_dz: f64,
        dzeta_dz: f64,
    ) -> Result<Self> {
        let mix = g * rho_xz * sigma_avg;
        let drift = -g * gamma_avg;
        SlowParams::new(mix * dsig2_dz, drift * dsig2_dz, mix * dzeta_dz, drift * dzeta_dz)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.v1, self.v0, self.u1, self.u0]
    }

    pub fn is_zero(&self) -> bool {
        self.as_array().iter().all(|v| *v == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().any(|v| !v.is_finite()) {
            return Err(domain!("slow-scale parameters must be finite"));
        }
        Ok(())
    }

    fn symbol_from(&self, l: C64, c: C64, e: f64) -> C64 {
        let i = C64::i();
        let diffusion = (l * l + i * l) * -0.5;
        let jumps = c - i * l * e;
        (i * l * self.v1 + self.v0) * diffusion + (i * l * self.u1 + self.u0) * jumps
    }
}

/// The symbol `M(λ)` multiplying `(t²/2) e^{tφ} ĥ` in the correction.
pub fn m_symbol(theta: &ModelParams, slow: &SlowParams, lambda: C64) -> Result<C64> {
    let c = theta.measure.char_integral(lambda)?;
    Ok(slow.symbol_from(lambda, c, theta.measure.exp_moment()))
}

/// Slow-factor correction `δ u01`.
pub fn price_u01(theta: &ModelParams, slow: &SlowParams, spec: &OptionSpec, contour: &Contour) -> Result<f64> {
    slow.validate()?;
    let kernel = PricingKernel::new(theta, spec, contour)?;
    if slow.is_zero() {
        return Ok(0.0);
    }
    let half_t2 = 0.5 * spec.t * spec.t;
    let out = integrate_hermitian(
        |lr| {
            let (l, c, v) = kernel.base(lr)?;
            Ok([v * slow.symbol_from(l, c, kernel.exp_moment) * half_t2])
        },
        kernel.initial_half_width(contour),
        contour,
        kernel.scale(),
    )?;
    Ok(out.values[0])
}

/// `u0`, `ε u1` and `δ u01` evaluated together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiscaleTerms {
    pub u0: f64,
    pub eps_u1: f64,
    pub delta_u01: f64,
}

impl MultiscaleTerms {
    /// `u0 + ε u1 + δ u01`.
    pub fn approx(&self) -> f64 {
        self.u0 + self.eps_u1 + self.delta_u01
    }
}

pub fn price_multiscale(
    theta: &ModelParams,
    slow: &SlowParams,
    spec: &OptionSpec,
    contour: &Contour,
) -> Result<MultiscaleTerms> {
    slow.validate()?;
    let kernel = PricingKernel::new(theta, spec, contour)?;
    let t = spec.t;
    let out = integrate_hermitian(
        |lr| {
            let (l, c, v) = kernel.base(lr)?;
            Ok([v, v * kernel.b(l, c) * t, v * slow.symbol_from(l, c, kernel.exp_moment) * (0.5 * t * t)])
        },
        kernel.initial_half_width(contour),
        contour,
        kernel.scale(),
    )?;
    let [u0, eps_u1, delta_u01] = out.values;
    check_u0_bounds(u0, spec)?;
    Ok(MultiscaleTerms { u0, eps_u1, delta_u01 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::LevyMeasure;
    use crate::pricing::{price_u1, OptionKind};

    fn theta() -> ModelParams {
        ModelParams::new(0.05, 0.9, LevyMeasure::merton(-0.15, 0.25).unwrap()).unwrap()
    }

    #[test]
    fn zero_parameters_give_zero() {
        let spec = OptionSpec::call(0.05, 0.5, 0.0).unwrap();
        let c = Contour::default_for(OptionKind::Call);
        assert_eq!(price_u01(&theta(), &SlowParams::default(), &spec, &c).unwrap(), 0.0);
    }

    #[test]
    fn symbol_vanishes_at_minus_i() {
        let slow = SlowParams::new(0.3, -0.2, 0.7, 0.11).unwrap();
        let m = m_symbol(&theta(), &slow, C64::new(0.0, -1.0)).unwrap();
        assert!(m.norm() < 1e-15);
    }

    #[test]
    fn reduces_to_fast_correction_when_matched() {
        let th = theta().with_groups(-0.004, -0.05, -0.003, -0.06);
        let slow = SlowParams::new(2.0 * th.v3e, 2.0 * th.v2e, th.u3e, th.u2e).unwrap();
        for k in [-0.2, 0.0, 0.15] {
            let spec = OptionSpec::call(k, 0.4, 0.0).unwrap();
            let c = Contour::default_for(OptionKind::Call);
            let u1 = price_u1(&th, &spec, &c).unwrap();
            let u01 = price_u01(&th, &slow, &spec, &c).unwrap();
            assert!((u01 - 0.5 * spec.t * u1).abs() < 1e-12, "{u01} vs {u1}");
        }
    }

    #[test]
    fn call_and_put_corrections_agree() {
        let slow = SlowParams::new(0.02, -0.01, 0.05, -0.03).unwrap();
        let call = OptionSpec::call(0.1, 0.7, 0.0).unwrap();
        let put = call.with_kind(OptionKind::Put);
        let a = price_u01(&theta(), &slow, &call, &Contour::default_for(OptionKind::Call)).unwrap();
        let b = price_u01(&theta(), &slow, &put, &Contour::default_for(OptionKind::Put)).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn from_factor_products() {
        let s = SlowParams::from_factor(0.5, 0.2, -0.4, 0.25, 0.08, 1.2).unwrap();
        assert!((s.v1 - 0.5 * -0.4 * 0.25 * 0.08).abs() < 1e-16);
        assert!((s.v0 + 0.5 * 0.2 * 0.08).abs() < 1e-16);
        assert!((s.u1 - 0.5 * -0.4 * 0.25 * 1.2).abs() < 1e-16);
        assert!((s.u0 + 0.5 * 0.2 * 1.2).abs() < 1e-16);
        assert!(SlowParams::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn combined_terms_match_separate_calls() {
        let th = theta().with_groups(-0.004, -0.05, -0.003, -0.06);
        let slow = SlowParams::new(0.02, -0.01, 0.05, -0.03).unwrap();
        let spec = OptionSpec::put(-0.1, 0.3, 0.0).unwrap();
        let c = Contour::default_for(OptionKind::Put);
        let all = price_multiscale(&th, &slow, &spec, &c).unwrap();
        let u01 = price_u01(&th, &slow, &spec, &c).unwrap();
        assert!((all.delta_u01 - u01).abs() < 1e-12);
        assert!((all.approx() - all.u0 - all.eps_u1 - u01).abs() < 1e-12);
    }
}
