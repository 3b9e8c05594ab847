//! Lévy measures for the jump component and their characteristic integrals
//! `∫ (e^{iλz} - 1 - iλz) ν(dz)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use serde::{Deserialize, Serialize};

use crate::error::{domain, numeric, Error, Result};
use crate::special::{ln_gamma, EULER_GAMMA};
use crate::C64;

/// Jump-size measure `ν`. The finite-activity variants are probability
/// measures; `VarianceGamma` has infinite activity.
///
/// Serialized with an internal `variant` tag, e.g.
/// `{"variant": "merton", "m": -0.2, "s": 0.2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase", deny_unknown_fields)]
pub enum LevyMeasure {
    /// Normal log-jumps with mean `m` and standard deviation `s`.
    Merton { m: f64, s: f64 },
    /// Minimum-Gumbel log-jumps, density `exp((z-m)/σ - e^{(z-m)/σ}) / σ`.
    Gumbel {
        m: f64,
        #[serde(alias = "s")]
        sigma: f64,
    },
    /// A single jump size `a`.
    Dirac { a: f64 },
    /// `e^{-az}/z` on `z > 0` plus `B e^{bz}/|z|` on `z < 0`.
    #[serde(rename = "vg", alias = "variancegamma")]
    VarianceGamma {
        a: f64,
        b: f64,
        #[serde(rename = "B")]
        weight: f64,
    },
    /// Uniform log-jumps on `[a, b]`.
    Uniform { a: f64, b: f64 },
}

/// `e^z - 1 - z`, accurate for small `|z|`.
pub(crate) fn exp_rem2(z: C64) -> C64 {
    if z.norm() < 0.1 {
        // z²/2! + z³/3! + ... through z¹²/12!
        let mut term = z * z * 0.5;
        let mut acc = term;
        for n in 3..=12 {
            term = term * z / n as f64;
            acc += term;
        }
        acc
    } else {
        z.exp() - 1.0 - z
    }
}

/// `ln(1 + u) - u`, accurate for small `|u|`.
fn ln1p_rem(u: C64) -> C64 {
    if u.norm() < 0.1 {
        let mut pow = u * u;
        let mut acc = C64::new(0.0, 0.0);
        for n in 2..=18 {
            let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
            acc += pow * (sign / n as f64);
            pow *= u;
        }
        acc
    } else {
        (u + 1.0).ln() - u
    }
}

fn real_exp_rem2(x: f64) -> f64 {
    exp_rem2(C64::new(x, 0.0)).re
}

impl LevyMeasure {
    pub fn merton(m: f64, s: f64) -> Result<Self> {
        LevyMeasure::Merton { m, s }.checked()
    }

    pub fn gumbel(m: f64, sigma: f64) -> Result<Self> {
        LevyMeasure::Gumbel { m, sigma }.checked()
    }

    pub fn dirac(a: f64) -> Result<Self> {
        LevyMeasure::Dirac { a }.checked()
    }

    pub fn variance_gamma(a: f64, b: f64, weight: f64) -> Result<Self> {
        LevyMeasure::VarianceGamma { a, b, weight }.checked()
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        LevyMeasure::Uniform { a, b }.checked()
    }

    fn checked(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Lowercase tag used in files and on the command line.
    pub fn tag(&self) -> &'static str {
        match self {
            LevyMeasure::Merton { .. } => "merton",
            LevyMeasure::Gumbel { .. } => "gumbel",
            LevyMeasure::Dirac { .. } => "dirac",
            LevyMeasure::VarianceGamma { .. } => "vg",
            LevyMeasure::Uniform { .. } => "uniform",
        }
    }

    /// Whether `ν` is a probability measure (finite activity, unit mass).
    pub fn is_probability(&self) -> bool {
        !matches!(self, LevyMeasure::VarianceGamma { .. })
    }

    /// Lists every violated admissibility condition: `∫ min(1, z²) ν < ∞`,
    /// `∫_{|z|≥1} e^z ν < ∞`, `∫_{|z|≥1} |z| ν < ∞`, plus parameter
    /// well-formedness.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut finite = |name: &str, x: f64| {
            if !x.is_finite() {
                v.push(format!("parameter {name} = {x} is not finite"));
                false
            } else {
                true
            }
        };
        match *self {
            LevyMeasure::Merton { m, s } => {
                if finite("m", m) && finite("s", s) && s < 0.0 {
                    v.push(format!("merton s = {s} must be >= 0"));
                }
            }
            LevyMeasure::Gumbel { m, sigma } => {
                if finite("m", m) && finite("sigma", sigma) && sigma <= 0.0 {
                    v.push(format!("gumbel sigma = {sigma} must be > 0"));
                }
            }
            LevyMeasure::Dirac { a } => {
                finite("a", a);
            }
            LevyMeasure::VarianceGamma { a, b, weight } => {
                let ok = finite("a", a) & finite("b", b) & finite("B", weight);
                if ok {
                    if a <= 0.0 {
                        v.push(format!("vg a = {a}: integral of min(1, z^2) nu(dz) diverges on z > 0"));
                    }
                    if a <= 1.0 {
                        v.push(format!("vg a = {a}: integral of e^z nu(dz) over |z| >= 1 diverges (needs a > 1)"));
                    }
                    if b <= 0.0 && weight > 0.0 {
                        v.push(format!("vg b = {b}: integral of |z| nu(dz) over |z| >= 1 diverges (needs b > 0)"));
                    } else if b <= 0.0 {
                        v.push(format!("vg b = {b} must be > 0"));
                    }
                    if weight < 0.0 {
                        v.push(format!("vg B = {weight} must be >= 0"));
                    }
                }
            }
            LevyMeasure::Uniform { a, b } => {
                if finite("a", a) && finite("b", b) && a >= b {
                    v.push(format!("uniform support needs a < b (a = {a}, b = {b})"));
                }
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Inadmissible(v))
        }
    }

    /// Open interval of `Im λ` on which the characteristic integral is
    /// analytic (principal logarithms stay single-valued).
    pub fn strip(&self) -> (f64, f64) {
        match *self {
            LevyMeasure::Gumbel { sigma, .. } => (f64::NEG_INFINITY, 1.0 / sigma),
            LevyMeasure::VarianceGamma { a, b, .. } => (-a, b),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn in_strip(&self, lambda_i: f64) -> bool {
        let (lo, hi) = self.strip();
        lambda_i > lo && lambda_i < hi
    }

    /// `∫ (e^{iλz} - 1 - iλz) ν(dz)` in closed form.
    pub fn char_integral(&self, lambda: C64) -> Result<C64> {
        if !self.in_strip(lambda.im) {
            let (lo, hi) = self.strip();
            return Err(domain!("Im(lambda) = {} outside the {} strip ({lo}, {hi})", lambda.im, self.tag()));
        }
        if lambda.re == 0.0 && lambda.im == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let il = C64::i() * lambda;
        let value = match *self {
            LevyMeasure::Merton { m, s } => {
                let w = il * m - 0.5 * s * s * lambda * lambda;
                exp_rem2(w) - 0.5 * s * s * lambda * lambda
            }
            LevyMeasure::Dirac { a } => exp_rem2(il * a),
            LevyMeasure::Gumbel { m, sigma } => {
                // e^{iλm} Γ(1 + iλσ) - 1 - iλ(m - σγ)
                let lg = ln_gamma(il * sigma + 1.0);
                let w = il * m + lg;
                exp_rem2(w) + lg + il * (sigma * EULER_GAMMA)
            }
            LevyMeasure::VarianceGamma { a, b, weight } => -ln1p_rem(-il / a) - ln1p_rem(il / b) * weight,
            LevyMeasure::Uniform { a, b } => {
                let c = 0.5 * (a + b);
                let w = lambda * (0.5 * (b - a));
                // sin(w)/w - 1
                let sinc_m1 = if (lambda * (b - a)).norm() < 1e-2 {
                    let w2 = w * w;
                    w2 * (-1.0 / 6.0
                        + w2 * (1.0 / 120.0 + w2 * (-1.0 / 5040.0 + w2 * (1.0 / 362_880.0 - w2 / 39_916_800.0))))
                } else {
                    w.sin() / w - 1.0
                };
                (il * c).exp() * sinc_m1 + exp_rem2(il * c)
            }
        };
        if value.re.is_finite() && value.im.is_finite() {
            Ok(value)
        } else {
            Err(numeric!("non-finite characteristic integral at lambda = {lambda}"))
        }
    }

    /// `∫ (e^z - 1 - z) ν(dz)`, the exponential compensator.
    pub fn exp_moment(&self) -> f64 {
        match *self {
            LevyMeasure::Merton { m, s } => real_exp_rem2(m + 0.5 * s * s) + 0.5 * s * s,
            LevyMeasure::Dirac { a } => real_exp_rem2(a),
            LevyMeasure::Gumbel { m, sigma } => {
                let lg = ln_gamma(C64::new(1.0 + sigma, 0.0)).re;
                real_exp_rem2(m + lg) + lg + sigma * EULER_GAMMA
            }
            LevyMeasure::VarianceGamma { a, b, weight } => {
                -(libm::log1p(-1.0 / a) + 1.0 / a) - weight * (libm::log1p(1.0 / b) - 1.0 / b)
            }
            LevyMeasure::Uniform { a, b } => {
                let c = 0.5 * (a + b);
                let h = 0.5 * (b - a);
                let sinh_m1 = if h < 5e-3 {
                    let h2 = h * h;
                    h2 * (1.0 / 6.0 + h2 * (1.0 / 120.0 + h2 * (1.0 / 5040.0 + h2 / 362_880.0)))
                } else {
                    h.sinh() / h - 1.0
                };
                c.exp() * sinh_m1 + real_exp_rem2(c)
            }
        }
    }

    /// `∫ z ν(dz)`.
    pub fn first_moment(&self) -> f64 {
        match *self {
            LevyMeasure::Merton { m, .. } => m,
            LevyMeasure::Gumbel { m, sigma } => m - sigma * EULER_GAMMA,
            LevyMeasure::Dirac { a } => a,
            LevyMeasure::VarianceGamma { a, b, weight } => 1.0 / a - weight / b,
            LevyMeasure::Uniform { a, b } => 0.5 * (a + b),
        }
    }
}
