//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use fastlevy_core::levy::LevyMeasure;
use fastlevy_core::pricing::{integrate_hermitian, payoff_transform, Contour, ModelParams, OptionSpec};
use fastlevy_core::quadrature::integrate;
use fastlevy_core::C64;
use rand::Rng;

/// `e^w - 1 - w`, by power series near the origin.
pub fn rem(w: C64) -> C64 {
    if w.norm() < 0.5 {
        let (mut term, mut acc) = (w * w * 0.5, C64::new(0.0, 0.0));
        for n in 3..40 {
            acc += term;
            term = term * w / n as f64;
        }
        acc
    } else {
        w.exp() - 1.0 - w
    }
}

fn quad(f: impl Fn(f64) -> C64, a: f64, b: f64) -> C64 {
    integrate(f, a, b, 1e-300, 1e-12).expect("oracle quadrature")
}

/// `∫ (e^{iλz} - 1 - iλz) ν(dz)` by direct quadrature against the density.
pub fn char_integral_by_density(nu: &LevyMeasure, lambda: C64) -> C64 {
    let i = C64::i();
    match *nu {
        LevyMeasure::Merton { m, s } => {
            let pdf = |z: f64| (-(z - m).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt());
            quad(|z| rem(i * lambda * z) * pdf(z), m - 14.0 * s, m + 14.0 * s)
        }
        LevyMeasure::Gumbel { m, sigma } => {
            // z = m + σw, density e^{w - e^w}
            let decay = 1.0 - sigma * lambda.im;
            let lo = -60.0_f64.max(60.0 / decay);
            quad(|w| rem(i * lambda * (m + sigma * w)) * (w - w.exp()).exp(), lo, 4.5)
        }
        LevyMeasure::Dirac { a } => (i * lambda * a).exp() - 1.0 - i * lambda * a,
        LevyMeasure::VarianceGamma { a, b, weight } => {
            let kernel = |z: f64| {
                let w = i * lambda * z;
                // (e^w - 1 - w) / z without cancellation near 0
                if w.norm() < 0.5 {
                    rem(w) / z
                } else {
                    (w.exp() - 1.0 - w) / z
                }
            };
            let zp = 60.0 / a.min(a + lambda.im);
            let zn = 60.0 / b.min(b - lambda.im);
            let pos = quad(|z| kernel(z) * (-a * z).exp(), 0.0, zp);
            let neg = quad(|z| kernel(-z) * (-b * z).exp() * -1.0, 0.0, zn);
            pos + neg * weight
        }
        LevyMeasure::Uniform { a, b } => quad(|z| rem(i * lambda * z) / (b - a), a, b),
    }
}

pub const TAGS: [&str; 5] = ["merton", "gumbel", "dirac", "vg", "uniform"];

pub fn random_measure<R: Rng>(rng: &mut R, tag: &str) -> LevyMeasure {
    match tag {
        "merton" => LevyMeasure::merton(rng.random_range(-0.6..0.3), rng.random_range(0.05..0.5)),
        "gumbel" => LevyMeasure::gumbel(rng.random_range(-0.3..0.1), rng.random_range(0.03..0.3)),
        "dirac" => LevyMeasure::dirac(rng.random_range(-0.5..0.3)),
        "vg" => LevyMeasure::variance_gamma(
            rng.random_range(2.0..300.0),
            rng.random_range(2.0..50.0),
            rng.random_range(0.1..70.0),
        ),
        "uniform" => {
            let a = rng.random_range(-0.5..0.0);
            LevyMeasure::uniform(a, rng.random_range(a + 0.01..0.3))
        }
        _ => unreachable!("unknown tag {tag}"),
    }
    .expect("admissible draw")
}

/// A point in the measure's strip, away from its edges.
pub fn random_lambda<R: Rng>(rng: &mut R, nu: &LevyMeasure) -> C64 {
    let (lo, hi) = nu.strip();
    let lo = if lo.is_finite() { (0.9 * lo).max(-3.0) } else { -3.0 };
    let hi = if hi.is_finite() { (0.9 * hi).min(3.0) } else { 3.0 };
    C64::new(rng.random_range(-30.0..30.0), rng.random_range(lo..hi))
}

pub fn random_theta<R: Rng>(rng: &mut R, nu: LevyMeasure) -> ModelParams {
    ModelParams::new(rng.random_range(0.005..0.3), rng.random_range(0.0..5.0), nu)
        .expect("admissible draw")
        .with_groups(
            rng.random_range(-0.05..0.05),
            rng.random_range(-0.05..0.05),
            rng.random_range(-0.05..0.05),
            rng.random_range(-0.05..0.05),
        )
}

/// Slow-factor quantities entering the correction.
#[derive(Debug, Clone, Copy)]
pub struct SlowFactor {
    pub g: f64,
    pub gamma_avg: f64,
    pub rho_xz: f64,
    pub sigma_avg: f64,
    pub dsig2_dz: f64,
    pub dzeta_dz: f64,
}

/// `δ u01` from its defining double integral
/// `∫ dλ e^{iλx}/√(2π) ∫_0^t ds e^{(t-s)φ} (-gΓ + iλ gρσ) ∂z(e^{sφ(z)}) ĥ`,
/// with `∂z` by a five-point stencil and the time integral by Simpson on
/// 200 panels.
pub fn u01_double_integral(theta: &ModelParams, f: &SlowFactor, spec: &OptionSpec, contour: &Contour) -> f64 {
    let i = C64::i();
    let t = spec.t;
    let integrand = |lr: f64| {
        let l = C64::new(lr, contour.lambda_i);
        let phi0 = theta.phi(l)?;
        let h = 1e-3 / (1.0 + l.norm_sqr() * t);
        let phis: Vec<C64> = [-2.0, -1.0, 1.0, 2.0]
            .iter()
            .map(|&m| {
                let p = ModelParams {
                    sig2_bar: theta.sig2_bar + f.dsig2_dz * m * h,
                    zeta_bar: theta.zeta_bar + f.dzeta_dz * m * h,
                    ..*theta
                };
                p.phi(l)
            })
            .collect::<Result<_, _>>()?;
        let coef = -f.g * f.gamma_avg + i * l * (f.g * f.rho_xz * f.sigma_avg);
        let n = 200;
        let ds = t / n as f64;
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..=n {
            let s = j as f64 * ds;
            let e = |p: C64| (p * s).exp();
            let dz = (-e(phis[3]) + e(phis[2]) * 8.0 - e(phis[1]) * 8.0 + e(phis[0])) / (12.0 * h);
            let w = if j == 0 || j == n {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += (phi0 * (t - s)).exp() * dz * w;
        }
        let inner = acc * (ds / 3.0) * coef * payoff_transform(spec, l)?;
        Ok([inner * (i * l * spec.x).exp() / (2.0 * PI).sqrt()])
    };
    let width = (56.0 / (theta.sig2_bar * t)).sqrt().max(200.0);
    let scale = spec.x.exp().max(spec.k.exp());
    integrate_hermitian(integrand, width, contour, scale).expect("oracle contour quadrature").values[0]
}
