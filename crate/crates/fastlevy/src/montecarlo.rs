//! Monte Carlo simulation of the full two-scale model under the pricing
//! measure, for the exponential OU specification.
//!
//! Each step freezes `σ(Y)` and `ζ(Y)` at the start of the step, moves `X`
//! by an Euler increment with a Poisson number of jumps, and moves `Y` by its
//! exact OU transition. Paths (or antithetic pairs) draw from their own
//! ChaCha stream, so results do not depend on the thread count.

use std::time::Instant;

use fastlevy_core::groups::OuSpec;
use fastlevy_core::levy::LevyMeasure;
use fastlevy_core::pricing::{OptionKind, OptionSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling on `paths × steps`.
pub const DEFAULT_BUDGET: u64 = 5_000_000_000;
const CHUNK: u64 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Total number of paths, counting both members of antithetic pairs.
    pub n_paths: u64,
    /// Time step; `None` uses `eps² / 20`.
    pub dt: Option<f64>,
    pub seed: u64,
    pub antithetic: bool,
    /// Largest allowed `n_paths × steps`.
    pub budget: u64,
    /// Initial value of the fast factor.
    pub y0: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { n_paths: 400_000, dt: None, seed: 0, antithetic: false, budget: DEFAULT_BUDGET, y0: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub price: f64,
    pub stderr: f64,
    pub paths: u64,
    pub elapsed_secs: f64,
}

/// Terminal payoff as a function of `X_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payoff {
    Call {
        k: f64,
    },
    Put {
        k: f64,
    },
    /// `e^{X_t}`, whose expectation is the initial spot.
    Asset,
}

impl Payoff {
    pub fn from_option(spec: &OptionSpec) -> Self {
        match spec.kind {
            OptionKind::Call => Payoff::Call { k: spec.k },
            OptionKind::Put => Payoff::Put { k: spec.k },
        }
    }

    #[inline]
    fn value(&self, x: f64) -> f64 {
        match *self {
            Payoff::Call { k } => (x.exp() - k.exp()).max(0.0),
            Payoff::Put { k } => (k.exp() - x.exp()).max(0.0),
            Payoff::Asset => x.exp(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum JumpLaw {
    Normal {
        m: f64,
        s: f64,
    },
    /// Left-skewed Gumbel, sampled through its quantile.
    Gumbel {
        m: f64,
        sigma: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Point {
        a: f64,
    },
}

impl JumpLaw {
    fn new(measure: &LevyMeasure) -> Result<Self> {
        measure.validate()?;
        Ok(match *measure {
            LevyMeasure::Merton { m, s } => JumpLaw::Normal { m, s },
            LevyMeasure::Gumbel { m, sigma } => JumpLaw::Gumbel { m, sigma },
            LevyMeasure::Uniform { a, b } => JumpLaw::Uniform { a, b },
            LevyMeasure::Dirac { a } => JumpLaw::Point { a },
            LevyMeasure::VarianceGamma { .. } => {
                return Err(Error::Input("variance gamma has infinite activity and cannot be simulated".into()))
            }
        })
    }

    /// A jump size and its antithetic reflection.
    #[inline]
    fn sample_pair<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        match *self {
            JumpLaw::Normal { m, s } => {
                let z: f64 = rng.sample(StandardNormal);
                (m + s * z, m - s * z)
            }
            JumpLaw::Gumbel { m, sigma } => {
                let u: f64 = rng.sample(Open01);
                let q = |u: f64| m + sigma * (-(-u).ln_1p()).ln();
                (q(u), q(1.0 - u))
            }
            JumpLaw::Uniform { a, b } => {
                let u: f64 = rng.sample(Open01);
                (a + (b - a) * u, a + (b - a) * (1.0 - u))
            }
            JumpLaw::Point { a } => (a, a),
        }
    }
}

/// Inverse-CDF Poisson draw.
#[inline]
fn poisson(mean: f64, u: f64) -> u32 {
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut k = 0u32;
    while u > cdf && k < 10_000 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
        if p == 0.0 {
            break;
        }
    }
    k
}

struct Stepper {
    steps: usize,
    dt: f64,
    sqrt_dt: f64,
    decay: f64,
    mean: f64,
    ou_sd: f64,
    rho: f64,
    rho_c: f64,
    a: f64,
    b: f64,
    /// `∫(e^z - 1)ν(dz)`: compensator of the uncompensated jump sum.
    comp: f64,
    law: JumpLaw,
    x0: f64,
    y0: f64,
}

impl Stepper {
    /// Advances one path (or an antithetic pair) to maturity. Returns the
    /// step index of the first non-finite state on failure.
    #[inline]
    fn run<const TWIN: bool, R: Rng>(&self, rng: &mut R) -> std::result::Result<(f64, f64), usize> {
        let (mut x1, mut y1) = (self.x0, self.y0);
        let (mut x2, mut y2) = (self.x0, self.y0);
        for step in 0..self.steps {
            let zb: f64 = rng.sample(StandardNormal);
            let zo: f64 = rng.sample(StandardNormal);
            let zw = self.rho * zb + self.rho_c * zo;
            let u: f64 = rng.sample(Open01);

            let e1 = y1.exp();
            let (s1, l1) = (self.a * e1, self.b * e1 * self.dt);
            x1 += (-0.5 * s1 * s1) * self.dt - l1 * self.comp + s1 * self.sqrt_dt * zw;
            y1 = self.mean + (y1 - self.mean) * self.decay + self.ou_sd * zb;
            let n1 = poisson(l1, u);

            let mut n2 = 0;
            if TWIN {
                let e2 = y2.exp();
                let (s2, l2) = (self.a * e2, self.b * e2 * self.dt);
                x2 += (-0.5 * s2 * s2) * self.dt - l2 * self.comp - s2 * self.sqrt_dt * zw;
                y2 = self.mean + (y2 - self.mean) * self.decay - self.ou_sd * zb;
                n2 = poisson(l2, 1.0 - u);
            }
            for j in 0..n1.max(n2) {
                let (j1, j2) = self.law.sample_pair(rng);
                if j < n1 {
                    x1 += j1;
                }
                if j < n2 {
                    x2 += j2;
                }
            }
            if !x1.is_finite() || (TWIN && !x2.is_finite()) {
                return Err(step);
            }
        }
        Ok((x1, x2))
    }
}

fn validate(ou: &OuSpec, t: f64, cfg: &McConfig) -> Result<(usize, f64)> {
    ou.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Input(format!("maturity {t} must be positive")));
    }
    if cfg.n_paths < 10_000 {
        return Err(Error::Input(format!("at least 10000 paths are required, got {}", cfg.n_paths)));
    }
    if cfg.antithetic && !cfg.n_paths.is_multiple_of(2) {
        return Err(Error::Input("antithetic sampling needs an even path count".into()));
    }
    if !cfg.y0.is_finite() {
        return Err(Error::Input("initial factor value must be finite".into()));
    }
    let dt_max = ou.eps * ou.eps / 20.0;
    let dt = cfg.dt.unwrap_or(dt_max);
    if !(dt > 0.0) || dt > dt_max * (1.0 + 1e-12) {
        return Err(Error::Input(format!("time step {dt} must be positive and at most eps^2/20 = {dt_max}")));
    }
    let steps = (t / dt - 1e-9).ceil().max(1.0) as usize;
    let required = cfg.n_paths.saturating_mul(steps as u64);
    if required > cfg.budget {
        return Err(Error::Budget { required, budget: cfg.budget });
    }
    Ok((steps, t / steps as f64))
}

/// Prices several payoffs on a common set of paths started at log-spot `x0`.
pub fn simulate_prices(
    ou: &OuSpec,
    measure: &LevyMeasure,
    x0: f64,
    t: f64,
    payoffs: &[Payoff],
    cfg: &McConfig,
) -> Result<Vec<McResult>> {
    let start = Instant::now();
    let (steps, dt) = validate(ou, t, cfg)?;
    if !x0.is_finite() {
        return Err(Error::Input("initial log-spot must be finite".into()));
    }
    let law = JumpLaw::new(measure)?;
    let h = dt / (ou.eps * ou.eps);
    let stepper = Stepper {
        steps,
        dt,
        sqrt_dt: dt.sqrt(),
        decay: (-h).exp(),
        mean: -ou.eps * ou.lam * ou.beta,
        ou_sd: ou.beta * (-(-2.0 * h).exp_m1() / 2.0).sqrt(),
        rho: ou.rho,
        rho_c: (1.0 - ou.rho * ou.rho).max(0.0).sqrt(),
        a: ou.a,
        b: ou.b,
        comp: measure.exp_moment() + measure.first_moment(),
        law,
        x0,
        y0: cfg.y0,
    };

    let units = if cfg.antithetic { cfg.n_paths / 2 } else { cfg.n_paths };
    let n_chunks = units.div_ceil(CHUNK);
    let np = payoffs.len();
    let base = ChaCha8Rng::seed_from_u64(cfg.seed);
    let chunk_sums: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; 2 * np];
            for unit in c * CHUNK..((c + 1) * CHUNK).min(units) {
                let mut rng = base.clone();
                rng.set_stream(unit);
                let outcome =
                    if cfg.antithetic { stepper.run::<true, _>(&mut rng) } else { stepper.run::<false, _>(&mut rng) };
                let (x1, x2) = outcome.map_err(|step| Error::NonFinitePath { seed: cfg.seed, path: unit, step })?;
                for (i, p) in payoffs.iter().enumerate() {
                    let v = if cfg.antithetic { 0.5 * (p.value(x1) + p.value(x2)) } else { p.value(x1) };
                    acc[2 * i] += v;
                    acc[2 * i + 1] += v * v;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let mut totals = vec![0.0; 2 * np];
    for sums in &chunk_sums {
        for (t, s) in totals.iter_mut().zip(sums) {
            *t += s;
        }
    }
    let n = units as f64;
    let elapsed = start.elapsed().as_secs_f64();
    Ok((0..np)
        .map(|i| {
            let mean = totals[2 * i] / n;
            let var = ((totals[2 * i + 1] / n - mean * mean) * n / (n - 1.0)).max(0.0);
            McResult { price: mean, stderr: (var / n).sqrt(), paths: cfg.n_paths, elapsed_secs: elapsed }
        })
        .collect())
}

/// Prices one option.
pub fn simulate_price(ou: &OuSpec, measure: &LevyMeasure, option: &OptionSpec, cfg: &McConfig) -> Result<McResult> {
    option.validate()?;
    let out = simulate_prices(ou, measure, option.x, option.t, &[Payoff::from_option(option)], cfg)?;
    Ok(out[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_inverse_cdf() {
        assert_eq!(poisson(0.0, 0.5), 0);
        assert_eq!(poisson(1.0, 0.3), 0);
        assert_eq!(poisson(1.0, 0.5), 1);
        // P(N <= 1) = 2/e at mean 1
        assert_eq!(poisson(1.0, 2.0 / 1f64.exp() - 1e-9), 1);
        assert_eq!(poisson(1.0, 2.0 / 1f64.exp() + 1e-9), 2);
    }

    #[test]
    fn rejects_variance_gamma_and_coarse_steps() {
        let ou = OuSpec { a: 0.2, b: 1.5, beta: 1.0, lam: 0.25, rho: -0.7, eps: 0.1 };
        let vg = LevyMeasure::variance_gamma(10.0, 10.0, 1.0).unwrap();
        let spec = OptionSpec::call(0.0, 0.1, 0.0).unwrap();
        assert!(simulate_price(&ou, &vg, &spec, &McConfig::default()).is_err());
        let merton = LevyMeasure::merton(-0.2, 0.2).unwrap();
        let cfg = McConfig { dt: Some(1e-3), ..McConfig::default() };
        assert!(matches!(simulate_price(&ou, &merton, &spec, &cfg), Err(Error::Input(_))));
        let cfg = McConfig { budget: 1000, ..McConfig::default() };
        assert!(matches!(simulate_price(&ou, &merton, &spec, &cfg), Err(Error::Budget { .. })));
    }

    #[test]
    fn gumbel_quantile_has_expected_mean() {
        let law = JumpLaw::Gumbel { m: -0.1, sigma: 0.05 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| law.sample_pair(&mut rng).0).sum::<f64>() / n as f64;
        let exact = -0.1 - 0.05 * fastlevy_core::special::EULER_GAMMA;
        assert!((mean - exact).abs() < 5e-4, "{mean} vs {exact}");
    }
}
