//! Averages and group parameters for an Ornstein–Uhlenbeck fast factor.
//!
//! The factor has generator `β²/2 ∂yy - y ∂y` and invariant law
//! `N(0, β²/2)`. [`ou_closed_forms`] covers the exponential specification
//! `σ(y) = a e^y`, `ζ(y) = b e^y`; [`poisson_oracle`] handles arbitrary
//! level functions by quadrature.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{domain, numeric, Result};
use crate::levy::LevyMeasure;
use crate::pricing::ModelParams;
use crate::special::gauss_hermite;

/// Exponential specification driven by a fast OU factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuSpec {
    /// Volatility scale, `σ(y) = a e^y`.
    pub a: f64,
    /// Intensity scale, `ζ(y) = b e^y`.
    pub b: f64,
    /// Factor volatility.
    pub beta: f64,
    /// Market price of volatility risk.
    #[serde(alias = "Lam")]
    pub lam: f64,
    pub rho: f64,
    pub eps: f64,
}

impl OuSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.beta, self.lam, self.rho, self.eps].iter().all(|v| v.is_finite());
        if !finite {
            return Err(domain!("OU specification has non-finite fields"));
        }
        if !(self.a > 0.0) {
            return Err(domain!("a = {} must be positive", self.a));
        }
        if !(self.b >= 0.0) {
            return Err(domain!("b = {} must be non-negative", self.b));
        }
        if !(self.beta > 0.0) {
            return Err(domain!("beta = {} must be positive", self.beta));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(domain!("rho = {} must lie in [-1, 1]", self.rho));
        }
        if !(self.eps > 0.0) {
            return Err(domain!("eps = {} must be positive", self.eps));
        }
        Ok(())
    }

    pub fn sigma(&self, y: f64) -> f64 {
        self.a * y.exp()
    }

    pub fn zeta(&self, y: f64) -> f64 {
        self.b * y.exp()
    }

    /// Variance of the invariant law.
    pub fn invariant_variance(&self) -> f64 {
        0.5 * self.beta * self.beta
    }
}

/// Averaged coefficients and group parameters, unscaled and eps-scaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupParams {
    pub sig2_bar: f64,
    pub zeta_bar: f64,
    pub v3: f64,
    pub u3: f64,
    pub v2: f64,
    pub u2: f64,
    pub v3e: f64,
    pub u3e: f64,
    pub v2e: f64,
    pub u2e: f64,
}

impl GroupParams {
    fn scaled(sig2_bar: f64, zeta_bar: f64, raw: [f64; 4], eps: f64) -> Self {
        let [v3, u3, v2, u2] = raw;
        GroupParams { sig2_bar, zeta_bar, v3, u3, v2, u2, v3e: eps * v3, u3e: eps * u3, v2e: eps * v2, u2e: eps * u2 }
    }

    pub fn unscaled(&self) -> [f64; 4] {
        [self.v3, self.u3, self.v2, self.u2]
    }

    pub fn eps_scaled(&self) -> [f64; 4] {
        [self.v3e, self.u3e, self.v2e, self.u2e]
    }

    /// Pricing parameters for a given jump measure.
    pub fn model_params(&self, measure: LevyMeasure) -> Result<ModelParams> {
        Ok(ModelParams::new(self.sig2_bar, self.zeta_bar, measure)?.with_groups(self.v3e, self.u3e, self.v2e, self.u2e))
    }
}

/// Closed-form averages and group parameters of the exponential specification.
pub fn ou_closed_forms(spec: &OuSpec) -> Result<GroupParams> {
    spec.validate()?;
    let OuSpec { a, b, beta, lam, rho, eps } = *spec;
    let b2 = beta * beta;
    let sig2_bar = a * a * b2.exp();
    let zeta_bar = b * (0.25 * b2).exp();
    let v3 = rho / beta * a * a * a * (1.25 * b2).exp() * b2.exp_m1();
    let u3 = rho / beta * 2.0 * a * b * (b2.exp() - (0.5 * b2).exp());
    let v2 = -beta * lam * sig2_bar;
    let u2 = -beta * lam * zeta_bar;
    Ok(GroupParams::scaled(sig2_bar, zeta_bar, [v3, u3, v2, u2], eps))
}

/// Lower limit used for the cumulative integral in [`poisson_oracle`]. The
/// Poisson solution is defined up to a constant, so both give the same
/// derivative up to the (vanishing) total mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Anchor {
    #[default]
    Left,
    Right,
}

/// Grid and quadrature sizes for [`poisson_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Number of grid panels on `[-8β, 8β]` (even).
    pub panels: usize,
    /// Gauss–Hermite order for the averages.
    pub hermite_order: usize,
    pub anchor: Anchor,
    /// Relative agreement required between the grid and its halving.
    pub rel_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { panels: 4000, hermite_order: 80, anchor: Anchor::Left, rel_tol: 1e-8 }
    }
}

/// Group parameters for arbitrary level functions `σ(y)`, `ζ(y)` under the
/// OU factor with volatility `beta`, by solving the two Poisson equations
/// through their integrating-factor representation.
///
/// With `F(y) = ∫_{-∞}^y (σ² - <σ²>) p du` and `p` the invariant density,
/// `η' = 2F / (β² p)`, so bracket averages reduce to plain integrals such as
/// `<β σ η'> = (2/β) ∫ σ F dy`.
pub fn poisson_oracle(
    sigma: impl Fn(f64) -> f64,
    zeta: impl Fn(f64) -> f64,
    beta: f64,
    lam: f64,
    rho: f64,
    eps: f64,
    opts: &OracleOptions,
) -> Result<GroupParams> {
    if !(beta > 0.0 && beta.is_finite()) || !lam.is_finite() || !(-1.0..=1.0).contains(&rho) {
        return Err(domain!("invalid factor parameters (beta = {beta}, lam = {lam}, rho = {rho})"));
    }
    if !(eps > 0.0) {
        return Err(domain!("eps = {eps} must be positive"));
    }
    if opts.panels < 4 || !opts.panels.is_multiple_of(2) {
        return Err(domain!("panel count must be even and at least 4"));
    }

    let (nodes, weights) = gauss_hermite(opts.hermite_order);
    let average = |g: &dyn Fn(f64) -> f64| -> f64 {
        nodes.iter().zip(&weights).map(|(x, w)| w * g(beta * x)).sum::<f64>() / PI.sqrt()
    };
    let sig2_bar = average(&|y| sigma(y) * sigma(y));
    let zeta_bar = average(&|y| zeta(y));
    if !sig2_bar.is_finite() || !zeta_bar.is_finite() {
        return Err(numeric!("non-finite averages"));
    }

    let fine = brackets(&sigma, &zeta, beta, sig2_bar, zeta_bar, opts.panels, opts.anchor);
    let coarse = brackets(&sigma, &zeta, beta, sig2_bar, zeta_bar, opts.panels / 2, opts.anchor);
    let size = fine.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for (f, c) in fine.iter().zip(&coarse) {
        if !f.is_finite() || (f - c).abs() > opts.rel_tol * size.max(1e-300) {
            return Err(numeric!("Poisson quadrature did not converge ({f} vs {c} on the halved grid)"));
        }
    }
    // fine = [<βση'>, <βσξ'>, <η'>, <ξ'>]
    let [s_eta, s_xi, eta, xi] = fine;
    let v3 = -0.5 * rho * s_eta;
    let u3 = -rho * s_xi;
    let v2 = 0.5 * beta * lam * eta;
    let u2 = beta * lam * xi;
    Ok(GroupParams::scaled(sig2_bar, zeta_bar, [v3, u3, v2, u2], eps))
}

/// Returns `[<βση'>, <βσξ'>, <η'>, <ξ'>]` on a grid of `n` panels.
fn brackets(
    sigma: &impl Fn(f64) -> f64,
    zeta: &impl Fn(f64) -> f64,
    beta: f64,
    sig2_bar: f64,
    zeta_bar: f64,
    n: usize,
    anchor: Anchor,
) -> [f64; 4] {
    let var = 0.5 * beta * beta;
    let norm = 1.0 / (2.0 * PI * var).sqrt();
    let density = |y: f64| norm * (-y * y / (2.0 * var)).exp();
    let (lo, hi) = (-8.0 * beta, 8.0 * beta);
    let h = (hi - lo) / n as f64;
    let ys: Vec<f64> = (0..=n).map(|j| lo + j as f64 * h).collect();
    let g_eta = |y: f64| (sigma(y) * sigma(y) - sig2_bar) * density(y);
    let g_xi = |y: f64| (zeta(y) - zeta_bar) * density(y);

    // cumulative Simpson with a midpoint per panel
    let cumulative = |g: &dyn Fn(f64) -> f64| -> Vec<f64> {
        let panel: Vec<f64> =
            ys.windows(2).map(|w| h / 6.0 * (g(w[0]) + 4.0 * g(0.5 * (w[0] + w[1])) + g(w[1]))).collect();
        let mut out = alloc::vec![0.0; n + 1];
        match anchor {
            Anchor::Left => {
                for j in 0..n {
                    out[j + 1] = out[j] + panel[j];
                }
            }
            Anchor::Right => {
                for j in (0..n).rev() {
                    out[j] = out[j + 1] - panel[j];
                }
            }
        }
        out
    };
    let f_eta = cumulative(&g_eta);
    let f_xi = cumulative(&g_xi);

    let simpson_on_grid = |vals: &dyn Fn(usize) -> f64| -> f64 {
        let mut acc = vals(0) + vals(n);
        for j in 1..n {
            acc += if j % 2 == 1 { 4.0 } else { 2.0 } * vals(j);
        }
        acc * h / 3.0
    };
    let scale = 2.0 / (beta * beta);
    let s_eta = beta * scale * simpson_on_grid(&|j| sigma(ys[j]) * f_eta[j]);
    let s_xi = beta * scale * simpson_on_grid(&|j| sigma(ys[j]) * f_xi[j]);
    let eta = scale * simpson_on_grid(&|j| f_eta[j]);
    let xi = scale * simpson_on_grid(&|j| f_xi[j]);
    [s_eta, s_xi, eta, xi]
}

/// [`poisson_oracle`] applied to the exponential specification.
pub fn poisson_oracle_ou(spec: &OuSpec, opts: &OracleOptions) -> Result<GroupParams> {
    spec.validate()?;
    poisson_oracle(|y| spec.sigma(y), |y| spec.zeta(y), spec.beta, spec.lam, spec.rho, spec.eps, opts)
}
