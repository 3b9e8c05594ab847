//! Asymptotic option prices `u0` and `eps * u1` as generalized Fourier
//! integrals along a horizontal contour `λ = λ_r + i λ_i`.
//!
//! With `ĥ(λ) = -e^{k - ikλ} / (√(2π)(iλ + λ²))` the transform of a call (or
//! put) payoff,
//!
//! ```text
//! u0      = (2π)^{-1/2} ∫ e^{tφ(λ)} ĥ(λ) e^{iλx} dλ_r
//! eps*u1  = (2π)^{-1/2} ∫ t e^{tφ(λ)} ĥ(λ) B(λ) e^{iλx} dλ_r
//! ```
//!
//! where `φ` is the characteristic exponent of the averaged Lévy triplet and
//! `B` the (eps-scaled) correction symbol. The integrand is Hermitian along the
//! contour, so only `[0, L]` is integrated and twice the real part is kept.

use core::f64::consts::PI;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use serde::{Deserialize, Serialize};

use crate::error::{domain, numeric, Error, Result};
use crate::levy::LevyMeasure;
use crate::C64;

/// Smallest averaged variance used inside the Fourier integrals. Below it the
/// integrand loses its Gaussian decay.
pub const SIG2_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

/// European option on `S = e^X` at zero interest rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub kind: OptionKind,
    /// Log-strike.
    pub k: f64,
    /// Time to maturity in years.
    pub t: f64,
    /// Log-spot.
    pub x: f64,
}

impl OptionSpec {
    pub fn new(kind: OptionKind, k: f64, t: f64, x: f64) -> Result<Self> {
        let spec = OptionSpec { kind, k, t, x };
        spec.validate()?;
        Ok(spec)
    }

    pub fn call(k: f64, t: f64, x: f64) -> Result<Self> {
        Self::new(OptionKind::Call, k, t, x)
    }

    pub fn put(k: f64, t: f64, x: f64) -> Result<Self> {
        Self::new(OptionKind::Put, k, t, x)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(domain!("maturity t = {} must be positive and finite", self.t));
        }
        if !self.k.is_finite() || !self.x.is_finite() {
            return Err(domain!("log-strike and log-spot must be finite"));
        }
        Ok(())
    }

    pub fn with_kind(self, kind: OptionKind) -> Self {
        OptionSpec { kind, ..self }
    }

    /// Payoff `h(x_T)`.
    pub fn payoff(&self, x_t: f64) -> f64 {
        match self.kind {
            OptionKind::Call => (x_t.exp() - self.k.exp()).max(0.0),
            OptionKind::Put => (self.k.exp() - x_t.exp()).max(0.0),
        }
    }
}

/// Calibratable parameter vector: averaged variance and jump intensity, the
/// jump measure, and the four eps-scaled group parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Averaged variance `<σ²>`.
    pub sig2_bar: f64,
    /// Averaged jump intensity `<ζ>` (per year).
    pub zeta_bar: f64,
    pub measure: LevyMeasure,
    #[serde(default)]
    pub v3e: f64,
    #[serde(default)]
    pub u3e: f64,
    #[serde(default)]
    pub v2e: f64,
    #[serde(default)]
    pub u2e: f64,
}

impl ModelParams {
    pub fn new(sig2_bar: f64, zeta_bar: f64, measure: LevyMeasure) -> Result<Self> {
        let p = ModelParams { sig2_bar, zeta_bar, measure, v3e: 0.0, u3e: 0.0, v2e: 0.0, u2e: 0.0 };
        p.validate()?;
        Ok(p)
    }

    /// Black–Scholes special case: no jumps, no correction.
    pub fn black_scholes(sigma: f64) -> Self {
        ModelParams {
            sig2_bar: sigma * sigma,
            zeta_bar: 0.0,
            measure: LevyMeasure::Dirac { a: 0.0 },
            v3e: 0.0,
            u3e: 0.0,
            v2e: 0.0,
            u2e: 0.0,
        }
    }

    /// Sets the eps-scaled group parameters `(V3, U3, V2, U2)`.
    pub fn with_groups(mut self, v3e: f64, u3e: f64, v2e: f64, u2e: f64) -> Self {
        self.v3e = v3e;
        self.u3e = u3e;
        self.v2e = v2e;
        self.u2e = u2e;
        self
    }

    pub fn groups(&self) -> [f64; 4] {
        [self.v3e, self.u3e, self.v2e, self.u2e]
    }

    pub fn has_correction(&self) -> bool {
        self.groups().iter().any(|g| *g != 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sig2_bar > 0.0 && self.sig2_bar.is_finite()) {
            return Err(domain!("sig2_bar = {} must be positive", self.sig2_bar));
        }
        if !(self.zeta_bar >= 0.0 && self.zeta_bar.is_finite()) {
            return Err(domain!("zeta_bar = {} must be non-negative", self.zeta_bar));
        }
        if self.groups().iter().any(|g| !g.is_finite()) {
            return Err(domain!("group parameters must be finite"));
        }
        self.measure.validate()
    }

    /// Averaged drift `<γ> = -<σ²>/2 - <ζ> ∫(e^z - 1 - z)ν(dz)`.
    pub fn gamma_bar(&self) -> f64 {
        -0.5 * self.sig2_bar - self.zeta_bar * self.measure.exp_moment()
    }

    /// Characteristic exponent
    /// `φ(λ) = i<γ>λ - <σ²>λ²/2 + <ζ> ∫(e^{iλz} - 1 - iλz)ν(dz)`.
    pub fn phi(&self, lambda: C64) -> Result<C64> {
        let c = self.measure.char_integral(lambda)?;
        Ok(phi_from(self.sig2_bar, self.zeta_bar, self.measure.exp_moment(), lambda, c))
    }

    /// Eps-scaled correction symbol
    /// `V3(-iλ³ + λ²) + U3(λ²E + iλC) + V2(-λ² - iλ) + U2(-iλE + C)`
    /// with `C = ∫(e^{iλz} - 1 - iλz)ν` and `E = ∫(e^z - 1 - z)ν`.
    pub fn b_symbol(&self, lambda: C64) -> Result<C64> {
        let c = self.measure.char_integral(lambda)?;
        Ok(self.b_from(lambda, c, self.measure.exp_moment()))
    }

    fn b_from(&self, l: C64, c: C64, e: f64) -> C64 {
        let i = C64::i();
        let l2 = l * l;
        (l2 - i * l2 * l) * self.v3e
            + (l2 * e + i * l * c) * self.u3e
            + (-l2 - i * l) * self.v2e
            + (c - i * l * e) * self.u2e
    }
}

#[inline]
fn phi_from(sig2: f64, zeta: f64, exp_moment: f64, l: C64, c: C64) -> C64 {
    let gamma = -0.5 * sig2 - zeta * exp_moment;
    C64::i() * l * gamma - 0.5 * sig2 * l * l + c * zeta
}

/// Generalized Fourier transform of the call/put payoff,
/// `ĥ(λ) = -e^{k - ikλ} / (√(2π)(iλ + λ²))`. Calls need `Im λ < -1`, puts
/// `Im λ > 0`.
pub fn payoff_transform(spec: &OptionSpec, lambda: C64) -> Result<C64> {
    check_payoff_strip(spec.kind, lambda.im)?;
    let i = C64::i();
    let num = (C64::new(spec.k, 0.0) - i * spec.k * lambda).exp();
    Ok(-num / ((2.0 * PI).sqrt() * (i * lambda + lambda * lambda)))
}

fn check_payoff_strip(kind: OptionKind, lambda_i: f64) -> Result<()> {
    match kind {
        OptionKind::Call if lambda_i >= -1.0 => Err(domain!("call transform needs Im(lambda) < -1, got {lambda_i}")),
        OptionKind::Put if lambda_i <= 0.0 => Err(domain!("put transform needs Im(lambda) > 0, got {lambda_i}")),
        _ => Ok(()),
    }
}

/// Integration line and quadrature controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    /// Imaginary part of the integration line.
    pub lambda_i: f64,
    /// Truncation half-width `L`; `None` starts from
    /// `max(√(56 / (<σ²> t)), 200)`.
    pub half_width: Option<f64>,
    /// Initial number of Simpson panels on `[0, L]` (even, at least 32).
    pub nodes: usize,
    /// Relative convergence tolerance between successive node doublings.
    pub rel_tol: f64,
    /// Absolute convergence tolerance, in units of `max(e^x, e^k)`.
    pub abs_tol: f64,
}

const ENDPOINT_TOL: f64 = 1e-12;
const MAX_NODES: usize = 1 << 22;
const MAX_WIDTH_DOUBLINGS: usize = 12;

impl Contour {
    pub fn new(lambda_i: f64) -> Self {
        Contour { lambda_i, half_width: None, nodes: 64, rel_tol: 1e-10, abs_tol: 1e-14 }
    }

    /// Default line: `λ_i = -1.5` for calls, `+0.5` for puts.
    pub fn default_for(kind: OptionKind) -> Self {
        match kind {
            OptionKind::Call => Contour::new(-1.5),
            OptionKind::Put => Contour::new(0.5),
        }
    }

    /// Line through the saddle of the integrand magnitude on the imaginary
    /// axis, correction included, which keeps the integral free of
    /// cancellation for deep out-of-the-money strikes. Stays at least 0.25 from the payoff poles and
    /// inside the measure strip.
    pub fn saddle(theta: &ModelParams, spec: &OptionSpec) -> Result<Self> {
        let (s_lo, s_hi) = theta.measure.strip();
        let (mut lo, mut hi) = match spec.kind {
            OptionKind::Call => (s_lo.max(-60.0), -1.25),
            OptionKind::Put => (0.25, s_hi.min(60.0)),
        };
        // keep a margin from finite strip edges
        if s_lo.is_finite() && spec.kind == OptionKind::Call {
            lo = lo.max(s_lo + 0.1 * (-1.0 - s_lo).max(0.0));
        }
        if s_hi.is_finite() && spec.kind == OptionKind::Put {
            hi = hi.min(s_hi - 0.1 * s_hi.max(0.0));
        }
        if !(lo < hi) {
            let mid = match spec.kind {
                OptionKind::Call => 0.5 * (s_lo - 1.0),
                OptionKind::Put => 0.5 * s_hi,
            };
            if !mid.is_finite() || !theta.measure.in_strip(mid) {
                return Err(domain!("no admissible {:?} contour inside the {} strip", spec.kind, theta.measure.tag()));
            }
            return Ok(Contour::new(mid));
        }
        let sig2 = theta.sig2_bar.max(SIG2_FLOOR);
        let e = theta.measure.exp_moment();
        let log_mag = |v: f64| -> f64 {
            let l = C64::new(0.0, v);
            let c = match theta.measure.char_integral(l) {
                Ok(c) => c,
                Err(_) => return f64::INFINITY,
            };
            let phi = phi_from(sig2, theta.zeta_bar, e, l, c).re;
            let corr = theta.b_symbol(l).map_or(0.0, |b| (1.0 + spec.t * b.norm()).ln());
            spec.t * phi - v * (spec.x - spec.k) - (v * (1.0 + v)).abs().ln() + corr
        };
        // golden-section search; the log-magnitude is convex on each side
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (log_mag(c), log_mag(d));
        while b - a > 1e-4 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = log_mag(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = log_mag(d);
            }
        }
        Ok(Contour::new(0.5 * (a + b)))
    }

    pub fn validate(&self, kind: OptionKind, measure: &LevyMeasure) -> Result<()> {
        check_payoff_strip(kind, self.lambda_i)?;
        if !measure.in_strip(self.lambda_i) {
            let (lo, hi) = measure.strip();
            return Err(domain!("lambda_i = {} outside the {} strip ({lo}, {hi})", self.lambda_i, measure.tag()));
        }
        if let Some(l) = self.half_width {
            if !(l > 0.0 && l.is_finite()) {
                return Err(domain!("contour half-width must be positive, got {l}"));
            }
        }
        if self.nodes < 32 || !self.nodes.is_multiple_of(2) {
            return Err(domain!("contour needs an even node count >= 32, got {}", self.nodes));
        }
        Ok(())
    }
}

/// Outcome of a folded contour integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldedIntegral<const N: usize> {
    /// `∫_R I(λ_r) dλ_r` for each component (real by Hermitian symmetry).
    pub values: [f64; N],
    /// Largest `|Im ∫|` seen when the mirrored half-line was also evaluated.
    pub imag_residue: f64,
    pub half_width: f64,
    pub nodes: usize,
}

/// Integrates a Hermitian integrand `I(λ_r)` (with `I(-λ_r) = conj I(λ_r)`)
/// over the real line by composite Simpson on `[0, L]`, doubling `L` until the
/// endpoint magnitude is below `1e-12 * scale` and doubling the node count
/// until successive estimates agree. Fails at once when the integrand is so
/// large that rounding alone exceeds `1e-6 * scale`.
pub fn integrate_hermitian<const N: usize>(
    integrand: impl Fn(f64) -> Result<[C64; N]>,
    initial_half_width: f64,
    contour: &Contour,
    scale: f64,
) -> Result<FoldedIntegral<N>> {
    let endpoint_mag = |v: &[C64; N]| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut width = initial_half_width;
    let mut widened = 0;
    loop {
        let tail = endpoint_mag(&integrand(width)?);
        if !tail.is_finite() {
            return Err(numeric!("non-finite integrand at lambda_r = {width}"));
        }
        if tail < ENDPOINT_TOL * scale {
            break;
        }
        widened += 1;
        if widened > MAX_WIDTH_DOUBLINGS {
            return Err(Error::Quadrature {
                half_width: width,
                nodes: contour.nodes,
                suggested_half_width: 2.0 * width,
                suggested_nodes: 2 * contour.nodes,
            });
        }
        width *= 2.0;
    }

    let zero = [C64::new(0.0, 0.0); N];
    let add = |acc: &mut [C64; N], v: &[C64; N], w: f64| {
        for (a, b) in acc.iter_mut().zip(v) {
            *a += *b * w;
        }
    };

    let mut n = contour.nodes;
    let mut h = width / n as f64;
    let mut ends = integrand(0.0)?;
    add(&mut ends, &integrand(width)?, 1.0);
    let mut even = zero; // interior nodes at even indices
    let mut odd = zero;
    // full-line Simpson over [-L, L] on the initial grid, used only to check
    // that the integrand really is Hermitian
    let mut full = ends;
    add(&mut full, &integrand(-width)?, 1.0);
    add(&mut full, &integrand(0.0)?, 2.0);
    let mut peak = endpoint_mag(&ends);
    for i in 1..n {
        let lr = i as f64 * h;
        let f = integrand(lr)?;
        peak = peak.max(endpoint_mag(&f));
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        if i % 2 == 1 {
            add(&mut odd, &f, 1.0);
        } else {
            add(&mut even, &f, 1.0);
        }
        add(&mut full, &f, w);
        add(&mut full, &integrand(-lr)?, w);
    }
    // f(L) was counted in `ends`
    let mut residue = zero;
    for (r, v) in residue.iter_mut().zip(full.iter()) {
        *r = *v * (h / 3.0);
    }
    let imag_residue = residue.iter().map(|z| z.im.abs()).fold(0.0, f64::max);

    let simpson = |ends: &[C64; N], odd: &[C64; N], even: &[C64; N], h: f64| {
        let mut out = [0.0; N];
        for j in 0..N {
            let s = (ends[j] + odd[j] * 4.0 + even[j] * 2.0) * (h / 3.0);
            out[j] = 2.0 * s.re;
        }
        out
    };
    // rounding in a sum whose terms reach `peak` caps the attainable accuracy
    let floor = f64::EPSILON * peak * width;
    if floor > 1e-6 * scale {
        return Err(numeric!("integrand peaks at {peak:e} along the contour; the sum cancels beyond double precision"));
    }
    let mut prev = simpson(&ends, &odd, &even, h);
    loop {
        if n >= MAX_NODES {
            return Err(Error::Quadrature {
                half_width: width,
                nodes: n,
                suggested_half_width: width,
                suggested_nodes: 2 * n,
            });
        }
        // refine: old nodes all become even, new midpoints are odd
        add(&mut even, &odd, 1.0);
        n *= 2;
        h *= 0.5;
        let mut new_odd = zero;
        for i in (1..n).step_by(2) {
            add(&mut new_odd, &integrand(i as f64 * h)?, 1.0);
        }
        odd = new_odd;
        let cur = simpson(&ends, &odd, &even, h);
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(numeric!("non-finite quadrature sum"));
        }
        let converged = cur
            .iter()
            .zip(&prev)
            .all(|(c, p)| (c - p).abs() <= contour.rel_tol * c.abs() + (contour.abs_tol * scale).max(floor));
        prev = cur;
        if converged {
            break;
        }
    }
    let size = prev.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if imag_residue > 1e-8 * (1.0 + size) {
        return Err(numeric!("integrand is not Hermitian along the contour (imaginary residue {imag_residue:e})"));
    }
    Ok(FoldedIntegral { values: prev, imag_residue, half_width: width, nodes: n })
}

/// `u0` and `eps * u1` evaluated together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceTerms {
    pub u0: f64,
    pub eps_u1: f64,
}

impl PriceTerms {
    pub fn approx(&self) -> f64 {
        self.u0 + self.eps_u1
    }
}

pub(crate) struct PricingKernel<'a> {
    pub theta: &'a ModelParams,
    pub spec: &'a OptionSpec,
    pub lambda_i: f64,
    pub sig2: f64,
    pub exp_moment: f64,
}

impl<'a> PricingKernel<'a> {
    pub fn new(theta: &'a ModelParams, spec: &'a OptionSpec, contour: &Contour) -> Result<Self> {
        theta.validate()?;
        spec.validate()?;
        contour.validate(spec.kind, &theta.measure)?;
        Ok(PricingKernel {
            theta,
            spec,
            lambda_i: contour.lambda_i,
            sig2: theta.sig2_bar.max(SIG2_FLOOR),
            exp_moment: theta.measure.exp_moment(),
        })
    }

    pub fn initial_half_width(&self, contour: &Contour) -> f64 {
        contour.half_width.unwrap_or_else(|| (2.0 * 28.0 / (self.sig2 * self.spec.t)).sqrt().max(200.0))
    }

    pub fn scale(&self) -> f64 {
        self.spec.x.exp().max(self.spec.k.exp())
    }

    /// Returns `(λ, C(λ), e^{tφ} ĥ(λ) e^{iλx} / √(2π))` at `λ = λ_r + iλ_i`.
    #[inline]
    pub fn base(&self, lambda_r: f64) -> Result<(C64, C64, C64)> {
        let l = C64::new(lambda_r, self.lambda_i);
        let c = self.theta.measure.char_integral(l)?;
        let phi = phi_from(self.sig2, self.theta.zeta_bar, self.exp_moment, l, c);
        let i = C64::i();
        let s = self.spec;
        let expo = phi * s.t + s.k + i * l * (s.x - s.k);
        let value = -expo.exp() / (2.0 * PI * (i * l + l * l));
        Ok((l, c, value))
    }

    pub fn b(&self, l: C64, c: C64) -> C64 {
        self.theta.b_from(l, c, self.exp_moment)
    }
}

pub(crate) fn check_u0_bounds(u0: f64, spec: &OptionSpec) -> Result<()> {
    let (s, k) = (spec.x.exp(), spec.k.exp());
    let (lo, hi) = match spec.kind {
        OptionKind::Call => ((s - k).max(0.0), s),
        OptionKind::Put => ((k - s).max(0.0), k),
    };
    let slack = 1e-8 * s.max(k);
    if u0 < lo - slack || u0 > hi + slack {
        return Err(numeric!("u0 = {u0} outside no-arbitrage bounds [{lo}, {hi}]; quadrature is unreliable here"));
    }
    Ok(())
}

/// Fails when the time value of `price` is too small for the quadrature on
/// `contour` to resolve, so that an implied volatility would only echo noise.
pub fn check_resolved(price: f64, spec: &OptionSpec, contour: &Contour) -> Result<()> {
    let (s, k) = (spec.x.exp(), spec.k.exp());
    let intrinsic = match spec.kind {
        OptionKind::Call => (s - k).max(0.0),
        OptionKind::Put => (k - s).max(0.0),
    };
    let resolution = 1e3 * contour.abs_tol * s.max(k);
    if price - intrinsic < resolution {
        return Err(numeric!("time value {:e} is below the quadrature resolution {resolution:e}", price - intrinsic));
    }
    Ok(())
}

/// Leading-order price `u0` under the averaged Lévy triplet.
pub fn price_u0(theta: &ModelParams, spec: &OptionSpec, contour: &Contour) -> Result<f64> {
    let kernel = PricingKernel::new(theta, spec, contour)?;
    let out = integrate_hermitian(
        |lr| Ok([kernel.base(lr)?.2]),
        kernel.initial_half_width(contour),
        contour,
        kernel.scale(),
    )?;
    let u0 = out.values[0];
    check_u0_bounds(u0, spec)?;
    Ok(u0)
}

/// First-order correction `eps * u1` (the group parameters carry the eps).
pub fn price_u1(theta: &ModelParams, spec: &OptionSpec, contour: &Contour) -> Result<f64> {
    let kernel = PricingKernel::new(theta, spec, contour)?;
    if !theta.has_correction() {
        return Ok(0.0);
    }
    let t = spec.t;
    let out = integrate_hermitian(
        |lr| {
            let (l, c, v) = kernel.base(lr)?;
            Ok([v * kernel.b(l, c) * t])
        },
        kernel.initial_half_width(contour),
        contour,
        kernel.scale(),
    )?;
    Ok(out.values[0])
}

/// `u0` and `eps * u1` from a single pass over the contour.
pub fn price_terms(theta: &ModelParams, spec: &OptionSpec, contour: &Contour) -> Result<PriceTerms> {
    let kernel = PricingKernel::new(theta, spec, contour)?;
    let t = spec.t;
    let out = integrate_hermitian(
        |lr| {
            let (l, c, v) = kernel.base(lr)?;
            Ok([v, v * kernel.b(l, c) * t])
        },
        kernel.initial_half_width(contour),
        contour,
        kernel.scale(),
    )?;
    check_u0_bounds(out.values[0], spec)?;
    Ok(PriceTerms { u0: out.values[0], eps_u1: out.values[1] })
}

/// Approximate price `u0 + eps * u1`.
pub fn price_approx(theta: &ModelParams, spec: &OptionSpec, contour: &Contour) -> Result<f64> {
    Ok(price_terms(theta, spec, contour)?.approx())
}
