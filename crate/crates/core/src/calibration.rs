//! Least-squares calibration of [`ModelParams`] to an implied-volatility
//! surface.
//!
//! All quotes enter one objective `Σ (I_model - I_obs)²`. The minimizer is a
//! box-projected Levenberg–Marquardt iteration on a reparameterized vector in
//! which positive quantities are optimized through their logarithm.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::levy::LevyMeasure;
use crate::pricing::{check_resolved, price_approx, Contour, ModelParams, OptionKind, OptionSpec};
use crate::volatility::{implied_vol, Quote};

/// Residual assigned to a quote whose model price cannot be inverted.
pub const INFEASIBLE_RESIDUAL: f64 = 10.0;

/// Smallest value of a log-parameterised coordinate inside the optimizer;
/// keeps zero intensities away from subnormal arithmetic.
const POSITIVE_FLOOR: f64 = 1e-12;

/// Observed implied volatilities on one trade date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolSurface {
    pub spot: f64,
    pub quotes: Vec<Quote>,
    #[serde(default)]
    pub label: String,
}

impl VolSurface {
    /// Validates the quotes and stores them sorted by `(t, k)`, so results do
    /// not depend on input order.
    pub fn new(spot: f64, mut quotes: Vec<Quote>, label: String) -> Result<Self> {
        if !(spot > 0.0 && spot.is_finite()) {
            return Err(domain!("spot {spot} must be positive"));
        }
        if quotes.len() < 8 {
            return Err(domain!("a surface needs at least 8 quotes, got {}", quotes.len()));
        }
        for q in &quotes {
            q.validate()?;
        }
        quotes.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.k.total_cmp(&b.k)));
        for w in quotes.windows(2) {
            if w[0].t == w[1].t && w[0].k == w[1].k {
                return Err(domain!("duplicate quote at t = {}, k = {}", w[0].t, w[0].k));
            }
        }
        Ok(VolSurface { spot, quotes, label })
    }
}

/// Constraint class applied on top of a jump measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelClass {
    /// Everything free.
    Extended,
    /// Group parameters frozen at zero: a pure exponential Lévy model.
    ClassicLevy,
    /// No jumps (`<ζ> = 0`, jump parameters frozen) and `U3 = U2 = 0`.
    FmrSv,
}

impl ModelClass {
    fn default_starts(self) -> usize {
        match self {
            ModelClass::Extended => 5,
            _ => 0,
        }
    }

    /// Sets the frozen coordinates of `theta` to their class values.
    pub fn restrict(self, theta: &ModelParams) -> ModelParams {
        let mut out = *theta;
        match self {
            ModelClass::Extended => {}
            ModelClass::ClassicLevy => out = out.with_groups(0.0, 0.0, 0.0, 0.0),
            ModelClass::FmrSv => {
                out.zeta_bar = 0.0;
                out.u3e = 0.0;
                out.u2e = 0.0;
            }
        }
        out
    }
}

/// Position of each coordinate in the flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    template: LevyMeasure,
    pub names: Vec<&'static str>,
    positive: Vec<bool>,
}

impl Layout {
    pub fn new(measure: &LevyMeasure) -> Self {
        let (names, positive): (Vec<&'static str>, Vec<bool>) = match measure {
            LevyMeasure::Merton { .. } => (vec!["m", "s"], vec![false, true]),
            LevyMeasure::Gumbel { .. } => (vec!["m", "sigma"], vec![false, true]),
            LevyMeasure::Dirac { .. } => (vec!["a"], vec![false]),
            LevyMeasure::VarianceGamma { .. } => (vec!["a", "b", "B"], vec![true, true, true]),
            LevyMeasure::Uniform { .. } => (vec!["a", "b"], vec![false, false]),
        };
        let mut all_names = vec!["sig2_bar", "zeta_bar"];
        all_names.extend(names);
        all_names.extend(["v3e", "u3e", "v2e", "u2e"]);
        let mut all_pos = vec![true, true];
        all_pos.extend(positive);
        all_pos.extend([false; 4]);
        Layout { template: *measure, names: all_names, positive: all_pos }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    fn n_measure(&self) -> usize {
        self.len() - 6
    }

    pub fn encode(&self, theta: &ModelParams) -> Vec<f64> {
        let mut v = vec![theta.sig2_bar, theta.zeta_bar];
        match theta.measure {
            LevyMeasure::Merton { m, s } => v.extend([m, s]),
            LevyMeasure::Gumbel { m, sigma } => v.extend([m, sigma]),
            LevyMeasure::Dirac { a } => v.push(a),
            LevyMeasure::VarianceGamma { a, b, weight } => v.extend([a, b, weight]),
            LevyMeasure::Uniform { a, b } => v.extend([a, b]),
        }
        v.extend(theta.groups());
        v
    }

    /// Rebuilds parameters without validating them.
    pub fn decode(&self, v: &[f64]) -> ModelParams {
        let p = &v[2..2 + self.n_measure()];
        let measure = match self.template {
            LevyMeasure::Merton { .. } => LevyMeasure::Merton { m: p[0], s: p[1] },
            LevyMeasure::Gumbel { .. } => LevyMeasure::Gumbel { m: p[0], sigma: p[1] },
            LevyMeasure::Dirac { .. } => LevyMeasure::Dirac { a: p[0] },
            LevyMeasure::VarianceGamma { .. } => LevyMeasure::VarianceGamma { a: p[0], b: p[1], weight: p[2] },
            LevyMeasure::Uniform { .. } => LevyMeasure::Uniform { a: p[0], b: p[1] },
        };
        let g = &v[v.len() - 4..];
        ModelParams { sig2_bar: v[0], zeta_bar: v[1], measure, v3e: g[0], u3e: g[1], v2e: g[2], u2e: g[3] }
    }

    /// Which coordinates the class leaves free.
    pub fn free_mask(&self, class: ModelClass) -> Vec<bool> {
        let n = self.len();
        let mut mask = vec![true; n];
        match class {
            ModelClass::Extended => {}
            ModelClass::ClassicLevy => mask[n - 4..].iter_mut().for_each(|m| *m = false),
            ModelClass::FmrSv => {
                mask[1..2 + self.n_measure()].iter_mut().for_each(|m| *m = false);
                mask[n - 3] = false;
                mask[n - 1] = false;
            }
        }
        mask
    }
}

/// Box constraints in natural coordinates, laid out as [`Layout`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn default_for(measure: &LevyMeasure) -> Self {
        let (lo_m, hi_m): (Vec<f64>, Vec<f64>) = match measure {
            LevyMeasure::Merton { .. } | LevyMeasure::Gumbel { .. } => (vec![-1.5, 0.01], vec![1.0, 1.5]),
            LevyMeasure::Dirac { .. } => (vec![-1.5], vec![1.0]),
            LevyMeasure::VarianceGamma { .. } => (vec![1.0, 1.0, 0.01], vec![500.0, 500.0, 200.0]),
            LevyMeasure::Uniform { .. } => (vec![-1.5, -1.0], vec![1.0, 1.5]),
        };
        let mut lower = vec![1e-4, 0.0];
        lower.extend(lo_m);
        lower.extend([-1.0; 4]);
        let mut upper = vec![1.0, 20.0];
        upper.extend(hi_m);
        upper.extend([1.0; 4]);
        Bounds { lower, upper }
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.iter().zip(self.lower.iter().zip(&self.upper)).all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
    }
}

/// Evaluates independent closures, possibly in parallel.
pub trait Executor: Sync {
    fn map(&self, n: usize, f: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64>;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map(&self, n: usize, f: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64> {
        (0..n).map(f).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub max_iter: usize,
    /// Latin-hypercube starts in addition to the initial point; `None` uses
    /// the class default (5 for the extended class, none otherwise).
    pub multi_starts: Option<usize>,
    pub seed: u64,
    /// Further starting points, e.g. optima of nested classes.
    pub extra_starts: Vec<ModelParams>,
    /// Relative finite-difference step for the Jacobian.
    pub fd_step: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions { max_iter: 100, multi_starts: None, seed: 0, extra_starts: Vec::new(), fd_step: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub t: f64,
    pub k: f64,
    pub iv_obs: f64,
    /// `None` when the model price could not be inverted.
    pub iv_model: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub theta: ModelParams,
    pub rmse: f64,
    pub residuals: Vec<Residual>,
    pub iterations: usize,
    pub converged: bool,
    /// Sum of squared residuals after each accepted step of the winning run.
    pub objective_trace: Vec<f64>,
}

/// Implied volatility of `u0 + ε u1`, inverted on the out-of-the-money side
/// and priced on the saddle contour.
pub fn model_iv(theta: &ModelParams, t: f64, k: f64, x: f64) -> Result<f64> {
    let kind = if k >= x { OptionKind::Call } else { OptionKind::Put };
    let spec = OptionSpec::new(kind, k, t, x)?;
    let fallback = Contour::default_for(kind);
    let price = match Contour::saddle(theta, &spec) {
        Ok(c) => price_approx(theta, &spec, &c).or_else(|_| price_approx(theta, &spec, &fallback))?,
        Err(_) => price_approx(theta, &spec, &fallback)?,
    };
    check_resolved(price, &spec, &fallback)?;
    implied_vol(kind, x, k, t, price)
}

struct Problem<'a> {
    surface: &'a VolSurface,
    layout: Layout,
    base: Vec<f64>,
    free: Vec<usize>,
    /// Bounds of the free coordinates in optimizer space.
    lo: Vec<f64>,
    hi: Vec<f64>,
    exec: &'a dyn Executor,
    fd_step: f64,
}

impl Problem<'_> {
    fn to_natural(&self, u: &[f64]) -> Vec<f64> {
        let mut v = self.base.clone();
        for (slot, &j) in self.free.iter().enumerate() {
            v[j] = if self.layout.positive[j] { u[slot].exp() } else { u[slot] };
        }
        v
    }

    fn to_internal(&self, v: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&j| if self.layout.positive[j] { v[j].max(POSITIVE_FLOOR).ln() } else { v[j] }).collect()
    }

    fn project(&self, u: &mut [f64]) {
        for (x, (lo, hi)) in u.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *x = x.max(*lo).min(*hi);
        }
    }

    fn quote_residual(theta: &ModelParams, q: &Quote) -> f64 {
        match model_iv(theta, q.t, q.k, q.x) {
            Ok(iv) if iv.is_finite() => iv - q.iv,
            _ => INFEASIBLE_RESIDUAL,
        }
    }

    fn residuals(&self, u: &[f64]) -> Vec<f64> {
        let theta = self.layout.decode(&self.to_natural(u));
        if theta.validate().is_err() {
            return vec![INFEASIBLE_RESIDUAL; self.surface.quotes.len()];
        }
        let quotes = &self.surface.quotes;
        self.exec.map(quotes.len(), &|i| Self::quote_residual(&theta, &quotes[i]))
    }

    /// Forward-difference Jacobian, column-major, stepping inward at an
    /// upper bound.
    fn jacobian(&self, u: &[f64], r: &[f64]) -> Vec<Vec<f64>> {
        let nq = r.len();
        let steps: Vec<f64> = u
            .iter()
            .zip(&self.hi)
            .map(|(x, hi)| {
                let h = self.fd_step * x.abs().max(1.0);
                if x + h > *hi {
                    -h
                } else {
                    h
                }
            })
            .collect();
        let thetas: Vec<Option<ModelParams>> = (0..u.len())
            .map(|j| {
                let mut up = u.to_vec();
                up[j] += steps[j];
                let th = self.layout.decode(&self.to_natural(&up));
                th.validate().ok().map(|_| th)
            })
            .collect();
        let quotes = &self.surface.quotes;
        let flat = self.exec.map(nq * u.len(), &|idx| {
            let (j, i) = (idx / nq, idx % nq);
            match &thetas[j] {
                Some(th) => Self::quote_residual(th, &quotes[i]),
                None => INFEASIBLE_RESIDUAL,
            }
        });
        (0..u.len()).map(|j| (0..nq).map(|i| (flat[j * nq + i] - r[i]) / steps[j]).collect()).collect()
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Solves `A x = b` for symmetric positive definite `A` (row-major, n×n).
fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * n + i];
    }
    Some(x)
}

struct RunOutcome {
    u: Vec<f64>,
    cost: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

/// Iterations a start gets before it is compared with the incumbent.
const GRACE_ITERATIONS: usize = 5;

/// Runs LM from `u`; a run still above ten times `incumbent` after the grace
/// iterations is abandoned.
fn levenberg_marquardt(problem: &Problem<'_>, mut u: Vec<f64>, max_iter: usize, incumbent: f64) -> RunOutcome {
    let n = u.len();
    problem.project(&mut u);
    let mut r = problem.residuals(&u);
    let mut cost = sum_sq(&r);
    let mut trace = vec![cost];
    let mut mu = -1.0;
    let (mut nu, mut iterations) = (2.0, 0);
    if n == 0 || cost < 1e-24 {
        return RunOutcome { u, cost, iterations, converged: true, trace };
    }
    while iterations < max_iter {
        if iterations >= GRACE_ITERATIONS && cost > 10.0 * incumbent {
            return RunOutcome { u, cost, iterations, converged: false, trace };
        }
        let jac = problem.jacobian(&u, &r);
        let mut jtj = vec![0.0; n * n];
        let mut grad = vec![0.0; n];
        for a in 0..n {
            grad[a] = jac[a].iter().zip(&r).map(|(j, r)| j * r).sum();
            for b in 0..=a {
                let v: f64 = jac[a].iter().zip(&jac[b]).map(|(x, y)| x * y).sum();
                jtj[a * n + b] = v;
                jtj[b * n + a] = v;
            }
        }
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax <= 1e-14 * cost.max(1e-300).sqrt() || gmax < 1e-20 {
            return RunOutcome { u, cost, iterations, converged: true, trace };
        }
        let diag: Vec<f64> = (0..n).map(|a| jtj[a * n + a]).collect();
        let dmax = diag.iter().fold(0.0f64, |m, d| m.max(*d));
        let scale: Vec<f64> = diag.iter().map(|d| d.max(1e-12 * dmax).max(1e-300)).collect();
        if mu < 0.0 {
            mu = 1e-3;
        }
        iterations += 1;
        let mut accepted = false;
        while mu < 1e12 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[k * n + k] += mu * scale[k];
            }
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let Some(step) = cholesky_solve(&a, &rhs, n) else {
                mu *= nu;
                nu *= 2.0;
                continue;
            };
            let mut trial: Vec<f64> = u.iter().zip(&step).map(|(x, d)| x + d).collect();
            problem.project(&mut trial);
            let moved = trial.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
            let size = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if moved <= 1e-12 * (size + 1e-12) {
                return RunOutcome { u, cost, iterations, converged: true, trace };
            }
            let r_new = problem.residuals(&trial);
            let c_new = sum_sq(&r_new);
            if c_new < cost {
                let improvement = cost - c_new;
                u = trial;
                r = r_new;
                cost = c_new;
                trace.push(cost);
                mu = (mu / 3.0).max(1e-15);
                nu = 2.0;
                accepted = true;
                if improvement <= 1e-12 * cost || cost < 1e-24 {
                    return RunOutcome { u, cost, iterations, converged: true, trace };
                }
                break;
            }
            mu *= nu;
            nu *= 2.0;
        }
        if !accepted {
            // no descent direction left at any damping
            return RunOutcome { u, cost, iterations, converged: true, trace };
        }
    }
    RunOutcome { u, cost, iterations, converged: false, trace }
}

/// Latin-hypercube samples over the free coordinates, in natural units.
fn latin_hypercube(bounds: &Bounds, free: &[usize], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(free.len());
    for &j in free {
        let (lo, hi) = (bounds.lower[j], bounds.upper[j]);
        let mut strata: Vec<f64> =
            (0..count).map(|s| lo + (hi - lo) * (s as f64 + rng.random::<f64>()) / count as f64).collect();
        // Fisher–Yates
        for i in (1..count).rev() {
            let k = rng.random_range(0..=i);
            strata.swap(i, k);
        }
        columns.push(strata);
    }
    (0..count).map(|s| columns.iter().map(|c| c[s]).collect()).collect()
}

/// Fits `init` to `surface` within `class` and `bounds`.
///
/// Runs from `init`, from every entry of `opts.extra_starts`, from `init`
/// with its group parameters zeroed, and from the Latin-hypercube starts,
/// keeping the best. Frozen coordinates keep their
/// class values.
pub fn calibrate(
    surface: &VolSurface,
    class: ModelClass,
    init: &ModelParams,
    bounds: &Bounds,
    opts: &CalibrationOptions,
    exec: &dyn Executor,
) -> Result<CalibrationResult> {
    let layout = Layout::new(&init.measure);
    if bounds.lower.len() != layout.len() || bounds.upper.len() != layout.len() {
        return Err(domain!("bounds have {} entries, the parameter vector has {}", bounds.lower.len(), layout.len()));
    }
    let init = class.restrict(init);
    init.validate()?;
    let base = layout.encode(&init);
    if !bounds.contains(&base) {
        return Err(domain!("initial parameters lie outside the bounds"));
    }
    let mask = layout.free_mask(class);
    let free: Vec<usize> = (0..layout.len()).filter(|&j| mask[j]).collect();
    let internal = |j: usize, v: f64| {
        if layout.positive[j] {
            v.max(POSITIVE_FLOOR).ln()
        } else {
            v
        }
    };
    let lo = free.iter().map(|&j| internal(j, bounds.lower[j])).collect();
    let hi = free.iter().map(|&j| internal(j, bounds.upper[j])).collect();
    let problem = Problem {
        surface,
        layout: layout.clone(),
        base: base.clone(),
        free: free.clone(),
        lo,
        hi,
        exec,
        fd_step: opts.fd_step,
    };

    // natural coordinates of each start; kept so an untouched start is
    // returned without a log/exp round trip
    let mut starts = vec![base.clone()];
    for extra in &opts.extra_starts {
        if extra.measure.tag() != init.measure.tag() {
            return Err(domain!("extra start uses a different jump measure"));
        }
        let v = layout.encode(&class.restrict(extra));
        if !bounds.contains(&v) {
            return Err(domain!("extra start lies outside the bounds"));
        }
        starts.push(v);
    }
    // the leading-order model is always a valid price, which rescues starts
    // whose correction makes every quote infeasible
    let groups = layout.len() - 4..layout.len();
    if groups.clone().any(|j| mask[j] && base[j] != 0.0) {
        let mut v = base.clone();
        v[groups].iter_mut().for_each(|g| *g = 0.0);
        starts.push(v);
    }
    let n_lhs = opts.multi_starts.unwrap_or(class.default_starts());
    for sample in latin_hypercube(bounds, &free, n_lhs, opts.seed) {
        let mut v = base.clone();
        for (slot, &j) in free.iter().enumerate() {
            v[j] = sample[slot];
        }
        starts.push(v);
    }

    let mut best: Option<(RunOutcome, usize)> = None;
    for (idx, start) in starts.iter().enumerate() {
        let incumbent = best.as_ref().map_or(f64::INFINITY, |(b, _)| b.cost);
        let run = levenberg_marquardt(&problem, problem.to_internal(start), opts.max_iter, incumbent);
        if best.as_ref().is_none_or(|(b, _)| run.cost < b.cost) {
            best = Some((run, idx));
        }
    }
    let (best, idx) = best.expect("at least one start");
    let natural = if best.trace.len() == 1 { starts[idx].clone() } else { problem.to_natural(&best.u) };
    let theta = layout.decode(&natural);
    let residuals: Vec<Residual> = surface
        .quotes
        .iter()
        .map(|q| Residual {
            t: q.t,
            k: q.k,
            iv_obs: q.iv,
            iv_model: model_iv(&theta, q.t, q.k, q.x).ok().filter(|v| v.is_finite()),
        })
        .collect();
    let sq: f64 = residuals.iter().map(|r| r.iv_model.map_or(INFEASIBLE_RESIDUAL, |m| m - r.iv_obs).powi(2)).sum();
    let rmse = (sq / surface.quotes.len() as f64).sqrt();
    Ok(CalibrationResult {
        theta,
        rmse,
        residuals,
        iterations: best.iterations,
        converged: best.converged,
        objective_trace: best.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(t: f64, k: f64, iv: f64) -> Quote {
        Quote { t, k, x: 0.0, iv }
    }

    #[test]
    fn flat_smile_for_black_scholes() {
        let th = ModelParams::black_scholes(0.2);
        for (t, k) in [(0.1, -0.3), (0.5, 0.0), (2.0, 0.4)] {
            assert!((model_iv(&th, t, k, 0.0).unwrap() - 0.2).abs() < 1e-7);
        }
    }

    #[test]
    fn reference_parameters_give_sensible_iv() {
        let th = ModelParams::new(0.2054f64.powi(2), 0.8207, LevyMeasure::merton(-0.5608, 0.4070).unwrap())
            .unwrap()
            .with_groups(-5.61729e-4, 0.3254, -0.1263, -0.1549);
        let iv = model_iv(&th, 59.0 / 365.0, 0.0, 0.0).unwrap();
        assert!(iv > 0.05 && iv < 0.8, "{iv}");
    }

    #[test]
    fn surface_validation_and_ordering() {
        let quotes: Vec<Quote> = (0..8).map(|i| q(0.5, 0.1 * i as f64, 0.2)).collect();
        let mut rev = quotes.clone();
        rev.reverse();
        let a = VolSurface::new(100.0, quotes.clone(), String::new()).unwrap();
        let b = VolSurface::new(100.0, rev, String::new()).unwrap();
        assert_eq!(a, b);
        assert!(VolSurface::new(100.0, quotes[..7].to_vec(), String::new()).is_err());
        let mut dup = quotes.clone();
        dup[3] = dup[2];
        assert!(VolSurface::new(100.0, dup, String::new()).is_err());
    }

    #[test]
    fn layout_round_trip_and_masks() {
        let th = ModelParams::new(0.04, 1.0, LevyMeasure::variance_gamma(20.0, 10.0, 5.0).unwrap())
            .unwrap()
            .with_groups(0.001, -0.002, 0.003, -0.004);
        let layout = Layout::new(&th.measure);
        assert_eq!(layout.len(), 9);
        assert_eq!(layout.decode(&layout.encode(&th)), th);
        let fmr = layout.free_mask(ModelClass::FmrSv);
        assert_eq!(fmr, [true, false, false, false, false, true, false, true, false]);
        let classic = layout.free_mask(ModelClass::ClassicLevy);
        assert_eq!(classic.iter().filter(|m| **m).count(), 5);
        assert!(Bounds::default_for(&th.measure).contains(&layout.encode(&th)));
    }

    #[test]
    fn cholesky_solves_small_system() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&a, &[2.0, 1.0], 2).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-14);
        assert!(cholesky_solve(&[1.0, 2.0, 2.0, 1.0], &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn exact_start_needs_no_iterations() {
        let th = ModelParams::new(0.04, 0.8, LevyMeasure::merton(-0.1, 0.15).unwrap()).unwrap();
        let quotes: Vec<Quote> =
            [(0.25, -0.1), (0.25, 0.0), (0.25, 0.1), (0.5, -0.15), (0.5, 0.0), (0.5, 0.15), (1.0, -0.2), (1.0, 0.2)]
                .iter()
                .map(|&(t, k)| q(t, k, model_iv(&th, t, k, 0.0).unwrap()))
                .collect();
        let surface = VolSurface::new(1.0, quotes, String::new()).unwrap();
        let res = calibrate(
            &surface,
            ModelClass::ClassicLevy,
            &th,
            &Bounds::default_for(&th.measure),
            &CalibrationOptions::default(),
            &Sequential,
        )
        .unwrap();
        assert!(res.rmse < 1e-10);
        assert_eq!(res.iterations, 0);
        assert!(res.converged);
        assert_eq!(res.theta, th);
    }

    #[test]
    fn lhs_covers_each_stratum_once() {
        let b = Bounds { lower: vec![0.0, -1.0], upper: vec![1.0, 1.0] };
        let pts = latin_hypercube(&b, &[0, 1], 5, 7);
        for col in 0..2 {
            let mut seen = [false; 5];
            for p in &pts {
                let (lo, hi) = (b.lower[col], b.upper[col]);
                let s = ((p[col] - lo) / (hi - lo) * 5.0) as usize;
                assert!(!seen[s]);
                seen[s] = true;
            }
        }
        assert_eq!(pts, latin_hypercube(&b, &[0, 1], 5, 7));
    }
}
