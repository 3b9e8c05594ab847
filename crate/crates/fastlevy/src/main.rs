use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fastlevy::calibration::{calibrate, model_iv, Bounds, CalibrationOptions, ModelClass};
use fastlevy::groups::{ou_closed_forms, poisson_oracle_ou, OracleOptions};
use fastlevy::io::{read_json, read_model, read_scenario, read_surface, CalibrationReport};
use fastlevy::levy::LevyMeasure;
use fastlevy::montecarlo::{simulate_prices, McConfig, Payoff, DEFAULT_BUDGET};
use fastlevy::pricing::{check_resolved, price_terms, Contour, ModelParams, OptionKind, OptionSpec};
use fastlevy::volatility::implied_vol;
use fastlevy::{Error, Parallel, Result};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "fastlevy", version, about = "Asymptotic option pricing under fast mean-reverting Lévy models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price one option: u0, eps*u1, their sum and its implied volatility.
    Price(PriceArgs),
    /// Model implied volatilities on a strike x maturity grid.
    Smile(SmileArgs),
    /// Compare the approximation with Monte Carlo prices of the full model.
    McVerify(McArgs),
    /// Fit model parameters to an implied-volatility surface.
    Calibrate(CalibrateArgs),
    /// Averages and group parameters of an exponential OU specification.
    GroupParams(GroupArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Call,
    Put,
}

impl From<Kind> for OptionKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Call => OptionKind::Call,
            Kind::Put => OptionKind::Put,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ContourChoice {
    /// Fixed line at Im λ = -1.5 (calls) or 0.5 (puts).
    Default,
    /// Line through the approximate saddle point of the integrand.
    Saddle,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Extended,
    Classic,
    Fmrsv,
}

impl From<ClassArg> for ModelClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Extended => ModelClass::Extended,
            ClassArg::Classic => ModelClass::ClassicLevy,
            ClassArg::Fmrsv => ModelClass::FmrSv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum MeasureArg {
    Merton,
    Gumbel,
    Dirac,
    Vg,
    Uniform,
}

impl MeasureArg {
    fn tag(self) -> &'static str {
        match self {
            MeasureArg::Merton => "merton",
            MeasureArg::Gumbel => "gumbel",
            MeasureArg::Dirac => "dirac",
            MeasureArg::Vg => "vg",
            MeasureArg::Uniform => "uniform",
        }
    }

    fn default_init(self) -> ModelParams {
        let measure = match self {
            MeasureArg::Merton => LevyMeasure::Merton { m: -0.1, s: 0.15 },
            MeasureArg::Gumbel => LevyMeasure::Gumbel { m: -0.1, sigma: 0.1 },
            MeasureArg::Dirac => LevyMeasure::Dirac { a: -0.1 },
            MeasureArg::Vg => LevyMeasure::VarianceGamma { a: 20.0, b: 10.0, weight: 2.0 },
            MeasureArg::Uniform => LevyMeasure::Uniform { a: -0.2, b: 0.05 },
        };
        ModelParams { sig2_bar: 0.04, zeta_bar: 1.0, measure, v3e: 0.0, u3e: 0.0, v2e: 0.0, u2e: 0.0 }
    }
}

/// `lo:hi:n`, `n` evenly spaced values.
#[derive(Clone, Copy, Debug)]
struct Grid {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Grid {
    fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64).collect()
    }
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err("expected lo:hi:n".into());
    };
    let lo: f64 = lo.trim().parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("hi: {e}"))?;
    let n: usize = n.trim().parse().map_err(|e| format!("n: {e}"))?;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n == 0 || (n == 1 && hi != lo) {
        return Err("need 0 < lo <= hi and n >= 1 (n = 1 only when lo = hi)".into());
    }
    Ok(Grid { lo, hi, n })
}

#[derive(Args)]
struct PriceArgs {
    /// Model parameters (JSON).
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    spot: f64,
    #[arg(long)]
    strike: f64,
    /// Maturity in years.
    #[arg(long)]
    maturity: f64,
    #[arg(long, value_enum, default_value = "call")]
    kind: Kind,
    #[arg(long, value_enum, default_value = "default")]
    contour: ContourChoice,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SmileArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    spot: f64,
    /// Strikes in price units, `lo:hi:n`.
    #[arg(long, value_parser = parse_grid)]
    strikes: Grid,
    /// Comma-separated maturities in years.
    #[arg(long, value_delimiter = ',', required = true)]
    maturities: Vec<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    /// Scenario JSON: `{"spot", "ou", "measure"}`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_parser = parse_grid)]
    strikes: Grid,
    #[arg(long, value_delimiter = ',', required = true)]
    maturities: Vec<f64>,
    #[arg(long, default_value_t = 400_000)]
    paths: u64,
    /// Time step in years; defaults to eps^2/20.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    antithetic: bool,
    /// Largest allowed paths x steps.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Surface CSV with header `t_years,log_strike,spot,iv`.
    #[arg(long)]
    surface: PathBuf,
    #[arg(long, value_enum, default_value = "extended")]
    class: ClassArg,
    #[arg(long, value_enum, default_value = "merton")]
    measure: MeasureArg,
    /// Initial parameters (JSON); a generic start for the measure otherwise.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Seed of the Latin-hypercube starts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of Latin-hypercube starts (class default when omitted).
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GroupArgs {
    /// OU specification (JSON): `{"a", "b", "beta", "lam", "rho", "eps"}`.
    #[arg(long)]
    model: PathBuf,
    /// Also report the quadrature oracle.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).map_err(|source| Error::Io { path: p.clone(), source })?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut w = sink(out)?;
    let text = serde_json::to_string_pretty(value).expect("serializable");
    writeln!(w, "{text}").map_err(|source| io_error(out, source))
}

fn io_error(out: &Option<PathBuf>, source: io::Error) -> Error {
    Error::Io { path: out.clone().unwrap_or_else(|| PathBuf::from("<stdout>")), source }
}

fn write_rows<T: Serialize>(out: &Option<PathBuf>, format: Format, rows: &[T]) -> Result<()> {
    match format {
        Format::Json => write_json(out, &rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink(out)?);
            for r in rows {
                w.serialize(r).map_err(|e| Error::Input(e.to_string()))?;
            }
            w.flush().map_err(|source| io_error(out, source))
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Input(format!("--{name} must be positive, got {v}")))
    }
}

#[derive(Serialize)]
struct PriceOut {
    u0: f64,
    eps_u1: f64,
    approx: f64,
    iv: f64,
}

fn cmd_price(a: PriceArgs) -> Result<()> {
    let theta = read_model(&a.model)?;
    let x = positive("spot", a.spot)?.ln();
    let k = positive("strike", a.strike)?.ln();
    let spec = OptionSpec::new(a.kind.into(), k, positive("maturity", a.maturity)?, x)?;
    let contour = match a.contour {
        ContourChoice::Default => Contour::default_for(spec.kind),
        ContourChoice::Saddle => Contour::saddle(&theta, &spec)?,
    };
    let terms = price_terms(&theta, &spec, &contour)?;
    check_resolved(terms.approx(), &spec, &contour)?;
    let iv = implied_vol(spec.kind, x, k, spec.t, terms.approx())
        .map_err(|e| Error::Core(fastlevy_core::Error::Numeric(e.to_string())))?;
    write_json(&a.out, &PriceOut { u0: terms.u0, eps_u1: terms.eps_u1, approx: terms.approx(), iv })
}

#[derive(Serialize)]
struct SmileRow {
    t: f64,
    k: f64,
    lm: f64,
    iv_model: f64,
}

fn check_maturities(ts: &[f64]) -> Result<Vec<f64>> {
    let mut ts: Vec<f64> = ts.iter().map(|&t| positive("maturities", t)).collect::<Result<_>>()?;
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    Ok(ts)
}

fn cmd_smile(a: SmileArgs) -> Result<()> {
    let theta = read_model(&a.model)?;
    let x = positive("spot", a.spot)?.ln();
    let mut rows = Vec::new();
    for t in check_maturities(&a.maturities)? {
        for strike in a.strikes.values() {
            let k = strike.ln();
            rows.push(SmileRow { t, k, lm: k - x, iv_model: model_iv(&theta, t, k, x)? });
        }
    }
    write_rows(&a.out, a.format, &rows)
}

#[derive(Serialize)]
struct McRow {
    t: f64,
    strike: f64,
    lm: f64,
    price_approx: f64,
    iv_approx: f64,
    price_mc: f64,
    stderr: f64,
    iv_mc: Option<f64>,
    abs_diff_iv: Option<f64>,
}

fn cmd_mc_verify(a: McArgs) -> Result<()> {
    let scenario = read_scenario(&a.model)?;
    let theta = ou_closed_forms(&scenario.ou)?.model_params(scenario.measure)?;
    let x = scenario.spot.ln();
    let strikes = a.strikes.values();
    let cfg =
        McConfig { n_paths: a.paths, dt: a.dt, seed: a.seed, antithetic: a.antithetic, budget: a.budget, y0: 0.0 };
    let mut rows = Vec::new();
    for t in check_maturities(&a.maturities)? {
        // out-of-the-money side for every strike
        let kinds: Vec<OptionKind> =
            strikes.iter().map(|s| if s.ln() >= x { OptionKind::Call } else { OptionKind::Put }).collect();
        let payoffs: Vec<Payoff> = strikes
            .iter()
            .zip(&kinds)
            .map(|(s, kind)| match kind {
                OptionKind::Call => Payoff::Call { k: s.ln() },
                OptionKind::Put => Payoff::Put { k: s.ln() },
            })
            .collect();
        let mc = simulate_prices(&scenario.ou, &scenario.measure, x, t, &payoffs, &cfg)?;
        for ((strike, kind), res) in strikes.iter().zip(&kinds).zip(&mc) {
            let k = strike.ln();
            let spec = OptionSpec::new(*kind, k, t, x)?;
            let approx = price_terms(&theta, &spec, &Contour::default_for(*kind))?.approx();
            let iv_approx = implied_vol(*kind, x, k, t, approx)?;
            let iv_mc = implied_vol(*kind, x, k, t, res.price).ok();
            rows.push(McRow {
                t,
                strike: *strike,
                lm: k - x,
                price_approx: approx,
                iv_approx,
                price_mc: res.price,
                stderr: res.stderr,
                iv_mc,
                abs_diff_iv: iv_mc.map(|v| (v - iv_approx).abs()),
            });
        }
    }
    write_rows(&a.out, a.format, &rows)
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<()> {
    let surface = read_surface(&a.surface)?;
    let init = match &a.model {
        Some(p) => {
            let theta = read_model(p)?;
            if theta.measure.tag() != a.measure.tag() {
                return Err(Error::Input(format!(
                    "initial model uses the {} measure but --measure is {}",
                    theta.measure.tag(),
                    a.measure.tag()
                )));
            }
            theta
        }
        None => a.measure.default_init(),
    };
    let opts = CalibrationOptions {
        max_iter: a.max_iter,
        multi_starts: a.starts,
        seed: a.seed,
        ..CalibrationOptions::default()
    };
    let bounds = Bounds::default_for(&init.measure);
    let result = calibrate(&surface, a.class.into(), &init, &bounds, &opts, &Parallel)?;
    write_json(&a.out, &CalibrationReport::from(&result))
}

#[derive(Serialize)]
struct GroupOut {
    closed_form: fastlevy::groups::GroupParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<fastlevy::groups::GroupParams>,
}

fn cmd_group_params(a: GroupArgs) -> Result<()> {
    let spec: fastlevy::groups::OuSpec = read_json(&a.model)?;
    let closed_form = ou_closed_forms(&spec)?;
    let oracle = if a.oracle { Some(poisson_oracle_ou(&spec, &OracleOptions::default())?) } else { None };
    write_json(&a.out, &GroupOut { closed_form, oracle })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Price(a) => cmd_price(a),
        Command::Smile(a) => cmd_smile(a),
        Command::McVerify(a) => cmd_mc_verify(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::GroupParams(a) => cmd_group_params(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
