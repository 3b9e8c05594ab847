//! JSON parameter files and the CSV surface format.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use fastlevy_core::calibration::{CalibrationResult, Residual, VolSurface};
use fastlevy_core::groups::OuSpec;
use fastlevy_core::levy::LevyMeasure;
use fastlevy_core::pricing::ModelParams;
use fastlevy_core::volatility::Quote;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Header of the surface CSV format.
pub const SURFACE_HEADER: [&str; 4] = ["t_years", "log_strike", "spot", "iv"];

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Parses JSON from a reader; `context` names the source in diagnostics,
/// which carry serde's line and column.
pub fn parse_json<T: DeserializeOwned>(reader: impl Read, context: &str) -> Result<T> {
    serde_json::from_reader(reader).map_err(|e| Error::Parse { context: context.to_string(), message: e.to_string() })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_json(open(path)?, &path.display().to_string())
}

/// Reads and validates model parameters.
pub fn read_model(path: &Path) -> Result<ModelParams> {
    let theta: ModelParams = read_json(path)?;
    theta.validate()?;
    Ok(theta)
}

/// Simulation setup: spot, fast-factor specification and jump law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub spot: f64,
    pub ou: OuSpec,
    pub measure: LevyMeasure,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(Error::Input(format!("spot {} must be positive", self.spot)));
        }
        self.ou.validate()?;
        self.measure.validate()?;
        Ok(())
    }
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    let s: Scenario = read_json(path)?;
    s.validate()?;
    Ok(s)
}

#[derive(Debug, Deserialize)]
struct SurfaceRow {
    t_years: f64,
    log_strike: f64,
    spot: f64,
    iv: f64,
}

/// Parses a surface from CSV text with header `t_years,log_strike,spot,iv`.
pub fn parse_surface(reader: impl Read, label: &str) -> Result<VolSurface> {
    let parse_err = |message: String| Error::Parse { context: label.to_string(), message };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    if header.iter().ne(SURFACE_HEADER) {
        return Err(parse_err(format!(
            "expected header `{}`, found `{}`",
            SURFACE_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut quotes = Vec::new();
    let mut spot = None;
    for row in rdr.deserialize::<SurfaceRow>() {
        let row = row.map_err(|e| parse_err(e.to_string()))?;
        if !(row.spot > 0.0) {
            return Err(parse_err(format!("spot {} must be positive", row.spot)));
        }
        spot.get_or_insert(row.spot);
        quotes.push(Quote { t: row.t_years, k: row.log_strike, x: row.spot.ln(), iv: row.iv });
    }
    let spot = spot.ok_or_else(|| parse_err("surface has no rows".into()))?;
    Ok(VolSurface::new(spot, quotes, label.to_string())?)
}

pub fn read_surface(path: &Path) -> Result<VolSurface> {
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_surface(open(path)?, &label)
}

pub fn write_surface(writer: impl Write, surface: &VolSurface) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::Parse { context: "surface output".into(), message: e.to_string() };
    w.write_record(SURFACE_HEADER).map_err(io_err)?;
    for q in &surface.quotes {
        w.write_record([q.t, q.k, q.x.exp(), q.iv].map(|v| v.to_string())).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Parse { context: "surface output".into(), message: e.to_string() })
}

/// JSON form of a calibration outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub theta: ModelParams,
    pub rmse: f64,
    pub residuals: Vec<Residual>,
    pub converged: bool,
    pub iterations: usize,
}

impl From<&CalibrationResult> for CalibrationReport {
    fn from(r: &CalibrationResult) -> Self {
        CalibrationReport {
            theta: r.theta,
            rmse: r.rmse,
            residuals: r.residuals.clone(),
            converged: r.converged,
            iterations: r.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "t_years,log_strike,spot,iv\n\
        0.25,4.5,100,0.21\n0.25,4.6,100,0.2\n0.25,4.7,100,0.19\n0.25,4.8,100,0.2\n\
        0.5,4.5,100,0.22\n0.5,4.6,100,0.21\n0.5,4.7,100,0.2\n0.5,4.8,100,0.2\n";

    #[test]
    fn surface_round_trip() {
        let s = parse_surface(CSV.as_bytes(), "x").unwrap();
        assert_eq!(s.quotes.len(), 8);
        assert!((s.quotes[0].x - 100f64.ln()).abs() < 1e-15);
        let mut out = Vec::new();
        write_surface(&mut out, &s).unwrap();
        let back = parse_surface(out.as_slice(), "x").unwrap();
        for (a, b) in s.quotes.iter().zip(&back.quotes) {
            assert_eq!((a.t, a.k, a.iv), (b.t, b.k, b.iv));
            assert!((a.x - b.x).abs() < 1e-14);
        }
    }

    #[test]
    fn surface_without_header_is_rejected() {
        let body: String = CSV.lines().skip(1).map(|l| format!("{l}\n")).collect();
        let err = parse_surface(body.as_bytes(), "x").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_json::<ModelParams>("{\"sig2_bar\": 0.04,\n \"zeta_bar\": }".as_bytes(), "m").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn model_json_round_trip() {
        let json = r#"{"sig2_bar": 0.04, "zeta_bar": 1.0,
            "measure": {"variant": "gumbel", "m": -0.1, "sigma": 0.05},
            "v3e": -0.001, "u3e": 0.01, "v2e": -0.002, "u2e": 0.0}"#;
        let theta: ModelParams = parse_json(json.as_bytes(), "m").unwrap();
        let again: ModelParams = parse_json(serde_json::to_string(&theta).unwrap().as_bytes(), "m").unwrap();
        assert_eq!(theta, again);
    }
}
