//! Flat key=value run configuration.
//!
//! ```text
//! background.type = free            # free | constant | file
//! background.a    = 1.0
//! wvn.c      = 2.0
//! wvn.omega  = 3.141592653589793
//! wvn.delta  = 0.0
//! wvn.gamma  = 0.6
//! q1.type    = none                 # none | file
//! bc.alpha   = 0.5
//! run.ode_tol = 1e-10
//! ```
//!
//! Unknown keys are rejected; every violated condition is named in the error.

use crate::critical::{SummablePotential, WvNProblem};
use crate::error::{Error, Result};
use crate::floquet::PeriodicBackground;
use crate::spectral::PipelineConfig;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputFormat {
    JsonPretty,
    JsonCompact,
}

pub struct RunConfig {
    pub problem: WvNProblem,
    pub pipeline: PipelineConfig,
    pub output: OutputFormat,
}

fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Validation(format!("config line {} is not key = value", lineno + 1))
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn get_f64(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse::<f64>()
            .map(Some)
            .map_err(|_| Error::Validation(format!("{key} = {v} is not a number"))),
    }
}

fn require_f64(map: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    get_f64(map, key)?.ok_or_else(|| Error::Validation(format!("missing required key {key}")))
}

/// Two-column text file: x and value per line.
fn read_two_column(path: &str) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let x: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Validation(format!("{path}:{}: bad x column", lineno + 1)))?;
        let v: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Validation(format!("{path}:{}: bad value column", lineno + 1)))?;
        out.push((x, v));
    }
    if out.len() < 4 {
        return Err(Error::Validation(format!("{path}: needs at least 4 rows")));
    }
    Ok(out)
}

fn background_from(map: &BTreeMap<String, String>) -> Result<PeriodicBackground> {
    let kind = map
        .get("background.type")
        .map(String::as_str)
        .unwrap_or("free");
    match kind {
        "free" => {
            let a = get_f64(map, "background.a")?.unwrap_or(1.0);
            if a <= 0.0 {
                return Err(Error::Validation("background.a must be positive".into()));
            }
            Ok(PeriodicBackground::free(a))
        }
        "constant" => {
            let a = get_f64(map, "background.a")?.unwrap_or(1.0);
            let v0 = require_f64(map, "background.v0")?;
            if a <= 0.0 {
                return Err(Error::Validation("background.a must be positive".into()));
            }
            Ok(PeriodicBackground::constant(v0, a))
        }
        "file" => {
            let path = map
                .get("background.file")
                .ok_or_else(|| Error::Validation("background.file required".into()))?;
            let rows = read_two_column(path)?;
            let dx = rows[1].0 - rows[0].0;
            if rows[0].0.abs() > 1e-12 {
                return Err(Error::Validation(
                    "sampled potential must start at x = 0".into(),
                ));
            }
            for w in rows.windows(2) {
                if ((w[1].0 - w[0].0) - dx).abs() > 1e-9 * dx.abs().max(1.0) {
                    return Err(Error::Validation(
                        "sampled potential requires a uniform grid".into(),
                    ));
                }
            }
            let a = rows.last().unwrap().0 + dx;
            if let Some(a_cfg) = get_f64(map, "background.a")? {
                if (a_cfg - a).abs() > 1e-9 * a {
                    return Err(Error::Validation(format!(
                        "background.a = {a_cfg} disagrees with the sampled period {a}"
                    )));
                }
            }
            PeriodicBackground::from_samples(rows.into_iter().map(|r| r.1).collect(), a)
        }
        other => Err(Error::Validation(format!(
            "background.type = {other} is not free | constant | file"
        ))),
    }
}

fn q1_from(map: &BTreeMap<String, String>) -> Result<Option<SummablePotential>> {
    match map.get("q1.type").map(String::as_str).unwrap_or("none") {
        "none" => Ok(None),
        "file" => {
            let path = map
                .get("q1.file")
                .ok_or_else(|| Error::Validation("q1.file required".into()))?;
            let rows = read_two_column(path)?;
            let c1 = require_f64(map, "q1.c1")?;
            let alpha1 = require_f64(map, "q1.alpha1")?;
            if c1 <= 0.0 || alpha1 <= 0.0 {
                return Err(Error::Validation(
                    "q1.c1 and q1.alpha1 must be positive".into(),
                ));
            }
            let table = Arc::new(rows);
            let t = Arc::clone(&table);
            let f = move |x: f64| -> f64 {
                // Linear interpolation, zero beyond the tabulated range.
                let rows = &*t;
                if x <= rows[0].0 || x >= rows[rows.len() - 1].0 {
                    return 0.0;
                }
                let i = rows.partition_point(|r| r.0 < x).max(1) - 1;
                let (x0, v0) = rows[i];
                let (x1, v1) = rows[i + 1];
                v0 + (v1 - v0) * (x - x0) / (x1 - x0)
            };
            Ok(Some(SummablePotential {
                f: Arc::new(f),
                c1,
                alpha1,
            }))
        }
        other => Err(Error::Validation(format!(
            "q1.type = {other} is not none | file"
        ))),
    }
}

const KNOWN_KEYS: &[&str] = &[
    "background.type",
    "background.a",
    "background.v0",
    "background.file",
    "wvn.c",
    "wvn.omega",
    "wvn.delta",
    "wvn.gamma",
    "q1.type",
    "q1.file",
    "q1.c1",
    "q1.alpha1",
    "bc.alpha",
    "run.ode_tol",
    "run.quad_tol",
    "run.x_max_cap",
    "run.time_per_sample",
    "run.z0",
    "output.format",
];

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let map = parse_kv(text)?;
    for k in map.keys() {
        if !KNOWN_KEYS.contains(&k.as_str()) {
            return Err(Error::Validation(format!("unknown config key {k}")));
        }
    }

    let bg = background_from(&map)?;
    let gamma = require_f64(&map, "wvn.gamma")?;
    if !(gamma > 0.5 && gamma < 1.0) {
        return Err(Error::Validation(format!(
            "wvn.gamma must lie in (0.5, 1), got {gamma}"
        )));
    }
    let alpha = get_f64(&map, "bc.alpha")?.unwrap_or(0.0);
    if !(0.0..PI).contains(&alpha) {
        return Err(Error::Validation(format!(
            "bc.alpha must lie in [0, pi), got {alpha}"
        )));
    }
    let omega = require_f64(&map, "wvn.omega")?;
    if omega == 0.0 {
        return Err(Error::Validation("wvn.omega must be nonzero".into()));
    }

    let problem = WvNProblem {
        bg,
        c: get_f64(&map, "wvn.c")?.unwrap_or(0.0),
        omega,
        delta: get_f64(&map, "wvn.delta")?.unwrap_or(0.0),
        gamma,
        q1: q1_from(&map)?,
        alpha,
    };
    // Structural checks shared with the library (odd-integer resonance is
    // always refused; the even case is re-examined per critical point).
    problem.validate()?;

    let defaults = PipelineConfig::default();
    let ode_tol = get_f64(&map, "run.ode_tol")?.unwrap_or(defaults.ode_tol);
    if !(ode_tol > 1e-14 && ode_tol <= 1e-2) {
        return Err(Error::Validation(format!(
            "run.ode_tol must lie in (1e-14, 1e-2], got {ode_tol}"
        )));
    }
    let pipeline = PipelineConfig {
        ode_tol,
        quad_tol: get_f64(&map, "run.quad_tol")?.unwrap_or(defaults.quad_tol),
        x_max_cap: get_f64(&map, "run.x_max_cap")?.unwrap_or(defaults.x_max_cap),
        time_per_sample: get_f64(&map, "run.time_per_sample")?
            .unwrap_or(defaults.time_per_sample),
        z0: get_f64(&map, "run.z0")?.unwrap_or(defaults.z0),
    };

    let output = match map.get("output.format").map(String::as_str) {
        None | Some("json-pretty") => OutputFormat::JsonPretty,
        Some("json-compact") => OutputFormat::JsonCompact,
        Some(other) => {
            return Err(Error::Validation(format!(
                "output.format = {other} is not json-pretty | json-compact"
            )))
        }
    };

    Ok(RunConfig {
        problem,
        pipeline,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "
        background.type = free
        background.a = 1.0
        wvn.c = 2.0
        wvn.omega = 3.141592653589793
        wvn.gamma = 0.6
        bc.alpha = 0.5
    ";

    #[test]
    fn parses_minimal_config() {
        let cfg = parse_config(BASE).unwrap();
        assert_eq!(cfg.problem.gamma, 0.6);
        assert_eq!(cfg.problem.alpha, 0.5);
        assert_eq!(cfg.output, OutputFormat::JsonPretty);
    }

    #[test]
    fn rejects_bad_gamma() {
        let text = BASE.replace("0.6", "1.2");
        let err = match parse_config(&text) {
            Err(e) => e,
            Ok(_) => panic!("gamma = 1.2 accepted"),
        };
        assert!(err.to_string().contains("gamma"), "{err}");
    }

    #[test]
    fn rejects_bad_alpha_and_unknown_keys() {
        let text = format!("{BASE}\nbc.alpha = 4.0");
        assert!(parse_config(&text).is_err());
        let text2 = format!("{BASE}\nsurprise.key = 1");
        assert!(parse_config(&text2).is_err());
    }

    #[test]
    fn rejects_odd_integer_resonance() {
        let text = BASE.replace("3.141592653589793", "1.5707963267948966");
        let err = match parse_config(&text) {
            Err(e) => e,
            Ok(_) => panic!("odd resonance accepted"),
        };
        assert!(matches!(err, Error::ResonanceCollision(_)), "{err}");
    }
}
