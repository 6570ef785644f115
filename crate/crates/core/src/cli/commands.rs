//! Command bodies: orchestration of the library modules plus CSV/JSON
//! emission. Every command is deterministic for a fixed configuration.

use crate::asymptotic;
use crate::cli::config::{OutputFormat, RunConfig};
use crate::critical::{beta_phi_cr, locate_critical, CriticalPoint, ResonanceSign};
use crate::error::{Error, Result};
use crate::floquet::{band_edges, bloch, BandStructure};
use crate::model::{self, ModelSpec, Remainder};
use crate::spectral::{pseudogap_scan, Side};
use num_complex::Complex64;
use serde_json::json;
use std::fmt::Write as _;
use std::sync::Arc;

pub struct CommandOutput {
    /// Primary tabular output (CSV with a one-line header), when the
    /// command produces one.
    pub csv: Option<String>,
    /// Single-object JSON summary, when the command produces one.
    pub json: Option<String>,
}

fn render_json(value: &serde_json::Value, fmt: &OutputFormat) -> String {
    match fmt {
        OutputFormat::JsonPretty => serde_json::to_string_pretty(value).expect("serializable"),
        OutputFormat::JsonCompact => serde_json::to_string(value).expect("serializable"),
    }
}

pub fn parse_sign(s: &str) -> Result<ResonanceSign> {
    match s {
        "+" | "plus" => Ok(ResonanceSign::Plus),
        "-" | "minus" => Ok(ResonanceSign::Minus),
        other => Err(Error::Validation(format!("sign must be + or -, got {other}"))),
    }
}

/// "a:b:n" — n geometric points from a to b inclusive.
pub fn parse_offsets(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Validation(format!(
            "offsets must be a:b:n (geometric), got {spec}"
        )));
    }
    let a: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Validation(format!("bad offset bound {}", parts[0])))?;
    let b: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Validation(format!("bad offset bound {}", parts[1])))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| Error::Validation(format!("bad offset count {}", parts[2])))?;
    if !(a > 0.0 && b > a && n >= 2) {
        return Err(Error::Validation(
            "offsets need 0 < a < b and n >= 2".into(),
        ));
    }
    let ratio = (b / a).powf(1.0 / (n as f64 - 1.0));
    Ok((0..n).map(|i| a * ratio.powi(i as i32)).collect())
}

pub fn parse_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Validation(format!("bad list entry {t}")))
        })
        .collect()
}

fn locate(
    cfg: &RunConfig,
    band: usize,
    sign: ResonanceSign,
) -> Result<(BandStructure, CriticalPoint, crate::floquet::BlochData)> {
    let bs = band_edges(&cfg.problem.bg, band + 1)?;
    let mut crit = locate_critical(&cfg.problem, &bs, band, sign)?;
    let b = bloch(&cfg.problem.bg, &bs, crit.nu, None)?;
    beta_phi_cr(&cfg.problem, &mut crit, &b)?;
    Ok((bs, crit, b))
}

/// Band edges as CSV rows (j, lambda_j, mu_j).
pub fn cmd_bands(cfg: &RunConfig, j_max: usize) -> Result<CommandOutput> {
    let bs = band_edges(&cfg.problem.bg, j_max)?;
    let mut csv = String::from("j,lambda_j,mu_j\n");
    for b in &bs.bands {
        writeln!(csv, "{},{},{}", b.index, b.lo, b.hi).expect("string write");
    }
    Ok(CommandOutput {
        csv: Some(csv),
        json: None,
    })
}

/// The seven closed-form numbers attached to one critical point.
pub fn cmd_predict(cfg: &RunConfig, band: usize, sign: ResonanceSign) -> Result<CommandOutput> {
    let (_bs, crit, b) = locate(cfg, band, sign)?;
    let pred = asymptotic::predict(&crit, cfg.problem.gamma, cfg.problem.bg.period(), &b)?;
    let value = json!({
        "nu": crit.nu,
        "beta_cr": crit.beta_cr,
        "phi_cr": crit.phi_cr,
        "c_cr": pred.c_cr,
        "a_cr": pred.a_cr,
        "C_mp": pred.c_mp,
        "exponent_coeff": pred.exponent_coeff,
    });
    Ok(CommandOutput {
        csv: None,
        json: Some(render_json(&value, &cfg.output)),
    })
}

/// Density scan on both sides of the critical point plus fit and sin² law.
pub fn cmd_pseudogap(
    cfg: &RunConfig,
    band: usize,
    sign: ResonanceSign,
    offsets: &[f64],
) -> Result<CommandOutput> {
    let (bs, crit, b) = locate(cfg, band, sign)?;
    let pred = asymptotic::predict(&crit, cfg.problem.gamma, cfg.problem.bg.period(), &b)?;
    let scan = pseudogap_scan(
        &cfg.problem,
        &bs,
        &crit,
        offsets,
        -2.0 * pred.c_cr,
        &cfg.pipeline,
    )?;

    let mut csv = String::from("lambda,offset,A_re,A_im,rho_prime,tail_error,converged\n");
    for s in &scan.samples {
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            s.lambda,
            if s.side == Side::Above { s.offset } else { -s.offset },
            s.a_alpha.re,
            s.a_alpha.im,
            s.rho_prime,
            s.tail_error,
            s.converged
        )
        .expect("string write");
    }

    let fit_json = |f: &crate::spectral::PseudogapFit| {
        json!({
            "side": f.side.to_string(),
            "n_points": f.points.len(),
            "slope": f.slope,
            "slope_target": f.slope_target,
            "rel_dev": f.rel_dev,
            "slope_stderr": f.slope_stderr,
        })
    };
    let value = json!({
        "band": band,
        "sign": sign.to_string(),
        "nu": crit.nu,
        "beta_cr": crit.beta_cr,
        "c_cr": pred.c_cr,
        "alpha_cr": scan.alpha_cr.alpha_cr,
        "alpha_cr_residual": scan.alpha_cr.residual,
        "fit_above": fit_json(&scan.fit_above),
        "fit_below": fit_json(&scan.fit_below),
        "sin2": {
            "offset": scan.sin2.offset,
            "spread_above": scan.sin2.spread_above,
            "spread_below": scan.sin2.spread_below,
            "spread_mean": scan.sin2.spread_mean,
            "minimizer_above": scan.sin2.minimizer_above,
            "minimizer_below": scan.sin2.minimizer_below,
            "minimizer_joint": scan.sin2.minimizer_joint,
        },
    });
    Ok(CommandOutput {
        csv: Some(csv),
        json: Some(render_json(&value, &cfg.output)),
    })
}

/// Named remainder fixtures of the model-verification command.
pub fn model_fixture(name: &str, beta: f64, gamma: f64) -> Result<ModelSpec> {
    let e_plus = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let e_minus = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    match name {
        // R = 0, f = e₊: the growing direction, Φ = 1.
        "free-plus" => Ok(ModelSpec::bare(beta, gamma, e_plus)),
        // R = 0, f = f₋ = e₋: the decaying direction, Φ = 0.
        "free-minus" => Ok(ModelSpec::bare(beta, gamma, e_minus)),
        // Symmetric off-diagonal coupling with a summable envelope.
        "coupled" => Ok(ModelSpec {
            beta,
            gamma,
            remainder: Some(Remainder {
                func: Arc::new(|x: f64, _| {
                    let v = 0.1 / ((1.0 + x) * (1.0 + x));
                    [[0.0, v], [v, 0.0]]
                }),
                c_r: 0.1,
                alpha_r: 1.0,
            }),
            f0: e_plus,
        }),
        other => Err(Error::Validation(format!(
            "unknown fixture {other}; available: free-plus, free-minus, coupled"
        ))),
    }
}

/// Model-problem limit ratios against the closed-form target.
pub fn cmd_model_verify(
    beta: f64,
    gamma: f64,
    eps0_list: &[f64],
    fixture: &str,
) -> Result<CommandOutput> {
    let spec = model_fixture(fixture, beta, gamma)?;
    let rows = model::verify_theorem42(&spec, eps0_list, true)?;
    let mut csv = String::from("eps0,eps,limit_norm,ratio,target\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            r.eps0,
            r.eps,
            r.log_limit_norm.exp(),
            r.ratio,
            r.target
        )
        .expect("string write");
    }
    Ok(CommandOutput {
        csv: Some(csv),
        json: None,
    })
}

/// Turning-point connection diagnostics over a list of ε.
pub fn cmd_connection(beta: f64, gamma: f64, eps_list: &[f64], z0: f64) -> Result<CommandOutput> {
    let mut csv = String::from(
        "eps,col1_target_dev,det_dev,d11_re,d11_im,d21_re,d21_im,d12_re,d12_im,d22_re,d22_im\n",
    );
    for &eps in eps_list {
        let rep = model::connection_matrix(beta, gamma, eps, z0)?;
        let d = rep.d_matrix;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            rep.eps,
            rep.col1_target_dev,
            rep.det_dev,
            d[0][0].re,
            d[0][0].im,
            d[1][0].re,
            d[1][0].im,
            d[0][1].re,
            d[0][1].im,
            d[1][1].re,
            d[1][1].im
        )
        .expect("string write");
    }
    Ok(CommandOutput {
        csv: Some(csv),
        json: None,
    })
}

/// Process exit code for an error, per the command contract:
/// 2 for configuration/precondition violations, 3 for insufficient
/// converged data, 1 for anything else.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Validation(_)
        | Error::ResonanceCollision(_)
        | Error::ScheduleOrdering(_)
        | Error::OutOfRange(_)
        | Error::GapOrEdge { .. }
        | Error::NearEdge { .. }
        | Error::DegenerateResonance { .. } => 2,
        Error::InsufficientData(_) => 3,
        _ => 1,
    }
}
