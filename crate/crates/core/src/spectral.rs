//! The physical pipeline: integrate the perturbed eigenfunction equation,
//! extract the Jost coefficient A_α(λ) with the Wronskian-ratio estimator,
//! evaluate ρ'_α(λ) = 1/(2π|W||A|²), estimate α_cr from the growth modes at
//! the critical energy, and run pseudogap scans.

use crate::critical::{eps_cr, CriticalPoint, WvNProblem};
use crate::error::{Error, Result};
use crate::floquet::{bloch, BandStructure, BlochData, BlochWave};
use crate::numkit::ode::{integrate_observed, OdeOptions, Trajectory};
use crate::numkit::tail::{tail_limit, tail_limit_real};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

/// Tolerances and budgets of the sampling pipeline.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub ode_tol: f64,
    pub quad_tol: f64,
    /// Hard cap on the integration range of one density sample.
    pub x_max_cap: f64,
    /// Wall-clock budget per density sample, seconds.
    pub time_per_sample: f64,
    /// Z₀ of the region schedule (the connection diagnostic shares it).
    pub z0: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            ode_tol: 1e-10,
            quad_tol: 1e-10,
            x_max_cap: 5e6,
            time_per_sample: 300.0,
            z0: crate::model::DEFAULT_Z0,
        }
    }
}

const X_START: f64 = 1e-6;
/// Fraction of the range used as the averaging window.
const WINDOW_FRACTION: f64 = 0.5;

/// Cauchy data (φ(x₀), φ'(x₀)) from (φ(0), φ'(0)) = (sin α, cos α) via the
/// integrable-singularity series of the potential on [0, x₀].
fn series_start(problem: &WvNProblem, lambda: f64, f0: [f64; 2]) -> [f64; 2] {
    let q0 = problem.bg.eval(0.0);
    let wvn = problem.c * problem.delta.sin() * X_START.powf(1.0 - problem.gamma)
        / (1.0 - problem.gamma);
    let phi = f0[0] + X_START * f0[1];
    let dphi = f0[1] + f0[0] * ((q0 - lambda) * X_START + wvn);
    [phi, dphi]
}

fn phi_max_step(problem: &WvNProblem, lambda: f64) -> f64 {
    let fastest = (2.0 * problem.omega.abs()).max(lambda.abs().sqrt()).max(1.0);
    2.0 * PI / fastest / 20.0
}

/// Solution of the Cauchy problem for the full operator, stored at the
/// integrator's accepted steps.
pub fn integrate_eigenfunction(
    problem: &WvNProblem,
    lambda: f64,
    x_max: f64,
    rtol: f64,
) -> Result<Trajectory<2>> {
    let y0 = series_start(problem, lambda, [problem.alpha.sin(), problem.alpha.cos()]);
    let mut field = |x: f64, y: &[f64; 2]| {
        let v = problem.potential(x) - lambda;
        [y[1], v * y[0]]
    };
    let opt = OdeOptions {
        rtol,
        max_step: phi_max_step(problem, lambda),
        ..Default::default()
    };
    let mut abscissae = Vec::new();
    let mut states = Vec::new();
    let (terminal, _) = integrate_observed(
        &mut field,
        (X_START, x_max),
        y0,
        &opt,
        &mut |x, y: &[f64; 2], _| {
            abscissae.push(x);
            states.push(*y);
        },
    )?;
    Ok(Trajectory {
        abscissae,
        states,
        terminal,
    })
}

/// Jost coefficient extraction.
#[derive(Debug, Clone, Copy)]
pub struct JostResult {
    pub a_alpha: Complex64,
    pub tail_error: f64,
    pub x_max_used: f64,
}

/// Pointwise estimator A(x) = W{φ, ψ₊}(x) / W{ψ₋, ψ₊}(λ), period-averaged
/// over `carrier_period` and Richardson-corrected with drift x^{1-2γ}.
/// The estimator is exactly A wherever φ is exactly A ψ₋ + conj(A) ψ₊.
pub fn jost_coefficient(
    problem: &WvNProblem,
    bloch_data: &BlochData,
    lambda: f64,
    x_max: f64,
    carrier_period: f64,
    cfg: &PipelineConfig,
) -> Result<JostResult> {
    jost_with_alpha(problem, problem.alpha, bloch_data, lambda, x_max, carrier_period, cfg)
}

fn jost_with_alpha(
    problem: &WvNProblem,
    alpha: f64,
    bloch_data: &BlochData,
    lambda: f64,
    x_max: f64,
    carrier_period: f64,
    cfg: &PipelineConfig,
) -> Result<JostResult> {
    let wave = BlochWave::new(&problem.bg, bloch_data);
    let denom = -bloch_data.wronskian; // W{ψ₋, ψ₊}
    let y0 = series_start(problem, lambda, [alpha.sin(), alpha.cos()]);
    let window_start = WINDOW_FRACTION * x_max;
    let dx = (carrier_period / 64.0).max((x_max - window_start) / 200_000.0);

    let mut samples: Vec<(f64, Complex64)> = Vec::new();
    let mut last_kept = f64::NEG_INFINITY;
    let mut field = |x: f64, y: &[f64; 2]| {
        let v = problem.potential(x) - lambda;
        [y[1], v * y[0]]
    };
    let opt = OdeOptions {
        rtol: cfg.ode_tol,
        max_step: phi_max_step(problem, lambda),
        deadline: Some(Instant::now() + Duration::from_secs_f64(cfg.time_per_sample)),
        ..Default::default()
    };
    integrate_observed(
        &mut field,
        (X_START, x_max),
        y0,
        &opt,
        &mut |x, y: &[f64; 2], _| {
            if x >= window_start && x - last_kept >= dx {
                let (psi, dpsi) = wave.eval(x);
                let a = (psi * y[1] - dpsi * y[0]) / denom;
                samples.push((x, a));
                last_kept = x;
            }
        },
    )?;

    // |A| converges at norm level (the residual Harris-Lutz rotation only
    // moves the phase, at the slow x^{1-2γ} rate); extract the modulus from
    // |A(x)| and keep the complex estimate for the phase.
    let est = tail_limit(&samples, carrier_period, 1.0 - 2.0 * problem.gamma)?;
    let abs_samples: Vec<(f64, f64)> = samples.iter().map(|&(x, a)| (x, a.norm())).collect();
    let abs_est = tail_limit_real(&abs_samples, carrier_period, -2.0 * problem.gamma)?;
    let a_abs = abs_est.value_real();
    if !(a_abs > 0.0) {
        return Err(Error::TailUnconverged {
            detail: format!("non-positive |A| estimate {a_abs}"),
        });
    }
    let a_alpha = if est.value.norm() > 0.0 {
        est.value * (a_abs / est.value.norm())
    } else {
        Complex64::new(a_abs, 0.0)
    };
    Ok(JostResult {
        a_alpha,
        tail_error: abs_est.error_bar,
        x_max_used: x_max,
    })
}

/// One spectral-density evaluation.
#[derive(Debug, Clone, Copy)]
pub struct DensitySample {
    pub lambda: f64,
    pub a_alpha: Complex64,
    pub rho_prime: f64,
    pub tail_error: f64,
    pub x_max_used: f64,
}

fn density_x_max(problem: &WvNProblem, eps: f64, cfg: &PipelineConfig) -> f64 {
    let transition = 10.0 * eps.abs().powf(-1.0 / problem.gamma);
    transition.max(1e5).min(cfg.x_max_cap)
}

/// ρ'_α(λ) through the Titchmarsh–Weyl formula; `rescale` is the Bloch gauge
/// hook (ρ' is invariant under it).
pub fn spectral_density(
    problem: &WvNProblem,
    bs: &BandStructure,
    crit: &CriticalPoint,
    lambda: f64,
    rescale: Option<Complex64>,
    cfg: &PipelineConfig,
) -> Result<DensitySample> {
    spectral_density_with_alpha(problem, problem.alpha, bs, crit, lambda, rescale, cfg)
}

fn spectral_density_with_alpha(
    problem: &WvNProblem,
    alpha: f64,
    bs: &BandStructure,
    crit: &CriticalPoint,
    lambda: f64,
    rescale: Option<Complex64>,
    cfg: &PipelineConfig,
) -> Result<DensitySample> {
    let eps = eps_cr(problem, bs, crit, lambda)?;
    if eps == 0.0 {
        return Err(Error::Validation(
            "spectral_density needs lambda != nu_cr".into(),
        ));
    }
    let b = bloch(&problem.bg, bs, lambda, rescale)?;
    let period = (2.0 * PI / eps.abs()).max(problem.bg.period());
    let x_max = density_x_max(problem, eps, cfg);
    let jost = jost_with_alpha(problem, alpha, &b, lambda, x_max, period, cfg)?;
    let rho = 1.0 / (2.0 * PI * b.wronskian_abs() * jost.a_alpha.norm_sqr());
    Ok(DensitySample {
        lambda,
        a_alpha: jost.a_alpha,
        rho_prime: rho,
        tail_error: jost.tail_error / jost.a_alpha.norm().max(1e-300),
        x_max_used: jost.x_max_used,
    })
}

/// Boundary angle of the subordinate solution, from the growth modes of the
/// two basis Cauchy problems at ν_cr.
#[derive(Debug, Clone, Copy)]
pub struct AlphaCrEstimate {
    pub alpha_cr: f64,
    pub growth_a: f64,
    pub growth_b: f64,
    pub residual: f64,
}

/// G(α) = A sin α + B cos α is the envelope-normalized coefficient of the
/// exp(+β_cr x^{1-γ}/(1-γ)) mode; α_cr is its zero in [0, π).
pub fn estimate_alpha_cr(
    problem: &WvNProblem,
    bs: &BandStructure,
    crit: &CriticalPoint,
    cfg: &PipelineConfig,
) -> Result<AlphaCrEstimate> {
    if crit.beta_cr <= 0.0 {
        return Err(Error::Validation(
            "critical point carries no beta_cr; run beta_phi_cr first".into(),
        ));
    }
    let b = bloch(&problem.bg, bs, crit.nu, None)?;
    let ga = growth_mode(problem, bs, crit, &b, [1.0, 0.0], cfg)?; // α = π/2
    let gb = growth_mode(problem, bs, crit, &b, [0.0, 1.0], cfg)?; // α = 0
    let scale = ga.norm().max(gb.norm());
    if scale < 1e-10 {
        return Err(Error::GrowthBelowNoise);
    }
    let theta = if ga.norm() >= gb.norm() { ga.arg() } else { gb.arg() };
    let rot = Complex64::from_polar(1.0, -theta);
    let a_r = (ga * rot).re;
    let b_r = (gb * rot).re;
    let alpha_cr = (-b_r).atan2(a_r).rem_euclid(PI);
    let residual = (ga * alpha_cr.sin() + gb * alpha_cr.cos()).norm() / scale;
    Ok(AlphaCrEstimate {
        alpha_cr,
        growth_a: a_r,
        growth_b: b_r,
        residual,
    })
}

/// Envelope-normalized growth coefficient at ν_cr for Cauchy data f0:
/// period-average of W{φ,ψ₊}/W{ψ₋,ψ₊} · exp(-β_cr x^{1-γ}/(1-γ)).
pub fn growth_mode(
    problem: &WvNProblem,
    _bs: &BandStructure,
    crit: &CriticalPoint,
    bloch_at_nu: &BlochData,
    f0: [f64; 2],
    cfg: &PipelineConfig,
) -> Result<Complex64> {
    let nu = crit.nu;
    let beta = crit.beta_cr;
    let gamma = problem.gamma;
    let envelope = beta / (1.0 - gamma);
    let wave = BlochWave::new(&problem.bg, bloch_at_nu);
    let denom = -bloch_at_nu.wronskian;
    let x_max = 1e5f64.min(cfg.x_max_cap);
    let window_start = WINDOW_FRACTION * x_max;
    let a = problem.bg.period();
    let dx = (a / 16.0).max((x_max - window_start) / 200_000.0);

    let y0 = series_start(problem, nu, f0);
    let mut samples: Vec<(f64, Complex64)> = Vec::new();
    let mut last_kept = f64::NEG_INFINITY;
    let mut field = |x: f64, y: &[f64; 2]| {
        let v = problem.potential(x) - nu;
        [y[1], v * y[0]]
    };
    let opt = OdeOptions {
        rtol: cfg.ode_tol,
        max_step: phi_max_step(problem, nu),
        rescale_threshold: Some(1e100),
        deadline: Some(Instant::now() + Duration::from_secs_f64(cfg.time_per_sample)),
        ..Default::default()
    };
    integrate_observed(
        &mut field,
        (X_START, x_max),
        y0,
        &opt,
        &mut |x, y: &[f64; 2], log_scale| {
            if x >= window_start && x - last_kept >= dx {
                let (psi, dpsi) = wave.eval(x);
                let k = (psi * y[1] - dpsi * y[0]) / denom;
                let damp = (log_scale - envelope * x.powf(1.0 - gamma)).exp();
                samples.push((x, k * damp));
                last_kept = x;
            }
        },
    )?;
    let est = tail_limit(&samples, a, 1.0 - 2.0 * gamma)?;
    Ok(est.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Above,
    Below,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Above => write!(f, "above"),
            Side::Below => write!(f, "below"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScanSample {
    pub side: Side,
    pub offset: f64,
    pub lambda: f64,
    pub a_alpha: Complex64,
    pub rho_prime: f64,
    pub tail_error: f64,
    pub x_max_used: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct PseudogapFit {
    pub side: Side,
    /// (|λ-ν|, ln ρ') of the converged points entering the fit.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub slope_target: f64,
    pub rel_dev: f64,
    pub slope_stderr: f64,
}

/// The sin² law probed at ±offset around ν_cr over α = α_cr + kπ/8.
#[derive(Debug, Clone)]
pub struct Sin2Report {
    pub offset: f64,
    pub alpha_cr_used: f64,
    pub alphas: Vec<f64>,
    pub rho_above: Vec<f64>,
    pub rho_below: Vec<f64>,
    /// ρ'·sin²(α-α_cr) per side and their two-sided means.
    pub products_above: Vec<f64>,
    pub products_below: Vec<f64>,
    pub products_mean: Vec<f64>,
    pub spread_above: f64,
    pub spread_below: f64,
    pub spread_mean: f64,
    pub minimizer_above: f64,
    pub minimizer_below: f64,
    /// Average of the two per-side sin²-fit minimizers; odd-in-offset drift
    /// of the law's center cancels here.
    pub minimizer_joint: f64,
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub samples: Vec<ScanSample>,
    pub fit_above: PseudogapFit,
    pub fit_below: PseudogapFit,
    pub sin2: Sin2Report,
    pub alpha_cr: AlphaCrEstimate,
}

fn spread(values: &[f64]) -> f64 {
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
        sum += v;
    }
    (hi - lo) / (sum / values.len() as f64)
}

fn sin2_minimizer(alphas_rel: &[f64], rhos: &[f64], window: f64) -> f64 {
    let mut best = 0.0;
    let mut best_v = f64::INFINITY;
    let n = 600;
    for i in 0..=n {
        let shift = -window + 2.0 * window * i as f64 / n as f64;
        let prods: Vec<f64> = alphas_rel
            .iter()
            .zip(rhos)
            .map(|(&a, &r)| r * (a - shift).sin().powi(2))
            .collect();
        let v = spread(&prods);
        if v < best_v {
            best_v = v;
            best = shift;
        }
    }
    best
}

fn ols_slope(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Least-squares slope with a jackknife standard error. The residuals of
/// these fits are dominated by the smooth higher-order corrections of the
/// asymptotic law, not by sampling noise, so drop-one resampling is the
/// honest measure of how strongly the slope depends on the offset window.
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let (slope, intercept) = ols_slope(points);
    let n = points.len();
    if n <= 2 {
        return (slope, intercept, f64::INFINITY);
    }
    let mut jack = Vec::with_capacity(n);
    for skip in 0..n {
        let sub: Vec<(f64, f64)> = points
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, &p)| p)
            .collect();
        jack.push(ols_slope(&sub).0);
    }
    let jm = jack.iter().sum::<f64>() / n as f64;
    let var = jack.iter().map(|s| (s - jm) * (s - jm)).sum::<f64>() * (n - 1) as f64 / n as f64;
    (slope, intercept, var.sqrt())
}

fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Geometric scan of ρ' on both sides of ν_cr, the ln ρ' fit against
/// |λ-ν|^{-(1-γ)/γ}, and the sin²-law report at the largest offset.
///
/// Unconverged samples are excluded from the fits and flagged; a fit with
/// fewer than 5 converged points is refused.
pub fn pseudogap_scan(
    problem: &WvNProblem,
    bs: &BandStructure,
    crit: &CriticalPoint,
    offsets: &[f64],
    slope_target: f64,
    cfg: &PipelineConfig,
) -> Result<ScanResult> {
    for &d in offsets {
        if !(d > 0.0) {
            return Err(Error::Validation("offsets must be positive".into()));
        }
        if d > crit.guard_above || d > crit.guard_below {
            return Err(Error::Validation(format!(
                "offset {d:.3e} leaves the admissible neighborhood \
                 (guards {:.3e} below / {:.3e} above)",
                crit.guard_below, crit.guard_above
            )));
        }
    }
    let alpha_est = estimate_alpha_cr(problem, bs, crit, cfg)?;
    if circle_distance(problem.alpha, alpha_est.alpha_cr) < 0.1 {
        return Err(Error::Validation(format!(
            "alpha = {:.4} is within 0.1 rad of alpha_cr = {:.4}",
            problem.alpha, alpha_est.alpha_cr
        )));
    }

    let mut tasks: Vec<(Side, f64)> = Vec::new();
    for &d in offsets {
        tasks.push((Side::Above, d));
        tasks.push((Side::Below, d));
    }
    let mut samples: Vec<ScanSample> = tasks
        .par_iter()
        .map(|&(side, offset)| {
            let lambda = match side {
                Side::Above => crit.nu + offset,
                Side::Below => crit.nu - offset,
            };
            match spectral_density(problem, bs, crit, lambda, None, cfg) {
                Ok(s) => ScanSample {
                    side,
                    offset,
                    lambda,
                    a_alpha: s.a_alpha,
                    rho_prime: s.rho_prime,
                    tail_error: s.tail_error,
                    x_max_used: s.x_max_used,
                    converged: true,
                },
                Err(_) => ScanSample {
                    side,
                    offset,
                    lambda,
                    a_alpha: Complex64::new(f64::NAN, f64::NAN),
                    rho_prime: f64::NAN,
                    tail_error: f64::NAN,
                    x_max_used: f64::NAN,
                    converged: false,
                },
            }
        })
        .collect();
    samples.sort_by(|a, b| {
        (a.side as u8, a.offset)
            .partial_cmp(&(b.side as u8, b.offset))
            .unwrap()
    });

    let gamma = problem.gamma;
    let expo = -(1.0 - gamma) / gamma;
    let make_fit = |side: Side| -> Result<PseudogapFit> {
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .filter(|s| s.side == side && s.converged)
            .map(|s| (s.offset, s.rho_prime.ln()))
            .collect();
        if pts.len() < 5 {
            return Err(Error::InsufficientData(format!(
                "{} side has {} converged samples, need 5",
                side,
                pts.len()
            )));
        }
        let fit_pts: Vec<(f64, f64)> = pts.iter().map(|p| (p.0.powf(expo), p.1)).collect();
        let (slope, _, stderr) = linear_fit(&fit_pts);
        Ok(PseudogapFit {
            side,
            points: pts,
            slope,
            slope_target,
            rel_dev: (slope - slope_target).abs() / slope_target.abs(),
            slope_stderr: stderr,
        })
    };
    let fit_above = make_fit(Side::Above)?;
    let fit_below = make_fit(Side::Below)?;

    let largest = offsets.iter().cloned().fold(f64::MIN, f64::max);
    let sin2 = sin2_law_report(problem, bs, crit, &alpha_est, largest, cfg)?;

    Ok(ScanResult {
        samples,
        fit_above,
        fit_below,
        sin2,
        alpha_cr: alpha_est,
    })
}

/// ρ'_α·sin²(α-α_cr) over α = α_cr + kπ/8 (k = 1..7) at λ = ν ± offset.
pub fn sin2_law_report(
    problem: &WvNProblem,
    bs: &BandStructure,
    crit: &CriticalPoint,
    alpha_est: &AlphaCrEstimate,
    offset: f64,
    cfg: &PipelineConfig,
) -> Result<Sin2Report> {
    let a0 = alpha_est.alpha_cr;
    let alphas: Vec<f64> = (1..=7).map(|k| (a0 + k as f64 * PI / 8.0).rem_euclid(PI)).collect();
    let rho_of = |lambda: f64| -> Result<Vec<f64>> {
        let rhos: Vec<Result<f64>> = alphas
            .par_iter()
            .map(|&al| {
                spectral_density_with_alpha(problem, al, bs, crit, lambda, None, cfg)
                    .map(|s| s.rho_prime)
            })
            .collect();
        rhos.into_iter().collect()
    };
    let rho_above = rho_of(crit.nu + offset)?;
    let rho_below = rho_of(crit.nu - offset)?;

    let rel: Vec<f64> = alphas.iter().map(|&a| a - a0).collect();
    let prod = |rhos: &[f64]| -> Vec<f64> {
        rel.iter()
            .zip(rhos)
            .map(|(&a, &r)| r * a.sin().powi(2))
            .collect()
    };
    let products_above = prod(&rho_above);
    let products_below = prod(&rho_below);
    let products_mean: Vec<f64> = products_above
        .iter()
        .zip(&products_below)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();

    let m_above = a0 + sin2_minimizer(&rel, &rho_above, 0.3);
    let m_below = a0 + sin2_minimizer(&rel, &rho_below, 0.3);

    Ok(Sin2Report {
        offset,
        alpha_cr_used: a0,
        alphas,
        spread_above: spread(&products_above),
        spread_below: spread(&products_below),
        spread_mean: spread(&products_mean),
        rho_above,
        rho_below,
        products_above,
        products_below,
        products_mean,
        minimizer_above: m_above,
        minimizer_below: m_below,
        minimizer_joint: 0.5 * (m_above + m_below),
    })
}
