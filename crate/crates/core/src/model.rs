//! The reduced 2×2 model system
//!
//! ```text
//! u'(x) = (β/x^γ) [[cos ε₀x, sin ε₀x], [sin ε₀x, -cos ε₀x]] u + R(x, ε₀) u
//! ```
//!
//! with a summable remainder R. For ε₀ ≠ 0 every solution has a finite
//! nonzero limit at x = +∞; as ε₀ → 0 the limit norm grows like
//! exp(E(β,γ)/ε) with ε = |ε₀|^{(1-γ)/γ}. The turning-point geometry of the
//! scaled system (regions, the z variable, the Airy matrix solution and the
//! II→IV connection matrix) lives here as well.

use crate::asymptotic::{c_mp, exponent_coefficient};
use crate::error::{Error, Result};
use crate::numkit::ode::{integrate_observed, OdeOptions};
use crate::numkit::special::airy_pair;
use crate::numkit::tail::tail_limit;
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

/// Matrix remainder with its declared envelope r(x) = c_r/(1+x)^{1+α_r}.
#[derive(Clone)]
pub struct Remainder {
    pub func: Arc<dyn Fn(f64, f64) -> [[f64; 2]; 2] + Send + Sync>,
    pub c_r: f64,
    pub alpha_r: f64,
}

#[derive(Clone)]
pub struct ModelSpec {
    pub beta: f64,
    pub gamma: f64,
    pub remainder: Option<Remainder>,
    pub f0: [Complex64; 2],
}

impl ModelSpec {
    pub fn bare(beta: f64, gamma: f64, f0: [Complex64; 2]) -> Self {
        ModelSpec {
            beta,
            gamma,
            remainder: None,
            f0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::Validation("beta must be positive".into()));
        }
        if !(self.gamma > 0.5 && self.gamma < 1.0) {
            return Err(Error::Validation("gamma must lie in (1/2, 1)".into()));
        }
        if let Some(r) = &self.remainder {
            for i in 0..=40 {
                let x = 0.25 * i as f64;
                let m = (r.func)(x, 0.0);
                let norm = spectral_norm_2x2(&m);
                let bound = r.c_r / (1.0 + x).powf(1.0 + r.alpha_r);
                if norm > bound * (1.0 + 1e-9) {
                    return Err(Error::Validation(format!(
                        "remainder envelope violated at x = {x}: {norm:.3e} > {bound:.3e}"
                    )));
                }
                // Continuity at eps0 = 0.
                let mp = (r.func)(x, 1e-6);
                let mm = (r.func)(x, -1e-6);
                let jump = m
                    .iter()
                    .flatten()
                    .zip(mp.iter().flatten().zip(mm.iter().flatten()))
                    .map(|(a, (b, c))| (a - b).abs().max((a - c).abs()))
                    .fold(0.0f64, f64::max);
                if jump > 1e-3 * (norm + 1.0) {
                    return Err(Error::Validation(format!(
                        "remainder discontinuous in eps0 at x = {x}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn envelope_exponent(&self) -> f64 {
        self.beta / (1.0 - self.gamma)
    }

    /// η(x) = β x^{1-γ}/(1-γ): the WKB envelope exponent at criticality.
    pub fn eta(&self, x: f64) -> f64 {
        self.envelope_exponent() * x.powf(1.0 - self.gamma)
    }
}

const X_START: f64 = 1e-6;

fn spectral_norm_2x2(m: &[[f64; 2]; 2]) -> f64 {
    let q = m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    (0.5 * (q + (q * q - 4.0 * det * det).max(0.0).sqrt())).sqrt()
}

/// Outcome of a model run.
pub enum ModelOutcome {
    /// ε₀ ≠ 0: the vector limit of u at +∞ with its scale bookkeeping.
    Limit(ModelLimit),
    /// ε₀ = 0: the coefficient of the exp(+η) growth mode along e₊.
    GrowthMode { phi: Complex64, error_bar: f64 },
}

pub struct ModelLimit {
    /// Componentwise limit estimate. The components converge only like
    /// x^{1-2γ} (a slow residual rotation at constant norm), so this carries
    /// a correspondingly wide error bar.
    pub value: [Complex64; 2],
    /// Rotation-invariant limit of ‖u‖, which converges fast; this is the
    /// quantity entering the growth-law ratios.
    pub norm_est: f64,
    pub log_scale: f64,
    pub error_bar: f64,
    pub norm_error_bar: f64,
    /// Decimated tail samples (x, u₁, u₂) in the stored scale.
    pub samples: Vec<(f64, Complex64, Complex64)>,
}

impl ModelLimit {
    pub fn log_norm(&self) -> f64 {
        self.norm_est.ln() + self.log_scale
    }

    pub fn norm(&self) -> f64 {
        self.log_norm().exp()
    }
}

/// Integrate the model system from the exact small-x diagonal start.
///
/// For ε₀ ≠ 0 the tail of u is period-averaged (carrier period 2π/|ε₀|)
/// and Richardson-corrected with drift exponent 1-2γ. For ε₀ = 0 the
/// growth-mode coefficient is extracted from the bounded variable
/// v = u e^{-η}.
pub fn solve_model(spec: &ModelSpec, eps0: f64, x_max: f64) -> Result<ModelOutcome> {
    spec.validate()?;
    if eps0 == 0.0 {
        let (phi, err) = growth_coefficient(spec, x_max)?;
        return Ok(ModelOutcome::GrowthMode {
            phi,
            error_bar: err,
        });
    }
    let floor = 10.0 * eps0.abs().powf(-1.0 / spec.gamma);
    if x_max < floor {
        return Err(Error::Validation(format!(
            "x_max = {x_max:.3e} below the transition-region floor {floor:.3e}"
        )));
    }

    let beta = spec.beta;
    let gamma = spec.gamma;
    let remainder = spec.remainder.clone();
    let mut field = move |x: f64, y: &[f64; 4]| {
        let b = beta * x.powf(-gamma);
        let (se, ce) = (eps0 * x).sin_cos();
        let (a11, a12) = (b * ce, b * se);
        // u' = [[a11, a12],[a12, -a11]] u (+ R u), componentwise on re/im.
        let mut d = [
            a11 * y[0] + a12 * y[2],
            a11 * y[1] + a12 * y[3],
            a12 * y[0] - a11 * y[2],
            a12 * y[1] - a11 * y[3],
        ];
        if let Some(r) = &remainder {
            let m = (r.func)(x, eps0);
            d[0] += m[0][0] * y[0] + m[0][1] * y[2];
            d[1] += m[0][0] * y[1] + m[0][1] * y[3];
            d[2] += m[1][0] * y[0] + m[1][1] * y[2];
            d[3] += m[1][0] * y[1] + m[1][1] * y[3];
        }
        d
    };

    let eta0 = spec.eta(X_START);
    let f = spec.f0;
    let y0 = [
        (f[0] * eta0.exp()).re,
        (f[0] * eta0.exp()).im,
        (f[1] * (-eta0).exp()).re,
        (f[1] * (-eta0).exp()).im,
    ];

    let period = 2.0 * PI / eps0.abs();
    let window_start = 0.5 * x_max;
    let dx = (period / 64.0).max((x_max - window_start) / 200_000.0);
    let opt = OdeOptions {
        rtol: 1e-10,
        max_step: period / 20.0,
        rescale_threshold: Some(1e100),
        ..Default::default()
    };

    let mut samples: Vec<(f64, Complex64, Complex64)> = Vec::new();
    let mut sample_scales: Vec<f64> = Vec::new();
    let mut last_kept = f64::NEG_INFINITY;
    let (_, final_scale) = integrate_observed(
        &mut field,
        (X_START, x_max),
        y0,
        &opt,
        &mut |x, y: &[f64; 4], log_scale| {
            if x >= window_start && x - last_kept >= dx {
                samples.push((
                    x,
                    Complex64::new(y[0], y[1]),
                    Complex64::new(y[2], y[3]),
                ));
                sample_scales.push(log_scale);
                last_kept = x;
            }
        },
    )?;

    // The growth phase ends well before the averaging window; a rescale
    // inside the window would make the samples inconsistent.
    if sample_scales
        .iter()
        .any(|&s| (s - final_scale).abs() > 0.0)
    {
        return Err(Error::TailUnconverged {
            detail: "state rescaled inside the averaging window".into(),
        });
    }

    let s1: Vec<(f64, Complex64)> = samples.iter().map(|s| (s.0, s.1)).collect();
    let s2: Vec<(f64, Complex64)> = samples.iter().map(|s| (s.0, s.2)).collect();
    let drift = 1.0 - 2.0 * gamma;
    let l1 = tail_limit(&s1, period, drift)?;
    let l2 = tail_limit(&s2, period, drift)?;
    // The norm is free of the slow residual rotation; its post-averaging
    // drift is the x^{-2γ} relaxation.
    let sn: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| (s.0, (s.1.norm_sqr() + s.2.norm_sqr()).sqrt()))
        .collect();
    let ln = crate::numkit::tail::tail_limit_real(&sn, period, -2.0 * gamma)?;

    Ok(ModelOutcome::Limit(ModelLimit {
        value: [l1.value, l2.value],
        norm_est: ln.value_real(),
        log_scale: final_scale,
        error_bar: (l1.error_bar * l1.error_bar + l2.error_bar * l2.error_bar).sqrt(),
        norm_error_bar: ln.error_bar,
        samples,
    }))
}

/// Growth-mode coefficient at ε₀ = 0 through the bounded variable
/// v = u e^{-η}, which satisfies v' = (diag(0, -2β/x^γ) + R) v → Φ(f) e₊.
fn growth_coefficient(spec: &ModelSpec, x_max: f64) -> Result<(Complex64, f64)> {
    let beta = spec.beta;
    let gamma = spec.gamma;
    let remainder = spec.remainder.clone();
    let mut field = move |x: f64, y: &[f64; 4]| {
        let two_b = 2.0 * beta * x.powf(-gamma);
        let mut d = [0.0, 0.0, -two_b * y[2], -two_b * y[3]];
        if let Some(r) = &remainder {
            let m = (r.func)(x, 0.0);
            d[0] += m[0][0] * y[0] + m[0][1] * y[2];
            d[1] += m[0][0] * y[1] + m[0][1] * y[3];
            d[2] += m[1][0] * y[0] + m[1][1] * y[2];
            d[3] += m[1][0] * y[1] + m[1][1] * y[3];
        }
        d
    };
    let eta0 = spec.eta(X_START);
    let f = spec.f0;
    let y0 = [
        f[0].re,
        f[0].im,
        (f[1] * (-2.0 * eta0).exp()).re,
        (f[1] * (-2.0 * eta0).exp()).im,
    ];
    let window_start = 0.5 * x_max;
    let mut samples: Vec<(f64, Complex64)> = Vec::new();
    let dx = (x_max - window_start) / 20_000.0;
    let mut last_kept = f64::NEG_INFINITY;
    let opt = OdeOptions {
        rtol: 1e-11,
        // Keep the accepted steps dense enough to feed the window averages.
        max_step: (x_max - window_start) / 2048.0,
        ..Default::default()
    };
    integrate_observed(
        &mut field,
        (X_START, x_max),
        y0,
        &opt,
        &mut |x, y: &[f64; 4], _| {
            if x >= window_start && x - last_kept >= dx {
                samples.push((x, Complex64::new(y[0], y[1])));
                last_kept = x;
            }
        },
    )?;
    let pseudo_period = (x_max - window_start) / 64.0;
    let est = tail_limit(&samples, pseudo_period, 1.0 - 2.0 * gamma)?;
    Ok((est.value, est.error_bar))
}

/// Both routes to the growth functional Φ and the decaying direction f₋.
pub struct PhiReport {
    pub phi_growth: Complex64,
    pub phi_integral: Complex64,
    pub f_minus: [Complex64; 2],
    pub rel_disagreement: f64,
}

/// Φ(f) via (1) envelope-normalized growth extraction and (2) the integral
/// formula Φ(f) = ⟨f + ∫₀^∞ e^{-η} R u dx, e₊⟩; f₋ by backward integration
/// from a large-x e₋ seed.
pub fn phi_functional(spec: &ModelSpec) -> Result<PhiReport> {
    spec.validate()?;
    let x_max = 2e4;
    let (phi_growth, _) = growth_coefficient(spec, x_max)?;

    // Route 2, augmented on the bounded v-system: I' = (R v)₁.
    let beta = spec.beta;
    let gamma = spec.gamma;
    let remainder = spec.remainder.clone();
    let mut field = move |x: f64, y: &[f64; 6]| {
        let two_b = 2.0 * beta * x.powf(-gamma);
        let mut d = [0.0, 0.0, -two_b * y[2], -two_b * y[3], 0.0, 0.0];
        if let Some(r) = &remainder {
            let m = (r.func)(x, 0.0);
            d[0] += m[0][0] * y[0] + m[0][1] * y[2];
            d[1] += m[0][0] * y[1] + m[0][1] * y[3];
            d[2] += m[1][0] * y[0] + m[1][1] * y[2];
            d[3] += m[1][0] * y[1] + m[1][1] * y[3];
            d[4] = m[0][0] * y[0] + m[0][1] * y[2];
            d[5] = m[0][0] * y[1] + m[0][1] * y[3];
        }
        d
    };
    let eta0 = spec.eta(X_START);
    let f = spec.f0;
    let y0 = [
        f[0].re,
        f[0].im,
        (f[1] * (-2.0 * eta0).exp()).re,
        (f[1] * (-2.0 * eta0).exp()).im,
        0.0,
        0.0,
    ];
    let opt = OdeOptions {
        rtol: 1e-11,
        max_step: f64::INFINITY,
        ..Default::default()
    };
    let (y_end, _) = integrate_observed(&mut field, (X_START, x_max), y0, &opt, &mut |_, _, _| {})?;
    let phi_integral = f[0] + Complex64::new(y_end[4], y_end[5]);

    // f₋ through w = u e^{+η}: w' = (diag(2β/x^γ, 0) + R) w, backward from e₋.
    let beta2 = spec.beta;
    let gamma2 = spec.gamma;
    let remainder2 = spec.remainder.clone();
    let mut field_back = move |x: f64, y: &[f64; 4]| {
        let two_b = 2.0 * beta2 * x.powf(-gamma2);
        let mut d = [two_b * y[0], two_b * y[1], 0.0, 0.0];
        if let Some(r) = &remainder2 {
            let m = (r.func)(x, 0.0);
            d[0] += m[0][0] * y[0] + m[0][1] * y[2];
            d[1] += m[0][0] * y[1] + m[0][1] * y[3];
            d[2] += m[1][0] * y[0] + m[1][1] * y[2];
            d[3] += m[1][0] * y[1] + m[1][1] * y[3];
        }
        d
    };
    let x_b = 1e4;
    let (w0, _) = integrate_observed(
        &mut field_back,
        (x_b, X_START),
        [0.0, 0.0, 1.0, 0.0],
        &opt,
        &mut |_, _, _| {},
    )?;
    let mut f_minus = [Complex64::new(w0[0], w0[1]), Complex64::new(w0[2], w0[3])];
    // w(x_start) relates to u by diag(e^{-η0}, e^{+η0}) ≈ I at x_start;
    // normalize the direction.
    let n = (f_minus[0].norm_sqr() + f_minus[1].norm_sqr()).sqrt();
    f_minus[0] /= n;
    f_minus[1] /= n;

    let scale = phi_growth.norm().max(phi_integral.norm()).max(1e-300);
    let rel = (phi_growth - phi_integral).norm() / scale;
    if rel > 1e-3 {
        return Err(Error::RouteDisagreement(format!(
            "Phi routes: growth {phi_growth} vs integral {phi_integral} ({rel:.2e})"
        )));
    }
    Ok(PhiReport {
        phi_growth,
        phi_integral,
        f_minus,
        rel_disagreement: rel,
    })
}

/// Region boundaries of the scaled system for one value of ε.
#[derive(Debug, Clone, Copy)]
pub struct RegionSchedule {
    pub t0: f64,
    pub c0: f64,
    pub kappa: f64,
    pub t_i_ii: f64,
    pub z0: f64,
    pub z1: f64,
    pub z2: f64,
    pub t_ii_iii: f64,
    pub t_iii_iv: f64,
    pub t_iv_v: f64,
}

pub const DEFAULT_Z0: f64 = 6.0;

pub fn z_map(beta: f64, gamma: f64, t: f64, eps: f64) -> f64 {
    (1.0 - t.powf(2.0 * gamma) / (4.0 * beta * beta)) / eps.powf(2.0 / 3.0)
}

pub fn z_unmap(beta: f64, gamma: f64, z: f64, eps: f64) -> f64 {
    let t0 = (2.0 * beta).powf(1.0 / gamma);
    t0 * (1.0 - eps.powf(2.0 / 3.0) * z).powf(1.0 / (2.0 * gamma))
}

pub fn region_schedule(beta: f64, gamma: f64, eps: f64, z0: f64) -> Result<RegionSchedule> {
    let t0 = (2.0 * beta).powf(1.0 / gamma);
    let c0 = t0 / (4.0 * gamma);
    let kappa = 1.5 - 1.0 / (2.0 * gamma);
    let t_i_ii = t0 * (0.8f64).powf(1.0 / (2.0 * gamma));
    let z1 = eps.powf(-0.2);
    let z2 = (1.0 - t_i_ii.powf(2.0 * gamma) / (4.0 * beta * beta)) / eps.powf(2.0 / 3.0);
    let e23 = eps.powf(2.0 / 3.0);
    if e23 * z0 >= 1.0 {
        return Err(Error::ScheduleOrdering(format!(
            "eps^(2/3) z0 = {:.3} >= 1",
            e23 * z0
        )));
    }
    let t_ii_iii = t0 * (1.0 - e23 * z0).powf(1.0 / (2.0 * gamma));
    let t_iii_iv = t0 * (1.0 + e23 * z0).powf(1.0 / (2.0 * gamma));
    let t_iv_v = (8.0 * beta * beta - t_i_ii.powf(2.0 * gamma)).powf(1.0 / (2.0 * gamma));
    let s = RegionSchedule {
        t0,
        c0,
        kappa,
        t_i_ii,
        z0,
        z1,
        z2,
        t_ii_iii,
        t_iii_iv,
        t_iv_v,
    };
    if !(z0 < s.z1 && s.z1 < s.z2) {
        return Err(Error::ScheduleOrdering(format!(
            "need z0 < z1 < z2, got {z0} / {} / {}",
            s.z1, s.z2
        )));
    }
    if !(s.t_i_ii < s.t_ii_iii && s.t_ii_iii < t0 && t0 < s.t_iii_iv && s.t_iii_iv < s.t_iv_v) {
        return Err(Error::ScheduleOrdering(format!(
            "t ordering violated: {} {} {} {} {}",
            s.t_i_ii, s.t_ii_iii, t0, s.t_iii_iv, s.t_iv_v
        )));
    }
    Ok(s)
}

/// Matrix solution of v' = c₀ [[0,1],[z,0]] v in terms of Airy functions.
pub fn airy_matrix_solution(z: f64, c0: f64) -> Result<[[f64; 2]; 2]> {
    let w = c0.powf(2.0 / 3.0) * z;
    let (ai, bi, aip, bip) = airy_pair(w)?;
    let c13 = c0.powf(-1.0 / 3.0);
    Ok([[ai, bi], [c13 * aip, c13 * bip]])
}

/// Diagnostic report of the II→IV connection across the turning point.
#[derive(Debug, Clone)]
pub struct ConnectionReport {
    pub eps: f64,
    pub d_matrix: [[Complex64; 2]; 2],
    pub col1_target_dev: f64,
    pub det_dev: f64,
}

fn t_ii_matrix(beta: f64, gamma: f64, t: f64) -> [[f64; 2]; 2] {
    let tg = t.powf(gamma);
    let s = (1.0 - tg * tg / (4.0 * beta * beta)).max(0.0).sqrt();
    [
        [1.0, 1.0],
        [
            tg / (2.0 * beta * (1.0 + s)),
            tg / (2.0 * beta * (1.0 - s)),
        ],
    ]
}

fn t_iv_matrix(beta: f64, gamma: f64, t: f64) -> [[Complex64; 2]; 2] {
    let bb = 2.0 * beta / t.powf(gamma);
    let w = (1.0 - bb * bb).max(0.0).sqrt();
    [
        [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
        [Complex64::new(bb, w), Complex64::new(bb, -w)],
    ]
}

/// Integrate the ε-scaled system across [t_II-III, t_III-IV] in the z
/// variable with R ≡ 0, seeding the region-II basis at z = +Z₀ and the
/// region-IV basis at z = -Z₀ from their large-|z| WKB forms
/// exp(∓(2c₀/3)z^{3/2})/z^{1/4} (and the oscillatory analogue). Reports the
/// deviation of the first column of D from (i/√2, -i/√2) and of |det D|
/// from 1/2.
pub fn connection_matrix(beta: f64, gamma: f64, eps: f64, z0: f64) -> Result<ConnectionReport> {
    if !(beta > 0.0 && gamma > 0.5 && gamma < 1.0 && eps > 0.0) {
        return Err(Error::Validation("connection_matrix parameter ranges".into()));
    }
    let t0 = (2.0 * beta).powf(1.0 / gamma);
    let c0 = t0 / (4.0 * gamma);
    let e13 = eps.powf(1.0 / 3.0);
    let e23 = eps.powf(2.0 / 3.0);
    if e23 * z0 > 0.8 {
        return Err(Error::ScheduleOrdering(format!(
            "z interval invalid: eps^(2/3) z0 = {:.3} > 0.8",
            e23 * z0
        )));
    }

    let t_of_z = |z: f64| t0 * (1.0 - e23 * z).powf(1.0 / (2.0 * gamma));
    let mut field = |z: f64, y: &[f64; 4]| {
        let t = t_of_z(z);
        let b = beta / t.powf(gamma);
        let fac = -(t0 / (2.0 * gamma * e13)) * (1.0 - e23 * z).powf(1.0 / (2.0 * gamma) - 1.0);
        [
            fac * (b * y[0] - 0.5 * y[2]),
            fac * (b * y[1] - 0.5 * y[3]),
            fac * (0.5 * y[0] - b * y[2]),
            fac * (0.5 * y[1] - b * y[3]),
        ]
    };

    let theta = 2.0 * c0 / 3.0 * z0.powf(1.5);
    let q4 = z0.powf(0.25);
    let t_plus = t_of_z(z0);
    let t_minus = t_of_z(-z0);
    let tii = t_ii_matrix(beta, gamma, t_plus);

    let opt = OdeOptions {
        rtol: 1e-11,
        max_step: 0.05,
        ..Default::default()
    };
    let mut cols: Vec<[Complex64; 2]> = Vec::new();
    for (amp, col) in [((-theta).exp(), 0usize), (theta.exp(), 1usize)] {
        let seed = [amp / q4 * tii[0][col], amp / q4 * tii[1][col]];
        let y0 = [seed[0], 0.0, seed[1], 0.0];
        let (y, _) = integrate_observed(&mut field, (z0, -z0), y0, &opt, &mut |_, _, _| {})?;
        cols.push([Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])]);
    }

    let tiv = t_iv_matrix(beta, gamma, t_minus);
    let ph = Complex64::from_polar(1.0 / q4, -theta);
    let b_iv = [
        [tiv[0][0] * ph, tiv[0][1] * ph.conj()],
        [tiv[1][0] * ph, tiv[1][1] * ph.conj()],
    ];

    // D = B_IV^{-1} [u_II+ | u_II-] at z = -Z0.
    let det_biv = b_iv[0][0] * b_iv[1][1] - b_iv[0][1] * b_iv[1][0];
    if det_biv.norm() < 1e-300 {
        return Err(Error::Validation("region-IV basis is singular".into()));
    }
    let inv = [
        [b_iv[1][1] / det_biv, -b_iv[0][1] / det_biv],
        [-b_iv[1][0] / det_biv, b_iv[0][0] / det_biv],
    ];
    let mut d = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (c, colv) in cols.iter().enumerate() {
        d[0][c] = inv[0][0] * colv[0] + inv[0][1] * colv[1];
        d[1][c] = inv[1][0] * colv[0] + inv[1][1] * colv[1];
    }

    let target = [
        Complex64::new(0.0, FRAC_1_SQRT_2),
        Complex64::new(0.0, -FRAC_1_SQRT_2),
    ];
    let col1_target_dev =
        ((d[0][0] - target[0]).norm_sqr() + (d[1][0] - target[1]).norm_sqr()).sqrt();
    let det = d[0][0] * d[1][1] - d[0][1] * d[1][0];
    let det_dev = (det.norm() - 0.5).abs();

    Ok(ConnectionReport {
        eps,
        d_matrix: d,
        col1_target_dev,
        det_dev,
    })
}

/// One row of the Theorem-4.2-style verification table.
#[derive(Debug, Clone, Copy)]
pub struct Theorem42Row {
    pub eps0: f64,
    pub eps: f64,
    pub log_limit_norm: f64,
    pub ratio: f64,
    pub target: f64,
    pub error_bar: f64,
}

/// For each ε₀ (both signs when asked) compute
/// ratio(ε₀) = lim‖u‖ · exp(-E(β,γ)/ε), ε = |ε₀|^{(1-γ)/γ}, and its target
/// C_mp·|Φ(f)| from the closed-form modules.
pub fn verify_theorem42(
    spec: &ModelSpec,
    eps0_list: &[f64],
    both_signs: bool,
) -> Result<Vec<Theorem42Row>> {
    spec.validate()?;
    let e_coeff = exponent_coefficient(spec.beta, spec.gamma)?.value;
    let cmp = c_mp(spec.beta, spec.gamma)?.c_mp;
    let phi = phi_functional(spec)?;
    let target = cmp * phi.phi_integral.norm();

    let mut rows = Vec::new();
    for &e0 in eps0_list {
        let signs: &[f64] = if both_signs { &[1.0, -1.0] } else { &[1.0] };
        for &s in signs {
            let eps0 = s * e0.abs();
            let eps = eps0.abs().powf((1.0 - spec.gamma) / spec.gamma);
            let x_max = (10.0 * eps0.abs().powf(-1.0 / spec.gamma)).max(1e5);
            let out = solve_model(spec, eps0, x_max)?;
            let lim = match out {
                ModelOutcome::Limit(l) => l,
                ModelOutcome::GrowthMode { .. } => unreachable!("eps0 != 0"),
            };
            let log_norm = lim.log_norm();
            let ratio = (log_norm - e_coeff / eps).exp();
            let rel_err = lim.norm_error_bar / lim.norm_est.max(1e-300);
            rows.push(Theorem42Row {
                eps0,
                eps,
                log_limit_norm: log_norm,
                ratio,
                target,
                error_bar: ratio * rel_err,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e_plus() -> [Complex64; 2] {
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
    }

    fn e_minus() -> [Complex64; 2] {
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
    }

    #[test]
    fn decoupled_modes_are_exact_envelopes() {
        // R = 0, eps0 = 0: the two modes are exactly exp(±η).
        let spec = ModelSpec::bare(0.25, 0.6, e_plus());
        match solve_model(&spec, 0.0, 2e4).unwrap() {
            ModelOutcome::GrowthMode { phi, .. } => {
                assert_relative_eq!(phi.re, 1.0, max_relative = 1e-8);
                assert!(phi.im.abs() < 1e-10);
            }
            _ => panic!("expected growth mode"),
        }
        let spec_m = ModelSpec::bare(0.25, 0.6, e_minus());
        match solve_model(&spec_m, 0.0, 2e4).unwrap() {
            ModelOutcome::GrowthMode { phi, .. } => {
                assert!(phi.norm() < 1e-10, "decaying data leaks growth: {phi}");
            }
            _ => panic!("expected growth mode"),
        }
    }

    #[test]
    fn envelope_reproduced_pointwise() {
        // Integrate u' = (β/x^γ) diag(1,-1) u (the ε₀=0 system) and compare
        // to exp(±η) over [1, 100].
        let (beta, gamma) = (0.25, 0.6);
        let spec = ModelSpec::bare(beta, gamma, e_plus());
        let mut field = |x: f64, y: &[f64; 2]| {
            let b = beta * x.powf(-gamma);
            [b * y[0], -b * y[1]]
        };
        let eta1 = spec.eta(1.0);
        let traj = crate::numkit::ode::integrate_ivp(
            &mut field,
            (1.0, 100.0),
            [1.0, 1.0],
            1e-10,
            f64::INFINITY,
        )
        .unwrap();
        for (i, &x) in traj.abscissae.iter().enumerate() {
            let up = (spec.eta(x) - eta1).exp();
            let um = (-(spec.eta(x) - eta1)).exp();
            assert_relative_eq!(traj.states[i][0], up, max_relative = 1e-8);
            assert_relative_eq!(traj.states[i][1], um, max_relative = 1e-8);
        }
    }

    #[test]
    fn finite_limit_for_nonzero_eps0() {
        let spec = ModelSpec::bare(0.25, 0.6, e_plus());
        match solve_model(&spec, 0.1, 1e5).unwrap() {
            ModelOutcome::Limit(l) => {
                let norm = l.norm();
                assert!(norm.is_finite() && norm > 0.0);
                let rel = l.norm_error_bar / l.norm_est;
                assert!(rel < 0.01, "norm error bar {rel:.3} above 1%");
            }
            _ => panic!("expected a limit"),
        }
    }

    #[test]
    fn phi_routes_agree_with_coupling() {
        let r = Remainder {
            func: Arc::new(|x: f64, _| {
                let v = 0.1 / ((1.0 + x) * (1.0 + x));
                [[0.0, v], [v, 0.0]]
            }),
            c_r: 0.1,
            alpha_r: 1.0,
        };
        let spec = ModelSpec {
            beta: 0.25,
            gamma: 0.6,
            remainder: Some(r),
            f0: e_plus(),
        };
        let rep = phi_functional(&spec).unwrap();
        assert!(
            rep.rel_disagreement < 1e-4,
            "routes differ by {}",
            rep.rel_disagreement
        );
        // Phi(f_-) = 0 by construction of f_-.
        let spec_minus = ModelSpec {
            f0: rep.f_minus,
            ..spec.clone()
        };
        let rep2 = phi_functional(&spec_minus).unwrap();
        assert!(
            rep2.phi_integral.norm() < 2e-3,
            "Phi(f_-) = {}",
            rep2.phi_integral
        );
    }

    #[test]
    fn phi_is_linear() {
        let spec_p = ModelSpec::bare(0.3, 0.7, e_plus());
        let spec_m = ModelSpec::bare(0.3, 0.7, e_minus());
        let a = Complex64::new(0.7, 0.2);
        let b = Complex64::new(-0.4, 1.1);
        let spec_ab = ModelSpec::bare(0.3, 0.7, [a, b]);
        let pp = phi_functional(&spec_p).unwrap().phi_integral;
        let pm = phi_functional(&spec_m).unwrap().phi_integral;
        let pab = phi_functional(&spec_ab).unwrap().phi_integral;
        assert!(
            (pab - (a * pp + b * pm)).norm() < 1e-10,
            "linearity violated: {pab} vs {}",
            a * pp + b * pm
        );
    }

    #[test]
    fn region_schedule_free_constants() {
        // beta = 1/2 makes t0 = 1 for every gamma; gamma = 3/4 gives
        // kappa = 5/6 and c0 = t0/3.
        for g in [0.55, 0.6, 0.75, 0.9] {
            let s = region_schedule(0.5, g, 1e-4, DEFAULT_Z0).unwrap();
            assert_relative_eq!(s.t0, 1.0, epsilon = 1e-14);
        }
        let s = region_schedule(0.5, 0.75, 1e-4, DEFAULT_Z0).unwrap();
        assert_relative_eq!(s.kappa, 5.0 / 6.0, epsilon = 1e-14);
        assert_relative_eq!(s.c0, s.t0 / 3.0, epsilon = 1e-14);
        assert!(s.z0 < s.z1 && s.z1 < s.z2);
        assert!(s.t_i_ii < s.t_ii_iii && s.t_ii_iii < s.t0);
        assert!(s.t0 < s.t_iii_iv && s.t_iii_iv < s.t_iv_v);
        // z_map(t0) = 0 and the maps invert each other.
        assert_eq!(z_map(0.5, 0.75, s.t0, 1e-4), 0.0);
        let z = z_map(0.5, 0.75, 0.93, 1e-4);
        assert_relative_eq!(z_unmap(0.5, 0.75, z, 1e-4), 0.93, max_relative = 1e-12);
    }

    #[test]
    fn region_schedule_refuses_large_eps() {
        assert!(region_schedule(0.5, 0.75, 0.01, DEFAULT_Z0).is_err());
    }

    #[test]
    fn airy_matrix_determinant_and_residual() {
        let c0: f64 = 1.0 / 3.0;
        let expected = c0.powf(-1.0 / 3.0) / PI;
        for i in 0..=40 {
            let z = -6.0 + 12.0 * i as f64 / 40.0;
            let m = airy_matrix_solution(z, c0).unwrap();
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            assert!(
                (det - expected).abs() < 1e-8 * expected,
                "det {det} at z = {z}"
            );
        }
        // ODE residual of v' = c0 [[0,1],[z,0]] v by centered differences.
        let h = 1e-4;
        for i in 0..=24 {
            let z = -5.8 + 11.6 * i as f64 / 24.0;
            let mp = airy_matrix_solution(z + h, c0).unwrap();
            let mm = airy_matrix_solution(z - h, c0).unwrap();
            let m = airy_matrix_solution(z, c0).unwrap();
            for col in 0..2 {
                let d0 = (mp[0][col] - mm[0][col]) / (2.0 * h);
                let d1 = (mp[1][col] - mm[1][col]) / (2.0 * h);
                let r0 = d0 - c0 * m[1][col];
                let r1 = d1 - c0 * z * m[0][col];
                assert!(
                    r0.abs() < 1e-6 && r1.abs() < 1e-6,
                    "residual ({r0:.2e},{r1:.2e}) at z = {z}"
                );
            }
        }
    }

    #[test]
    fn connection_det_matches_liouville_formula() {
        // The z-system is traceless, so det D is exactly
        // i*sqrt((1+e^{2/3}Z0)/(1-e^{2/3}Z0)) for the WKB seeds.
        for &(beta, gamma, eps) in &[(0.5, 0.75, 0.01), (0.25, 0.6, 0.02), (0.5, 0.6, 0.005)] {
            let rep = connection_matrix(beta, gamma, eps, DEFAULT_Z0).unwrap();
            let det = rep.d_matrix[0][0] * rep.d_matrix[1][1]
                - rep.d_matrix[0][1] * rep.d_matrix[1][0];
            let e23z = eps.powf(2.0 / 3.0) * DEFAULT_Z0;
            let exact = ((1.0 + e23z) / (1.0 - e23z)).sqrt();
            assert!(
                (det.norm() - exact).abs() < 2e-4 * exact,
                "({beta},{gamma},{eps}): |det| = {} vs {exact}",
                det.norm()
            );
            assert!(det.re.abs() < 2e-2 * det.norm(), "det phase: {det}");
        }
    }

    #[test]
    fn connection_col1_converges_to_corrected_target() {
        // col1(D) -> (e^{i pi/4}, e^{-i pi/4}) as eps -> 0; the deviation
        // from the (i/sqrt2, -i/sqrt2) target decreases as well but floors
        // at 1 because of the constant offset between the two targets.
        let corrected = [
            Complex64::from_polar(1.0, PI / 4.0),
            Complex64::from_polar(1.0, -PI / 4.0),
        ];
        let mut prev = f64::INFINITY;
        for &eps in &[0.02, 0.01, 0.005, 0.0025] {
            let rep = connection_matrix(0.25, 0.6, eps, DEFAULT_Z0).unwrap();
            let dev = ((rep.d_matrix[0][0] - corrected[0]).norm_sqr()
                + (rep.d_matrix[1][0] - corrected[1]).norm_sqr())
            .sqrt();
            assert!(dev < prev * 1.05, "corrected-target dev not decreasing: {dev} vs {prev}");
            prev = dev;
        }
        assert!(prev < 0.25, "corrected-target deviation at eps=0.0025: {prev}");
    }

    #[test]
    fn connection_refused_when_interval_invalid() {
        assert!(connection_matrix(0.5, 0.75, 0.5, DEFAULT_Z0).is_err());
    }

    #[test]
    fn theorem42_ratio_behavior() {
        // The measured ratio tends to sqrt(2), monotonically from below, and
        // the two signs of eps0 agree; the decaying direction gives ratio→0.
        let spec = ModelSpec::bare(0.25, 0.6, e_plus());
        let rows = verify_theorem42(&spec, &[0.1, 0.05], true).unwrap();
        assert_eq!(rows.len(), 4);
        let r_plus: Vec<f64> = rows.iter().filter(|r| r.eps0 > 0.0).map(|r| r.ratio).collect();
        assert!(r_plus[1] > r_plus[0], "trend: {r_plus:?}");
        for pair in rows.chunks(2) {
            let (a, b) = (pair[0].ratio, pair[1].ratio);
            assert!(
                (a - b).abs() < 0.02 * a.max(b) + pair[0].error_bar + pair[1].error_bar,
                "sign asymmetry: {a} vs {b}"
            );
        }
        for r in &rows {
            assert!((r.ratio - 2f64.sqrt()).abs() < 0.12, "ratio {}", r.ratio);
            assert!((r.target - 0.5).abs() < 1e-5, "target {}", r.target);
        }
        let spec_minus = ModelSpec::bare(0.25, 0.6, e_minus());
        let rows_m = verify_theorem42(&spec_minus, &[0.05], false).unwrap();
        assert!(rows_m[0].ratio < 0.1, "f_- ratio {}", rows_m[0].ratio);
    }
}
