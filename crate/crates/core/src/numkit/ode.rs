//! Embedded Dormand–Prince 5(4) integrator with PI step control.
//!
//! States are fixed-size real vectors `[f64; N]`; complex systems are packed
//! as interleaved real/imaginary parts by the callers. The controller keeps
//! the per-step error below `rtol` relative to the state scale, and the step
//! size never exceeds `max_step` so that oscillatory coefficients cannot be
//! aliased away.

use crate::error::{Error, Result};

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;

// Dormand-Prince coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Accepted-step record of an integration.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub abscissae: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub terminal: [f64; N],
}

#[derive(Debug, Clone)]
pub struct OdeOptions {
    /// Relative tolerance of the embedded error estimate; must lie in (1e-14, 1e-2].
    pub rtol: f64,
    /// Hard cap on the step size (oscillation guard).
    pub max_step: f64,
    /// Renormalize the state to unit norm whenever its sup-norm exceeds this,
    /// accumulating the log of the discarded scale. `None` disables.
    pub rescale_threshold: Option<f64>,
    pub max_steps: usize,
    /// Abort with a budget error when the wall clock passes this instant.
    pub deadline: Option<std::time::Instant>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            max_step: f64::INFINITY,
            rescale_threshold: None,
            max_steps: 500_000_000,
            deadline: None,
        }
    }
}

fn sup_norm<const N: usize>(y: &[f64; N]) -> f64 {
    y.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Core loop. The observer sees every accepted step as `(x, state, log_scale)`;
/// when rescaling is off `log_scale` stays 0. Returns `(terminal, log_scale)`.
pub fn integrate_observed<const N: usize, F, O>(
    field: &mut F,
    span: (f64, f64),
    y0: [f64; N],
    opt: &OdeOptions,
    observer: &mut O,
) -> Result<([f64; N], f64)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N], f64),
{
    let (x0, x1) = span;
    assert!(x0 != x1, "degenerate span");
    assert!(
        opt.rtol > 1e-14 && opt.rtol <= 1e-2,
        "rtol out of the supported range"
    );
    let dir = (x1 - x0).signum();
    let mut x = x0;
    let mut y = y0;
    let mut log_scale = 0.0f64;

    if !all_finite(&y) {
        return Err(Error::NonFiniteState { x });
    }

    let mut k1 = field(x, &y);
    if !all_finite(&k1) {
        return Err(Error::NonFiniteState { x });
    }

    // Initial step guess from the field magnitude.
    let scale0 = sup_norm(&y).max(1e-8);
    let f0 = sup_norm(&k1).max(1e-8);
    let mut h = dir * (0.01 * scale0 / f0).min(opt.max_step).min(0.1 * (x1 - x0).abs());
    let mut facold = 1e-4f64;

    observer(x, &y, log_scale);

    let mut steps = 0usize;
    while (x - x1) * dir < 0.0 {
        steps += 1;
        if steps > opt.max_steps {
            return Err(Error::StepSizeUnderflow { x });
        }
        if steps & 1023 == 0 {
            if let Some(d) = opt.deadline {
                if std::time::Instant::now() > d {
                    return Err(Error::TimeBudget { x });
                }
            }
        }
        if h.abs() > opt.max_step {
            h = dir * opt.max_step;
        }
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        if h.abs() < 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { x });
        }

        let mut yt = [0.0; N];

        // Stage 2..6
        for i in 0..N {
            yt[i] = y[i] + h * A2[0] * k1[i];
        }
        let k2 = field(x + C[1] * h, &yt);
        for i in 0..N {
            yt[i] = y[i] + h * (A3[0] * k1[i] + A3[1] * k2[i]);
        }
        let k3 = field(x + C[2] * h, &yt);
        for i in 0..N {
            yt[i] = y[i] + h * (A4[0] * k1[i] + A4[1] * k2[i] + A4[2] * k3[i]);
        }
        let k4 = field(x + C[3] * h, &yt);
        for i in 0..N {
            yt[i] = y[i] + h * (A5[0] * k1[i] + A5[1] * k2[i] + A5[2] * k3[i] + A5[3] * k4[i]);
        }
        let k5 = field(x + C[4] * h, &yt);
        for i in 0..N {
            yt[i] = y[i]
                + h * (A6[0] * k1[i] + A6[1] * k2[i] + A6[2] * k3[i] + A6[3] * k4[i]
                    + A6[4] * k5[i]);
        }
        let k6 = field(x + C[5] * h, &yt);

        // 5th-order solution
        let mut y5 = [0.0; N];
        for i in 0..N {
            y5[i] = y[i]
                + h * (B[0] * k1[i] + B[2] * k3[i] + B[3] * k4[i] + B[4] * k5[i] + B[5] * k6[i]);
        }
        let k7 = field(x + h, &y5);

        if !all_finite(&y5) || !all_finite(&k7) {
            return Err(Error::NonFiniteState { x });
        }

        // Error estimate against the embedded 4th-order result.
        let ymax = sup_norm(&y).max(sup_norm(&y5));
        let mut err_sq = 0.0;
        for i in 0..N {
            let e = h
                * (E[0] * k1[i]
                    + E[2] * k3[i]
                    + E[3] * k4[i]
                    + E[4] * k5[i]
                    + E[5] * k6[i]
                    + E[6] * k7[i]);
            let sc = opt.rtol * (y[i].abs().max(y5[i].abs()).max(0.01 * ymax) + 1e-290);
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / N as f64).sqrt();

        if err <= 1.0 {
            // Accept.
            x += h;
            y = y5;
            k1 = k7;

            if let Some(thresh) = opt.rescale_threshold {
                let n = sup_norm(&y);
                if n > thresh {
                    for v in y.iter_mut() {
                        *v /= n;
                    }
                    for v in k1.iter_mut() {
                        *v /= n;
                    }
                    log_scale += n.ln();
                }
            }
            observer(x, &y, log_scale);

            let fac11 = err.powf(EXPO1);
            let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            h /= fac;
            facold = err.max(1e-4);
        } else {
            let fac11 = err.powf(EXPO1);
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
        }
    }
    Ok((y, log_scale))
}

/// Adaptive integration storing every accepted step.
pub fn integrate_ivp<const N: usize, F>(
    field: &mut F,
    span: (f64, f64),
    y0: [f64; N],
    rtol: f64,
    max_step: f64,
) -> Result<Trajectory<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let opt = OdeOptions {
        rtol,
        max_step,
        ..Default::default()
    };
    let mut abscissae = Vec::new();
    let mut states = Vec::new();
    let (terminal, _) = integrate_observed(
        field,
        span,
        y0,
        &opt,
        &mut |x, y: &[f64; N], _| {
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

/// Classical fixed-step RK4 over a uniform grid, returning all `n+1` nodes.
/// Used where uniform nodes are wanted for interpolation (one-period Bloch
/// trajectories); the adaptive routine is the general entry point.
pub fn rk4_uniform<const N: usize, F>(
    field: &mut F,
    span: (f64, f64),
    y0: [f64; N],
    n: usize,
) -> Vec<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let h = (span.1 - span.0) / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    let mut y = y0;
    out.push(y);
    let mut x = span.0;
    for _ in 0..n {
        let k1 = field(x, &y);
        let mut yt = [0.0; N];
        for i in 0..N {
            yt[i] = y[i] + 0.5 * h * k1[i];
        }
        let k2 = field(x + 0.5 * h, &yt);
        for i in 0..N {
            yt[i] = y[i] + 0.5 * h * k2[i];
        }
        let k3 = field(x + 0.5 * h, &yt);
        for i in 0..N {
            yt[i] = y[i] + h * k3[i];
        }
        let k4 = field(x + h, &yt);
        for i in 0..N {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        x += h;
        out.push(y);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::special::airy_pair;

    #[test]
    fn exponential_growth_matches_closed_form() {
        let tol = 1e-10;
        let traj = integrate_ivp(
            &mut |_, y: &[f64; 1]| [y[0]],
            (0.0, 1.0),
            [1.0],
            tol,
            f64::INFINITY,
        )
        .unwrap();
        let e = std::f64::consts::E;
        assert!(
            ((traj.terminal[0] - e) / e).abs() <= 10.0 * tol,
            "terminal {} vs e",
            traj.terminal[0]
        );
        for w in traj.abscissae.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn constant_field_is_exact() {
        let traj = integrate_ivp(
            &mut |_, _: &[f64; 2]| [0.0, 0.0],
            (0.0, 5.0),
            [3.0, -7.0],
            1e-10,
            f64::INFINITY,
        )
        .unwrap();
        assert_eq!(traj.terminal, [3.0, -7.0]);
    }

    #[test]
    fn airy_equation_hits_series_value() {
        // y'' = x y from the Ai initial data reproduces Ai(1).
        let (ai0, _, aip0, _) = airy_pair(0.0).unwrap();
        let traj = integrate_ivp(
            &mut |x, y: &[f64; 2]| [y[1], x * y[0]],
            (0.0, 1.0),
            [ai0, aip0],
            1e-12,
            f64::INFINITY,
        )
        .unwrap();
        let (ai1, _, _, _) = airy_pair(1.0).unwrap();
        assert!((traj.terminal[0] - ai1).abs() < 1e-9, "{} vs {}", traj.terminal[0], ai1);
        assert!((traj.terminal[0] - 0.1352924).abs() < 1e-6);
    }

    #[test]
    fn max_step_is_respected() {
        let mut max_h = 0.0f64;
        let mut last = f64::NAN;
        let opt = OdeOptions {
            rtol: 1e-6,
            max_step: 0.01,
            ..Default::default()
        };
        integrate_observed(
            &mut |_, y: &[f64; 1]| [-y[0]],
            (0.0, 2.0),
            [1.0],
            &opt,
            &mut |x, _: &[f64; 1], _| {
                if last.is_finite() {
                    max_h = max_h.max(x - last);
                }
                last = x;
            },
        )
        .unwrap();
        assert!(max_h <= 0.01 + 1e-12, "max step {} exceeded", max_h);
    }

    #[test]
    fn rescaling_accumulates_log_scale() {
        // y' = y over [0, 300] overflows un-rescaled growth far beyond 1e100.
        let opt = OdeOptions {
            rtol: 1e-10,
            max_step: f64::INFINITY,
            rescale_threshold: Some(1e50),
            ..Default::default()
        };
        let (y, log_scale) = integrate_observed(
            &mut |_, y: &[f64; 1]| [y[0]],
            (0.0, 300.0),
            [1.0],
            &opt,
            &mut |_, _: &[f64; 1], _| {},
        )
        .unwrap();
        let total = y[0].ln() + log_scale;
        assert!((total - 300.0).abs() < 1e-6, "log total {}", total);
    }

    #[test]
    fn traceless_system_conserves_determinant() {
        // Fundamental pair of y'' = (cos x - lambda) y; Wronskian must stay 1.
        let lam = 2.7;
        let mut field = |x: f64, y: &[f64; 4]| {
            let v = x.cos() - lam;
            [y[1], v * y[0], y[3], v * y[2]]
        };
        let tol = 1e-10;
        let traj =
            integrate_ivp(&mut field, (0.0, 30.0), [1.0, 0.0, 0.0, 1.0], tol, 0.2).unwrap();
        for (i, s) in traj.states.iter().enumerate() {
            let det = s[0] * s[3] - s[1] * s[2];
            assert!(
                (det - 1.0).abs() < 100.0 * tol,
                "det drift {} at step {}",
                det - 1.0,
                i
            );
        }
    }
}
