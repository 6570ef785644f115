//! Resonance (critical) points of the perturbed operator: the in-band
//! energies where the oscillatory tail's carrier 2ω beats against the Bloch
//! phase at zero frequency, and the attached data β_cr, φ_cr, ε_cr(λ).

use crate::error::{Error, Result};
use crate::floquet::{
    bloch_product_integral, quasimomentum, quasimomentum_at, BandStructure, BlochData,
    PeriodicBackground,
};
use std::f64::consts::PI;
use std::sync::Arc;

/// Summable extra potential with a declared power envelope |q1(x)| ≤ c1/x^{1+α1}.
#[derive(Clone)]
pub struct SummablePotential {
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub c1: f64,
    pub alpha1: f64,
}

/// Half-line problem data: periodic background plus c sin(2ωx+δ)/x^γ plus an
/// optional summable q1, with the boundary parameter α.
#[derive(Clone)]
pub struct WvNProblem {
    pub bg: PeriodicBackground,
    pub c: f64,
    pub omega: f64,
    pub delta: f64,
    pub gamma: f64,
    pub q1: Option<SummablePotential>,
    pub alpha: f64,
}

impl WvNProblem {
    /// Check the structural conditions. 2aω/π at an even integer is allowed
    /// here and re-examined against actual gap openness when a critical
    /// point is located; an odd integer makes the two critical points of a
    /// band coincide and is always refused.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.5 && self.gamma < 1.0) {
            return Err(Error::Validation(format!(
                "gamma must lie in (0.5, 1), got {}",
                self.gamma
            )));
        }
        if self.omega == 0.0 {
            return Err(Error::Validation("omega must be nonzero".into()));
        }
        if !(0.0..PI).contains(&self.alpha) {
            return Err(Error::Validation(format!(
                "alpha must lie in [0, pi), got {}",
                self.alpha
            )));
        }
        let r = 2.0 * self.bg.period() * self.omega / PI;
        if (r - r.round()).abs() < 1e-9 && (r.round() as i64).rem_euclid(2) == 1 {
            return Err(Error::ResonanceCollision(format!(
                "2a*omega/pi = {} is an odd integer: the two critical points of every band coincide",
                r.round()
            )));
        }
        if let Some(q1) = &self.q1 {
            for i in 1..=64 {
                let x = i as f64;
                let bound = q1.c1 / x.powf(1.0 + q1.alpha1);
                let v = (q1.f)(x).abs();
                if v > bound * (1.0 + 1e-9) {
                    return Err(Error::Validation(format!(
                        "q1 envelope violated at x = {x}: |q1| = {v:.3e} > {bound:.3e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Full potential of the eigenfunction equation at x > 0.
    pub fn potential(&self, x: f64) -> f64 {
        let mut v = self.bg.eval(x)
            + self.c * (2.0 * self.omega * x + self.delta).sin() / x.powf(self.gamma);
        if let Some(q1) = &self.q1 {
            v += (q1.f)(x);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonanceSign {
    Plus,
    Minus,
}

impl std::fmt::Display for ResonanceSign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResonanceSign::Plus => write!(f, "+"),
            ResonanceSign::Minus => write!(f, "-"),
        }
    }
}

/// A located critical point. `beta_cr`/`phi_cr` are filled by
/// [`beta_phi_cr`]; the guards bound the admissible |λ - ν| per side
/// (80% of the distance to the nearest edge or neighboring critical point).
#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub j: usize,
    pub sign: ResonanceSign,
    pub nu: f64,
    pub k_target: f64,
    pub n_cr: i64,
    pub kprime: f64,
    pub beta_cr: f64,
    pub phi_cr: f64,
    pub guard_below: f64,
    pub guard_above: f64,
}

fn frac_part(x: f64) -> f64 {
    x.rem_euclid(1.0)
}

fn k_target_for(a: f64, omega: f64, j: usize, sign: ResonanceSign) -> f64 {
    let frac = frac_part(a * omega / PI);
    match sign {
        ResonanceSign::Plus => PI * (j as f64 + 1.0 - frac),
        ResonanceSign::Minus => PI * (j as f64 + frac),
    }
}

fn n_cr_for(a: f64, omega: f64, j: usize, sign: ResonanceSign) -> i64 {
    let fl = (a * omega / PI).floor() as i64;
    match sign {
        ResonanceSign::Plus => -(j as i64 + 1 + fl),
        ResonanceSign::Minus => fl - j as i64,
    }
}

/// Solve k(ν) = k_target inside band j by bisection on the monotone branch.
fn solve_k_equals(
    bg: &PeriodicBackground,
    bs: &BandStructure,
    j: usize,
    k_target: f64,
) -> Result<f64> {
    let band = bs.bands[j];
    let width = band.hi - band.lo;
    let tol = 1e-11 * width;
    let mut lo = band.lo + 1e-12 * width;
    let mut hi = band.hi - 1e-12 * width;
    let k_of = |lam: f64| -> Result<f64> { Ok(quasimomentum(bg, bs, lam)?.0) };
    let mut f_lo = k_of(lo)? - k_target;
    let f_hi = k_of(hi)? - k_target;
    if f_lo * f_hi > 0.0 {
        return Err(Error::Bracketing(format!(
            "k target {k_target:.12} not bracketed in band {j}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = k_of(mid)? - k_target;
        if fm == 0.0 {
            return Ok(mid);
        }
        if f_lo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Locate ν_{j±}. For 2aω/π at an even integer the target quasimomentum
/// lands on a band-edge value; that is allowed only when the corresponding
/// gap is closed (touching bands), in which case ν is the touching energy.
pub fn locate_critical(
    problem: &WvNProblem,
    bs: &BandStructure,
    j: usize,
    sign: ResonanceSign,
) -> Result<CriticalPoint> {
    problem.validate()?;
    if j >= bs.bands.len() {
        return Err(Error::Validation(format!(
            "band {j} not present in the computed band structure"
        )));
    }
    let a = problem.bg.period();
    let r = 2.0 * a * problem.omega / PI;
    let k_target = k_target_for(a, problem.omega, j, sign);
    let n_cr = n_cr_for(a, problem.omega, j, sign);

    let integer_resonance = (r - r.round()).abs() < 1e-9;
    let (nu, kprime) = if integer_resonance {
        // Even integer: k_target is a multiple of π, i.e. a band-edge value.
        let edge_is_upper = matches!(sign, ResonanceSign::Plus);
        let gap_closed = if edge_is_upper {
            bs.gap_above_is_closed(j)
        } else {
            j > 0 && bs.gap_above_is_closed(j - 1)
        };
        if !gap_closed {
            return Err(Error::ResonanceCollision(format!(
                "2a*omega/pi = {} puts nu_({j}{sign}) on an open band edge; \
                 critical points must not coincide with the endpoints",
                r.round()
            )));
        }
        let nu = if edge_is_upper {
            0.5 * (bs.bands[j].hi + bs.bands[j + 1].lo)
        } else {
            0.5 * (bs.bands[j - 1].hi + bs.bands[j].lo)
        };
        let (_, kp) = quasimomentum_at(&problem.bg, bs, nu)?;
        (nu, kp)
    } else {
        let nu = solve_k_equals(&problem.bg, bs, j, k_target)?;
        let (_, kp) = quasimomentum(&problem.bg, bs, nu)?;
        (nu, kp)
    };

    // Guard radii: 80% of the distance to the nearest edge or to the other
    // critical point on each side.
    let other_sign = match sign {
        ResonanceSign::Plus => ResonanceSign::Minus,
        ResonanceSign::Minus => ResonanceSign::Plus,
    };
    let (mut below, mut above) = if integer_resonance {
        match sign {
            ResonanceSign::Plus => (nu - bs.bands[j].lo, bs.bands[j + 1].hi - nu),
            ResonanceSign::Minus => (nu - bs.bands[j - 1].lo, bs.bands[j].hi - nu),
        }
    } else {
        (nu - bs.bands[j].lo, bs.bands[j].hi - nu)
    };
    if !integer_resonance {
        if let Ok(nu_other) = solve_k_equals(&problem.bg, bs, j, k_target_for(a, problem.omega, j, other_sign)) {
            if nu_other < nu {
                below = below.min(nu - nu_other);
            } else {
                above = above.min(nu_other - nu);
            }
        }
    }

    Ok(CriticalPoint {
        j,
        sign,
        nu,
        k_target,
        n_cr,
        kprime,
        beta_cr: 0.0,
        phi_cr: 0.0,
        guard_below: 0.8 * below,
        guard_above: 0.8 * above,
    })
}

fn reduce_angle(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// β_cr = |c| |∫₀^a ψ±² e^{2iωt} dt| / (2a|W|) and φ_cr = ±(δ + arg ∫...),
/// with the ψ branch matching the sign of the critical point. Fills the
/// located point in place and returns (β, φ).
pub fn beta_phi_cr(
    problem: &WvNProblem,
    crit: &mut CriticalPoint,
    bloch_at_nu: &BlochData,
) -> Result<(f64, f64)> {
    let a = problem.bg.period();
    let seed = match crit.sign {
        ResonanceSign::Plus => bloch_at_nu.psi_plus_seed,
        ResonanceSign::Minus => bloch_at_nu.psi_minus_seed(),
    };
    let j = bloch_product_integral(&problem.bg, crit.nu, seed, 2.0 * problem.omega)?;
    let seed_scale = seed[0].norm_sqr() + seed[1].norm_sqr();
    if j.norm() < 1e-12 * a * seed_scale {
        return Err(Error::DegenerateResonance { magnitude: j.norm() });
    }
    let beta = problem.c.abs() * j.norm() / (2.0 * a * bloch_at_nu.wronskian_abs());
    let phi = match crit.sign {
        ResonanceSign::Plus => reduce_angle(problem.delta + j.arg()),
        ResonanceSign::Minus => reduce_angle(-(problem.delta + j.arg())),
    };
    crit.beta_cr = beta;
    crit.phi_cr = phi;
    Ok((beta, phi))
}

/// ε_cr(λ) = 2 (k(λ) - k(ν_cr)) / a: the slow beat rate of the resonant
/// term at energy λ near the critical point.
pub fn eps_cr(
    problem: &WvNProblem,
    bs: &BandStructure,
    crit: &CriticalPoint,
    lambda: f64,
) -> Result<f64> {
    let (k, _) = quasimomentum_at(&problem.bg, bs, lambda)?;
    Ok(2.0 * (k - crit.k_target) / problem.bg.period())
}

/// Inverse of [`eps_cr`] by bisection on the monotone quasimomentum branch.
pub fn eps_cr_inverse(
    problem: &WvNProblem,
    bs: &BandStructure,
    crit: &CriticalPoint,
    eps0: f64,
) -> Result<f64> {
    let a = problem.bg.period();
    let k_target = crit.k_target + 0.5 * a * eps0;
    let b = (k_target / PI).floor();
    if b < 0.0 || b as usize >= bs.bands.len() {
        return Err(Error::GapOrEdge { lambda: f64::NAN });
    }
    solve_k_equals(&problem.bg, bs, b as usize, k_target)
}
